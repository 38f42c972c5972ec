"""
schemas/validation.py – Shared helper that turns pydantic errors into ValueError.
"""

from __future__ import annotations

from typing import Any, Dict, Type, TypeVar

from pydantic import BaseModel, ValidationError

ModelT = TypeVar("ModelT", bound=BaseModel)


def format_validation_error(title: str, exc: ValidationError) -> str:
    """Return *title* followed by one ``  - field: message`` line per error."""
    messages = []
    for err in exc.errors():
        field = ".".join(str(loc) for loc in err["loc"]) or "<root>"
        messages.append(f"  - {field}: {err['msg']}")
    return f"{title} validation failed:\n" + "\n".join(messages)


def validate_model(model: Type[ModelT], data: Dict[str, Any]) -> ModelT:
    """Validate *data* against *model*, raising ``ValueError`` on failure.

    Raises:
        ValueError: With a human-readable message listing every missing or
            invalid field.
    """
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ValueError(format_validation_error(model.__name__, exc)) from exc
