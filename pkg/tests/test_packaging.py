"""Basic packaging metadata and import tests."""

import importlib
import tomllib
from pathlib import Path

PYPROJECT = Path(__file__).resolve().parent.parent / "pyproject.toml"


def _project():
    return tomllib.loads(PYPROJECT.read_text(encoding="utf-8"))["project"]


def test_dpinsights_importable():
    """dpinsights module (root dpinsights.py) must be importable."""
    mod = importlib.import_module("dpinsights")
    assert mod is not None


def test_dpinsights_has_main():
    """dpinsights must expose a callable main() for the console script."""
    mod = importlib.import_module("dpinsights")
    assert callable(getattr(mod, "main", None))


def test_console_script_declared():
    assert _project()["scripts"]["dpinsights"] == "dpinsights:main"


def test_runtime_dependencies_declared():
    names = {dep.split(">")[0].split("=")[0].strip().lower() for dep in _project()["dependencies"]}
    assert {"pydantic", "numpy", "scipy", "pandas", "colorama", "python-dotenv"} <= names


def test_dev_extra_declared():
    dev = _project()["optional-dependencies"]["dev"]
    assert any(dep.startswith("pytest") for dep in dev)


def test_version_matches_package():
    import labor_insights

    assert _project()["version"] == labor_insights.__version__
