"""
labor_insights/noise.py – Seedable Laplace and Gumbel samplers.

This module is the only source of randomness in the privacy core.

Streams
-------
A :class:`RandomStream` is a NumPy ``Philox`` counter-based generator keyed
with ``(seed << 64) | stream_id``.  Uniform draws are built from the raw
64-bit outputs as ``((raw >> 11) + 0.5) * 2**-53``, which always lies strictly
inside (0, 1), so the inverse transforms below never see log(0).

Stream ids
----------
``derive_stream_id`` hashes the UTF-8 string

    "{YYYY-MM}|{country}|{region}|{industry}|{metric}|{purpose}"

(absent region/industry are empty strings) with BLAKE2b, digest size 8, and
reads the digest as a big-endian unsigned 64-bit integer.

Floating-point attacks on the noise (e.g. snapping) are not mitigated.
"""

from __future__ import annotations

import hashlib
import math
from typing import Optional, Union

import numpy as np

from schemas import Metric, SliceKey

_U53 = 2.0 ** -53
_UINT64_MAX = 2**64 - 1

Sample = Union[float, np.ndarray]


class RandomStream:
    """Reproducible uniform stream identified by ``(seed, stream_id)``."""

    __slots__ = ("seed", "stream_id", "_bitgen")

    def __init__(self, seed: int, stream_id: int = 0) -> None:
        for name, value in (("seed", seed), ("stream_id", stream_id)):
            if not 0 <= int(value) <= _UINT64_MAX:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._bitgen = np.random.Philox(key=(self.seed << 64) | self.stream_id)

    def uniform(self, size: Optional[int] = None) -> Sample:
        """Draw from the open interval (0, 1)."""
        if size is None:
            raw = int(self._bitgen.random_raw())
            return ((raw >> 11) + 0.5) * _U53
        raw = self._bitgen.random_raw(size)
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _U53

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id})"


def _check_scale(scale: float) -> float:
    scale = float(scale)
    if not math.isfinite(scale) or scale <= 0:
        raise ValueError(f"noise scale must be a positive finite number, got {scale}")
    return scale


# ---------------------------------------------------------------------------
# Quantiles and CDFs
# ---------------------------------------------------------------------------


def laplace_quantile(u: Sample, scale_b: float) -> Sample:
    b = _check_scale(scale_b)
    centred = np.asarray(u, dtype=np.float64) - 0.5
    x = -b * np.sign(centred) * np.log1p(-2.0 * np.abs(centred))
    return float(x) if np.ndim(x) == 0 else x


def gumbel_quantile(u: Sample, scale_beta: float) -> Sample:
    beta = _check_scale(scale_beta)
    x = -beta * np.log(-np.log(np.asarray(u, dtype=np.float64)))
    return float(x) if np.ndim(x) == 0 else x


def laplace_cdf(x: Sample, scale_b: float) -> Sample:
    b = _check_scale(scale_b)
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x < 0, 0.5 * np.exp(np.minimum(x, 0) / b), 1.0 - 0.5 * np.exp(-np.maximum(x, 0) / b))
    return float(out) if np.ndim(out) == 0 else out


def gumbel_cdf(x: Sample, scale_beta: float) -> Sample:
    beta = _check_scale(scale_beta)
    out = np.exp(-np.exp(-np.asarray(x, dtype=np.float64) / beta))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def laplace_sample(stream: RandomStream, scale_b: float, size: Optional[int] = None) -> Sample:
    """Zero-mean Laplace(b) draw(s) by inverse transform."""
    b = _check_scale(scale_b)
    return laplace_quantile(stream.uniform(size), b)


def gumbel_sample(stream: RandomStream, scale_beta: float, size: Optional[int] = None) -> Sample:
    """Location-0 Gumbel(β) draw(s): ``-β·ln(-ln u)``."""
    beta = _check_scale(scale_beta)
    return gumbel_quantile(stream.uniform(size), beta)


# ---------------------------------------------------------------------------
# Stream derivation
# ---------------------------------------------------------------------------


def derive_stream_id(slice_key: SliceKey, metric: Union[Metric, str], purpose: str) -> int:
    metric_name = metric.value if isinstance(metric, Metric) else str(metric)
    text = "|".join(
        [
            slice_key.month,
            slice_key.country,
            slice_key.region or "",
            slice_key.industry or "",
            metric_name,
            purpose,
        ]
    )
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def stream_for(
    seed: int, slice_key: SliceKey, metric: Union[Metric, str], purpose: str
) -> RandomStream:
    """Return the stream for one (slice, metric, purpose) under root *seed*."""
    return RandomStream(seed, derive_stream_id(slice_key, metric, purpose))
