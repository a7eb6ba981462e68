"""Value obfuscation by rounding payments up into coarser buckets.

Strategies:
  identity          keep the exact value
  fixed(k)          round up to the next multiple of k
  scaled_cheap      round up to two significant digits (<= 10% overhead)
  scaled_expensive  round up to one significant digit (<= 100% overhead)

All arithmetic is integer; the decimal magnitude is found by comparison
against a power-of-ten table instead of float log10, which misclassifies
values near decade boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_POW10 = 10 ** np.arange(19, dtype=np.int64)  # int64 holds up to 10^18


def _as_array(values) -> tuple[np.ndarray, bool]:
    arr = np.asarray(values, dtype=np.int64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if arr.size and int(arr.min()) < 1:
        raise ValueError("values must be >= 1")
    return arr, scalar


def _result(arr: np.ndarray, scalar: bool):
    return int(arr[0]) if scalar else arr


def floor_log10(values):
    """Exact floor(log10(v)) for integer v >= 1."""
    arr, scalar = _as_array(values)
    return _result(np.searchsorted(_POW10, arr, side="right") - 1, scalar)


def _ceil_to_multiple(arr: np.ndarray, step: np.ndarray | int) -> np.ndarray:
    return -(-arr // step) * step


def bucket_fixed(values, k: int):
    """Round up to the next multiple of k (k itself for exact multiples)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    arr, scalar = _as_array(values)
    return _result(_ceil_to_multiple(arr, k), scalar)


def bucket_cheap(values):
    """Round up to two significant digits; identity below 100."""
    arr, scalar = _as_array(values)
    mag = np.searchsorted(_POW10, arr, side="right") - 1
    step = _POW10[np.maximum(mag - 1, 0)]
    out = np.where(mag <= 1, arr, _ceil_to_multiple(arr, step))
    return _result(out, scalar)


def bucket_expensive(values):
    """Round up to one significant digit; identity below 10."""
    arr, scalar = _as_array(values)
    mag = np.searchsorted(_POW10, arr, side="right") - 1
    step = _POW10[mag]
    return _result(_ceil_to_multiple(arr, step), scalar)


_KINDS = ("identity", "fixed", "scaled_cheap", "scaled_expensive")


@dataclass(frozen=True)
class BucketStrategy:
    """A named obfuscation strategy applicable to scalars or arrays."""

    kind: str
    k: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown bucket kind {self.kind!r}")
        if self.kind == "fixed":
            if self.k is None or self.k < 1:
                raise ValueError("fixed strategy needs k >= 1")
        elif self.k is not None:
            raise ValueError(f"{self.kind} takes no k")

    def apply(self, values):
        if self.kind == "identity":
            arr, scalar = _as_array(values)
            return _result(arr, scalar)
        if self.kind == "fixed":
            return bucket_fixed(values, self.k)
        if self.kind == "scaled_cheap":
            return bucket_cheap(values)
        return bucket_expensive(values)

    @property
    def token(self) -> str:
        if self.kind == "identity":
            return "none"
        if self.kind == "fixed":
            return f"fixed:{self.k}"
        if self.kind == "scaled_cheap":
            return "scaled-cheap"
        return "scaled-exp"

    def __str__(self) -> str:
        return self.token


IDENTITY = BucketStrategy("identity")
SCALED_CHEAP = BucketStrategy("scaled_cheap")
SCALED_EXPENSIVE = BucketStrategy("scaled_expensive")


def fixed(k: int) -> BucketStrategy:
    return BucketStrategy("fixed", k)


def parse_strategy(token: str) -> BucketStrategy:
    """Parse a CLI token: none | fixed:K | scaled-cheap | scaled-exp."""
    tok = token.strip().lower()
    if tok == "none":
        return IDENTITY
    if tok == "scaled-cheap":
        return SCALED_CHEAP
    if tok == "scaled-exp":
        return SCALED_EXPENSIVE
    if tok.startswith("fixed:"):
        try:
            k = int(tok.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad fixed bucket size in {token!r}") from None
        return fixed(k)
    raise ValueError(f"unknown bucket strategy {token!r}")
