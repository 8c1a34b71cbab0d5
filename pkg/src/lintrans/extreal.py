"""Extended reals R ∪ {+inf, -inf} with min-plus conventions.

Values are IEEE doubles (``float64`` arrays) or, in exact mode, object arrays
holding :class:`fractions.Fraction` entries with ``float('inf')`` for the
infinities.  Every helper here accepts both representations.

The one forbidden operation is ``(+inf) + (-inf)``; it raises
:class:`~lintrans.errors.IndeterminateSum` instead of producing NaN.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import DimensionMismatch, IndeterminateSum, InvalidInput

INF = float("inf")
NINF = float("-inf")


def _parse_token(v):
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity", "+infinity"):
            return INF
        if s in ("-inf", "-infinity"):
            return NINF
        raise InvalidInput(f"unrecognised token {v!r}")
    return v


def is_exact(a) -> bool:
    return isinstance(a, np.ndarray) and a.dtype == object


def is_pinf(a) -> np.ndarray:
    return np.asarray(np.asarray(a) == INF, dtype=bool)


def is_ninf(a) -> np.ndarray:
    return np.asarray(np.asarray(a) == NINF, dtype=bool)


def is_finite(a) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype == object:
        return ~(is_pinf(a) | is_ninf(a))
    return np.isfinite(a)


def to_exact(a) -> np.ndarray:
    """Convert to an object array of Fractions (infinities stay floats).

    Doubles convert without rounding, so exact mode reproduces the float
    input bit for bit before any arithmetic happens.
    """
    a = np.asarray(a, dtype=object) if not is_exact(a) else a
    out = np.empty(a.shape, dtype=object)
    for idx, v in np.ndenumerate(a):
        v = _parse_token(v)
        if isinstance(v, Fraction):
            out[idx] = v
        elif v == INF or v == NINF:
            out[idx] = float(v)
        elif isinstance(v, (int, np.integer)):
            out[idx] = Fraction(int(v))
        else:
            fv = float(v)
            if fv != fv:
                raise InvalidInput("NaN is not an extended real")
            out[idx] = Fraction(fv)
    return out


def to_float(a) -> np.ndarray:
    if is_exact(a):
        return np.array([float(v) for v in a.ravel()], dtype=float).reshape(a.shape)
    return np.asarray(a, dtype=float)


def _coerce(values, exact: bool) -> np.ndarray:
    arr = np.asarray(values, dtype=object)
    parsed = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        parsed[idx] = _parse_token(v)
    if exact:
        return to_exact(parsed)
    out = parsed.astype(float)
    if np.isnan(out).any():
        raise InvalidInput("NaN is not an extended real")
    return out


def ext_add(a, b):
    """Extended-real addition; ``(+inf) + (-inf)`` raises IndeterminateSum."""
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        if (a == INF and b == NINF) or (a == NINF and b == INF):
            raise IndeterminateSum("(+inf) + (-inf) is undefined")
        return a + b
    a_ = np.asarray(a)
    b_ = np.asarray(b)
    bad = (is_pinf(a_) & is_ninf(b_)) | (is_ninf(a_) & is_pinf(b_))
    if bad.any():
        raise IndeterminateSum("(+inf) + (-inf) is undefined")
    return a_ + b_


def ext_min(values: Iterable) -> float:
    """Minimum with the convention min(∅) = +inf."""
    return min(values, default=INF)


def ext_max(values: Iterable) -> float:
    """Maximum with the convention max(∅) = -inf."""
    return max(values, default=NINF)


def as_potential(values, n: int | None = None, *, exact: bool = False,
                 bounded_above: bool = False) -> np.ndarray:
    """Validate an extended-real vector.

    A potential must be proper (some entry finite).  ``bounded_above``
    additionally forbids +inf, as for upper semi-continuous functions.
    """
    g = _coerce(values, exact)
    if g.ndim != 1:
        raise InvalidInput("a potential is a one-dimensional vector")
    if n is not None and g.shape[0] != n:
        raise DimensionMismatch(f"potential has length {g.shape[0]}, expected {n}")
    if not is_finite(g).any():
        raise InvalidInput("potential is not proper: no finite entry")
    if bounded_above and is_pinf(g).any():
        raise InvalidInput("potential takes the value +inf")
    return g


def as_cost(values, *, exact: bool = False) -> np.ndarray:
    """Validate a square cost matrix with entries in R ∪ {+inf}."""
    A = _coerce(values, exact)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"cost matrix must be square, got shape {A.shape}")
    if is_ninf(A).any():
        raise InvalidInput("cost matrices may not contain -inf")
    return A


def is_standard(A) -> bool:
    """Every row has a finite entry, i.e. T(0) is finite."""
    return bool(is_finite(A).any(axis=1).all())


def sup_norm(a) -> float:
    a = to_float(a)
    return float(np.max(np.abs(a))) if a.size else 0.0
