"""Exact integer arithmetic in R = Z[X]/(X^n + 1) and R^k.

A polynomial is a 1-D ``int64`` array of length ``n`` holding the coefficient
of ``X^i`` at index ``i``. An element of ``R^k`` is a ``(k, n)`` array whose
rows are the component polynomials. No modulus is ever applied.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

# Products are computed in int64; refuse anything that could wrap.
_INT64_SAFE = 2**62


@dataclass(frozen=True)
class RingParams:
    n: int
    k: int = 1

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ParameterError(f"ring parameters need n >= 1 and k >= 1, got n={self.n}, k={self.k}")

    @property
    def dim(self) -> int:
        return self.n * self.k


def poly(coeffs, n: int | None = None) -> np.ndarray:
    """Coerce ``coeffs`` to an int64 coefficient array, zero-padded to ``n``."""
    a = np.asarray(coeffs)
    if a.ndim != 1:
        raise ParameterError(f"polynomial must be 1-D, got shape {a.shape}")
    if a.size and not np.all(np.equal(np.mod(a, 1), 0)):
        raise ParameterError("polynomial coefficients must be integers")
    a = a.astype(np.int64)
    if n is not None:
        if a.size > n:
            raise ParameterError(f"{a.size} coefficients do not fit in degree bound n={n}")
        a = np.concatenate([a, np.zeros(n - a.size, dtype=np.int64)])
    return a


def polyvec(polys, n: int | None = None) -> np.ndarray:
    rows = [poly(p, n) for p in polys]
    if not rows:
        raise ParameterError("a module element needs k >= 1 components")
    if len({r.size for r in rows}) != 1:
        raise ParameterError("all components of a module element must share n")
    return np.stack(rows)


def monomial(r: int, n: int) -> np.ndarray:
    m = np.zeros(n, dtype=np.int64)
    m[r] = 1
    return m


def _max_abs(a: np.ndarray) -> int:
    return int(np.max(np.abs(a))) if a.size else 0


def _check_product_range(f: np.ndarray, g: np.ndarray) -> None:
    bound = f.shape[-1] * _max_abs(f) * _max_abs(g)
    if bound >= _INT64_SAFE:
        raise OverflowError(
            f"negacyclic product may exceed 64-bit range (bound {bound}); reduce coefficient sizes")


def neg_mul(f, g) -> np.ndarray:
    """Return ``f * g mod X^n + 1`` by schoolbook convolution."""
    f = np.asarray(f, dtype=np.int64)
    g = np.asarray(g, dtype=np.int64)
    if f.ndim != 1 or f.shape != g.shape:
        raise ParameterError(f"operands must share n, got shapes {f.shape} and {g.shape}")
    _check_product_range(f, g)
    n = f.size
    full = np.convolve(f, g)
    out = full[:n].copy()
    # X^n = -1 folds the high half back with a sign flip
    out[: n - 1] -= full[n:]
    return out


def scalar_mul_vec(c, v) -> np.ndarray:
    """Multiply every component of ``v`` by the ring element ``c``."""
    v = np.asarray(v, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    if v.ndim != 2 or c.ndim != 1 or v.shape[1] != c.size:
        raise ParameterError(f"shape mismatch: c {c.shape}, v {v.shape}")
    return np.stack([neg_mul(c, row) for row in v])


def add_vec(u, v) -> np.ndarray:
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if u.shape != v.shape:
        raise ParameterError(f"shape mismatch: {u.shape} vs {v.shape}")
    if _max_abs(u) + _max_abs(v) >= _INT64_SAFE:
        raise OverflowError("coefficient sum exceeds 64-bit range")
    return u + v


def norm_1(v) -> int:
    return int(np.sum(np.abs(np.asarray(v, dtype=np.int64))))


def norm_2(v) -> float:
    a = np.asarray(v)
    # Python ints keep the sum of squares exact before the single sqrt
    return math.sqrt(sum(int(x) * int(x) for x in a.ravel()))


def norm_inf(v) -> int:
    return _max_abs(np.asarray(v, dtype=np.int64))


def weight(v) -> int:
    return int(np.count_nonzero(np.asarray(v)))


def coeff_flatten(v) -> np.ndarray:
    """Concatenate component coefficient vectors, component 0 first."""
    v = np.asarray(v, dtype=np.int64)
    if v.ndim == 1:
        return v.copy()
    return v.reshape(-1).copy()


def unflatten(flat, n: int) -> np.ndarray:
    flat = np.asarray(flat, dtype=np.int64)
    if n < 1 or flat.size % n:
        raise ParameterError(f"length {flat.size} is not a multiple of n={n}")
    return flat.reshape(-1, n).copy()


def rotate(f, r: int) -> np.ndarray:
    """Return ``X^r * f mod X^n + 1`` for ``0 <= r < n``."""
    f = np.asarray(f, dtype=np.int64)
    n = f.size
    if not 0 <= r < n:
        raise ParameterError(f"rotation amount {r} outside [0, {n - 1}]")
    if r == 0:
        return f.copy()
    return np.concatenate([-f[n - r:], f[: n - r]])


def round_half_down(a: float) -> int:
    """Nearest integer, with exact halves going towards minus infinity."""
    a = float(a)
    if not math.isfinite(a):
        raise ParameterError(f"cannot round non-finite value {a}")
    if abs(a) >= 2.0**52:
        # already integral; a - 0.5 would round to even here
        return int(a)
    return math.ceil(a - 0.5)


def round_vec(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ParameterError("cannot round non-finite values")
    return np.where(np.abs(a) >= 2.0**52, a, np.ceil(a - 0.5)).astype(np.int64)
