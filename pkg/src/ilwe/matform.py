"""Matrix form of multiplication in R and R^k, and ILWE instance assembly.

Multiplication by ``f`` in R is the n x n matrix whose column ``j`` is
``coeff(X^j f)``; for R^k the same block is repeated along the diagonal.
Stacking one such block per signature sample gives the design matrix of
an ILWE instance whose right-hand side is the stacked ``coeff(z)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass
class IlweInstance:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        self.b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        if self.A.shape[0] != self.b.size:
            raise ParameterError(f"A has {self.A.shape[0]} rows but b has {self.b.size} entries")

    @property
    def shape(self):
        return self.A.shape


def _negacyclic_index(n: int):
    rows = np.arange(n)[:, None]
    cols = np.arange(n)[None, :]
    idx = (rows - cols) % n
    sign = np.where(rows >= cols, 1, -1).astype(np.int64)
    return idx, sign


def negacyclic_matrix(f) -> np.ndarray:
    """Integer n x n matrix of ``g -> f*g mod X^n+1``."""
    f = np.asarray(f, dtype=np.int64)
    if f.ndim != 1 or f.size < 1:
        raise ParameterError(f"expected a nonempty coefficient vector, got shape {f.shape}")
    idx, sign = _negacyclic_index(f.size)
    return f[idx] * sign


def block_design(c, z, sign: int = 1) -> np.ndarray:
    """``(blockdiag_k(F_c) | sign * coeff(z))`` of shape ``(nk, nk+1)``."""
    c = np.asarray(c, dtype=np.int64)
    z = np.atleast_2d(np.asarray(z, dtype=np.int64))
    if sign not in (1, -1):
        raise ParameterError("sign must be +1 or -1")
    k, n = z.shape
    if c.shape != (n,):
        raise ParameterError(f"challenge of length {c.size} does not match n={n}")
    F = negacyclic_matrix(c)
    D = np.zeros((n * k, n * k + 1), dtype=np.int64)
    for j in range(k):
        D[j * n:(j + 1) * n, j * n:(j + 1) * n] = F
    D[:, -1] = sign * z.reshape(-1)
    return D


def assemble_instance(samples) -> IlweInstance:
    """Stack the design blocks of ``(z, c)`` pairs into ``(A, b)``."""
    samples = list(samples)
    if not samples:
        raise ParameterError("need at least one sample")
    blocks = []
    shape = None
    for z, c in samples:
        z = np.atleast_2d(np.asarray(z, dtype=np.int64))
        if shape is None:
            shape = z.shape
        elif z.shape != shape:
            raise ParameterError(f"sample shape {z.shape} differs from {shape}")
        blocks.append(block_design(c, z))
    M = np.vstack(blocks)
    return IlweInstance(M[:, :-1], M[:, -1])


def submatrix(M, rows, cols) -> np.ndarray:
    """Copy of ``M[i:j, k:l]`` with 1-indexed inclusive bounds.

    ``rows`` and ``cols`` are ``(first, last)`` pairs or a single index.
    """
    M = np.atleast_2d(np.asarray(M))

    def _span(r, size):
        lo, hi = (r, r) if np.isscalar(r) else r
        if not 1 <= lo <= hi <= size:
            raise ParameterError(f"index range {lo}:{hi} outside 1:{size}")
        return slice(lo - 1, hi)

    return M[_span(rows, M.shape[0]), _span(cols, M.shape[1])].copy()


# -- instance files -----------------------------------------------------------

def _as_exact_ints(a: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(a)) or np.any(a != np.round(a)) or np.any(np.abs(a) >= 2.0**53):
        raise ParameterError(f"{what} must hold integers below 2**53 to be written exactly")
    return a.astype(np.int64)


def write_instance(path, inst: IlweInstance) -> None:
    A = _as_exact_ints(inst.A, "A")
    b = _as_exact_ints(inst.b, "b")
    with open(path, "w") as fh:
        fh.write(f"ilwe {A.shape[0]} {A.shape[1]}\n")
        for row in A:
            fh.write(" ".join(map(str, row.tolist())) + "\n")
        fh.write("b\n")
        for x in b.tolist():
            fh.write(f"{x}\n")


def read_instance(path) -> IlweInstance:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        tag, rows, cols = lines[0].split()
        rows, cols = int(rows), int(cols)
    except (IndexError, ValueError):
        raise ParameterError(f"{path}: expected header 'ilwe <rows> <cols>'") from None
    if tag != "ilwe" or rows < 1 or cols < 1:
        raise ParameterError(f"{path}: expected header 'ilwe <rows> <cols>'")
    if len(lines) != 1 + rows + 1 + rows or lines[1 + rows] != "b":
        raise ParameterError(f"{path}: expected {rows} matrix rows, a 'b' line and {rows} entries")
    try:
        A = np.array([[int(x) for x in ln.split()] for ln in lines[1:1 + rows]], dtype=object)
        b = np.array([int(x) for x in lines[2 + rows:]], dtype=object)
    except ValueError as exc:
        raise ParameterError(f"{path}: non-integer entry ({exc})") from None
    if A.ndim != 2 or A.shape != (rows, cols):
        raise ParameterError(f"{path}: matrix rows must each have {cols} entries")
    return IlweInstance(A.astype(np.float64), b.astype(np.float64))
