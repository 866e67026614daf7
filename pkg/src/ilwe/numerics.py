"""Dense symmetric kernels: SPD solve, symmetric eigendecomposition, and
least squares through the normal equations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, ParameterError, SingularOrIndefinite

SYM_TOL = 1e-9
TIE_TOL = 1e-10
MAX_SWEEPS = 100


@dataclass
class SymmetricEigen:
    values: np.ndarray   # descending
    vectors: np.ndarray  # column j pairs with values[j]


def _check_symmetric(B) -> np.ndarray:
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise ParameterError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(B)))) if B.size else 1.0
    if B.size and np.max(np.abs(B - B.T)) > SYM_TOL * scale:
        raise ParameterError("matrix is not symmetric")
    return B


def solve_spd(B, y) -> np.ndarray:
    """Solve ``B x = y`` for symmetric positive definite ``B`` by Cholesky."""
    B = _check_symmetric(B)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size != B.shape[0]:
        raise ParameterError(f"right-hand side has {y.size} entries, matrix is {B.shape}")
    if B.shape[0] == 0:
        raise SingularOrIndefinite("empty system")
    try:
        factor = scipy.linalg.cho_factor(B, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularOrIndefinite(f"matrix is not positive definite ({exc})") from None
    diag = np.diag(factor[0])
    # a pivot this small relative to the largest means numerically singular
    if np.min(diag) <= np.max(diag) * 1e-7:
        raise SingularOrIndefinite("Cholesky pivot underflow: matrix is numerically singular")
    return scipy.linalg.cho_solve(factor, y, check_finite=False)


def _canonical(values: np.ndarray, vectors: np.ndarray, scale: float) -> SymmetricEigen:
    """Sort descending with index-stable ties and fix eigenvector signs."""
    order = list(np.argsort(-values, kind="stable"))
    tol = TIE_TOL * scale
    # equal eigenvalues: order by the coordinate each vector is aligned with,
    # so a diagonal matrix keeps its column order whatever the solver returned
    lead = np.argmax(np.abs(vectors), axis=0)
    out, i = [], 0
    while i < len(order):
        j = i + 1
        while j < len(order) and values[order[i]] - values[order[j]] <= tol:
            j += 1
        out.extend(sorted(order[i:j], key=lambda c: (lead[c], c)))
        i = j
    values = values[out]
    vectors = vectors[:, out].copy()
    for col in range(vectors.shape[1]):
        v = vectors[:, col]
        if v[np.argmax(np.abs(v))] < 0:
            vectors[:, col] = -v
    return SymmetricEigen(values, vectors)


def jacobi_eig(B, max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigenvalue iteration; returns unsorted ``(values, vectors)``."""
    A = np.array(B, dtype=np.float64)
    d = A.shape[0]
    V = np.eye(d)
    total = np.linalg.norm(A)
    if d < 2 or total == 0.0:
        return np.diag(A).copy(), V
    eps = np.finfo(float).eps
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= eps * total:
            return np.diag(A).copy(), V
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) <= eps * eps * total:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def sym_eig(B, method: str = "lapack") -> SymmetricEigen:
    """Eigendecomposition of a symmetric matrix, values sorted descending.

    Equal eigenvalues (within ``1e-10 * max|B|``) are ordered by the index of
    each eigenvector's largest-magnitude entry, and each eigenvector is signed so its largest-magnitude entry is
    nonnegative. ``method`` is ``"lapack"`` (divide and conquer) or
    ``"jacobi"``.
    """
    B = _check_symmetric(B)
    scale = max(1.0, float(np.max(np.abs(B)))) if B.size else 1.0
    if method == "lapack":
        try:
            values, vectors = np.linalg.eigh(B)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"eigensolver failed: {exc}") from None
    elif method == "jacobi":
        values, vectors = jacobi_eig(B)
    else:
        raise ParameterError(f"unknown eigen method {method!r}")
    return _canonical(np.asarray(values), np.asarray(vectors), scale)


def lstsq_via_gram(A, b) -> np.ndarray:
    """Least-squares solution of ``A x ~ b`` through ``(A^T A) x = A^T b``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if A.shape[0] != b.size:
        raise ParameterError(f"A has {A.shape[0]} rows, b has {b.size}")
    return solve_spd(A.T @ A, A.T @ b)
