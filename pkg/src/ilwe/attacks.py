"""Key-recovery attacks on ILWE instances.

``lsm_direct`` and ``svd_direct`` work on an explicit ``(A, b)``. The
streaming variants never build ``A``: they read everything they need from
a :class:`GramAccumulator`, the running sum of ``D^T D`` over per-sample
design blocks ``D = (C | Z)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLastComponent, ParameterError, SingularOrIndefinite
from .matform import IlweInstance, negacyclic_matrix
from .numerics import solve_spd, sym_eig
from .ring import norm_1, norm_inf, round_vec, weight

DEGENERATE_TOL = 1e-10
# int64 headroom kept free in the accumulator
_ACC_LIMIT = 2**62


@dataclass
class RecoveredSecret:
    s_tilde: np.ndarray
    s_hat: np.ndarray


@dataclass
class AttackReport:
    s_tilde: np.ndarray
    l1_distance: int
    linf_distance: int
    weight_diff: int
    m_used: int | None
    discarded: bool


def _recovered(s_hat) -> RecoveredSecret:
    s_hat = np.asarray(s_hat, dtype=np.float64)
    return RecoveredSecret(round_vec(s_hat), s_hat)


def lsm_direct(inst: IlweInstance) -> RecoveredSecret:
    """Round the least-squares estimator ``(A^T A)^{-1} A^T b``."""
    A, b = inst.A, inst.b
    return _recovered(solve_spd(A.T @ A, A.T @ b))


def _ratio_from_vector(v: np.ndarray) -> RecoveredSecret:
    last = v[-1]
    if abs(last) < DEGENERATE_TOL:
        raise DegenerateLastComponent(f"last component of the singular vector is {last:.3e}")
    return _recovered(v[:-1] / last)


def svd_direct(inst: IlweInstance) -> RecoveredSecret:
    """Ratios of the right-singular vector of ``(A | -b)`` with the smallest singular value."""
    M = np.column_stack([inst.A, -inst.b])
    # a wide M still has a null space; the full V is needed to reach it
    _, _, vt = np.linalg.svd(M, full_matrices=M.shape[0] < M.shape[1])
    return _ratio_from_vector(vt[-1])


class GramAccumulator:
    """Running ``sum D_i^T D_i`` for designs ``D_i = (blockdiag_k(F_{c_i}) | coeff(z_i))``.

    Stored exactly as integers in structured form: the top-left block is
    ``blockdiag_k(T)`` with ``T`` the negacyclic matrix of ``t``, the last
    column is ``u`` and the corner is ``zz``. ``gram()`` materialises the
    dense float matrix.
    """

    def __init__(self, n: int, k: int = 1):
        if n < 1 or k < 1:
            raise ParameterError(f"need n >= 1 and k >= 1, got n={n}, k={k}")
        self.n, self.k = n, k
        self.t = np.zeros(n, dtype=np.int64)
        self.u = np.zeros((k, n), dtype=np.int64)
        self.zz = 0
        self.count = 0
        # worst-case magnitudes absorbed so far, tracked to refuse int64 wrap
        self._t_bound = 0
        self._u_bound = 0

    @property
    def dim(self) -> int:
        return self.n * self.k

    def _guard(self, c: np.ndarray, z: np.ndarray) -> None:
        if c.size == 0:
            return
        c_l1 = np.abs(c).sum(axis=1)
        z_max = np.abs(z).reshape(len(z), -1).max(axis=1)
        t_add = int((c_l1.astype(object) ** 2).sum())
        u_add = int((c_l1.astype(object) * z_max.astype(object)).sum())
        zz_add = int((z_max.astype(object) ** 2).sum()) * self.dim
        if (self._t_bound + t_add >= _ACC_LIMIT or self._u_bound + u_add >= _ACC_LIMIT
                or self.zz + zz_add >= _ACC_LIMIT):
            raise OverflowError("Gram accumulator would leave the exact 64-bit range")
        self._t_bound += t_add
        self._u_bound += u_add

    def absorb(self, z, c) -> "GramAccumulator":
        """Add one sample ``(z, c)``."""
        z = np.asarray(z, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        if z.size != self.dim or c.shape != (self.n,):
            raise ParameterError(f"sample shapes c {c.shape}, z {z.shape} do not match "
                                 f"n={self.n}, k={self.k}")
        return self.absorb_batch(c.reshape(1, -1), z.reshape(1, self.k, self.n))

    def absorb_batch(self, c, z, backend=None) -> "GramAccumulator":
        """Add samples given as ``c`` of shape ``(m, n)`` and ``z`` of shape ``(m, k, n)``."""
        from . import _backend

        c = np.ascontiguousarray(c, dtype=np.int64)
        z = np.ascontiguousarray(z, dtype=np.int64)
        if c.ndim != 2 or c.shape[1] != self.n or z.shape != (c.shape[0], self.k, self.n):
            raise ParameterError(
                f"sample shapes c {c.shape}, z {z.shape} do not match n={self.n}, k={self.k}")
        self._guard(c, z)
        impl = backend or _backend.impl
        self.zz += int(impl.absorb_samples(c, z, self.t, self.u))
        self.count += c.shape[0]
        return self

    def merge(self, other: "GramAccumulator") -> "GramAccumulator":
        if (self.n, self.k) != (other.n, other.k):
            raise ParameterError("cannot merge accumulators of different shapes")
        out = GramAccumulator(self.n, self.k)
        out.t = self.t + other.t
        out.u = self.u + other.u
        out.zz = self.zz + other.zz
        out.count = self.count + other.count
        out._t_bound = self._t_bound + other._t_bound
        out._u_bound = self._u_bound + other._u_bound
        if max(out._t_bound, out._u_bound, out.zz) >= _ACC_LIMIT:
            raise OverflowError("merged accumulator would leave the exact 64-bit range")
        return out

    def gram(self, sign: int = 1) -> np.ndarray:
        """Dense ``(d+1, d+1)`` Gram matrix of ``(C | sign * Z)``."""
        d, n = self.dim, self.n
        B = np.zeros((d + 1, d + 1), dtype=np.float64)
        T = negacyclic_matrix(self.t).astype(np.float64)
        for j in range(self.k):
            B[j * n:(j + 1) * n, j * n:(j + 1) * n] = T
        col = sign * self.u.reshape(-1).astype(np.float64)
        B[:d, d] = col
        B[d, :d] = col
        B[d, d] = float(self.zz)
        return B

    @property
    def B(self) -> np.ndarray:
        return self.gram(1)

    def save(self, path) -> None:
        """Checkpoint as ``gram <d+1> <count>`` and the lower triangle, 17 significant digits."""
        B = self.gram(1)
        with open(path, "w") as fh:
            fh.write(f"gram {B.shape[0]} {self.count}\n")
            for i in range(B.shape[0]):
                fh.write(" ".join(f"{x:.17g}" for x in B[i, :i + 1]) + "\n")

    @classmethod
    def load(cls, path, n: int) -> "GramAccumulator":
        """Read a checkpoint; ``n`` fixes the block structure (``k = d / n``)."""
        with open(path) as fh:
            lines = [ln.split() for ln in fh if ln.strip()]
        try:
            tag, size, count = lines[0]
            size, count = int(size), int(count)
        except ValueError:
            raise ParameterError(f"{path}: expected header 'gram <d+1> <count>'") from None
        if tag != "gram" or size < 2 or len(lines) != size + 1:
            raise ParameterError(f"{path}: expected header and {size} triangle rows")
        d = size - 1
        if d % n:
            raise ParameterError(f"{path}: dimension {d} is not a multiple of n={n}")
        B = np.zeros((size, size))
        for i, row in enumerate(lines[1:]):
            if len(row) != i + 1:
                raise ParameterError(f"{path}: row {i + 1} has {len(row)} entries, expected {i + 1}")
            B[i, :i + 1] = [float(x) for x in row]
        B = B + np.tril(B, -1).T
        acc = cls(n, d // n)
        if np.any(B != np.round(B)):
            raise ParameterError(f"{path}: entries are not integers")
        acc.t = B[:n, 0].astype(np.int64)
        acc.u = B[:d, d].astype(np.int64).reshape(acc.k, n)
        acc.zz = int(B[d, d])
        acc.count = count
        if not np.array_equal(acc.gram(1), B):
            raise ParameterError(f"{path}: matrix lacks the block negacyclic structure for n={n}")
        acc._t_bound = int(np.abs(acc.t).sum())
        acc._u_bound = int(np.abs(acc.u).sum())
        return acc


def absorb(acc: GramAccumulator, sample) -> GramAccumulator:
    z, c = sample
    return acc.absorb(z, c)


def lsm_streaming(acc: GramAccumulator) -> RecoveredSecret:
    """Solve ``B[1:d, 1:d] x = B[1:d, d+1]`` from the accumulated Gram matrix."""
    if acc.count == 0:
        raise SingularOrIndefinite("empty accumulator")
    B = acc.gram(1)
    d = acc.dim
    return _recovered(solve_spd(B[:d, :d], B[:d, d]))


def svd_streaming(acc: GramAccumulator, method: str = "lapack") -> RecoveredSecret:
    """Eigenvector of the smallest eigenvalue of the Gram matrix of ``(C | -Z)``."""
    if acc.count == 0:
        raise DegenerateLastComponent("empty accumulator")
    eig = sym_eig(acc.gram(-1), method=method)
    return _ratio_from_vector(eig.vectors[:, -1])


# -- sample complexity --------------------------------------------------------

def sample_complexity_bounds(tau_a: float, sigma_a: float, tau_e: float, k: int,
                             eta_conf: float = 1.0, log_base: float = math.e) -> tuple[float, float]:
    """The two row-count requirements for exact least-squares recovery.

    ``4 (tau_a/sigma_a)^4 (C1 k + C2 eta_conf)`` and
    ``32 (tau_e/sigma_a)^2 log(2k)`` with ``C1 = 2^8 log 9``,
    ``C2 = 2^9 log 2``; every ``log`` is taken in ``log_base``.
    """
    if sigma_a <= 0:
        raise ParameterError("sigma_a must be positive")
    if k < 1:
        raise ParameterError("k must be a positive integer")
    if eta_conf < 1:
        raise ParameterError("eta_conf must be at least 1")
    if tau_a < 0 or tau_e < 0:
        raise ParameterError("subgaussian parameters must be nonnegative")
    if log_base <= 0 or log_base == 1:
        raise ParameterError("log base must be positive and not 1")

    def log(x):
        return math.log(x) / math.log(log_base)

    c1 = 2**8 * log(9)
    c2 = 2**9 * log(2)
    first = 4 * (tau_a / sigma_a) ** 4 * (c1 * k + c2 * eta_conf)
    second = 32 * (tau_e / sigma_a) ** 2 * log(2 * k)
    return first, second


def sample_complexity_bound(tau_a, sigma_a, tau_e, k, eta_conf=1.0, log_base=math.e) -> float:
    return max(sample_complexity_bounds(tau_a, sigma_a, tau_e, k, eta_conf, log_base))


def evaluate(s_tilde, s_true, m_used: int | None = None) -> AttackReport:
    s_tilde = np.asarray(s_tilde, dtype=np.int64).reshape(-1)
    s_true = np.asarray(s_true, dtype=np.int64).reshape(-1)
    if s_tilde.size != s_true.size:
        raise ParameterError(f"length mismatch: {s_tilde.size} vs {s_true.size}")
    diff = s_tilde - s_true
    return AttackReport(
        s_tilde=s_tilde,
        l1_distance=norm_1(diff),
        linf_distance=norm_inf(diff),
        weight_diff=weight(diff),
        m_used=m_used,
        discarded=not np.any(s_tilde),
    )
