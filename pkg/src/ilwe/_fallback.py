"""Pure numpy implementation of the hot kernels.

Same signatures and bit-identical results as the compiled ``_kernels``
module; used when the extension is not built or ``ILWE_PURE_PYTHON`` is set.
"""
import numpy as np

from .matform import _negacyclic_index
from .rng import CounterStream, derive_key

NAME = "python"

_KINDS = ("uniform", "uniform_shifted", "subgaussian")


def _ball(n, rho, rng):
    c = [0] * n
    for i in range(n - rho, n):
        j = rng.below(i + 1)
        c[i] = c[j]
        c[j] = 1 - 2 * rng.bit()
    return c


def _draw_y(rng, k, n, rho, gamma, kind, alpha):
    if kind == 0:
        return rng.integers(-gamma, gamma, n * k).reshape(k, n)
    if kind == 1:
        return rng.integers(-gamma + 1, gamma, n * k).reshape(k, n)
    v = np.zeros((k, 2 * n), dtype=np.int64)
    for j in range(k):
        row = _ball(n, rho, rng)
        for i in range(n):
            if row[i]:
                row[i] *= 1 + rng.below(alpha)
        v[j, :n] = row
    # doubled buffer: columns n-r .. 2n-r-1 of (-v | v) hold X^r v
    v[:, n:] = v[:, :n]
    v[:, :n] *= -1
    y = np.zeros((k, n), dtype=np.int64)
    for _ in range(rho):
        b = 1 - 2 * rng.bit()
        r = rng.below(n)
        if b > 0:
            y += v[:, n - r:2 * n - r]
        else:
            y -= v[:, n - r:2 * n - r]
    return y


def generate_samples(s, rho, gamma, bound, kind, alpha, resample_both, key, start, count,
                     max_attempts):
    """Run the rejection loop for samples ``start .. start+count-1``.

    Returns ``(c, z, attempts, failed)`` where ``failed`` is the offset of
    the first sample that exhausted its budget, or -1.
    """
    k, n = s.shape
    out_c = np.zeros((count, n), dtype=np.int64)
    out_z = np.zeros((count, k, n), dtype=np.int64)
    attempts = np.zeros(count, dtype=np.int64)
    # columns of the stacked negacyclic matrices of s, so c*s is one matvec
    idx, sign = _negacyclic_index(n)
    smat = np.vstack([s[j][idx] * sign for j in range(k)])
    for i in range(count):
        rng = CounterStream(derive_key(key, start + i))
        y = None if resample_both else _draw_y(rng, k, n, rho, gamma, kind, alpha)
        for attempt in range(1, max_attempts + 1):
            if resample_both:
                y = _draw_y(rng, k, n, rho, gamma, kind, alpha)
            c = np.array(_ball(n, rho, rng), dtype=np.int64)
            z = y + (smat @ c).reshape(k, n)
            if np.max(np.abs(z)) < bound:
                out_c[i] = c
                out_z[i] = z
                attempts[i] = attempt
                break
        else:
            return out_c, out_z, attempts, i
    return out_c, out_z, attempts, -1


def absorb_samples(c, z, t, u):
    """Add one batch to the Gram statistics in place.

    ``t += sum_i F_{c_i}^T c_i`` (first column of the top-left block),
    ``u[j] += sum_i F_{c_i}^T z_i[j]``; returns ``sum_i |z_i|^2``.
    """
    m, n = c.shape
    if m == 0:
        return 0
    idx, sign = _negacyclic_index(n)
    chunk = max(1, 2_000_000 // (n * n))
    for lo in range(0, m, chunk):
        cb = c[lo:lo + chunk]
        zb = z[lo:lo + chunk]
        F = cb[:, idx] * sign
        t += np.einsum("bli,bl->i", F, cb)
        u += np.einsum("bli,bjl->ji", F, zb)
    return int(np.einsum("bjl,bjl->", z, z))
