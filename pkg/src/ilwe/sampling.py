"""Randomness for the simulations: challenges, secrets, masks, and the
rejection-sampling loop that turns them into signature samples.

Every draw reads words from a :class:`~ilwe.rng.CounterStream` in a fixed
order, so the compiled kernels and this module produce identical samples
for identical keys:

* ``sample_in_ball`` -- for ``i = n-rho .. n-1``: one word for the swap
  index ``j = w mod (i+1)``, then one word whose low bit picks the sign.
* uniform masks -- ``n*k`` words, component-major, ``w mod (2*gamma+1) - gamma``
  (shifted variant: ``w mod (2*gamma) - gamma + 1``).
* rotation masks -- per component a ball of weight ``rho`` followed by one
  magnitude word ``1 + w mod alpha`` per nonzero slot (ascending), then
  ``rho`` pairs (sign word, rotation word ``w mod n``).
* one candidate -- mask (unless it is kept across rejections), then challenge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AttemptBudgetExceeded, ParameterError
from .matform import IlweInstance
from .ring import neg_mul, norm_inf, rotate
from .rng import CounterStream, derive_key

MAX_ATTEMPTS = 10**6

UNIFORM = "uniform"
UNIFORM_SHIFTED = "uniform_shifted"
SUBGAUSSIAN = "subgaussian"
Y_KINDS = (UNIFORM, UNIFORM_SHIFTED, SUBGAUSSIAN)

RESAMPLE_BOTH = "both"
RESAMPLE_C_ONLY = "c_only"

UNIFORM_BOX = "uniform_box"
FIXED_WEIGHT = "fixed_weight"


@dataclass(frozen=True)
class YDist:
    """Mask distribution: ``uniform`` on [-gamma, gamma], ``uniform_shifted``
    on [-gamma+1, gamma], or ``subgaussian`` signed rotations of a sparse
    vector with entries bounded by ``alpha``."""

    kind: str = UNIFORM
    alpha: int | None = None

    def __post_init__(self):
        if self.kind not in Y_KINDS:
            raise ParameterError(f"unknown mask distribution {self.kind!r}")
        if self.kind == SUBGAUSSIAN and (self.alpha is None or self.alpha < 1):
            raise ParameterError("subgaussian masks need alpha >= 1")

    @classmethod
    def parse(cls, text: str) -> "YDist":
        """Parse ``uniform``, ``uniform_shifted`` or ``subgaussian alpha=29``."""
        parts = text.replace(",", " ").split()
        if not parts:
            raise ParameterError("empty y_dist")
        kind = parts[0].lower().replace("-", "_")
        alpha = None
        for opt in parts[1:]:
            key, _, val = opt.partition("=")
            if key != "alpha" or not val:
                raise ParameterError(f"unrecognised y_dist option {opt!r}")
            alpha = int(val)
        return cls(kind, alpha)

    def __str__(self):
        return f"{self.kind} alpha={self.alpha}" if self.kind == SUBGAUSSIAN else self.kind


@dataclass(frozen=True)
class SamplerParams:
    n: int
    k: int
    rho: int
    gamma: int
    beta: int
    eta: int
    y_dist: YDist = field(default_factory=YDist)
    resample: str = RESAMPLE_BOTH
    q: int | None = None

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ParameterError(f"need n >= 1 and k >= 1, got n={self.n}, k={self.k}")
        if not 0 <= self.rho <= self.n:
            raise ParameterError(f"rho={self.rho} must lie in [0, n={self.n}]")
        if self.gamma < 0 or self.eta < 0:
            raise ParameterError("gamma and eta must be nonnegative")
        if self.gamma - self.beta < 1:
            raise ParameterError(f"gamma - beta = {self.gamma - self.beta} rejects every candidate")
        if self.resample not in (RESAMPLE_BOTH, RESAMPLE_C_ONLY):
            raise ParameterError(f"unknown resample policy {self.resample!r}")
        if self.y_dist.kind == UNIFORM_SHIFTED and self.gamma < 1:
            raise ParameterError("shifted uniform masks need gamma >= 1")
        if self.q is not None and 2 * self.max_abs_z >= self.q:
            raise ParameterError(
                f"|z| can reach {self.max_abs_z} >= q/2 = {self.q / 2}; arithmetic over Z would differ from Z_q")

    @classmethod
    def with_bound(cls, n, k, rho, bound, eta, gamma=None, **kw) -> "SamplerParams":
        """Build from the rejection bound ``gamma - beta``; ``gamma`` defaults to the bound."""
        gamma = bound if gamma is None else gamma
        return cls(n=n, k=k, rho=rho, gamma=gamma, beta=gamma - bound, eta=eta, **kw)

    @property
    def bound(self) -> int:
        """Acceptance requires ``norm_inf(z) < bound``."""
        return self.gamma - self.beta

    @property
    def max_abs_y(self) -> int:
        if self.y_dist.kind == SUBGAUSSIAN:
            return self.y_dist.alpha * self.rho
        return self.gamma

    @property
    def max_abs_z(self) -> int:
        return self.max_abs_y + self.rho * self.eta

    def replace(self, **kw) -> "SamplerParams":
        from dataclasses import replace
        return replace(self, **kw)


@dataclass
class SignatureSample:
    z: np.ndarray
    c: np.ndarray
    attempts: int


def sample_in_ball(n: int, rho: int, rng: CounterStream) -> np.ndarray:
    """Polynomial with exactly ``rho`` coefficients in {-1, +1}, rest zero."""
    if not 0 <= rho <= n:
        raise ParameterError(f"rho={rho} must lie in [0, n={n}]")
    c = [0] * n
    for i in range(n - rho, n):
        j = rng.below(i + 1)
        c[i] = c[j]
        c[j] = 1 - 2 * rng.bit()
    return np.array(c, dtype=np.int64)


def _fixed_weight_poly(n: int, rho: int, bound: int, rng: CounterStream) -> np.ndarray:
    v = sample_in_ball(n, rho, rng)
    for i in np.flatnonzero(v):
        v[i] *= 1 + rng.below(bound)
    return v


def sample_secret(params: SamplerParams, rng: CounterStream, mode: str = FIXED_WEIGHT) -> np.ndarray:
    """Secret in R^k as a ``(k, n)`` array.

    ``uniform_box`` draws every coefficient from [-eta, eta]; ``fixed_weight``
    gives each component exactly ``rho`` nonzeros with magnitudes in [1, eta].
    """
    n, k, eta = params.n, params.k, params.eta
    if mode == UNIFORM_BOX:
        return rng.integers(-eta, eta, n * k).reshape(k, n)
    if mode == FIXED_WEIGHT:
        if eta < 1:
            raise ParameterError("fixed-weight secrets need eta >= 1")
        return np.stack([_fixed_weight_poly(n, params.rho, eta, rng) for _ in range(k)])
    raise ParameterError(f"unknown secret mode {mode!r}")


def sample_y(params: SamplerParams, rng: CounterStream) -> np.ndarray:
    n, k, gamma = params.n, params.k, params.gamma
    kind = params.y_dist.kind
    if kind == UNIFORM:
        return rng.integers(-gamma, gamma, n * k).reshape(k, n)
    if kind == UNIFORM_SHIFTED:
        return rng.integers(-gamma + 1, gamma, n * k).reshape(k, n)
    alpha, rho = params.y_dist.alpha, params.rho
    v = np.stack([_fixed_weight_poly(n, rho, alpha, rng) for _ in range(k)])
    y = np.zeros((k, n), dtype=np.int64)
    for _ in range(rho):
        b = 1 - 2 * rng.bit()
        r = rng.below(n)
        for j in range(k):
            y[j] += b * rotate(v[j], r)
    return y


def gen_signature_sample(s: np.ndarray, params: SamplerParams, rng: CounterStream,
                         max_attempts: int = MAX_ATTEMPTS) -> SignatureSample:
    """Run the rejection loop until some ``z = y + c*s`` has ``norm_inf(z) < gamma - beta``."""
    s = np.asarray(s, dtype=np.int64)
    if s.shape != (params.k, params.n):
        raise ParameterError(f"secret shape {s.shape} != (k, n) = {(params.k, params.n)}")
    both = params.resample == RESAMPLE_BOTH
    bound = params.bound
    y = None if both else sample_y(params, rng)
    for attempt in range(1, max_attempts + 1):
        if both:
            y = sample_y(params, rng)
        c = sample_in_ball(params.n, params.rho, rng)
        z = y + np.stack([neg_mul(c, row) for row in s])
        if norm_inf(z) < bound:
            return SignatureSample(z=z, c=c, attempts=attempt)
    raise AttemptBudgetExceeded(
        f"no candidate accepted after {max_attempts} attempts (bound gamma-beta={bound})")


@dataclass
class SampleBatch:
    """``c``: ``(m, n)``; ``z``: ``(m, k, n)``; ``attempts``: ``(m,)``."""

    c: np.ndarray
    z: np.ndarray
    attempts: np.ndarray

    def __len__(self):
        return len(self.attempts)

    @property
    def total_attempts(self) -> int:
        return int(self.attempts.sum())

    @property
    def rejection_rate(self) -> float:
        total = self.total_attempts
        return 1.0 - len(self) / total if total else 0.0

    def __iter__(self):
        for i in range(len(self)):
            yield SignatureSample(self.z[i], self.c[i], int(self.attempts[i]))

    @classmethod
    def concat(cls, batches) -> "SampleBatch":
        batches = list(batches)
        return cls(np.concatenate([b.c for b in batches]),
                   np.concatenate([b.z for b in batches]),
                   np.concatenate([b.attempts for b in batches]))


def sample_stream(key: int, index: int) -> CounterStream:
    """Stream for the ``index``-th sample under a batch key."""
    return CounterStream(derive_key(key, index))


def generate_samples(s: np.ndarray, params: SamplerParams, key: int, count: int,
                     start: int = 0, max_attempts: int = MAX_ATTEMPTS, backend=None) -> SampleBatch:
    """Samples ``start .. start+count-1`` of the batch keyed by ``key``.

    Sample ``i`` depends only on ``(key, i)``, so batches can be produced in
    pieces or in parallel and concatenated.
    """
    from . import _backend

    impl = backend or _backend.impl
    s = np.ascontiguousarray(s, dtype=np.int64)
    if s.shape != (params.k, params.n):
        raise ParameterError(f"secret shape {s.shape} != (k, n) = {(params.k, params.n)}")
    if norm_inf(s) > params.eta:
        raise ParameterError(f"secret coefficients exceed eta={params.eta}")
    if count < 0:
        raise ParameterError("count must be nonnegative")
    c, z, attempts, failed = impl.generate_samples(
        s, params.rho, params.gamma, params.bound,
        Y_KINDS.index(params.y_dist.kind), params.y_dist.alpha or 0,
        params.resample == RESAMPLE_BOTH, key, start, count, max_attempts)
    if failed >= 0:
        raise AttemptBudgetExceeded(
            f"sample {start + failed}: no candidate accepted after {max_attempts} attempts "
            f"(bound gamma-beta={params.bound})")
    return SampleBatch(c, z, attempts)


# -- synthetic ILWE instances -------------------------------------------------

@dataclass(frozen=True)
class Distribution:
    """A coefficient distribution family with its parameters."""

    family: str
    alpha: float | None = None
    sigma: float | None = None
    rho: int | None = None
    value: int = 0

    @classmethod
    def uniform_box(cls, alpha):
        return cls("uniform_box", alpha=alpha)

    @classmethod
    def discrete_gaussian(cls, sigma):
        return cls("discrete_gaussian", sigma=sigma)

    @classmethod
    def rotation_sum(cls, alpha, rho):
        return cls("rotation_sum", alpha=alpha, rho=rho)

    @classmethod
    def point_mass(cls, value=0):
        return cls("point_mass", value=value)

    def draw(self, rng: CounterStream, size: int) -> np.ndarray:
        if self.family == "uniform_box":
            a = int(self.alpha)
            return rng.integers(-a, a, size)
        if self.family == "point_mass":
            return np.full(size, self.value, dtype=np.int64)
        raise ParameterError(f"cannot sample from {self.family!r}")

    @property
    def std(self) -> float:
        if self.family == "uniform_box":
            a = int(self.alpha)
            return math.sqrt(a * (a + 1) / 3)
        if self.family == "point_mass":
            return 0.0
        if self.family == "discrete_gaussian":
            return float(self.sigma)
        raise ParameterError(f"no closed-form deviation for {self.family!r}")


def subgaussian_tau(dist: Distribution) -> float:
    """Subgaussian parameter of a coefficient distribution."""
    if dist.family == "uniform_box":
        return dist.alpha / math.sqrt(2)
    if dist.family == "discrete_gaussian":
        return dist.sigma / math.sqrt(2 * math.pi)
    if dist.family == "rotation_sum":
        return dist.alpha * math.sqrt(dist.rho)
    if dist.family == "point_mass":
        return 0.0
    raise ParameterError(f"unknown distribution family {dist.family!r}")


def gen_ilwe_synthetic(s, chi_a: Distribution, chi_e: Distribution, m: int,
                       rng: CounterStream) -> IlweInstance:
    """``b = A s + e`` over the integers with i.i.d. entries of A and e."""
    s = np.asarray(s, dtype=np.int64)
    if m < 1:
        raise ParameterError("need m >= 1 rows")
    d = s.size
    A = chi_a.draw(rng, m * d).reshape(m, d)
    e = chi_e.draw(rng, m)
    b = A @ s + e
    return IlweInstance(A.astype(np.float64), b.astype(np.float64))


# -- sample batch files -------------------------------------------------------

def write_samples(path, batch: SampleBatch, n: int, k: int) -> None:
    with open(path, "w") as fh:
        fh.write(f"# samples n={n} k={k} m={len(batch)}\n")
        for i in range(len(batch)):
            c = " ".join(map(str, batch.c[i].tolist()))
            z = " ".join(map(str, batch.z[i].reshape(-1).tolist()))
            fh.write(f"c: {c}; z: {z}; attempts: {int(batch.attempts[i])}\n")


def read_samples(path, n: int | None = None, k: int | None = None) -> tuple[SampleBatch, int, int]:
    """Parse a sample file; ``n`` and ``k`` are inferred when not given."""
    cs, zs, att = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = {}
            for part in line.split(";"):
                key, sep, val = part.partition(":")
                if not sep:
                    raise ParameterError(f"{path}:{lineno}: malformed record")
                fields[key.strip()] = val.split()
            try:
                c = [int(x) for x in fields["c"]]
                z = [int(x) for x in fields["z"]]
                a = int(fields["attempts"][0]) if "attempts" in fields else 1
            except (KeyError, ValueError, IndexError) as exc:
                raise ParameterError(f"{path}:{lineno}: malformed record ({exc})") from None
            if n is None:
                n = len(c)
            if len(c) != n or not z or len(z) % n:
                raise ParameterError(f"{path}:{lineno}: record does not match n={n}")
            if k is None:
                k = len(z) // n
            if len(z) != n * k:
                raise ParameterError(f"{path}:{lineno}: z has {len(z)} entries, expected n*k={n * k}")
            cs.append(c)
            zs.append(z)
            att.append(a)
    if not cs:
        raise ParameterError(f"{path}: no samples")
    batch = SampleBatch(np.array(cs, dtype=np.int64),
                        np.array(zs, dtype=np.int64).reshape(len(cs), k, n),
                        np.array(att, dtype=np.int64))
    return batch, n, k
