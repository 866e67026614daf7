"""Attack-model experiments: tune the rejection bound, run seeded trials over
a list of sample counts, keep the best result per cell, and report.

Every random stream is addressed by ``(seed, row, purpose, m index, trial)``
so results do not depend on execution order or worker count.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .attacks import GramAccumulator, evaluate, lsm_streaming, svd_streaming
from .errors import AttemptBudgetExceeded, IlweError, ParameterError, TuneFailed
from .ring import norm_1
from .rng import CounterStream, stream_key
from .sampling import (FIXED_WEIGHT, RESAMPLE_BOTH, SUBGAUSSIAN, UNIFORM_BOX, SamplerParams,
                       YDist, generate_samples, sample_secret)

PILOT, SECRET, SAMPLES, GUESS = range(4)
CHUNK = 10_000
PILOT_MAX_ATTEMPTS = 10_000
BASELINE_GUESSES = 100

CSV_COLUMNS = ["n", "rho", "gamma_minus_beta", "alpha", "k", "eta", "m", "l1_best",
               "rejection_rate", "attack", "discarded_trials"]
UNAVAILABLE = "unavailable"


@dataclass
class ExperimentConfig:
    n: int
    k: int
    rho: int
    eta: int
    m_list: list[int]
    gamma: int | None = None
    beta: int | None = None
    gamma_minus_beta: int | None = None
    tune: str = "none"              # none | beta | gamma
    target_reject: float = 0.5
    window: tuple[float, float] = (0.40, 0.60)
    pilot_size: int = 2000
    y_dist: YDist = field(default_factory=YDist)
    secret_mode: str = FIXED_WEIGHT
    resample: str = RESAMPLE_BOTH
    trials: int = 3
    attack: str = "lsm"             # lsm | svd | both
    seed: int = 0
    fixed_secret: bool = False

    def __post_init__(self):
        self.m_list = [int(m) for m in self.m_list]
        self.window = tuple(float(w) for w in self.window)
        self.validate()

    def validate(self):
        if self.n < 1 or self.k < 1:
            raise ParameterError("n and k must be positive")
        if not 0 <= self.rho <= self.n:
            raise ParameterError(f"rho={self.rho} must lie in [0, n]")
        if not self.m_list or any(m < 1 for m in self.m_list):
            raise ParameterError("m_list must hold positive sample counts")
        if any(b <= a for a, b in zip(self.m_list, self.m_list[1:])):
            raise ParameterError("m_list must be strictly increasing")
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        lo, hi = self.window
        if not 0 < lo < self.target_reject < hi < 1:
            raise ParameterError("need 0 < window low < target_reject < window high < 1")
        if self.tune not in ("none", "beta", "gamma"):
            raise ParameterError(f"tune must be none, beta or gamma, not {self.tune!r}")
        if self.attack not in ("lsm", "svd", "both"):
            raise ParameterError(f"attack must be lsm, svd or both, not {self.attack!r}")
        if self.secret_mode not in (FIXED_WEIGHT, UNIFORM_BOX):
            raise ParameterError(f"unknown secret mode {self.secret_mode!r}")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")
        if self.tune == "beta" and self.gamma is None and self.y_dist.kind != SUBGAUSSIAN:
            raise ParameterError("tuning beta with uniform masks needs gamma")
        if self.tune == "gamma":
            if self.gamma_minus_beta is None:
                raise ParameterError("tuning gamma needs gamma_minus_beta")
            if self.y_dist.kind == SUBGAUSSIAN:
                raise ParameterError("gamma does not influence subgaussian masks; tune beta instead")
        if self.tune == "none" and self.fixed_bound() is None:
            raise ParameterError("give gamma_minus_beta, or gamma and beta, or a tune mode")
        if self.tune == "none" and self.gamma is None and self.y_dist.kind != SUBGAUSSIAN:
            raise ParameterError("uniform masks need gamma (or tune = gamma)")

    def fixed_bound(self):
        if self.gamma_minus_beta is not None:
            return self.gamma_minus_beta
        if self.gamma is not None and self.beta is not None:
            return self.gamma - self.beta
        return None

    @property
    def attacks(self) -> list[str]:
        return ["lsm", "svd"] if self.attack == "both" else [self.attack]

    def gamma_for(self, bound: int) -> int:
        """Mask width to pair with ``bound``; subgaussian masks ignore it."""
        return self.gamma if self.gamma is not None else bound

    def sampler(self, gamma: int, bound: int) -> SamplerParams:
        return SamplerParams(n=self.n, k=self.k, rho=self.rho, gamma=gamma, beta=gamma - bound,
                             eta=self.eta, y_dist=self.y_dist, resample=self.resample)

    # -- flat key = value files ------------------------------------------------

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ParameterError(f"{source}:{lineno}: expected 'key = value'")
            raw[key.strip().lower()] = val.strip()
        try:
            return cls._from_mapping(raw)
        except (KeyError, ValueError, TypeError) as exc:
            raise ParameterError(f"{source}: {exc}") from None

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ParameterError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.from_text(text, str(path))

    @classmethod
    def _from_mapping(cls, raw: dict) -> "ExperimentConfig":
        known = {"n", "k", "rho", "eta", "m_list", "gamma", "beta", "gamma_minus_beta", "tune",
                 "target_reject", "window", "pilot_size", "y_dist", "secret_mode", "resample",
                 "trials", "attack", "seed", "fixed_secret"}
        unknown = set(raw) - known
        if unknown:
            raise ParameterError(f"unknown keys: {', '.join(sorted(unknown))}")
        missing = {"n", "k", "rho", "eta", "m_list"} - set(raw)
        if missing:
            raise ParameterError(f"missing keys: {', '.join(sorted(missing))}")

        def opt_int(key):
            v = raw.get(key)
            return None if v is None or v.lower() in ("", "auto", "none") else int(v)

        kw = dict(
            n=int(raw["n"]), k=int(raw["k"]), rho=int(raw["rho"]), eta=int(raw["eta"]),
            m_list=[int(float(x)) for x in raw["m_list"].split(",") if x.strip()],
            gamma=opt_int("gamma"), beta=opt_int("beta"), gamma_minus_beta=opt_int("gamma_minus_beta"),
        )
        if "tune" in raw:
            kw["tune"] = raw["tune"].lower()
        if "target_reject" in raw:
            kw["target_reject"] = float(raw["target_reject"])
        if "window" in raw:
            lo, hi = (float(x) for x in raw["window"].split(","))
            kw["window"] = (lo, hi)
        if "pilot_size" in raw:
            kw["pilot_size"] = int(raw["pilot_size"])
        if "y_dist" in raw:
            kw["y_dist"] = YDist.parse(raw["y_dist"])
        if "secret_mode" in raw:
            kw["secret_mode"] = raw["secret_mode"].lower().replace("-", "_")
        if "resample" in raw:
            kw["resample"] = raw["resample"].lower().replace("-", "_")
        if "trials" in raw:
            kw["trials"] = int(raw["trials"])
        if "attack" in raw:
            kw["attack"] = raw["attack"].lower()
        if "seed" in raw:
            kw["seed"] = int(raw["seed"])
        if "fixed_secret" in raw:
            kw["fixed_secret"] = raw["fixed_secret"].lower() in ("1", "true", "yes", "on")
        return cls(**kw)


@dataclass
class TrialResult:
    m: int
    l1_distance: int | None
    rejection_rate: float
    discarded: bool
    attack_kind: str
    trial_index: int
    beta_used: int
    error: str | None = None

    @property
    def usable(self) -> bool:
        return self.error is None and not self.discarded


@dataclass
class Cell:
    attack: str
    m: int
    l1_best: int | None
    rejection_rate: float
    discarded_trials: int
    trials: list[TrialResult]


@dataclass
class ExperimentRow:
    n: int
    rho: int
    gamma_minus_beta: int
    alpha: int | None
    k: int
    eta: int
    gamma: int
    beta: int
    pilot_rate: float | None
    baseline_l1: float
    guess_ceiling: int
    cells: list[Cell]

    def cell(self, attack: str, m: int) -> Cell:
        for c in self.cells:
            if c.attack == attack and c.m == m:
                return c
        raise KeyError((attack, m))


# -- pilots and tuning ---------------------------------------------------------

def _pilot_secret(config: ExperimentConfig, params: SamplerParams, row: int) -> np.ndarray:
    return sample_secret(params, CounterStream.from_seed(config.seed, row, PILOT, 0), config.secret_mode)


def pilot_rate(params: SamplerParams, secret: np.ndarray, key: int, size: int) -> float:
    """Rejection rate over ``size`` accepted samples (stops early above 95%)."""
    accepted = total = 0
    step = 250
    while accepted < size:
        count = min(step, size - accepted)
        try:
            batch = generate_samples(secret, params, key, count, start=accepted,
                                     max_attempts=PILOT_MAX_ATTEMPTS)
        except AttemptBudgetExceeded:
            return 1.0
        accepted += count
        total += batch.total_attempts
        if total >= 2000 and 1 - accepted / total > 0.95:
            break
    return 1.0 - accepted / total


def _bisect(rate_at, lo: int, hi: int, target: float, increasing: bool):
    """Integer bisection for the argument whose rate is closest to ``target``."""
    cache = {}

    def rate(x):
        if x not in cache:
            cache[x] = rate_at(x)
        return cache[x]

    def above(x):
        return (rate(x) > target) == increasing

    while hi - lo > 1:
        mid = (lo + hi) // 2
        if above(mid):
            hi = mid
        else:
            lo = mid
    best = min((lo, hi), key=lambda x: (abs(rate(x) - target), x))
    return best, rate(best)


def tune_bound(config: ExperimentConfig, row: int = 0) -> tuple[int, float | None]:
    """Return ``(gamma - beta, pilot rejection rate)``.

    With ``tune = beta`` the bound is bisected over ``[1, max|y| + rho*eta + 1]``
    on a pilot batch; otherwise the configured bound comes back with no rate.
    """
    if config.tune != "beta":
        return config.fixed_bound(), None
    probe = config.sampler(config.gamma_for(1), 1)
    secret = _pilot_secret(config, probe, row)
    key = stream_key(config.seed, row, PILOT, 1)
    upper = probe.max_abs_y + config.rho * config.eta + 1

    def rate_at(b):
        return pilot_rate(config.sampler(config.gamma_for(b), b), secret, key, config.pilot_size)

    bound, rate = _bisect(rate_at, 1, upper, config.target_reject, increasing=False)
    lo, hi = config.window
    if not lo <= rate <= hi:
        raise TuneFailed(f"no bound in [1, {upper}] reaches the rejection window "
                         f"[{lo:.2f}, {hi:.2f}]; closest rate {rate:.4f} at gamma-beta={bound}",
                         closest_rate=rate, closest_value=bound)
    return bound, rate


def tune_beta(config: ExperimentConfig, row: int = 0) -> int:
    """Beta for the row: tuned on a pilot when ``tune = beta``, else as configured."""
    bound, _ = tune_bound(config, row)
    return config.gamma_for(bound) - bound


def tune_gamma(config: ExperimentConfig, row: int = 0) -> tuple[int, float]:
    """For a fixed bound, bisect the uniform mask width ``gamma``; returns ``(gamma, rate)``."""
    bound = config.gamma_minus_beta
    probe = config.sampler(bound, bound)
    secret = _pilot_secret(config, probe, row)
    key = stream_key(config.seed, row, PILOT, 1)

    def rate_at(g):
        return pilot_rate(config.sampler(g, bound), secret, key, config.pilot_size)

    hi = 2 * bound + config.rho * config.eta
    while rate_at(hi) <= config.target_reject and hi < 2**40:
        hi *= 2
    gamma, rate = _bisect(rate_at, 1, hi, config.target_reject, increasing=True)
    wlo, whi = config.window
    if not wlo <= rate <= whi:
        raise TuneFailed(f"no gamma reaches the rejection window [{wlo:.2f}, {whi:.2f}] for "
                         f"gamma-beta={bound}; closest rate {rate:.4f} at gamma={gamma}",
                         closest_rate=rate, closest_value=gamma)
    return gamma, rate


def resolve_sampler(config: ExperimentConfig, row: int = 0) -> tuple[SamplerParams, float | None]:
    """Fix gamma and beta for a parameter row, tuning if requested."""
    if config.tune == "gamma":
        gamma, rate = tune_gamma(config, row)
        return config.sampler(gamma, config.gamma_minus_beta), rate
    bound, rate = tune_bound(config, row)
    return config.sampler(config.gamma_for(bound), bound), rate


# -- trials ------------------------------------------------------------------

def trial_secret(config: ExperimentConfig, params: SamplerParams, row: int, m_index: int,
                 trial: int) -> np.ndarray:
    path = (row, SECRET) if config.fixed_secret else (row, SECRET, m_index, trial)
    return sample_secret(params, CounterStream.from_seed(config.seed, *path), config.secret_mode)


def collect(secret, params: SamplerParams, key: int, m: int) -> tuple[GramAccumulator, int]:
    """Stream ``m`` accepted samples into a fresh accumulator; also return total candidates."""
    acc = GramAccumulator(params.n, params.k)
    total = 0
    for start in range(0, m, CHUNK):
        batch = generate_samples(secret, params, key, min(CHUNK, m - start), start=start)
        acc.absorb_batch(batch.c, batch.z)
        total += batch.total_attempts
    return acc, total


def run_trial(config: ExperimentConfig, params: SamplerParams, m: int, m_index: int,
              trial: int, row: int = 0) -> list[TrialResult]:
    """One trial: fresh secret, ``m`` samples, every configured attack."""
    secret = trial_secret(config, params, row, m_index, trial)
    key = stream_key(config.seed, row, SAMPLES, m_index, trial)
    acc, total = collect(secret, params, key, m)
    rate = 1.0 - m / total
    results = []
    for kind in config.attacks:
        try:
            rec = (lsm_streaming if kind == "lsm" else svd_streaming)(acc)
        except IlweError as exc:
            results.append(TrialResult(m, None, rate, False, kind, trial, params.beta,
                                       error=type(exc).__name__))
            continue
        rep = evaluate(rec.s_tilde, secret.reshape(-1), m_used=m)
        results.append(TrialResult(m, rep.l1_distance, rate, rep.discarded, kind, trial, params.beta))
    return results


def baseline_guess_l1(config: ExperimentConfig, params: SamplerParams, row: int = 0) -> float:
    """Mean l1 distance from the trial-0 secret to random fixed-weight guesses."""
    secret = trial_secret(config, params, row, 0, 0).reshape(-1)
    rng = CounterStream.from_seed(config.seed, row, GUESS)
    total = 0
    for _ in range(BASELINE_GUESSES):
        guess = sample_secret(params, rng, FIXED_WEIGHT if params.eta >= 1 else UNIFORM_BOX)
        total += norm_1(guess.reshape(-1) - secret)
    return total / BASELINE_GUESSES


def _trial_task(args):
    config, params, m, m_index, trial, row = args
    return run_trial(config, params, m, m_index, trial, row)


def best_cell(attack: str, m: int, trials: list[TrialResult]) -> Cell:
    usable = [t for t in trials if t.usable]
    dropped = len(trials) - len(usable)
    if usable:
        best = min(usable, key=lambda t: (t.l1_distance, t.trial_index))
        return Cell(attack, m, best.l1_distance, best.rejection_rate, dropped, trials)
    mean_rate = sum(t.rejection_rate for t in trials) / len(trials)
    return Cell(attack, m, None, mean_rate, dropped, trials)


def run_experiment(config: ExperimentConfig, row: int = 0, jobs: int = 1) -> list[ExperimentRow]:
    """Run every ``(m, trial)`` for one parameter row and keep the best per cell."""
    params, prate = resolve_sampler(config, row)
    tasks = [(config, params, m, mi, t, row)
             for mi, m in enumerate(config.m_list) for t in range(config.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_trial_task, tasks))
    else:
        outputs = [_trial_task(t) for t in tasks]
    cells = []
    for kind in config.attacks:
        for m in config.m_list:
            trials = [r for out in outputs for r in out if r.m == m and r.attack_kind == kind]
            cells.append(best_cell(kind, m, trials))
    alpha = config.y_dist.alpha if config.y_dist.kind == SUBGAUSSIAN else None
    return [ExperimentRow(config.n, config.rho, params.bound, alpha, config.k, config.eta,
                          params.gamma, params.beta, prate,
                          baseline_guess_l1(config, params, row),
                          guess_l1_ceiling(config.n, config.k, config.rho, config.eta), cells)]


# -- reports ------------------------------------------------------------------

def _fmt(x):
    return "" if x is None else str(x)


def emit_report(rows: list[ExperimentRow], fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            for c in r.cells:
                w.writerow([r.n, r.rho, r.gamma_minus_beta, _fmt(r.alpha), r.k, r.eta, c.m,
                            UNAVAILABLE if c.l1_best is None else c.l1_best,
                            repr(float(c.rejection_rate)), c.attack, c.discarded_trials])
        return buf.getvalue()
    if fmt == "table":
        header = ["n", "rho", "gamma-beta", "alpha", "k", "eta", "m", "attack", "l1 best",
                  "rejection", "discarded", "guess l1", "guess max"]
        body = []
        for r in rows:
            for c in r.cells:
                body.append([str(r.n), str(r.rho), str(r.gamma_minus_beta), _fmt(r.alpha) or "-",
                             str(r.k), str(r.eta), str(c.m), c.attack,
                             UNAVAILABLE if c.l1_best is None else str(c.l1_best),
                             f"{100 * c.rejection_rate:.2f}%", str(c.discarded_trials),
                             f"{r.baseline_l1:.1f}", str(r.guess_ceiling)])
        widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h)
                  for i, h in enumerate(header)]
        lines = ["  ".join(h.rjust(wd) for h, wd in zip(header, widths))]
        lines.append("  ".join("-" * wd for wd in widths))
        lines += ["  ".join(v.rjust(wd) for v, wd in zip(b, widths)) for b in body]
        return "\n".join(lines) + "\n"
    raise ParameterError(f"unknown report format {fmt!r}")


def parse_report(text: str) -> list[dict]:
    """Read a CSV report back into typed records."""
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        out.append({
            "n": int(rec["n"]), "rho": int(rec["rho"]),
            "gamma_minus_beta": int(rec["gamma_minus_beta"]),
            "alpha": int(rec["alpha"]) if rec["alpha"] else None,
            "k": int(rec["k"]), "eta": int(rec["eta"]), "m": int(rec["m"]),
            "l1_best": None if rec["l1_best"] == UNAVAILABLE else int(rec["l1_best"]),
            "rejection_rate": float(rec["rejection_rate"]),
            "attack": rec["attack"], "discarded_trials": int(rec["discarded_trials"]),
        })
    return out


def summary_line(row: ExperimentRow) -> str:
    parts = []
    for c in row.cells:
        l1 = UNAVAILABLE if c.l1_best is None else c.l1_best
        parts.append(f"{c.attack} m={c.m}: l1={l1} rej={100 * c.rejection_rate:.2f}%")
    alpha = f" alpha={row.alpha}" if row.alpha is not None else ""
    return (f"n={row.n} rho={row.rho} gamma-beta={row.gamma_minus_beta}{alpha} k={row.k} "
            f"eta={row.eta} (gamma={row.gamma}): " + "; ".join(parts))


def guess_l1_ceiling(n: int, k: int, rho: int, eta: int) -> int:
    """Reference ceiling for a random fixed-weight guess: ``n k + rho k eta``.

    Loose on purpose (the triangle inequality alone gives ``2 rho k eta``);
    it is the figure quoted for non-recovery comparisons, e.g. 417 at
    ``n=100, k=3, rho=39, eta=1``.
    """
    return n * k + rho * k * eta
