"""Command-line entry point: ``ilwe experiment | attack | simulate | bound``.

Exit status is 0 on success, 1 for usage or parameter errors and 2 when a
computation fails (singular system, degenerate SVD, tuning failure, attempt
budget exhausted).
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__
from .attacks import (GramAccumulator, evaluate, lsm_direct, lsm_streaming,
                      sample_complexity_bounds, svd_direct, svd_streaming)
from .errors import IlweError, ParameterError
from .experiments import (SAMPLES, ExperimentConfig, emit_report, resolve_sampler,
                          run_experiment, summary_line, trial_secret)
from .matform import read_instance
from .rng import stream_key
from .sampling import (FIXED_WEIGHT, RESAMPLE_BOTH, UNIFORM_BOX, RESAMPLE_C_ONLY, YDist,
                       generate_samples, read_samples, write_samples)

DEFAULT_SEED = 0
LOG_BASES = {"e": math.e, "2": 2.0, "10": 10.0}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; 2 is reserved for computation errors here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise ParameterError(f"cannot write {path}: {exc.strerror}") from None


def read_secret(path) -> np.ndarray:
    try:
        with open(path) as fh:
            tokens = fh.read().split()
        return np.array([int(t) for t in tokens], dtype=np.int64)
    except OSError as exc:
        raise ParameterError(f"cannot read secret {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise ParameterError(f"{path}: non-integer secret entry ({exc})") from None


def write_secret(path, s) -> None:
    _write_text(path, " ".join(map(str, np.asarray(s).reshape(-1).tolist())) + "\n")


# -- subcommands ---------------------------------------------------------------

def cmd_experiment(args) -> int:
    configs = [ExperimentConfig.from_file(p) for p in args.config]
    rows = []
    for index, cfg in enumerate(configs):
        if args.seed is not None:
            cfg.seed = args.seed
        rows.extend(run_experiment(cfg, row=index, jobs=args.jobs))
    report = emit_report(rows, args.format)
    summaries = "".join(summary_line(r) + "\n" for r in rows)
    if args.out:
        _write_text(args.out, report)
        sys.stdout.write(summaries)
    else:
        sys.stderr.write(summaries)
        sys.stdout.write(report)
    return 0


def _print_result(kind: str, rec, secret) -> None:
    print(f"{kind}: " + " ".join(map(str, rec.s_tilde.tolist())))
    if secret is not None:
        rep = evaluate(rec.s_tilde, secret)
        print(f"{kind} l1={rep.l1_distance} linf={rep.linf_distance} weight={rep.weight_diff}"
              + (" discarded" if rep.discarded else ""))


def cmd_attack(args) -> int:
    methods = ["lsm", "svd"] if args.method == "both" else [args.method]
    secret = read_secret(args.secret) if args.secret else None
    sources = sum(x is not None for x in (args.instance, args.samples, args.checkpoint))
    if sources != 1:
        raise UsageError("attack: give exactly one of --instance, --samples, --checkpoint")

    if args.instance:
        inst = _guard_read(read_instance, args.instance)
        if secret is not None and secret.size != inst.A.shape[1]:
            raise ParameterError(f"secret has {secret.size} entries, instance has {inst.A.shape[1]} columns")
        for kind in methods:
            _print_result(kind, (lsm_direct if kind == "lsm" else svd_direct)(inst), secret)
        return 0

    if args.n is None:
        raise UsageError("attack: --samples and --checkpoint need --n")
    if args.samples:
        batch, n, k = _guard_read(read_samples, args.samples, args.n, args.k)
        acc = GramAccumulator(n, k).absorb_batch(batch.c, batch.z)
        print(f"samples: {len(batch)}, rejection rate {100 * batch.rejection_rate:.2f}%",
              file=sys.stderr)
    else:
        acc = _guard_read(GramAccumulator.load, args.checkpoint, args.n)
        if args.k is not None and acc.k != args.k:
            raise ParameterError(f"checkpoint holds k={acc.k}, --k says {args.k}")
    if args.save_checkpoint:
        acc.save(args.save_checkpoint)
    if secret is not None and secret.size != acc.dim:
        raise ParameterError(f"secret has {secret.size} entries, expected n*k={acc.dim}")
    for kind in methods:
        rec = lsm_streaming(acc) if kind == "lsm" else svd_streaming(acc, method=args.eig_method)
        _print_result(kind, rec, secret)
    return 0


def _guard_read(fn, path, *extra):
    try:
        return fn(path, *extra)
    except OSError as exc:
        raise ParameterError(f"cannot read {path}: {exc.strerror}") from None


def cmd_simulate(args) -> int:
    cfg = ExperimentConfig(
        n=args.n, k=args.k, rho=args.rho, eta=args.eta, m_list=[args.m],
        gamma=args.gamma, beta=args.beta, gamma_minus_beta=args.gamma_minus_beta,
        tune=args.tune, target_reject=args.target_reject, pilot_size=args.pilot_size,
        y_dist=YDist.parse(args.y_dist), secret_mode=args.secret_mode, resample=args.resample,
        seed=args.seed)
    params, prate = resolve_sampler(cfg)
    if args.q is not None:
        params = params.replace(q=args.q)
    secret = trial_secret(cfg, params, 0, 0, 0)
    batch = generate_samples(secret, params, stream_key(cfg.seed, 0, SAMPLES, 0, 0), args.m)
    write_samples(args.out, batch, params.n, params.k)
    if args.secret_out:
        write_secret(args.secret_out, secret)
    if args.checkpoint_out:
        GramAccumulator(params.n, params.k).absorb_batch(batch.c, batch.z).save(args.checkpoint_out)
    if prate is not None:
        print(f"pilot rejection rate: {100 * prate:.2f}%")
    print(f"gamma={params.gamma} beta={params.beta} gamma-beta={params.bound}")
    print(f"rejection rate: {100 * batch.rejection_rate:.2f}%")
    return 0


def cmd_bound(args) -> int:
    first, second = sample_complexity_bounds(args.tau_a, args.sigma_a, args.tau_e, args.k,
                                             args.eta_conf, LOG_BASES[args.log_base])
    print(f"noise-free term: {first:.6f}")
    print(f"error term: {second:.6f}")
    print(f"m >= {max(first, second):.6f} (take m = {math.ceil(max(first, second))})")
    return 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ilwe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("experiment", help="run attack experiments from config files")
    p.add_argument("--config", action="append", required=True,
                   help="key = value config; repeat for several parameter rows")
    p.add_argument("--out", help="report path (default: standard output)")
    p.add_argument("--format", choices=("csv", "table"), default="csv")
    p.add_argument("--seed", type=_seed, help="overrides the config seed (default 0)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("attack", help="recover a secret from an instance, samples or a checkpoint")
    p.add_argument("--instance", help="instance file (direct attacks)")
    p.add_argument("--samples", help="sample batch file (streaming attacks)")
    p.add_argument("--checkpoint", help="Gram checkpoint file (streaming attacks)")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--method", choices=("lsm", "svd", "both"), default="lsm")
    p.add_argument("--eig-method", choices=("lapack", "jacobi"), default="lapack")
    p.add_argument("--secret", help="true secret, whitespace-separated, to report distances")
    p.add_argument("--save-checkpoint", help="write the accumulated Gram matrix here")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("simulate", help="generate accepted signature samples and their secret")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--rho", type=int, required=True)
    p.add_argument("--eta", type=int, required=True)
    p.add_argument("--gamma", type=int)
    p.add_argument("--beta", type=int)
    p.add_argument("--gamma-minus-beta", type=int)
    p.add_argument("--y-dist", default="uniform", help="uniform, uniform_shifted or 'subgaussian alpha=A'")
    p.add_argument("--secret-mode", choices=(FIXED_WEIGHT, UNIFORM_BOX), default=FIXED_WEIGHT)
    p.add_argument("--resample", choices=(RESAMPLE_BOTH, RESAMPLE_C_ONLY), default=RESAMPLE_BOTH)
    p.add_argument("--tune", choices=("none", "beta", "gamma"), default="none")
    p.add_argument("--target-reject", type=float, default=0.5)
    p.add_argument("--pilot-size", type=int, default=2000)
    p.add_argument("--q", type=int, help="modulus; checks that no coefficient wraps")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--secret-out")
    p.add_argument("--checkpoint-out")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bound", help="rows needed for exact least-squares recovery")
    p.add_argument("--tau-a", type=float, required=True)
    p.add_argument("--sigma-a", type=float, required=True)
    p.add_argument("--tau-e", type=float, default=0.0)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eta-conf", type=float, default=1.0)
    p.add_argument("--log-base", choices=tuple(LOG_BASES), default="e")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_bound)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except IlweError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
