"""Sampling, streaming least-squares and SVD key recovery for integer LWE
instances built from rejection-sampled Dilithium-style signatures."""
from ._backend import NAME as BACKEND
from .attacks import (AttackReport, GramAccumulator, RecoveredSecret, evaluate, lsm_direct,
                      lsm_streaming, sample_complexity_bound, svd_direct, svd_streaming)
from .errors import (AttemptBudgetExceeded, ConvergenceError, DegenerateLastComponent, IlweError,
                     ParameterError, SingularOrIndefinite, TuneFailed)
from .experiments import ExperimentConfig, emit_report, run_experiment
from .matform import IlweInstance, assemble_instance, block_design, negacyclic_matrix
from .ring import RingParams, neg_mul, round_half_down
from .sampling import SamplerParams, YDist, generate_samples, sample_secret

__version__ = "0.1.0"
