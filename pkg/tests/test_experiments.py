from fractions import Fraction

import pytest

from ilwe.errors import ParameterError, TuneFailed
from ilwe.experiments import (CSV_COLUMNS, UNAVAILABLE, ExperimentConfig, TrialResult, best_cell,
                              emit_report, guess_l1_ceiling, parse_report, pilot_rate,
                              resolve_sampler, run_experiment, run_trial, tune_beta, tune_bound,
                              tune_gamma)
from ilwe.sampling import SUBGAUSSIAN, YDist
from oracles import enumerate_rejection


def config(**kw):
    base = dict(n=12, k=1, rho=3, eta=1, gamma_minus_beta=14, y_dist=YDist(SUBGAUSSIAN, 4),
                m_list=[100, 400], trials=2, seed=5)
    base.update(kw)
    return ExperimentConfig(**base)


TOY = """
n = 1
k = 1
rho = 0
eta = 0
gamma = 2
tune = beta
secret_mode = uniform_box
m_list = 5
"""


def test_config_text_parsing():
    cfg = ExperimentConfig.from_text("""
        # Table-shaped row
        n = 100
        k = 3
        rho = 39
        eta = 1
        gamma_minus_beta = 256
        y_dist = subgaussian alpha=25
        m_list = 10000, 100000
        attack = both
        window = 0.35, 0.65
        fixed_secret = yes
    """)
    assert (cfg.n, cfg.k, cfg.rho, cfg.fixed_bound()) == (100, 3, 39, 256)
    assert cfg.y_dist == YDist(SUBGAUSSIAN, 25) and cfg.m_list == [10000, 100000]
    assert cfg.attacks == ["lsm", "svd"] and cfg.window == (0.35, 0.65) and cfg.fixed_secret
    assert cfg.trials == 3 and cfg.seed == 0 and cfg.tune == "none"


@pytest.mark.parametrize("text", [
    "n=4\nk=1\nrho=1\neta=1\ngamma_minus_beta=5\nm_list=10,10",
    "n=4\nk=1\nrho=1\neta=1\ngamma_minus_beta=5\nm_list=10\ntrials=0",
    "n=4\nk=1\nrho=1\neta=1\ngamma_minus_beta=5\nm_list=10\nwindow=0.6,0.4",
    "n=4\nk=1\nrho=1\neta=1\ngamma_minus_beta=5\nm_list=10\ncolour=blue",
    "n=4\nk=1\nrho=1\neta=1\nm_list=10",
    "n=4\nk=1\nrho=1\nm_list=10",
    "n=4\nk=1\nrho=1\neta=1\ngamma_minus_beta=5\nm_list=10\ntune=sometimes",
    "n=4\nk=1\nrho=1\neta=1\ngamma_minus_beta=5\nm_list=ten",
    "n=4\nk=1\nrho=1\neta=1\ngamma_minus_beta=5\ny_dist=subgaussian alpha=3\ntune=gamma\nm_list=10",
    "n=4 k=1",
])
def test_config_rejects_invalid(text):
    with pytest.raises(ParameterError):
        ExperimentConfig.from_text(text)


def test_missing_config_file_names_path(tmp_path):
    with pytest.raises(ParameterError, match="nowhere.cfg"):
        ExperimentConfig.from_file(tmp_path / "nowhere.cfg")


# -- tuning ------------------------------------------------------------------------

def test_fixed_mode_returns_beta_unchanged():
    cfg = config(gamma=20, beta=3, gamma_minus_beta=None, y_dist=YDist("uniform"))
    assert tune_beta(cfg) == 3
    assert tune_bound(cfg) == (17, None)


def test_tuning_lands_on_enumerated_optimum():
    rates = {b: enumerate_rejection(2, b, 0, rho=0) for b in (1, 2, 3)}
    assert rates == {1: Fraction(4, 5), 2: Fraction(2, 5), 3: Fraction(0)}
    best = min(rates, key=lambda b: abs(rates[b] - Fraction(1, 2)))
    cfg = ExperimentConfig.from_text(TOY + "window = 0.3, 0.7\n")
    bound, rate = tune_bound(cfg)
    assert bound == best == 2
    assert tune_beta(cfg) == 0
    assert rate == pytest.approx(0.4, abs=0.035)


def test_tuning_failure_reports_closest():
    cfg = ExperimentConfig.from_text(TOY + "window = 0.45, 0.55\n")
    with pytest.raises(TuneFailed) as info:
        tune_bound(cfg)
    assert info.value.closest_value == 2
    assert info.value.closest_rate == pytest.approx(0.4, abs=0.035)


def test_maximal_bound_rejects_nothing():
    params, _ = resolve_sampler(config(gamma=10, gamma_minus_beta=10 + 3 + 1, y_dist=YDist("uniform")))
    assert pilot_rate(params, [[1] * 3 + [0] * 9], 1, 500) == 0.0
    cfg = config(tune="beta", gamma=200, y_dist=YDist("uniform"))
    bound, rate = tune_bound(cfg)
    lo, hi = cfg.window
    assert lo <= rate <= hi and 1 <= bound <= 200 + 3 + 1


def test_tuned_subgaussian_pilot_in_window():
    cfg = config(tune="beta", gamma_minus_beta=None, pilot_size=1000)
    params, rate = resolve_sampler(cfg)
    assert 0.4 <= rate <= 0.6 and params.gamma == params.bound


def test_tune_gamma_hits_window():
    cfg = config(tune="gamma", gamma_minus_beta=30, y_dist=YDist("uniform"), pilot_size=1000)
    gamma, rate = tune_gamma(cfg)
    assert 0.4 <= rate <= 0.6 and gamma > 0
    params, rate2 = resolve_sampler(cfg)
    assert (params.gamma, params.bound, rate2) == (gamma, 30, rate)


# -- trials and rows -----------------------------------------------------------------

def test_nothing_rejected_gives_zero_rate():
    cfg = config(n=4, rho=1, gamma_minus_beta=4 * 1 + 1 + 1, m_list=[300], trials=1)
    params, _ = resolve_sampler(cfg)
    (res,) = run_trial(cfg, params, 300, 0, 0)
    assert res.rejection_rate == 0.0 and res.m == 300


def test_trial_rate_matches_attempt_bookkeeping():
    cfg = config(gamma_minus_beta=9)
    params, _ = resolve_sampler(cfg)
    (res,) = run_trial(cfg, params, 400, 1, 0)
    assert 0 < res.rejection_rate < 1
    assert res.beta_used == params.beta and res.attack_kind == "lsm"


def test_single_trial_row_equals_trial():
    cfg = config(trials=1, m_list=[300])
    (row,) = run_experiment(cfg)
    params, _ = resolve_sampler(cfg)
    (res,) = run_trial(cfg, params, 300, 0, 0)
    cell = row.cell("lsm", 300)
    assert (cell.l1_best, cell.rejection_rate) == (res.l1_distance, res.rejection_rate)


def test_best_of_trials_is_minimum():
    cfg = config(y_dist=YDist("uniform"), gamma=40, gamma_minus_beta=38, m_list=[60, 200], trials=4)
    (row,) = run_experiment(cfg)
    for cell in row.cells:
        assert len(cell.trials) == 4
        assert all(cell.l1_best <= t.l1_distance for t in cell.trials if t.usable)


def test_failed_trials_are_recorded_and_marked_unavailable():
    # c = 0 always: the LSM block is singular and the SVD null space misses the last axis
    cfg = config(n=4, rho=0, m_list=[20], trials=2, attack="both", y_dist=YDist("uniform"), gamma=5)
    (row,) = run_experiment(cfg)
    for cell in row.cells:
        assert cell.l1_best is None and cell.discarded_trials == 2
        assert all(t.error for t in cell.trials)
    assert f",{UNAVAILABLE}," in emit_report([row])


def test_best_cell_skips_discarded():
    trials = [TrialResult(10, 0, 0.5, True, "lsm", 0, 1),
              TrialResult(10, 7, 0.4, False, "lsm", 1, 1),
              TrialResult(10, 5, 0.6, False, "lsm", 2, 1)]
    cell = best_cell("lsm", 10, trials)
    assert (cell.l1_best, cell.rejection_rate, cell.discarded_trials) == (5, 0.6, 1)
    cell = best_cell("lsm", 10, trials[:1])
    assert cell.l1_best is None and cell.rejection_rate == 0.5


def test_experiment_is_deterministic_and_schedule_free():
    cfg = config(attack="both")
    a = emit_report(run_experiment(cfg))
    assert a == emit_report(run_experiment(cfg))
    assert a == emit_report(run_experiment(cfg, jobs=2))
    assert a != emit_report(run_experiment(config(attack="both", seed=6)))


def test_fixed_secret_mode_reuses_secret():
    from ilwe.experiments import trial_secret
    cfg = config(fixed_secret=True)
    params, _ = resolve_sampler(cfg)
    assert (trial_secret(cfg, params, 0, 0, 0) == trial_secret(cfg, params, 0, 1, 2)).all()
    cfg = config()
    assert (trial_secret(cfg, params, 0, 0, 0) != trial_secret(cfg, params, 0, 1, 2)).any()


def test_baseline_columns():
    assert guess_l1_ceiling(100, 3, 39, 1) == 417
    (row,) = run_experiment(config(m_list=[50], trials=1))
    assert 0 < row.baseline_l1 <= 2 * 3 * 1
    assert row.guess_ceiling == 12 + 3


# -- reports ---------------------------------------------------------------------------

def test_empty_report_is_header_only():
    assert emit_report([]) == ",".join(CSV_COLUMNS) + "\n"


def test_report_roundtrip_and_formats():
    rows = run_experiment(config(attack="both"))
    text = emit_report(rows)
    recs = parse_report(text)
    assert len(recs) == 4
    for rec, cell in zip(recs, rows[0].cells):
        assert rec["l1_best"] == cell.l1_best and rec["rejection_rate"] == cell.rejection_rate
        assert rec["attack"] == cell.attack and rec["m"] == cell.m and rec["alpha"] == 4
    table = emit_report(rows, "table")
    assert f"{100 * rows[0].cells[0].rejection_rate:.2f}%" in table
    assert len({len(line) for line in table.splitlines()}) == 1
    with pytest.raises(ParameterError):
        emit_report(rows, "json")


def test_uniform_rows_leave_alpha_empty():
    rows = run_experiment(config(y_dist=YDist("uniform"), gamma=20, m_list=[80], trials=1))
    line = emit_report(rows).splitlines()[1].split(",")
    assert line[CSV_COLUMNS.index("alpha")] == ""
    assert parse_report(emit_report(rows))[0]["alpha"] is None
