import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ilwe import _backend
from ilwe.attacks import (GramAccumulator, absorb, evaluate, lsm_direct, lsm_streaming,
                          sample_complexity_bound, sample_complexity_bounds, svd_direct,
                          svd_streaming)
from ilwe.errors import DegenerateLastComponent, ParameterError, SingularOrIndefinite
from ilwe.matform import IlweInstance, assemble_instance, block_design
from ilwe.ring import round_vec, scalar_mul_vec
from ilwe.rng import CounterStream, stream_key
from ilwe.sampling import SamplerParams, YDist, generate_samples, sample_secret

BACKENDS = [_backend.fallback] + ([_backend.compiled] if _backend.compiled else [])


def random_samples(rng, n, k, m, noise=9, s=None):
    if s is None:
        s = rng.integers(-2, 3, (k, n))
    out = []
    for _ in range(m):
        c = rng.integers(-1, 2, n)
        y = rng.integers(-noise, noise + 1, (k, n)) if noise else np.zeros((k, n), dtype=np.int64)
        out.append((scalar_mul_vec(c, s) + y, c))
    return s, out


def accumulate(samples, n, k):
    acc = GramAccumulator(n, k)
    for smp in samples:
        absorb(acc, smp)
    return acc


# -- direct attacks ----------------------------------------------------------------

def test_lsm_direct_examples():
    s = np.array([3.0, -1.0, 2.0])
    assert lsm_direct(IlweInstance(np.eye(3), s)).s_tilde.tolist() == [3, -1, 2]
    rec = lsm_direct(IlweInstance([[1.0], [1.0]], [3.0, 5.0]))
    assert rec.s_hat == pytest.approx([4.0]) and rec.s_tilde.tolist() == [4]
    with pytest.raises(SingularOrIndefinite):
        lsm_direct(IlweInstance([[1.0, 1.0], [2.0, 2.0]], [1.0, 2.0]))


def test_svd_direct_examples():
    rec = svd_direct(IlweInstance(np.eye(2), [2.0, -1.0]))
    assert rec.s_tilde.tolist() == [2, -1]
    rec = svd_direct(IlweInstance(10 * np.eye(2), [0.0, 0.0]))
    assert rec.s_tilde.tolist() == [0, 0]
    with pytest.raises(DegenerateLastComponent):
        # b is orthogonal to a rank-deficient A: the null vector has no last component
        svd_direct(IlweInstance([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]], [1.0, -1.0, 0.0]))
    # fewer rows than unknowns still leaves a null vector to read off
    assert svd_direct(IlweInstance([[2.0]], [6.0])).s_tilde.tolist() == [3]


def test_noiseless_recovery_random_shapes():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        rows, d = int(rng.integers(2, 30)), int(rng.integers(1, 8))
        rows = max(rows, d + 1)
        A = rng.integers(-6, 7, (rows, d))
        if np.linalg.matrix_rank(A) < d:
            continue
        s = rng.integers(-9, 10, d)
        inst = IlweInstance(A, A @ s)
        assert lsm_direct(inst).s_tilde.tolist() == s.tolist()
        assert svd_direct(inst).s_tilde.tolist() == s.tolist()


# -- Gram accumulator ----------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(1, 3), st.integers(1, 25), st.integers(0, 2**32 - 1))
def test_gram_equals_sum_of_design_products(n, k, m, seed):
    rng = np.random.default_rng(seed)
    _, samples = random_samples(rng, n, k, m)
    acc = accumulate(samples, n, k)
    for sign in (1, -1):
        dense = sum(block_design(c, z, sign).T @ block_design(c, z, sign) for z, c in samples)
        assert np.array_equal(acc.gram(sign), dense)
    flipped = acc.gram(1)
    flipped[:-1, -1] *= -1
    flipped[-1, :-1] *= -1
    assert np.array_equal(acc.gram(-1), flipped)
    assert acc.count == m
    assert np.all(np.linalg.eigvalsh(acc.B) >= -1e-8 * max(1.0, np.abs(acc.B).max()))


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.NAME)
def test_batch_absorption_backends_agree(backend):
    rng = np.random.default_rng(3)
    n, k, m = 9, 2, 200
    _, samples = random_samples(rng, n, k, m)
    c = np.array([cc for _, cc in samples])
    z = np.array([zz for zz, _ in samples])
    ref = accumulate(samples, n, k)
    acc = GramAccumulator(n, k).absorb_batch(c, z, backend=backend)
    assert np.array_equal(acc.t, ref.t) and np.array_equal(acc.u, ref.u) and acc.zz == ref.zz


def test_absorb_zero_and_single_sample():
    acc = GramAccumulator(3, 2)
    absorb(acc, (np.zeros((2, 3)), np.zeros(3)))
    assert not acc.B.any() and acc.count == 1
    c, z = np.array([1, 0, -1]), np.array([[2, 0, 1], [0, -3, 4]])
    one = GramAccumulator(3, 2).absorb(z, c)
    D = block_design(c, z)
    assert np.array_equal(one.B, D.T @ D)


def test_merge_matches_sequential():
    rng = np.random.default_rng(4)
    _, samples = random_samples(rng, 5, 2, 40)
    a = accumulate(samples[:17], 5, 2)
    b = accumulate(samples[17:], 5, 2)
    assert np.array_equal(a.merge(b).B, accumulate(samples, 5, 2).B)
    assert a.merge(b).count == 40
    with pytest.raises(ParameterError):
        a.merge(GramAccumulator(5, 1))


def test_accumulator_shape_checks_and_overflow_guard():
    acc = GramAccumulator(4, 2)
    with pytest.raises(ParameterError):
        acc.absorb(np.zeros((1, 4)), np.zeros(4))
    with pytest.raises(ParameterError):
        GramAccumulator(0, 1)
    big = np.full((1, 2, 4), 2**31, dtype=np.int64)
    with pytest.raises(OverflowError):
        acc.absorb_batch(np.ones((1, 4), dtype=np.int64), big)


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    _, samples = random_samples(rng, 6, 2, 30)
    acc = accumulate(samples, 6, 2)
    path = tmp_path / "gram.txt"
    acc.save(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "gram 13 30" and len(lines) == 14 and len(lines[-1].split()) == 13
    back = GramAccumulator.load(path, 6)
    assert back.k == 2 and back.count == 30
    assert np.array_equal(back.B, acc.B)
    assert np.allclose(lsm_streaming(back).s_hat, lsm_streaming(acc).s_hat, rtol=0, atol=0)
    with pytest.raises(ParameterError):
        GramAccumulator.load(path, 5)
    lines[2] = "1 2"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParameterError):
        GramAccumulator.load(path, 6)


# -- streaming attacks ------------------------------------------------------------

def test_streaming_examples():
    s = np.array([[2, -1, 0]])
    acc = GramAccumulator(3, 1).absorb(s, [1, 0, 0])
    assert lsm_streaming(acc).s_tilde.tolist() == [2, -1, 0]
    with pytest.raises(SingularOrIndefinite):
        lsm_streaming(GramAccumulator(3, 1))
    with pytest.raises(DegenerateLastComponent):
        svd_streaming(GramAccumulator(3, 1))


@pytest.mark.parametrize("seed", range(50))
def test_streaming_equals_direct(seed):
    rng = np.random.default_rng(1000 + seed)
    n, k = int(rng.integers(1, 9)), int(rng.integers(1, 3))
    m = int(rng.integers(2, 101))
    _, samples = random_samples(rng, n, k, m, noise=int(rng.integers(0, 6)))
    inst = assemble_instance(samples)
    acc = accumulate(samples, n, k)
    try:
        direct = lsm_direct(inst)
    except SingularOrIndefinite:
        with pytest.raises(SingularOrIndefinite):
            lsm_streaming(acc)
    else:
        stream = lsm_streaming(acc)
        assert np.abs(direct.s_hat - stream.s_hat).max() <= 1e-8
    try:
        direct = svd_direct(inst)
        stream = svd_streaming(acc)
    except DegenerateLastComponent:
        return
    assert direct.s_tilde.tolist() == stream.s_tilde.tolist()
    assert np.abs(direct.s_hat - stream.s_hat).max() <= 1e-6 * max(1.0, np.abs(direct.s_hat).max())


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_streaming_noiseless_recovery(method):
    rng = np.random.default_rng(8)
    s, samples = random_samples(rng, 6, 2, 30, noise=0)
    acc = accumulate(samples, 6, 2)
    assert lsm_streaming(acc).s_tilde.tolist() == s.ravel().tolist()
    assert svd_streaming(acc, method=method).s_tilde.tolist() == s.ravel().tolist()


def test_rounding_stage_is_round_half_down():
    rng = np.random.default_rng(9)
    _, samples = random_samples(rng, 5, 1, 12, noise=20)
    rec = lsm_streaming(accumulate(samples, 5, 1))
    assert rec.s_tilde.tolist() == round_vec(rec.s_hat).tolist()


def test_streaming_recovers_signature_secret():
    p = SamplerParams(24, 1, 6, gamma=1, beta=-40, eta=1, y_dist=YDist("subgaussian", 4))
    s = sample_secret(p, CounterStream.from_seed(1, 1))
    batch = generate_samples(s, p, stream_key(1, 2), 3000)
    acc = GramAccumulator(24, 1).absorb_batch(batch.c, batch.z)
    assert lsm_streaming(acc).s_tilde.tolist() == s.ravel().tolist()


# -- sample complexity -------------------------------------------------------------

def test_bound_examples():
    c1, c2 = 2**8 * math.log(9), 2**9 * math.log(2)
    assert sample_complexity_bound(1, 1, 0, 1) == pytest.approx(4 * (c1 + c2))
    assert sample_complexity_bound(1, 1, 0, 1) == pytest.approx(3669.5234, abs=1e-3)
    first, _ = sample_complexity_bounds(2, 1, 0, 3)
    assert first == pytest.approx(16 * sample_complexity_bounds(1, 1, 0, 3)[0])
    _, second = sample_complexity_bounds(1, 2, 3, 1)
    assert second == pytest.approx(32 * 9 / 4 * math.log(2))
    e, two = sample_complexity_bounds(1, 1, 1, 4), sample_complexity_bounds(1, 1, 1, 4, log_base=2)
    assert two[0] == pytest.approx(e[0] / math.log(2))
    assert two[1] == pytest.approx(e[1] / math.log(2))


@pytest.mark.parametrize("kwargs", [dict(sigma_a=0), dict(k=0), dict(eta_conf=0.5), dict(tau_a=-1),
                                    dict(log_base=1)])
def test_bound_rejects_bad_parameters(kwargs):
    args = dict(tau_a=1, sigma_a=1, tau_e=0, k=1)
    args.update(kwargs)
    with pytest.raises(ParameterError):
        sample_complexity_bound(**args)


def test_evaluate():
    rep = evaluate([1, 0, 3], [0, 2, 3], m_used=10)
    assert (rep.l1_distance, rep.linf_distance, rep.weight_diff, rep.discarded) == (3, 2, 2, False)
    assert evaluate([0, 0], [1, 0]).discarded
    assert evaluate([1, -1], [1, -1]).l1_distance == 0
    with pytest.raises(ParameterError):
        evaluate([1], [1, 2])


@given(st.lists(st.tuples(st.integers(-9, 9), st.integers(-9, 9)), min_size=1, max_size=20))
def test_report_bound_chain(pairs):
    a, b = zip(*pairs)
    rep = evaluate(a, b)
    assert rep.linf_distance <= rep.l1_distance and rep.weight_diff <= rep.l1_distance
