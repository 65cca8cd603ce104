import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasiperiodic import run
from quasiperiodic.engine import BitSequence, Network, NeuronInstance, OscillatorSpec
from quasiperiodic.experiments import draw_fan_in, fan_in_network
from quasiperiodic.fsm import constant_fsm
from quasiperiodic.stats import (
    ZeroVarianceError,
    align_sequences,
    autocorrelation,
    crosscorrelation,
    empirical_activation,
    null_band,
    total_variation,
)

N_BITS = 150_000


def periodic_sequence(freq, duration, phase=1.0, bits=None):
    k = np.arange(int(np.floor(duration * freq - phase)) + 1)
    t = (phase + k) / freq
    b = np.zeros(t.size, dtype=np.int8) if bits is None else bits(t.size)
    return BitSequence(t, b)


def test_empirical_activation_examples():
    assert empirical_activation(np.ones(10)) == 1.0
    assert empirical_activation(np.arange(10) % 2) == 0.5
    with pytest.raises(ValueError):
        empirical_activation([])


def test_autocorrelation_lag_zero_is_one():
    rng = np.random.default_rng(0)
    r = autocorrelation(rng.integers(0, 2, 1000), 10)
    assert r.at(0) == pytest.approx(1.0)
    assert np.all(np.abs(r.r) <= 1.0)


def test_autocorrelation_matches_direct_formula():
    x = np.array([1, 0, 0, 1, 1, 1, 0, 1, 0, 0], dtype=float)
    c = x - x.mean()
    expected = [np.sum(c[: x.size - k] * c[k:]) / np.sum(c * c) for k in range(4)]
    np.testing.assert_allclose(autocorrelation(x, 3).r, expected)


def test_fair_coin_within_null():
    bits = np.random.default_rng(12345).integers(0, 2, N_BITS)
    r = autocorrelation(bits, 100)
    assert np.abs(r.r[1:]).max() < 0.01
    assert r.band == pytest.approx(3 / np.sqrt(N_BITS))


def test_independent_coins_cross_within_null():
    rng = np.random.default_rng(99)
    a, b = rng.integers(0, 2, (2, N_BITS))
    r = crosscorrelation(a, b, 100, align=False)
    assert np.abs(r.r).max() < 0.01


def test_constant_flagged():
    with pytest.raises(ZeroVarianceError):
        autocorrelation(np.ones(50), 3)
    with pytest.raises(ZeroVarianceError):
        crosscorrelation(np.ones(50), np.arange(50) % 2, 3, align=False)


def test_max_lag_checked():
    with pytest.raises(ValueError):
        autocorrelation(np.arange(5) % 2, 5)


def test_periodic_target_exceeds_null_band():
    n = 100
    f, ph = draw_fan_in(0, 99, 0, n + 1)
    net = fan_in_network(3, n, n // 2, f, ph)
    tr = run(net, events=N_BITS, events_of=n, record=[n])
    r = autocorrelation(tr.bit, 100)
    assert (np.abs(r.r[1:]) > r.band).any()


def test_align_identical_is_identity():
    seq = periodic_sequence(45.0, 5.0, bits=lambda m: np.arange(m) % 3 == 0)
    a, b = align_sequences(seq, seq)
    np.testing.assert_array_equal(a, seq.bits)
    np.testing.assert_array_equal(b, seq.bits)


def test_align_small_shift_index_to_index():
    rng = np.random.default_rng(1)
    a = periodic_sequence(45.0, 5.0, bits=lambda m: rng.integers(0, 2, m))
    b = BitSequence(a.times + 1e-6, rng.integers(0, 2, a.times.size))
    ba, bb = align_sequences(a, b)
    np.testing.assert_array_equal(ba, a.bits)
    np.testing.assert_array_equal(bb, b.bits)


def brute_force_pairs(ts, tl):
    # nearest neighbour, ties to the earlier event
    return np.array([min(range(tl.size), key=lambda j: (abs(tl[j] - t), tl[j])) for t in ts])


def test_align_45_vs_40_hz():
    a = periodic_sequence(45.0, 10.0, bits=lambda m: np.arange(m) % 2)
    b = periodic_sequence(40.0, 10.0, bits=lambda m: np.arange(m) % 2)
    ba, bb = align_sequences(a, b)
    assert ba.size == bb.size == 400
    idx = brute_force_pairs(b.times, a.times)
    assert np.abs(a.times[idx] - b.times).max() <= 0.0125
    np.testing.assert_array_equal(ba, a.bits[idx])
    np.testing.assert_array_equal(bb, b.bits)


def test_align_tie_goes_to_earlier():
    long_ = BitSequence(np.array([1.0, 2.0, 3.0]), np.array([0, 1, 0]))
    short = BitSequence(np.array([1.5, 2.5]), np.array([1, 1]))
    bl, bs = align_sequences(long_, short)
    np.testing.assert_array_equal(bl, [0, 1])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 40))
def test_align_order_insensitive(seed, na, nb):
    rng = np.random.default_rng(seed)
    a = BitSequence(np.sort(rng.random(na)), rng.integers(0, 2, na))
    b = BitSequence(np.sort(rng.random(nb)), rng.integers(0, 2, nb))
    x1, y1 = align_sequences(a, b)
    y2, x2 = align_sequences(b, a)
    np.testing.assert_array_equal(x1, x2)
    np.testing.assert_array_equal(y1, y2)
    assert x1.size == min(na, nb)


def test_cross_with_self_is_one_at_zero():
    rng = np.random.default_rng(3)
    seq = periodic_sequence(41.0, 100.0, bits=lambda m: rng.integers(0, 2, m))
    r = crosscorrelation(seq, seq, 5)
    assert r.at(0) == pytest.approx(1.0)


def test_cross_lag_direction():
    rng = np.random.default_rng(4)
    x = rng.integers(0, 2, 5000).astype(float)
    y = np.roll(x, 3)  # y[t + 3] == x[t]
    r = crosscorrelation(x, y, 5, align=False)
    assert r.lags[np.argmax(r.r)] == 3
    assert r.at(3) == pytest.approx(1.0, abs=1e-2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_correlations_bounded(seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, 300)
    b = np.where(rng.random(300) < 0.3, a, rng.integers(0, 2, 300))
    if a.min() == a.max() or b.min() == b.max():
        return
    for r in (autocorrelation(a, 20).r, crosscorrelation(a, b, 20, align=False).r):
        assert np.all(np.abs(r) <= 1.0 + 1e-12)


def test_series_csv():
    r = autocorrelation(np.array([0, 1, 1, 0, 1, 0, 0, 1]), 2)
    lines = r.to_csv().splitlines()
    assert lines[0] == f"# n=8 null_band={null_band(8):.17g}"
    assert lines[1] == "lag,r"
    assert lines[2] == "0,1"
    assert len(lines) == 5


def test_total_variation():
    assert total_variation([0.5, 0.5], [1.0, 0.0]) == 0.5
    assert total_variation([0.2, 0.8], [0.2, 0.8]) == 0.0


def test_sequence_from_trace():
    net = Network([NeuronInstance(0, constant_fsm(1), (OscillatorSpec(40.0),)),
                   NeuronInstance(1, constant_fsm(0), (OscillatorSpec(45.0),))])
    tr = run(net, duration=10.0)
    a, b = align_sequences(tr.sequence(0), tr.sequence(1))
    assert a.size == 400 and set(a.tolist()) == {1} and set(b.tolist()) == {0}
