import dataclasses
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qce_dfrc.config import SystemConfig
from qce_dfrc.metrics import (beampattern, beampattern_mse, detect_psk, evaluate_beampattern,
                              gaussian_tail, optimal_alpha, safety_margins, sep_bounds,
                              simulate_ser)
from qce_dfrc.problem import (DegeneratePatternError, RealWaveform, assemble_instance,
                              from_complex, make_instance, steering_vector)

from conftest import golden_min, small_config

# Gaussian tail values from 30-digit mpmath evaluation of erfc
Q_FROZEN = {0.5: 0.30853753872598689636, 1.0: 0.15865525393145705141,
            2.0: 0.0227501319481792072, 4.0: 0.000031671241833119921254,
            8.0: 6.2209605742717841235e-16}
SEP_UPPER_D08_SNR10 = 0.000346619351134666975


def random_waveform(inst, r):
    return r.standard_normal((inst.T, 2 * inst.N)) * inst.qce.eta


def test_beampattern_coherent_example():
    cfg = SystemConfig(n_antennas=4, n_users=1, block_len=3, grid=[-20.0, 0.0, 20.0],
                       target_angles=[0.0], beam_width=2.0)
    inst = make_instance(cfg, seed=0)
    x = inst.qce.eta * steering_vector(20.0, 4)
    X = from_complex(np.tile(x[:, None], (1, 3)))
    assert beampattern(X, inst)[2] == pytest.approx(4.0)


def test_beampattern_matches_complex(small_inst, rng):
    X = random_waveform(small_inst, rng)
    Z = RealWaveform(X).to_complex()
    ref = [np.mean(np.abs(steering_vector(th, small_inst.N).conj() @ Z) ** 2) for th in small_inst.grid]
    np.testing.assert_allclose(beampattern(X, small_inst), ref, atol=1e-10)
    assert np.all(beampattern(X, small_inst) >= 0)


def test_optimal_alpha_examples():
    cfg = SystemConfig(n_antennas=1, n_users=1, block_len=1, grid=[0.0], target_angles=[0.0],
                       beam_width=1.0)
    inst = make_instance(cfg, seed=0)
    assert optimal_alpha([[1.0, 0.0]], inst) == pytest.approx(1.0)
    assert optimal_alpha(np.zeros((1, 2)), inst) == 0.0
    bad = dataclasses.replace(inst, d=np.zeros(1))
    with pytest.raises(DegeneratePatternError):
        optimal_alpha([[1.0, 0.0]], bad)


def test_alpha_minimises_mse(small_inst, rng):
    X = random_waveform(small_inst, rng)
    P = beampattern(X, small_inst)
    d = small_inst.d
    mse = lambda a: np.mean((a * d - P) ** 2)
    Pm, dm = [mp.mpf(v) for v in P], [mp.mpf(v) for v in d]
    mse_hp = lambda a: sum((a * di - pi) ** 2 for di, pi in zip(dm, Pm))
    ref = golden_min(mse_hp, 0.0, 10 * P.max())
    assert optimal_alpha(X, small_inst) == pytest.approx(ref, abs=1e-9)
    best = beampattern_mse(X, small_inst)
    assert best == pytest.approx(mse(optimal_alpha(X, small_inst)))
    for a in rng.uniform(0, 3 * P.max(), 100):
        assert best <= mse(a) + 1e-15


def test_mse_zero_cases(small_inst):
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        assert beampattern_mse(np.zeros((small_inst.T, 2 * small_inst.N)), small_inst) == 0.0
    assert rec
    P = 2.5 * small_inst.d
    assert beampattern_mse(None, small_inst, power=P) == pytest.approx(0.0, abs=1e-24)


def test_mse_equals_scaled_quartic(small_inst, rng):
    from qce_dfrc.bsum import apply_A, f_value, g_value
    X = random_waveform(small_inst, rng)
    w = apply_A(small_inst, X)
    k = 1.0 / (small_inst.Q * small_inst.T**2)
    # f + g is the MSE at alpha* up to the 1/(Q T^2) factor and the ||d|| normalisation
    dd = small_inst.d @ small_inst.d
    expected = f_value(w, k) + g_value(w, small_inst.c, k)
    assert beampattern_mse(X, small_inst) == pytest.approx(expected, rel=1e-10)
    assert dd > 0


@given(st.integers(0, 2**31), st.floats(0, 2 * np.pi))
@settings(max_examples=25, deadline=None)
def test_phase_rotation_invariance(seed, phi):
    inst = make_instance(small_config(n_antennas=4, block_len=3), seed=1)
    r = np.random.default_rng(seed)
    Z = r.standard_normal((4, 3)) + 1j * r.standard_normal((4, 3))
    per_slot = np.exp(1j * r.uniform(0, 2 * np.pi, 3))
    P0 = beampattern(from_complex(Z), inst)
    np.testing.assert_allclose(beampattern(from_complex(Z * np.exp(1j * phi)), inst), P0, atol=1e-12)
    np.testing.assert_allclose(beampattern(from_complex(Z * per_slot), inst), P0, atol=1e-12)
    assert beampattern_mse(from_complex(Z * np.exp(1j * phi)), inst) == pytest.approx(
        beampattern_mse(from_complex(Z), inst), rel=1e-10, abs=1e-14)


def single_user(h, s, N=1):
    cfg = SystemConfig(n_antennas=N, n_users=1, block_len=1, margin_threshold=0.0)
    return assemble_instance(cfg, [h], [[s]])


def test_margin_examples():
    s = np.exp(1j * np.pi / 4)
    inst = single_user([1.0], s)
    assert safety_margins([[0.3, 0.9]], inst)[0, 0] == pytest.approx(0.3)
    # received signal c*s for c > 0
    for sym in np.exp(1j * np.array([1, 3, 5, 7]) * np.pi / 4):
        inst = single_user([1.0], sym)
        y = 2.0 * sym
        assert safety_margins([[y.real, y.imag]], inst)[0, 0] == pytest.approx(2.0 * np.sin(np.pi / 4))


def test_sep_bounds_values():
    assert sep_bounds(0.0, 1.0) == (0.5, 1.0)
    lo, hi = sep_bounds(0.8, np.sqrt(0.1))
    assert hi == pytest.approx(SEP_UPPER_D08_SNR10, rel=1e-12)
    assert lo == pytest.approx(SEP_UPPER_D08_SNR10 / 2, rel=1e-12)
    for x, q in Q_FROZEN.items():
        assert gaussian_tail(x) == pytest.approx(q, rel=1e-12)
    d = np.linspace(0, 3, 50)
    lo, hi = sep_bounds(d, 0.4)
    assert np.all(np.diff(lo) <= 0) and np.all(np.diff(hi) <= 0)
    with pytest.raises(ValueError):
        sep_bounds(0.1, 0.0)


def test_detect_psk():
    pts = np.exp(1j * (2 * np.arange(8) + 1) * np.pi / 8)
    np.testing.assert_array_equal(detect_psk(pts, 8), np.arange(8))


def test_ser_limits(small_inst):
    X = np.zeros((small_inst.T, 2 * small_inst.N))
    ser = simulate_ser(X, small_inst, 1.0, n_trials=4000, seed=3)
    p = (small_inst.M - 1) / small_inst.M
    n = 4000 * small_inst.K * small_inst.T
    assert abs(ser - p) <= 3 * np.sqrt(p * (1 - p) / n)
    inst = single_user([1.0], np.exp(1j * np.pi / 4))
    assert simulate_ser([[0.5, 0.5]], inst, 1e-6, n_trials=500, seed=0) == 0.0


def test_ser_deterministic_and_chunk_keyed(small_inst, rng):
    X = random_waveform(small_inst, rng)
    a = simulate_ser(X, small_inst, 0.5, n_trials=2500, seed=11)
    assert a == simulate_ser(X, small_inst, 0.5, n_trials=2500, seed=11)
    with pytest.raises(ValueError):
        simulate_ser(X, small_inst, 0.5, n_trials=0)


def test_ser_below_upper_bound_at_min_margin():
    cfg = SystemConfig(n_antennas=1, n_users=1, block_len=1)
    inst = assemble_instance(cfg, [[1.0]], [[np.exp(1j * np.pi / 4)]])
    X = [[0.6, 0.8]]
    sigma = 0.5
    dmin = safety_margins(X, inst).min()
    lo, hi = sep_bounds(dmin, sigma)
    n = 20000
    ser = simulate_ser(X, inst, sigma, n_trials=n, seed=5)
    assert ser <= hi + 3 * np.sqrt(hi * (1 - hi) / n)
    assert ser >= lo - 3 * np.sqrt(lo * (1 - lo) / n)


def test_evaluate_beampattern(small_inst, rng):
    X = random_waveform(small_inst, rng)
    res = evaluate_beampattern(X, small_inst)
    assert res.mse >= 0 and np.all(res.power >= 0)
    assert res.power_db.shape == res.power.shape
