import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qce_dfrc.config import ConfigError, SystemConfig, default_grid
from qce_dfrc.problem import (DegeneratePatternError, InstanceError, RealWaveform,
                              assemble_instance, build_qce_set, build_steering_blocks,
                              ci_rows, desired_pattern, generate_channel, generate_symbols,
                              make_instance, pattern_weights, psk_constellation,
                              steering_vector)

from conftest import small_config


def test_qce_set_basic():
    q = build_qce_set(4, 1.0, 1)
    assert q.eta == 1.0
    np.testing.assert_allclose(np.rad2deg(q.angles), [45, 135, 225, 315])
    assert build_qce_set(4, 1.0, 64).eta == 0.125
    np.testing.assert_allclose(build_qce_set(2, 1.0, 1).vertices, [[0, 1], [0, -1]], atol=1e-15)


@pytest.mark.parametrize("args", [(1, 1.0, 1), (4, 0.0, 1), (4, 1.0, 0), (2.5, 1.0, 1)])
def test_qce_set_rejects(args):
    with pytest.raises(ConfigError):
        build_qce_set(*args)


@given(st.integers(2, 64), st.floats(0.01, 100), st.integers(1, 128))
def test_qce_vertices_on_circle(L, P, N):
    q = build_qce_set(L, P, N)
    np.testing.assert_allclose(np.linalg.norm(q.vertices, axis=1), q.eta, rtol=1e-15)
    assert np.all(np.diff(q.angles) > 0)


def test_steering_vector():
    np.testing.assert_allclose(steering_vector(0.0, 4), np.ones(4))
    np.testing.assert_allclose(steering_vector(90.0, 2), [1, -1], atol=1e-15)
    assert np.isclose(np.linalg.norm(steering_vector(23.0, 9)) ** 2, 9)


def test_steering_blocks_structure(rng):
    A = build_steering_blocks([0.0], 1)
    np.testing.assert_allclose(A[0], np.eye(2))
    grid = np.linspace(-80, 80, 17)
    A = build_steering_blocks(grid, 6)
    for Aq in A:
        np.testing.assert_allclose(Aq @ Aq.T, 6 * np.eye(2), atol=1e-12)
    x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    xr = np.concatenate([x.real, x.imag])
    for th, Aq in zip(grid, A):
        a = steering_vector(th, 6)
        assert abs(np.sum((Aq @ xr) ** 2) - abs(np.vdot(a, x)) ** 2) <= 1e-12 * (1 + abs(np.vdot(a, x)) ** 2)


def test_desired_pattern_and_weights():
    assert desired_pattern(0.0, [-40, 0, 40], 10) == 1.0
    assert desired_pattern(45.0, [-40, 0, 40], 10) == 1.0
    assert desired_pattern(50.0, [-40, 0, 40], 10) == 0.0
    np.testing.assert_allclose(pattern_weights([1, 0, 0, 1]), [0.70710678, 0, 0, 0.70710678], atol=1e-8)
    with pytest.raises(DegeneratePatternError):
        pattern_weights([0, 0, 0])
    c = pattern_weights(desired_pattern(np.array(default_grid()), [-40, 0, 40], 10))
    assert len(c) == 181 and np.count_nonzero(c) == 33
    np.testing.assert_allclose(c[c > 0], 1 / np.sqrt(33))
    assert abs(np.sum(c**2) - 1) < 1e-12


def test_ci_rows_examples():
    s = np.exp(1j * np.pi / 4)
    np.testing.assert_allclose(ci_rows([1.0], s, 4), [[1, 0], [0, 1]], atol=1e-15)
    np.testing.assert_allclose(ci_rows([1j], s, 4), [[0, -1], [1, 0]], atol=1e-15)
    np.testing.assert_array_equal(ci_rows([0, 0], s, 8), np.zeros((2, 4)))


def _geometric_margin(y, s, M):
    # distance of y to the two rays bounding the decision sector of s,
    # computed from line distances rather than the rotated form
    out = []
    for sign in (-1, 1):
        u = s * np.exp(1j * sign * np.pi / M)          # boundary direction
        n = u * np.exp(-1j * sign * np.pi / 2)         # normal pointing into the sector
        out.append(y.real * n.real + y.imag * n.imag)
    return min(out)


@given(st.integers(1, 6), st.sampled_from([2, 4, 8, 16]), st.integers(0, 2**31 - 1))
@settings(max_examples=60)
def test_ci_rows_margin_property(N, M, seed):
    r = np.random.default_rng(seed)
    h = r.standard_normal(N) + 1j * r.standard_normal(N)
    s = psk_constellation(M)[r.integers(M)]
    x = r.standard_normal(N) + 1j * r.standard_normal(N)
    rows = ci_rows(h, s, M)
    xr = np.concatenate([x.real, x.imag])
    y = h @ x
    assert abs(np.min(rows @ xr) - _geometric_margin(y, s, M)) <= 1e-9 * (1 + abs(y))


def test_assemble_shapes_and_errors():
    cfg = small_config(n_users=1, block_len=1, margin_threshold=0.0)
    inst = make_instance(cfg, seed=1)
    assert inst.C.shape == (1, 2, 16) and inst.b_vec.shape == (2,)
    assert not np.any(inst.b_vec)
    assert make_instance(SystemConfig(n_antennas=4, n_users=1, block_len=2)).Q == 181
    with pytest.raises(InstanceError):
        assemble_instance(cfg, np.zeros((2, 8)), np.ones((1, 1)))
    with pytest.raises(InstanceError):
        assemble_instance(cfg, np.zeros((1, 8)), 2 * np.ones((1, 1)))


def test_channel_and_symbols():
    H1 = generate_channel(np.random.default_rng(3), 3, 5)
    H2 = generate_channel(np.random.default_rng(3), 3, 5)
    np.testing.assert_array_equal(H1, H2)
    assert H1.shape == (3, 5)
    big = generate_channel(np.random.default_rng(0), 100, 1000)
    assert 0.98 <= np.mean(np.abs(big) ** 2) <= 1.02
    S = generate_symbols(np.random.default_rng(0), 4, 50, 4)
    pts = np.exp(1j * np.array([1, 3, 5, 7]) * np.pi / 4)
    assert np.all(np.min(np.abs(S[..., None] - pts), axis=-1) < 1e-15)
    np.testing.assert_allclose(np.abs(S), 1)


def test_real_waveform_roundtrip(rng):
    Z = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    X = RealWaveform.from_complex(Z)
    assert X.T == 5 and X.N == 3 and X.flat.size == 30
    np.testing.assert_array_equal(X.to_complex(), Z)
    np.testing.assert_array_equal(X.antenna(2, 1), [Z[1, 2].real, Z[1, 2].imag])


@pytest.mark.parametrize("kw", [dict(n_antennas=0), dict(psk_order=6), dict(quant_levels=1),
                                dict(power=0.0), dict(beam_width=0.0), dict(grid=[0.0, 0.0]),
                                dict(grid=[-100.0, 0.0]), dict(margin_threshold=-1.0)])
def test_system_config_validation(kw):
    with pytest.raises(ConfigError):
        SystemConfig(**kw)
