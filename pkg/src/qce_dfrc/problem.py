"""Problem data: QCE alphabet, channels, symbols, CI rows and steering blocks.

Real-space conventions used throughout the package:

* a slot vector x_t in C^N is stored as ``[Re(x_t), Im(x_t)]`` (length 2N);
  a full waveform is an array of shape ``(T, 2N)``;
* the 2-vector of antenna n at slot t is ``(x[t, n], x[t, n + N])``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, SystemConfig


class InstanceError(ValueError):
    """Raised when problem data have inconsistent shapes."""


class DegeneratePatternError(ValueError):
    """Raised when the desired beampattern is identically zero."""


@dataclass(frozen=True)
class QceSet:
    """The QCE alphabet: L points of modulus ``eta`` at angles (2l-1)pi/L."""
    eta: float
    L: int

    @property
    def angles(self) -> np.ndarray:
        ell = np.arange(1, self.L + 1)
        return (2 * ell - 1) * np.pi / self.L

    @property
    def vertices(self) -> np.ndarray:
        """(L, 2) array of real vertex coordinates."""
        a = self.angles
        return self.eta * np.stack([np.cos(a), np.sin(a)], axis=1)

    @property
    def points(self) -> np.ndarray:
        """Complex alphabet values."""
        return self.eta * np.exp(1j * self.angles)


def build_qce_set(L: int, P: float, N: int) -> QceSet:
    if int(L) != L or L < 2:
        raise ConfigError("L must be an integer >= 2")
    if not P > 0:
        raise ConfigError("P must be positive")
    if int(N) != N or N < 1:
        raise ConfigError("N must be a positive integer")
    return QceSet(eta=float(np.sqrt(P / N)), L=int(L))


class RealWaveform:
    """Real-space waveform of shape (T, 2N) with per-antenna accessors."""

    def __init__(self, data):
        data = np.array(data, dtype=float)
        if data.ndim != 2 or data.shape[1] % 2:
            raise InstanceError("waveform must have shape (T, 2N)")
        self.data = data

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def N(self) -> int:
        return self.data.shape[1] // 2

    @property
    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def antenna(self, t: int, n: int) -> np.ndarray:
        return np.array([self.data[t, n], self.data[t, n + self.N]])

    def pairs(self) -> np.ndarray:
        """(T, N, 2) view of the per-antenna 2-vectors."""
        return pairs(self.data)

    def to_complex(self) -> np.ndarray:
        """Complex matrix X of shape (N, T)."""
        return to_complex(self.data)

    @classmethod
    def from_complex(cls, X) -> "RealWaveform":
        return cls(from_complex(X))

    def is_quantized(self, qce: QceSet, atol: float = 0.0) -> bool:
        p = self.pairs().reshape(-1, 2)
        d = np.min(np.linalg.norm(p[:, None, :] - qce.vertices[None], axis=2), axis=1)
        return bool(np.all(d <= atol))


def pairs(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    N = x.shape[1] // 2
    return np.stack([x[:, :N], x[:, N:]], axis=2)


def from_pairs(p: np.ndarray) -> np.ndarray:
    return np.concatenate([p[..., 0], p[..., 1]], axis=1)


def to_complex(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    N = x.shape[1] // 2
    return (x[:, :N] + 1j * x[:, N:]).T


def from_complex(X) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[:, None]
    return np.concatenate([X.real.T, X.imag.T], axis=1)


def as_waveform_array(X) -> np.ndarray:
    if isinstance(X, RealWaveform):
        return X.data
    return np.asarray(X, dtype=float)


def steering_vector(theta_deg: float, N: int) -> np.ndarray:
    """Half-wavelength ULA response; entry n is exp(j*pi*n*sin(theta))."""
    n = np.arange(N)
    return np.exp(1j * np.pi * n * np.sin(np.deg2rad(theta_deg)))


def build_steering_blocks(grid, N: int) -> np.ndarray:
    """Stack of real 2x2N blocks A_q, one per grid angle; shape (Q, 2, 2N).

    ``A_q @ [Re x; Im x] == [Re(a^H x), Im(a^H x)]``.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise InstanceError("grid must be nonempty")
    a = np.stack([steering_vector(th, N) for th in grid])  # (Q, N)
    top = np.concatenate([a.real, a.imag], axis=1)
    bot = np.concatenate([-a.imag, a.real], axis=1)
    return np.stack([top, bot], axis=1)


def desired_pattern(theta_deg, targets, width: float):
    """Indicator of the union of closed lobes [target - width/2, target + width/2]."""
    th = np.asarray(theta_deg, dtype=float)
    out = np.zeros(th.shape)
    half = width / 2.0
    for tgt in targets:
        # small slack so that float grids hit the inclusive boundary
        out[(th >= tgt - half - 1e-9) & (th <= tgt + half + 1e-9)] = 1.0
    return out if out.ndim else float(out)


def pattern_weights(d_samples) -> np.ndarray:
    d = np.asarray(d_samples, dtype=float)
    nrm = np.sqrt(np.sum(d**2))
    if nrm == 0:
        raise DegeneratePatternError("desired pattern is identically zero")
    return d / nrm


def ci_rows(h, s: complex, M: int) -> np.ndarray:
    """Two real CI rows (shape (2, 2N)) for channel row ``h`` and symbol ``s``.

    Row 0 evaluates alpha^A sin(Phi), row 1 alpha^B sin(Phi); each is the
    signed distance of h^T x to one decision boundary of ``s``.
    """
    h = np.atleast_1d(np.asarray(h, dtype=complex))
    sA = s * np.exp(-1j * np.pi / M)
    sB = s * np.exp(1j * np.pi / M)
    Hr = np.stack([
        np.concatenate([h.real, -h.imag]),
        np.concatenate([h.imag, h.real]),
    ])
    Ms = np.array([[sB.imag, -sB.real], [-sA.imag, sA.real]])
    return Ms @ Hr


def psk_constellation(M: int) -> np.ndarray:
    i = np.arange(M)
    return np.exp(1j * (2 * i + 1) * np.pi / M)


def generate_channel(rng: np.random.Generator, K: int, N: int) -> np.ndarray:
    """i.i.d. CN(0, 1) channel of shape (K, N)."""
    re = rng.standard_normal((K, N))
    im = rng.standard_normal((K, N))
    return (re + 1j * im) / np.sqrt(2.0)


def generate_symbols(rng: np.random.Generator, K: int, T: int, M: int) -> np.ndarray:
    if M < 2:
        raise ConfigError("M must be >= 2")
    idx = rng.integers(0, M, size=(K, T))
    return psk_constellation(M)[idx]


@dataclass(frozen=True, eq=False)
class Instance:
    """One concrete design problem in real form.

    Attributes
    ----------
    H : (K, N) complex channel
    S : (K, T) complex PSK symbols
    C : (T, 2K, 2N) CI constraint matrices
    b : (T, 2K) thresholds, duplicated per row pair
    A : (Q, 2, 2N) steering blocks
    c : (Q,) pattern weights with unit 2-norm
    d : (Q,) desired pattern samples
    """
    H: np.ndarray
    S: np.ndarray
    C: np.ndarray
    b: np.ndarray
    A: np.ndarray
    c: np.ndarray
    d: np.ndarray
    grid: np.ndarray
    qce: QceSet
    M: int
    obj_scale: float = 1.0

    @property
    def N(self) -> int:
        return self.H.shape[1]

    @property
    def K(self) -> int:
        return self.H.shape[0]

    @property
    def T(self) -> int:
        return self.S.shape[1]

    @property
    def Q(self) -> int:
        return self.A.shape[0]

    @property
    def A_stack(self) -> np.ndarray:
        """The (2Q, 2N) matrix stacking all A_q."""
        return self.A.reshape(2 * self.Q, 2 * self.N)

    @property
    def b_vec(self) -> np.ndarray:
        return self.b.reshape(-1)


def assemble_instance(cfg: SystemConfig, H, S, b=None) -> Instance:
    """Build an :class:`Instance` from a config, channel and symbols.

    ``b`` may override the uniform threshold with a (K, T) array.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    S = np.atleast_2d(np.asarray(S, dtype=complex))
    K, N, T, M = cfg.n_users, cfg.n_antennas, cfg.block_len, cfg.psk_order
    if H.shape != (K, N):
        raise InstanceError(f"H has shape {H.shape}, expected {(K, N)}")
    if S.shape != (K, T):
        raise InstanceError(f"S has shape {S.shape}, expected {(K, T)}")
    if not np.allclose(np.abs(S), 1.0, atol=1e-12):
        raise InstanceError("symbols must have unit modulus")

    C = np.empty((T, 2 * K, 2 * N))
    for t in range(T):
        for k in range(K):
            C[t, 2 * k:2 * k + 2] = ci_rows(H[k], S[k, t], M)
    if b is None:
        bkt = np.full((K, T), float(cfg.margin_threshold))
    else:
        bkt = np.broadcast_to(np.asarray(b, dtype=float), (K, T))
    bvec = np.repeat(bkt.T, 2, axis=1)  # (T, 2K)

    grid = np.asarray(cfg.grid, dtype=float)
    d = desired_pattern(grid, cfg.target_angles, cfg.beam_width)
    c = pattern_weights(d)
    A = build_steering_blocks(grid, N)
    qce = build_qce_set(cfg.quant_levels, cfg.power, N)
    scale = cfg.objective_scale
    if scale is None:
        scale = default_objective_scale(grid.size, T)
    return Instance(H=H, S=S, C=C, b=bvec, A=A, c=c, d=np.asarray(d), grid=grid,
                    qce=qce, M=M, obj_scale=float(scale))


def default_objective_scale(Q: int, T: int) -> float:
    """1 / (Q T^2): the weight that makes f + g equal the beampattern MSE at
    the optimal alpha."""
    return 1.0 / (Q * T**2)


def make_instance(cfg: SystemConfig, seed: int | None = None) -> Instance:
    """Draw channel then symbols from one seeded generator and assemble."""
    rng = np.random.default_rng(cfg.rng_seed if seed is None else seed)
    H = generate_channel(rng, cfg.n_users, cfg.n_antennas)
    S = generate_symbols(rng, cfg.n_users, cfg.block_len, cfg.psk_order)
    return assemble_instance(cfg, H, S)
