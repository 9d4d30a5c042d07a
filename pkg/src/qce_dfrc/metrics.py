"""Evaluation: beampattern, MSE at the optimal scale, margins, SEP bounds, SER."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .problem import DegeneratePatternError, Instance, as_waveform_array, to_complex


@dataclass
class BeampatternResult:
    theta_deg: np.ndarray
    power: np.ndarray
    alpha_star: float
    mse: float

    @property
    def power_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.power)


def beampattern(X, inst: Instance) -> np.ndarray:
    """P(theta_q) = (1/T) sum_t ||A_q x_t||^2, shape (Q,)."""
    x = as_waveform_array(X)
    Ax = np.einsum("qin,tn->tqi", inst.A, x)
    return np.einsum("tqi,tqi->q", Ax, Ax) / x.shape[0]


def optimal_alpha(X, inst: Instance, power: np.ndarray | None = None) -> float:
    d = np.asarray(inst.d, dtype=float)
    dd = float(d @ d)
    if dd == 0:
        raise DegeneratePatternError("desired pattern is identically zero")
    P = beampattern(X, inst) if power is None else power
    return float(d @ P) / dd


def beampattern_mse(X, inst: Instance, power: np.ndarray | None = None) -> float:
    """(1/Q) sum_q (alpha* d_q - P_q)^2."""
    P = beampattern(X, inst) if power is None else power
    if not np.any(P):
        warnings.warn("waveform radiates no power", RuntimeWarning, stacklevel=2)
    alpha = optimal_alpha(X, inst, P)
    r = alpha * inst.d - P
    return float(r @ r) / P.size


def evaluate_beampattern(X, inst: Instance) -> BeampatternResult:
    P = beampattern(X, inst)
    return BeampatternResult(theta_deg=inst.grid.copy(), power=P,
                             alpha_star=optimal_alpha(X, inst, P),
                             mse=beampattern_mse(X, inst, P))


def safety_margins(X, inst: Instance) -> np.ndarray:
    """Per-(t, k) margin: the smaller of the two CI row values, shape (T, K)."""
    x = as_waveform_array(X)
    cx = np.einsum("tkn,tn->tk", inst.C, x)
    return np.minimum(cx[:, 0::2], cx[:, 1::2])


def gaussian_tail(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def sep_bounds(margin, sigma: float):
    """(Q(sqrt2 d / sigma), min(1, 2 Q(sqrt2 d / sigma)))."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    d = np.asarray(margin, dtype=float)
    if np.any(d < 0):
        raise ValueError("margin must be nonnegative")
    q = gaussian_tail(math.sqrt(2.0) * d / sigma)
    lo, hi = q, np.minimum(1.0, 2.0 * q)
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


def detect_psk(y, M: int) -> np.ndarray:
    """Nearest-phase decision; symbol i sits at (2i+1)pi/M."""
    ang = np.mod(np.angle(y), 2 * np.pi)
    return np.floor(ang / (2 * np.pi / M)).astype(int) % M


def _stream(seed, chunk: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(chunk)])


def simulate_ser(X, inst: Instance, sigma: float, n_trials: int = 10_000, seed: int = 0,
                 chunk: int = 1000) -> float:
    """Monte Carlo symbol error rate over K*T*n_trials decisions.

    Trials are drawn in fixed-size chunks, each from its own generator keyed
    by ``(seed, chunk index)``, so the result does not depend on how the
    chunks are scheduled.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    Y = inst.H @ to_complex(as_waveform_array(X))          # (K, T)
    truth = detect_psk(inst.S, inst.M)
    errors = 0
    for j, start in enumerate(range(0, n_trials, chunk)):
        n = min(chunk, n_trials - start)
        rng = _stream(seed, j)
        noise = rng.standard_normal((n, 2) + Y.shape) * (sigma / math.sqrt(2.0))
        det = detect_psk(Y[None] + noise[:, 0] + 1j * noise[:, 1], inst.M)
        errors += int(np.count_nonzero(det != truth[None]))
    return errors / (n_trials * Y.size)
