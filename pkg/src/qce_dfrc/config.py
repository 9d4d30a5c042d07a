"""Configuration dataclasses for the QCE DFRC waveform designer."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Raised for invalid scenario or solver parameters."""


def default_grid() -> list[float]:
    # -90..90 deg inclusive, 1 deg resolution (Q = 181)
    return [float(v) for v in np.arange(-90, 91, 1)]


@dataclass
class SystemConfig:
    """Scenario scalars for one design problem.

    Angles are in degrees. ``margin_threshold`` is the uniform safety-margin
    threshold b applied to every (t, k) pair.
    """
    n_antennas: int = 64          # N
    n_users: int = 4              # K
    block_len: int = 50           # T
    psk_order: int = 4            # M
    quant_levels: int = 4         # L
    power: float = 1.0            # P, total per-slot power
    snr_db: float = 10.0
    margin_threshold: float = 0.6  # b
    target_angles: list[float] = field(default_factory=lambda: [-40.0, 0.0, 40.0])
    beam_width: float = 10.0      # delta theta
    grid: list[float] = field(default_factory=default_grid)
    rng_seed: int = 0
    objective_scale: float | None = None  # None -> 1 / (Q T^2)

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("n_antennas", "n_users", "block_len"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        m = int(self.psk_order)
        if m < 2 or (m & (m - 1)) != 0:
            raise ConfigError("psk_order must be a power of 2 and >= 2")
        if int(self.quant_levels) < 2:
            raise ConfigError("quant_levels must be >= 2")
        if not self.power > 0:
            raise ConfigError("power must be positive")
        if self.margin_threshold < 0:
            raise ConfigError("margin_threshold must be nonnegative")
        if not self.beam_width > 0:
            raise ConfigError("beam_width must be positive")
        g = np.asarray(self.grid, dtype=float)
        if g.size == 0 or np.any(np.diff(g) <= 0):
            raise ConfigError("grid must be nonempty and strictly increasing")
        if g[0] < -90 or g[-1] > 90:
            raise ConfigError("grid angles must lie in [-90, 90] degrees")
        if self.objective_scale is not None and not self.objective_scale > 0:
            raise ConfigError("objective_scale must be positive")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be unsigned")

    @property
    def noise_std(self) -> float:
        """Noise standard deviation with SNR defined as 1/sigma^2."""
        return math.sqrt(10.0 ** (-self.snr_db / 10.0))


@dataclass
class AlmParams:
    """Inexact ALM settings.

    ``rho_mu0``/``rho_nu0`` left as ``None`` are derived per homotopy stage
    from lambda as 0.01*sqrt(lambda) and one third of that.
    """
    rho_mu0: float | None = None
    rho_nu0: float | None = None
    rho_scale: float = 0.01
    rho_ratio: float = 1.0 / 3.0   # rho_nu / rho_mu
    mu_bounds: tuple[float, float] = (-1e3, 1e3)
    nu_bounds: tuple[float, float] = (-1e3, 1e3)
    tau: float = 1.01
    delta: float = 0.95
    eps_scale: float = 1.0         # eps_m = eps_scale / m
    max_outer: int = 500
    stop_tol: float | None = None  # None -> sqrt(T) * 1e-3
    max_inner: int = 200
    check_descent: bool = False
    reset_multipliers: bool = False
    carry_penalties: bool = True   # warm stages start from max(rho0(lambda), previous rho)

    def __post_init__(self):
        if not self.tau > 1:
            raise ConfigError("tau must exceed 1")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ConfigError("iteration caps must be positive")
        if not self.eps_scale > 0:
            raise ConfigError("eps_scale must be positive")
        for lo, hi in (self.mu_bounds, self.nu_bounds):
            if not lo < hi:
                raise ConfigError("multiplier bounds must satisfy lo < hi")

    def eps(self, m: int) -> float:
        return self.eps_scale / m

    def initial_penalties(self, lam: float) -> tuple[float, float]:
        rho_mu = self.rho_mu0 if self.rho_mu0 is not None else self.rho_scale * math.sqrt(lam)
        rho_nu = self.rho_nu0 if self.rho_nu0 is not None else self.rho_ratio * rho_mu
        if not (rho_mu > 0 and rho_nu > 0):
            raise ConfigError("initial penalties must be positive (lambda > 0 or explicit rho)")
        return rho_mu, rho_nu

    def tolerance(self, block_len: int) -> float:
        return self.stop_tol if self.stop_tol is not None else math.sqrt(block_len) * 1e-3


@dataclass
class HomotopyParams:
    """Schedule for the negative-square penalty weight lambda."""
    lambda0: float = 1e-3
    growth: float = 3.0
    vertex_tol: float = 1e-3   # fraction of eta
    max_stages: int = 12
    stall_stages: int = 2      # stop after this many stages without vertex progress; 0 = never

    def __post_init__(self):
        if not self.growth > 1:
            raise ConfigError("growth must exceed 1")
        if not self.lambda0 > 0:
            raise ConfigError("lambda0 must be positive")
        if not self.vertex_tol > 0:
            raise ConfigError("vertex_tol must be positive")
        if self.max_stages < 1:
            raise ConfigError("max_stages must be positive")
        if self.stall_stages < 0:
            raise ConfigError("stall_stages must be nonnegative")

    def lambdas(self) -> list[float]:
        return [self.lambda0 * self.growth ** s for s in range(self.max_stages)]
