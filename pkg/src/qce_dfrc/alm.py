"""Inexact ALM outer loop and the lambda-homotopy driver."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .bsum import (SolverState, apply_C, bsum_solve, direction_norm,
                   eval_augmented_lagrangian, residuals)
from .config import AlmParams, ConfigError, HomotopyParams
from .geometry import snap_index
from .problem import Instance, RealWaveform, as_waveform_array, from_pairs, pairs

log = logging.getLogger(__name__)

ROW_FIELDS = ("stage", "lambda_stage", "m", "objective", "viol_C", "viol_A", "cert_norm",
              "rho", "inner_iters", "certified")


@dataclass
class FeasibilityReport:
    slack: np.ndarray          # (T, K): min row-pair margin minus b
    n_violated: int
    max_violation: float

    @property
    def feasible(self) -> bool:
        return self.n_violated == 0


@dataclass
class SolveReport:
    rows: list[dict] = field(default_factory=list)
    lambdas: list[float] = field(default_factory=list)
    stage_converged: list[bool] = field(default_factory=list)
    converged: bool = False
    vertex_converged: bool = False
    stalled: bool = False
    waveform: RealWaveform | None = None
    unsnapped: np.ndarray | None = None
    feasibility: FeasibilityReport | None = None
    inner_iterations: list[int] = field(default_factory=list)
    inner_certified: list[bool] = field(default_factory=list)
    descent_violations: int = 0
    monotone_violations: int = 0
    elapsed: float = 0.0


def update_multipliers(state: SolverState, inst: Instance, mu_bounds=(-1e3, 1e3),
                       nu_bounds=(-1e3, 1e3)) -> SolverState:
    """Safeguarded first-order multiplier step."""
    rc, ra = residuals(state, inst)
    mu = np.clip(state.mu + state.rho_mu * rc, *mu_bounds)
    nu = np.clip(state.nu + state.rho_nu * ra, *nu_bounds)
    return replace(state, mu=mu, nu=nu)


def scaled_violation(rc, ra, rho_mu: float, rho_nu: float) -> float:
    return math.sqrt(rho_mu * float(np.sum(rc**2)) + rho_nu * float(np.sum(ra**2)))


def update_penalties(state: SolverState, prev_violation, inst: Instance | None = None,
                     tau: float = 1.01, delta: float = 0.95,
                     current_violation=None) -> SolverState:
    """Grow both penalties by ``tau`` unless the sqrt(rho)-weighted violation
    fell below ``delta`` times the previous one (same weights on both sides).

    ``prev_violation``/``current_violation`` are ``(Cx - z - b, Ax - w)`` pairs;
    the current one is recomputed from ``state`` when omitted.
    """
    if current_violation is None:
        current_violation = residuals(state, inst)
    cur = scaled_violation(*current_violation, state.rho_mu, state.rho_nu)
    prev = scaled_violation(*prev_violation, state.rho_mu, state.rho_nu)
    if cur >= delta * prev:
        return replace(state, rho_mu=tau * state.rho_mu, rho_nu=tau * state.rho_nu,
                       gamma=tau * state.gamma)
    return state


def _stop_measure(cert_residual, rc, ra):
    return max(cert_residual, float(np.linalg.norm(rc)), float(np.linalg.norm(ra)))


def alm_solve(inst: Instance, lam: float, warm: SolverState | None = None,
              params: AlmParams | None = None, gamma_dir: float | None = None,
              stage: int = 0, report: SolveReport | None = None):
    """Inexact ALM for the penalty model at a fixed ``lam``.

    Returns ``(state, report, converged)``.  Primal variables and multipliers
    are warm-started from ``warm`` when given; penalties are always reset to
    their initial values for ``lam``.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    params = params or AlmParams()
    report = report if report is not None else SolveReport()
    rho_mu, rho_nu = params.initial_penalties(lam)
    if gamma_dir is None:
        gamma_dir = direction_norm(inst, 1.0, rho_nu / rho_mu)
    gamma = rho_mu * gamma_dir
    if warm is None:
        state = SolverState.zeros(inst, rho_mu, rho_nu, lam, gamma)
    else:
        if params.carry_penalties:
            # keep whatever growth the previous stage accumulated
            grow = max(1.0, warm.rho_mu / rho_mu)
            rho_mu, rho_nu, gamma = grow * rho_mu, grow * rho_nu, grow * gamma
        state = replace(warm.copy(), rho_mu=rho_mu, rho_nu=rho_nu, lam=lam, gamma=gamma)
        if params.reset_multipliers:
            state.mu[:] = 0.0
            state.nu[:] = 0.0
    tol = params.tolerance(inst.T)

    prev_res = residuals(state, inst)
    best, best_measure = state, math.inf
    converged = False
    for m in range(1, params.max_outer + 1):
        inner = bsum_solve(state, inst, params.eps(m), params.max_inner,
                           check_descent=params.check_descent)
        new = inner.state
        rc, ra = residuals(new, inst)
        e = inner.certificate.residual
        measure = _stop_measure(e, rc, ra)
        report.rows.append(dict(
            stage=stage, lambda_stage=lam, m=m,
            objective=eval_augmented_lagrangian(new, inst),
            viol_C=float(np.linalg.norm(rc)), viol_A=float(np.linalg.norm(ra)),
            cert_norm=e, rho=new.rho_mu, inner_iters=inner.iterations,
            certified=inner.certified))
        report.inner_iterations.append(inner.iterations)
        report.inner_certified.append(inner.certified)
        report.descent_violations += inner.descent_violations
        report.monotone_violations += inner.monotone_violations

        new = update_multipliers(new, inst, params.mu_bounds, params.nu_bounds)
        new = update_penalties(new, prev_res, tau=params.tau, delta=params.delta,
                               current_violation=(rc, ra))
        prev_res = (rc, ra)
        state = new
        if measure < best_measure:
            best, best_measure = state, measure
        if measure <= tol:
            converged = True
            break
    if not converged:
        log.info("ALM at lambda=%g stopped unconverged (measure %.3g)", lam, best_measure)
        state = best
    return state, report, converged


def vertex_distance(x: np.ndarray, inst: Instance) -> np.ndarray:
    """Distance of every per-antenna 2-vector to its nearest QCE vertex, (T, N)."""
    p = pairs(x)
    V = inst.qce.vertices
    return np.min(np.linalg.norm(p[..., None, :] - V, axis=-1), axis=-1)


def snap_waveform(x: np.ndarray, inst: Instance) -> np.ndarray:
    p = pairs(x)
    return from_pairs(inst.qce.vertices[snap_index(p, inst.qce)])


def homotopy_solve(inst: Instance, hp: HomotopyParams | None = None,
                   ap: AlmParams | None = None):
    """Track the penalty path for increasing lambda, then snap to the QCE set.

    Returns ``(RealWaveform, SolveReport)``; the waveform is exactly quantized.
    """
    hp = hp or HomotopyParams()
    ap = ap or AlmParams()
    if hp.vertex_tol >= math.sin(math.pi / inst.qce.L):
        raise ConfigError("vertex_tol must be below sin(pi/L)")
    t0 = time.perf_counter()
    report = SolveReport()
    rho_mu, rho_nu = ap.initial_penalties(hp.lambda0)
    gamma_dir = direction_norm(inst, 1.0, rho_nu / rho_mu)
    state = None
    best_off, best_dist, stalled = math.inf, math.inf, 0
    for s, lam in enumerate(hp.lambdas()):
        state, report, conv = alm_solve(inst, lam, warm=state, params=ap, gamma_dir=gamma_dir,
                                        stage=s, report=report)
        report.lambdas.append(lam)
        report.stage_converged.append(conv)
        vd = vertex_distance(state.x, inst)
        dist = float(np.max(vd))
        n_off = int(np.sum(vd > hp.vertex_tol * inst.qce.eta))
        log.info("stage %d lambda=%g converged=%s max vertex distance=%.3g, %d entries off",
                 s, lam, conv, dist, n_off)
        if n_off == 0:
            report.vertex_converged = True
            break
        # entries pinned on an edge by active constraints do not move however
        # large lambda gets; once the path has started reaching vertices, stop
        # paying for stages that make no progress
        if n_off < 0.9 * best_off or dist < 0.9 * best_dist or n_off == vd.size:
            stalled = 0
        else:
            stalled += 1
        best_off, best_dist = min(best_off, n_off), min(best_dist, dist)
        if hp.stall_stages and stalled >= hp.stall_stages:
            report.stalled = True
            log.info("homotopy stalled after stage %d", s)
            break
    report.converged = bool(report.stage_converged and report.stage_converged[-1])
    report.unsnapped = state.x.copy()
    X = RealWaveform(snap_waveform(state.x, inst))
    report.waveform = X
    report.feasibility = check_feasibility(X, inst)
    report.elapsed = time.perf_counter() - t0
    return X, report


def check_feasibility(X, inst: Instance, tol: float = 1e-12) -> FeasibilityReport:
    x = as_waveform_array(X)
    cx = apply_C(inst, x)                                  # (T, 2K)
    margins = np.minimum(cx[:, 0::2], cx[:, 1::2])         # (T, K)
    slack = margins - inst.b[:, 0::2]
    bad = slack < -tol
    maxv = float(np.max(-slack[bad])) if np.any(bad) else 0.0
    return FeasibilityReport(slack=slack, n_violated=int(np.sum(bad)), max_violation=maxv)
