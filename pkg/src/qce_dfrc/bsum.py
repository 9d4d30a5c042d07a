"""BSUM inner solver for the ALM subproblem.

Variables are kept in block form:

* ``x``  (T, 2N)     real-space waveform
* ``w``  (T, Q, 2)   auxiliary copies of A_q x_t
* ``z``  (T, 2K)     CI slack, z >= 0
* ``mu`` (T, 2K), ``nu`` (T, Q, 2) multipliers

Flattening any of them in C order gives the stacked vectors of the compact
problem (x = [x_1; ...; x_T], w_t = [w_{t,1}; ...; w_{t,Q}], ...).
All products with C = blkdiag(C_t) and A = I_T (x) A_tilde are matrix-free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import HullGeometry, positive_cubic_root, project_conv_qce, project_nonneg
from .problem import Instance, from_pairs, pairs


# --- block operators -------------------------------------------------------

def apply_C(inst: Instance, x: np.ndarray) -> np.ndarray:
    return np.einsum("tkn,tn->tk", inst.C, x)


def apply_Ct(inst: Instance, y: np.ndarray) -> np.ndarray:
    return np.einsum("tkn,tk->tn", inst.C, y)


def apply_A(inst: Instance, x: np.ndarray) -> np.ndarray:
    return (x @ inst.A_stack.T).reshape(x.shape[0], inst.Q, 2)


def apply_At(inst: Instance, y: np.ndarray) -> np.ndarray:
    return y.reshape(y.shape[0], -1) @ inst.A_stack


# --- state -----------------------------------------------------------------

@dataclass
class SolverState:
    x: np.ndarray
    w: np.ndarray
    z: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    rho_mu: float
    rho_nu: float
    lam: float = 0.0
    gamma: float = float("nan")

    @classmethod
    def zeros(cls, inst: Instance, rho_mu: float, rho_nu: float, lam: float = 0.0,
              gamma: float = float("nan")) -> "SolverState":
        T, N, K, Q = inst.T, inst.N, inst.K, inst.Q
        return cls(x=np.zeros((T, 2 * N)), w=np.zeros((T, Q, 2)), z=np.zeros((T, 2 * K)),
                   mu=np.zeros((T, 2 * K)), nu=np.zeros((T, Q, 2)),
                   rho_mu=rho_mu, rho_nu=rho_nu, lam=lam, gamma=gamma)

    def copy(self) -> "SolverState":
        return replace(self, x=self.x.copy(), w=self.w.copy(), z=self.z.copy(),
                       mu=self.mu.copy(), nu=self.nu.copy())


@dataclass
class Certificate:
    """Stationarity certificate (e_x, e_w, 0) of one BSUM pass."""
    e_x: np.ndarray
    e_w: np.ndarray

    @property
    def norm(self) -> float:
        return math.sqrt(float(np.sum(self.e_x**2) + np.sum(self.e_w**2)))

    @property
    def residual(self) -> float:
        """||e_x|| + ||e_w||, the accuracy measure used by the outer stopping rule."""
        return float(np.linalg.norm(self.e_x) + np.linalg.norm(self.e_w))


# --- objective pieces ------------------------------------------------------

def _block_power(w):
    # s_q = ||w_(q)||^2
    return np.einsum("tqi,tqi->q", w, w)


def f_value(w, scale: float = 1.0) -> float:
    s = _block_power(w)
    return scale * float(s @ s)


def g_value(w, c, scale: float = 1.0) -> float:
    return -scale * float(c @ _block_power(w)) ** 2


def grad_f(w, scale: float = 1.0) -> np.ndarray:
    return (4.0 * scale) * _block_power(w)[None, :, None] * w


def grad_g(w, c, scale: float = 1.0) -> np.ndarray:
    """Gradient of g(w) = -scale * (sum_{q,t} c_q ||w_{t,q}||^2)^2."""
    c = np.asarray(c, dtype=float)
    total = float(c @ _block_power(w))
    return (-4.0 * scale * total) * c[None, :, None] * w


def residuals(state: SolverState, inst: Instance) -> tuple[np.ndarray, np.ndarray]:
    """(Cx - z - b, Ax - w)."""
    rc = apply_C(inst, state.x) - state.z - inst.b
    ra = apply_A(inst, state.x) - state.w
    return rc, ra


def eval_augmented_lagrangian(state: SolverState, inst: Instance, lam: float | None = None) -> float:
    lam = state.lam if lam is None else lam
    rc, ra = residuals(state, inst)
    k = inst.obj_scale
    val = f_value(state.w, k) + g_value(state.w, inst.c, k) - lam * float(np.sum(state.x**2))
    val += float(np.sum(state.mu * rc)) + float(np.sum(state.nu * ra))
    val += 0.5 * state.rho_mu * float(np.sum(rc**2)) + 0.5 * state.rho_nu * float(np.sum(ra**2))
    return val


def grad_x_lagrangian(state: SolverState, inst: Instance) -> np.ndarray:
    rc, ra = residuals(state, inst)
    return (-2.0 * state.lam * state.x
            + apply_Ct(inst, state.mu + state.rho_mu * rc)
            + apply_At(inst, state.nu + state.rho_nu * ra))


# --- majorization constant -------------------------------------------------

def direction_norm(inst: Instance, a_mu: float, a_nu: float, tol: float = 1e-10,
                   max_iter: int = 10_000) -> float:
    """max_t ||a_mu C_t^T C_t + a_nu A~^T A~|| by batched symmetric power iteration."""
    At = inst.A_stack
    G = a_mu * np.einsum("tki,tkj->tij", inst.C, inst.C) + a_nu * (At.T @ At)[None]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(G.shape[:2])
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    lam = np.zeros(G.shape[0])
    for _ in range(max_iter):
        Gv = np.einsum("tij,tj->ti", G, v)
        lam = np.einsum("ti,ti->t", v, Gv)
        res = np.linalg.norm(Gv - lam[:, None] * v, axis=1)
        nrm = np.linalg.norm(Gv, axis=1)
        if np.all(res <= tol * np.maximum(lam, 1e-300)):
            break
        v = Gv / np.where(nrm > 0, nrm, 1.0)[:, None]
    return float(np.max(lam))


def compute_gamma(rho_mu: float, rho_nu: float, inst: Instance, **kw) -> float:
    """||rho_mu C^T C + rho_nu A^T A||, via the unit-direction norm scaled by rho_mu."""
    return rho_mu * direction_norm(inst, 1.0, rho_nu / rho_mu, **kw)


# --- BSUM ------------------------------------------------------------------

def bsum_step(state: SolverState, inst: Instance, grad_x: np.ndarray | None = None,
              geom: HullGeometry | None = None, grad_w: np.ndarray | None = None) -> SolverState:
    """One pass of the closed-form x-, w-, z-updates.

    ``grad_x`` and ``grad_w`` (the gradient of g at ``state.w``) may be
    passed in when the caller already has them.
    """
    if grad_x is None:
        grad_x = grad_x_lagrangian(state, inst)
    if grad_w is None:
        grad_w = grad_g(state.w, inst.c, inst.obj_scale)
    geom = geom or HullGeometry.from_qce(inst.qce)
    gamma = state.gamma

    y = state.x - grad_x / gamma
    x_new = from_pairs(project_conv_qce(pairs(y), geom))

    Ax = apply_A(inst, x_new)
    xi = grad_w - state.nu - state.rho_nu * Ax
    xi_norm = np.sqrt(np.einsum("tqi,tqi->q", xi, xi))
    k = inst.obj_scale
    beta = positive_cubic_root(state.rho_nu / k, xi_norm / k)
    scale = np.divide(beta, xi_norm, out=np.zeros_like(beta), where=xi_norm > 0)
    w_new = -scale[None, :, None] * xi

    z_new = project_nonneg(apply_C(inst, x_new) - inst.b + state.mu / state.rho_mu)
    return replace(state, x=x_new, w=w_new, z=z_new)


def stationarity_certificate(prev: SolverState, new: SolverState, gamma: float, inst: Instance,
                             grad_prev: np.ndarray | None = None,
                             grad_new: np.ndarray | None = None,
                             gw_prev: np.ndarray | None = None,
                             gw_new: np.ndarray | None = None) -> Certificate:
    if grad_prev is None:
        grad_prev = grad_x_lagrangian(prev, inst)
    if grad_new is None:
        grad_new = grad_x_lagrangian(new, inst)
    if gw_prev is None:
        gw_prev = grad_g(prev.w, inst.c, inst.obj_scale)
    if gw_new is None:
        gw_new = grad_g(new.w, inst.c, inst.obj_scale)
    e_x = grad_new - grad_prev - gamma * (new.x - prev.x)
    e_w = gw_new - gw_prev
    return Certificate(e_x=e_x, e_w=e_w)


def descent_constant(state: SolverState) -> float:
    """C_1 * rho = min(rho_mu, rho_nu, gamma) / 2."""
    return 0.5 * min(state.rho_mu, state.rho_nu, state.gamma)


@dataclass
class InnerResult:
    state: SolverState
    certificate: Certificate | None
    iterations: int
    certified: bool
    descent_violations: int = 0
    monotone_violations: int = 0
    objective: list[float] = field(default_factory=list)


def bsum_solve(state: SolverState, inst: Instance, eps: float, max_iter: int = 2000,
               check_descent: bool = False, track_objective: bool = False,
               raise_on_violation: bool = False) -> InnerResult:
    """Iterate :func:`bsum_step` until the certificate norm drops to ``eps``.

    With ``check_descent`` the augmented Lagrangian is evaluated at every
    step and both monotonicity and the sufficient-decrease inequality are
    counted (or raised, with ``raise_on_violation``).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    geom = HullGeometry.from_qce(inst.qce)
    cur = state
    grad_cur = grad_x_lagrangian(cur, inst)
    gw_cur = grad_g(cur.w, inst.c, inst.obj_scale)
    need_obj = check_descent or track_objective
    obj_cur = eval_augmented_lagrangian(cur, inst) if need_obj else None
    objective = [obj_cur] if track_objective else []
    desc_bad = mono_bad = 0
    c1rho = descent_constant(cur)
    cert = None
    for r in range(1, max_iter + 1):
        nxt = bsum_step(cur, inst, grad_x=grad_cur, geom=geom, grad_w=gw_cur)
        grad_nxt = grad_x_lagrangian(nxt, inst)
        gw_nxt = grad_g(nxt.w, inst.c, inst.obj_scale)
        cert = stationarity_certificate(cur, nxt, cur.gamma, inst, grad_cur, grad_nxt,
                                        gw_cur, gw_nxt)
        if need_obj:
            obj_nxt = eval_augmented_lagrangian(nxt, inst)
            if track_objective:
                objective.append(obj_nxt)
            if check_descent:
                slack = 1e-10 * (1.0 + abs(obj_cur))
                step2 = (np.sum((nxt.x - cur.x) ** 2) + np.sum((nxt.w - cur.w) ** 2)
                         + np.sum((nxt.z - cur.z) ** 2))
                if obj_nxt > obj_cur + slack:
                    mono_bad += 1
                if obj_cur - obj_nxt < c1rho * step2 - slack:
                    desc_bad += 1
                if raise_on_violation and (mono_bad or desc_bad):
                    raise AssertionError(
                        f"sufficient decrease violated at inner step {r}: "
                        f"{obj_cur!r} -> {obj_nxt!r}")
            obj_cur = obj_nxt
        cur, grad_cur, gw_cur = nxt, grad_nxt, gw_nxt
        if cert.norm <= eps:
            return InnerResult(cur, cert, r, True, desc_bad, mono_bad, objective)
    return InnerResult(cur, cert, max_iter, False, desc_bad, mono_bad, objective)
