"""Brute-force references: exhaustive discrete search and enumerated hull projection.

Everything here is written in complex arithmetic, on purpose separate from
the real block-form code used by the solver.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .problem import Instance, QceSet, from_complex


class BudgetExceeded(RuntimeError):
    """Raised when an enumeration would visit more candidates than allowed."""


@dataclass(frozen=True)
class EnumerationBudget:
    max_candidates: int = 1_000_000

    def check(self, n: int):
        if n > self.max_candidates:
            raise BudgetExceeded(f"{n} candidates exceed the budget of {self.max_candidates}")


@dataclass
class ExhaustiveResult:
    waveform: np.ndarray | None     # real (T, 2N) form, None when infeasible
    objective: float                # +inf when infeasible
    n_feasible: int
    n_visited: int

    @property
    def feasible(self) -> bool:
        return self.waveform is not None


def complex_margins(X: np.ndarray, H: np.ndarray, S: np.ndarray, M: int) -> np.ndarray:
    """Distance of each rotated receive sample to the nearer decision boundary.

    With y' = (h_k^T x_t) conj(s_kt), the two boundaries of the correct
    sector are the rays at angles -pi/M and +pi/M; the signed distances are
    Im(y' e^{j pi/M}) and -Im(y' e^{-j pi/M}).  Shape (..., K, T).
    """
    yr = np.einsum("kn,...nt->...kt", H, X) * np.conj(S)
    a = np.exp(1j * np.pi / M)
    return np.minimum((yr * a).imag, -(yr * np.conj(a)).imag)


def quartic_objective(X: np.ndarray, inst: Instance) -> np.ndarray:
    """sum_q (sum_t |a_q^H x_t|^2)^2 - (sum_q c_q sum_t |a_q^H x_t|^2)^2, times obj_scale.

    ``X`` has shape (..., N, T).
    """
    n = np.arange(inst.N)
    Aq = np.exp(1j * np.pi * np.outer(np.sin(np.deg2rad(inst.grid)), n))   # (Q, N)
    s = np.sum(np.abs(np.einsum("qn,...nt->...qt", Aq.conj(), X)) ** 2, axis=-1)
    return inst.obj_scale * (np.sum(s**2, axis=-1) - (s @ inst.c) ** 2)


def exhaustive_solve(inst: Instance, budget: EnumerationBudget | None = None,
                     chunk: int = 4096, tol: float = 1e-12) -> ExhaustiveResult:
    """Global optimum of the discrete problem by visiting all L^(N T) waveforms.

    Ties go to the first candidate in lexicographic order of the vertex
    indices (antenna-major within slot, slots in order).
    """
    budget = budget or EnumerationBudget()
    N, T, L = inst.N, inst.T, inst.qce.L
    total = L ** (N * T)
    budget.check(total)
    alphabet = inst.qce.eta * np.exp(1j * (2 * np.arange(1, L + 1) - 1) * np.pi / L)
    b = inst.b[:, 0::2].T                                     # (K, T)

    best_val, best_idx, n_feas, visited = math.inf, None, 0, 0
    it = itertools.product(range(L), repeat=N * T)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            break
        idx = np.array(block)                                 # (B, T*N)
        X = alphabet[idx].reshape(-1, T, N).transpose(0, 2, 1)
        visited += len(idx)
        ok = np.all(complex_margins(X, inst.H, inst.S, inst.M) >= b - tol, axis=(1, 2))
        if not np.any(ok):
            continue
        n_feas += int(ok.sum())
        vals = np.where(ok, quartic_objective(X, inst), np.inf)
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val, best_idx = float(vals[j]), idx[j]
    if best_idx is None:
        return ExhaustiveResult(None, math.inf, 0, visited)
    Xbest = alphabet[best_idx].reshape(T, N).T
    return ExhaustiveResult(from_complex(Xbest), best_val, n_feas, visited)


def projection_oracle(p, qce: QceSet) -> np.ndarray:
    """Hull projection of one point by enumerating every edge and vertex."""
    if qce.L < 3:
        raise ValueError("projection oracle needs L >= 3")
    p = np.asarray(p, dtype=float)
    z = complex(p[0], p[1])
    verts = qce.points
    L = qce.L
    # interior: on the inner side of every edge line
    inside = True
    for k in range(L):
        a, b = verts[k], verts[(k + 1) % L]
        # counter-clockwise vertex order: interior lies to the left of a -> b
        if ((b - a).conjugate() * (z - a)).imag < 0:
            inside = False
            break
    if inside:
        return p.copy()
    cands = list(verts)
    for k in range(L):
        a, b = verts[k], verts[(k + 1) % L]
        e = b - a
        t = ((z - a) * e.conjugate()).real / abs(e) ** 2
        if 0.0 <= t <= 1.0:
            cands.append(a + t * e)
    best = min(cands, key=lambda q: abs(z - q))
    return np.array([best.real, best.imag])
