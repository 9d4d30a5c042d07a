"""Closed-form geometric kernels: hull projection, orthant projection,
the positive cubic root and nearest-vertex snapping."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .problem import QceSet


@dataclass(frozen=True)
class HullGeometry:
    """Edge description of conv(QCE set), a regular L-gon of circumradius eta.

    Edge k (k = 0..L-1) has outward unit normal at angle 2*pi*k/L and joins
    the vertices at angles (2k -+ 1)*pi/L.
    """
    eta: float
    L: int

    @classmethod
    def from_qce(cls, qce: QceSet) -> "HullGeometry":
        return cls(eta=qce.eta, L=qce.L)

    @property
    def half_angle(self) -> float:
        return np.pi / self.L

    @property
    def inradius(self) -> float:
        return self.eta * np.cos(np.pi / self.L)

    @property
    def half_edge(self) -> float:
        return self.eta * np.sin(np.pi / self.L)

    @property
    def normals(self) -> np.ndarray:
        a = 2 * np.pi * np.arange(self.L) / self.L
        return np.stack([np.cos(a), np.sin(a)], axis=1)

    @property
    def offsets(self) -> np.ndarray:
        return np.full(self.L, self.inradius)

    def contains(self, p, tol: float = 1e-12) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.L == 2:
            return (np.abs(p[..., 0]) <= tol) & (np.abs(p[..., 1]) <= self.eta + tol)
        return np.all(p @ self.normals.T <= self.inradius + tol, axis=-1)


def project_conv_qce(p, geom: HullGeometry) -> np.ndarray:
    """Euclidean projection onto the hull; ``p`` has shape (..., 2).

    Each point is rotated into the angular sector of the edge facing it,
    clamped against that edge (segment), and rotated back.  For L = 2 the
    hull degenerates to the vertical segment between (0, +-eta).
    """
    p = np.asarray(p, dtype=float)
    L = geom.L
    sector = 2 * np.pi / L
    phi = np.arctan2(p[..., 1], p[..., 0])
    k = np.floor((phi + np.pi / L) / sector)
    ang = k * sector
    c, s = np.cos(ang), np.sin(ang)
    u = c * p[..., 0] + s * p[..., 1]
    v = -s * p[..., 0] + c * p[..., 1]
    u0 = u
    u = np.minimum(u, geom.inradius)
    h = geom.half_edge
    v = np.clip(v, -h, h)
    out = np.empty_like(p)
    out[..., 0] = c * u - s * v
    out[..., 1] = s * u + c * v
    if L >= 3:
        # inside the sector only edge k can bind, so u <= inradius means
        # the point is in the hull; return it bit-exact
        inside = (u0 <= geom.inradius)[..., None]
        out = np.where(inside, p, out)
    return out


def project_nonneg(v) -> np.ndarray:
    return np.maximum(np.asarray(v, dtype=float), 0.0)


def positive_cubic_root(rho, xi_norm):
    """Unique nonnegative root of 4 b^3 + rho b - xi = 0 (vectorised).

    Cardano's formula written without the cancellation of its second cube
    root: with u^3 = xi/8 + sqrt((xi/8)^2 + (rho/12)^3) and p = rho/12,
    b = u - p/u = (xi/4) / (u^2 + p + p^2/u^2).
    """
    rho = np.asarray(rho, dtype=float)
    xi = np.asarray(xi_norm, dtype=float)
    a = xi / 8.0
    p = rho / 12.0
    u = np.cbrt(a + np.sqrt(a * a + p**3))
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.where(xi > 0, 2.0 * a / (u * u + p + (p / u) ** 2), 0.0)
    # one Newton step; f is convex increasing on b >= 0 so this only polishes
    f = 4 * beta**3 + rho * beta - xi
    beta = np.where(xi > 0, beta - f / (12 * beta**2 + rho), 0.0)
    if beta.ndim == 0:
        return float(beta)
    return beta


def snap_to_qce(p, qce: QceSet, tie_tol: float = 1e-12) -> np.ndarray:
    """Nearest QCE vertex to each point of ``p`` (shape (..., 2)).

    Ties (within ``tie_tol * eta`` in distance) go to the lowest vertex index.
    """
    return qce.vertices[snap_index(p, qce, tie_tol)]


def snap_index(p, qce: QceSet, tie_tol: float = 1e-12) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim == 1 and p.shape == (2,) and not np.any(p):
        warnings.warn("snapping the origin: all vertices tie", RuntimeWarning, stacklevel=2)
    V = qce.vertices
    d = np.linalg.norm(p[..., None, :] - V, axis=-1)
    dmin = d.min(axis=-1, keepdims=True)
    return np.argmax(d <= dmin + tie_tol * qce.eta, axis=-1)
