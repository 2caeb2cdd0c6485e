"""Maps from order embeddings and entailment cones to formal disks.

Order embeddings
    ``x`` is above ``y`` iff ``x_k <= y_k`` for every k. Projecting onto the
    zero-sum hyperplane turns the orthant lower cones into simplices, i.e.
    disks of the polyhedral quasi-metric with generators ``P e_k``.

Hyperbolic entailment cones
    A Poincare-ball point ``x`` with ``r_min < |x| < 1`` maps to a spherical
    cap (the cone's shadow on the boundary sphere); cone inclusion becomes
    cap containment, and the cone energy can be written with the cap
    distance and radii only.

Euclidean cones
    The planar analogue, expressed through the cap radii and center angle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import geometry
from .disks import FormalDisk
from .errors import DomainError, InvalidArgumentError, NumericDegeneracyError


def _hplus(x: float) -> float:
    return x if x > 0.0 else 0.0


# --- order embeddings ------------------------------------------------------

def _orthant_point(x, name="x") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"{name} must be a finite vector")
    if np.any(x <= 0):
        raise DomainError(f"{name} must lie in the open positive orthant")
    return x


def order_relation(x, y) -> bool:
    """Reversed product order: ``x`` is above ``y`` iff ``x <= y`` coordinate-wise."""
    x = _orthant_point(x, "x")
    y = _orthant_point(y, "y")
    if x.shape != y.shape:
        raise InvalidArgumentError("dimension mismatch")
    return bool(np.all(x <= y))


def energy_order(x, y) -> float:
    """Squared norm of the positive part of ``x - y``."""
    d = np.maximum(np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64), 0.0)
    return float(np.dot(d, d))


@dataclass(frozen=True)
class OrderEmbeddingMap:
    n: int
    a: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArgumentError("order-embedding map needs n >= 2")
        if not self.a > 0:
            raise InvalidArgumentError("hyperplane offset a must be positive")

    @cached_property
    def P(self) -> np.ndarray:
        return np.eye(self.n) - np.full((self.n, self.n), 1.0 / self.n)

    @cached_property
    def space(self) -> geometry.QuasiMetricSpace:
        # generators P e_k are the rows of the symmetric P
        return geometry.QuasiMetricSpace.polyhedral(self.P, restrict_to_span=True)


def phi_ord(m: OrderEmbeddingMap, x) -> FormalDisk:
    x = _orthant_point(x)
    if x.shape != (m.n,):
        raise InvalidArgumentError(f"x must have {m.n} coordinates")
    center = m.P @ x
    return FormalDisk(center, float(m.a - x.mean()))


# --- hyperbolic cones ------------------------------------------------------

@dataclass(frozen=True)
class ConeParams:
    K: float = 0.1
    theta0: float = field(init=False)
    r_min: float = field(init=False)

    def __post_init__(self):
        if not (np.isfinite(self.K) and self.K > 0):
            raise InvalidArgumentError("cone constant K must be positive")
        object.__setattr__(self, "theta0", float(np.arctan(2.0 * self.K)))
        # positive root of K r^2 + r - K = 0, written to avoid cancellation
        object.__setattr__(self, "r_min", float(2.0 * self.K / (1.0 + np.sqrt(1.0 + 4.0 * self.K ** 2))))

    @property
    def xi0(self) -> float:
        if self.K >= 1:
            raise DomainError("arcsin(K) needs K < 1")
        return float(np.arcsin(self.K))


def generatrix_angle(x, params: ConeParams) -> float:
    """Half-aperture of the entailment cone at ``x``."""
    x = np.asarray(x, dtype=np.float64)
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        raise DomainError("cone is undefined at the origin")
    arg = params.K * (1.0 - nx * nx) / nx
    if arg > 1.0:
        raise DomainError(f"|x| = {nx:.6g} is inside r_min = {params.r_min:.6g}; cone undefined")
    return float(np.arcsin(arg))


def cone_angles(x, y, params: ConeParams) -> tuple[float, float]:
    """``(psi, Xi)``: the cone half-aperture at ``x`` and the angle of ``y`` off its axis.

    ``Xi`` is pi minus the angle at ``x`` in the hyperbolic triangle
    ``(O, x, y)``. Its sine comes from the law of sines and its cosine from the
    law of cosines, so the branch on ``[0, pi]`` is unambiguous.
    """
    x = geometry._ball_point(x, "x")
    y = geometry._ball_point(y, "y")
    if x.shape != y.shape:
        raise InvalidArgumentError("dimension mismatch")
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0:
        raise DomainError("cone apex at the origin has no axis")
    if ny == 0.0:
        raise DomainError("y at the origin makes the triangle degenerate")
    if np.array_equal(x, y):
        raise DomainError("x and y coincide")
    if nx <= params.r_min:
        raise DomainError(f"|x| = {nx:.6g} <= r_min = {params.r_min:.6g}; cone undefined")
    psi = generatrix_angle(x, params)
    origin = np.zeros_like(x)
    dx = geometry.poincare_distance(origin, x)
    dy = geometry.poincare_distance(origin, y)
    dxy = geometry.poincare_distance(x, y)
    # the ball is conformal and radii are geodesics, so the angle at O is Euclidean
    cos_D = float(np.clip(np.dot(x, y) / (nx * ny), -1.0, 1.0))
    sin_D = float(np.sqrt(max(0.0, 1.0 - cos_D * cos_D)))
    sin_xi = np.sinh(dy) * sin_D / np.sinh(dxy)
    cos_angle_x = (np.cosh(dx) * np.cosh(dxy) - np.cosh(dy)) / (np.sinh(dx) * np.sinh(dxy))
    xi = float(np.arctan2(sin_xi, -cos_angle_x))
    return psi, xi


def cone_relation(x, y, params: ConeParams) -> bool:
    """True iff ``y`` lies in the entailment cone of ``x``."""
    psi, xi = cone_angles(x, y, params)
    return psi >= xi


def energy_hyp_direct(x, y, params: ConeParams) -> float:
    psi, xi = cone_angles(x, y, params)
    return _hplus(xi - psi)


def phi_hyp(x, params: ConeParams) -> FormalDisk:
    """Spherical cap cut out on the boundary sphere by the cone at ``x``."""
    x = geometry._ball_point(x, "x")
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        raise DomainError("x at the origin has no direction")
    arg = (1.0 + nx * nx) / (2.0 * nx) * np.sin(params.theta0)
    if arg > 1.0:
        if arg - 1.0 > 1e-12:
            raise DomainError(f"|x| = {nx:.6g} < r_min = {params.r_min:.6g}")
        arg = 1.0
    return FormalDisk(x / nx, float(np.arcsin(arg) - params.theta0))


def _check_cap_radius(r: float, params: ConeParams, name: str):
    upper = np.pi / 2 - params.theta0
    if not (0.0 < r <= upper + 1e-12):
        raise DomainError(f"{name} = {r:.6g} outside (0, pi/2 - theta0 = {upper:.6g}]")


def _cone_terms(d: float, ri: float, rj: float, params: ConeParams):
    t0 = params.theta0
    si = np.sin(ri + t0) / np.sin(t0)
    sj = np.sin(rj + t0) / np.sin(t0)
    denom = si * si + sj * sj - 2.0 * si * sj * np.cos(d) - np.sin(d) ** 2
    return si, sj, denom


def q_factor(d: float, ri: float, rj: float, params: ConeParams) -> float:
    """Scale factor relating the cone energy to ``2 sin(l / 2)``."""
    t0 = params.theta0
    _, _, denom = _cone_terms(d, ri, rj, params)
    num = np.sin(ri) * np.sin(ri + 2.0 * t0)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.cos((ri + rj - d) / 2.0 + t0) / (np.cos(t0) * np.sin(t0)) * np.sqrt(num / denom)
    if not np.isfinite(q) or denom <= 0.0:
        raise NumericDegeneracyError(
            f"q undefined for d={d!r}, r_i={ri!r}, r_j={rj!r} (denominator {denom!r})"
        )
    return float(q)


def _cos_xi_minus_psi(d: float, ri: float, rj: float, params: ConeParams) -> float:
    """cos(Xi - psi) from the cap distance and radii only.

    Rebuilds the hyperbolic triangle from ``coth d_x = s_i``, ``coth d_y = s_j``
    and the center angle ``d``; only its sign is used, to pick the arcsin branch.
    """
    si, sj, _ = _cone_terms(d, ri, rj, params)
    shx = 1.0 / np.sqrt(si * si - 1.0)
    shy = 1.0 / np.sqrt(sj * sj - 1.0)
    chx, chy = si * shx, sj * shy
    chxy = chx * chy - shx * shy * np.cos(d)
    shxy = np.sqrt(max(chxy * chxy - 1.0, 0.0))
    if shxy == 0.0:
        raise NumericDegeneracyError("coincident cone apices")
    cos_xi = -(chx * chxy - chy) / (shx * shxy)
    sin_xi = shy * np.sin(d) / shxy
    sin_psi = np.sqrt(np.sin(ri) * np.sin(ri + 2.0 * params.theta0)) / np.cos(params.theta0)
    cos_psi = np.sqrt(max(0.0, 1.0 - sin_psi * sin_psi))
    return float(cos_xi * cos_psi + sin_xi * sin_psi)


def energy_hyp_closed_form(a: FormalDisk, b: FormalDisk, params: ConeParams, branch: str = "resolved") -> float:
    """Cone energy of caps ``a`` (ancestor) and ``b`` from their distance and radii.

    ``q * 2 sin(l / 2)`` equals ``sin(Xi - psi)``. The principal arcsin only
    recovers ``Xi - psi`` while it is at most pi/2; with ``branch="resolved"``
    the sign of ``cos(Xi - psi)``, also computed from ``(d, r_a, r_b)``,
    selects the other branch when needed. ``branch="principal"`` returns the
    bare arcsin.
    """
    if branch not in ("resolved", "principal"):
        raise InvalidArgumentError(f"branch must be 'resolved' or 'principal', got {branch!r}")
    ri, rj = float(a.radius), float(b.radius)
    _check_cap_radius(ri, params, "r_a")
    _check_cap_radius(rj, params, "r_b")
    ca = np.asarray(a.center, dtype=np.float64)
    cb = np.asarray(b.center, dtype=np.float64)
    d = float(2.0 * np.arctan2(np.linalg.norm(ca - cb), np.linalg.norm(ca + cb)))
    return energy_hyp_from_terms(d, ri, rj, params, branch)


def energy_hyp_from_terms(d: float, ri: float, rj: float, params: ConeParams, branch: str = "resolved") -> float:
    if not 0.0 <= d <= np.pi:
        raise DomainError(f"cap distance {d!r} outside [0, pi]")
    l = d - ri + rj
    q = q_factor(d, ri, rj, params)
    v = float(np.arcsin(np.clip(q * 2.0 * np.sin(l / 2.0), -1.0, 1.0)))
    if branch == "resolved" and v > 0.0 and _cos_xi_minus_psi(d, ri, rj, params) < 0.0:
        v = np.pi - v
    return _hplus(v)


def energy_hyp_linearized(ri: float, rj: float, d: float, params: ConeParams) -> float:
    """First-order expansion around ``d = r_i - r_j``: ``q(r_i - r_j, r_i, r_j) * h+(l)``."""
    return q_factor(ri - rj, ri, rj, params) * _hplus(d - ri + rj)


# --- euclidean cones -------------------------------------------------------

def euclidean_cone_angle_diff(r_x: float, r_y: float, D: float, K: float) -> float:
    """``sin(psi - Xi)`` for planar entailment cones, in cap coordinates.

    ``r_x``, ``r_y`` are the angular radii of the cones' traces on the unit
    circle and ``D`` the angle between the apices seen from the origin.
    """
    if not 0 < K < 1:
        raise DomainError("K must lie in (0, 1)")
    xi0 = np.arcsin(K)
    sx = np.sin(r_x + xi0)
    sy = np.sin(r_y + xi0)
    denom_sq = sx * sx + sy * sy - 2.0 * sx * sy * np.cos(D)
    if not denom_sq > 1e-300:
        raise NumericDegeneracyError(f"vanishing denominator for r_x={r_x!r}, r_y={r_y!r}, D={D!r}")
    return float(2.0 * sx * np.sin((r_x - r_y - D) / 2.0) * np.cos((r_x + r_y - D) / 2.0 + xi0) / np.sqrt(denom_sq))
