"""Randomized property suites behind ``diskembed verify``.

Each suite draws its own generator from a ``SeedSequence`` spawned off the
run seed, so results do not depend on the order or parallelism of execution.
A suite returns one or more :class:`PropertyResult` rows; boolean properties
report a mismatch count against a tolerance of zero.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import ortho_group

from . import disks, equivalence, geometry, kernels
from .errors import InvalidArgumentError

FAULTS = ("gradient-sign",)

AXIOM_TOL = 1e-9
FD_REL_TOL = 1e-4
GEODESIC_TOL = 1e-6
MANIFOLD_TOL = 1e-9
GAUGE_TOL = 1e-12
IDENTITY_TOL = 1e-9
CONE_TOL = 1e-6
LINEARIZATION_ORDER_TOL = 0.05
ROTATION_TOL = 1e-12
PLANAR_CONE_TOL = 1e-6


@dataclass(frozen=True)
class PropertyResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name:<40s} max_residual={self.residual:.3e}  tol={self.tolerance:.0e}"


def property_spaces() -> list[geometry.QuasiMetricSpace]:
    return [
        geometry.QuasiMetricSpace.euclidean(3),
        geometry.QuasiMetricSpace.simplex(3),
        geometry.QuasiMetricSpace.sphere(3),
        geometry.QuasiMetricSpace.lorentz(3),
    ]


# --- geometry --------------------------------------------------------------

def suite_axioms(rng, trials, K, fault):
    out = []
    for space in property_spaces():
        neg = ident = tri = 0.0
        for _ in range(trials):
            x, y, z = (geometry.random_point(space, rng) for _ in range(3))
            dxy = geometry.distance(space, x, y)
            neg = max(neg, -dxy)
            ident = max(ident, geometry.distance(space, x, x))
            tri = max(tri, geometry.distance(space, x, z) - dxy - geometry.distance(space, y, z))
        out.append(PropertyResult(f"{space.kind}: non-negativity", neg, AXIOM_TOL))
        out.append(PropertyResult(f"{space.kind}: identity", ident, AXIOM_TOL))
        out.append(PropertyResult(f"{space.kind}: triangle inequality", max(tri, 0.0), AXIOM_TOL))
        if space.is_symmetric:
            sym = 0.0
            for _ in range(trials // 4 + 1):
                x, y = geometry.random_point(space, rng), geometry.random_point(space, rng)
                sym = max(sym, abs(geometry.distance(space, x, y) - geometry.distance(space, y, x)))
            out.append(PropertyResult(f"{space.kind}: symmetry", sym, AXIOM_TOL))
    return out


def _well_separated(space, rng):
    while True:
        x, y = geometry.random_point(space, rng), geometry.random_point(space, rng)
        d = geometry.distance(space, x, y)
        if 0.1 < d < (np.pi - 0.1 if space.kind == geometry.SPHERE else 20.0):
            if space.kind != geometry.POLYHEDRAL:
                return x, y
            gaps = np.sort(space.W @ (x - y))
            if gaps[-1] - gaps[-2] > 1e-3:  # unique active generator
                return x, y


def suite_gradients(rng, trials, K, fault):
    out = []
    eps = 1e-5
    for space in property_spaces():
        worst = 0.0
        for _ in range(trials):
            x, y = _well_separated(space, rng)
            for wrt in (geometry.FIRST, geometry.SECOND):
                p = x if wrt == geometry.FIRST else y
                v = geometry.random_tangent(space, p, rng)
                g = geometry.distance_grad(space, x, y, wrt)
                if fault == "gradient-sign":
                    g = -g
                if space.is_riemannian:
                    plus = geometry.exp_map(space, p, eps * v)
                    minus = geometry.exp_map(space, p, -eps * v)
                else:
                    plus, minus = p + eps * v, p - eps * v
                if wrt == geometry.FIRST:
                    fd = (geometry.distance(space, plus, y, False) - geometry.distance(space, minus, y, False)) / (2 * eps)
                else:
                    fd = (geometry.distance(space, x, plus, False) - geometry.distance(space, x, minus, False)) / (2 * eps)
                an = geometry.inner(space, p, g, v)
                scale = max(geometry.tangent_norm(space, p, g) * geometry.tangent_norm(space, p, v), 1e-12)
                worst = max(worst, abs(fd - an) / scale)
        out.append(PropertyResult(f"{space.kind}: gradient finite difference", worst, FD_REL_TOL))
    return out


def suite_geodesics(rng, trials, K, fault):
    out = []
    for space in property_spaces():
        if not space.is_riemannian and space.kind != geometry.EUCLIDEAN:
            continue
        worst = 0.0
        for _ in range(trials):
            x = geometry.random_point(space, rng)
            v = geometry.random_tangent(space, x, rng)
            v = v / geometry.tangent_norm(space, x, v)
            t = rng.uniform(0.0, 0.5)
            y = geometry.exp_map(space, x, t * v)
            worst = max(worst, abs(geometry.distance(space, x, y, False) - t))
        out.append(PropertyResult(f"{space.kind}: geodesic identity", worst, GEODESIC_TOL))
    return out


def suite_manifold(rng, trials, K, fault):
    out = []
    n_updates = 10 * trials
    for space in property_spaces():
        if not space.is_riemannian:
            continue
        n = 20
        centers = np.array([geometry.random_point(space, rng) for _ in range(n)])
        radii = rng.uniform(0.0, 1.0, n)
        heads = rng.integers(0, n, n_updates)
        tails = (heads + rng.integers(1, n, n_updates)) % n
        positive = rng.integers(0, 2, n_updates).astype(np.uint8)
        kernels.run_samples(space, centers, radii, heads, tails, positive, 0.1, 0.05, 1.0, 1.0)
        worst = max(geometry.membership_residual(space, c) for c in centers)
        out.append(PropertyResult(f"{space.kind}: manifold after {n_updates} updates", worst, MANIFOLD_TOL))
    return out


# --- disks -----------------------------------------------------------------

def _random_disk(space, rng, spread=1.0):
    return disks.FormalDisk(geometry.random_point(space, rng, spread), float(rng.uniform(-1.0, 2.0)))


def suite_poset(rng, trials, K, fault):
    out = []
    for space in property_spaces():
        refl = trans = gauge = rev = 0.0
        for _ in range(trials):
            a, b, c = (_random_disk(space, rng) for _ in range(3))
            refl += not disks.contains(space, a, a)
            lab = disks.protrusion(space, a, b)
            lbc = disks.protrusion(space, b, c)
            lac = disks.protrusion(space, a, c)
            trans = max(trans, lac - lab - lbc)
            t = float(rng.normal(scale=3.0))
            gauge = max(gauge, abs(disks.protrusion(space, a.shifted(t), b.shifted(t)) - lab))
            if space.is_symmetric:
                rev = max(rev, abs(disks.protrusion(space, b.reversed(), a.reversed()) - lab))
        out.append(PropertyResult(f"{space.kind}: reflexivity", float(refl), 0.0))
        out.append(PropertyResult(f"{space.kind}: transitivity", max(trans, 0.0), AXIOM_TOL))
        out.append(PropertyResult(f"{space.kind}: radius-shift gauge", gauge, GAUGE_TOL))
        if space.is_symmetric:
            out.append(PropertyResult(f"{space.kind}: reversibility", rev, GAUGE_TOL))
        else:
            witnessed = _reversal_counterexample(space, rng, trials) is not None
            out.append(PropertyResult(f"{space.kind}: reversal counterexample found", float(not witnessed), 0.0))
    return out


def _reversal_counterexample(space, rng, trials):
    for _ in range(max(trials, 100)):
        a, b = _random_disk(space, rng), _random_disk(space, rng)
        if disks.contains(space, a, b) != disks.contains(space, b.reversed(), a.reversed()):
            return a, b
    return None


def suite_lower_cones(rng, trials, K, fault):
    out = []
    for space in property_spaces():
        ds = [disks.FormalDisk(geometry.random_point(space, rng, 0.5), float(rng.uniform(0.0, 1.5))) for _ in range(50)]
        cones = [disks.lower_cone(space, ds, k) for k in range(len(ds))]
        bad = 0
        for i in range(len(ds)):
            for j in range(len(ds)):
                bad += disks.contains(space, ds[i], ds[j]) != (cones[j] <= cones[i])
        out.append(PropertyResult(f"{space.kind}: lower-cone equivalence", float(bad), 0.0))
    return out


# --- equivalence -----------------------------------------------------------

def _orthant_pair(rng, n):
    x = rng.uniform(0.1, 2.0, n)
    if rng.random() < 0.5:
        y = x + rng.uniform(1e-3, 1.0, n)
    else:
        y = rng.uniform(0.1, 2.0, n)
    return x, y


def suite_order(rng, trials, K, fault):
    m = equivalence.OrderEmbeddingMap(4, a=1.5)
    iso = ident = bound = 0.0
    for _ in range(trials):
        x, y = _orthant_pair(rng, m.n)
        a, b = equivalence.phi_ord(m, x), equivalence.phi_ord(m, y)
        iso += equivalence.order_relation(x, y) != disks.contains(m.space, a, b)
        l = disks.protrusion(m.space, a, b)
        ident = max(ident, abs(np.max(x - y) - l))
        bound = max(bound, max(l, 0.0) ** 2 - equivalence.energy_order(x, y))
    eq_bad = 0
    for _ in range(trials):
        x = rng.uniform(0.5, 2.0, m.n)
        y = x + rng.uniform(0.01, 1.0, m.n)
        n_pos = int(rng.integers(0, m.n + 1))
        idx = rng.permutation(m.n)[:n_pos]
        y[idx] = x[idx] - rng.uniform(1e-3, 0.4, n_pos)
        a, b = equivalence.phi_ord(m, x), equivalence.phi_ord(m, y)
        gap = equivalence.energy_order(x, y) - max(disks.protrusion(m.space, a, b), 0.0) ** 2
        eq_bad += (abs(gap) <= 1e-12) != (n_pos <= 1)
    return [
        PropertyResult("order map: isomorphism", float(iso), 0.0),
        PropertyResult("order map: max-coordinate identity", ident, IDENTITY_TOL),
        PropertyResult("order map: energy lower bound", max(bound, 0.0), IDENTITY_TOL),
        PropertyResult("order map: equality condition", float(eq_bad), 0.0),
    ]


def ball_point(rng, params, n=3, lo_margin=0.01, hi=0.95):
    v = rng.normal(size=n)
    return v / np.linalg.norm(v) * rng.uniform(params.r_min + lo_margin, hi)


def cone_pair(rng, params, n=3):
    """Random apex/point pair; about half of them are placed near the apex axis."""
    x = ball_point(rng, params, n)
    if rng.random() < 0.5:
        return x, ball_point(rng, params, n)
    u = x / np.linalg.norm(x) + rng.normal(scale=0.3, size=n)
    return x, u / np.linalg.norm(u) * rng.uniform(params.r_min + 0.01, 0.95)


def suite_cones(rng, trials, K, fault):
    params = equivalence.ConeParams(K)
    S = geometry.QuasiMetricSpace.sphere(3)
    iso = agree = sign = 0.0
    for _ in range(trials):
        x, y = cone_pair(rng, params)
        a, b = equivalence.phi_hyp(x, params), equivalence.phi_hyp(y, params)
        iso += equivalence.cone_relation(x, y, params) != disks.contains(S, a, b)
        e = equivalence.energy_hyp_closed_form(a, b, params)
        agree = max(agree, abs(e - equivalence.energy_hyp_direct(x, y, params)))
        sign += (e > 0) != (disks.protrusion(S, a, b) > 0)
    rot = 0.0
    for _ in range(trials):
        x = ball_point(rng, params)
        Q = ortho_group.rvs(3, random_state=rng)
        a, b = equivalence.phi_hyp(x, params), equivalence.phi_hyp(Q @ x, params)
        rot = max(rot, float(np.max(np.abs(Q @ a.center - b.center))), abs(a.radius - b.radius))
    return [
        PropertyResult("cone map: isomorphism", float(iso), 0.0),
        PropertyResult("cone map: closed-form energy", agree, CONE_TOL),
        PropertyResult("cone map: energy sign", float(sign), 0.0),
        PropertyResult("cone map: rotation equivariance", rot, ROTATION_TOL),
    ]


def linearization_orders(rng, params, trials, deltas=(1e-3, 5e-4, 2.5e-4, 1.25e-4)):
    """Observed convergence orders of the first-order cone-energy expansion."""
    upper = np.pi / 2 - params.theta0
    orders = []
    while len(orders) < trials:
        ri, rj = sorted(rng.uniform(0.05, upper - 0.05, 2), reverse=True)
        if ri - rj < 0.05:
            continue
        d0 = ri - rj
        q = equivalence.q_factor(d0, ri, rj, params)
        res = [abs(equivalence.energy_hyp_from_terms(d0 + h, ri, rj, params) - q * h) for h in deltas]
        if min(res) < 1e-13:
            continue
        orders.extend(np.log2(np.array(res[:-1]) / np.array(res[1:])))
    return np.array(orders)


def suite_linearization(rng, trials, K, fault):
    params = equivalence.ConeParams(K)
    orders = linearization_orders(rng, params, max(trials // 10, 10))
    return [PropertyResult("cone map: quadratic linearization residual", float(np.max(np.abs(orders - 2.0))), LINEARIZATION_ORDER_TOL)]


def planar_cone_oracle(r_x, r_y, D, K):
    """``sin(psi - Xi)`` from an explicit planar layout of the two cones.

    Apex ``X`` sits on the positive x-axis at ``K / sin(psi)`` and ``Y`` at
    angle ``D`` and distance ``K / sin(phi)``, where ``psi = r_x + xi0`` and
    ``phi = r_y + xi0`` solve the tangency conditions. ``Xi`` is the angle
    between the ray ``O -> X`` and the segment ``X -> Y``.
    """
    xi0 = np.arcsin(K)
    psi, phi = r_x + xi0, r_y + xi0
    X = np.array([K / np.sin(psi), 0.0])
    Y = K / np.sin(phi) * np.array([np.cos(D), np.sin(D)])
    v = Y - X
    return float(np.sin(psi - np.arctan2(abs(v[1]), v[0])))


def suite_planar_cones(rng, trials, K, fault):
    if not 0 < K < 1:
        return [PropertyResult("euclidean cones: angle formula", float("nan"), PLANAR_CONE_TOL)]
    xi0 = np.arcsin(K)
    worst = 0.0
    for _ in range(max(trials // 5, 1)):
        r_x, r_y = rng.uniform(1e-3, np.pi / 2 - xi0 - 1e-3, 2)
        D = rng.uniform(1e-3, np.pi - 1e-3)
        worst = max(worst, abs(equivalence.euclidean_cone_angle_diff(r_x, r_y, D, K) - planar_cone_oracle(r_x, r_y, D, K)))
    return [PropertyResult("euclidean cones: angle formula", worst, PLANAR_CONE_TOL)]


SUITES = (
    suite_axioms,
    suite_gradients,
    suite_geodesics,
    suite_manifold,
    suite_poset,
    suite_lower_cones,
    suite_order,
    suite_cones,
    suite_linearization,
    suite_planar_cones,
)


def run_all(trials: int = 1000, seed: int = 0, K: float = 0.1, threads: int = 1, fault: str | None = None):
    if trials < 1:
        raise InvalidArgumentError("trials must be at least 1")
    if fault is not None and fault not in FAULTS:
        raise InvalidArgumentError(f"unknown fault {fault!r}; choose from {FAULTS}")
    seeds = np.random.SeedSequence(seed).spawn(len(SUITES))

    def run(k):
        return SUITES[k](np.random.default_rng(seeds[k]), trials, K, fault)

    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        chunks = list(pool.map(run, range(len(SUITES))))
    return [r for chunk in chunks for r in chunk]
