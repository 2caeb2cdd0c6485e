import math

import numpy as np
import pytest
from scipy.stats import ortho_group

from diskembed import disks, equivalence as eq, geometry
from diskembed.errors import DomainError, InvalidArgumentError, NumericDegeneracyError
from diskembed.verify import cone_pair

SPHERE3 = geometry.QuasiMetricSpace.sphere(3)
PARAMS = eq.ConeParams(0.1)


# --- order embeddings ------------------------------------------------------

class TestOrder:
    def test_relation_examples(self):
        assert eq.order_relation([1, 2], [1, 2])
        assert eq.order_relation([1, 1], [2, 3])
        assert not eq.order_relation([2, 3], [1, 1])
        assert not eq.order_relation([1, 3], [2, 1]) and not eq.order_relation([2, 1], [1, 3])

    def test_orthant_required(self):
        with pytest.raises(DomainError):
            eq.order_relation([0.0, 1.0], [1.0, 1.0])
        with pytest.raises(DomainError):
            eq.phi_ord(eq.OrderEmbeddingMap(2), [-1.0, 1.0])

    def test_energy_examples(self):
        assert eq.energy_order([3, 1], [1, 2]) == 4.0
        assert eq.energy_order([1, 1], [2, 3]) == 0.0

    def test_map_invariants(self):
        m = eq.OrderEmbeddingMap(5, 2.0)
        np.testing.assert_allclose(m.P.sum(axis=1), 0.0, atol=1e-15)
        np.testing.assert_allclose(m.space.W.sum(axis=0), 0.0, atol=1e-15)
        with pytest.raises(InvalidArgumentError):
            eq.OrderEmbeddingMap(3, 0.0)

    def test_phi_examples(self):
        m = eq.OrderEmbeddingMap(3, 1.0)
        d = eq.phi_ord(m, [0.4, 0.4, 0.4])
        np.testing.assert_allclose(d.center, 0.0, atol=1e-15)
        assert d.radius == pytest.approx(0.6)
        d = eq.phi_ord(eq.OrderEmbeddingMap(2, 1.0), [1.0, 1e-4])
        np.testing.assert_allclose(d.center, [0.49995, -0.49995], atol=1e-15)
        assert d.radius == pytest.approx(0.49995)

    def test_center_on_hyperplane(self, rng):
        m = eq.OrderEmbeddingMap(6)
        for _ in range(100):
            c = eq.phi_ord(m, rng.uniform(0.1, 5, 6)).center
            assert abs(c.sum()) < 1e-12
            assert geometry.membership_residual(m.space, c) < 1e-12

    def test_isomorphism_and_identity(self, rng):
        m = eq.OrderEmbeddingMap(4, 1.5)
        seen = set()
        for k in range(1000):
            x = rng.uniform(0.1, 2, 4)
            y = x + rng.uniform(1e-3, 1, 4) if k % 2 else rng.uniform(0.1, 2, 4)
            a, b = eq.phi_ord(m, x), eq.phi_ord(m, y)
            rel = eq.order_relation(x, y)
            seen.add(rel)
            assert rel == disks.contains(m.space, a, b)
            assert np.max(x - y) == pytest.approx(disks.protrusion(m.space, a, b), abs=1e-9)
        assert seen == {True, False}

    def test_energy_lower_bound_and_equality(self, rng):
        m = eq.OrderEmbeddingMap(4)
        for n_pos in range(5):
            for _ in range(50):
                x = rng.uniform(0.5, 2, 4)
                y = x + rng.uniform(0.01, 1, 4)
                idx = rng.permutation(4)[:n_pos]
                y[idx] = x[idx] - rng.uniform(1e-3, 0.4, n_pos)
                l = disks.protrusion(m.space, eq.phi_ord(m, x), eq.phi_ord(m, y))
                e = eq.energy_order(x, y)
                assert e >= max(l, 0) ** 2 - 1e-12
                if n_pos <= 1:
                    assert e == pytest.approx(max(l, 0) ** 2, abs=1e-12)
                else:
                    assert e - max(l, 0) ** 2 > 1e-7


# --- hyperbolic cones ------------------------------------------------------

def mobius_xi(x, y):
    """Angle between the outward ray at x and the geodesic x -> y, via the Mobius log map.

    Translating x to the origin makes geodesics through it straight lines, and
    the translation is conformal, so the angle can be read off there.
    """
    def mobius_add(a, b):
        ab, aa, bb = a @ b, a @ a, b @ b
        return ((1 + 2 * ab + bb) * a + (1 - aa) * b) / (1 + 2 * ab + aa * bb)

    def dmobius(a, b, v, h=1e-7):
        return (mobius_add(a, b + h * v) - mobius_add(a, b - h * v)) / (2 * h)

    u = mobius_add(-x, y)  # direction of the geodesic at the origin after translation
    # pull the outward radial direction at x back to the origin
    radial = dmobius(-x, x, x / np.linalg.norm(x))
    c = u @ radial / (np.linalg.norm(u) * np.linalg.norm(radial))
    return math.acos(np.clip(c, -1, 1))


class TestCones:
    def test_params(self):
        p = eq.ConeParams(0.1)
        assert 0 < p.theta0 < math.pi / 2 and 0 < p.r_min < 1
        assert p.K * p.r_min ** 2 + p.r_min - p.K == pytest.approx(0, abs=1e-15)
        assert p.r_min == pytest.approx(0.0990195, abs=1e-7)
        with pytest.raises(InvalidArgumentError):
            eq.ConeParams(0.0)

    def test_xi_against_mobius_oracle(self, rng):
        for _ in range(300):
            x, y = cone_pair(rng, PARAMS)
            _, xi = eq.cone_angles(x, y, PARAMS)
            assert xi == pytest.approx(mobius_xi(x, y), abs=1e-6)

    def test_collinear_beyond_apex(self):
        psi, xi = eq.cone_angles([0.5, 0.0], [0.8, 0.0], PARAMS)
        assert xi == pytest.approx(0.0, abs=1e-12)
        assert psi > 0

    def test_psi_vanishes_at_boundary(self):
        assert eq.generatrix_angle([1 - 1e-9, 0.0], PARAMS) < 1e-8

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            eq.cone_angles([0.05, 0.0], [0.5, 0.1], PARAMS)
        with pytest.raises(DomainError):
            eq.cone_angles([0.0, 0.0], [0.5, 0.1], PARAMS)
        with pytest.raises(DomainError):
            eq.phi_hyp([0.05, 0.0], PARAMS)
        with pytest.raises(DomainError):
            eq.phi_hyp([1.0, 0.0], PARAMS)

    def test_phi_radius_limits(self):
        assert eq.phi_hyp([1 - 1e-12, 0.0, 0.0], PARAMS).radius == pytest.approx(0.0, abs=1e-9)
        r = eq.phi_hyp([PARAMS.r_min, 0.0, 0.0], PARAMS).radius
        assert r == pytest.approx(math.pi / 2 - PARAMS.theta0, abs=1e-7)

    def test_example_pair_verdicts_agree(self):
        x, y = np.array([0.5, 0.0]), np.array([0.7, 0.1])
        a, b = eq.phi_hyp(x, PARAMS), eq.phi_hyp(y, PARAMS)
        e = eq.energy_hyp_closed_form(a, b, PARAMS)
        assert eq.cone_relation(x, y, PARAMS) == (e == 0.0)
        assert e == pytest.approx(eq.energy_hyp_direct(x, y, PARAMS), abs=1e-9)

    def test_isomorphism_and_closed_form(self, rng):
        inside = 0
        for _ in range(1000):
            x, y = cone_pair(rng, PARAMS)
            a, b = eq.phi_hyp(x, PARAMS), eq.phi_hyp(y, PARAMS)
            rel = eq.cone_relation(x, y, PARAMS)
            inside += rel
            assert rel == disks.contains(SPHERE3, a, b)
            e = eq.energy_hyp_closed_form(a, b, PARAMS)
            assert e == pytest.approx(eq.energy_hyp_direct(x, y, PARAMS), abs=1e-6)
            assert (e > 0) == (disks.protrusion(SPHERE3, a, b) > 0)
        assert 20 < inside < 980

    def test_principal_branch_misses_obtuse_angles(self, rng):
        # the bare arcsin caps the energy at pi/2; the resolved branch does not
        wrong = 0
        for _ in range(300):
            x, y = cone_pair(rng, PARAMS)
            a, b = eq.phi_hyp(x, PARAMS), eq.phi_hyp(y, PARAMS)
            direct = eq.energy_hyp_direct(x, y, PARAMS)
            principal = eq.energy_hyp_closed_form(a, b, PARAMS, branch="principal")
            assert principal <= math.pi / 2 + 1e-12
            wrong += abs(principal - direct) > 1e-6
        assert wrong > 0

    def test_radius_domain(self):
        a = disks.FormalDisk(np.array([1.0, 0, 0]), 1.5)
        b = disks.FormalDisk(np.array([0, 1.0, 0]), 0.2)
        with pytest.raises(DomainError):
            eq.energy_hyp_closed_form(a, b, PARAMS)
        with pytest.raises(InvalidArgumentError):
            eq.energy_hyp_closed_form(b, b, PARAMS, branch="other")

    def test_rotation_equivariance(self, rng):
        for _ in range(100):
            x = rng.normal(size=3)
            x *= rng.uniform(0.2, 0.9) / np.linalg.norm(x)
            Q = ortho_group.rvs(3, random_state=rng)
            a, b = eq.phi_hyp(x, PARAMS), eq.phi_hyp(Q @ x, PARAMS)
            np.testing.assert_allclose(Q @ a.center, b.center, atol=1e-12)
            assert b.radius == pytest.approx(a.radius, abs=1e-12)

    def test_linearization_is_second_order(self, rng):
        upper = math.pi / 2 - PARAMS.theta0
        for _ in range(50):
            ri, rj = sorted(rng.uniform(0.1, upper - 0.1, 2), reverse=True)
            if ri - rj < 0.05:
                continue
            d0 = ri - rj
            res = [abs(eq.energy_hyp_from_terms(d0 + h, ri, rj, PARAMS) - eq.energy_hyp_linearized(ri, rj, d0 + h, PARAMS))
                   for h in (1e-3, 5e-4, 2.5e-4)]
            assert res[0] / res[1] == pytest.approx(4.0, rel=0.03)
            assert res[1] / res[2] == pytest.approx(4.0, rel=0.03)
            assert eq.energy_hyp_linearized(ri, rj, d0 - 1e-3, PARAMS) == 0.0


# --- euclidean cones -------------------------------------------------------

def planar_oracle(r_x, r_y, D, K):
    """Solve the tangency system numerically for the apex positions, then measure angles."""
    from scipy.optimize import brentq

    xi0 = math.asin(K)

    def apex_norm(r):
        # apex distance t on a ray whose cone (half-aperture asin(K / t))
        # passes through the unit-circle point at angular offset r
        return brentq(lambda t: _tangent_gap(t, r, K), K + 1e-12, 1.0 - 1e-15)

    tx, ty = apex_norm(r_x), apex_norm(r_y)
    X = np.array([tx, 0.0])
    Y = ty * np.array([math.cos(D), math.sin(D)])
    v = Y - X
    xi = math.atan2(abs(v[1]), v[0])
    psi = math.asin(K / tx)
    assert abs(psi - (r_x + xi0)) < 1e-9
    return math.sin(psi - xi)


def _tangent_gap(t, r, K):
    """Half-aperture minus the angle from the ray to the boundary point at offset r."""
    P = np.array([math.cos(r), math.sin(r)])
    w = P - np.array([t, 0.0])
    return math.asin(K / t) - math.atan2(w[1], w[0])


class TestEuclideanCones:
    K = 0.2

    def test_matches_planar_solve(self, rng):
        xi0 = math.asin(self.K)
        for _ in range(200):
            r_x, r_y = rng.uniform(0.01, math.pi / 2 - xi0 - 0.01, 2)
            D = rng.uniform(0.01, math.pi - 0.01)
            assert eq.euclidean_cone_angle_diff(r_x, r_y, D, self.K) == pytest.approx(
                planar_oracle(r_x, r_y, D, self.K), abs=1e-6)

    def test_containment_boundary_is_zero(self):
        # D = r_x - r_y puts the inner cone on the outer one's generatrix
        assert eq.euclidean_cone_angle_diff(0.8, 0.3, 0.5, self.K) == pytest.approx(0.0, abs=1e-15)
        assert eq.euclidean_cone_angle_diff(0.8, 0.3, 0.4, self.K) > 0
        assert eq.euclidean_cone_angle_diff(0.8, 0.3, 0.6, self.K) < 0

    def test_degenerate(self):
        with pytest.raises(NumericDegeneracyError):
            eq.euclidean_cone_angle_diff(0.4, 0.4, 0.0, self.K)

    def test_domain(self):
        with pytest.raises(DomainError):
            eq.euclidean_cone_angle_diff(0.4, 0.3, 0.1, 1.5)
