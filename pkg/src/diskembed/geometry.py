"""Distance, gradient and exponential-map kernels for the supported spaces.

Four quasi-metric spaces are supported:

``euclidean``
    R^n with the usual norm.
``polyhedral``
    R^n with ``d_W(x, y) = max_k w_k . (x - y)``. Asymmetric in general.
``sphere``
    The unit sphere embedded in R^n, geodesic (great-circle) distance.
``lorentz``
    The upper sheet of the hyperboloid ``<x, x>_L = -1`` in R^(n+1),
    curvature -1.

Points and tangent vectors are plain float64 numpy arrays; a tangent vector's
base point is whatever point it is passed alongside. The Poincare-ball helpers
at the bottom are used for model conversion and by :mod:`diskembed.equivalence`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import helmert
from scipy.optimize import nnls

from .constants import CONIC_HULL_TOL, DEGENERATE_NORM, MEMBERSHIP_TOL, SHORT_VECTOR
from .errors import DegenerateGradientError, DomainError, InvalidArgumentError

EUCLIDEAN = "euclidean"
POLYHEDRAL = "polyhedral"
SPHERE = "sphere"
LORENTZ = "lorentz"
KINDS = (EUCLIDEAN, POLYHEDRAL, SPHERE, LORENTZ)

FIRST = "first"
SECOND = "second"


@dataclass(frozen=True)
class QuasiMetricSpace:
    """Immutable geometry descriptor.

    ``dim`` is always the number of ambient coordinates of a point, so a
    Lorentz space ``L^n`` has ``dim == n + 1``. Use the classmethod
    constructors rather than calling this directly.

    For polyhedral spaces the conic hull of ``generators`` must be the whole
    space. With ``restrict_to_span=True`` it only has to be the linear span of
    the generators, and points are required to lie in that span instead.
    """

    kind: str
    dim: int
    generators: tuple[tuple[float, ...], ...] | None = None
    restrict_to_span: bool = False
    _W: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)
    _span_basis: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown geometry {self.kind!r}; expected one of {KINDS}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidArgumentError(f"dim must be a positive integer, got {self.dim!r}")
        if self.kind == SPHERE and self.dim < 2:
            raise InvalidArgumentError("sphere needs at least 2 ambient coordinates")
        if self.kind == LORENTZ and self.dim < 2:
            raise InvalidArgumentError("lorentz needs at least 2 ambient coordinates")
        if self.kind == POLYHEDRAL:
            if not self.generators:
                raise InvalidArgumentError("polyhedral space needs generators")
            W = np.array(self.generators, dtype=np.float64)
            if W.ndim != 2 or W.shape[1] != self.dim:
                raise InvalidArgumentError(f"generators must have shape (m, {self.dim}), got {W.shape}")
            if not np.all(np.isfinite(W)):
                raise InvalidArgumentError("generators must be finite")
            W.setflags(write=False)
            basis = _check_conic_hull(W, self.restrict_to_span)
            object.__setattr__(self, "_W", W)
            object.__setattr__(self, "_span_basis", basis)
        elif self.generators is not None:
            raise InvalidArgumentError(f"{self.kind} space takes no generators")

    @classmethod
    def euclidean(cls, n: int) -> "QuasiMetricSpace":
        return cls(EUCLIDEAN, n)

    @classmethod
    def sphere(cls, n: int) -> "QuasiMetricSpace":
        """Unit sphere S^(n-1) with ``n`` ambient coordinates."""
        return cls(SPHERE, n)

    @classmethod
    def lorentz(cls, n: int) -> "QuasiMetricSpace":
        """Hyperboloid model of H^n, stored with ``n + 1`` coordinates."""
        return cls(LORENTZ, n + 1)

    @classmethod
    def polyhedral(cls, generators, restrict_to_span: bool = False) -> "QuasiMetricSpace":
        W = np.atleast_2d(np.asarray(generators, dtype=np.float64))
        return cls(POLYHEDRAL, W.shape[1], tuple(map(tuple, W.tolist())), restrict_to_span)

    @classmethod
    def simplex(cls, n: int) -> "QuasiMetricSpace":
        """Polyhedral space on R^n whose unit ball is a regular simplex.

        The ``n + 1`` generators are the canonical basis of R^(n+1) projected
        onto the zero-sum hyperplane, written in an orthonormal basis of it,
        so this space is the order-embedding geometry in intrinsic coordinates.
        """
        if n < 1:
            raise InvalidArgumentError("simplex space needs n >= 1")
        # rows of helmert(n+1) are an orthonormal basis of the zero-sum hyperplane
        return cls.polyhedral(helmert(n + 1).T)

    @classmethod
    def from_name(cls, geometry: str, dim: int) -> "QuasiMetricSpace":
        """Build a space from a user-facing geometry name and dimension.

        ``dim`` counts coordinates for euclidean, polyhedral (simplex
        generators) and sphere, and the intrinsic dimension for lorentz.
        """
        if geometry == EUCLIDEAN:
            return cls.euclidean(dim)
        if geometry == POLYHEDRAL:
            return cls.simplex(dim)
        if geometry == SPHERE:
            return cls.sphere(dim)
        if geometry == LORENTZ:
            return cls.lorentz(dim)
        raise InvalidArgumentError(f"unknown geometry {geometry!r}")

    @property
    def W(self) -> np.ndarray:
        if self._W is None:
            raise InvalidArgumentError(f"{self.kind} space has no generators")
        return self._W

    @property
    def is_symmetric(self) -> bool:
        return self.kind != POLYHEDRAL

    @property
    def is_riemannian(self) -> bool:
        return self.kind in (SPHERE, LORENTZ)

    @property
    def base_point(self) -> np.ndarray:
        p = np.zeros(self.dim)
        if self.kind in (SPHERE, LORENTZ):
            p[0] = 1.0
        return p

    @property
    def intrinsic_dim(self) -> int:
        if self.kind == LORENTZ:
            return self.dim - 1
        return self.dim


def _check_conic_hull(W: np.ndarray, restrict_to_span: bool) -> np.ndarray | None:
    """Verify every +/- basis direction is a nonnegative combination of rows of W."""
    dim = W.shape[1]
    if restrict_to_span:
        _, s, vt = np.linalg.svd(W, full_matrices=False)
        rank = int(np.sum(s > s[0] * 1e-12))
        basis = vt[:rank]
    else:
        basis = np.eye(dim)
    scale = max(1.0, float(np.abs(W).max()))
    for b in basis:
        for target in (b, -b):
            _, residual = nnls(W.T, target)
            if residual > CONIC_HULL_TOL * scale:
                raise InvalidArgumentError(
                    "conic hull of generators does not cover the space "
                    f"(direction {np.round(target, 6).tolist()} unreachable, residual {residual:.3g})"
                )
    return basis if restrict_to_span else None


def lorentz_inner(u, v) -> float:
    """Minkowski bilinear form ``-u0 v0 + sum_k uk vk``."""
    return float(-u[0] * v[0] + np.dot(u[1:], v[1:]))


def inner(space: QuasiMetricSpace, x, u, v) -> float:
    """Riemannian metric at ``x`` (constant for every supported space)."""
    if space.kind == LORENTZ:
        return lorentz_inner(u, v)
    return float(np.dot(u, v))


def tangent_norm(space: QuasiMetricSpace, x, v) -> float:
    return float(np.sqrt(max(inner(space, x, v, v), 0.0)))


def _as_point(space: QuasiMetricSpace, x, name="x") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (space.dim,):
        raise InvalidArgumentError(f"{name} has shape {x.shape}, expected ({space.dim},)")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"{name} has non-finite coordinates")
    return x


def membership_residual(space: QuasiMetricSpace, x) -> float:
    """How far ``x`` is from satisfying its space's membership invariant."""
    x = np.asarray(x, dtype=np.float64)
    if space.kind == SPHERE:
        return abs(float(np.linalg.norm(x)) - 1.0)
    if space.kind == LORENTZ:
        if x[0] <= 0:
            return float("inf")
        return abs(lorentz_inner(x, x) + 1.0)
    if space.kind == POLYHEDRAL and space.restrict_to_span:
        B = space._span_basis
        return float(np.linalg.norm(x - B.T @ (B @ x)))
    return 0.0


def check_point(space: QuasiMetricSpace, x, name="x") -> np.ndarray:
    x = _as_point(space, x, name)
    res = membership_residual(space, x)
    if res > MEMBERSHIP_TOL:
        raise InvalidArgumentError(f"{name} is not on the {space.kind} manifold (residual {res:.3g})")
    return x


def is_tangent(space: QuasiMetricSpace, x, v, tol: float = MEMBERSHIP_TOL) -> bool:
    if space.kind == SPHERE:
        return abs(float(np.dot(x, v))) <= tol * max(1.0, float(np.linalg.norm(v)))
    if space.kind == LORENTZ:
        return abs(lorentz_inner(x, v)) <= tol * max(1.0, float(np.abs(v).max()) * float(np.abs(x).max()))
    return True


def distance(space: QuasiMetricSpace, x, y, check: bool = True) -> float:
    if check:
        x = check_point(space, x, "x")
        y = check_point(space, y, "y")
    else:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
    kind = space.kind
    if kind == EUCLIDEAN:
        return float(np.linalg.norm(x - y))
    if kind == POLYHEDRAL:
        return float(np.max(space.W @ (x - y)))
    # chord forms: exact zero at x == y, no arccos cancellation near it
    if kind == SPHERE:
        return float(2.0 * np.arctan2(np.linalg.norm(x - y), np.linalg.norm(x + y)))
    diff = x - y
    return float(2.0 * np.arcsinh(np.sqrt(max(lorentz_inner(diff, diff), 0.0)) / 2.0))


def distance_rows(space: QuasiMetricSpace, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Row-wise ``distance(X[k], Y[k])`` without membership checks."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    kind = space.kind
    if kind == EUCLIDEAN:
        return np.sqrt(np.sum((X - Y) ** 2, axis=1))
    if kind == POLYHEDRAL:
        return np.max((X - Y) @ space.W.T, axis=1)
    if kind == SPHERE:
        return 2.0 * np.arctan2(np.linalg.norm(X - Y, axis=1), np.linalg.norm(X + Y, axis=1))
    D = X - Y
    m = -D[:, 0] ** 2 + np.sum(D[:, 1:] ** 2, axis=1)
    return 2.0 * np.arcsinh(np.sqrt(np.maximum(m, 0.0)) / 2.0)


def distance_grad(space: QuasiMetricSpace, x, y, wrt: str = FIRST) -> np.ndarray:
    """Riemannian gradient of ``d(x, y)`` with respect to one argument.

    For the metric spaces this is minus the unit initial velocity of the
    geodesic from the differentiation point towards the other point. For the
    polyhedral space it is the active generator (lowest index on ties),
    negated for the second argument.
    """
    if wrt not in (FIRST, SECOND):
        raise InvalidArgumentError(f"wrt must be 'first' or 'second', got {wrt!r}")
    x = check_point(space, x, "x")
    y = check_point(space, y, "y")
    kind = space.kind
    if kind == POLYHEDRAL:
        w = space.W[int(np.argmax(space.W @ (x - y)))].copy()
        return w if wrt == FIRST else -w
    # symmetric spaces: the second-argument gradient is the mirrored formula at y
    p, q = (x, y) if wrt == FIRST else (y, x)
    if kind == EUCLIDEAN:
        diff = p - q
        n = float(np.linalg.norm(diff))
        if n <= DEGENERATE_NORM:
            raise DegenerateGradientError("distance gradient undefined at coincident points")
        return diff / n
    if kind == SPHERE:
        h = q - np.dot(p, q) * p
        n = float(np.linalg.norm(h))
    else:
        h = q + lorentz_inner(p, q) * p
        n = float(np.sqrt(max(lorentz_inner(h, h), 0.0)))
    if n <= DEGENERATE_NORM:
        raise DegenerateGradientError("distance gradient undefined at coincident or antipodal points")
    return -h / n


def exp_map(space: QuasiMetricSpace, x, v) -> np.ndarray:
    x = check_point(space, x, "x")
    v = _as_point(space, v, "v")
    kind = space.kind
    if kind in (EUCLIDEAN, POLYHEDRAL):
        return x + v
    if not is_tangent(space, x, v):
        raise InvalidArgumentError(f"v is not tangent to the {kind} manifold at x")
    if kind == SPHERE:
        n = float(np.linalg.norm(v))
        if n < SHORT_VECTOR:
            return x.copy()
        return x * np.cos(n) + (v / n) * np.sin(n)
    n = float(np.sqrt(max(lorentz_inner(v, v), 0.0)))
    if n < SHORT_VECTOR:
        return x.copy()
    return x * np.cosh(n) + (v / n) * np.sinh(n)


def project_to_manifold(space: QuasiMetricSpace, p) -> np.ndarray:
    p = _as_point(space, p, "p")
    if space.kind == SPHERE:
        n = float(np.linalg.norm(p))
        if n == 0.0:
            raise InvalidArgumentError("cannot project the zero vector onto the sphere")
        return p / n
    if space.kind == LORENTZ:
        out = p.copy()
        out[0] = np.sqrt(1.0 + np.dot(p[1:], p[1:]))
        return out
    return p.copy()


def tangent_project(space: QuasiMetricSpace, x, g) -> np.ndarray:
    x = _as_point(space, x, "x")
    g = _as_point(space, g, "g")
    if space.kind == SPHERE:
        return g - np.dot(x, g) * x
    if space.kind == LORENTZ:
        return g + lorentz_inner(x, g) * x
    return g.copy()


def random_point(space: QuasiMetricSpace, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Draw a point; ``scale`` bounds Euclidean coordinates / Lorentz tangent spread."""
    kind = space.kind
    if kind == SPHERE:
        p = rng.normal(size=space.dim)
        return p / np.linalg.norm(p)
    if kind == LORENTZ:
        v = np.zeros(space.dim)
        v[1:] = rng.normal(scale=scale, size=space.dim - 1)
        return exp_map(space, space.base_point, v)
    p = rng.uniform(-scale, scale, size=space.dim)
    if kind == POLYHEDRAL and space.restrict_to_span:
        B = space._span_basis
        p = B.T @ (B @ p)
    return p


def random_tangent(space: QuasiMetricSpace, x, rng: np.random.Generator) -> np.ndarray:
    return tangent_project(space, x, rng.normal(size=space.dim))


# --- Poincare ball ---------------------------------------------------------

def _ball_point(p, name) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or not np.all(np.isfinite(p)):
        raise InvalidArgumentError(f"{name} must be a finite vector")
    if np.dot(p, p) >= 1.0:
        raise DomainError(f"{name} lies outside the open unit ball (norm {np.linalg.norm(p):.6g})")
    return p


def poincare_distance(x, y) -> float:
    x = _ball_point(x, "x")
    y = _ball_point(y, "y")
    num = 2.0 * np.dot(x - y, x - y)
    den = (1.0 - np.dot(x, x)) * (1.0 - np.dot(y, y))
    # cosh d - 1 = num / den = 2 sinh^2(d / 2)
    return float(2.0 * np.arcsinh(np.sqrt(num / (2.0 * den))))


def poincare_translate(x, y) -> np.ndarray:
    """Mobius translation of ``x`` that carries the origin to ``y``."""
    x = _ball_point(x, "x")
    y = _ball_point(y, "y")
    xy = np.dot(x, y)
    xx = np.dot(x, x)
    yy = np.dot(y, y)
    return ((1.0 - yy) * x + (1.0 + 2.0 * xy + xx) * y) / (1.0 + 2.0 * xy + yy * xx)


def lorentz_to_poincare(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise InvalidArgumentError("lorentz point needs at least 2 coordinates")
    if abs(lorentz_inner(x, x) + 1.0) > MEMBERSHIP_TOL or x[0] <= 0:
        raise InvalidArgumentError("x is not on the upper hyperboloid")
    return x[1:] / (1.0 + x[0])


def poincare_to_lorentz(p) -> np.ndarray:
    p = _ball_point(p, "p")
    pp = np.dot(p, p)
    out = np.empty(p.shape[0] + 1)
    out[0] = (1.0 + pp) / (1.0 - pp)
    out[1:] = 2.0 * p / (1.0 - pp)
    return out
