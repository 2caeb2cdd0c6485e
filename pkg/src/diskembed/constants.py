"""Numerical tolerances. Tests import these instead of repeating literals."""

# manifold membership and tangency
MEMBERSHIP_TOL = 1e-9
# exp_map returns the base point for shorter tangent vectors
SHORT_VECTOR = 1e-12
# below this norm the geodesic direction is treated as undefined
DEGENERATE_NORM = 1e-15
# conic hull feasibility residual for polyhedral generators
CONIC_HULL_TOL = 1e-9
# resampling budget for negative pairs
MAX_NEGATIVE_ATTEMPTS = 100
