"""Pure-Python fallback for the compiled RSGD loop (``_kernels.pyx``).

Operation order and arithmetic match the compiled version line for line so
that both backends agree to rounding.
"""

import math

import numpy as np

EUCLIDEAN, POLYHEDRAL, SPHERE, LORENTZ = 0, 1, 2, 3
SHORT_VECTOR = 1e-12
DEGENERATE_NORM = 1e-15


def _minkowski(u, v):
    s = -u[0] * v[0]
    for k in range(1, len(u)):
        s += u[k] * v[k]
    return s


def _distance(kind, a, b, W):
    """Return ``(d(a, b), active generator index)``."""
    D = len(a)
    if kind == EUCLIDEAN:
        s = 0.0
        for k in range(D):
            t = a[k] - b[k]
            s += t * t
        return math.sqrt(s), 0
    if kind == POLYHEDRAL:
        best = 0.0
        arg = 0
        for m, w in enumerate(W):
            s = 0.0
            for k in range(D):
                s += w[k] * (a[k] - b[k])
            if m == 0 or s > best:
                best = s
                arg = m
        return best, arg
    if kind == SPHERE:
        s = 0.0
        t = 0.0
        for k in range(D):
            u = a[k] - b[k]
            w = a[k] + b[k]
            s += u * u
            t += w * w
        return 2.0 * math.atan2(math.sqrt(s), math.sqrt(t)), 0
    u = a[0] - b[0]
    s = -u * u
    for k in range(1, D):
        u = a[k] - b[k]
        s += u * u
    s = math.sqrt(s) if s > 0.0 else 0.0
    return 2.0 * math.asinh(s / 2.0), 0


def _grad(kind, p, q):
    """Gradient of d(p, q) w.r.t. p, or None when undefined."""
    D = len(p)
    if kind == EUCLIDEAN:
        out = [p[k] - q[k] for k in range(D)]
        n = 0.0
        for k in range(D):
            n += out[k] * out[k]
        n = math.sqrt(n)
        if n <= DEGENERATE_NORM:
            return None
        return [o / n for o in out]
    if kind == SPHERE:
        s = 0.0
        for k in range(D):
            s += p[k] * q[k]
        out = [0.0] * D
        n = 0.0
        for k in range(D):
            out[k] = q[k] - s * p[k]
            n += out[k] * out[k]
        n = math.sqrt(n)
    else:
        s = _minkowski(p, q)
        out = [q[k] + s * p[k] for k in range(D)]
        n = _minkowski(out, out)
        n = math.sqrt(n) if n > 0.0 else 0.0
    if n <= DEGENERATE_NORM:
        return None
    return [-o / n for o in out]


def _step(kind, x, g, scale):
    D = len(x)
    v = [scale * gk for gk in g]
    if kind in (EUCLIDEAN, POLYHEDRAL):
        return [x[k] + v[k] for k in range(D)]
    if kind == SPHERE:
        n = 0.0
        for k in range(D):
            n += v[k] * v[k]
        n = math.sqrt(n)
        if n < SHORT_VECTOR:
            return x
        c, sn = math.cos(n), math.sin(n)
        out = [0.0] * D
        s = 0.0
        for k in range(D):
            out[k] = x[k] * c + (v[k] / n) * sn
            s += out[k] * out[k]
        s = math.sqrt(s)
        return [o / s for o in out]
    n = _minkowski(v, v)
    n = math.sqrt(n) if n > 0.0 else 0.0
    if n < SHORT_VECTOR:
        return x
    c, sn = math.cosh(n), math.sinh(n)
    out = [x[k] * c + (v[k] / n) * sn for k in range(D)]
    s = 1.0
    for k in range(1, D):
        s += out[k] * out[k]
    out[0] = math.sqrt(s)
    return out


def run_samples(kind, centers, radii, W, heads, tails, positive, margin, lr, lam, nu):
    """Apply one RSGD update per (head, tail, label) sample, in order.

    ``centers`` and ``radii`` are updated in place. Returns the loss of each
    sample evaluated just before its update.
    """
    W = W.tolist()
    losses = np.empty(len(heads), dtype=np.float64)
    for s, (i, j, pos) in enumerate(zip(heads.tolist(), tails.tolist(), positive.tolist())):
        xi = centers[i].tolist()
        xj = centers[j].tolist()
        d, arg = _distance(kind, xj, xi, W)
        E = d - (radii[j] - radii[i])
        if pos:
            loss = E if E > 0.0 else 0.0
            g = 1.0 if E > 0.0 else 0.0
        else:
            loss = margin - E if E < margin else 0.0
            g = -1.0 if E < margin else 0.0
        losses[s] = loss
        if g == 0.0:
            continue
        if kind == POLYHEDRAL:
            gj = W[arg]
            gi = [-w for w in W[arg]]
        else:
            gj = _grad(kind, xj, xi)
            gi = _grad(kind, xi, xj)
        if gj is not None and gi is not None:
            centers[j] = _step(kind, xj, gj, -lr * lam * g)
            centers[i] = _step(kind, xi, gi, -lr * lam * g)
        radii[j] = radii[j] + lr * nu * g
        radii[i] = radii[i] - lr * nu * g
    return losses
