# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-sample RSGD loop. Mirrors ``_kernels_py.run_samples`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, cosh, sinh, atan2, asinh

cnp.import_array()

cdef enum:
    EUCLIDEAN = 0
    POLYHEDRAL = 1
    SPHERE = 2
    LORENTZ = 3

cdef double SHORT_VECTOR = 1e-12
cdef double DEGENERATE_NORM = 1e-15


cdef inline double _minkowski(double[::1] u, double[::1] v, Py_ssize_t D) nogil:
    cdef double s = -u[0] * v[0]
    cdef Py_ssize_t k
    for k in range(1, D):
        s += u[k] * v[k]
    return s


cdef double _distance(int kind, double[:, ::1] X, Py_ssize_t a, Py_ssize_t b,
                      const double[:, ::1] W, Py_ssize_t* arg) nogil:
    """d(X[a], X[b])."""
    cdef Py_ssize_t D = X.shape[1], k, m
    cdef double s, t, best
    if kind == EUCLIDEAN:
        s = 0.0
        for k in range(D):
            t = X[a, k] - X[b, k]
            s += t * t
        return sqrt(s)
    if kind == POLYHEDRAL:
        best = 0.0
        arg[0] = 0
        for m in range(W.shape[0]):
            s = 0.0
            for k in range(D):
                s += W[m, k] * (X[a, k] - X[b, k])
            if m == 0 or s > best:
                best = s
                arg[0] = m
        return best
    if kind == SPHERE:
        s = 0.0
        best = 0.0
        for k in range(D):
            t = X[a, k] - X[b, k]
            s += t * t
            t = X[a, k] + X[b, k]
            best += t * t
        return 2.0 * atan2(sqrt(s), sqrt(best))
    t = X[a, 0] - X[b, 0]
    s = -t * t
    for k in range(1, D):
        t = X[a, k] - X[b, k]
        s += t * t
    s = sqrt(s) if s > 0.0 else 0.0
    return 2.0 * asinh(s / 2.0)


cdef bint _grad(int kind, double[:, ::1] X, Py_ssize_t p, Py_ssize_t q,
                double[::1] out) nogil:
    """Gradient of d(X[p], X[q]) w.r.t. X[p] for the symmetric spaces.

    Returns False when the direction is undefined.
    """
    cdef Py_ssize_t D = X.shape[1], k
    cdef double s, n
    if kind == EUCLIDEAN:
        n = 0.0
        for k in range(D):
            out[k] = X[p, k] - X[q, k]
            n += out[k] * out[k]
        n = sqrt(n)
        if n <= DEGENERATE_NORM:
            return False
        for k in range(D):
            out[k] = out[k] / n
        return True
    if kind == SPHERE:
        s = 0.0
        for k in range(D):
            s += X[p, k] * X[q, k]
        n = 0.0
        for k in range(D):
            out[k] = X[q, k] - s * X[p, k]
            n += out[k] * out[k]
        n = sqrt(n)
    else:
        s = -X[p, 0] * X[q, 0]
        for k in range(1, D):
            s += X[p, k] * X[q, k]
        for k in range(D):
            out[k] = X[q, k] + s * X[p, k]
        n = _minkowski(out, out, D)
        n = sqrt(n) if n > 0.0 else 0.0
    if n <= DEGENERATE_NORM:
        return False
    for k in range(D):
        out[k] = -out[k] / n
    return True


cdef void _step(int kind, double[:, ::1] X, Py_ssize_t p, double[::1] g,
                double scale, double[::1] v) nogil:
    """X[p] <- project(exp_{X[p]}(scale * g))."""
    cdef Py_ssize_t D = X.shape[1], k
    cdef double n, c, sn, s
    for k in range(D):
        v[k] = scale * g[k]
    if kind == EUCLIDEAN or kind == POLYHEDRAL:
        for k in range(D):
            X[p, k] = X[p, k] + v[k]
        return
    if kind == SPHERE:
        n = 0.0
        for k in range(D):
            n += v[k] * v[k]
        n = sqrt(n)
        if n < SHORT_VECTOR:
            return
        c = cos(n)
        sn = sin(n)
        s = 0.0
        for k in range(D):
            X[p, k] = X[p, k] * c + (v[k] / n) * sn
            s += X[p, k] * X[p, k]
        s = sqrt(s)
        for k in range(D):
            X[p, k] = X[p, k] / s
        return
    n = _minkowski(v, v, D)
    n = sqrt(n) if n > 0.0 else 0.0
    if n < SHORT_VECTOR:
        return
    c = cosh(n)
    sn = sinh(n)
    s = 1.0
    for k in range(D):
        X[p, k] = X[p, k] * c + (v[k] / n) * sn
    for k in range(1, D):
        s += X[p, k] * X[p, k]
    X[p, 0] = sqrt(s)


def run_samples(int kind, double[:, ::1] centers, double[::1] radii, const double[:, ::1] W,
                const cnp.int64_t[::1] heads, const cnp.int64_t[::1] tails,
                const cnp.uint8_t[::1] positive,
                double margin, double lr, double lam, double nu):
    """Apply one RSGD update per (head, tail, label) sample, in order.

    ``centers`` and ``radii`` are updated in place. Returns the loss of each
    sample evaluated just before its update.
    """
    cdef Py_ssize_t S = heads.shape[0], D = centers.shape[1], s, i, j, k, arg = 0
    cdef double E, g, loss
    cdef bint ok_i, ok_j
    losses_arr = np.empty(S, dtype=np.float64)
    cdef double[::1] losses = losses_arr
    cdef double[::1] gi = np.empty(D, dtype=np.float64)
    cdef double[::1] gj = np.empty(D, dtype=np.float64)
    cdef double[::1] tmp = np.empty(D, dtype=np.float64)
    with nogil:
        for s in range(S):
            i = heads[s]
            j = tails[s]
            E = _distance(kind, centers, j, i, W, &arg) - (radii[j] - radii[i])
            if positive[s]:
                loss = E if E > 0.0 else 0.0
                g = 1.0 if E > 0.0 else 0.0
            else:
                loss = margin - E if E < margin else 0.0
                g = -1.0 if E < margin else 0.0
            losses[s] = loss
            if g == 0.0:
                continue
            if kind == POLYHEDRAL:
                for k in range(D):
                    gj[k] = W[arg, k]
                    gi[k] = -W[arg, k]
                ok_j = True
                ok_i = True
            else:
                ok_j = _grad(kind, centers, j, i, gj)
                ok_i = _grad(kind, centers, i, j, gi)
            if ok_j and ok_i:
                _step(kind, centers, j, gj, -lr * lam * g, tmp)
                _step(kind, centers, i, gi, -lr * lam * g, tmp)
            radii[j] = radii[j] + lr * nu * g
            radii[i] = radii[i] - lr * nu * g
    return losses_arr
