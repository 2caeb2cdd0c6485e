"""Backend selection for the RSGD inner loop.

The compiled extension is used when it imports; otherwise the pure-Python
fallback. Set ``DISKEMBED_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from .geometry import EUCLIDEAN, LORENTZ, POLYHEDRAL, SPHERE

KIND_CODES = {EUCLIDEAN: 0, POLYHEDRAL: 1, SPHERE: 2, LORENTZ: 3}

_compiled = None
if os.environ.get("DISKEMBED_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
BACKENDS = {"python": _kernels_py.run_samples}
if _compiled is not None:
    BACKENDS["cython"] = _compiled.run_samples


def run_samples(space, centers, radii, heads, tails, positive, margin, lr, lam, nu, backend=None):
    """Sequential per-sample RSGD updates; see ``_kernels_py.run_samples``."""
    fn = BACKENDS[backend or BACKEND]
    if space.kind == POLYHEDRAL:
        W = np.ascontiguousarray(space.W)
    else:
        W = np.zeros((1, centers.shape[1]))
    return fn(
        KIND_CODES[space.kind],
        centers,
        radii,
        W,
        np.ascontiguousarray(heads, dtype=np.int64),
        np.ascontiguousarray(tails, dtype=np.int64),
        np.ascontiguousarray(positive, dtype=np.uint8),
        float(margin),
        float(lr),
        float(lam),
        float(nu),
    )
