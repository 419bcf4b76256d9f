"""Hot numeric kernels with optional numba acceleration.

Two inner loops dominate Monte Carlo runtime: counting common/exclusive
neighbors of an endpoint pair over a deployment, and scanning the fused
log-likelihood penalty on a grid. Both exist as a pure-numpy
implementation and a numba-jitted one.

Backend selection, via the RANGEFUSE_BACKEND environment variable read at
import time:

* ``auto`` (default) - numba when importable, numpy otherwise;
* ``numpy``          - force the pure-numpy path;
* ``numba``          - require the jitted path, raise if numba is missing.

``benchmarks/backend_bench.py`` compares the two.
"""

from __future__ import annotations

import math
import os

import numpy as np


def _count_neighbors_numpy(xy, ax, ay, bx, by, reff_a, reff_b):
    da2 = (xy[:, 0] - ax) ** 2 + (xy[:, 1] - ay) ** 2
    db2 = (xy[:, 0] - bx) ** 2 + (xy[:, 1] - by) ** 2
    link_a = da2 <= reff_a * reff_a
    link_b = db2 <= reff_b * reff_b
    m = int(np.count_nonzero(link_a & link_b))
    p = int(np.count_nonzero(link_a)) - m
    q = int(np.count_nonzero(link_b)) - m
    return m, p, q


def _penalty_grid_min_numpy(x1, x2, half_inv_sr2, half_inv_sc2, lo, hi, n):
    step = (hi - lo) / (n - 1)
    d = np.arange(n) * step + lo
    t = np.log10(x1 / d)
    pen = t * t * half_inv_sr2 + (x2 - d) ** 2 * half_inv_sc2
    i = int(np.argmin(pen))
    return float(d[i]), float(pen[i])


_IMPLEMENTATIONS = {
    "numpy": {
        "count_neighbors": _count_neighbors_numpy,
        "penalty_grid_min": _penalty_grid_min_numpy,
    }
}

try:
    from numba import njit
except ImportError:
    njit = None

if njit is not None:

    @njit(cache=True, nogil=True)
    def _count_neighbors_numba(xy, ax, ay, bx, by, reff_a, reff_b):
        m = 0
        p = 0
        q = 0
        for i in range(xy.shape[0]):
            dxa = xy[i, 0] - ax
            dya = xy[i, 1] - ay
            dxb = xy[i, 0] - bx
            dyb = xy[i, 1] - by
            link_a = dxa * dxa + dya * dya <= reff_a[i] * reff_a[i]
            link_b = dxb * dxb + dyb * dyb <= reff_b[i] * reff_b[i]
            if link_a and link_b:
                m += 1
            elif link_a:
                p += 1
            elif link_b:
                q += 1
        return m, p, q

    @njit(cache=True, nogil=True)
    def _penalty_grid_min_numba(x1, x2, half_inv_sr2, half_inv_sc2, lo, hi, n):
        step = (hi - lo) / (n - 1)
        best_d = lo
        best_pen = math.inf
        for i in range(n):
            d = i * step + lo
            t = math.log10(x1 / d)
            dx = x2 - d
            pen = t * t * half_inv_sr2 + dx * dx * half_inv_sc2
            if pen < best_pen:
                best_pen = pen
                best_d = d
        return best_d, best_pen

    _IMPLEMENTATIONS["numba"] = {
        "count_neighbors": _count_neighbors_numba,
        "penalty_grid_min": _penalty_grid_min_numba,
    }


def _select_backend() -> str:
    choice = os.environ.get("RANGEFUSE_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if "numba" in _IMPLEMENTATIONS else "numpy"
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if "numba" not in _IMPLEMENTATIONS:
            raise ImportError(
                "RANGEFUSE_BACKEND=numba but numba is not installed"
            )
        return "numba"
    raise ValueError(
        f"RANGEFUSE_BACKEND must be auto, numpy or numba, got {choice!r}"
    )


_ACTIVE = _select_backend()

count_neighbors = _IMPLEMENTATIONS[_ACTIVE]["count_neighbors"]
penalty_grid_min = _IMPLEMENTATIONS[_ACTIVE]["penalty_grid_min"]


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return _ACTIVE


def available_backends():
    """Backend names that can run on this interpreter."""
    return tuple(sorted(_IMPLEMENTATIONS))


def implementations(name: str):
    """Mapping of kernel name to callable for the given backend."""
    return dict(_IMPLEMENTATIONS[name])
