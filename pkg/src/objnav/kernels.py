"""Backend selection for the grid kernels.

The compiled extension is used when importable; set ``OBJNAV_PURE_PYTHON=1``
to force the pure-Python fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("OBJNAV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (``"cython"``/``"python"``), default active."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def raycast(occ, res, ox, oy, dir_x, dir_y, max_range):
    return _impl.raycast(occ, res, ox, oy, dir_x, dir_y, max_range)


def astar(occ, si, sj, gi, gj):
    return _impl.astar(occ, si, sj, gi, gj)


def distance_field(occ, sources, cell_size):
    return _impl.distance_field(occ, sources, cell_size)


def nearest_frontier(occ, trail, radius, ci, cj):
    return _impl.nearest_frontier(occ, trail, radius, ci, cj)
