"""25-channel top-down semantic grid.

Channel layout:

* 0: obstacle returns without a semantic class
* 1..21: one channel per target class
* 22: occupation, element-wise max of channels 0..21
* 23: every cell the agent has occupied since step 0
* 24: the agent's current cell only
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .geometry import DEFAULT_MAP, CellIndex, EpisodicPose, MapSpec, pose_to_cell

NUM_CLASSES = 21
OBSTACLE = 0
OCCUPATION = 22
TRAIL = 23
AGENT = 24
NUM_CHANNELS = 25
CROP_SIZE = 256


@dataclass(frozen=True)
class CameraModel:
    """Single-row depth scanner; column 0 is the leftmost ray."""

    width: int = 256
    hfov: float = math.radians(79.0)
    min_range: float = 0.1
    max_range: float = 5.0

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError("camera needs at least one column")
        if not 0.0 < self.min_range < self.max_range:
            raise ValueError("require 0 < min_range < max_range")

    def column_angles(self) -> np.ndarray:
        """Ray angles relative to the heading, CCW-positive, evenly spaced."""
        if self.width == 1:
            return np.zeros(1)
        return np.linspace(self.hfov / 2.0, -self.hfov / 2.0, self.width)


@dataclass
class Observation:
    t: int
    depth: np.ndarray  # meters, NaN where invalid
    labels: np.ndarray  # class id per column, 0 = no class
    pose: EpisodicPose

    def __post_init__(self) -> None:
        self.depth = np.asarray(self.depth, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.depth.shape != self.labels.shape or self.depth.ndim != 1:
            raise ValueError(
                f"depth {self.depth.shape} and labels {self.labels.shape} must be equal-length 1-D arrays")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() > NUM_CLASSES):
            raise ValueError("labels must lie in 0..21")


def _disk_offsets(radius: int) -> np.ndarray:
    r = np.arange(-radius, radius + 1)
    di, dj = np.meshgrid(r, r, indexing="ij")
    keep = di ** 2 + dj ** 2 <= radius * radius
    return np.stack([di[keep], dj[keep]], axis=1)


@dataclass
class SemanticGrid:
    cells: np.ndarray
    spec: MapSpec = DEFAULT_MAP
    agent_cell: CellIndex = field(default_factory=lambda: DEFAULT_MAP.origin_cell)
    # newly occupied cells in insertion order; inflated layers replay it lazily
    _occupied_log: List[np.ndarray] = field(default_factory=list, repr=False)
    _inflated: Dict[int, Tuple[np.ndarray, int]] = field(default_factory=dict, repr=False)

    @property
    def occupation(self) -> np.ndarray:
        return self.cells[OCCUPATION]

    def inflated_occupation(self, radius: int) -> np.ndarray:
        """Channel 22 dilated by a disc of ``radius`` cells (cached, incremental)."""
        if radius <= 0:
            return self.cells[OCCUPATION]
        layer, applied = self._inflated.get(radius, (None, 0))
        if layer is None:
            layer = np.zeros_like(self.cells[OCCUPATION])
        if applied < len(self._occupied_log):
            pending = np.concatenate(self._occupied_log[applied:], axis=0)
            n = self.spec.size_cells
            for di, dj in _disk_offsets(radius):
                ii = pending[:, 0] + di
                jj = pending[:, 1] + dj
                ok = (ii >= 0) & (ii < n) & (jj >= 0) & (jj < n)
                layer[ii[ok], jj[ok]] = 1
        self._inflated[radius] = (layer, len(self._occupied_log))
        return layer

    def _mark_agent(self, cell: CellIndex) -> None:
        old = self.agent_cell
        self.cells[AGENT, old.i, old.j] = 0
        self.cells[AGENT, cell.i, cell.j] = 1
        self.cells[TRAIL, cell.i, cell.j] = 1
        self.agent_cell = cell


def reset(spec: MapSpec = DEFAULT_MAP) -> SemanticGrid:
    n = spec.size_cells
    grid = SemanticGrid(np.zeros((NUM_CHANNELS, n, n), dtype=np.uint8), spec, spec.origin_cell)
    grid._mark_agent(spec.origin_cell)
    return grid


def projected_cells(obs: Observation, cam: CameraModel, spec: MapSpec = DEFAULT_MAP):
    """Map cells hit by the valid readings of ``obs``.

    Returns ``(ii, jj, labels)``; readings that fall outside the map are
    dropped rather than clamped onto the border.
    """
    if obs.depth.shape[0] != cam.width:
        raise ValueError(f"observation has {obs.depth.shape[0]} columns, camera has {cam.width}")
    r = obs.depth
    valid = np.isfinite(r) & (r >= cam.min_range) & (r <= cam.max_range)
    r = r[valid]
    ang = obs.pose.yaw + cam.column_angles()[valid]
    px = obs.pose.x + r * np.cos(ang)
    py = obs.pose.y + r * np.sin(ang)
    ii, jj, inside = _cells_of(px, py, spec)
    return ii[inside], jj[inside], obs.labels[valid][inside]


def _cells_of(px: np.ndarray, py: np.ndarray, spec: MapSpec):
    """Vectorized point-to-cell (half away from zero) plus an in-map mask."""
    o = spec.origin_cell
    fi = px / spec.resolution
    fj = py / spec.resolution
    ii = o.i + (np.sign(fi) * np.floor(np.abs(fi) + 0.5)).astype(np.int64)
    jj = o.j + (np.sign(fj) * np.floor(np.abs(fj) + 0.5)).astype(np.int64)
    n = spec.size_cells
    return ii, jj, (ii >= 0) & (ii < n) & (jj >= 0) & (jj < n)


def project_observation(grid: SemanticGrid, obs: Observation, cam: CameraModel) -> SemanticGrid:
    """Fold one observation into ``grid`` in place and return it.

    Cells are sticky: nothing set here is ever cleared, except the single
    current-location bit in channel 24 which follows the agent.
    """
    ii, jj, labels = projected_cells(obs, cam, grid.spec)
    if ii.size:
        fresh = grid.cells[OCCUPATION, ii, jj] == 0
        grid.cells[labels, ii, jj] = 1
        grid.cells[OCCUPATION, ii, jj] = 1
        if fresh.any():
            grid._occupied_log.append(np.unique(np.stack([ii[fresh], jj[fresh]], axis=1), axis=0))
    grid._mark_agent(pose_to_cell(obs.pose, grid.spec))
    return grid


def mark_blocked(grid: SemanticGrid, pose: EpisodicPose, reach: float = 0.25,
                 half_width: float = 0.1) -> SemanticGrid:
    """Record a bumped obstacle the camera could not see (too close, or between rays).

    A strip ``half_width`` either side of the heading, out to ``reach``, is
    marked as obstacle; the agent's own cell is left alone.
    """
    res = grid.spec.resolution
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    fwd = np.arange(res, reach + 1e-9, res / 2)
    lat = np.arange(-half_width, half_width + 1e-9, res / 2)
    f, l = np.meshgrid(fwd, lat, indexing="ij")
    x = pose.x + f * c - l * s
    y = pose.y + f * s + l * c
    ii, jj, inside = _cells_of(x.ravel(), y.ravel(), grid.spec)
    here = pose_to_cell(pose, grid.spec)
    keep = inside & ~((ii == here.i) & (jj == here.j))
    ii, jj = ii[keep], jj[keep]
    fresh = grid.cells[OCCUPATION, ii, jj] == 0
    if fresh.any():
        grid.cells[OBSTACLE, ii[fresh], jj[fresh]] = 1
        grid.cells[OCCUPATION, ii[fresh], jj[fresh]] = 1
        grid._occupied_log.append(np.unique(np.stack([ii[fresh], jj[fresh]], axis=1), axis=0))
    return grid


def crop_egocentric(grid: SemanticGrid, size: int = CROP_SIZE) -> np.ndarray:
    """Copy of the ``size``-square window centered on the agent, zero padded."""
    half = size // 2
    n = grid.spec.size_cells
    ci, cj = grid.agent_cell
    i0, j0 = ci - half, cj - half
    if i0 >= 0 and j0 >= 0 and i0 + size <= n and j0 + size <= n:
        return grid.cells[:, i0:i0 + size, j0:j0 + size].copy()
    out = np.zeros((grid.cells.shape[0], size, size), dtype=grid.cells.dtype)
    si0, sj0 = max(i0, 0), max(j0, 0)
    si1, sj1 = min(i0 + size, n), min(j0 + size, n)
    if si0 < si1 and sj0 < sj1:
        out[:, si0 - i0:si1 - i0, sj0 - j0:sj1 - j0] = grid.cells[:, si0:si1, sj0:sj1]
    return out


def crop_to_map(a: int, b: int, agent_cell, size: int = CROP_SIZE) -> CellIndex:
    half = size // 2
    return CellIndex(agent_cell[0] - half + a, agent_cell[1] - half + b)


def dump_channels(grid: SemanticGrid, out_dir, t: int, fmt: str = "pgm", channels=None) -> List[str]:
    """Write each channel as ``mapdump_step{t}_ch{k}.pgm`` (or ``.csv``)."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for k in range(grid.cells.shape[0]) if channels is None else channels:
        plane = grid.cells[k]
        if fmt == "pgm":
            path = os.path.join(out_dir, f"mapdump_step{t}_ch{k}.pgm")
            h, w = plane.shape
            with open(path, "wb") as fh:
                fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
                fh.write((plane.astype(np.uint8) * 255).tobytes())
        elif fmt == "csv":
            path = os.path.join(out_dir, f"mapdump_step{t}_ch{k}.csv")
            np.savetxt(path, plane, fmt="%d", delimiter=",")
        else:
            raise ValueError(f"unknown dump format {fmt!r}")
        written.append(path)
    return written


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4], dtype=np.uint8, count=w * h).reshape(h, w)
