"""Episodic frame, grid indexing and goal decoders.

Axes: ``x`` points along the initial heading, ``y`` to its left, yaw is
counter-clockwise positive and zero at the start of the episode.  Map cell
``(i, j)`` indexes ``x`` then ``y``; the episodic origin sits on
``MapSpec.origin_cell``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Wrap ``angle`` into ``[-pi, pi]``.

    ``+pi`` is kept as ``+pi`` (rather than folded onto ``-pi``) so that the
    polar decoder can reach both ends of its range.
    """
    if -math.pi <= angle <= math.pi:
        return float(angle)
    wrapped = math.fmod(angle + math.pi, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    return wrapped - math.pi


def round_half_away(value: float) -> int:
    """Round to nearest integer, halves away from zero (``round`` is banker's)."""
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


@dataclass(frozen=True)
class EpisodicPose:
    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class MapSpec:
    size_cells: int = 512
    resolution: float = 0.05

    def __post_init__(self) -> None:
        if self.size_cells <= 0 or self.size_cells % 2:
            raise ValueError("size_cells must be a positive even number")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")

    @property
    def origin_cell(self) -> "CellIndex":
        half = self.size_cells // 2
        return CellIndex(half, half)

    @property
    def extent(self) -> float:
        return self.size_cells * self.resolution

    def in_bounds(self, i: int, j: int) -> bool:
        return 0 <= i < self.size_cells and 0 <= j < self.size_cells

    def clamp(self, i: int, j: int) -> "CellIndex":
        top = self.size_cells - 1
        return CellIndex(min(max(i, 0), top), min(max(j, 0), top))


DEFAULT_MAP = MapSpec()


class CellIndex(NamedTuple):
    i: int
    j: int


class PolarGoal(NamedTuple):
    rho: float
    phi: float


def _check_unit_pair(pred) -> Tuple[float, float]:
    if len(pred) != 2:
        raise ValueError(f"prediction must have two components, got {len(pred)}")
    a, b = float(pred[0]), float(pred[1])
    for v in (a, b):
        if not 0.0 <= v <= 1.0:  # also rejects NaN
            raise ValueError(f"prediction component {v!r} outside [0, 1]")
    return a, b


def unclamped_cell(x: float, y: float, spec: MapSpec = DEFAULT_MAP) -> CellIndex:
    o = spec.origin_cell
    return CellIndex(o.i + round_half_away(x / spec.resolution),
                     o.j + round_half_away(y / spec.resolution))


def point_to_cell(x: float, y: float, spec: MapSpec = DEFAULT_MAP) -> CellIndex:
    c = unclamped_cell(x, y, spec)
    return spec.clamp(c.i, c.j)


def pose_to_cell(pose: EpisodicPose, spec: MapSpec = DEFAULT_MAP) -> CellIndex:
    return point_to_cell(pose.x, pose.y, spec)


def cell_center(cell, spec: MapSpec = DEFAULT_MAP) -> Tuple[float, float]:
    """Episodic coordinates (meters) of the center of ``cell``."""
    o = spec.origin_cell
    return ((cell[0] - o.i) * spec.resolution, (cell[1] - o.j) * spec.resolution)


def decode_cartesian(pred, spec: MapSpec = DEFAULT_MAP) -> CellIndex:
    """Scale a normalized prediction by the map size into a cell index.

    ``1.0`` scales to ``size_cells`` which is one past the last cell, hence
    the clamp.
    """
    a, b = _check_unit_pair(pred)
    n = spec.size_cells
    return spec.clamp(round_half_away(a * n), round_half_away(b * n))


def encode_cartesian(cell, spec: MapSpec = DEFAULT_MAP) -> Tuple[float, float]:
    """Inverse of :func:`decode_cartesian` for in-bounds cells."""
    c = spec.clamp(int(cell[0]), int(cell[1]))
    return c.i / spec.size_cells, c.j / spec.size_cells


def default_rho_max(spec: MapSpec = DEFAULT_MAP) -> float:
    return spec.extent / 2.0


def decode_polar(pred, rho_max: float | None = None, spec: MapSpec = DEFAULT_MAP) -> PolarGoal:
    a, b = _check_unit_pair(pred)
    if rho_max is None:
        rho_max = default_rho_max(spec)
    if not rho_max > 0:
        raise ValueError("rho_max must be positive")
    return PolarGoal(a * rho_max, b * TWO_PI - math.pi)


def encode_polar(goal: PolarGoal, rho_max: float | None = None,
                 spec: MapSpec = DEFAULT_MAP) -> Tuple[float, float]:
    """Normalize a polar goal; distances beyond ``rho_max`` saturate at 1."""
    if rho_max is None:
        rho_max = default_rho_max(spec)
    a = min(max(goal.rho / rho_max, 0.0), 1.0)
    b = (wrap_angle(goal.phi) + math.pi) / TWO_PI
    return a, min(max(b, 0.0), 1.0)


def polar_goal_to_cell(goal: PolarGoal, agent: EpisodicPose,
                       spec: MapSpec = DEFAULT_MAP) -> CellIndex:
    heading = agent.yaw + goal.phi
    return point_to_cell(agent.x + goal.rho * math.cos(heading),
                         agent.y + goal.rho * math.sin(heading), spec)


def cell_to_episodic_polar(agent: EpisodicPose, target, spec: MapSpec = DEFAULT_MAP) -> PolarGoal:
    tx, ty = cell_center(target, spec)
    dx, dy = tx - agent.x, ty - agent.y
    rho = math.hypot(dx, dy)
    if rho == 0.0:
        return PolarGoal(0.0, 0.0)
    return PolarGoal(rho, wrap_angle(math.atan2(dy, dx) - agent.yaw))


def world_to_episodic(start: Tuple[float, float, float], x: float, y: float, yaw: float) -> EpisodicPose:
    """Express a world pose in the frame anchored at world pose ``start``."""
    x0, y0, t0 = start
    c, s = math.cos(t0), math.sin(t0)
    dx, dy = x - x0, y - y0
    return EpisodicPose(c * dx + s * dy, -s * dx + c * dy, yaw - t0)


def episodic_to_world(start: Tuple[float, float, float], pose: EpisodicPose) -> Tuple[float, float, float]:
    x0, y0, t0 = start
    c, s = math.cos(t0), math.sin(t0)
    return (x0 + c * pose.x - s * pose.y, y0 + s * pose.x + c * pose.y,
            wrap_angle(pose.yaw + t0))
