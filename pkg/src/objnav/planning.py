"""A* on the occupation channel, local-goal extraction, the point-goal
controller and the perfect-knowledge greedy oracle."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, List

import numpy as np

from . import kernels
from ._pykernels import MOVES
from .geometry import CellIndex, EpisodicPose, PolarGoal, cell_to_episodic_polar, pose_to_cell

if TYPE_CHECKING:
    from .semantic_map import SemanticGrid
    from .simulator import AgentState, Scene

SQRT2 = math.sqrt(2.0)


class DiscreteAction(enum.IntEnum):
    STOP = 0
    MOVE_FORWARD = 1
    TURN_LEFT = 2
    TURN_RIGHT = 3


class PlanningError(RuntimeError):
    pass


class StartOccupiedError(PlanningError):
    pass


class TrappedAgentError(PlanningError):
    """No free cell besides the start is reachable."""


@dataclass(frozen=True)
class GridPath:
    cells: np.ndarray  # (n, 2) int64, start first
    reached: bool  # the (possibly re-targeted) goal was reached
    retargeted: bool = False  # goal was occupied and moved to the nearest free cell

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def steps(self) -> np.ndarray:
        """Cumulative cost (in cells) at each path vertex."""
        if len(self.cells) < 2:
            return np.zeros(len(self.cells))
        d = np.abs(np.diff(self.cells, axis=0)).sum(axis=1)
        return np.concatenate([[0.0], np.cumsum(np.where(d == 2, SQRT2, 1.0))])

    @property
    def cost(self) -> float:
        return float(self.steps[-1])

    def move_counts(self):
        """(straight, diagonal) move counts; cost is straight + diagonal * sqrt(2)."""
        if len(self.cells) < 2:
            return 0, 0
        d = np.abs(np.diff(self.cells, axis=0)).sum(axis=1)
        return int((d == 1).sum()), int((d == 2).sum())

    def end(self) -> CellIndex:
        return CellIndex(int(self.cells[-1, 0]), int(self.cells[-1, 1]))


def nearest_free_cell(occupancy: np.ndarray, goal) -> CellIndex:
    """Free cell nearest ``goal`` by Euclidean distance, ties by lowest (i, j)."""
    gi, gj = int(goal[0]), int(goal[1])
    ni, nj = occupancy.shape
    if 0 <= gi < ni and 0 <= gj < nj and not occupancy[gi, gj]:
        return CellIndex(gi, gj)
    limit = max(ni, nj)
    r = 1
    while not (occupancy[max(gi - r, 0):gi + r + 1, max(gj - r, 0):gj + r + 1] == 0).any():
        if r >= limit:
            raise TrappedAgentError("map has no free cell")
        r = min(2 * r, limit)
    # a free cell at Chebyshev radius r bounds the answer by r * sqrt(2)
    win = int(math.ceil(r * SQRT2))
    i0, j0 = max(gi - win, 0), max(gj - win, 0)
    ii, jj = np.nonzero(occupancy[i0:gi + win + 1, j0:gj + win + 1] == 0)
    ii += i0
    jj += j0
    k = int(np.argmin((ii - gi) ** 2 + (jj - gj) ** 2))  # row-major: lowest (i, j) wins ties
    return CellIndex(int(ii[k]), int(jj[k]))


def has_free_move(occ: np.ndarray, i: int, j: int) -> bool:
    ni, nj = occ.shape
    for k, (di, dj) in enumerate(MOVES):
        a, b = i + di, j + dj
        if a < 0 or b < 0 or a >= ni or b >= nj or occ[a, b]:
            continue
        if k >= 4 and (occ[a, j] or occ[i, b]):
            continue
        return True
    return False


def astar(occupancy: np.ndarray, start, goal) -> GridPath:
    """Minimum-cost 8-connected path over free cells.

    Straight moves cost 1 and diagonals sqrt(2); a diagonal may not squeeze
    between two occupied orthogonal neighbours.  An occupied goal is moved to
    the nearest free cell first; an unreachable one yields the path to the
    reachable cell nearest it.
    """
    occ = np.ascontiguousarray(occupancy, dtype=np.uint8)
    si, sj = int(start[0]), int(start[1])
    ni, nj = occ.shape
    if not (0 <= si < ni and 0 <= sj < nj):
        raise ValueError(f"start {start} outside grid {occ.shape}")
    if occ[si, sj]:
        raise StartOccupiedError(f"start cell {(si, sj)} is occupied")
    gi = min(max(int(goal[0]), 0), ni - 1)
    gj = min(max(int(goal[1]), 0), nj - 1)
    target = nearest_free_cell(occ, (gi, gj))
    cells, reached = kernels.astar(occ, si, sj, target.i, target.j)
    if (si, sj) != (target.i, target.j) and not has_free_move(occ, si, sj):
        raise TrappedAgentError(f"no free cell reachable from {(si, sj)}")
    return GridPath(np.asarray(cells, dtype=np.int64), bool(reached), target != (gi, gj))


def planning_mask(grid: "SemanticGrid", agent_cell, inflation: int) -> np.ndarray:
    """Occupation channel (optionally inflated) with the agent's own cell free.

    An agent already inside the safety margin gets the margin cells within
    ``inflation`` of it released so it can still leave; raw observations stay
    blocked except the agent's own cell.
    """
    raw = grid.occupation
    ai, aj = int(agent_cell[0]), int(agent_cell[1])
    if inflation <= 0:
        mask = raw.copy()
    else:
        mask = grid.inflated_occupation(inflation).copy()
        if mask[ai, aj]:
            n = mask.shape[0]
            i0, i1 = max(ai - inflation, 0), min(ai + inflation + 1, n)
            j0, j1 = max(aj - inflation, 0), min(aj + inflation + 1, n)
            di = np.arange(i0, i1)[:, None] - ai
            dj = np.arange(j0, j1)[None, :] - aj
            near = di * di + dj * dj <= inflation * inflation
            window = mask[i0:i1, j0:j1]
            window[near] = raw[i0:i1, j0:j1][near]
    mask[ai, aj] = 0
    return mask


def select_waypoint(path: GridPath, lookahead_cells: float) -> CellIndex:
    """Vertex whose cumulative cost is closest to ``lookahead_cells``; the end if shorter."""
    steps = path.steps
    if steps[-1] <= lookahead_cells:
        return path.end()
    k = int(np.argmin(np.abs(steps - lookahead_cells)))
    return CellIndex(int(path.cells[k, 0]), int(path.cells[k, 1]))


def local_goal(grid: "SemanticGrid", agent: EpisodicPose, global_goal, lookahead: float = 0.5,
               inflation: int = 0) -> PolarGoal:
    """Short-horizon waypoint toward ``global_goal`` as an episodic polar goal.

    Plans on channel 22; with ``inflation > 0`` the obstacles are first grown
    by that many cells.  The raw channel is used instead when the margin
    seals the agent in or cuts it off from a goal the raw map can reach.
    """
    spec = grid.spec
    start = pose_to_cell(agent, spec)
    goal = spec.clamp(int(global_goal[0]), int(global_goal[1]))
    path = None
    if inflation > 0:
        try:
            path = astar(planning_mask(grid, start, inflation), start, goal)
        except TrappedAgentError:
            path = None
    if path is None or not path.reached:
        try:
            raw = astar(planning_mask(grid, start, 0), start, goal)
        except TrappedAgentError:
            if path is None:
                raise
        else:
            if path is None or raw.reached:
                path = raw
    waypoint = select_waypoint(path, lookahead / spec.resolution)
    return cell_to_episodic_polar(agent, waypoint, spec)


@dataclass(frozen=True)
class ControllerParams:
    stop_radius: float = 0.25  # one forward step
    turn_threshold: float = math.radians(15.0)


def local_planner_step(agent: EpisodicPose, goal: PolarGoal,
                       params: ControllerParams = ControllerParams()) -> DiscreteAction:
    # ``agent`` is unused: the goal is already egocentric
    if goal.rho <= params.stop_radius:
        return DiscreteAction.STOP
    # the forward cone is closed; without the slack a bearing of exactly the
    # threshold flips sign under float noise and the agent turns back and forth
    limit = params.turn_threshold + 1e-9
    if goal.phi > limit:
        return DiscreteAction.TURN_LEFT
    if goal.phi < -limit:
        return DiscreteAction.TURN_RIGHT
    return DiscreteAction.MOVE_FORWARD


# MOVE_FORWARD > TURN_LEFT > TURN_RIGHT
_ORACLE_ORDER = (DiscreteAction.MOVE_FORWARD, DiscreteAction.TURN_LEFT, DiscreteAction.TURN_RIGHT)


def oracle_action_scores(scene: "Scene", state: "AgentState", target_class: int) -> List[float]:
    """Ground-truth score of each non-STOP action (lower is better).

    MOVE_FORWARD is scored by the geodesic distance after the move.  A turn
    alone never changes position, so a turn is scored by the distance after
    the turn followed by one forward step; a forward step that does not pay
    off is then beaten by turning toward the better heading.  Distances are
    interpolated between cell centres so that sub-cell differences count.
    """
    from .simulator import geodesic_distance, smooth_geodesic, step as sim_step

    d_now = geodesic_distance(scene, state, target_class)
    scores = []
    for action in _ORACLE_ORDER:
        nxt = sim_step(scene, state, action)
        if action is not DiscreteAction.MOVE_FORWARD:
            nxt = sim_step(scene, nxt, DiscreteAction.MOVE_FORWARD)
        d = smooth_geodesic(scene, nxt.x, nxt.y, target_class)
        scores.append(d if math.isfinite(d) else d_now + 1e6)
    return scores


def greedy_oracle_action(scene: "Scene", state: "AgentState", target_class: int,
                         success_radius: float = 1.0) -> DiscreteAction:
    from .simulator import geodesic_distance

    if not scene.has_class(target_class):
        raise ValueError(f"scene has no instance of class {target_class}")
    if geodesic_distance(scene, state, target_class) <= success_radius:
        return DiscreteAction.STOP
    scores = oracle_action_scores(scene, state, target_class)
    best = min(range(len(scores)), key=lambda k: (scores[k], k))
    return _ORACLE_ORDER[best]
