"""Global-goal policies.

A policy sees the egocentric crop, the target class and the agent's yaw and
returns a normalized pair in ``[0, 1]^2`` for either goal representation.
The learned network is not part of this package; the scripted policies below
fill the same slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import kernels
from .geometry import (
    DEFAULT_MAP,
    CellIndex,
    EpisodicPose,
    MapSpec,
    PolarGoal,
    cell_center,
    default_rho_max,
    encode_cartesian,
    encode_polar,
    point_to_cell,
    world_to_episodic,
    episodic_to_world,
    wrap_angle,
)
from .semantic_map import CROP_SIZE, NUM_CHANNELS, NUM_CLASSES, OCCUPATION, TRAIL, crop_to_map

CARTESIAN = "cartesian"
POLAR = "polar"
REPRESENTATIONS = (CARTESIAN, POLAR)
FALLBACK_PRED = (0.5, 0.5)


@dataclass
class PolicyInput:
    crop: np.ndarray
    target_class: int
    orientation: float
    # where the crop sits on the full map; needed to express Cartesian goals
    agent_cell: CellIndex = DEFAULT_MAP.origin_cell

    def __post_init__(self) -> None:
        if self.crop.shape != (NUM_CHANNELS, CROP_SIZE, CROP_SIZE):
            raise ValueError(f"crop must be {(NUM_CHANNELS, CROP_SIZE, CROP_SIZE)}, got {self.crop.shape}")
        if not 1 <= self.target_class <= NUM_CLASSES:
            raise ValueError(f"target_class {self.target_class} outside 1..{NUM_CLASSES}")


@dataclass(frozen=True)
class PolicyOutput:
    pred: Tuple[float, float]
    representation: str

    def __post_init__(self) -> None:
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        if len(self.pred) != 2 or not all(0.0 <= v <= 1.0 for v in self.pred):
            raise ValueError(f"prediction {self.pred} outside [0, 1]^2")


class GlobalPolicy:
    name = "base"

    def __init__(self, representation: str = CARTESIAN, spec: MapSpec = DEFAULT_MAP,
                 rho_max: Optional[float] = None):
        if representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {representation!r}")
        self.representation = representation
        self.spec = spec
        self.rho_max = default_rho_max(spec) if rho_max is None else rho_max

    def reset(self, scene=None, episode=None) -> None:
        pass

    def __call__(self, inp: PolicyInput) -> PolicyOutput:
        return self.policy_step(inp)

    def policy_step(self, inp: PolicyInput) -> PolicyOutput:
        raise NotImplementedError

    def encode_cell(self, cell, inp: PolicyInput) -> PolicyOutput:
        """Express a target map cell in this policy's representation."""
        if self.representation == CARTESIAN:
            return PolicyOutput(encode_cartesian(cell, self.spec), CARTESIAN)
        ax, ay = cell_center(inp.agent_cell, self.spec)
        tx, ty = cell_center(cell, self.spec)
        rho = math.hypot(tx - ax, ty - ay)
        phi = 0.0 if rho == 0.0 else wrap_angle(math.atan2(ty - ay, tx - ax) - inp.orientation)
        return PolicyOutput(encode_polar(PolarGoal(rho, phi), self.rho_max, self.spec), POLAR)


class FrontierPolicy(GlobalPolicy):
    """Go to the nearest reachable boundary between explored and unknown space.

    Explored space is approximated from the crop alone: discs of
    ``explore_radius`` meters around trail cells plus every occupied cell.
    """

    name = "frontier"

    def __init__(self, representation: str = CARTESIAN, spec: MapSpec = DEFAULT_MAP,
                 rho_max: Optional[float] = None, explore_radius: float = 1.0):
        super().__init__(representation, spec, rho_max)
        self.radius_cells = max(1, int(round(explore_radius / spec.resolution)))

    def frontier_cell(self, inp: PolicyInput) -> Optional[CellIndex]:
        half = CROP_SIZE // 2
        a, b = kernels.nearest_frontier(np.ascontiguousarray(inp.crop[OCCUPATION]),
                                        np.ascontiguousarray(inp.crop[TRAIL]),
                                        self.radius_cells, half, half)
        if a < 0:
            return None
        return crop_to_map(a, b, inp.agent_cell)

    def policy_step(self, inp: PolicyInput) -> PolicyOutput:
        cell = self.frontier_cell(inp)
        if cell is None:
            # nothing left to explore: the fixed fallback (the start cell when Cartesian)
            return PolicyOutput(FALLBACK_PRED, self.representation)
        return self.encode_cell(cell, inp)


class SeenTargetPolicy(FrontierPolicy):
    """Head for the nearest mapped cell of the target class, else explore."""

    name = "seen_target"

    def policy_step(self, inp: PolicyInput) -> PolicyOutput:
        a, b = np.nonzero(inp.crop[inp.target_class])
        if a.size:
            half = CROP_SIZE // 2
            k = int(np.argmin((a - half) ** 2 + (b - half) ** 2))
            return self.encode_cell(crop_to_map(int(a[k]), int(b[k]), inp.agent_cell), inp)
        return super().policy_step(inp)


class RandomPolicy(GlobalPolicy):
    name = "random"

    def __init__(self, representation: str = CARTESIAN, spec: MapSpec = DEFAULT_MAP,
                 rho_max: Optional[float] = None, seed: int = 0):
        super().__init__(representation, spec, rho_max)
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def reset(self, scene=None, episode=None) -> None:
        seed = self.seed if episode is None or episode.seed is None else [self.seed, int(episode.seed)]
        self.rng = np.random.default_rng(seed)

    def policy_step(self, inp: PolicyInput) -> PolicyOutput:
        u = self.rng.random(2)
        return PolicyOutput((float(u[0]), float(u[1])), self.representation)


class OracleGoalPolicy(GlobalPolicy):
    """Perfect-knowledge upper bound: points at the geodesically nearest target instance."""

    name = "oracle"

    def reset(self, scene=None, episode=None) -> None:
        if scene is None or episode is None:
            raise ValueError("the oracle policy needs the scene and episode")
        self.scene = scene
        self.episode = episode
        self.instances = scene.instances_of(episode.target_class)
        if not self.instances:
            raise ValueError(f"no instance of class {episode.target_class} in scene")

    def target_world_point(self, x: float, y: float) -> Tuple[float, float]:
        scene = self.scene
        i, j = scene.world_cell(x, y)
        nx, ny = scene.shape
        best, best_key = None, None
        for obj in self.instances:
            d = math.inf
            if 0 <= i < nx and 0 <= j < ny:
                d = float(scene.instance_field(obj.instance_id)[i, j])
            cx, cy = obj.centroid(scene.resolution)
            key = (d, math.hypot(cx - x, cy - y), obj.instance_id)
            if best_key is None or key < best_key:
                best, best_key = obj, key
        centers = (best.cells + 0.5) * scene.resolution
        k = int(np.argmin((centers[:, 0] - x) ** 2 + (centers[:, 1] - y) ** 2))
        return float(centers[k, 0]), float(centers[k, 1])

    def policy_step(self, inp: PolicyInput) -> PolicyOutput:
        ex, ey = cell_center(inp.agent_cell, self.spec)
        wx, wy, _ = episodic_to_world(self.episode.start, EpisodicPose(ex, ey, 0.0))
        tx, ty = self.target_world_point(wx, wy)
        tgt = world_to_episodic(self.episode.start, tx, ty, 0.0)
        return self.encode_cell(point_to_cell(tgt.x, tgt.y, self.spec), inp)


POLICIES = {
    "oracle": OracleGoalPolicy,
    "seen_target": SeenTargetPolicy,
    "frontier": FrontierPolicy,
    "random": RandomPolicy,
}


def make_policy(name: str, representation: str = CARTESIAN, seed: int = 0,
                spec: MapSpec = DEFAULT_MAP, explore_radius: float = 1.0) -> GlobalPolicy:
    try:
        cls = POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None
    if issubclass(cls, FrontierPolicy):
        return cls(representation, spec, explore_radius=explore_radius)
    if cls is RandomPolicy:
        return cls(representation, spec, seed=seed)
    return cls(representation, spec)
