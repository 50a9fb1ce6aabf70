"""Deterministic planar world: scenes, kinematics, depth+label scans and
ground-truth geodesic distances.

World cell ``(ix, iy)`` covers ``[ix*res, (ix+1)*res) x [iy*res, (iy+1)*res)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from . import kernels
from .geometry import DEFAULT_MAP, EpisodicPose, MapSpec, episodic_to_world, world_to_episodic, wrap_angle
from .planning import DiscreteAction
from .semantic_map import NUM_CLASSES, CameraModel, Observation

FORWARD_STEP = 0.25
TURN_ANGLE = math.radians(30.0)
SCENE_FORMAT = "objnav-scene"
SCENE_VERSION = 1


class SceneGenerationError(RuntimeError):
    pass


class UnreachableTargetError(RuntimeError):
    pass


@dataclass(frozen=True)
class SceneObject:
    instance_id: int
    class_id: int
    cells: np.ndarray  # (k, 2) world cell indices

    def centroid(self, resolution: float) -> Tuple[float, float]:
        c = self.cells.mean(axis=0) + 0.5
        return float(c[0] * resolution), float(c[1] * resolution)


@dataclass(eq=False)
class Scene:
    walls: np.ndarray  # uint8 (nx, ny), structural walls only
    objects: List[SceneObject]
    resolution: float = 0.05
    occupancy: np.ndarray = field(init=False, repr=False)
    labels: np.ndarray = field(init=False, repr=False)
    _fields: Dict[Tuple[str, int], np.ndarray] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        self.walls = np.ascontiguousarray(self.walls, dtype=np.uint8)
        nx, ny = self.walls.shape
        self.occupancy = self.walls.copy()
        self.labels = np.zeros((nx, ny), dtype=np.int64)
        for obj in self.objects:
            cells = np.asarray(obj.cells, dtype=np.int64).reshape(-1, 2)
            if cells.size == 0:
                raise ValueError(f"object {obj.instance_id} has an empty footprint")
            if (cells < 0).any() or (cells[:, 0] >= nx).any() or (cells[:, 1] >= ny).any():
                raise ValueError(f"object {obj.instance_id} lies outside the scene")
            if not 1 <= obj.class_id <= NUM_CLASSES:
                raise ValueError(f"object class {obj.class_id} outside 1..{NUM_CLASSES}")
            self.occupancy[cells[:, 0], cells[:, 1]] = 1
            self.labels[cells[:, 0], cells[:, 1]] = obj.class_id

    @property
    def shape(self) -> Tuple[int, int]:
        return self.walls.shape

    @property
    def bounds(self) -> Tuple[float, float]:
        return self.walls.shape[0] * self.resolution, self.walls.shape[1] * self.resolution

    def has_class(self, class_id: int) -> bool:
        return any(o.class_id == class_id for o in self.objects)

    def instances_of(self, class_id: int) -> List[SceneObject]:
        return [o for o in self.objects if o.class_id == class_id]

    def world_cell(self, x: float, y: float) -> Tuple[int, int]:
        return int(math.floor(x / self.resolution)), int(math.floor(y / self.resolution))

    def is_free_point(self, x: float, y: float) -> bool:
        i, j = self.world_cell(x, y)
        nx, ny = self.shape
        return 0 <= i < nx and 0 <= j < ny and not self.occupancy[i, j]

    def _approach_cells(self, objects: List[SceneObject]) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for obj in objects:
            mask[obj.cells[:, 0], obj.cells[:, 1]] = True
        ring = ndimage.binary_dilation(mask, structure=np.ones((3, 3), bool)) & (self.occupancy == 0)
        return np.flatnonzero(ring.ravel()).astype(np.int64)

    def class_field(self, class_id: int) -> np.ndarray:
        """Geodesic distance (m) from every free cell to the nearest instance of ``class_id``."""
        key = ("class", class_id)
        if key not in self._fields:
            objs = self.instances_of(class_id)
            if not objs:
                raise ValueError(f"scene has no instance of class {class_id}")
            self._fields[key] = kernels.distance_field(self.occupancy, self._approach_cells(objs),
                                                       self.resolution)
        return self._fields[key]

    def instance_field(self, instance_id: int) -> np.ndarray:
        key = ("instance", instance_id)
        if key not in self._fields:
            objs = [o for o in self.objects if o.instance_id == instance_id]
            if not objs:
                raise KeyError(instance_id)
            self._fields[key] = kernels.distance_field(self.occupancy, self._approach_cells(objs),
                                                       self.resolution)
        return self._fields[key]


@dataclass(frozen=True)
class Episode:
    episode_id: int
    start: Tuple[float, float, float]  # world x, y, yaw
    target_class: int
    max_steps: int = 500
    success_radius: float = 1.0
    seed: Optional[int] = None


@dataclass(frozen=True)
class AgentState:
    x: float
    y: float
    yaw: float
    start: Tuple[float, float, float]
    t: int = 0
    collision: bool = False
    stopped: bool = False

    @property
    def episodic(self) -> EpisodicPose:
        return world_to_episodic(self.start, self.x, self.y, self.yaw)


def initial_state(episode: Episode) -> AgentState:
    x, y, yaw = episode.start
    return AgentState(x, y, wrap_angle(yaw), tuple(episode.start))


def state_from_episodic(episode: Episode, pose: EpisodicPose, t: int = 0) -> AgentState:
    x, y, yaw = episodic_to_world(episode.start, pose)
    return AgentState(x, y, yaw, tuple(episode.start), t)


def _ray_distance(scene: Scene, x: float, y: float, heading: float, max_range: float) -> float:
    d, _, _ = kernels.raycast(scene.occupancy, scene.resolution, x, y,
                              np.array([math.cos(heading)]), np.array([math.sin(heading)]), max_range)
    return float(d[0])


def step(scene: Scene, state: AgentState, action: DiscreteAction) -> AgentState:
    """Apply one discrete action; blocked forward moves leave the pose unchanged."""
    if state.stopped:
        return state
    action = DiscreteAction(action)
    t = state.t + 1
    if action is DiscreteAction.STOP:
        return replace(state, t=t, collision=False, stopped=True)
    if action is DiscreteAction.TURN_LEFT:
        return replace(state, yaw=wrap_angle(state.yaw + TURN_ANGLE), t=t, collision=False)
    if action is DiscreteAction.TURN_RIGHT:
        return replace(state, yaw=wrap_angle(state.yaw - TURN_ANGLE), t=t, collision=False)
    # the segment is clear iff the first occupied cell along the ray lies beyond it
    if _ray_distance(scene, state.x, state.y, state.yaw, 2 * FORWARD_STEP) <= FORWARD_STEP:
        return replace(state, t=t, collision=True)
    nx = state.x + FORWARD_STEP * math.cos(state.yaw)
    ny = state.y + FORWARD_STEP * math.sin(state.yaw)
    if not scene.is_free_point(nx, ny):
        return replace(state, t=t, collision=True)
    return replace(state, x=nx, y=ny, t=t, collision=False)


def observe(scene: Scene, state: AgentState, cam: CameraModel = CameraModel(),
            label_noise: float = 0.0, rng: Optional[np.random.Generator] = None) -> Observation:
    """Depth and class-label scan from the agent's pose.

    ``label_noise`` flips each valid column's label to a different random
    class with that probability (needs ``rng``).
    """
    ang = state.yaw + cam.column_angles()
    d, hi, hj = kernels.raycast(scene.occupancy, scene.resolution, state.x, state.y,
                                np.cos(ang), np.sin(ang), cam.max_range)
    valid = np.isfinite(d) & (d >= cam.min_range) & (d <= cam.max_range)
    depth = np.where(valid, d, np.nan)
    labels = np.zeros(cam.width, dtype=np.int64)
    labels[valid] = scene.labels[hi[valid], hj[valid]]
    if label_noise > 0.0:
        if rng is None:
            raise ValueError("label noise needs an rng")
        flip = valid & (rng.random(cam.width) < label_noise)
        shift = rng.integers(1, NUM_CLASSES + 1, size=cam.width)
        labels = np.where(flip, (labels + shift) % (NUM_CLASSES + 1), labels)
    return Observation(state.t, depth, labels, state.episodic)


def geodesic_distance(scene: Scene, where, target_class: int) -> float:
    """Ground-truth geodesic meters from ``where`` (state or world ``(x, y)``) to the class.

    Returns ``inf`` from cells that cannot reach any instance.
    """
    x, y = (where.x, where.y) if isinstance(where, AgentState) else (where[0], where[1])
    i, j = scene.world_cell(x, y)
    fld = scene.class_field(target_class)
    nx, ny = fld.shape
    if not (0 <= i < nx and 0 <= j < ny):
        return math.inf
    return float(fld[i, j])


def smooth_geodesic(scene: Scene, x: float, y: float, target_class: int) -> float:
    """Bilinear interpolation of the class field between cell centres.

    Sub-cell moves that land in equally distant cells still get distinct
    scores.  Falls back to the plain cell value next to obstacles or edges.
    """
    fld = scene.class_field(target_class)
    res = scene.resolution
    u, v = x / res - 0.5, y / res - 0.5
    i0, j0 = int(math.floor(u)), int(math.floor(v))
    nx, ny = fld.shape
    if 0 <= i0 and 0 <= j0 and i0 + 1 < nx and j0 + 1 < ny:
        q = fld[i0:i0 + 2, j0:j0 + 2]
        if np.isfinite(q).all():
            fu, fv = u - i0, v - j0
            return float((q[0, 0] * (1 - fv) + q[0, 1] * fv) * (1 - fu)
                         + (q[1, 0] * (1 - fv) + q[1, 1] * fv) * fu)
    return geodesic_distance(scene, (x, y), target_class)


def checked_geodesic(scene: Scene, where, target_class: int) -> float:
    d = geodesic_distance(scene, where, target_class)
    if not math.isfinite(d):
        raise UnreachableTargetError(f"class {target_class} unreachable from {where}")
    return d


def check_success(scene: Scene, episode: Episode, state: AgentState) -> bool:
    """Success needs an explicit STOP within ``success_radius`` geodesic meters."""
    if not state.stopped:
        return False
    return geodesic_distance(scene, state, episode.target_class) <= episode.success_radius


# ---------------------------------------------------------------- generation


@dataclass(frozen=True)
class SceneParams:
    rooms_x: int = 3
    rooms_y: int = 3
    room_size: Tuple[float, float] = (2.0, 3.2)
    wall_thickness: float = 0.1
    door_width: float = 1.0
    extra_door_prob: float = 0.3
    num_objects: int = 8
    object_size: Tuple[float, float] = (0.3, 0.8)
    object_wall_clearance: float = 0.4
    target_classes: Tuple[int, ...] = tuple(range(1, NUM_CLASSES + 1))
    start_clearance: float = 0.3
    min_start_distance: float = 2.0
    max_start_extent: float = 12.5
    resolution: float = 0.05
    max_steps: int = 500
    success_radius: float = 1.0
    retries: int = 50

    def validate(self, spec: MapSpec = DEFAULT_MAP) -> None:
        if self.num_objects < 1:
            raise ValueError("scene generation needs at least one object (the target)")
        if self.rooms_x < 1 or self.rooms_y < 1:
            raise ValueError("need at least one room")
        lo, hi = self.room_size
        if not 0 < lo <= hi:
            raise ValueError("room_size must be an increasing positive pair")
        if self.max_start_extent >= spec.extent / 2:
            raise ValueError("max_start_extent must keep the scene inside the episodic map")
        if not self.target_classes or not all(1 <= c <= NUM_CLASSES for c in self.target_classes):
            raise ValueError("target_classes must be a non-empty subset of 1..21")


def _cells(meters: float, res: float) -> int:
    return max(1, int(round(meters / res)))


def _layout(rng: np.random.Generator, p: SceneParams):
    res = p.resolution
    wt = _cells(p.wall_thickness, res)
    wx = [_cells(rng.uniform(*p.room_size), res) for _ in range(p.rooms_x)]
    wy = [_cells(rng.uniform(*p.room_size), res) for _ in range(p.rooms_y)]
    x0 = np.cumsum([wt] + [w + wt for w in wx[:-1]])
    y0 = np.cumsum([wt] + [w + wt for w in wy[:-1]])
    nx = int(x0[-1] + wx[-1] + wt)
    ny = int(y0[-1] + wy[-1] + wt)
    walls = np.ones((nx, ny), dtype=np.uint8)
    rooms = {}
    for a in range(p.rooms_x):
        for b in range(p.rooms_y):
            box = (int(x0[a]), int(x0[a] + wx[a]), int(y0[b]), int(y0[b] + wy[b]))
            walls[box[0]:box[1], box[2]:box[3]] = 0
            rooms[(a, b)] = box
    # random spanning tree keeps every room connected, extras add loops
    edges = [((a, b), (a + 1, b)) for a in range(p.rooms_x - 1) for b in range(p.rooms_y)]
    edges += [((a, b), (a, b + 1)) for a in range(p.rooms_x) for b in range(p.rooms_y - 1)]
    order = rng.permutation(len(edges))
    parent = {r: r for r in rooms}

    def find(r):
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        return r

    door = _cells(p.door_width, res)
    for k in order:
        u, v = edges[k]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
        elif rng.random() >= p.extra_door_prob:
            continue
        bu, bv = rooms[u], rooms[v]
        if v[0] == u[0] + 1:  # shared wall normal to x
            lo, hi = max(bu[2], bv[2]), min(bu[3], bv[3])
            s = int(rng.integers(lo, max(lo + 1, hi - door + 1)))
            walls[bu[1]:bv[0], s:min(s + door, hi)] = 0
        else:
            lo, hi = max(bu[0], bv[0]), min(bu[1], bv[1])
            s = int(rng.integers(lo, max(lo + 1, hi - door + 1)))
            walls[s:min(s + door, hi), bu[3]:bv[2]] = 0
    return walls, rooms


def _place_objects(rng: np.random.Generator, p: SceneParams, walls: np.ndarray, rooms) -> List[SceneObject]:
    res = p.resolution
    clear = _cells(p.object_wall_clearance, res)
    taken = np.zeros_like(walls, dtype=bool)
    keys = sorted(rooms)
    objects: List[SceneObject] = []
    for _ in range(p.num_objects):
        for _attempt in range(20):
            x0, x1, y0, y1 = rooms[keys[int(rng.integers(len(keys)))]]
            w = _cells(rng.uniform(*p.object_size), res)
            h = _cells(rng.uniform(*p.object_size), res)
            lo_x, hi_x = x0 + clear, x1 - clear - w
            lo_y, hi_y = y0 + clear, y1 - clear - h
            if hi_x < lo_x or hi_y < lo_y:
                continue
            i = int(rng.integers(lo_x, hi_x + 1))
            j = int(rng.integers(lo_y, hi_y + 1))
            if taken[max(i - clear, 0):i + w + clear, max(j - clear, 0):j + h + clear].any():
                continue
            taken[i:i + w, j:j + h] = True
            ii, jj = np.meshgrid(np.arange(i, i + w), np.arange(j, j + h), indexing="ij")
            cls = int(p.target_classes[int(rng.integers(len(p.target_classes)))])
            objects.append(SceneObject(len(objects), cls, np.stack([ii.ravel(), jj.ravel()], axis=1)))
            break
    return objects


def generate_scene(seed: int, params: SceneParams = SceneParams(),
                   spec: MapSpec = DEFAULT_MAP) -> Tuple[Scene, Episode]:
    """Seeded rooms-and-doors scene plus a solvable episode.

    Same ``(seed, params)`` always gives the same output.
    """
    params.validate(spec)
    rng = np.random.default_rng(seed)
    res = params.resolution
    for _ in range(params.retries):
        walls, rooms = _layout(rng, params)
        objects = _place_objects(rng, params, walls, rooms)
        if not objects:
            continue
        scene = Scene(walls, objects, res)
        classes = sorted({o.class_id for o in objects})
        target = int(classes[int(rng.integers(len(classes)))])
        fld = scene.class_field(target)
        clearance = ndimage.distance_transform_edt(scene.occupancy == 0) * res
        nx, ny = scene.shape
        cx = (np.arange(nx) + 0.5) * res
        cy = (np.arange(ny) + 0.5) * res
        corners = [(0.0, 0.0), (nx * res, 0.0), (0.0, ny * res), (nx * res, ny * res)]
        far = np.zeros((nx, ny))
        for qx, qy in corners:
            far = np.maximum(far, np.hypot(cx[:, None] - qx, cy[None, :] - qy))
        ok = ((clearance >= params.start_clearance) & np.isfinite(fld)
              & (fld >= params.min_start_distance) & (far <= params.max_start_extent))
        cand = np.flatnonzero(ok.ravel())
        if cand.size == 0:
            continue
        pick = int(cand[int(rng.integers(cand.size))])
        i, j = divmod(pick, ny)
        yaw = float(rng.uniform(-math.pi, math.pi))
        episode = Episode(int(seed) if seed is not None else 0, (float(cx[i]), float(cy[j]), yaw), target,
                          params.max_steps, params.success_radius, seed)
        return scene, episode
    raise SceneGenerationError(f"no valid episode for seed {seed} after {params.retries} attempts")


# ---------------------------------------------------------------- serialization


def rle_encode(mask: np.ndarray) -> List[int]:
    """Run lengths of the row-major flattening, starting with a run of zeros."""
    flat = np.asarray(mask, dtype=np.uint8).ravel()
    if flat.size == 0:
        return []
    change = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs = [0] + runs
    return [int(r) for r in runs]


def rle_decode(runs: List[int], shape) -> np.ndarray:
    values = np.arange(len(runs)) % 2
    flat = np.repeat(values.astype(np.uint8), runs)
    if flat.size != int(np.prod(shape)):
        raise ValueError("run lengths do not match the grid shape")
    return flat.reshape(shape)


def scene_to_dict(scene: Scene) -> dict:
    nx, ny = scene.shape
    return {
        "format": SCENE_FORMAT,
        "version": SCENE_VERSION,
        "resolution": scene.resolution,
        "shape": [nx, ny],
        "bounds": [[0.0, nx * scene.resolution], [0.0, ny * scene.resolution]],
        "walls_rle": rle_encode(scene.walls),
        "objects": [
            {"instance_id": o.instance_id, "class_id": o.class_id, "cells": o.cells.tolist()}
            for o in scene.objects
        ],
    }


def scene_from_dict(data: dict) -> Scene:
    if data.get("format") != SCENE_FORMAT:
        raise ValueError("not a scene document")
    if data.get("version") != SCENE_VERSION:
        raise ValueError(f"unsupported scene version {data.get('version')!r}")
    shape = tuple(data["shape"])
    walls = rle_decode(data["walls_rle"], shape)
    objects = [SceneObject(int(o["instance_id"]), int(o["class_id"]),
                           np.asarray(o["cells"], dtype=np.int64).reshape(-1, 2))
               for o in data["objects"]]
    return Scene(walls, objects, float(data["resolution"]))


def save_scene(path, scene: Scene) -> None:
    with open(path, "w") as fh:
        json.dump(scene_to_dict(scene), fh, separators=(",", ":"))


def load_scene(path) -> Scene:
    with open(path) as fh:
        return scene_from_dict(json.load(fh))


def episode_to_dict(ep: Episode) -> dict:
    return {
        "episode_id": ep.episode_id,
        "seed": ep.seed,
        "start": list(ep.start),
        "target_class": ep.target_class,
        "max_steps": ep.max_steps,
        "success_radius": ep.success_radius,
    }


def episode_from_dict(data: dict) -> Episode:
    return Episode(int(data["episode_id"]), tuple(float(v) for v in data["start"]), int(data["target_class"]),
                   int(data.get("max_steps", 500)), float(data.get("success_radius", 1.0)), data.get("seed"))
