"""Episode loop and batch evaluation.

Per step: observe -> project -> crop -> global policy -> decode -> local goal
-> controller -> simulator step -> reward.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .geometry import (
    DEFAULT_MAP,
    EpisodicPose,
    cell_center,
    decode_cartesian,
    decode_polar,
    polar_goal_to_cell,
    pose_to_cell,
)
from .planning import (
    ControllerParams,
    DiscreteAction,
    PlanningError,
    greedy_oracle_action,
    local_goal,
    local_planner_step,
)
from .policy import CARTESIAN, POLICIES, REPRESENTATIONS, GlobalPolicy, PolicyInput, make_policy
from .reward import EpisodeResult, RewardParams, StepRecord, aggregate, format_report, step_reward
from .semantic_map import (
    CameraModel,
    SemanticGrid,
    crop_egocentric,
    dump_channels,
    mark_blocked,
    project_observation,
    reset,
)
from .simulator import (
    Episode,
    Scene,
    SceneParams,
    check_success,
    checked_geodesic,
    episode_to_dict,
    generate_scene,
    geodesic_distance,
    initial_state,
    observe,
    step,
)

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    episodes: int = 10
    policy: str = "oracle"
    representation: str = CARTESIAN
    reward: RewardParams = field(default_factory=RewardParams)
    controller: ControllerParams = field(default_factory=ControllerParams)
    camera: CameraModel = field(default_factory=CameraModel)
    scene: SceneParams = field(default_factory=SceneParams)
    out_dir: str = "runs/latest"
    lookahead: float = 0.5
    inflation: int = 3
    replan_every: int = 1
    label_noise: float = 0.0
    explore_radius: float = 1.0
    dump_maps: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        if self.representation not in REPRESENTATIONS:
            raise ConfigError(f"representation must be one of {REPRESENTATIONS}")
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}; choose from {sorted(POLICIES)}")
        if self.replan_every < 1:
            raise ConfigError("replan_every must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0.0 <= self.label_noise <= 1.0:
            raise ConfigError("label_noise must lie in [0, 1]")
        try:
            self.scene.validate()
        except ValueError as exc:
            raise ConfigError(f"invalid [scene]: {exc}") from exc


_SECTIONS = {"reward": RewardParams, "controller": ControllerParams, "camera": CameraModel,
             "scene": SceneParams}


def _build(cls, data: Dict[str, Any], where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    data = dict(data)
    # angles are written in degrees in config files
    for key in ("hfov_deg", "turn_threshold_deg"):
        if key in data:
            data[key[:-4]] = math.radians(float(data.pop(key)))
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    for k in ("room_size", "object_size", "target_classes"):
        if k in data:
            data[k] = tuple(data[k])
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


def config_from_dict(data: Dict[str, Any]) -> RunConfig:
    data = dict(data)
    kwargs = {}
    for key, cls in _SECTIONS.items():
        if key in data:
            section = data.pop(key)
            if not isinstance(section, dict):
                raise ConfigError(f"[{key}] must be a table")
            kwargs[key] = _build(cls, section, f"[{key}]")
    top = _build(RunConfig, data, "run config") if data else RunConfig()
    return dataclasses.replace(top, **kwargs)


def load_config(path: str) -> RunConfig:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        if path.endswith(".json"):
            data = json.loads(raw)
        else:
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            data = tomllib.loads(raw.decode("utf-8"))
    except Exception as exc:  # noqa: BLE001 - any parse failure is a config error
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table/object")
    return config_from_dict(data)


def episode_seed(base: int, index: int) -> int:
    return int(np.random.SeedSequence([int(base), int(index)]).generate_state(1)[0])


@dataclass
class EpisodeOutcome:
    episode: Episode
    result: EpisodeResult
    steps: List[StepRecord]
    trapped: bool = False

    def to_record(self, config: RunConfig) -> Dict[str, Any]:
        return {
            "episode": episode_to_dict(self.episode),
            "policy": config.policy,
            "representation": config.representation,
            "success": self.result.success,
            "path_length": self.result.path_length,
            "shortest_path": self.result.shortest_path,
            "final_distance": self.result.final_distance,
            "num_steps": len(self.steps),
            "total_reward": sum(s.reward for s in self.steps),
            "trapped": self.trapped,
            "steps": [s.to_dict() for s in self.steps],
        }


def decode_goal(pred, representation: str, pose, spec=DEFAULT_MAP):
    """Map cell named by a policy prediction.

    Polar goals are taken relative to the center of the agent's cell (the
    crop center the policy saw), not its continuous position.
    """
    if representation == CARTESIAN:
        return decode_cartesian(pred, spec)
    cx, cy = cell_center(pose_to_cell(pose, spec), spec)
    anchor = EpisodicPose(cx, cy, pose.yaw)
    return polar_goal_to_cell(decode_polar(pred, None, spec), anchor, spec)


def run_episode(config: RunConfig, scene: Scene, episode: Episode,
                policy: Optional[GlobalPolicy] = None, dump_dir: Optional[str] = None,
                trace: Optional[List[Tuple[int, str]]] = None,
                observer: Optional[Callable[[int, SemanticGrid, np.ndarray], None]] = None) -> EpisodeOutcome:
    """Roll out one episode until STOP or ``episode.max_steps``.

    ``trace`` (if given) receives ``(t, stage)`` pairs in execution order.
    ``observer(t, grid, crop)`` is called whenever a fresh crop is taken.
    """
    spec = DEFAULT_MAP
    if policy is None:
        policy = make_policy(config.policy, config.representation, seed=episode.seed or 0,
                             explore_radius=config.explore_radius)
    policy.reset(scene, episode)
    noise_rng = np.random.default_rng([int(episode.seed or 0), 7]) if config.label_noise > 0 else None

    def mark(t, stage):
        if trace is not None:
            trace.append((t, stage))

    state = initial_state(episode)
    target = episode.target_class
    shortest = checked_geodesic(scene, state, target)
    grid = reset(spec)
    records: List[StepRecord] = []
    path_length = 0.0
    goal_cell = None
    trapped = False
    for t in range(episode.max_steps):
        obs = observe(scene, state, config.camera, config.label_noise, noise_rng)
        mark(t, "observe")
        project_observation(grid, obs, config.camera)
        mark(t, "project")
        if dump_dir is not None:
            dump_channels(grid, dump_dir, t)
        pose = obs.pose
        if goal_cell is None or t % config.replan_every == 0:
            crop = crop_egocentric(grid)
            mark(t, "crop")
            if observer is not None:
                observer(t, grid, crop)
            out = policy(PolicyInput(crop, target, pose.yaw, grid.agent_cell))
            mark(t, "policy")
            goal_cell = decode_goal(out.pred, out.representation, pose, spec)
            mark(t, f"decode_{out.representation}")
        try:
            lg = local_goal(grid, pose, goal_cell, config.lookahead, config.inflation)
        except PlanningError as exc:
            log.info("episode %s: planner failed at t=%d: %s", episode.episode_id, t, exc)
            trapped = True
            break
        mark(t, "local_goal")
        action = local_planner_step(pose, lg, config.controller)
        mark(t, "controller")
        oracle = greedy_oracle_action(scene, state, target, episode.success_radius)
        d_before = geodesic_distance(scene, state, target)
        new_state = step(scene, state, action)
        mark(t, "step")
        d_after = geodesic_distance(scene, new_state, target)
        path_length += math.hypot(new_state.x - state.x, new_state.y - state.y)
        success = check_success(scene, episode, new_state)
        done = new_state.stopped or new_state.t >= episode.max_steps
        rec = StepRecord(t, action, oracle, d_before, d_after, 0.0, done, success, new_state.collision)
        rec.reward = step_reward(rec, config.reward)
        mark(t, "reward")
        records.append(rec)
        if new_state.collision and action == DiscreteAction.MOVE_FORWARD:
            mark_blocked(grid, state.episodic)
        state = new_state
        if done:
            break
    final = geodesic_distance(scene, state, target)
    result = EpisodeResult(check_success(scene, episode, state), path_length, shortest, final)
    return EpisodeOutcome(episode, result, records, trapped)


def _run_index(args) -> EpisodeOutcome:
    config, index, dump_root = args
    seed = episode_seed(config.seed, index)
    scene, episode = generate_scene(seed, config.scene)
    episode = dataclasses.replace(episode, episode_id=index)
    dump_dir = os.path.join(dump_root, f"episode_{index:04d}") if dump_root else None
    return run_episode(config, scene, episode, dump_dir=dump_dir)


def run_batch(config: RunConfig, out_dir: Optional[str] = None, write: bool = True,
              echo: bool = False) -> Tuple[Dict[str, float], List[EpisodeOutcome]]:
    """Run ``config.episodes`` seeded episodes and aggregate the four metrics.

    Writes ``report.json`` and ``episodes.jsonl`` into ``out_dir`` (default
    ``config.out_dir``) unless ``write`` is false.
    """
    out_dir = config.out_dir if out_dir is None else out_dir
    dump_root = os.path.join(out_dir, "maps") if (config.dump_maps and write) else None
    jobs = [(config, k, dump_root) for k in range(config.episodes)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_run_index, jobs))
    else:
        outcomes = [_run_index(j) for j in jobs]
    report = aggregate(o.result for o in outcomes)
    if write:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(os.path.join(out_dir, "episodes.jsonl"), "w") as fh:
            for o in outcomes:
                fh.write(json.dumps(o.to_record(config), sort_keys=True) + "\n")
    if echo:
        print(format_report(report))
    return report, outcomes
