"""Shaped step reward and the leaderboard metrics (SPL, SoftSPL, distance to
goal, success rate)."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Sequence

from .planning import DiscreteAction

FORWARD_STEP = 0.25
METRIC_KEYS = ("spl", "softspl", "distance_to_goal", "success_rate")


@dataclass(frozen=True)
class RewardParams:
    step_default: float = -1e-4
    oracle_match: float = 1e-3
    success_bonus: float = 10 * FORWARD_STEP


@dataclass
class StepRecord:
    t: int
    action: DiscreteAction
    oracle_action: DiscreteAction
    dist_before: float
    dist_after: float
    reward: float = 0.0
    done: bool = False
    success: bool = False
    collision: bool = False

    def __post_init__(self) -> None:
        if self.success and not self.done:
            raise ValueError("a successful step must also be terminal")
        if self.dist_before < 0 or self.dist_after < 0:
            raise ValueError("distances must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["action"] = DiscreteAction(self.action).name
        d["oracle_action"] = DiscreteAction(self.oracle_action).name
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StepRecord":
        d = dict(d)
        d["action"] = DiscreteAction[d["action"]]
        d["oracle_action"] = DiscreteAction[d["oracle_action"]]
        return cls(**d)


def step_reward(rec: StepRecord, p: RewardParams = RewardParams()) -> float:
    """Imitation term (replaces the default step value) + progress + success bonus."""
    base = p.oracle_match if rec.action == rec.oracle_action else p.step_default
    r = base + (rec.dist_before - rec.dist_after)
    if rec.success:
        r += p.success_bonus
    return r


@dataclass(frozen=True)
class EpisodeResult:
    success: bool
    path_length: float
    shortest_path: float
    final_distance: float

    def __post_init__(self) -> None:
        if self.path_length < 0:
            raise ValueError("path_length must be non-negative")
        if not self.shortest_path > 0:
            raise ValueError("shortest_path must be positive")


def _check(results: Sequence[EpisodeResult]) -> None:
    if len(results) == 0:
        raise ValueError("need at least one episode result")


def _efficiency(r: EpisodeResult) -> float:
    return r.shortest_path / max(r.path_length, r.shortest_path)


def spl(results: Sequence[EpisodeResult]) -> float:
    _check(results)
    return sum(float(r.success) * _efficiency(r) for r in results) / len(results)


def soft_success(r: EpisodeResult) -> float:
    return max(0.0, 1.0 - r.final_distance / r.shortest_path)


def soft_spl(results: Sequence[EpisodeResult]) -> float:
    _check(results)
    return sum(soft_success(r) * _efficiency(r) for r in results) / len(results)


def aggregate(results: Iterable[EpisodeResult]) -> Dict[str, float]:
    results = list(results)
    _check(results)
    n = len(results)
    return {
        "spl": spl(results),
        "softspl": soft_spl(results),
        "distance_to_goal": sum(r.final_distance for r in results) / n,
        "success_rate": sum(float(r.success) for r in results) / n,
    }


def format_report(report: Dict[str, float]) -> str:
    head = " | ".join(f"{k:>16}" for k in METRIC_KEYS)
    row = " | ".join(f"{report[k]:>16.4f}" for k in METRIC_KEYS)
    return f"{head}\n{row}"


def recompute_rewards(records: List[StepRecord], p: RewardParams = RewardParams()) -> List[float]:
    return [step_reward(r, p) for r in records]
