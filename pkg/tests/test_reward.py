import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from objnav.planning import DiscreteAction
from objnav.reward import (
    METRIC_KEYS,
    EpisodeResult,
    RewardParams,
    StepRecord,
    aggregate,
    format_report,
    recompute_rewards,
    soft_spl,
    spl,
    step_reward,
)
from oracles import reference_spl

A = DiscreteAction


def rec(action=A.MOVE_FORWARD, oracle=A.TURN_LEFT, before=2.0, after=2.0, success=False):
    return StepRecord(0, action, oracle, before, after, done=success, success=success)


def test_default_params():
    p = RewardParams()
    assert (p.step_default, p.oracle_match, p.success_bonus) == (-1e-4, 1e-3, 2.5)


def test_idle_mismatch_step():
    assert step_reward(rec()) == -1e-4


def test_matching_progress_step():
    r = step_reward(rec(oracle=A.MOVE_FORWARD, before=2.0, after=1.75))
    assert r == 1e-3 + 0.25
    assert r == pytest.approx(0.251)


def test_matching_stop_at_success():
    r = step_reward(rec(A.STOP, A.STOP, before=0.75, after=0.75, success=True))
    assert r == 1e-3 + 0.0 + 2.5


def test_record_invariants():
    with pytest.raises(ValueError):
        StepRecord(0, A.STOP, A.STOP, 1.0, 1.0, done=False, success=True)
    with pytest.raises(ValueError):
        StepRecord(0, A.STOP, A.STOP, -0.1, 1.0)


def test_record_dict_round_trip():
    r = StepRecord(4, A.TURN_RIGHT, A.MOVE_FORWARD, 1.5, 1.25, reward=0.1, collision=True)
    d = json.loads(json.dumps(r.to_dict()))
    assert d["action"] == "TURN_RIGHT"
    assert StepRecord.from_dict(d) == r


@given(st.sampled_from(list(A)), st.sampled_from(list(A)), st.floats(0, 20), st.floats(0, 20), st.booleans())
def test_reward_is_sum_of_terms(action, oracle, before, after, success):
    r = rec(action, oracle, before, after, success)
    full = step_reward(r)
    base = step_reward(r, RewardParams(0.0, 0.0, 0.0))
    assert base == before - after
    only_bonus = step_reward(r, RewardParams(0.0, 0.0, 2.5))
    assert only_bonus == base + (2.5 if success else 0.0)
    match = 1e-3 if action == oracle else -1e-4
    assert full == match + (before - after) + (2.5 if success else 0.0)


def test_recompute_matches_step_reward():
    rs = [rec(before=1.0, after=0.75), rec(A.STOP, A.STOP, 0.75, 0.75, True)]
    assert recompute_rewards(rs) == [step_reward(r) for r in rs]


# ---------------------------------------------------------------- metrics


def test_spl_examples():
    assert spl([EpisodeResult(True, 4.0, 4.0, 0.5)]) == 1.0
    assert spl([EpisodeResult(False, 4.0, 4.0, 3.0)]) == 0.0
    assert spl([EpisodeResult(True, 8.0, 4.0, 0.5)]) == 0.5
    # a path shorter than the geodesic (stopping early inside the radius) counts as optimal
    assert spl([EpisodeResult(True, 3.0, 4.0, 0.9)]) == 1.0


def test_soft_spl_examples():
    assert soft_spl([EpisodeResult(False, 0.0, 4.0, 4.0)]) == 0.0
    assert soft_spl([EpisodeResult(True, 4.0, 4.0, 0.0)]) == 1.0
    assert soft_spl([EpisodeResult(False, 4.0, 4.0, 2.0)]) == 0.5
    assert soft_spl([EpisodeResult(False, 8.0, 4.0, 2.0)]) == 0.25
    # moving away clamps soft-success at zero
    assert soft_spl([EpisodeResult(False, 2.0, 4.0, 6.0)]) == 0.0


def test_aggregate_examples():
    ok = [EpisodeResult(True, 3.0, 3.0, 0.5), EpisodeResult(True, 5.0, 5.0, 0.25)]
    rep = aggregate(ok)
    assert tuple(rep) == METRIC_KEYS
    assert rep["spl"] == 1.0 and rep["success_rate"] == 1.0 and rep["distance_to_goal"] <= 1.0
    bad = aggregate([EpisodeResult(False, 0.0, 3.0, 3.0)] * 3)
    assert bad["spl"] == 0.0 and bad["success_rate"] == 0.0 and bad["softspl"] == 0.0
    mixed = aggregate([EpisodeResult(True, 6.0, 3.0, 0.5), EpisodeResult(False, 2.0, 4.0, 3.0)])
    assert mixed == {"spl": (0.5 + 0.0) / 2, "softspl": (5 / 6 * 0.5 + 0.25) / 2,
                     "distance_to_goal": 1.75, "success_rate": 0.5}


def test_empty_and_invalid_inputs():
    for fn in (spl, soft_spl, aggregate):
        with pytest.raises(ValueError):
            fn([])
    with pytest.raises(ValueError):
        EpisodeResult(True, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        EpisodeResult(True, -1.0, 1.0, 0.0)


results = st.builds(EpisodeResult, st.booleans(), st.floats(0, 100), st.floats(0.01, 100), st.floats(0, 100))


@given(st.lists(results, min_size=1, max_size=30))
def test_metric_bounds(batch):
    rep = aggregate(batch)
    for k in ("spl", "softspl", "success_rate"):
        assert 0.0 <= rep[k] <= 1.0
    assert rep["spl"] <= rep["success_rate"]
    assert rep["spl"] == pytest.approx(reference_spl([r.success for r in batch],
                                                     [r.shortest_path for r in batch],
                                                     [r.path_length for r in batch]))


@given(st.lists(results, min_size=1, max_size=30), st.randoms())
def test_aggregate_is_order_insensitive(batch, rnd):
    shuffled = list(batch)
    rnd.shuffle(shuffled)
    a, b = aggregate(batch), aggregate(shuffled)
    assert a.keys() == b.keys()
    assert all(math.isclose(a[k], b[k], abs_tol=1e-12) for k in a)


def test_format_report_has_every_column():
    text = format_report({"spl": 0.5, "softspl": 0.25, "distance_to_goal": 1.0, "success_rate": 0.5})
    head, row = text.splitlines()
    assert [h.strip() for h in head.split("|")] == list(METRIC_KEYS)
    assert "0.2500" in row
