import math

import pytest

import rbaird

TINY = {
    "batches": 2,
    "envs_per_batch": 2,
    "queries_per_batch": 2,
    "query_size": 3,
    "feature_dim": 3,
    "space_size": 8,
    "test_env_count": 3,
    "horizon": 15,
    "grid_width": 5,
    "grid_height": 5,
    "grad_steps": 3,
    "sample_count": 20,
    "variance_samples": 50,
    "seeds": {"space": 1, "envs": 1, "queries": 1, "oracle": 1, "sampling": 1},
}


def test_presets_resolve():
    assert "basic" in rbaird.preset_names()
    cfg = rbaird.resolve_config(preset="big_batches")
    assert (cfg["batches"], cfg["queries_per_batch"], cfg["envs_per_batch"]) == (4, 3, 10)


def test_invalid_config_raises():
    with pytest.raises(rbaird.ConfigError):
        rbaird.resolve_config({"batches": 0})


def test_run_is_deterministic_and_replayable():
    a = rbaird.run(TINY)
    b = rbaird.run(TINY)
    assert a["metrics_csv"] == b["metrics_csv"]
    assert a["inference_count"] == 8
    assert a["status"] == "done"
    assert len(a["answers"]) == 8
    assert math.isclose(sum(a["belief"]["probs"]), 1.0, rel_tol=1e-12)
    again = rbaird.replay(a["config"], a["answers"])
    assert again["belief"]["probs"] == a["belief"]["probs"]


def test_plan_walks_the_corridor():
    env = {
        "id": "corridor",
        "width": 3,
        "height": 1,
        "start": [0, 0],
        "goals": [[2, 0]],
        "walls": [],
        "features": [0.0, 0.0, 1.0],
        "living_reward": 0.1,
        "discount": 1.0,
        "feature_dim": 1,
    }
    out = rbaird.plan(env, [1.0], horizon=5)
    assert out["states"] == [[0, 0], [1, 0], [2, 0]]
    assert math.isclose(out["return"], 0.7, rel_tol=1e-12)


def test_session_round_trip(tmp_path):
    s = rbaird.Session(tmp_path)
    body = dict(TINY, oracle_mode="interactive")
    status, created = s.request("POST", "/sessions", body)
    assert status == 201
    sid = created["id"]
    status, round_doc = s.request("GET", f"/sessions/{sid}/round")
    assert status == 200 and round_doc["round_id"] == 0
    status, ans = s.request("POST", f"/sessions/{sid}/answers", {"env_index": 0, "choice_index": 0})
    assert status == 200 and ans["unanswered"] == [1]
    status, err = s.request("POST", f"/sessions/{sid}/answers", {"env_index": 0, "choice_index": 1})
    assert status == 409 and err["code"] == "duplicate_answer"
    assert len(rbaird.Session(tmp_path)) == 1
