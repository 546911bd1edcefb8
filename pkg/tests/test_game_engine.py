import csv
import json
import math
from fractions import Fraction

import pytest

from voronoi_game.errors import VerificationError
from voronoi_game.game_engine import (
    DISTRIBUTIONS,
    InstanceSpec,
    GameResult,
    generate_users,
    play,
    run_batch,
    run_suite,
    verify_bounds,
)
from voronoi_game.epsilon_table import build_table


def test_instance_id_format():
    spec = InstanceSpec(2, 30, "uniform_square", 7)
    assert spec.instance_id == "uniform_square-d2-n30-s7"


def test_generation_is_deterministic():
    spec = InstanceSpec(2, 40, "gaussian_clusters", 123)
    a = generate_users(spec)
    b = generate_users(spec)
    assert [p.coords for p in a.users] == [p.coords for p in b.users]


@pytest.mark.parametrize("dist", DISTRIBUTIONS)
def test_distributions_produce_usable_instances(dist):
    spec = InstanceSpec(2, 35, dist, 11)
    users = generate_users(spec)
    assert len(users) == 35
    assert users.dimension == 2
    assert users.general_position()


def test_generation_3d():
    spec = InstanceSpec(3, 25, "uniform_square", 3)
    users = generate_users(spec)
    assert len(users) == 25
    assert users.dimension == 3


def test_spec_validation():
    with pytest.raises(ValueError):
        InstanceSpec(4, 10, "uniform_square", 0)
    with pytest.raises(ValueError):
        InstanceSpec(2, 0, "uniform_square", 0)
    with pytest.raises(ValueError):
        InstanceSpec(2, 10, "mystery", 0)


def test_play_centerpoint_and_bounds():
    users = generate_users(InstanceSpec(2, 30, "uniform_square", 7))
    result = play(users, 1, "centerpoint", instance_id="t")
    assert result.p1_payoff + result.p2_payoff == 30
    assert result.p2_payoff <= math.floor(Fraction(2, 3) * 30)
    assert result.halfcell_payoff >= 15
    checks = verify_bounds(result)
    assert all(checks.values()), checks


def test_play_eknet_with_table():
    table = build_table(2, 10)
    users = generate_users(InstanceSpec(2, 50, "annulus", 21))
    result = play(users, 3, "eknet", table=table, instance_id="t")
    assert result.k == 3
    assert result.p2_payoff <= math.floor(table.value(3) * 50)
    checks = verify_bounds(result, table)
    assert all(checks.values()), checks


def test_play_rejects_bad_args():
    users = generate_users(InstanceSpec(2, 20, "uniform_square", 1))
    with pytest.raises(ValueError):
        play(users, 0, "centerpoint")
    with pytest.raises(ValueError):
        play(users, 2, "centerpoint")  # centerpoint plays one facility
    with pytest.raises(ValueError):
        play(users, 1, "disknet")  # needs epsilon
    with pytest.raises(ValueError):
        play(users, 1, "nosuch")


def test_result_json_round_trip():
    users = generate_users(InstanceSpec(2, 25, "grid_jitter", 5))
    result = play(users, 1, "disknet", epsilon=Fraction(1, 4), instance_id="x")
    blob = json.dumps(result.to_json_dict())
    back = json.loads(blob)
    assert back["n"] == 25
    assert back["p1_payoff"] + back["p2_payoff"] == 25
    assert back["strategy"]["epsilon"] == {"num": 1, "den": 4}
    assert len(back["response"]["served"]) == back["p2_payoff"]


def test_run_batch_writes_artifacts(tmp_path):
    specs = [InstanceSpec(2, 20, "uniform_square", s) for s in (1, 2, 3)]
    jsonl = tmp_path / "runs.jsonl"
    summary = tmp_path / "summary.csv"
    results = run_batch(
        specs, k=2, strategy_name="eknet",
        jsonl_path=str(jsonl), summary_path=str(summary),
    )
    assert len(results) == 3
    lines = jsonl.read_text().strip().splitlines()
    assert len(lines) == 3
    assert json.loads(lines[0])["k"] == 2
    with open(summary) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "strategy", "n", "p1_payoff", "lower", "upper"]
    assert len(rows) == 4
    assert rows[1][4] == "3/7"  # 1 - 4/7, exact


def test_suites_pass_quickly():
    assert run_suite("oracle", trials=6, seed=2) == []
    assert run_suite("bounds", trials=6, seed=2) == []
    assert run_suite("piercing", trials=6, seed=2) == []


def test_run_suite_rejects_unknown_name():
    with pytest.raises(ValueError):
        run_suite("everything", trials=1, seed=1)
