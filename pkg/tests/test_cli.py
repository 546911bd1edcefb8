"""Exit codes and output formats of the command line driver.

Everything goes through cli.main(argv) in-process; stdout is captured with
capsys so the tests stay fast.
"""

import json
import re

import pytest

from voronoi_game.cli import main
from voronoi_game.epsilon_table import build_table, table_from_csv
from voronoi_game.game_engine import InstanceSpec, generate_users


@pytest.fixture
def users_csv(tmp_path):
    path = tmp_path / "users.csv"
    generate_users(InstanceSpec(2, 30, "uniform_square", 9)).save_csv(str(path))
    return str(path)


def test_table_csv_round_trips(capsys):
    assert main(["table", "--dim", "2", "--kmax", "10", "--format", "csv"]) == 0
    out = capsys.readouterr().out
    back = table_from_csv(out, 2)
    ref = build_table(2, 10)
    assert all(back.value(k) == ref.value(k) for k in range(1, 11))
    # frozen factor column, first and last rows
    assert out.splitlines()[1].endswith("3,2")
    assert out.splitlines()[10].endswith("9633,5740")


def test_table_pretty(capsys):
    assert main(["table", "--dim", "3", "--kmax", "4", "--format", "pretty"]) == 0
    out = capsys.readouterr().out
    assert "39/16" in out and "161/64" in out


def test_play_generated_instance(capsys):
    code = main([
        "play", "--gen", "uniform_square:30:seed=7",
        "--k", "1", "--strategy", "centerpoint",
    ])
    out = capsys.readouterr().out
    assert code == 0
    m = re.search(r"p1_payoff: (\d+)", out)
    assert m and int(m.group(1)) >= 10


def test_play_json_output(tmp_path, capsys):
    dest = tmp_path / "game.json"
    code = main([
        "play", "--gen", "annulus:24:seed=3", "--k", "2",
        "--strategy", "eknet", "--json", str(dest),
    ])
    capsys.readouterr()
    assert code == 0
    blob = json.loads(dest.read_text())
    assert blob["k"] == 2
    assert blob["strategy"]["kind"] == "mustafa_ray"
    assert blob["p1_payoff"] + blob["p2_payoff"] == 24


def test_play_users_file(users_csv, capsys):
    code = main([
        "play", "--users", users_csv, "--k", "1",
        "--strategy", "disknet", "--epsilon", "1/4",
    ])
    capsys.readouterr()
    assert code == 0


def test_play_degenerate_file_rejected(tmp_path, capsys):
    path = tmp_path / "line.csv"
    path.write_text("0.0,0.0\n1.0,1.0\n2.0,2.0\n")
    args = ["play", "--users", str(path), "--k", "1", "--strategy", "centerpoint"]
    assert main(args) == 2
    capsys.readouterr()
    assert main(args + ["--allow-degenerate"]) == 0


def test_play_usage_errors(capsys):
    # unknown strategy is an argparse choice failure
    assert main(["play", "--gen", "uniform_square:10", "--k", "1",
                 "--strategy", "wat"]) == 2
    # missing epsilon for a net strategy
    assert main(["play", "--gen", "uniform_square:10:seed=1", "--k", "1",
                 "--strategy", "disknet"]) == 2
    # malformed generator spec
    assert main(["play", "--gen", "uniform_square", "--k", "1",
                 "--strategy", "centerpoint"]) == 2
    capsys.readouterr()


def test_net_verifies(users_csv, capsys):
    code = main(["net", "--dim", "2", "--epsilon", "1/2", "--users", users_csv])
    out = capsys.readouterr().out
    assert code == 0
    assert "net: ok" in out
    m = re.search(r"net size: (\d+) \(cap (\d+)\)", out)
    assert m and int(m.group(1)) <= int(m.group(2))


def test_net_bad_epsilon_is_usage_error(users_csv, capsys):
    assert main(["net", "--dim", "2", "--epsilon", "2", "--users", users_csv]) == 2
    capsys.readouterr()


def test_verify_suite(capsys):
    assert main(["verify", "--suite", "piercing", "--trials", "5",
                 "--seed", "4"]) == 0
    out = capsys.readouterr().out
    assert "0 failures" in out


def test_verify_seed_env_override(capsys, monkeypatch):
    monkeypatch.setenv("VG_SEED", "31337")
    assert main(["verify", "--suite", "oracle", "--trials", "3",
                 "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "seed 31337" in out


def test_no_subcommand_is_usage_error(capsys):
    assert main([]) == 2
    capsys.readouterr()
