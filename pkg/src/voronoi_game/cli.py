"""Command line driver.

Subcommands: ``table`` (exact shrinking-fraction tables), ``play`` (one full
game against the exact follower), ``net`` (piercing nets with verification),
``verify`` (randomized self-check suites), ``serve`` (HTTP API).

Exit codes: 0 success, 1 a bound or verification failed, 2 bad usage or bad
input.  The environment variable ``VG_SEED`` overrides any ``--seed`` flag.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

from .epsilon_table import build_table, table_pretty, table_to_csv
from .errors import (
    DegeneracyError,
    DegenerateStrategyError,
    DimensionMismatchError,
    VerificationError,
)
from .game_engine import (
    DISTRIBUTIONS,
    STRATEGY_NAMES,
    InstanceSpec,
    generate_users,
    play,
    run_suite,
    verify_bounds,
)
from .geometry import UserSet

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad flag values or bad input files; maps to exit code 2."""


def _parse_epsilon(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot read epsilon {text!r}: {exc}") from exc
    if not 0 < value <= 1:
        raise UsageError(f"epsilon must lie in (0, 1], got {text}")
    return value


def _parse_gen_spec(text: str) -> InstanceSpec:
    """``distribution:n[:seed=S][:dim=D]``, e.g. ``uniform_square:30:seed=7``."""
    parts = text.split(":")
    if len(parts) < 2:
        raise UsageError(
            f"generator spec {text!r} needs at least distribution:n"
        )
    dist, n_text, *extras = parts
    if dist not in DISTRIBUTIONS:
        raise UsageError(
            f"unknown distribution {dist!r}; choose from {', '.join(DISTRIBUTIONS)}"
        )
    try:
        n = int(n_text)
    except ValueError as exc:
        raise UsageError(f"bad point count {n_text!r} in {text!r}") from exc
    if n < 1:
        raise UsageError(f"point count must be positive, got {n}")
    seed, dim = 0, 2
    for extra in extras:
        key, _, raw = extra.partition("=")
        if key == "seed":
            seed = int(raw)
        elif key == "dim":
            dim = int(raw)
        else:
            raise UsageError(f"unknown generator option {key!r} in {text!r}")
    if dim not in (2, 3):
        raise UsageError(f"dim must be 2 or 3, got {dim}")
    return InstanceSpec(dim, n, dist, seed)


def _load_users(path: str, allow_degenerate: bool) -> UserSet:
    try:
        users = UserSet.load_csv(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"malformed point file {path}: {exc}") from exc
    if not allow_degenerate and not users.general_position():
        raise UsageError(
            f"{path} contains collinear or cocircular points; rerun with "
            "--allow-degenerate to accept them anyway"
        )
    return users


def _resolve_seed(seed: int) -> int:
    env = os.environ.get("VG_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"VG_SEED must be an integer, got {env!r}") from exc
    return seed


def _frac(d: dict) -> str:
    return f"{d['num']}/{d['den']}"


def cmd_table(args) -> int:
    table = build_table(args.dim, args.kmax)
    if args.format == "csv":
        sys.stdout.write(table_to_csv(table))
    else:
        sys.stdout.write(table_pretty(table))
    return EXIT_OK


def cmd_play(args) -> int:
    if args.users:
        users = _load_users(args.users, args.allow_degenerate)
        instance_id = args.users
    else:
        spec = _parse_gen_spec(args.gen)
        users = generate_users(spec)
        instance_id = spec.instance_id
    epsilon = _parse_epsilon(args.epsilon) if args.epsilon else None
    kind = STRATEGY_NAMES[args.strategy]
    table = None
    if kind == "mustafa_ray":
        table = build_table(users.dimension, max(args.k, 10))

    result = play(
        users, args.k, args.strategy, epsilon=epsilon, table=table,
        instance_id=instance_id,
    )
    checks = verify_bounds(result, table)

    print(f"instance: {result.instance_id}")
    print(f"n: {result.n}  dimension: {users.dimension}")
    print(
        f"strategy: {args.strategy}  k: {result.k}  "
        f"guarantee: {result.strategy.guarantee.numerator}"
        f"/{result.strategy.guarantee.denominator}"
    )
    for p in result.strategy.placements.facilities:
        print("  place " + ",".join(repr(c) for c in p.coords))
    print(f"p1_payoff: {result.p1_payoff}  p2_payoff: {result.p2_payoff}")
    print(
        f"follower floor: {result.bounds['p2_floor']}  "
        f"cap: {result.bounds['p2_cap']}"
    )
    print(
        f"share bounds: P1 keeps >= {_frac(result.bounds['lower'])} of n, "
        f"<= {_frac(result.bounds['upper'])} of n"
    )
    bad = [name for name, ok in checks.items() if not ok]
    if args.json:
        payload = json.dumps(result.to_json_dict(), indent=2)
        if args.json == "-":
            print(payload)
        else:
            with open(args.json, "w") as fh:
                fh.write(payload + "\n")
    if bad:
        for name in bad:
            print(f"FAIL {name}", file=sys.stderr)
        return EXIT_FAIL
    print("bounds: ok")
    return EXIT_OK


def cmd_net(args) -> int:
    epsilon = _parse_epsilon(args.epsilon)
    users = _load_users(args.users, args.allow_degenerate)
    if users.dimension != args.dim:
        raise UsageError(
            f"--dim {args.dim} but {args.users} holds "
            f"{users.dimension}-coordinate points"
        )
    name = "disknet" if args.dim == 2 else "ballnet"
    result = play(users, 1, name, epsilon=epsilon, instance_id=args.users)
    strat = result.strategy
    per_cluster = 7 if args.dim == 2 else 21
    size_cap = per_cluster * math.floor(1 / epsilon)

    print(f"n: {result.n}  dimension: {args.dim}")
    print(
        f"epsilon: {epsilon.numerator}/{epsilon.denominator}  "
        f"net size: {strat.k} (cap {size_cap})"
    )
    for p in strat.placements.facilities:
        print("  place " + ",".join(repr(c) for c in p.coords))
    print(f"p1_payoff: {result.p1_payoff}  p2_payoff: {result.p2_payoff}")
    cap = result.bounds["p2_cap"]
    print(
        f"follower cap: {cap} (floor of "
        f"{strat.guarantee.numerator}/{strat.guarantee.denominator} of n)"
    )
    ok = strat.k <= size_cap and result.p2_payoff <= cap
    if not ok:
        print("FAIL net verification", file=sys.stderr)
        return EXIT_FAIL
    print("net: ok")
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = _resolve_seed(args.seed)
    failures = run_suite(args.suite, trials=args.trials, seed=seed)
    for message in failures:
        print(f"FAIL {message}", file=sys.stderr)
    print(
        f"suite {args.suite}: {args.trials} trials per check, seed {seed}, "
        f"{len(failures)} failures"
    )
    return EXIT_FAIL if failures else EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service_api import create_app

    app = create_app(persist_dir=args.persist)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voronoi-game",
        description="Facility placement games against an exact follower.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_table = sub.add_parser("table", help="print the shrinking-fraction table")
    p_table.add_argument("--dim", type=int, choices=(2, 3), required=True)
    p_table.add_argument("--kmax", type=int, required=True)
    p_table.add_argument("--format", choices=("csv", "pretty"), default="pretty")
    p_table.set_defaults(func=cmd_table)

    p_play = sub.add_parser("play", help="run one game and check its bounds")
    src = p_play.add_mutually_exclusive_group(required=True)
    src.add_argument("--users", help="CSV file of points, one per row")
    src.add_argument(
        "--gen",
        help="generator spec distribution:n[:seed=S][:dim=D], "
        "e.g. uniform_square:30:seed=7",
    )
    p_play.add_argument("--k", type=int, required=True)
    p_play.add_argument(
        "--strategy", choices=tuple(STRATEGY_NAMES), required=True
    )
    p_play.add_argument("--epsilon", help='net parameter, "1/4" or 0.25')
    p_play.add_argument("--json", help="write the full result here ('-' = stdout)")
    p_play.add_argument("--allow-degenerate", action="store_true")
    p_play.set_defaults(func=cmd_play)

    p_net = sub.add_parser("net", help="build and verify a piercing net")
    p_net.add_argument("--dim", type=int, choices=(2, 3), required=True)
    p_net.add_argument("--epsilon", required=True)
    p_net.add_argument("--users", required=True)
    p_net.add_argument("--allow-degenerate", action="store_true")
    p_net.set_defaults(func=cmd_net)

    p_verify = sub.add_parser("verify", help="run randomized self-checks")
    p_verify.add_argument(
        "--suite", choices=("all", "bounds", "piercing", "oracle"), default="all"
    )
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--trials", type=int, default=25)
    p_verify.set_defaults(func=cmd_verify)

    p_serve = sub.add_parser("serve", help="serve the HTTP API")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument(
        "--persist", metavar="DIR", help="dump sessions to JSON files here"
    )
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, DimensionMismatchError, DegeneracyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (VerificationError, DegenerateStrategyError) as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
