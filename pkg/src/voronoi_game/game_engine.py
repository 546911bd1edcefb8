"""Episode orchestration: reproducible instances, full games, bound audits.

A game takes a user set, builds a leader placement with one of the strategy
constructors, computes the follower's exact best response, and records both
payoffs together with the inequalities they must satisfy.  All bound checks
compare integers against exact rationals; floats never decide a flag.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .best_response import (
    BestResponse,
    best_response,
    brute_force_best_response,
    halfcell_response,
)
from .epsilon_table import EpsilonTable, build_table
from .errors import VerificationError
from .geometry import Point, UserSet, payoff
from .p1_strategies import (
    Strategy,
    build_ball_net,
    build_disk_net,
    build_E_k,
    centerpoint_strategy,
)

DISTRIBUTIONS = ("uniform_square", "gaussian_clusters", "annulus", "grid_jitter")

# CLI-facing strategy names mapped to Strategy.kind tags.
STRATEGY_NAMES = {
    "centerpoint": "centerpoint",
    "eknet": "mustafa_ray",
    "disknet": "disk_net",
    "ballnet": "ball_net",
}


@dataclass(frozen=True)
class InstanceSpec:
    """Recipe for a reproducible user set.

    The same spec always yields the same points, bit for bit: coordinates are
    drawn on the integer grid [0, 1000)^d from a PCG64 stream seeded with
    ``seed`` and then jittered by at most 1e-6, which keeps every distance
    comparison far outside the degeneracy tolerance.
    """

    dimension: int
    n: int
    distribution: str
    seed: int

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.dimension}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(
                f"unknown distribution {self.distribution!r}; "
                f"choose from {', '.join(DISTRIBUTIONS)}"
            )

    @property
    def instance_id(self) -> str:
        return f"{self.distribution}-d{self.dimension}-n{self.n}-s{self.seed}"


_MAX_RETRIES = 1000


def generate_users(spec: InstanceSpec) -> UserSet:
    rng = np.random.default_rng(np.random.PCG64(spec.seed))
    # A lattice start is saturated with collinear triples and cocircular
    # quads, so it needs a macroscopic jitter to clear the determinant
    # thresholds; random starts only need tie-breaking.
    jitter = 0.5 if spec.distribution == "grid_jitter" else 1e-6
    for _ in range(_MAX_RETRIES):
        grid = _draw_grid(spec, rng)
        if grid is None:
            continue
        pts = grid + rng.uniform(-jitter, jitter, size=grid.shape)
        users = UserSet.from_coords(pts.tolist())
        if _position_ok(users):
            return users
    raise VerificationError(
        f"could not sample {spec.n} distinct points in general position "
        f"after {_MAX_RETRIES} attempts ({spec.instance_id})"
    )


def _draw_grid(spec: InstanceSpec, rng) -> np.ndarray | None:
    n, d = spec.n, spec.dimension
    if spec.distribution == "uniform_square":
        raw = rng.integers(0, 1000, size=(4 * n, d))
    elif spec.distribution == "gaussian_clusters":
        centers = rng.integers(200, 800, size=(3, d))
        which = rng.integers(0, 3, size=4 * n)
        raw = np.rint(centers[which] + rng.normal(0, 80, size=(4 * n, d))).astype(int)
        raw = np.clip(raw, 0, 999)
    elif spec.distribution == "annulus":
        r = rng.uniform(250, 450, size=4 * n)
        if d == 2:
            a = rng.uniform(0, 2 * np.pi, size=4 * n)
            raw = np.column_stack([r * np.cos(a), r * np.sin(a)])
        else:
            v = rng.normal(size=(4 * n, 3))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            raw = r[:, None] * v
        raw = np.rint(raw + 500).astype(int)
    else:  # grid_jitter
        side = math.ceil(n ** (1 / d))
        axes = np.linspace(50, 950, side).astype(int)
        mesh = np.stack(np.meshgrid(*([axes] * d)), axis=-1).reshape(-1, d)
        raw = mesh[rng.permutation(len(mesh))]
    uniq = np.unique(raw, axis=0)
    if len(uniq) < n:
        return None
    return uniq[rng.permutation(len(uniq))[:n]].astype(float)


def _position_ok(users: UserSet) -> bool:
    # The full no-cocircular check is O(n^4); past desk scale we fall back to
    # the collinearity part and let the tolerance band catch the rest.
    if len(users) <= 60:
        return users.general_position()
    if users.dimension == 2:
        from .geometry import _no_collinear_triple

        arr = users.as_array()
        scale = users.scale()
        return _no_collinear_triple(arr, 1e-9 * scale**2)
    return True


@dataclass(frozen=True)
class GameResult:
    instance_id: str
    users: UserSet
    strategy: Strategy
    response: BestResponse
    halfcell_payoff: int
    bounds: dict

    @property
    def n(self) -> int:
        return len(self.users)

    @property
    def k(self) -> int:
        return self.strategy.k

    @property
    def p2_payoff(self) -> int:
        return self.response.payoff

    @property
    def p1_payoff(self) -> int:
        return self.n - self.response.payoff

    def to_json_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "n": self.n,
            "k": self.k,
            "dimension": self.users.dimension,
            "strategy": self.strategy.to_json_dict(),
            "users": [list(p.coords) for p in self.users.users],
            "response": {
                "point": list(self.response.location.coords),
                "payoff": self.response.payoff,
                "served": sorted(self.response.served),
                "method": self.response.method,
            },
            "halfcell_payoff": self.halfcell_payoff,
            "p1_payoff": self.p1_payoff,
            "p2_payoff": self.p2_payoff,
            "bounds": self.bounds,
        }


def _frac_dict(f: Fraction) -> dict:
    return {"num": f.numerator, "den": f.denominator}


def _make_bounds(n: int, k: int, guarantee: Fraction, p2: int) -> dict:
    """P1 keeps at least (1 - guarantee) n; the follower always reaches
    ceil(n / 2k), so P1 never exceeds (2k-1)/(2k) n.  Flags are exact."""
    lower = 1 - guarantee
    upper = Fraction(2 * k - 1, 2 * k)
    p2_cap = math.floor(guarantee * n)
    p2_floor = math.ceil(Fraction(n, 2 * k))
    p1 = n - p2
    return {
        "lower": _frac_dict(lower),
        "upper": _frac_dict(upper),
        "p2_cap": p2_cap,
        "p2_floor": p2_floor,
        "satisfied": {"lower": p2 <= p2_cap, "upper": p2 >= p2_floor},
    }


def play(
    users: UserSet,
    k: int,
    strategy_name: str,
    epsilon=None,
    table: EpsilonTable | None = None,
    instance_id: str = "adhoc",
) -> GameResult:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    strategy = _build_strategy(users, k, strategy_name, epsilon, table)
    if strategy.k == 0:
        raise ValueError(
            "the chosen parameters produced an empty placement; "
            "lower epsilon or raise n"
        )
    response = best_response(users, strategy.placements)
    half = halfcell_response(users, strategy.placements)
    bounds = _make_bounds(len(users), strategy.k, strategy.guarantee, response.payoff)
    return GameResult(instance_id, users, strategy, response, half.payoff, bounds)


def _build_strategy(users, k, strategy_name, epsilon, table) -> Strategy:
    kind = STRATEGY_NAMES.get(strategy_name, strategy_name)
    if kind == "centerpoint":
        if k != 1:
            raise ValueError("the centerpoint strategy plays exactly one facility")
        return centerpoint_strategy(users)
    if kind == "mustafa_ray":
        return build_E_k(users, k, table)
    if kind == "disk_net":
        if epsilon is None:
            raise ValueError("disknet needs --epsilon")
        return build_disk_net(users, epsilon)
    if kind == "ball_net":
        if epsilon is None:
            raise ValueError("ballnet needs --epsilon")
        return build_ball_net(users, epsilon)
    raise ValueError(f"unknown strategy {strategy_name!r}")


def verify_bounds(result: GameResult, table: EpsilonTable | None = None) -> dict:
    """Recompute every inequality for a finished game.  Any False entry is a
    hard failure for the caller, not a warning."""
    n, k, p2 = result.n, result.k, result.p2_payoff
    checks = {
        "payoffs_partition_users": result.p1_payoff + p2 == n,
        "p2_equals_best_response": p2 == result.response.payoff,
        "p2_at_most_guarantee": p2 <= math.floor(result.strategy.guarantee * n),
        "p2_at_least_halfcell_floor": result.halfcell_payoff
        >= math.ceil(Fraction(n, 2 * k)),
        "halfcell_not_above_best": result.halfcell_payoff <= p2,
    }
    if table is not None and result.strategy.kind == "mustafa_ray":
        checks["guarantee_matches_table"] = (
            result.strategy.guarantee == table.value(k)
        )
    recount = payoff(result.users, result.strategy.placements,
                     result.response.as_facility_set())
    checks["response_recount_stable"] = recount.p2_count == p2
    return checks


def run_batch(
    specs: list[InstanceSpec],
    k: int,
    strategy_name: str,
    epsilon=None,
    jsonl_path: str | None = None,
    summary_path: str | None = None,
) -> list[GameResult]:
    table = build_table(2, max(k, 10))
    results = []
    for spec in specs:
        users = generate_users(spec)
        results.append(
            play(users, k, strategy_name, epsilon, table, spec.instance_id)
        )
    if jsonl_path:
        with open(jsonl_path, "w") as fh:
            for r in results:
                fh.write(json.dumps(r.to_json_dict()) + "\n")
    if summary_path:
        with open(summary_path, "w", newline="") as fh:
            fh.write(summary_csv(results))
    return results


def summary_csv(results: list[GameResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["k", "strategy", "n", "p1_payoff", "lower", "upper"])
    for r in results:
        lo, up = r.bounds["lower"], r.bounds["upper"]
        writer.writerow(
            [
                r.k,
                r.strategy.kind,
                r.n,
                r.p1_payoff,
                f"{lo['num']}/{lo['den']}",
                f"{up['num']}/{up['den']}",
            ]
        )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Verification suites (shared by the CLI `verify` subcommand and tests)


def suite_oracle(trials: int, seed: int) -> list[str]:
    """Sweep vs exhaustive-candidate payoff equality on small instances."""
    failures = []
    rng = np.random.default_rng(seed)
    for t in range(trials):
        spec = InstanceSpec(
            2, int(rng.integers(5, 26)), "uniform_square", int(rng.integers(2**32))
        )
        users = generate_users(spec)
        f1 = _random_facilities(rng, int(rng.integers(1, 5)))
        fast = best_response(users, f1)
        slow = brute_force_best_response(users, f1)
        if fast.payoff != slow.payoff:
            failures.append(
                f"{spec.instance_id}: sweep {fast.payoff} != oracle {slow.payoff}"
            )
    return failures


def suite_bounds(trials: int, seed: int) -> list[str]:
    """Halfcell floor and strategy guarantee on random games."""
    failures = []
    rng = np.random.default_rng(seed)
    table = build_table(2, 10)
    for t in range(trials):
        k = int(rng.integers(1, 6))
        n = int(rng.integers(max(10, 2 * k), 61))
        spec = InstanceSpec(
            2, n, DISTRIBUTIONS[int(rng.integers(len(DISTRIBUTIONS)))],
            int(rng.integers(2**32)),
        )
        users = generate_users(spec)
        name = "centerpoint" if k == 1 and t % 2 == 0 else "eknet"
        result = play(users, k, name, table=table, instance_id=spec.instance_id)
        for check, ok in verify_bounds(result, table).items():
            if not ok:
                failures.append(f"{spec.instance_id} k={k} {name}: {check}")
    return failures


def suite_piercing(trials: int, seed: int) -> list[str]:
    """Random-geometry piercing checks for both cluster shapes."""
    from .geometry import Disk
    from .p1_strategies import (
        cone_cover_directions,
        pierce_ball_cluster,
        pierce_disk_cluster,
    )

    failures = []
    rng = np.random.default_rng(seed)
    cones = cone_cover_directions()
    for t in range(trials):
        r = float(rng.uniform(0.1, 5.0))
        if t % 2 == 0:
            c = Point((float(rng.uniform(-10, 10)), float(rng.uniform(-10, 10))))
            cluster = pierce_disk_cluster(Disk(c, r), anchor=float(rng.uniform(0, 7)))
            ang = float(rng.uniform(0, 2 * np.pi))
            direction = np.array([math.cos(ang), math.sin(ang)])
        else:
            c = Point(tuple(rng.uniform(-10, 10, size=3)))
            cluster = pierce_ball_cluster(Disk(c, r), cones)
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
        radius = float(rng.uniform(r, 4 * r))
        dist = float(rng.uniform(0, radius + r))
        center = Point(tuple(np.array(c.coords) + dist * direction))
        probe = Disk(center, radius)
        if not any(probe.contains(q) for q in cluster):
            failures.append(
                f"trial {t}: disk r={radius:.3f} at {center.coords} escaped the cluster"
            )
    return failures


def run_suite(name: str, trials: int, seed: int) -> list[str]:
    suites = {
        "oracle": suite_oracle,
        "bounds": suite_bounds,
        "piercing": suite_piercing,
    }
    if name == "all":
        failures = []
        for key, fn in suites.items():
            failures.extend(f"[{key}] {msg}" for msg in fn(trials, seed))
        return failures
    if name not in suites:
        raise ValueError(f"unknown suite {name!r}")
    return suites[name](trials, seed)


def _random_facilities(rng, k: int):
    from .geometry import FacilitySet

    pts = rng.integers(0, 1000, size=(k, 2)).astype(float)
    pts = np.unique(pts, axis=0)
    pts = pts + rng.uniform(-1e-6, 1e-6, size=pts.shape)
    return FacilitySet([Point(tuple(map(float, row))) for row in pts], "P1")
