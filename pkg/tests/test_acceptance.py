"""End-to-end acceptance gate.

One test per headline claim, ordered from the exact arithmetic tables down
to the randomized geometry suites.  Each test finishes by printing a single
PASS line with the measured quantities (visible with ``pytest -s`` or in the
captured-output section of a failure report); the pytest verdict itself is
the pass/fail signal per claim.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from voronoi_game.best_response import (
    best_response,
    brute_force_best_response,
    halfcell_response,
    sector_witness,
)
from voronoi_game.epsilon_table import (
    approx_factor,
    build_table,
    crossover_k,
    winning_threshold,
)
from voronoi_game.game_engine import InstanceSpec, generate_users
from voronoi_game.geometry import Disk, FacilitySet, Point, UserSet
from voronoi_game.p1_strategies import (
    build_ball_net,
    build_disk_net,
    build_E_k,
    candidate_enclosing_disks,
    centerpoint_strategy,
    cone_cover_directions,
    covering_radius,
    enclosed_counts,
    pierce_ball_cluster,
    pierce_disk_cluster,
)

PLANE_FACTORS = ["3/2", "7/4", "25/14", "217/120", "123/70", "187/108",
                 "2249/1302", "1115/656", "91/54", "9633/5740"]
SPACE_FACTORS = ["2", "39/16", "100/39", "161/64", "639/260", "473/192",
                 "1573/644", "5505/2272", "6494/2691", "22021/9230"]


def random_instance(rng, n, k, dim=2):
    pts = rng.integers(0, 1000, size=(n, dim)).astype(float)
    pts = np.unique(pts, axis=0)
    pts += rng.uniform(-1e-6, 1e-6, size=pts.shape)
    users = UserSet.from_coords([tuple(r) for r in pts])
    fac = rng.integers(0, 1000, size=(k, dim)).astype(float)
    fac += rng.uniform(-1e-6, 1e-6, size=fac.shape)
    f1 = FacilitySet([Point(tuple(map(float, r))) for r in fac], "P1")
    return users, f1


def test_01_plane_factor_table_exact():
    t0 = time.perf_counter()
    table = build_table(2, 10)
    got = [str(approx_factor(table, k)) for k in range(1, 11)]
    elapsed = time.perf_counter() - t0
    assert got == PLANE_FACTORS
    assert elapsed < 1.0
    print(f"\nPASS plane factor table: 10/10 exact in {elapsed:.3f}s")


def test_02_space_factor_table_exact():
    t0 = time.perf_counter()
    table = build_table(3, 10)
    got = [str(approx_factor(table, k)) for k in range(1, 11)]
    elapsed = time.perf_counter() - t0
    assert got == SPACE_FACTORS
    assert elapsed < 1.0
    print(f"\nPASS space factor table: 10/10 exact in {elapsed:.3f}s")


def test_03_crossovers_and_winning_thresholds():
    t0 = time.perf_counter()
    big2 = build_table(2, 1000)
    big3 = build_table(3, 1000)
    c2 = crossover_k(big2, 42)
    c3 = crossover_k(big3, 420)
    w2 = winning_threshold(big2)
    w3 = winning_threshold(big3)
    elapsed = time.perf_counter() - t0
    assert (c2, c3) == (136, 805)
    assert (w2, w3) == (5, 841)
    assert elapsed < 10.0
    print(f"\nPASS crossovers {c2}/{c3}, majority thresholds {w2}/{w3} "
          f"in {elapsed:.2f}s (kmax=1000)")


def test_04_follower_oracle_equivalence():
    rng = np.random.default_rng(20260825)
    trials = 220
    for trial in range(trials):
        users, f1 = random_instance(
            rng, int(rng.integers(5, 26)), int(rng.integers(1, 5))
        )
        fast = best_response(users, f1)
        slow = brute_force_best_response(users, f1)
        assert fast.payoff == slow.payoff, (
            f"trial {trial}: sweep {fast.payoff} != oracle {slow.payoff}"
        )
    print(f"\nPASS follower oracle equivalence: {trials}/{trials} exact")


def test_05_halfcell_floor():
    rng = np.random.default_rng(1813)
    trials = 200
    for trial in range(trials):
        k = int(rng.integers(1, 6))
        dim = 2 if trial % 4 else 3
        n = int(rng.integers(max(6, 2 * k), 41))
        users, f1 = random_instance(rng, n, k, dim)
        hc = halfcell_response(users, f1)
        floor = math.ceil(len(users) / (2 * k))
        assert hc.payoff >= floor, f"trial {trial}: {hc.payoff} < {floor}"
    print(f"\nPASS half-cell floor: {trials}/{trials} at ceil(n/2k)")


def test_06_centerpoint_cap():
    games = 0
    for dist in ("uniform_square", "gaussian_clusters", "annulus", "grid_jitter"):
        for n in (15, 30, 45, 60):
            for seed in (1, 2):
                users = generate_users(InstanceSpec(2, n, dist, seed))
                strat = centerpoint_strategy(users)
                br = best_response(users, strat.placements)
                cap = (2 * n) // 3
                assert br.payoff <= cap, (
                    f"{dist} n={n} s={seed}: {br.payoff} > {cap}"
                )
                games += 1
    print(f"\nPASS centerpoint cap: {games}/{games} games at floor(2n/3)")


def test_07_wedge_net_caps():
    table = build_table(2, 10)
    games = 0
    for k in (1, 2, 3, 5):
        for n in (50, 100):
            users = generate_users(InstanceSpec(2, n, "uniform_square", 40 + k))
            strat = build_E_k(users, k, table)
            assert strat.k == k
            br = best_response(users, strat.placements)
            cap = math.floor(table.value(k) * n)
            assert br.payoff <= cap, f"k={k} n={n}: {br.payoff} > {cap}"
            games += 1
    print(f"\nPASS recursive net cap: {games}/{games} games at floor(e_k n)")


def _piercing_oracle(users, strat, eps, inflate=1e-9):
    """Every candidate disk holding more than eps*n users must hold one of
    the placed facilities (radius inflated a hair for boundary cases)."""
    arr = users.as_array()
    n = len(users)
    centers, radii = candidate_enclosing_disks(users)
    counts = enclosed_counts(arr, centers, radii)
    heavy = np.nonzero(counts > float(eps) * n)[0]
    fac = np.array([p.coords for p in strat.placements.facilities])
    misses = 0
    for idx in heavy:
        d2 = ((fac - centers[idx]) ** 2).sum(axis=1)
        limit = radii[idx] ** 2 * (1 + inflate) + inflate
        if not (d2 <= limit).any():
            misses += 1
    return len(heavy), misses


def test_08_disk_net_suite():
    checked = 0
    for eps in (Fraction(1, 2), Fraction(1, 4), Fraction(1, 10)):
        for n, seed in ((40, 1), (60, 2)):
            users = generate_users(InstanceSpec(2, n, "uniform_square", seed))
            strat = build_disk_net(users, eps)
            assert strat.k <= 7 * math.floor(1 / eps), (
                f"eps={eps} n={n}: size {strat.k}"
            )
            heavy, misses = _piercing_oracle(users, strat, eps)
            assert misses == 0, f"eps={eps} n={n}: {misses}/{heavy} unpierced"
            br = best_response(users, strat.placements)
            cap = math.floor(min(6 * eps, Fraction(1)) * n)
            assert br.payoff <= cap, f"eps={eps} n={n}: {br.payoff} > {cap}"
            checked += 1
    print(f"\nPASS disk net suite: {checked} nets sized, pierced, and capped")


def test_09_sector_witness_everywhere():
    rng = np.random.default_rng(909)
    results = 0
    for trial in range(60):
        dim = 3 if trial % 3 == 2 else 2
        n = int(rng.integers(8, 36))
        k = int(rng.integers(1, 5))
        users, f1 = random_instance(rng, n, k, dim)
        br = best_response(users, f1)
        disk = sector_witness(users, f1, br)
        share = 6 if dim == 2 else 20
        inside = sum(1 for i in br.served if disk.contains(users.users[i]))
        assert inside >= math.ceil(br.payoff / share), f"trial {trial}"
        assert not any(disk.contains(f) for f in f1.facilities), f"trial {trial}"
        results += 1
    print(f"\nPASS sector witness: {results}/{results} responses certified")


def test_10_piercing_geometry():
    # planar ring: six outer points at sqrt(3) r exactly
    d = Disk(Point.of(3.0, -7.0), 2.0)
    ring = pierce_disk_cluster(d, anchor=1.1)[1:]
    for q in ring:
        dist = math.dist(q.coords, d.center.coords)
        assert abs(dist - math.sqrt(3) * d.radius) <= 1e-12 * dist

    # canonical cone along +z with point q = (0, 0, sqrt(3) r): every point
    # of the two extreme circles (cap boundary at radii r and 2r) lies at
    # distance exactly r from q
    r = 1.7
    q = np.array([0.0, 0.0, math.sqrt(3) * r])
    phis = np.linspace(0, 2 * math.pi, 720, endpoint=False)
    for scale in (1.0, 2.0):
        p = np.column_stack([
            scale * r * 0.5 * np.cos(phis),
            scale * r * 0.5 * np.sin(phis),
            np.full_like(phis, scale * r * math.sqrt(3) / 2),
        ])
        err = np.abs(np.linalg.norm(p - q, axis=1) - r).max()
        assert err <= 1e-9, f"circle at {scale}r: err {err}"

    # randomized piercing, ten thousand probes over both shapes
    rng = np.random.default_rng(1010)
    cones = cone_cover_directions()
    misses = 0
    for t in range(10_000):
        radius = float(rng.uniform(0.2, 4.0))
        if t % 2 == 0:
            target = Disk(Point.of(*rng.uniform(-5, 5, size=2)), radius)
            cluster = pierce_disk_cluster(target, anchor=float(rng.uniform(0, 7)))
            direction = rng.normal(size=2)
        else:
            target = Disk(Point(tuple(rng.uniform(-5, 5, size=3))), radius)
            cluster = pierce_ball_cluster(target, cones)
            direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        probe_r = float(rng.uniform(radius, 4 * radius))
        dist = float(rng.uniform(0, probe_r + radius))
        center = Point(tuple(np.array(target.center.coords) + dist * direction))
        if not any(Disk(center, probe_r).contains(p) for p in cluster):
            misses += 1
    assert misses == 0
    print("\nPASS piercing geometry: ring exact, cone circles exact, "
          "10000/10000 random probes pierced")


def test_11_cone_covering_certificate():
    cones = cone_cover_directions()
    assert cones.as_array().shape == (20, 3)
    radius = covering_radius(cones.as_array(), samples=1_000_000)
    assert radius <= math.pi / 6 + 1e-6
    print(f"\nPASS cone covering: 20 directions, radius {radius:.6f} "
          f"<= pi/6 + 1e-6 over 1e6 samples")


def test_12_ball_net_suite():
    checked = 0
    for eps in (Fraction(1, 2), Fraction(1, 4), Fraction(1, 10)):
        for n, seed in ((20, 3), (30, 4)):
            users = generate_users(InstanceSpec(3, n, "uniform_square", seed))
            strat = build_ball_net(users, eps)
            assert strat.k <= 21 * math.floor(1 / eps), (
                f"eps={eps} n={n}: size {strat.k}"
            )
            heavy, misses = _piercing_oracle(users, strat, eps)
            assert misses == 0, f"eps={eps} n={n}: {misses}/{heavy} unpierced"
            checked += 1
    print(f"\nPASS ball net suite: {checked} nets sized and pierced")
