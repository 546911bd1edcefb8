"""Follower best response: where one extra facility steals the most users.

Each user u defines a disk centered at u whose radius is the distance to the
nearest leader facility; the follower serves u exactly when it lands strictly
inside that disk.  The optimal placement is therefore a deepest point in the
arrangement of these disks.  In the plane we find it exactly with a circular
sweep over every disk boundary; in space we fall back to candidate
enumeration.  Returned payoffs are always re-counted at the witness point, so
they are valid regardless of how the point was found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, DimensionMismatchError, VerificationError
from .geometry import (
    Disk,
    FacilitySet,
    Point,
    UserSet,
    as_array,
    payoff,
    squared_distance,
)

_WITNESS_NUDGE = 1e-7  # inward offset relative to the local disk radius


@dataclass(frozen=True)
class BestResponse:
    """A follower placement together with its exactly recounted payoff."""

    location: Point
    payoff: int
    served: frozenset[int]
    method: str

    def as_facility_set(self) -> FacilitySet:
        return FacilitySet([self.location], "P2")


def nearest_facility_disks(users: UserSet, f1: FacilitySet) -> list[Disk]:
    """One disk per user, radius = distance to the nearest leader facility.

    A user sitting exactly on a facility gets a radius-zero disk and can
    never be stolen.
    """
    if not f1.facilities:
        raise ValueError("leader facility set must be nonempty")
    if f1.facilities[0].dimension != users.dimension:
        raise DimensionMismatchError("facility dimension differs from user set")
    arr = users.as_array()
    sites = f1.as_array()
    d2 = ((arr[:, None, :] - sites[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    return [
        Disk(u, math.sqrt(float(r2))) for u, r2 in zip(users.users, d2)
    ]


def _count_inside(point: np.ndarray, centers: np.ndarray, radii2: np.ndarray,
                  tol: float) -> np.ndarray:
    """Boolean mask of disks whose open interior contains ``point``.

    Raises DegeneracyError if the point sits in the tolerance band of any
    boundary without being exactly on it.
    """
    d2 = ((centers - point) ** 2).sum(axis=1)
    diff = radii2 - d2
    near = (diff != 0.0) & (np.abs(diff) <= tol)
    if np.any(near):
        raise DegeneracyError("candidate point within tolerance of a disk boundary")
    return diff > 0.0


def max_depth_point(
    disks: list[Disk], forbidden: list[Point] | None = None
) -> tuple[Point, int, list[int]]:
    """Deepest point of an arrangement of open disks, avoiding ``forbidden``.

    Returns (point, depth, indices of disks containing the point).  Depth 0
    with an arbitrary allowed point if every disk has empty interior.
    """
    if not disks:
        raise ValueError("need at least one disk")
    dim = disks[0].dimension
    for d in disks:
        if d.dimension != dim:
            raise DimensionMismatchError("disks of mixed dimension")
    forbidden = forbidden or []
    if dim == 2:
        return _max_depth_sweep_2d(disks, forbidden)
    return _max_depth_candidates_3d(disks, forbidden)


def _fallback_point(centers: np.ndarray, forbidden_set: set[tuple]) -> Point:
    base = centers.mean(axis=0)
    step = 0.0
    scale = float(np.abs(centers).max()) + 1.0
    while tuple(float(c) for c in base) in forbidden_set:
        step += 1.0
        base = base + scale * step * 1e-3
    return Point(tuple(float(c) for c in base))


def _max_depth_sweep_2d(disks, forbidden):
    centers = as_array([d.center for d in disks])
    radii = np.array([d.radius for d in disks])
    radii2 = radii**2
    n = len(disks)
    scale = float(radii.max() + np.abs(centers).max()) or 1.0
    tol = 1e-9
    forbidden_set = {p.coords for p in forbidden}
    active = [i for i in range(n) if radii[i] > 0]
    if not active:
        return _fallback_point(centers, forbidden_set), 0, []

    best = None  # (depth, circle idx, point, inside_idx)
    for i in active:
        ci, ri = centers[i], radii[i]
        base = 0
        events = []  # (angle, +1/-1)
        for j in active:
            if j == i:
                continue
            dvec = centers[j] - ci
            dist = float(np.hypot(dvec[0], dvec[1]))
            rj = radii[j]
            if dist >= ri + rj:  # no strict overlap with circle i
                continue
            if dist + ri < rj:  # circle i entirely inside disk j
                base += 1
                continue
            if dist + rj <= ri:  # disk j inside disk i, circle i outside it
                continue
            if dist < 1e-300:
                continue
            phi = math.atan2(dvec[1], dvec[0])
            cosw = (dist * dist + ri * ri - rj * rj) / (2 * dist * ri)
            w = math.acos(max(-1.0, min(1.0, cosw)))
            start = (phi - w) % (2 * math.pi)
            end = start + 2 * w
            if end <= 2 * math.pi:
                events.append((start, 1))
                events.append((end, -1))
            else:  # arc wraps past 0
                events.append((start, 1))
                events.append((2 * math.pi, -1))
                events.append((0.0, 1))
                events.append((end - 2 * math.pi, -1))
        if not events:
            cover_angles = [(0, 0.0)]
        else:
            events.sort()
            running = 0
            cover_angles = []  # (coverage, midpoint angle)
            for idx in range(len(events)):
                ang, delta = events[idx]
                running += delta
                nxt = events[idx + 1][0] if idx + 1 < len(events) else 2 * math.pi
                if nxt > ang:
                    cover_angles.append((running, (ang + nxt) / 2))
            cover_angles.append((0, (events[0][0] % (2 * math.pi)) / 2))
        # Near-concurrent circles can produce a phantom sliver whose coverage
        # estimate no point realises, so walk the intervals from the most
        # covered down and keep the best exact recount; stop as soon as the
        # estimate cannot beat a depth already confirmed.
        cover_angles.sort(key=lambda t: -t[0])
        for cover, theta in cover_angles:
            depth_est = base + cover + 1
            if best is not None and depth_est <= best[0]:
                break
            witness = _place_witness(
                ci, ri, theta, centers, radii2, tol, forbidden_set, depth_est
            )
            if witness is None:
                continue
            point, inside = witness
            depth = int(inside.sum())
            cand = (depth, i, point, np.nonzero(inside)[0])
            if best is None or cand[0] > best[0]:
                best = cand
    if best is None:
        return _fallback_point(centers, forbidden_set), 0, []
    _, _, point, inside_idx = best
    return Point(tuple(float(c) for c in point)), int(best[0]), [int(v) for v in inside_idx]


def _place_witness(ci, ri, theta, centers, radii2, tol, forbidden_set, target):
    """Nudge a boundary point inward and recount exactly.

    The offset shrinks until the recount reaches the estimated depth of the
    adjacent cell (a large offset can step across a second boundary when the
    cell is a thin sliver).  Falls back to the deepest admissible attempt.
    """
    direction = np.array([math.cos(theta), math.sin(theta)])
    delta = _WITNESS_NUDGE * ri
    fallback = None
    for attempt in range(24):
        point = ci + (ri - delta) * direction
        if (ri - delta) == ri:  # below float resolution, give up shrinking
            break
        if tuple(float(c) for c in point) in forbidden_set:
            delta = delta / 1.7
            continue
        try:
            inside = _count_inside(point, centers, radii2, tol)
        except DegeneracyError:
            delta = delta / 2.0
            continue
        if int(inside.sum()) >= target:
            return point, inside
        if fallback is None or int(inside.sum()) > int(fallback[1].sum()):
            fallback = (point, inside)
        delta = delta / 4.0
    return fallback


def _max_depth_candidates_3d(disks, forbidden):
    centers = as_array([d.center for d in disks])
    radii = np.array([d.radius for d in disks])
    radii2 = radii**2
    forbidden_set = {p.coords for p in forbidden}
    active = np.nonzero(radii > 0)[0]
    if len(active) == 0:
        return _fallback_point(centers, forbidden_set), 0, []
    cands = []
    # Ball centers, nudged off-center so a facility sitting on a boundary
    # through the center cannot create ties.
    for i in active:
        cands.append(centers[i] + radii[i] * 1e-5)
        cands.append(centers[i])
    # Pair intersection circles, sampled; points pulled slightly toward both
    # centers to land inside the lens.
    for ii, i in enumerate(active):
        for j in active[ii + 1:]:
            dvec = centers[j] - centers[i]
            dist = float(np.linalg.norm(dvec))
            if dist < 1e-12 or dist >= radii[i] + radii[j]:
                continue
            if dist + min(radii[i], radii[j]) < max(radii[i], radii[j]):
                continue
            axis = dvec / dist
            # Radical plane offset from center i.
            a = (dist**2 + radii2[i] - radii2[j]) / (2 * dist)
            h2 = radii2[i] - a**2
            if h2 <= 0:
                continue
            h = math.sqrt(h2)
            mid = centers[i] + a * axis
            u = _any_perp(axis)
            v = np.cross(axis, u)
            for t in range(8):
                ang = 2 * math.pi * t / 8
                p = mid + (h * 0.999) * (math.cos(ang) * u + math.sin(ang) * v)
                cands.append(p)
    arr = np.array(cands)
    d2 = ((arr[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    strict = d2 < radii2[None, :] - 1e-12
    counts = strict.sum(axis=1)
    order = np.argsort(-counts)
    for idx in order:
        p = arr[idx]
        if tuple(float(c) for c in p) in forbidden_set:
            continue
        try:
            inside = _count_inside(p, centers, radii2, 1e-9)
        except DegeneracyError:
            continue
        return (
            Point(tuple(float(c) for c in p)),
            int(inside.sum()),
            [int(v) for v in np.nonzero(inside)[0]],
        )
    return _fallback_point(centers, forbidden_set), 0, []


def _any_perp(v: np.ndarray) -> np.ndarray:
    w = np.array([1.0, 0.0, 0.0]) if abs(v[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    p = np.cross(v, w)
    return p / np.linalg.norm(p)


def best_response(users: UserSet, f1: FacilitySet) -> BestResponse:
    """Exact best follower placement against ``f1`` (2d); strongest found
    candidate in 3d.  The payoff is re-counted at the returned point."""
    disks = nearest_facility_disks(users, f1)
    point, depth, served = max_depth_point(disks, forbidden=list(f1.facilities))
    method = "arrangement_sweep" if users.dimension == 2 else "candidate_enumeration"
    result = BestResponse(point, depth, frozenset(served), method)
    check = payoff(users, f1, result.as_facility_set())
    if check.p2_count != result.payoff or check.served_by_p2 != result.served:
        raise VerificationError(
            f"payoff recount mismatch: sweep said {result.payoff}, payoff() said "
            f"{check.p2_count}"
        )
    return result


def brute_force_best_response(
    users: UserSet, f1: FacilitySet, grid: int = 200
) -> BestResponse:
    """Independent oracle built on a complete candidate set.

    The deepest cell of a disk arrangement is bounded from inside by every
    circle it touches, so either some boundary circle crosses nothing (a
    just-inside point at a fixed angle reaches the cell) or near some
    crossing vertex the cell fills the corner between the two inward
    normals (the vertex nudged along the normals' bisector reaches it).
    Candidates are those points plus disk centers and a safety grid; depth
    is counted exhaustively at each.  2d only.
    """
    if users.dimension != 2:
        raise DimensionMismatchError("the brute-force oracle is planar only")
    disks = nearest_facility_disks(users, f1)
    centers = as_array([d.center for d in disks])
    radii = np.array([d.radius for d in disks])
    radii2 = radii**2
    pts = [centers[i] for i in range(len(disks))]
    for i in range(len(disks)):
        if radii[i] > 0:
            pts.append(centers[i] + np.array([radii[i] * (1 - 1e-7), 0.0]))
    for i in range(len(disks)):
        for j in range(i + 1, len(disks)):
            if radii[i] == 0 or radii[j] == 0:
                continue
            dvec = centers[j] - centers[i]
            dist = float(np.hypot(dvec[0], dvec[1]))
            if dist < 1e-12 or dist >= radii[i] + radii[j]:
                continue
            if dist + min(radii[i], radii[j]) <= max(radii[i], radii[j]):
                continue
            a = (dist**2 + radii2[i] - radii2[j]) / (2 * dist)
            h2 = radii2[i] - a**2
            if h2 <= 0:
                continue
            h = math.sqrt(h2)
            axis = dvec / dist
            perp = np.array([-axis[1], axis[0]])
            mid = centers[i] + a * axis
            local = min(radii[i], radii[j])
            for sgn in (1.0, -1.0):
                vertex = mid + sgn * h * perp
                ni = centers[i] - vertex
                nj = centers[j] - vertex
                ni = ni / np.linalg.norm(ni)
                nj = nj / np.linalg.norm(nj)
                w = ni + nj
                wn = float(np.linalg.norm(w))
                if wn < 1e-12:
                    continue  # tangential contact, no corner to enter
                w = w / wn
                for scl in (1e-4, 1e-6):
                    pts.append(vertex + scl * local * w)
    lo = centers.min(axis=0) - radii.max()
    hi = centers.max(axis=0) + radii.max()
    xs = np.linspace(lo[0], hi[0], grid)
    ys = np.linspace(lo[1], hi[1], grid)
    gx, gy = np.meshgrid(xs, ys)
    grid_pts = np.column_stack([gx.ravel(), gy.ravel()])
    arr = np.vstack([np.array(pts), grid_pts])
    counts = np.zeros(len(arr), dtype=int)
    chunk = 200_000
    for start in range(0, len(arr), chunk):
        block = arr[start : start + chunk]
        d2 = ((block[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        counts[start : start + chunk] = (d2 < radii2[None, :]).sum(axis=1)
    forbidden_set = {p.coords for p in f1.facilities}
    order = np.argsort(-counts)
    for idx in order:
        p = Point((float(arr[idx][0]), float(arr[idx][1])))
        if p.coords in forbidden_set:
            continue
        try:
            inside = _count_inside(arr[idx], centers, radii2, 1e-9)
        except DegeneracyError:
            continue
        return BestResponse(
            p,
            int(inside.sum()),
            frozenset(int(v) for v in np.nonzero(inside)[0]),
            "brute_force",
        )
    raise VerificationError("oracle found no admissible candidate point")


# ---------------------------------------------------------------------------
# Half-cell response


def halfcell_response(users: UserSet, f1: FacilitySet) -> BestResponse:
    """Guaranteed follower placement: pick the leader cell with the most
    users, split it by a hyperplane through its facility, sit just off the
    richer side.  Serves at least half that cell."""
    disks = nearest_facility_disks(users, f1)
    arr = users.as_array()
    sites = f1.as_array()
    d2 = ((arr[:, None, :] - sites[None, :, :]) ** 2).sum(axis=2)
    owner = d2.argmin(axis=1)
    cell_sizes = np.bincount(owner, minlength=len(f1))
    j = int(cell_sizes.argmax())
    fj = sites[j]
    members = np.nonzero(owner == j)[0]
    rel = arr[members] - fj
    norms = np.linalg.norm(rel, axis=1)
    live = members[norms > 1e-300]  # users sitting on the facility are lost
    rel = arr[live] - fj

    if users.dimension == 2:
        normal = _split_normal_2d(rel)
    else:
        normal = _split_normal_3d(rel)
    side = rel @ normal
    if (side > 0).sum() < (side < 0).sum():
        normal = -normal
        side = -side
    target = set(int(u) for u in live[side > 0])

    # Step size: start from half the clearance to other facilities and to the
    # nearest user, then shrink until the recount covers the target.
    others = np.delete(sites, j, axis=0)
    clear = np.inf
    if len(others):
        clear = float(np.linalg.norm(others - fj, axis=1).min())
    if len(rel):
        clear = min(clear, float(np.linalg.norm(rel, axis=1).min()))
    if not math.isfinite(clear):
        clear = 1.0
    delta = clear / 2
    for attempt in range(64):
        cand = fj + delta * normal
        point = Point(tuple(float(c) for c in cand))
        try:
            result = payoff(users, f1, FacilitySet([point], "P2"))
        except (DegeneracyError, ValueError):
            delta /= 2
            continue
        if target.issubset(result.served_by_p2):
            return BestResponse(
                point, result.p2_count, result.served_by_p2, "halfcell"
            )
        delta /= 2
    raise DegeneracyError(
        "could not realise the half-cell placement after 64 shrink steps"
    )


def _split_normal_2d(rel: np.ndarray) -> np.ndarray:
    """Normal of a line through the facility avoiding every cell user."""
    if len(rel) == 0:
        return np.array([1.0, 0.0])
    ang = np.sort(np.arctan2(rel[:, 1], rel[:, 0]) % math.pi)
    gaps = np.diff(np.concatenate([ang, [ang[0] + math.pi]]))
    g = int(gaps.argmax())
    line_angle = ang[g] + gaps[g] / 2
    return np.array([-math.sin(line_angle), math.cos(line_angle)])


def _split_normal_3d(rel: np.ndarray) -> np.ndarray:
    if len(rel) == 0:
        return np.array([1.0, 0.0, 0.0])
    dirs = rel / np.linalg.norm(rel, axis=1)[:, None]
    rng = np.random.default_rng(7)
    best, best_gap = None, -1.0
    for _ in range(64):
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        gap = float(np.abs(dirs @ v).min())
        if gap > best_gap:
            best, best_gap = v, gap
    return best


# ---------------------------------------------------------------------------
# Sector witness


def sector_witness(
    users: UserSet, f1: FacilitySet, response: BestResponse
) -> Disk:
    """A disk around one served user certifying the response quality: it
    holds at least ceil(payoff/6) served users in 2d (ceil(payoff/20) in 3d)
    and no leader facility."""
    if response.payoff <= 0:
        raise ValueError("witness needs a response that serves at least one user")
    arr = users.as_array()
    fp = np.array(response.location.coords)
    served = sorted(response.served)
    rel = arr[served] - fp
    if users.dimension == 2:
        ang = np.arctan2(rel[:, 1], rel[:, 0]) % (2 * math.pi)
        sector = np.minimum((ang // (math.pi / 3)).astype(int), 5)
        nsec = 6
    else:
        from .p1_strategies import cone_cover_directions

        axes = cone_cover_directions().as_array()
        norms = np.linalg.norm(rel, axis=1)
        safe = np.where(norms > 1e-300, norms, 1.0)
        dirs = rel / safe[:, None]
        sector = (dirs @ axes.T).argmax(axis=1)
        nsec = 20
    counts = np.bincount(sector, minlength=nsec)
    best = int(counts.argmax())
    members = [u for u, s in zip(served, sector) if s == best]
    dists = {u: math.dist(users.users[u].coords, response.location.coords) for u in members}
    far = max(members, key=lambda u: dists[u])
    witness = Disk(users.users[far], dists[far])

    inside = [u for u in members if witness.contains(users.users[u])]
    need = -(-response.payoff // nsec)
    if len(inside) < need:
        raise VerificationError(
            f"sector witness holds {len(inside)} served users, needs {need}"
        )
    for f in f1.facilities:
        if squared_distance(witness.center, f) < witness.radius**2 * (1 - 1e-12):
            raise VerificationError("a leader facility intrudes into the witness disk")
    return witness
