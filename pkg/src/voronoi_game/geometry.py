"""Planar and spatial primitives for the one-round Voronoi game.

Users and facilities are points in 2 or 3 dimensions.  A new facility serves
a user when it is strictly closer than every incumbent facility; exact ties
always stay with the incumbent.  Comparisons that land within ``TOLERANCE``
of a decision boundary (without being exact ties) raise
:class:`~voronoi_game.errors.DegeneracyError` instead of guessing, which is
why callers are encouraged to keep inputs on an integer grid where squared
distances compare exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import DegeneracyError, DimensionMismatchError, VerificationError

# Absolute tolerance for decision-boundary comparisons (squared distances,
# half-plane offsets).  See the module docstring for the raising policy.
TOLERANCE = 1e-9


@dataclass(frozen=True)
class Point:
    """An immutable point in 2 or 3 dimensions."""

    coords: tuple[float, ...]

    def __post_init__(self):
        if len(self.coords) not in (2, 3):
            raise DimensionMismatchError(
                f"points must be 2- or 3-dimensional, got {len(self.coords)}"
            )
        if not all(math.isfinite(c) for c in self.coords):
            raise ValueError(f"non-finite coordinate in {self.coords}")
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))

    @property
    def dimension(self) -> int:
        return len(self.coords)

    @property
    def x(self) -> float:
        return self.coords[0]

    @property
    def y(self) -> float:
        return self.coords[1]

    @property
    def z(self) -> float:
        return self.coords[2]

    def __iter__(self):
        return iter(self.coords)

    @staticmethod
    def of(*coords: float) -> "Point":
        return Point(tuple(coords))


def as_array(points: Sequence[Point]) -> np.ndarray:
    """Stack points into an (n, d) float array."""
    if not points:
        return np.empty((0, 2))
    return np.array([p.coords for p in points], dtype=float)


def squared_distance(p: Point, q: Point) -> float:
    if p.dimension != q.dimension:
        raise DimensionMismatchError(
            f"cannot compare a {p.dimension}-d point with a {q.dimension}-d point"
        )
    return sum((a - b) ** 2 for a, b in zip(p.coords, q.coords))


def distance(p: Point, q: Point) -> float:
    return math.sqrt(squared_distance(p, q))


def _require_same_dimension(points: Iterable[Point], dimension: int, what: str):
    for p in points:
        if p.dimension != dimension:
            raise DimensionMismatchError(
                f"{what} mixes {dimension}-d and {p.dimension}-d points"
            )


@dataclass
class UserSet:
    """The demand set of the game: finite, pairwise distinct points.

    ``general_position()`` verifies that no d+1 points share a hyperplane and
    no d+2 points share a sphere (within tolerance).  The check is O(n^4) so
    it runs lazily and the verdict is cached.
    """

    users: list[Point]
    dimension: int
    _gp_cache: bool | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.users:
            raise ValueError("a user set needs at least one user")
        _require_same_dimension(self.users, self.dimension, "user set")
        seen = set()
        for p in self.users:
            if p.coords in seen:
                raise ValueError(f"duplicate user at {p.coords}")
            seen.add(p.coords)

    def __len__(self) -> int:
        return len(self.users)

    @staticmethod
    def from_points(points: Sequence[Point]) -> "UserSet":
        if not points:
            raise ValueError("a user set needs at least one user")
        return UserSet(list(points), points[0].dimension)

    @staticmethod
    def from_coords(rows: Sequence[Sequence[float]]) -> "UserSet":
        return UserSet.from_points([Point(tuple(r)) for r in rows])

    def as_array(self) -> np.ndarray:
        return as_array(self.users)

    def scale(self) -> float:
        """Diagonal of the bounding box, used to normalise tolerances."""
        arr = self.as_array()
        span = arr.max(axis=0) - arr.min(axis=0)
        return float(np.linalg.norm(span)) or 1.0

    def general_position(self, tol: float = TOLERANCE) -> bool:
        if self._gp_cache is None:
            self._gp_cache = _general_position(self.as_array(), tol)
        return self._gp_cache

    def save_csv(self, path: str):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for p in self.users:
                writer.writerow([repr(c) for c in p.coords])

    @staticmethod
    def load_csv(path: str) -> "UserSet":
        rows = []
        with open(path, newline="") as fh:
            for record in csv.reader(fh):
                if not record:
                    continue
                rows.append([float(v) for v in record])
        if not rows:
            raise ValueError(f"no points found in {path}")
        return UserSet.from_coords(rows)


def _general_position(arr: np.ndarray, tol: float) -> bool:
    n, d = arr.shape
    scale = float(np.linalg.norm(arr.max(axis=0) - arr.min(axis=0))) or 1.0
    if d == 2:
        return _no_collinear_triple(arr, tol * scale**2) and _no_cocircular_quad(
            arr, tol, scale
        )
    # d == 3: no four points coplanar, no five points cospherical.
    return _no_coplanar_quad(arr, tol, scale) and _no_cospherical_quint(arr, tol, scale)


def _no_collinear_triple(arr: np.ndarray, tol: float) -> bool:
    n = len(arr)
    if n < 3:
        return True
    idx = np.array(list(combinations(range(n), 3)))
    a, b, c = arr[idx[:, 0]], arr[idx[:, 1]], arr[idx[:, 2]]
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )
    return bool(np.all(np.abs(cross) > tol))


def _no_cocircular_quad(arr: np.ndarray, tol: float, scale: float) -> bool:
    n = len(arr)
    if n < 4:
        return True
    # In-circle determinant, evaluated in chunks to bound memory.
    for chunk in _chunked_combinations(n, 4, 200_000):
        p = arr[chunk]  # (m, 4, 2)
        rel = p[:, 1:, :] - p[:, :1, :]  # (m, 3, 2)
        sq = (rel**2).sum(axis=2)  # (m, 3)
        mat = np.concatenate([rel, sq[:, :, None]], axis=2)  # (m, 3, 3)
        det = np.linalg.det(mat)
        if np.any(np.abs(det) <= tol * scale**4):
            return False
    return True


def _no_coplanar_quad(arr: np.ndarray, tol: float, scale: float) -> bool:
    n = len(arr)
    if n < 4:
        return True
    for chunk in _chunked_combinations(n, 4, 200_000):
        p = arr[chunk]
        rel = p[:, 1:, :] - p[:, :1, :]  # (m, 3, 3)
        det = np.linalg.det(rel)
        if np.any(np.abs(det) <= tol * scale**3):
            return False
    return True


def _no_cospherical_quint(arr: np.ndarray, tol: float, scale: float) -> bool:
    n = len(arr)
    if n < 5:
        return True
    for chunk in _chunked_combinations(n, 5, 100_000):
        p = arr[chunk]
        rel = p[:, 1:, :] - p[:, :1, :]  # (m, 4, 3)
        sq = (rel**2).sum(axis=2)
        mat = np.concatenate([rel, sq[:, :, None]], axis=2)  # (m, 4, 4)
        det = np.linalg.det(mat)
        if np.any(np.abs(det) <= tol * scale**5):
            return False
    return True


def _chunked_combinations(n: int, r: int, chunk: int):
    buf = []
    for combo in combinations(range(n), r):
        buf.append(combo)
        if len(buf) >= chunk:
            yield np.array(buf)
            buf = []
    if buf:
        yield np.array(buf)


@dataclass
class FacilitySet:
    """Facilities owned by one player.  Points are pairwise distinct."""

    facilities: list[Point]
    owner: str  # "P1" or "P2"

    def __post_init__(self):
        if self.owner not in ("P1", "P2"):
            raise ValueError(f"owner must be 'P1' or 'P2', got {self.owner!r}")
        if self.facilities:
            _require_same_dimension(
                self.facilities, self.facilities[0].dimension, "facility set"
            )
        seen = set()
        for p in self.facilities:
            if p.coords in seen:
                raise ValueError(f"duplicate facility at {p.coords}")
            seen.add(p.coords)

    def __len__(self) -> int:
        return len(self.facilities)

    def as_array(self) -> np.ndarray:
        return as_array(self.facilities)

    def disjoint_from(self, other: "FacilitySet") -> bool:
        mine = {p.coords for p in self.facilities}
        return not any(p.coords in mine for p in other.facilities)


@dataclass(frozen=True)
class Disk:
    """A closed disk (2d) or ball (3d).  Radius zero is allowed; such a disk
    has empty strict interior and serves nobody."""

    center: Point
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError(f"negative radius {self.radius}")

    @property
    def dimension(self) -> int:
        return self.center.dimension

    def contains(self, p: Point, tol: float = 1e-12) -> bool:
        """Closed containment with a relative epsilon so that points that sit
        on the boundary by construction still count."""
        return squared_distance(self.center, p) <= self.radius**2 * (1 + tol) + tol

    def strictly_contains(self, p: Point, tol: float = TOLERANCE) -> bool:
        d2 = squared_distance(self.center, p)
        r2 = self.radius**2
        if d2 != r2 and abs(d2 - r2) <= tol:
            raise DegeneracyError(
                f"point {p.coords} is within tolerance of the boundary of "
                f"disk(center={self.center.coords}, r={self.radius})"
            )
        return d2 < r2


@dataclass(frozen=True)
class PayoffResult:
    """Outcome of a payoff evaluation.

    ``p2_count`` users are strictly closer to some follower facility than to
    every leader facility; everyone else (ties included) stays with the
    leader.
    """

    p2_count: int
    p1_count: int
    served_by_p2: frozenset[int]


def payoff(users: UserSet, f1: FacilitySet, f2: FacilitySet) -> PayoffResult:
    """Count users won by the follower placement ``f2`` against leader ``f1``.

    Raises DegeneracyError when some user's leader/follower distances differ
    by less than the tolerance without being exactly equal.
    """
    if not f1.facilities:
        raise ValueError("leader facility set must be nonempty")
    _require_same_dimension(f1.facilities, users.dimension, "payoff")
    _require_same_dimension(f2.facilities, users.dimension, "payoff")
    if not f1.disjoint_from(f2):
        raise ValueError("the two facility sets must be disjoint")
    arr = users.as_array()
    d1 = _min_sq_dists(arr, f1.as_array())
    if not f2.facilities:
        return PayoffResult(0, len(users), frozenset())
    d2 = _min_sq_dists(arr, f2.as_array())
    diff = d1 - d2
    near = (diff != 0.0) & (np.abs(diff) <= TOLERANCE)
    if np.any(near):
        culprit = int(np.argmax(near))
        raise DegeneracyError(
            f"user {culprit} is within tolerance of the service boundary "
            f"(|d1^2 - d2^2| = {abs(diff[culprit]):.3e})"
        )
    served = np.nonzero(diff > 0.0)[0]
    return PayoffResult(len(served), len(users) - len(served), frozenset(int(i) for i in served))


def _min_sq_dists(points: np.ndarray, sites: np.ndarray) -> np.ndarray:
    deltas = points[:, None, :] - sites[None, :, :]
    return (deltas**2).sum(axis=2).min(axis=1)


# ---------------------------------------------------------------------------
# Tukey depth


def tukey_depth(x: Point, users: UserSet) -> int:
    """Smallest number of users in a closed half-space containing ``x``.

    2d uses an exact direction sweep; 3d enumerates the direction-sphere
    arrangement vertices with symbolic perturbation into adjacent cells.
    """
    depth, _ = tukey_depth_with_witness(x, users)
    return depth


def tukey_depth_with_witness(x: Point, users: UserSet) -> tuple[int, np.ndarray]:
    """Like :func:`tukey_depth` but also returns a minimising direction
    (the inward normal of a half-space achieving the depth)."""
    if x.dimension != users.dimension:
        raise DimensionMismatchError("query point dimension differs from user set")
    rel = users.as_array() - np.array(x.coords)
    if users.dimension == 2:
        return _tukey_depth_2d(rel)
    return _tukey_depth_3d(rel)


def _tukey_depth_2d(rel: np.ndarray) -> tuple[int, np.ndarray]:
    norms = np.linalg.norm(rel, axis=1)
    at_x = int((norms <= 1e-300).sum())  # coincident points count everywhere
    w = rel[norms > 1e-300]
    if len(w) == 0:
        return at_x, np.array([1.0, 0.0])
    angles = np.arctan2(w[:, 1], w[:, 0])
    crit = np.concatenate([angles + np.pi / 2, angles - np.pi / 2]) % (2 * np.pi)
    crit = np.unique(crit)
    # Midpoints of consecutive critical angles sample every open cell of the
    # direction circle; the minimum over closed half-planes is attained there.
    mids = (crit + np.diff(np.concatenate([crit, [crit[0] + 2 * np.pi]])) / 2) % (
        2 * np.pi
    )
    normals = np.column_stack([np.cos(mids), np.sin(mids)])
    dots = w @ normals.T
    counts = (dots >= 0).sum(axis=0)
    best = int(np.argmin(counts))
    return int(counts[best]) + at_x, normals[best]


def _tukey_depth_3d(rel: np.ndarray) -> tuple[int, np.ndarray]:
    norms = np.linalg.norm(rel, axis=1)
    at_x = int((norms <= 1e-300).sum())
    w = rel[norms > 1e-300]
    m = len(w)
    scale = float(norms.max()) or 1.0
    if m == 0:
        return at_x, np.array([0.0, 0.0, 1.0])
    best_count = m
    best_normal = np.array([0.0, 0.0, 1.0])
    # Fallback directions handle collinear/few-point inputs.
    candidates = [v / np.linalg.norm(v) for v in w] + [
        np.array([1.0, 0.0, 0.0]),
        np.array([0.0, 1.0, 0.0]),
        np.array([0.0, 0.0, 1.0]),
    ]
    for v in candidates:
        for sgn in (1.0, -1.0):
            cnt = int((w @ (sgn * v) >= -1e-12 * scale).sum())
            if cnt < best_count:
                best_count, best_normal = cnt, sgn * v
    tol = 1e-12 * scale**2
    for i, j in combinations(range(m), 2):
        v0 = np.cross(w[i], w[j])
        nv = np.linalg.norm(v0)
        if nv <= 1e-12 * scale**2:
            continue
        v0 = v0 / nv
        primary = w @ v0
        # Dual basis in span(w_i, w_j): directions whose dot with w_i / w_j
        # we can set independently, for the four cells around the vertex v0.
        gram = np.array([[w[i] @ w[i], w[i] @ w[j]], [w[j] @ w[i], w[j] @ w[j]]])
        try:
            inv = np.linalg.inv(gram)
        except np.linalg.LinAlgError:
            continue
        basis = inv @ np.vstack([w[i], w[j]])  # rows: dual vectors
        for alpha in (1.0, -1.0):
            for beta in (1.0, -1.0):
                tangent = alpha * basis[0] + beta * basis[1]
                secondary = w @ tangent
                signs = np.where(np.abs(primary) > 1e-9 * scale, primary, secondary)
                cnt = int((signs >= -tol).sum())
                if cnt < best_count:
                    best_count, best_normal = cnt, v0
    return best_count + at_x, best_normal


def projection_quantile(arr: np.ndarray, normal: np.ndarray, m: int) -> float:
    """m-th largest projection of the rows of ``arr`` onto ``normal``."""
    proj = arr @ normal
    return float(np.partition(proj, len(proj) - m)[len(proj) - m])


# ---------------------------------------------------------------------------
# Smallest enclosing disk of at most d+1 points


def min_enclosing_disk_of_subset(points: Sequence[Point]) -> Disk:
    """Smallest disk/ball containing 1..d+1 given points."""
    if not points:
        raise ValueError("need at least one point")
    d = points[0].dimension
    _require_same_dimension(points, d, "enclosing disk")
    if len(points) > d + 1:
        raise ValueError(f"at most {d + 1} points supported in {d}d, got {len(points)}")
    if len(points) == 1:
        return Disk(points[0], 0.0)
    best: Disk | None = None
    # Diameter candidates.
    for a, b in combinations(points, 2):
        center = Point(tuple((ca + cb) / 2 for ca, cb in zip(a.coords, b.coords)))
        radius = distance(a, b) / 2
        disk = Disk(center, radius)
        if all(disk.contains(p) for p in points) and (
            best is None or disk.radius < best.radius
        ):
            best = disk
    if best is not None:
        return best
    # Circumscribed candidates through 3 (and in 3d also 4) points.
    for r in (3, 4):
        if r > len(points):
            break
        for subset in combinations(points, r):
            circ = _circumsphere(subset)
            if circ is None:
                continue
            if all(circ.contains(p) for p in points) and (
                best is None or circ.radius < best.radius
            ):
                best = circ
    if best is None:
        raise VerificationError("no enclosing disk found (degenerate input?)")
    return best


def _circumsphere(points: Sequence[Point]) -> Disk | None:
    """Center equidistant from the given points, constrained to their affine
    hull.  Returns None for affinely dependent inputs."""
    arr = as_array(points)
    base = arr[0]
    rel = arr[1:] - base
    rhs = (rel**2).sum(axis=1) / 2
    # Solve inside the affine hull: center = base + rel.T @ lam with
    # rel @ rel.T @ lam = rhs.
    gram = rel @ rel.T
    try:
        lam = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        return None
    center = base + rel.T @ lam
    radius = float(np.linalg.norm(center - base))
    return Disk(Point(tuple(center)), radius)
