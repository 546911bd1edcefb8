"""HTTP facade for the interactive planar board.

Sessions live in memory with TTL eviction.  Every payoff that leaves this
module is computed by the exact engine on the current session state; the
client is expected to render numbers verbatim and never do its own counting.

The board is two-dimensional.  Spatial nets stay on the command line.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from fractions import Fraction

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .best_response import best_response, halfcell_response, nearest_facility_disks
from .epsilon_table import approx_factor, build_table
from .errors import DegeneracyError, DimensionMismatchError
from .game_engine import (
    STRATEGY_NAMES,
    GameResult,
    _make_bounds,
    generate_users,
)
from .geometry import FacilitySet, Point, UserSet
from .p1_strategies import Strategy

DEFAULT_TTL_SECONDS = 3600.0

_SUGGESTABLE = ("centerpoint", "eknet", "disknet")


class CreateSessionBody(BaseModel):
    users: list[list[float]] | None = None
    gen_spec: str | None = None
    k: int
    allow_degenerate: bool = False


class PlaceBody(BaseModel):
    point: list[float]


@dataclass
class Session:
    id: str
    users: UserSet
    k: int
    created: float
    last_access: float
    placed: list[Point] = field(default_factory=list)
    history: list[dict] = field(default_factory=list)
    committed: dict | None = None
    suggestion: dict | None = None
    lock: threading.RLock = field(default_factory=threading.RLock)

    def state_dict(self) -> dict:
        return {
            "session_id": self.id,
            "n": len(self.users),
            "k": self.k,
            "placed": [list(p.coords) for p in self.placed],
            "remaining": self.k - len(self.placed),
            "committed": self.committed is not None,
        }


class SessionStore:
    """Registry with lazy TTL eviction and per-session locks."""

    def __init__(self, ttl_seconds: float = DEFAULT_TTL_SECONDS):
        self.ttl = ttl_seconds
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def add(self, session: Session):
        with self._lock:
            now = time.monotonic()
            dead = [
                sid
                for sid, s in self._sessions.items()
                if now - s.last_access > self.ttl
            ]
            for sid in dead:
                del self._sessions[sid]
            self._sessions[session.id] = session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise HTTPException(404, f"unknown session {session_id}")
            if time.monotonic() - session.last_access > self.ttl:
                del self._sessions[session_id]
                raise HTTPException(404, f"session {session_id} expired")
            session.last_access = time.monotonic()
            return session


def _validate_point(raw: list[float]) -> Point:
    if len(raw) != 2:
        raise HTTPException(422, f"expected [x, y], got {raw!r}")
    if not all(math.isfinite(c) for c in raw):
        raise HTTPException(422, f"coordinates must be finite, got {raw!r}")
    return Point((float(raw[0]), float(raw[1])))


def _parse_epsilon_param(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise HTTPException(422, f"cannot read epsilon {text!r}")
    if not 0 < value <= 1:
        raise HTTPException(422, f"epsilon must lie in (0, 1], got {text}")
    return value


def _frac(f: Fraction) -> dict:
    return {"num": f.numerator, "den": f.denominator}


def _bbox(users: UserSet) -> tuple[float, float, float, float]:
    arr = users.as_array()
    lo = arr.min(axis=0)
    hi = arr.max(axis=0)
    pad = 0.05 * max(float(((hi - lo) ** 2).sum() ** 0.5), 1.0)
    return (
        float(lo[0]) - pad,
        float(lo[1]) - pad,
        float(hi[0]) + pad,
        float(hi[1]) + pad,
    )


def _clip_halfplane(poly, a, b, c):
    """Sutherland-Hodgman step: keep the side with a*x + b*y <= c."""
    out = []
    m = len(poly)
    for i in range(m):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % m]
        p_in = a * px + b * py <= c
        q_in = a * qx + b * qy <= c
        if p_in:
            out.append((px, py))
        if p_in != q_in:
            denom = a * (qx - px) + b * (qy - py)
            t = (c - a * px - b * py) / denom
            out.append((px + t * (qx - px), py + t * (qy - py)))
    return out


def _voronoi_cells(session: Session) -> dict:
    x0, y0, x1, y1 = _bbox(session.users)
    cells = []
    pts = session.placed
    for i, f in enumerate(pts):
        poly = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        for j, g in enumerate(pts):
            if i == j or not poly:
                continue
            # bisector halfplane closer to f than to g
            a = 2 * (g.x - f.x)
            b = 2 * (g.y - f.y)
            c = g.x**2 + g.y**2 - f.x**2 - f.y**2
            poly = _clip_halfplane(poly, a, b, c)
        cells.append(
            {
                "facility": [f.x, f.y],
                "polygon": [[px, py] for px, py in poly],
            }
        )
    return {"bbox": [[x0, y0], [x1, y1]], "cells": cells}


def _best_response_payload(session: Session) -> dict:
    f1 = FacilitySet(list(session.placed), "P1")
    response = best_response(session.users, f1)
    # one disk per user, centered there and through the nearest placed
    # facility; shipped so the board can draw the overlay without redoing
    # distance arithmetic client-side
    disks = [
        {"center": list(d.center.coords), "radius": d.radius}
        for d in nearest_facility_disks(session.users, f1)
    ]
    return {
        "point": list(response.location.coords),
        "payoff": response.payoff,
        "served": sorted(response.served),
        "method": response.method,
        "disks": disks,
    }


def _reference_bars(n: int, k: int) -> dict:
    """The three follower landmarks the board draws: the recursive-net floor
    for P1, the even split, and the universal cap."""
    table = build_table(2, max(k, 10))
    ek = table.value(k)
    return {
        "ek_floor": {"fraction": _frac(1 - ek), "value": float((1 - ek) * n)},
        "half": {"fraction": _frac(Fraction(1, 2)), "value": n / 2},
        "upper_cap": {
            "fraction": _frac(Fraction(2 * k - 1, 2 * k)),
            "value": float(Fraction(2 * k - 1, 2 * k) * n),
        },
    }


def create_app(
    persist_dir: str | None = None, ttl_seconds: float = DEFAULT_TTL_SECONDS
) -> FastAPI:
    app = FastAPI(title="voronoi-game board")
    store = SessionStore(ttl_seconds)
    app.state.store = store

    def _persist(session: Session):
        if persist_dir is None:
            return
        os.makedirs(persist_dir, exist_ok=True)
        payload = {
            **session.state_dict(),
            "users": [list(p.coords) for p in session.users.users],
            "history": session.history,
            "result": session.committed,
        }
        path = os.path.join(persist_dir, f"{session.id}.json")
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        if body.k < 1:
            raise HTTPException(422, f"k must be >= 1, got {body.k}")
        if (body.users is None) == (body.gen_spec is None):
            raise HTTPException(422, "provide exactly one of users, gen_spec")
        if body.users is not None:
            pts = [_validate_point(row) for row in body.users]
            if len(pts) < 1:
                raise HTTPException(422, "users must not be empty")
            users = UserSet.from_points(pts)
        else:
            from .cli import UsageError, _parse_gen_spec

            try:
                spec = _parse_gen_spec(body.gen_spec)
            except UsageError as exc:
                raise HTTPException(422, str(exc))
            if spec.dimension != 2:
                raise HTTPException(422, "the board is planar; use dim=2")
            users = generate_users(spec)
        if not body.allow_degenerate and not users.general_position():
            raise HTTPException(
                422,
                "users contain collinear or cocircular points; pass "
                "allow_degenerate=true to keep them",
            )
        now = time.monotonic()
        session = Session(
            id=uuid.uuid4().hex[:12],
            users=users,
            k=body.k,
            created=now,
            last_access=now,
        )
        store.add(session)
        _persist(session)
        return {"session_id": session.id, "n": len(users)}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.get(session_id)
        payload = session.state_dict()
        payload["users"] = [list(p.coords) for p in session.users.users]
        return payload

    @app.post("/sessions/{session_id}/place")
    def place(session_id: str, body: PlaceBody):
        session = store.get(session_id)
        point = _validate_point(body.point)
        with session.lock:
            if session.committed is not None:
                raise HTTPException(409, "session already committed")
            if len(session.placed) >= session.k:
                raise HTTPException(
                    409, f"budget exhausted: {session.k} facilities placed"
                )
            if any(point == p for p in session.placed):
                raise HTTPException(409, f"duplicate facility at {body.point}")
            session.placed.append(point)
            session.history.append({"op": "place", "point": list(point.coords)})
            _persist(session)
            return session.state_dict()

    @app.delete("/sessions/{session_id}/place/last")
    def undo(session_id: str):
        session = store.get(session_id)
        with session.lock:
            if session.committed is not None:
                raise HTTPException(409, "session already committed")
            if not session.placed:
                raise HTTPException(409, "nothing to undo")
            gone = session.placed.pop()
            session.history.append({"op": "undo", "point": list(gone.coords)})
            _persist(session)
            return session.state_dict()

    @app.get("/sessions/{session_id}/best-response")
    def what_if(session_id: str):
        session = store.get(session_id)
        with session.lock:
            if not session.placed:
                raise HTTPException(409, "place at least one facility first")
            try:
                return _best_response_payload(session)
            except DegeneracyError as exc:
                raise HTTPException(409, f"degenerate geometry: {exc}")

    @app.post("/sessions/{session_id}/commit")
    def commit(session_id: str):
        session = store.get(session_id)
        with session.lock:
            if session.committed is not None:
                raise HTTPException(409, "session already committed")
            if not session.placed:
                raise HTTPException(409, "place at least one facility first")
            f1 = FacilitySet(list(session.placed), "P1")
            strategy = _strategy_for_commit(session, f1)
            try:
                response = best_response(session.users, f1)
                half = halfcell_response(session.users, f1)
            except DegeneracyError as exc:
                raise HTTPException(409, f"degenerate geometry: {exc}")
            n = len(session.users)
            bounds = _make_bounds(
                n, len(session.placed), strategy.guarantee, response.payoff
            )
            result = GameResult(
                f"session-{session.id}",
                session.users,
                strategy,
                response,
                half.payoff,
                bounds,
            )
            payload = result.to_json_dict()
            payload["bars"] = _reference_bars(n, len(session.placed))
            session.committed = payload
            session.history.append({"op": "commit"})
            _persist(session)
            return payload

    @app.get("/sessions/{session_id}/voronoi")
    def voronoi(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return _voronoi_cells(session)

    @app.get("/strategies/{kind}")
    def suggest(
        kind: str,
        session_id: str,
        k: int | None = None,
        epsilon: str | None = None,
    ):
        if kind not in STRATEGY_NAMES:
            raise HTTPException(404, f"unknown strategy {kind!r}")
        if kind not in _SUGGESTABLE:
            raise HTTPException(422, "the board is planar; use a 2d strategy")
        session = store.get(session_id)
        k_req = session.k if k is None else k
        eps = _parse_epsilon_param(epsilon) if epsilon is not None else None
        try:
            strategy = _build_suggestion(session.users, kind, k_req, eps)
        except (ValueError, DimensionMismatchError) as exc:
            raise HTTPException(422, str(exc))
        payload = strategy.to_json_dict()
        with session.lock:
            session.suggestion = payload
        return payload

    @app.get("/epsilon-table")
    def epsilon_table(dim: int, kmax: int):
        if dim not in (2, 3):
            raise HTTPException(422, f"dim must be 2 or 3, got {dim}")
        if not 1 <= kmax <= 2000:
            raise HTTPException(422, f"kmax must lie in 1..2000, got {kmax}")
        table = build_table(dim, kmax)
        return {
            "dimension": dim,
            "entries": [
                {
                    "k": k,
                    "epsilon": _frac(table.value(k)),
                    "split": {"r": table.split(k)[0], "s": table.split(k)[1]},
                    "factor": _frac(approx_factor(table, k)),
                }
                for k in range(1, kmax + 1)
            ],
        }

    return app


def _build_suggestion(users, kind, k, epsilon) -> Strategy:
    from .p1_strategies import build_disk_net, build_E_k, centerpoint_strategy

    if kind == "centerpoint":
        if k != 1:
            raise ValueError("the centerpoint strategy plays exactly one facility")
        return centerpoint_strategy(users)
    if kind == "eknet":
        return build_E_k(users, k, build_table(2, max(k, 10)))
    if epsilon is None:
        raise ValueError("disknet needs epsilon")
    return build_disk_net(users, epsilon)


def _strategy_for_commit(session: Session, f1: FacilitySet) -> Strategy:
    """Use the suggested guarantee when the human placed exactly the
    suggestion; otherwise the placement is custom and promises nothing."""
    sug = session.suggestion
    if sug is not None:
        sug_pts = {tuple(p) for p in sug["points"]}
        placed = {p.coords for p in f1.facilities}
        if sug_pts == placed:
            eps = sug.get("epsilon")
            return Strategy(
                f1,
                sug["kind"],
                Fraction(sug["guarantee"]["num"], sug["guarantee"]["den"]),
                Fraction(eps["num"], eps["den"]) if eps else None,
            )
    return Strategy(f1, "custom", Fraction(1))
