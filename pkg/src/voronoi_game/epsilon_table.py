"""Exact rational table for the recursive piercing-fraction bound.

``build_table(d, kmax)`` fills in the sequence

    e_0 = 1
    e_i = min over r, s >= 0 with r + 2s + 1 = i of
          g / (1 + g),   g = e_r * (1 + (d-1) * e_s)

entirely in integer arithmetic (numerators and denominators grow fast, so
the hot loop avoids Fraction and reduces with math.gcd).  Every public value
is exposed as :class:`fractions.Fraction`.

A leader playing the i-point construction limits the follower to an e_i
fraction of the users, hence the derived approximation factor
(2k-1) / (2k (1 - e_k)) and its comparison against the piercing-net factor
(2k-1) / (2(k - kappa)).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class EpsilonEntry:
    """One table row: the exact value and the (r, s) split that realised it.

    The zeroth row is the base case and carries no split.
    """

    index: int
    value: Fraction
    r: int | None
    s: int | None


@dataclass(frozen=True)
class EpsilonTable:
    dimension: int
    entries: tuple[EpsilonEntry, ...]

    @property
    def kmax(self) -> int:
        return len(self.entries) - 1

    def value(self, k: int) -> Fraction:
        self._check_range(k)
        return self.entries[k].value

    def split(self, k: int) -> tuple[int, int]:
        self._check_range(k)
        e = self.entries[k]
        if e.r is None:
            raise ValueError("the zeroth entry has no split")
        return e.r, e.s

    def _check_range(self, k: int):
        if not 0 <= k <= self.kmax:
            raise ValueError(
                f"k={k} outside table range 0..{self.kmax} (rebuild with larger kmax)"
            )


def build_table(dimension: int, kmax: int) -> EpsilonTable:
    """Fill the table up to ``kmax`` inclusive.

    Ties in the minimisation are broken toward the smallest r so the stored
    split is deterministic.
    """
    if dimension not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {dimension}")
    if kmax < 0:
        raise ValueError(f"kmax must be nonnegative, got {kmax}")
    d = dimension
    num = [0] * (kmax + 1)
    den = [0] * (kmax + 1)
    split: list[tuple[int, int] | None] = [None] * (kmax + 1)
    num[0], den[0] = 1, 1
    for i in range(1, kmax + 1):
        best_n = best_d = 0
        best_rs = None
        for s in range((i - 1) // 2 + 1):
            r = i - 1 - 2 * s
            # g = (p_r / q_r) * (q_s + (d-1) p_s) / q_s, value = g / (1+g).
            gn = num[r] * (den[s] + (d - 1) * num[s])
            gd = den[r] * den[s]
            cn, cd = gn, gd + gn
            if best_rs is None or cn * best_d < best_n * cd:
                g = math.gcd(cn, cd)
                best_n, best_d = cn // g, cd // g
                best_rs = (r, s)
        # Candidates were scanned with s ascending, i.e. r descending; keep
        # the smallest r among ties by preferring later candidates on equality.
        for s in range((i - 1) // 2 + 1):
            r = i - 1 - 2 * s
            gn = num[r] * (den[s] + (d - 1) * num[s])
            gd = den[r] * den[s]
            cn, cd = gn, gd + gn
            if cn * best_d == best_n * cd and r < best_rs[0]:
                best_rs = (r, s)
        num[i], den[i] = best_n, best_d
        split[i] = best_rs
    entries = [EpsilonEntry(0, Fraction(1), None, None)]
    for i in range(1, kmax + 1):
        r, s = split[i]
        entries.append(EpsilonEntry(i, Fraction(num[i], den[i]), r, s))
    return EpsilonTable(dimension, tuple(entries))


def approx_factor(table: EpsilonTable, k: int) -> Fraction:
    """(2k-1) / (2k (1 - e_k)): the follower-vs-leader ratio when the leader
    plays the recursive construction."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ek = table.value(k)
    return Fraction(2 * k - 1) / (2 * k * (1 - ek))


def net_factor(k: int, kappa: int) -> Fraction:
    """(2k-1) / (2(k-kappa)): the ratio when the leader plays a piercing net
    whose overhead constant is ``kappa`` (42 in the plane, 420 in space)."""
    if k <= kappa:
        raise ValueError(f"net factor undefined for k={k} <= kappa={kappa}")
    return Fraction(2 * k - 1, 2 * (k - kappa))


def crossover_k(table: EpsilonTable, kappa: int) -> int:
    """Largest k with approx_factor < net_factor pointwise on (kappa, k].

    Below this threshold the recursive construction dominates the net
    strategy; kappa=0 makes the net dominate immediately and the result is 0.
    """
    k = kappa
    while k + 1 <= table.kmax:
        if approx_factor(table, k + 1) < net_factor(k + 1, kappa):
            k += 1
        else:
            return k
    raise ValueError(
        f"table ends at kmax={table.kmax} before the crossover is witnessed"
    )


def winning_threshold(table: EpsilonTable, dimension: int | None = None) -> int:
    """Smallest k at which the leader keeps a strict majority of users.

    In the plane that is the first k with e_k < 1/2.  In space the recursion
    never drops below 1/2, so the threshold comes from the net strategy:
    the first k with (k - 420) / k > 1/2, which is 841.
    """
    d = dimension if dimension is not None else table.dimension
    if d == 2:
        half = Fraction(1, 2)
        for k in range(1, table.kmax + 1):
            if table.value(k) < half:
                return k
        raise ValueError(
            f"no k with value below 1/2 up to kmax={table.kmax}; extend the table"
        )
    if d == 3:
        return 841
    raise ValueError(f"dimension must be 2 or 3, got {d}")


# ---------------------------------------------------------------------------
# Export


CSV_COLUMNS = ["k", "epsilon_num", "epsilon_den", "r", "s", "factor_num", "factor_den"]


def table_to_csv(table: EpsilonTable, kmax: int | None = None) -> str:
    """Exact CSV rows for k = 1..kmax; parsing them back reproduces the table."""
    kmax = table.kmax if kmax is None else kmax
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for k in range(1, kmax + 1):
        e = table.entries[k]
        f = approx_factor(table, k)
        writer.writerow(
            [k, e.value.numerator, e.value.denominator, e.r, e.s, f.numerator, f.denominator]
        )
    return buf.getvalue()


def table_from_csv(text: str, dimension: int) -> EpsilonTable:
    """Rebuild a table from :func:`table_to_csv` output (used for round-trip
    checks; splits and values are taken verbatim)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected header {header}")
    entries = [EpsilonEntry(0, Fraction(1), None, None)]
    for row in reader:
        if not row:
            continue
        k, en, ed, r, s, _, _ = row
        entries.append(EpsilonEntry(int(k), Fraction(int(en), int(ed)), int(r), int(s)))
    return EpsilonTable(dimension, tuple(entries))


def table_pretty(table: EpsilonTable, kmax: int | None = None) -> str:
    """Human-readable layout: one column per k, exact factor over its decimal."""
    kmax = table.kmax if kmax is None else kmax
    ks = list(range(1, kmax + 1))
    factors = [approx_factor(table, k) for k in ks]
    rows = [
        ["k"] + [str(k) for k in ks],
        ["factor"] + [f"{f.numerator}/{f.denominator}" for f in factors],
        ["approx"] + [f"{float(f):.4f}" for f in factors],
    ]
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows]
    return "\n".join(lines) + "\n"
