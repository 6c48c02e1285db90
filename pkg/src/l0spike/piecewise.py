"""Exact algebra on labeled piecewise-quadratic functions over a half-line.

A cost function is stored as an ordered list of pieces. Each piece is a
quadratic ``a*x**2 + b*x + c`` on a half-open interval ``[lo, hi)`` together
with an integer label identifying the most recent changepoint candidate that
produced it (0 means "no changepoint yet"). Pieces tile ``[floor, inf)``
exactly and the represented function is continuous across breakpoints.

All operations are pure: they return new objects and never mutate inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

INF = math.inf

# Breakpoint/merge tolerances. Crossing roots closer than BREAK_TOL to an
# interval end are treated as coincident with it; quadratics whose
# coefficients differ by less than COEF_TOL are considered equal.
BREAK_TOL = 1e-12
COEF_TOL = 1e-12
TIE_TOL = 1e-12


class EmptyCostFunctionError(RuntimeError):
    """All pieces were removed; the configuration is degenerate."""


@dataclass(frozen=True)
class Quadratic:
    """Coefficients of f(x) = a*x**2 + b*x + c."""

    a: float
    b: float
    c: float

    def __call__(self, x: float) -> float:
        return (self.a * x + self.b) * x + self.c

    def shifted(self, other: "Quadratic") -> "Quadratic":
        return Quadratic(self.a + other.a, self.b + other.b, self.c + other.c)

    def close_to(self, other: "Quadratic", tol: float = COEF_TOL) -> bool:
        return (
            abs(self.a - other.a) <= tol
            and abs(self.b - other.b) <= tol
            and abs(self.c - other.c) <= tol
        )


@dataclass(frozen=True)
class CostPiece:
    """One quadratic piece on [lo, hi) carrying its changepoint label."""

    lo: float
    hi: float
    quad: Quadratic
    label: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"piece interval is empty: [{self.lo}, {self.hi})")


@dataclass(frozen=True)
class CostFunction:
    """Continuous piecewise quadratic on [floor, inf), pieces in order."""

    pieces: tuple[CostPiece, ...]
    floor: float

    def __post_init__(self):
        if not self.pieces:
            raise EmptyCostFunctionError("cost function has no pieces")

    @classmethod
    def from_pieces(cls, pieces: Iterable[CostPiece], floor: float) -> "CostFunction":
        return cls(tuple(pieces), floor)

    @classmethod
    def single(cls, quad: Quadratic, label: int, floor: float) -> "CostFunction":
        return cls((CostPiece(floor, INF, quad, label),), floor)

    def __len__(self) -> int:
        return len(self.pieces)

    def breakpoints(self) -> list[float]:
        """Interior breakpoints (excludes the floor and +inf)."""
        return [p.lo for p in self.pieces[1:]]

    def labels(self) -> set[int]:
        return {p.label for p in self.pieces}

    def piece_at(self, x: float) -> CostPiece:
        if x < self.floor:
            raise ValueError(f"{x} is below the domain floor {self.floor}")
        for p in self.pieces:
            if x < p.hi:
                return p
        return self.pieces[-1]

    def __call__(self, x: float) -> float:
        return self.piece_at(x).quad(x)

    def validate(self, continuity_tol: float = 1e-8) -> None:
        """Raise if ordering, coverage, or continuity is violated."""
        ps = self.pieces
        if ps[0].lo != self.floor:
            raise AssertionError("first piece must start at the domain floor")
        if ps[-1].hi != INF:
            raise AssertionError("last piece must extend to +inf")
        for left, right in zip(ps, ps[1:]):
            if left.hi != right.lo:
                raise AssertionError(f"gap/overlap at {left.hi} vs {right.lo}")
            vl, vr = left.quad(left.hi), right.quad(right.lo)
            scale = max(1.0, abs(vl), abs(vr))
            if abs(vl - vr) > continuity_tol * scale:
                raise AssertionError(f"discontinuity at {left.hi}: {vl} vs {vr}")

    def dump(self) -> str:
        """One piece per line: lo, hi, a, b, c, label (decimal text)."""
        lines = []
        for p in self.pieces:
            q = p.quad
            lines.append(f"{p.lo!r},{p.hi!r},{q.a!r},{q.b!r},{q.c!r},{p.label}")
        return "\n".join(lines)


def point_quadratic(y: float) -> Quadratic:
    """Quadratic of the squared-residual term 0.5*(y - x)**2."""
    if not math.isfinite(y):
        raise ValueError("observation must be finite")
    return Quadratic(0.5, -y, 0.5 * y * y)


def quad_min(q: Quadratic, lo: float, hi: float) -> tuple[float, float]:
    """Minimizer of q over [lo, hi] (hi may be +inf). Needs q.a >= 0.

    Returns (argmin, value). For a == 0 the better endpoint is returned;
    a constant quadratic minimizes at lo.
    """
    if not lo < hi:
        raise ValueError(f"invalid interval [{lo}, {hi}]")
    if q.a > 0.0:
        v = -q.b / (2.0 * q.a)
        if v <= lo:
            return lo, q(lo)
        if v >= hi:
            return hi, q(hi)
        return v, q(v)
    if q.b == 0.0:
        return lo, q.c
    # linear: pick the downhill endpoint
    if q.b > 0.0:
        return lo, q(lo)
    if math.isinf(hi):
        return hi, -INF
    return hi, q(hi)


def scale_argument(f: CostFunction, gamma: float) -> CostFunction:
    """g with g(x) = f(x / gamma). Breakpoints shrink by gamma.

    The domain floor scales along to gamma * floor; callers restore the
    original floor with prune_floor.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    g2 = gamma * gamma
    pieces = [
        CostPiece(
            p.lo * gamma,
            p.hi if math.isinf(p.hi) else p.hi * gamma,
            Quadratic(p.quad.a / g2, p.quad.b / gamma, p.quad.c),
            p.label,
        )
        for p in f.pieces
    ]
    return CostFunction(tuple(pieces), f.floor * gamma)


def add_quadratic(f: CostFunction, q: Quadratic) -> CostFunction:
    """Add q to every piece; breakpoints and labels unchanged."""
    pieces = tuple(
        CostPiece(p.lo, p.hi, p.quad.shifted(q), p.label) for p in f.pieces
    )
    return CostFunction(pieces, f.floor)


def prune_floor(f: CostFunction, rho: float) -> CostFunction:
    """Drop pieces entirely below rho and clip the first survivor to rho."""
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    kept = [p for p in f.pieces if p.hi > rho]
    if not kept:
        raise EmptyCostFunctionError("every piece lies below the floor")
    first = kept[0]
    if first.lo < rho:
        kept[0] = CostPiece(rho, first.hi, first.quad, first.label)
    return CostFunction(tuple(kept), rho)


def global_min(f: CostFunction) -> tuple[int, float, float]:
    """(label, argmin, value) over the whole domain; ties pick the smaller label."""
    return min_up_to(f, INF)


def min_up_to(f: CostFunction, bound: float) -> tuple[int, float, float]:
    """(label, argmin, value) of f restricted to [floor, bound]."""
    best_label, best_arg, best_val = -1, 0.0, INF
    for p in f.pieces:
        if p.lo > bound:
            break
        hi = min(p.hi, bound)
        if not p.lo < hi:
            # bound sits exactly on this piece's lo
            arg, val = p.lo, p.quad(p.lo)
        else:
            arg, val = quad_min(p.quad, p.lo, hi)
        if best_label < 0:
            best_label, best_arg, best_val = p.label, arg, val
            continue
        tol = TIE_TOL * max(1.0, abs(best_val))
        if val < best_val - tol or (val <= best_val + tol and p.label < best_label):
            best_label, best_arg, best_val = p.label, arg, val
    return best_label, best_arg, best_val


def _roots_in(qa: Quadratic, qb: Quadratic, lo: float, hi: float) -> list[float]:
    """Roots of qa - qb strictly inside (lo, hi), sorted."""
    a = qa.a - qb.a
    b = qa.b - qb.b
    c = qa.c - qb.c
    roots: list[float] = []
    if abs(a) <= COEF_TOL:
        if abs(b) > COEF_TOL:
            roots.append(-c / b)
    else:
        disc = b * b - 4.0 * a * c
        if disc > 0.0:
            sq = math.sqrt(disc)
            if b >= 0.0:
                q = -0.5 * (b + sq)
            else:
                q = -0.5 * (b - sq)
            r1 = q / a
            r2 = c / q if q != 0.0 else r1
            roots.extend((r1, r2) if r1 <= r2 else (r2, r1))
    margin = BREAK_TOL * max(1.0, abs(lo))
    out = []
    for r in roots:
        if r > lo + margin and r < hi - margin:
            if not out or r - out[-1] > BREAK_TOL:
                out.append(r)
    return out


class _Builder:
    """Accumulates pieces, merging adjacent ones with equal quad and label."""

    def __init__(self):
        self.items: list[CostPiece] = []

    def add(self, lo: float, hi: float, quad: Quadratic, label: int) -> None:
        if not lo < hi:
            return
        if self.items:
            last = self.items[-1]
            if last.label == label and last.quad.close_to(quad):
                self.items[-1] = CostPiece(last.lo, hi, last.quad, label)
                return
        self.items.append(CostPiece(lo, hi, quad, label))


def pointwise_min(f: CostFunction, g: CostFunction, label_for_g: int) -> CostFunction:
    """h(x) = min(f(x), g(x)); where g wins, pieces carry label_for_g.

    Ties keep the incumbent f. Both operands must share the same floor.
    """
    if f.floor != g.floor:
        raise ValueError("operands must share the same domain floor")
    out = _Builder()
    fi = gi = 0
    lo = f.floor
    fp, gp = f.pieces, g.pieces
    while fi < len(fp) and gi < len(gp):
        hi = min(fp[fi].hi, gp[gi].hi)
        qf, qg = fp[fi].quad, gp[gi].quad
        cuts = [lo] + _roots_in(qf, qg, lo, hi) + [hi]
        for x0, x1 in zip(cuts, cuts[1:]):
            mid = x0 + 0.5 * (x1 - x0) if math.isfinite(x1) else x0 + max(1.0, abs(x0))
            d = qf(mid) - qg(mid)
            if d > TIE_TOL * max(1.0, abs(qf(mid))):
                out.add(x0, x1, qg, label_for_g)
            else:
                out.add(x0, x1, qf, fp[fi].label)
        lo = hi
        if fp[fi].hi == hi:
            fi += 1
        if gp[gi].hi == hi:
            gi += 1
    return CostFunction(tuple(out.items), f.floor)


def running_min(f: CostFunction) -> CostFunction:
    """g(x) = min of f over [floor, x].

    Where f sits above the best value seen so far, g is that constant and the
    piece keeps the label of the piece where the minimum was attained.
    """
    out = _Builder()
    best = INF
    best_label = f.pieces[0].label
    for p in f.pieces:
        q = p.quad
        # split the piece into monotone stretches at the interior vertex
        stretches: list[tuple[float, float, bool]] = []
        if q.a > 0.0:
            v = -q.b / (2.0 * q.a)
            if v <= p.lo:
                stretches.append((p.lo, p.hi, False))  # increasing
            elif v >= p.hi:
                stretches.append((p.lo, p.hi, True))  # decreasing
            else:
                stretches.append((p.lo, v, True))
                stretches.append((v, p.hi, False))
        else:
            if q.b < 0.0:
                stretches.append((p.lo, p.hi, True))
            else:
                # constant (b == 0) or increasing linear
                stretches.append((p.lo, p.hi, False))
        for x0, x1, decreasing in stretches:
            v0 = q(x0)
            if decreasing:
                end_val = q(x1) if math.isfinite(x1) else -INF
                tol = TIE_TOL * (max(1.0, abs(best)) if math.isfinite(best) else 1.0)
                if v0 <= best + tol:
                    # already at or below the running best: follow q down
                    out.add(x0, x1, q, p.label)
                elif end_val >= best - tol:
                    out.add(x0, x1, Quadratic(0.0, 0.0, best), best_label)
                else:
                    cross = _roots_in(q, Quadratic(0.0, 0.0, best), x0, x1)
                    x = cross[0] if cross else x0
                    out.add(x0, x, Quadratic(0.0, 0.0, best), best_label)
                    out.add(x, x1, q, p.label)
                if end_val < best:
                    best = end_val
                    best_label = p.label
            else:
                # non-decreasing stretch: the running min freezes at its start
                if v0 < best:
                    best = v0
                    best_label = p.label
                out.add(x0, x1, Quadratic(0.0, 0.0, best), best_label)
    return CostFunction(tuple(out.items), f.floor)
