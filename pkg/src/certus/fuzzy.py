"""Fuzzy confidence sets and their comparison/ordering semantics.

Confidence in a claim is modelled as a convex, normalized fuzzy set on the
domain [0, 1], represented piecewise-linearly by an ordered list of
(x, mu) breakpoints.  Membership is interpolated linearly between
breakpoints and is zero outside the first/last one.  A singleton set {v}
degenerates to the single breakpoint (v, 1).

All values are immutable and every operation is a pure function, so they
are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import DomainError, InvalidSetError, LadderError

# Tolerance applied to membership comparisons, so interpolation rounding
# cannot flip subset/equality decisions.
MU_TOL = 1e-12


@dataclass(frozen=True)
class FuzzySet:
    """A piecewise-linear membership function on [0, 1].

    Construction is permissive beyond basic shape checks; semantic
    invariants (normalization, convexity) are reported by
    :func:`validate_set` so that malformed sets can be diagnosed rather
    than rejected blindly.
    """

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.breakpoints:
            raise DomainError("a fuzzy set needs at least one breakpoint")
        object.__setattr__(
            self,
            "breakpoints",
            tuple((float(x), float(m)) for x, m in self.breakpoints),
        )

    @property
    def is_singleton(self) -> bool:
        return len(self.breakpoints) == 1

    def __str__(self) -> str:
        return describe(self)


def point(v: float) -> FuzzySet:
    """Singleton set {v}: membership 1 at v, 0 elsewhere."""
    _check_domain(v)
    return FuzzySet(((v, 1.0),))


def triangle(a: float, b: float, c: float) -> FuzzySet:
    """Triangular set with feet a, c and peak b (a <= b <= c)."""
    return _from_shape([(a, 0.0), (b, 1.0), (c, 0.0)])


def trapezoid(a: float, b: float, c: float, d: float) -> FuzzySet:
    """Trapezoidal set with support [a, d] and core [b, c]."""
    return _from_shape([(a, 0.0), (b, 1.0), (c, 1.0), (d, 0.0)])


def _from_shape(pts: list[tuple[float, float]]) -> FuzzySet:
    xs = [x for x, _ in pts]
    for x in xs:
        _check_domain(x)
    if any(x1 < x0 for x0, x1 in zip(xs, xs[1:])):
        raise DomainError(f"set coordinates must be non-decreasing: {xs}")
    # Collapse coincident x to the highest membership there.  This keeps the
    # breakpoint list strictly increasing while preserving the shape (a
    # vertical edge contributes its top value).
    collapsed: list[tuple[float, float]] = []
    for x, m in pts:
        if collapsed and collapsed[-1][0] == x:
            collapsed[-1] = (x, max(collapsed[-1][1], m))
        else:
            collapsed.append((x, m))
    if len(collapsed) > 1 and collapsed[0][1] == 0.0 and collapsed[0][0] == collapsed[1][0]:
        collapsed.pop(0)
    return FuzzySet(tuple(collapsed))


def _check_domain(x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"value {x!r} outside the confidence domain [0, 1]")


def membership(fs: FuzzySet, x: float) -> float:
    """Evaluate mu(x) by linear interpolation, zero outside the support."""
    _check_domain(x)
    bps = fs.breakpoints
    if fs.is_singleton:
        return 1.0 if x == bps[0][0] else 0.0
    if x < bps[0][0] or x > bps[-1][0]:
        return 0.0
    for (x0, m0), (x1, m1) in zip(bps, bps[1:]):
        if x0 <= x <= x1:
            if x == x0:
                return m0
            if x == x1:
                return m1
            return m0 + (m1 - m0) * (x - x0) / (x1 - x0)
    return 0.0


def validate_set(fs: FuzzySet) -> list[str]:
    """Return one human-readable violation per failed invariant (empty if valid)."""
    violations = []
    bps = fs.breakpoints
    xs = [x for x, _ in bps]
    mus = [m for _, m in bps]
    if any(not 0.0 <= x <= 1.0 for x in xs):
        violations.append("breakpoint positions must lie in [0, 1]")
    if any(x1 <= x0 for x0, x1 in zip(xs, xs[1:])):
        violations.append("breakpoint positions must be strictly increasing")
    if any(not 0.0 <= m <= 1.0 for m in mus):
        violations.append("membership values must lie in [0, 1]")
    if max(mus) < 1.0 - MU_TOL:
        violations.append(f"not normalized: maximum membership is {max(mus)}, expected 1")
    peak = mus.index(max(mus))
    rising = mus[: peak + 1]
    falling = mus[peak:]
    convex = all(a <= b + MU_TOL for a, b in zip(rising, rising[1:])) and all(
        a + MU_TOL >= b for a, b in zip(falling, falling[1:])
    )
    if not convex:
        violations.append("not convex: membership must rise to a single peak then fall")
    return violations


def require_valid(fs: FuzzySet) -> FuzzySet:
    violations = validate_set(fs)
    if violations:
        raise InvalidSetError(violations)
    return fs


def _eval_points(a: FuzzySet, b: FuzzySet) -> list[float]:
    """Merged breakpoint grid of a and b, plus segment midpoints and the
    intersection points of overlapping linear segments.

    Piecewise-linear differences attain their extremes at these points, and
    the midpoints expose the gaps around singleton spikes, so pointwise
    checks over this grid are exact for every representable set.
    """
    xs = sorted({x for x, _ in a.breakpoints} | {x for x, _ in b.breakpoints})
    pts = list(xs)
    for x0, x1 in zip(xs, xs[1:]):
        pts.append((x0 + x1) / 2.0)
        a0, a1 = membership(a, x0), membership(a, x1)
        b0, b1 = membership(b, x0), membership(b, x1)
        denom = (a1 - a0) - (b1 - b0)
        if abs(denom) > MU_TOL:
            t = (b0 - a0) / denom
            if 0.0 < t < 1.0:
                pts.append(x0 + t * (x1 - x0))
    return sorted(pts)


def subset_of(a: FuzzySet, b: FuzzySet) -> bool:
    """The `is` comparison: true iff mu_a(x) <= mu_b(x) everywhere."""
    return all(
        membership(a, x) <= membership(b, x) + MU_TOL for x in _eval_points(a, b)
    )


def contains_set(a: FuzzySet, b: FuzzySet) -> bool:
    """The `contains` comparison, the reciprocal of `is`."""
    return subset_of(b, a)


def overlaps(a: FuzzySet, b: FuzzySet) -> bool:
    """True iff there is some x where both memberships are strictly positive."""
    return any(
        min(membership(a, x), membership(b, x)) > MU_TOL for x in _eval_points(a, b)
    )


def membership_equal(a: FuzzySet, b: FuzzySet) -> bool:
    """Pointwise equality of the two membership functions."""
    return all(
        abs(membership(a, x) - membership(b, x)) <= MU_TOL
        for x in _eval_points(a, b)
    )


def _boundary_integrals(fs: FuzzySet) -> tuple[float, float]:
    # Integrals over alpha in [0, 1] of the left and right alpha-cut
    # boundaries.  Both boundaries are piecewise linear in alpha with breaks
    # at the membership values, so each segment integrates in closed form.
    bps = list(fs.breakpoints)
    mus = [m for _, m in bps]
    top = max(mus)
    peak_l = mus.index(top)
    peak_r = len(mus) - 1 - mus[::-1].index(top)
    rising = bps[: peak_l + 1]
    falling = bps[peak_r:]
    if rising[0][1] > 0.0:
        rising.insert(0, (rising[0][0], 0.0))
    if falling[-1][1] > 0.0:
        falling.append((falling[-1][0], 0.0))
    left = sum(
        (x0 + x1) / 2.0 * (m1 - m0)
        for (x0, m0), (x1, m1) in zip(rising, rising[1:])
    )
    right = sum(
        (x0 + x1) / 2.0 * (m0 - m1)
        for (x0, m0), (x1, m1) in zip(falling, falling[1:])
    )
    return left, right


@lru_cache(maxsize=None)
def rank(fs: FuzzySet) -> float:
    """Yager's ordering value: the integral over alpha of the mean of the
    alpha-cut.

    Only defined for valid (convex, normalized) sets, where every alpha-cut
    is a non-empty interval; for a trapezoid (a, b, c, d) the closed form
    reduces to (a + b + c + d) / 4.
    """
    require_valid(fs)
    left, right = _boundary_integrals(fs)
    return (left + right) / 2.0


def alpha_cut(fs: FuzzySet, alpha: float) -> tuple[float, float]:
    """The interval {x : mu(x) >= alpha} of a valid set, for alpha in (0, 1]."""
    require_valid(fs)
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must be in (0, 1], got {alpha!r}")
    bps = fs.breakpoints
    lo = next(x for x, m in bps if m >= alpha - MU_TOL)
    hi = next(x for x, m in reversed(bps) if m >= alpha - MU_TOL)
    # Refine across the crossing segments when the cut boundary falls
    # strictly between breakpoints.
    for (x0, m0), (x1, m1) in zip(bps, bps[1:]):
        if m0 < alpha <= m1:
            lo = min(lo, x0 + (alpha - m0) * (x1 - x0) / (m1 - m0))
            break
    for (x0, m0), (x1, m1) in zip(reversed(bps[:-1]), reversed(bps[1:])):
        if m1 < alpha <= m0:
            hi = max(hi, x1 - (alpha - m1) * (x1 - x0) / (m0 - m1))
            break
    return lo, hi


COMPARE_OPS = ("gt", "lt", "ge", "le")


def compare(a: FuzzySet, b: FuzzySet, op: str) -> bool:
    """Order two sets by Yager rank.

    gt/lt are strict rank comparisons; ge/le additionally accept pointwise
    equal membership functions.  Two distinct sets with equal ranks satisfy
    neither gt nor ge.
    """
    if op == "gt":
        return rank(a) > rank(b)
    if op == "lt":
        return rank(a) < rank(b)
    if op == "ge":
        return rank(a) > rank(b) or membership_equal(a, b)
    if op == "le":
        return rank(a) < rank(b) or membership_equal(a, b)
    raise ValueError(f"unknown comparison {op!r}")


def extremum(sets: Sequence[FuzzySet], mode: str) -> FuzzySet:
    """Return the least/greatest set by rank; ties keep the earliest input."""
    if not sets:
        raise DomainError("extremum of an empty list")
    if mode not in ("min", "max"):
        raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
    best = sets[0]
    for fs in sets[1:]:
        if mode == "min" and rank(fs) < rank(best):
            best = fs
        elif mode == "max" and rank(fs) > rank(best):
            best = fs
    return best


# --- Canonical ladder -------------------------------------------------------

LADDER_NAMES = ("zero", "very_low", "low", "med", "high", "very_high", "certain")


@dataclass(frozen=True)
class LadderEntry:
    name: str
    set: FuzzySet
    score: int


class Ladder:
    """The seven named reference sets with integer scores 0..6.

    Shapes are overridable (see the ladder file interface in the CLI), but
    the names, the score assignment, and the strictly-increasing-rank
    requirement are fixed.
    """

    def __init__(self, sets: dict[str, FuzzySet]):
        missing = [n for n in LADDER_NAMES if n not in sets]
        extra = [n for n in sets if n not in LADDER_NAMES]
        if missing or extra:
            raise LadderError(
                f"ladder must define exactly {', '.join(LADDER_NAMES)};"
                f" missing {missing}, unexpected {extra}"
            )
        entries = []
        for i, name in enumerate(LADDER_NAMES):
            fs = sets[name]
            violations = validate_set(fs)
            if violations:
                raise LadderError(f"ladder entry {name!r} is invalid: {'; '.join(violations)}")
            entries.append(LadderEntry(name, fs, i))
        ranks = [rank(e.set) for e in entries]
        if any(r1 <= r0 for r0, r1 in zip(ranks, ranks[1:])):
            raise LadderError(f"ladder ranks must be strictly increasing, got {ranks}")
        self.entries: tuple[LadderEntry, ...] = tuple(entries)
        self._by_name = {e.name: e for e in entries}

    def set_of(self, name: str) -> FuzzySet:
        entry = self._by_name.get(name)
        if entry is None:
            raise LadderError(f"unknown canonical set {name!r}")
        return entry.set

    def score(self, name: str) -> int:
        entry = self._by_name.get(name)
        if entry is None:
            raise LadderError(f"unknown canonical set {name!r}")
        return entry.score

    def unscore(self, s: int) -> str:
        # Scores outside 0..6 arise from defeater-heavy averages; clamping
        # keeps outputs inside the ladder.
        clamped = min(max(int(s), 0), len(self.entries) - 1)
        return self.entries[clamped].name

    def nearest(self, fs: FuzzySet) -> str:
        """Name of the entry whose rank is closest; ties go to the lower score.

        Distances within 1e-9 count as tied so the rule survives rounding in
        the rank arithmetic.
        """
        target = rank(fs)
        distances = [abs(rank(e.set) - target) for e in self.entries]
        best = min(distances)
        for entry, dist in zip(self.entries, distances):
            if dist <= best + 1e-9:
                return entry.name
        raise AssertionError("unreachable")

    def name_of(self, fs: FuzzySet) -> str | None:
        """Exact (pointwise) canonical name of a set, if it has one."""
        for entry in self.entries:
            if membership_equal(fs, entry.set):
                return entry.name
        return None


DEFAULT_LADDER = Ladder(
    {
        "zero": point(0.0),
        "very_low": trapezoid(0.0, 0.1, 0.2, 0.3),
        "low": trapezoid(0.2, 0.3, 0.4, 0.5),
        "med": trapezoid(0.35, 0.45, 0.55, 0.65),
        "high": trapezoid(0.5, 0.6, 0.8, 0.9),
        "very_high": trapezoid(0.8, 0.9, 1.0, 1.0),
        "certain": point(1.0),
    }
)


def _fmt(v: float) -> str:
    return format(v, "g")


def describe(fs: FuzzySet, ladder: Ladder | None = None) -> str:
    """Render a set as its canonical name or the shortest constructor literal."""
    if ladder is not None:
        name = ladder.name_of(fs)
        if name is not None:
            return name
    bps = fs.breakpoints
    if len(bps) == 1:
        return f"point({_fmt(bps[0][0])})"
    mus = [m for _, m in bps]
    if len(bps) == 3 and mus == [0.0, 1.0, 0.0]:
        return f"triangle({_fmt(bps[0][0])},{_fmt(bps[1][0])},{_fmt(bps[2][0])})"
    if len(bps) == 4 and mus == [0.0, 1.0, 1.0, 0.0]:
        return "trapezoid({},{},{},{})".format(*(_fmt(x) for x, _ in bps))
    # Trapezoids degenerate at the domain edge lose their zero feet; recover
    # the constructor form so output stays readable.
    if len(bps) == 3 and mus == [0.0, 1.0, 1.0]:
        return "trapezoid({},{},{},{})".format(
            _fmt(bps[0][0]), _fmt(bps[1][0]), _fmt(bps[2][0]), _fmt(bps[2][0])
        )
    if len(bps) == 3 and mus == [1.0, 1.0, 0.0]:
        return "trapezoid({},{},{},{})".format(
            _fmt(bps[0][0]), _fmt(bps[0][0]), _fmt(bps[1][0]), _fmt(bps[2][0])
        )
    pairs = ";".join(f"({_fmt(x)},{_fmt(m)})" for x, m in bps)
    return f"set[{pairs}]"
