import math
from dataclasses import dataclass
from typing import Iterable, List, Tuple

INF = math.inf


@dataclass(frozen=True, order=True)
class Interval:
    """Closed interval [lo, hi]; lo may be -inf and hi may be +inf."""
    lo: float
    hi: float

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, m: float) -> bool:
        return self.lo <= m <= self.hi


def _normalize(intervals: Iterable[Interval]) -> Tuple[Interval, ...]:
    # drops empty pieces, sorts by lower endpoint and merges overlapping or touching pieces
    pieces = sorted(iv for iv in intervals if iv.lo <= iv.hi)
    merged: List[Interval] = []
    for iv in pieces:
        if merged and iv.lo <= merged[-1].hi:
            last = merged[-1]
            merged[-1] = Interval(last.lo, max(last.hi, iv.hi))
        else:
            merged.append(iv)
    return tuple(merged)


class ConfidenceSet:
    """
    Finite union of closed intervals, stored sorted, pairwise disjoint and non-touching.

    Infinite endpoints are the float sentinels -inf / +inf. The empty set has no intervals.
    """

    __slots__ = ("intervals",)

    def __init__(self, intervals: Iterable[Interval] = ()):
        self.intervals: Tuple[Interval, ...] = _normalize(intervals)

    @classmethod
    def from_bounds(cls, lo: float, hi: float) -> "ConfidenceSet":
        return cls([Interval(lo, hi)])

    @classmethod
    def full_line(cls) -> "ConfidenceSet":
        return cls([Interval(-INF, INF)])

    @classmethod
    def empty(cls) -> "ConfidenceSet":
        return cls()

    @classmethod
    def complement_of(cls, removed: Iterable["ConfidenceSet"]) -> "ConfidenceSet":
        """
        Closure of the complement of a union of sets.

        The removed pieces are treated as open so that the result keeps its endpoints.
        """
        # a degenerate piece [a, a] is an empty open interval and removes nothing
        pieces = [iv for iv in _normalize(iv for s in removed for iv in s.intervals) if iv.lo < iv.hi]
        kept: List[Interval] = []
        cursor = -INF
        for iv in pieces:
            if iv.lo > -INF:
                kept.append(Interval(cursor, iv.lo))
            cursor = iv.hi
        if cursor < INF:
            kept.append(Interval(cursor, INF))
        return cls(kept)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def lower(self) -> float:
        """Infimum; +inf for the empty set."""
        return self.intervals[0].lo if self.intervals else INF

    @property
    def upper(self) -> float:
        """Supremum; -inf for the empty set."""
        return self.intervals[-1].hi if self.intervals else -INF

    @property
    def width(self) -> float:
        if any(not iv.is_finite for iv in self.intervals):
            return INF
        return sum(iv.width for iv in self.intervals)

    @property
    def topology(self) -> str:
        n = len(self.intervals)
        if n == 0:
            return "empty"
        if n == 1:
            iv = self.intervals[0]
            if iv.is_finite:
                return "interval"
            if iv.lo == -INF and iv.hi == INF:
                return "full-line"
            return "half-line"
        if n == 2:
            return "two-piece"
        if n == 3:
            return "three-piece"
        return f"{n}-piece"

    def contains(self, m: float) -> bool:
        return any(iv.contains(m) for iv in self.intervals)

    def __and__(self, other: "ConfidenceSet") -> "ConfidenceSet":
        return intersect(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConfidenceSet):
            return NotImplemented
        return self.intervals == other.intervals

    def __hash__(self) -> int:
        return hash(self.intervals)

    def __repr__(self) -> str:
        if not self.intervals:
            return "ConfidenceSet(empty)"
        body = " U ".join(f"[{iv.lo:g}, {iv.hi:g}]" for iv in self.intervals)
        return f"ConfidenceSet({body})"


def intersect(a: ConfidenceSet, b: ConfidenceSet) -> ConfidenceSet:
    """Exact intersection of two normalized sets; may be empty."""
    out: List[Interval] = []
    i = j = 0
    xs, ys = a.intervals, b.intervals
    while i < len(xs) and j < len(ys):
        lo = max(xs[i].lo, ys[j].lo)
        hi = min(xs[i].hi, ys[j].hi)
        if lo <= hi:
            out.append(Interval(lo, hi))
        # advance whichever piece ends first
        if xs[i].hi < ys[j].hi:
            i += 1
        else:
            j += 1
    return ConfidenceSet(out)
