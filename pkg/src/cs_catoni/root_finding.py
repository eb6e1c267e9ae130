import math
from typing import Callable, Optional

from cs_core.errors import RootFindingError
from utils.logger import log

MAX_DOUBLINGS = 64
MAX_BISECTIONS = 200
REL_TOL = 1e-9


def bisect_decreasing(
        fn: Callable[[float], float],
        target: float,
        center: float,
        half_width: float = 1.0,
        rel_tol: float = REL_TOL,
        t: Optional[int] = None,
) -> float:
    """
    Root of fn(m) = target for a strictly decreasing fn.

    The bracket starts at center +- half_width and each side is doubled outward, at most
    MAX_DOUBLINGS times, until fn straddles the target. Bisection then runs until the bracket
    is narrower than rel_tol * (1 + |m|).

    Parameters:
    - fn (callable): strictly decreasing map.
    - target (float): value to solve for.
    - center (float): initial bracket center, typically the lambda-weighted mean.
    - half_width (float): initial bracket half-width.
    - t (int): stream index, only reported in diagnostics.

    Returns:
    - float: the root, the midpoint of the final bracket.
    """
    width = max(half_width, 1.0)
    lo, hi = center - width, center + width
    f_lo, f_hi = fn(lo), fn(hi)

    doublings = 0
    while f_lo < target:
        if doublings >= MAX_DOUBLINGS:
            raise RootFindingError("lower bracket expansion failed",
                                   {"target": target, "bracket": (lo, hi), "f_lo": f_lo, "t": t})
        width *= 2.0
        lo = center - width
        f_lo = fn(lo)
        doublings += 1
    doublings = 0
    width = max(half_width, 1.0)
    while f_hi > target:
        if doublings >= MAX_DOUBLINGS:
            raise RootFindingError("upper bracket expansion failed",
                                   {"target": target, "bracket": (lo, hi), "f_hi": f_hi, "t": t})
        width *= 2.0
        hi = center + width
        f_hi = fn(hi)
        doublings += 1

    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rel_tol * (1.0 + abs(mid)):
            return mid
        if fn(mid) > target:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    log.debug(f"bisection stopped after {MAX_BISECTIONS} steps at bracket [{lo!r}, {hi!r}]")
    if not math.isfinite(mid):
        raise RootFindingError("bisection did not converge", {"target": target, "bracket": (lo, hi), "t": t})
    return mid
