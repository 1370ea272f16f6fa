"""Golden-section search over continuous or integer intervals."""

from __future__ import annotations

import math

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(score, lo: float, hi: float, tol: float,
                   integer: bool = False, max_iter: int = 200):
    """Minimize a unimodal 1-d function by golden-section search.

    `score` is called with candidate points (rounded when `integer`); every
    evaluation is memoized and recorded. Returns (best_x, best_score, trace)
    where trace is the list of (x, score) pairs in evaluation order.

    Raises ValueError when the criterion is non-finite over the whole
    interval.
    """
    if hi < lo:
        lo, hi = hi, lo
    memo: dict[float, float] = {}
    trace: list[tuple[float, float]] = []

    def eval_at(x):
        x = float(round(x)) if integer else float(x)
        x = min(max(x, lo), hi)
        if x not in memo:
            s = float(score(int(x) if integer else x))
            memo[x] = s
            trace.append((x, s))
        return memo[x]

    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = eval_at(c), eval_at(d)
    it = 0
    while (b - a) > tol and it < max_iter:
        if fc < fd or (math.isnan(fd) and not math.isnan(fc)):
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = eval_at(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = eval_at(d)
        it += 1
    eval_at(lo)
    eval_at(hi)
    finite = {x: s for x, s in memo.items() if math.isfinite(s)}
    if not finite:
        raise ValueError("criterion is non-finite over the whole search interval")
    best_x = min(finite, key=lambda x: (finite[x], x))
    return (int(best_x) if integer else best_x), finite[best_x], trace
