"""
Compiled event sweeps over a graphical representation.

All functions take the merged, time-sorted event arrays of a rep
(`times`, `kinds`, `src`, `dst`) and a half-open index range [lo, hi) into
them.  A cross kills `src`; an arrow infects `dst` from `src`.
"""

from __future__ import annotations

import numpy as np
from numba import njit

CROSS = 0
ARROW = 1


@njit(cache=True)
def sweep_forward(kinds, src, dst, state, lo, hi):
    for e in range(lo, hi):
        if kinds[e] == CROSS:
            state[src[e]] = False
        elif state[src[e]]:
            state[dst[e]] = True


@njit(cache=True)
def sweep_backward(kinds, src, dst, state, lo, hi):
    """Dual sweep: events in reverse order, arrows followed against their direction."""
    for e in range(hi - 1, lo - 1, -1):
        if kinds[e] == CROSS:
            state[src[e]] = False
        elif state[dst[e]]:
            state[src[e]] = True


@njit(cache=True)
def sweep_slab(times, kinds, src, dst, coord0, state, lo, hi, half_width, speed, offset):
    """Forward sweep keeping only arrows with both endpoints inside the moving slab."""
    for e in range(lo, hi):
        if kinds[e] == CROSS:
            state[src[e]] = False
        elif state[src[e]]:
            centre = offset + speed * times[e]
            if abs(coord0[src[e]] - centre) <= half_width and abs(coord0[dst[e]] - centre) <= half_width:
                state[dst[e]] = True


@njit(cache=True)
def sweep_record(times, kinds, src, dst, state, lo, hi, out_times, out_sites, out_values):
    """Forward sweep that logs every actual change of `state`; returns the log length."""
    n = 0
    for e in range(lo, hi):
        if kinds[e] == CROSS:
            site = src[e]
            if state[site]:
                state[site] = False
                out_times[n] = times[e]
                out_sites[n] = site
                out_values[n] = False
                n += 1
        elif state[src[e]]:
            site = dst[e]
            if not state[site]:
                state[site] = True
                out_times[n] = times[e]
                out_sites[n] = site
                out_values[n] = True
                n += 1
    return n


@njit(cache=True)
def sweep_pair_ordered(kinds, src, dst, lower, upper, lo, hi):
    """Sweep two states in lockstep; False if lower <= upper ever fails on a touched site."""
    ordered = True
    for e in range(lo, hi):
        a = src[e]
        if kinds[e] == CROSS:
            lower[a] = False
            upper[a] = False
        else:
            b = dst[e]
            if lower[a]:
                lower[b] = True
            if upper[a]:
                upper[b] = True
            if lower[b] and not upper[b]:
                ordered = False
    return ordered


@njit(cache=True)
def sweep_window_discrepancy(times, kinds, src, dst, lower, upper, site, starts, width, lo, hi, horizon):
    """Flag, per window [start, start + width), whether lower and upper differ at `site`.

    Returns (hits, ordered) where `ordered` reports lower <= upper on every
    touched site.
    """
    hits = np.zeros(starts.shape[0], dtype=np.bool_)
    ordered = True
    current = 0.0
    for e in range(lo, hi + 1):
        until = horizon if e == hi else times[e]
        if lower[site] != upper[site]:
            for w in range(starts.shape[0]):
                if starts[w] < until and starts[w] + width > current:
                    hits[w] = True
        if e == hi:
            break
        a = src[e]
        if kinds[e] == CROSS:
            lower[a] = False
            upper[a] = False
        else:
            b = dst[e]
            if lower[a]:
                lower[b] = True
            if upper[a]:
                upper[b] = True
            if lower[b] and not upper[b]:
                ordered = False
        current = until
    return hits, ordered


@njit(cache=True)
def _cone_hit(counts, slope, t):
    # Any discrepant site with ‖x‖_1 < slope * t.
    n = 0
    while n < counts.shape[0] and n < slope * t:
        if counts[n] > 0:
            return True
        n += 1
    return False


@njit(cache=True)
def sweep_cone_discrepancy(times, kinds, src, dst, norms, first, second, slope, lo, hi, horizon, step, exact):
    """Latest time at which `first` and `second` differ inside the cone ‖x‖_1 < slope·t.

    With `exact` the state is inspected on every inter-event interval and the
    returned value is the supremum of such times; otherwise only on the grid
    0, step, 2·step, ... .  Returns -1.0 when no discrepancy is ever seen.
    """
    counts = np.zeros(norms.max() + 1, dtype=np.int64)
    for x in range(first.shape[0]):
        if first[x] != second[x]:
            counts[norms[x]] += 1
    latest = -1.0
    current = 0.0
    grid = 0
    for e in range(lo, hi + 1):
        until = horizon if e == hi else times[e]
        if exact:
            if _cone_hit(counts, slope, until):
                latest = until
        else:
            while grid * step < until or (e == hi and grid * step <= horizon):
                t = grid * step
                if t >= current and _cone_hit(counts, slope, t):
                    latest = t
                grid += 1
        if e == hi:
            break
        a = src[e]
        if kinds[e] == CROSS:
            touched = a
            before = first[a] != second[a]
            first[a] = False
            second[a] = False
        else:
            touched = dst[e]
            before = first[touched] != second[touched]
            if first[a]:
                first[touched] = True
            if second[a]:
                second[touched] = True
        after = first[touched] != second[touched]
        if before and not after:
            counts[norms[touched]] -= 1
        elif after and not before:
            counts[norms[touched]] += 1
        current = until
    return latest
