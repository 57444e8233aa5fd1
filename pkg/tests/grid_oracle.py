"""Independent time-expanded search for the bundled grid objectives.

The objectives concatenate three windows.  Working the window arithmetic by
hand for the windows [0,2], [3,8] and [9,13] with two-tick holds gives:

* start cell held at ticks k0 and k0+1 for some k0 in {0, 1};
* region held at ticks a and a+1 for some a in [6, 10];
* goal held at ticks b and b+1 for some b in [21, 24].

The objective is settled at tick b+1.  This module only reads the grid text
and never touches the library.
"""

from __future__ import annotations

import itertools
from typing import Dict, Optional, Set, Tuple

Cell = Tuple[int, int]

START_OFFSETS = (0, 1)
REGION_TICKS = range(6, 11)
GOAL_TICKS = range(21, 25)


def read_grid(text: str):
    lines = [l.strip() for l in text.splitlines() if l.strip() and not l.startswith("#")]
    w, h = map(int, lines[0].split())
    cells = {}
    for r, row in enumerate(lines[1:1 + h]):
        for c, ch in enumerate(row[:w]):
            cells[(r, c)] = ch
    return cells


def _neighbours(cells, cell: Cell):
    r, c = cell
    for dr, dc in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
        nxt = (r + dr, c + dc)
        if cells.get(nxt, "X") != "X":
            yield nxt


def feasible(cells, allowed: Dict[int, Set[Cell]], last: int) -> bool:
    """Is there a walk of ticks 0..last staying inside ``allowed[t]`` whenever given?"""
    free = {rc for rc, ch in cells.items() if ch != "X"}
    layer = allowed.get(0, free) & free
    for t in range(1, last + 1):
        want = allowed.get(t, free)
        layer = {n for cell in layer for n in _neighbours(cells, cell) if n in want}
        if not layer:
            return False
    return bool(layer)


def _constraints(cells, start: Cell, k0: int, a: int, b: int) -> Dict[int, Set[Cell]]:
    region = {rc for rc, ch in cells.items() if ch == "R"}
    goal = {rc for rc, ch in cells.items() if ch == "G"}
    initial = {rc for rc, ch in cells.items() if ch == "I"}
    allowed: Dict[int, Set[Cell]] = {0: set(initial)}
    for t, group in ((k0, {start}), (k0 + 1, {start}), (a, region), (a + 1, region),
                     (b, goal), (b + 1, goal)):
        allowed[t] = allowed[t] & group if t in allowed else set(group)
    return allowed


def earliest_single(text: str) -> Optional[int]:
    """Earliest settle tick for one path (the flattened shortest-path objective)."""
    cells = read_grid(text)
    starts = sorted(rc for rc, ch in cells.items() if ch == "I")
    for b in GOAL_TICKS:
        for k0, a, s in itertools.product(START_OFFSETS, REGION_TICKS, starts):
            if feasible(cells, _constraints(cells, s, k0, a, b), b + 1):
                return b + 1
    return None


def earliest_pair(text: str) -> Optional[int]:
    """Earliest settle tick for two paths from different start cells sharing the windows."""
    cells = read_grid(text)
    starts = sorted(rc for rc, ch in cells.items() if ch == "I")
    for b in GOAL_TICKS:
        for k0, a in itertools.product(START_OFFSETS, REGION_TICKS):
            ok = {s for s in starts if feasible(cells, _constraints(cells, s, k0, a, b), b + 1)}
            if len(ok) >= 2:
                return b + 1
    return None
