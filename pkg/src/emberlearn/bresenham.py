"""Integer line rasterization on the simulation grid.

The chain is the classic Bresenham walk from p0 to p1 inclusive, produced in
order without endpoint swapping so the traversal direction is part of the
contract.  At an exact half-cell tie the minor coordinate stays on the p0
side (the strict ``err > 0`` test), which is the rule the heat-transfer
segments and the ignition line both rely on for determinism.
"""

from __future__ import annotations

Cell = tuple[int, int]


def rasterize_line(p0: Cell, p1: Cell) -> list[Cell]:
    """8-connected cell chain from p0 to p1 inclusive."""
    r0, c0 = p0
    r1, c1 = p1
    dr = abs(r1 - r0)
    dc = abs(c1 - c0)
    sr = 1 if r1 >= r0 else -1
    sc = 1 if c1 >= c0 else -1
    cells: list[Cell] = []
    if dc >= dr:
        err = 2 * dr - dc
        r = r0
        c = c0
        for _ in range(dc + 1):
            cells.append((r, c))
            if err > 0:
                r += sr
                err -= 2 * dc
            err += 2 * dr
            c += sc
    else:
        err = 2 * dc - dr
        r = r0
        c = c0
        for _ in range(dr + 1):
            cells.append((r, c))
            if err > 0:
                c += sc
                err -= 2 * dr
            err += 2 * dc
            r += sr
    return cells
