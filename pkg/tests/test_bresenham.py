import math

from hypothesis import given, strategies as st

from emberlearn.bresenham import rasterize_line


def oracle_chain(p0, p1, samples_per_cell=100):
    """Dense sampling of the ideal segment, snapped with the Bresenham tie rule.

    The segment is sampled at 1/samples_per_cell-cell resolution along its
    major axis; the minor coordinate of the sample sitting on each integer
    major index is rounded to the nearest cell, with exact half-cell ties
    resolved toward the p0 side (the same decision Bresenham's integer error
    test makes).
    """
    (r0, c0), (r1, c1) = p0, p1
    dr, dc = r1 - r0, c1 - c0
    n = max(abs(dr), abs(dc))
    if n == 0:
        return [p0]
    total = n * samples_per_cell
    chain = []
    for k in range(n + 1):
        t = (k * samples_per_cell) / total  # the sample exactly at major index k
        pr, pc = r0 + t * dr, c0 + t * dc
        if abs(dc) >= abs(dr):
            cell = (snap_toward(pr, r0), c0 + k * (1 if dc >= 0 else -1))
        else:
            cell = (r0 + k * (1 if dr >= 0 else -1), snap_toward(pc, c0))
        chain.append(cell)
    return chain


def snap_toward(value, origin):
    """Round to nearest integer; exact .5 ties go toward the origin."""
    lo = math.floor(value)
    frac = value - lo
    if abs(frac - 0.5) < 1e-9:
        return lo if origin <= lo else lo + 1
    return lo if frac < 0.5 else lo + 1


def test_zero_length_segment():
    assert rasterize_line((3, 3), (3, 3)) == [(3, 3)]


def test_axis_aligned_segment():
    assert rasterize_line((0, 0), (5, 0)) == [(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (5, 0)]
    assert rasterize_line((2, 7), (2, 4)) == [(2, 7), (2, 6), (2, 5), (2, 4)]


def test_known_diagonalish_case():
    assert rasterize_line((0, 0), (4, 3)) == [(0, 0), (1, 1), (2, 1), (3, 2), (4, 3)]


def test_exhaustive_oracle_in_16_box():
    for r0 in range(16):
        for c0 in range(16):
            for r1 in range(16):
                for c1 in range(16):
                    got = rasterize_line((r0, c0), (r1, c1))
                    want = oracle_chain((r0, c0), (r1, c1))
                    assert got == want, f"({r0},{c0})->({r1},{c1}): {got} != {want}"


@given(
    st.tuples(st.integers(-40, 40), st.integers(-40, 40)),
    st.tuples(st.integers(-40, 40), st.integers(-40, 40)),
)
def test_chain_properties(p0, p1):
    chain = rasterize_line(p0, p1)
    assert chain[0] == p0 and chain[-1] == p1
    assert len(chain) == max(abs(p1[0] - p0[0]), abs(p1[1] - p0[1])) + 1
    assert len(set(chain)) == len(chain)
    for (ra, ca), (rb, cb) in zip(chain, chain[1:]):
        assert max(abs(rb - ra), abs(cb - ca)) == 1  # 8-connected, no repeats
