import math

import numpy as np
import pytest

from coverlab.expr import parse_map
from coverlab.count import (
    IslandRecord,
    RootOnCircleError,
    count_preimages,
    find_islands,
    find_roots,
    island_degree,
    mean_degree,
    multiplicity_count,
    total_ramification,
)
from coverlab.metric import SphericalDisk, area

RHO = 0.2 / math.sqrt(math.pi)  # the standard disk radius used throughout


def test_count_cube_roots():
    assert count_preimages(parse_map("z^3"), 8, 3.0) == 3


def test_count_distinct_vs_multiplicity():
    m = parse_map("z^2")
    assert count_preimages(m, 0, 1.0) == 1
    assert multiplicity_count(m, 0, 1.0) == 2


def test_count_exp_lattice():
    me = parse_map("exp(z)")
    assert count_preimages(me, 1, 20.0) == 7  # z = 2 pi i k, |k| <= 3
    assert count_preimages(me, "inf", 20.0) == 0


def test_count_rational_poles_and_values():
    mr = parse_map("(z^2-1)/(z^2+1)")
    assert count_preimages(mr, "inf", 10.0) == 2
    assert count_preimages(mr, 0, 10.0) == 2
    assert count_preimages(mr, 3, 10.0) == 2
    # the value 1 is attained only at z = infinity
    assert count_preimages(mr, 1, 10.0) == 0


def test_root_on_circle_error():
    with pytest.raises(RootOnCircleError):
        count_preimages(parse_map("z^3"), 8, 2.0)


def test_find_roots_locations():
    roots = find_roots(parse_map("z^3"), 8, 3.0)
    locs = sorted((r.location for r in roots), key=lambda z: (round(z.real, 6), round(z.imag, 6)))
    targets = sorted(
        (2 * np.exp(2j * math.pi * k / 3) for k in range(3)),
        key=lambda z: (round(z.real, 6), round(z.imag, 6)),
    )
    for got, want in zip(locs, targets):
        assert abs(got - want) < 1e-9
    assert all(r.multiplicity == 1 for r in roots)


def test_find_roots_multiple_root():
    roots = find_roots(parse_map("z^5"), 0, 10.0)
    assert len(roots) == 1
    assert roots[0].multiplicity == 5
    assert abs(roots[0].location) < 1e-3


def test_mean_degree_constant_cover():
    md = mean_degree(parse_map("z^3"), 10.0, 200, seed=11)
    assert md.mean == pytest.approx(3.0, abs=0.02)


def test_mean_degree_identity():
    md = mean_degree(parse_map("z"), 1.0, 600, seed=3)
    a = area(parse_map("z"), 1.0)
    assert abs(md.mean - a) <= 3 * md.stderr + 0.02 * a


def test_mean_degree_stderr_scaling():
    m = parse_map("z")
    s1 = mean_degree(m, 1.0, 200, seed=1).stderr
    s2 = mean_degree(m, 1.0, 800, seed=1).stderr
    assert s2 < s1  # ~ 1/2 in expectation


def test_mean_degree_validates_samples():
    with pytest.raises(ValueError):
        mean_degree(parse_map("z"), 1.0, 50, seed=0)


# ---------------------------------------------------------------------------
# Islands


def test_islands_z5_standard_disks():
    m = parse_map("z^5")
    per_disk = []
    for center in (0, 1, "inf"):
        isl, ambiguous = find_islands(m, SphericalDisk.of(center, RHO), 10.0, 512)
        assert ambiguous == 0
        per_disk.append(isl)
    assert [len(d) for d in per_disk] == [1, 5, 0]
    over_zero = per_disk[0][0]
    assert over_zero.degree == 5
    assert over_zero.chi == 1
    assert over_zero.ramification == 4
    assert all(rec.degree == 1 for rec in per_disk[1])


def test_islands_exp_thirteen():
    m = parse_map("exp(z)")
    total = 0
    for center in (1, -1, "inf"):
        isl, ambiguous = find_islands(m, SphericalDisk.of(center, RHO), 20.0, 512)
        assert ambiguous == 0
        total += len(isl)
    assert total == 13


def test_islands_identity():
    isl, ambiguous = find_islands(parse_map("z"), SphericalDisk.of(0, RHO), 2.0, 256)
    assert ambiguous == 0
    assert len(isl) == 1
    assert isl[0].degree == 1
    assert isl[0].ramification == 0


def test_islands_resolution_stability():
    m = parse_map("z^5")
    counts = []
    for res in (256, 512):
        counts.append(
            sum(
                len(find_islands(m, SphericalDisk.of(c, RHO), 10.0, res)[0])
                for c in (0, 1, "inf")
            )
        )
    assert counts[0] == counts[1] == 6


def test_island_degree_independent_recompute():
    m = parse_map("z^5")
    isl, _ = find_islands(m, SphericalDisk.of(0, RHO), 10.0, 512)
    assert island_degree(m, isl[0], 0) == 5


def test_island_boundary_properness():
    m = parse_map("z^5")
    isl, _ = find_islands(m, SphericalDisk.of(1, RHO), 10.0, 512)
    for rec in isl:
        assert np.abs(rec.boundary).max() < 10.0 * (1 - 10.0 / 512)


def test_degree_sum_vs_count_with_multiplicity():
    m = parse_map("z^5")
    for center in (0, 1):
        isl, _ = find_islands(m, SphericalDisk.of(center, RHO), 10.0, 512)
        degree_sum = sum(rec.degree for rec in isl)
        assert degree_sum <= multiplicity_count(m, center, 10.0)
        assert degree_sum == multiplicity_count(m, center, 10.0)


def test_total_ramification():
    m = parse_map("z^5")
    records = []
    for center in (0, 1, "inf"):
        records.extend(find_islands(m, SphericalDisk.of(center, RHO), 10.0, 512)[0])
    assert total_ramification(records) == 4
    assert total_ramification([]) == 0


def test_ramification_zero_without_critical_points():
    m = parse_map("exp(z)")
    records = []
    for center in (1, -1):
        records.extend(find_islands(m, SphericalDisk.of(center, RHO), 20.0, 512)[0])
    assert total_ramification(records) == 0
