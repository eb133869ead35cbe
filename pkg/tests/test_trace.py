import math

import numpy as np
import pytest

from coverlab.expr import parse_map
from coverlab.metric import SphericalDisk, chordal_distance
from coverlab.count import find_islands
from coverlab.trace import (
    AmbiguityError,
    GraphPlacementError,
    GraphSpec,
    ImplicitCurve,
    RectangleChart,
    TransversalityError,
    arc_test_integral,
    build_preimage_graph,
    classify_arcs,
    complement_components,
    export_json,
    export_svg,
    level_fidelity,
    make_unit_bump,
    select_perturbation,
    trace_preimage,
)

CHART = RectangleChart(1, 0, 0, 1, x_range=(0.7, 1.3), t_range=(-0.1, 0.1))


def test_chart_validation():
    with pytest.raises(ValueError):
        RectangleChart(1, 2, 1, 2, x_range=(0, 1), t_range=(0, 1))  # ad - bc = 0
    with pytest.raises(ValueError):
        RectangleChart(1, 0, 0, 1, x_range=(1, 0), t_range=(0, 1))


def test_chart_round_trip():
    w = 0.3 - 1.2j
    chart = RectangleChart(2, 1j, 0.5, 1, x_range=(-1, 1), t_range=(-0.2, 0.2))
    assert abs(chart.inverse(chart.apply(w)) - w) < 1e-12


# ---------------------------------------------------------------------------
# tracing


def test_trace_square_preimage_of_unit_circle():
    m = parse_map("z^2")
    curve = ImplicitCurve.circle(0, chordal_distance(0, 1.0))
    pls = trace_preimage(m, curve, 2.0, 256)
    assert len(pls) == 1
    assert pls[0].closed
    assert np.abs(np.abs(pls[0].points) - 1.0).max() < 1e-3


def test_trace_triple_cover_loops():
    m = parse_map("z^3")
    curve = ImplicitCurve.circle(1, 0.05)
    pls = trace_preimage(m, curve, 2.0, 256)
    assert len(pls) == 3
    assert all(p.closed for p in pls)
    roots = [np.exp(2j * math.pi * k / 3) for k in range(3)]
    for pl in pls:
        center = pl.points.mean()
        assert min(abs(center - w) for w in roots) < 0.05


def test_trace_identity_reproduces_curve():
    m = parse_map("z")
    curve = ImplicitCurve.circle(0.3 + 0.2j, 0.08)
    pls = trace_preimage(m, curve, 2.0, 256)
    assert level_fidelity(m, curve, pls) < 1e-3


def test_trace_resolution_validation():
    with pytest.raises(ValueError):
        trace_preimage(parse_map("z"), ImplicitCurve.circle(0, 0.1), 1.0, 32)


def test_trace_ambiguity_error_mode():
    # the lemniscate node is a genuine saddle of the level function; rotate
    # the source by 45 degrees so the saddle sectors align with the grid and
    # the ambiguous cell survives every subdivision depth
    m = parse_map("(0.7071067811865476+0.7071067811865476i)*z")
    curve = ImplicitCurve.lemniscate(0.0103 + 0.0117j, 0.5)
    with pytest.raises(AmbiguityError):
        trace_preimage(m, curve, 2.0, 64, on_ambiguous="error")
    pls = trace_preimage(m, curve, 2.0, 64, on_ambiguous="resolve")
    assert len(pls) >= 1


# ---------------------------------------------------------------------------
# classification


def test_classify_triple_cover():
    m = parse_map("z^3")
    curve = ImplicitCurve.circle(1, 0.05)
    pls = trace_preimage(m, curve, 2.0, 256)
    assert classify_arcs(pls, m, curve, 2.0) == (3, 0, 0)


def test_classify_critical_curve_suspect():
    m = parse_map("z^2")
    curve = ImplicitCurve.circle(0.3, chordal_distance(0.3, 0))  # passes through w=0
    pls = trace_preimage(m, curve, 2.0, 256, on_ambiguous="resolve")
    good, bad, suspect = classify_arcs(pls, m, curve, 2.0)
    assert suspect > 0


def test_classify_exp_segment():
    m = parse_map("exp(z)")
    seg = ImplicitCurve.segment(CHART, 0.0)
    pls = trace_preimage(m, seg, 20.0, 512)
    good, bad, suspect = classify_arcs(pls, m, seg, 20.0)
    assert good == 7
    assert bad <= 2
    assert suspect == 0


def test_classify_conservation():
    m = parse_map("z^3")
    seg = ImplicitCurve.segment(CHART, 0.0)
    pls = trace_preimage(m, seg, 2.0, 256)
    good, bad, suspect = classify_arcs(pls, m, seg, 2.0)
    assert good + bad + suspect == len(pls)


# ---------------------------------------------------------------------------
# perturbation selection / coarea


def test_select_perturbation_far_boundary():
    # boundary image of z^3 at r=2 is |w| = 8, far outside the chart
    t, lhs, rhs = select_perturbation(parse_map("z^3"), 2.0, CHART, 500)
    assert lhs == 0.0 and rhs == 0.0
    assert CHART.t_range[0] <= t <= CHART.t_range[1]


def test_coarea_identity_crossing():
    # |z| = 1 crosses the rectangle with one strand of vertical extent 0.2
    t, lhs, rhs = select_perturbation(parse_map("z"), 1.0, CHART, 500)
    assert abs(lhs - 0.2) < 1e-9
    assert abs(lhs - rhs) <= 0.02 * max(rhs, 1.0)


def test_coarea_exp():
    t, lhs, rhs = select_perturbation(parse_map("exp(z)"), 6.0, CHART, 1000)
    assert abs(lhs - rhs) <= 0.02 * max(rhs, 1.0)


def test_select_perturbation_validates_samples():
    with pytest.raises(ValueError):
        select_perturbation(parse_map("z"), 1.0, CHART, 50)


def test_transversality_error_flat_crossings():
    # near w = i the circle |w| = 1 is almost horizontal: every candidate
    # line in this sliver is crossed flatter than the 5 degree margin
    thin = RectangleChart(1, 0, 0, 1, x_range=(-0.05, 0.05), t_range=(0.999, 0.9999))
    with pytest.raises(TransversalityError):
        select_perturbation(parse_map("z"), 1.0, thin, 100)


# ---------------------------------------------------------------------------
# arc test integral


def test_arc_integral_triple():
    val = arc_test_integral(parse_map("z^3"), CHART, 0.0, 2.0)
    assert abs(val - 3.0) < 1e-6


def test_arc_integral_identity():
    val = arc_test_integral(parse_map("z"), CHART, 0.0, 5.0)
    assert abs(val - 1.0) < 1e-6


def test_arc_integral_unit_weight_precondition():
    beta = make_unit_bump(CHART.x_range)

    def double_beta(x):
        return 2.0 * beta(x)

    with pytest.raises(ValueError, match="not 1"):
        arc_test_integral(parse_map("z"), CHART, 0.0, 5.0, beta_profile=double_beta)


# ---------------------------------------------------------------------------
# graph preimages


def test_build_graph_z3():
    g8 = GraphSpec(node=0.5j, scale=0.5)
    pg = build_preimage_graph(parse_map("z^3"), g8, 3.0, 512)
    assert len(pg.vertices) == 3
    assert sum(1 for a in pg.arcs if a.tag == "good") == 6
    assert pg.euler == -3


def test_build_graph_identity():
    g8 = GraphSpec(node=0.5j, scale=0.5)
    pg = build_preimage_graph(parse_map("z"), g8, 2.0, 512)
    assert len(pg.vertices) == 1
    assert pg.euler == -1


def test_build_graph_bad_arcs_small_radius():
    g8 = GraphSpec(node=0.5j, scale=0.5)
    pg = build_preimage_graph(parse_map("z^3"), g8, 0.9, 512)
    assert any(a.tag == "bad" for a in pg.arcs)


def test_graph_placement_guard():
    # node directly at a critical value of z^2 (w = 0)
    g8 = GraphSpec(node=0.0j + 1e-9, scale=0.5)
    with pytest.raises(GraphPlacementError):
        build_preimage_graph(parse_map("z^2"), g8, 2.0, 256)


# ---------------------------------------------------------------------------
# complement components


def test_complement_identity_figure_eight():
    g8 = GraphSpec(node=0.5j, scale=0.5)
    m = parse_map("z")
    pg = build_preimage_graph(m, g8, 2.0, 512)
    comps = complement_components(pg, 2.0, 512)
    interior = [c for c in comps.components if not c.touches_boundary]
    boundary = [c for c in comps.components if c.touches_boundary]
    assert sorted(c.chi for c in interior) == [1, 1]
    assert sum(c.chi for c in boundary) == 0
    assert {c.face for c in interior} == {"lobe-", "lobe+"}


def test_complement_chi_bounds():
    # interior components satisfy chi <= 1, boundary-touching ones chi <= 0
    g8 = GraphSpec(node=0.5j, scale=0.5)
    for src, r in (("z", 2.0), ("z^2", 3.0), ("z^3", 3.0)):
        pg = build_preimage_graph(parse_map(src), g8, r, 512)
        comps = complement_components(pg, r, 512)
        for c in comps.components:
            if c.touches_boundary:
                assert c.chi <= 0
            else:
                assert c.chi <= 1


@pytest.mark.parametrize(
    "src,r",
    [("z", 2.0), ("z^2", 4.0), ("z^3", 3.0), ("z^3", 0.9), ("z^5", 2.0)],
)
def test_euler_identity_exact(src, r):
    g8 = GraphSpec(node=0.5j, scale=0.5)
    pg = build_preimage_graph(parse_map(src), g8, r, 512)
    comps = complement_components(pg, r, 512)
    chi_c0 = sum(c.chi for c in comps.components if c.touches_boundary)
    sum_chi_c = sum(c.chi for c in comps.components if not c.touches_boundary)
    assert chi_c0 + pg.euler + sum_chi_c == 1


def test_euler_identity_exp():
    g8 = GraphSpec(node=0.25j, scale=1.0)
    pg = build_preimage_graph(parse_map("exp(z)"), g8, 20.0, 512)
    comps = complement_components(pg, 20.0, 512)
    chi_c0 = sum(c.chi for c in comps.components if c.touches_boundary)
    sum_chi_c = sum(c.chi for c in comps.components if not c.touches_boundary)
    assert chi_c0 + pg.euler + sum_chi_c == 1


# ---------------------------------------------------------------------------
# exports


def test_exports(tmp_path):
    g8 = GraphSpec(node=0.5j, scale=0.5)
    m = parse_map("z^3")
    pg = build_preimage_graph(m, g8, 3.0, 256)
    comps = complement_components(pg, 3.0, 256)
    islands, _ = find_islands(m, SphericalDisk.of(g8.foci[1], 0.055), 3.0, 256)
    svg = export_svg(tmp_path / "g.svg", 3.0, graph=pg, islands=islands)
    assert svg.startswith("<svg")
    assert "polyline" in svg
    doc = export_json(tmp_path / "g.json", graph=pg, components=comps, islands=islands)
    assert '"euler": -3' in doc
    # identical second write (determinism)
    doc2 = export_json(tmp_path / "g2.json", graph=pg, components=comps, islands=islands)
    assert doc == doc2
