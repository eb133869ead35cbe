"""Preimage tracing of implicit curves and graphs in the source disk.

Curves on the target sphere are implicit level sets (circles in the chordal
metric, a lemniscate realizing the figure-eight, and horizontal chart
segments), so the preimage {G(f(z)) = c} is traced by marching squares on
an adaptive grid.  Graphs are traced curve by curve; polylines are split at
the preimages of crossing vertices, bad arcs (those meeting the boundary
circle) are deleted, and the Euler characteristic of what remains is V - E.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from coverlab import _march
from coverlab.expr import IndeterminateError, differentiate, evaluate, evaluate_array
from coverlab.metric import (
    SpherePoint,
    chordal_distance,
    chordal_distance_array,
)
from coverlab.count import (
    ContourPassesThroughRoot,
    WindingError,
    count_preimages,
    find_roots,
)

AmbiguityError = _march.AmbiguityError


class TransversalityError(ArithmeticError):
    """No horizontal line in the chart met the transversality margin."""


class GraphPlacementError(ValueError):
    """Graph crossing vertices sit too close to critical values."""


class ResolutionError(ArithmeticError):
    """Grid too coarse to separate arcs; retry with a finer resolution."""


# ---------------------------------------------------------------------------
# Target-side geometry


@dataclass(frozen=True)
class RectangleChart:
    """Moebius chart sending a curve neighborhood to a thin rectangle.

    zeta(w) = (a w + b) / (c w + d); the base arc is the segment t = 0,
    x in x_range, and perturbed arcs are the horizontal lines t = const.
    """

    a: complex
    b: complex
    c: complex
    d: complex
    x_range: tuple
    t_range: tuple

    def __post_init__(self):
        if self.a * self.d - self.b * self.c == 0:
            raise ValueError("moebius coefficients must satisfy ad - bc != 0")
        if not self.x_range[0] < self.x_range[1]:
            raise ValueError("empty x_range")
        if not self.t_range[0] < self.t_range[1]:
            raise ValueError("empty t_range")

    def apply(self, w):
        w = np.asarray(w, dtype=np.complex128)
        with np.errstate(all="ignore"):
            out = (self.a * w + self.b) / (self.c * w + self.d)
        if self.c != 0:
            out = np.where(np.isfinite(out), out, self.a / self.c)
        return out

    def inverse(self, zeta):
        zeta = np.asarray(zeta, dtype=np.complex128)
        with np.errstate(all="ignore"):
            return (self.d * zeta - self.b) / (-self.c * zeta + self.a)


@dataclass(frozen=True)
class ImplicitCurve:
    """A curve {G = level} on the target sphere.

    kinds:
      - "circle": chordal circle around `center` of radius `radius`
      - "lemniscate": {|(w - node)^2 - scale^2| = scale^2}, the figure-eight
        with node at `node` and foci node +- scale
      - "segment": horizontal chart line t = `t` within chart.x_range
    """

    kind: str
    center: SpherePoint | None = None
    radius: float = 0.0
    node: complex = 0j
    scale: float = 0.0
    chart: RectangleChart | None = None
    t: float = 0.0
    ccw: bool = True

    @classmethod
    def circle(cls, center, radius):
        return cls(kind="circle", center=SpherePoint.of(center), radius=float(radius))

    @classmethod
    def lemniscate(cls, node, scale):
        if scale <= 0:
            raise ValueError("lemniscate scale must be positive")
        return cls(kind="lemniscate", node=complex(node), scale=float(scale))

    @classmethod
    def segment(cls, chart, t=0.0):
        return cls(kind="segment", chart=chart, t=float(t))

    def field(self, ws):
        """G(w) - level, vectorized over a complex array of target values."""
        ws = np.asarray(ws, dtype=np.complex128)
        if self.kind == "circle":
            return chordal_distance_array(ws, self.center) - self.radius
        if self.kind == "lemniscate":
            with np.errstate(all="ignore"):
                u = (ws - self.node) ** 2 - self.scale**2
                g = np.abs(u) - self.scale**2
            return np.where(np.isfinite(g), g, 1e300)
        zeta = self.chart.apply(ws)
        return zeta.imag - self.t

    def level_scale(self):
        """Magnitude of the traced level, for fidelity tolerances."""
        if self.kind == "circle":
            return max(self.radius, 1e-6)
        if self.kind == "lemniscate":
            return self.scale**2
        return max(self.t_range_span(), 1e-6)

    def t_range_span(self):
        return (self.chart.t_range[1] - self.chart.t_range[0]) if self.chart else 0.0

    def parameter(self, ws):
        """Curve parameter of target values: angle for circles, x for segments."""
        ws = np.asarray(ws, dtype=np.complex128)
        if self.kind == "circle":
            c = self.center
            if c.is_infinity:
                with np.errstate(all="ignore"):
                    t = 1.0 / ws
                return np.angle(np.where(np.isfinite(t), t, 0))
            cv = c.value
            with np.errstate(all="ignore"):
                t = (ws - cv) / (1.0 + np.conj(cv) * ws)
            return np.angle(np.where(np.isfinite(t), t, 1))
        if self.kind == "segment":
            return self.chart.apply(ws).real
        raise ValueError("parameter() is defined for circle and segment curves")

    def in_parameter_range(self, ws):
        if self.kind != "segment":
            return np.ones(np.asarray(ws).shape, dtype=bool)
        x = self.chart.apply(ws).real
        return (x >= self.chart.x_range[0]) & (x <= self.chart.x_range[1])


@dataclass(frozen=True)
class GraphSpec:
    """A figure-eight graph on the sphere, realized as a lemniscate.

    One vertex (the node), two loop edges (the lobes); chi = -1.  The
    spherical complement has three faces: the two lobes and the outer face.
    """

    kind: str = "figure8"
    node: complex = 0.5j
    scale: float = 0.5

    def __post_init__(self):
        if self.kind != "figure8":
            raise ValueError(f"unsupported graph kind {self.kind!r}")
        if self.scale <= 0:
            raise ValueError("figure-eight scale must be positive")

    @property
    def chi(self):
        return -1

    @property
    def foci(self):
        return (self.node - self.scale, self.node + self.scale)

    def curves(self):
        return [ImplicitCurve.lemniscate(self.node, self.scale)]

    def vertex_points(self):
        return [self.node]

    def face_of(self, w):
        """'lobe-', 'lobe+' or 'outer' for a target point."""
        w = complex(w)
        u = (w - self.node) ** 2 - self.scale**2
        if abs(u) >= self.scale**2:
            return "outer"
        return "lobe+" if (w - self.node).real > 0 else "lobe-"


# ---------------------------------------------------------------------------
# Tracing


@dataclass
class Polyline:
    points: np.ndarray  # complex samples along the arc
    closed: bool
    touches_clip: bool  # was cut by the circle |z| = r
    resolution: int
    r: float
    cell_size: float

    def min_abs(self):
        return float(np.abs(self.points).min())

    def max_abs(self):
        return float(np.abs(self.points).max())


def trace_preimage(m, curve, r, resolution=512, on_ambiguous="error"):
    """Polylines of {z : |z| <= r, G(f(z)) = level} by marching squares.

    The initial grid is resolution x resolution over the bounding square;
    ambiguous saddle cells are subdivided up to 6 times.  A still-ambiguous
    cell raises (the caller perturbs the level) unless on_ambiguous is
    "resolve", which the graph pipeline uses because it re-splits arcs at
    vertex preimages anyway.  Output polylines are clipped at |z| = r and
    canonically ordered.
    """
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    R = r * (1.0 + 2.0 / resolution)

    def fieldfn(zs):
        return curve.field(evaluate_array(m, zs))

    chains = _march.extract(
        fieldfn, (-R, R, -R, R), resolution, resolution, on_ambiguous=on_ambiguous
    )
    out = []
    for ch in chains:
        pieces = _clip_to_disk(ch.points, ch.closed, r)
        for pts, closed, touched in pieces:
            if curve.kind == "segment":
                # the full level set spans the square; only the x-filtered
                # subpieces that actually reach the circle are clipped
                for sub in _filter_x_range(pts, m, curve):
                    if len(sub) >= 2:
                        sub_touched = bool(np.abs(sub).max() >= r * (1 - 1e-9))
                        out.append(
                            Polyline(sub, False, sub_touched, resolution, r, ch.cell_size)
                        )
            elif len(pts) >= 2:
                out.append(Polyline(pts, closed, touched, resolution, r, ch.cell_size))
    out.sort(key=lambda p: (p.points.real.min(), p.points.imag.min()))
    return out


def _clip_to_disk(points, closed, r):
    """Split a chain at the circle |z| = r; keep inside pieces."""
    pts = np.asarray(points)
    inside = np.abs(pts) <= r
    if inside.all():
        return [(pts, closed, False)]
    if not inside.any():
        return []
    if closed:
        # rotate so the chain starts outside, then cut runs
        first_out = int(np.argmin(inside))
        pts = np.roll(pts[:-1] if pts[0] == pts[-1] else pts, -first_out)
        inside = np.abs(pts) <= r
    pieces = []
    run = []
    prev_in = False
    for k, (z, isin) in enumerate(zip(pts, inside)):
        if isin:
            if not prev_in and k > 0:
                run.append(_circle_cut(pts[k - 1], z, r))
            run.append(z)
        else:
            if prev_in:
                run.append(_circle_cut(run[-1], z, r))
                if len(run) >= 2:
                    pieces.append((np.asarray(run), False, True))
                run = []
        prev_in = isin
    if len(run) >= 2:
        pieces.append((np.asarray(run), False, True))
    return pieces


def _circle_cut(z_in, z_out, r):
    """Point on |z| = r along the segment z_in -> z_out."""
    d = z_out - z_in
    a = abs(d) ** 2
    if a == 0:
        return z_in
    b = 2 * (z_in.real * d.real + z_in.imag * d.imag)
    c = abs(z_in) ** 2 - r * r
    disc = max(b * b - 4 * a * c, 0.0)
    t = (-b + math.sqrt(disc)) / (2 * a)
    t = min(1.0, max(0.0, t))
    return z_in + t * d


def _filter_x_range(pts, m, curve):
    """Enforce the chart x-range pointwise, splitting where it exits.

    Cut points are interpolated onto the exact range boundary so the kept
    pieces cover the full parameter interval.
    """
    x_of = curve.chart.apply(evaluate_array(m, pts)).real
    x0, x1 = curve.chart.x_range
    keep = (x_of >= x0) & (x_of <= x1)

    def edge_point(k_in, k_out):
        xin, xout = x_of[k_in], x_of[k_out]
        edge = x0 if xout < x0 else x1
        if xout == xin:
            return pts[k_in]
        tau = (edge - xin) / (xout - xin)
        tau = min(1.0, max(0.0, tau))
        return pts[k_in] + tau * (pts[k_out] - pts[k_in])

    pieces = []
    run = []
    for k, (z, ok) in enumerate(zip(pts, keep)):
        if ok:
            if not run and k > 0:
                run.append(edge_point(k, k - 1))
            run.append(z)
        elif run:
            run.append(edge_point(k - 1, k))
            pieces.append(np.asarray(run))
            run = []
    if run:
        pieces.append(np.asarray(run))
    return pieces


def level_fidelity(m, curve, polylines):
    """Worst |G(f(z)) - level| over all polyline sample points."""
    worst = 0.0
    for pl in polylines:
        vals = np.abs(curve.field(evaluate_array(m, pl.points)))
        worst = max(worst, float(vals.max()))
    return worst


# ---------------------------------------------------------------------------
# Arc classification


def classify_arcs(polylines, m, curve, r):
    """(good, bad, suspect) counts for the traced components of one arc.

    bad: meets the boundary margin band |z| >= r (1 - 10/resolution);
    good: stays interior, away from zeros of f', and covers the curve
    parameter exactly once, monotonically; suspect: everything else
    (near-critical components are never silently promoted).
    """
    dm = differentiate(m)
    good = bad = suspect = 0
    for pl in polylines:
        margin_r = r * (1.0 - 10.0 / pl.resolution)
        if pl.touches_clip or pl.max_abs() >= margin_r:
            bad += 1
            continue
        dvals = np.abs(evaluate_array(dm, pl.points))
        dvals = dvals[np.isfinite(dvals)]
        if len(dvals) == 0 or dvals.min() < 1e-4 * max(dvals.max(), 1e-280):
            suspect += 1
            continue
        if _covers_once(pl, m, curve):
            good += 1
        else:
            suspect += 1
    return good, bad, suspect


def _covers_once(pl, m, curve):
    ws = evaluate_array(m, pl.points)
    params = curve.parameter(ws)
    if curve.kind == "segment":
        x0, x1 = curve.chart.x_range
        width = x1 - x0
        span_ok = params.min() <= x0 + 0.02 * width and params.max() >= x1 - 0.02 * width
        d = np.diff(params)
        monotone = (d >= -0.01 * width).all() or (d <= 0.01 * width).all()
        return bool(span_ok and monotone)
    if curve.kind == "circle":
        if not pl.closed:
            return False
        d = np.diff(np.unwrap(params))
        total = d.sum()
        if abs(abs(total) - 2 * math.pi) > 0.05 * 2 * math.pi:
            return False
        backtrack = np.abs(d[np.sign(d) != np.sign(total)]).sum()
        return bool(backtrack < 0.02 * 2 * math.pi)
    return False


# ---------------------------------------------------------------------------
# Perturbation selection (coarea)


def _boundary_image_polyline(m, r, chart, n0=4096, budget=200_000):
    """f(|z| = r) sampled densely enough near the chart rectangle."""
    x0, x1 = chart.x_range
    t0, t1 = chart.t_range
    diag = math.hypot(x1 - x0, t1 - t0)
    fine = diag / 64.0

    thetas = np.linspace(0.0, 2 * math.pi, n0, endpoint=False)
    for _ in range(24):
        zs = r * np.exp(1j * thetas)
        zeta = chart.apply(evaluate_array(m, zs))
        nxt = np.roll(zeta, -1)
        steps = np.abs(nxt - zeta)
        near = _near_rect(zeta, chart, margin=2 * diag) | _near_rect(
            nxt, chart, margin=2 * diag
        )
        big = near & (steps > fine)
        if not big.any():
            return zeta
        if len(thetas) > budget:
            break
        th_next = np.roll(thetas, -1)
        th_next[-1] += 2 * math.pi
        mids = (thetas[big] + th_next[big]) / 2.0
        thetas = np.sort(np.concatenate([thetas, mids]))
    zs = r * np.exp(1j * thetas)
    return chart.apply(evaluate_array(m, zs))


def _near_rect(zeta, chart, margin):
    x0, x1 = chart.x_range
    t0, t1 = chart.t_range
    return (
        (zeta.real > x0 - margin)
        & (zeta.real < x1 + margin)
        & (zeta.imag > t0 - margin)
        & (zeta.imag < t1 + margin)
    )


def select_perturbation(m, r, chart, n_samples=1000):
    """Pick the horizontal chart line crossed least by the boundary image.

    Returns (t_star, coarea_lhs, coarea_rhs) where the coarea pair checks
    that the mean crossing count times |t_range| equals the projected
    vertical length (with multiplicity) of the boundary image inside the
    rectangle.  t_star additionally satisfies the transversality margin: no
    polyline vertex within 1e-3 |t_range| of the line, and no crossing
    flatter than 5 degrees.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    zeta = _boundary_image_polyline(m, r, chart)
    x0, x1 = chart.x_range
    t0, t1 = chart.t_range
    span = t1 - t0
    a = zeta
    b = np.roll(zeta, -1)

    # restrict to segments that could interact with the rectangle
    sel = (np.minimum(a.real, b.real) <= x1) & (np.maximum(a.real, b.real) >= x0)
    sel &= (np.minimum(a.imag, b.imag) <= t1) & (np.maximum(a.imag, b.imag) >= t0)
    a, b = a[sel], b[sel]

    # midpoint grid of candidate lines
    t_grid = t0 + (np.arange(n_samples) + 0.5) * span / n_samples
    counts = np.zeros(n_samples, dtype=int)
    rhs = 0.0
    for p, q in zip(a, b):
        lo, hi = sorted((p.imag, q.imag))
        lo_c, hi_c = max(lo, t0), min(hi, t1)
        if hi_c > lo_c or lo == hi:
            rhs += _clipped_vertical_variation(p, q, x0, x1, t0, t1)
        if hi <= lo:
            continue
        j0 = int(np.ceil((lo - t0) / span * n_samples - 0.5))
        j1 = int(np.floor((hi - t0) / span * n_samples - 0.5))
        if j1 < 0 or j0 > n_samples - 1:
            continue
        j0, j1 = max(j0, 0), min(j1, n_samples - 1)
        ts = t_grid[j0 : j1 + 1]
        xs = p.real + (q.real - p.real) * (ts - p.imag) / (q.imag - p.imag)
        hit = (xs >= x0) & (xs <= x1)
        counts[j0 : j1 + 1] += hit.astype(int)

    lhs = float(counts.mean() * span)

    # transversality: order candidate lines by crossing count and distance
    # from the vertex set / flat crossings
    margin = 1e-3 * span
    min_angle = math.radians(5.0)
    verts = np.concatenate([a, b]) if len(a) else np.array([], dtype=complex)
    order = np.lexsort((np.abs(t_grid - 0.5 * (t0 + t1)), counts))
    for j in order:
        t = float(t_grid[j])
        if len(verts):
            near_v = np.abs(verts.imag - t) < margin
            if near_v.any():
                continue
        ok = True
        for p, q in zip(a, b):
            lo, hi = sorted((p.imag, q.imag))
            if lo < t < hi:
                ang = math.atan2(abs(q.imag - p.imag), abs(q.real - p.real))
                if ang < min_angle:
                    ok = False
                    break
        if ok:
            return t, lhs, rhs
    raise TransversalityError(
        "every candidate line fails the transversality margin; enlarge t_range"
    )


def _clipped_vertical_variation(p, q, x0, x1, t0, t1):
    """|dt| of the part of segment p->q inside the rectangle."""
    if p.imag == q.imag:
        return 0.0
    taus = [0.0, 1.0]
    d = q - p
    for bound, comp in ((x0, "re"), (x1, "re"), (t0, "im"), (t1, "im")):
        den = d.real if comp == "re" else d.imag
        num = (bound - (p.real if comp == "re" else p.imag))
        if den != 0:
            tau = num / den
            if 0 < tau < 1:
                taus.append(tau)
    taus.sort()
    total = 0.0
    for u0, u1 in zip(taus, taus[1:]):
        mid = p + 0.5 * (u0 + u1) * d
        if x0 <= mid.real <= x1 and t0 <= mid.imag <= t1:
            total += abs((u1 - u0) * d.imag)
    return total


# ---------------------------------------------------------------------------
# Graph preimages


@dataclass
class Arc:
    points: np.ndarray
    tag: str  # good | bad | ramified-suspect
    endpoints: tuple  # (vertex index | None, vertex index | None)
    closed: bool


@dataclass
class PreimageGraph:
    arcs: list
    vertices: list  # complex preimages of the graph node(s)
    adjacency: list  # per arc: endpoint vertex indices
    euler: int
    r: float
    resolution: int
    map_source: str
    graph: GraphSpec

    @property
    def retained_arcs(self):
        return [a for a in self.arcs if a.tag != "bad"]


def build_preimage_graph(m, graph, r, resolution=512):
    """Trace the whole graph preimage and assemble Euler data.

    Vertex preimages are located by the argument-principle root finder and
    polished by Newton; polylines are cut where the target value enters a
    small ball around the node and the loose ends snap to vertices.  Bad
    arcs (meeting the boundary band) are deleted; euler = V - E counts the
    retained graph (closed loops carry an implicit vertex each).
    """
    margin_r = r * (1.0 - 10.0 / resolution)

    # crossing vertices must avoid critical values (else: perturb the node)
    dm = differentiate(m)
    try:
        crit_points = find_roots(dm, 0, r)
    except (WindingError, ContourPassesThroughRoot):
        crit_points = []
    for cp in crit_points:
        try:
            cv = evaluate(m, cp.location)
        except IndeterminateError:
            continue
        for w_star in graph.vertex_points():
            if chordal_distance(cv, w_star) < 1e-3:
                raise GraphPlacementError(
                    f"graph vertex {w_star!r} within 1e-3 of critical value {cv!r}; "
                    f"perturb the node parameter"
                )

    vertices = []
    for w_star in graph.vertex_points():
        for root in find_roots(m, w_star, r):
            if abs(root.location) < margin_r:
                vertices.append(root.location)

    curves = graph.curves()
    cut_radius = 0.08 * graph.scale
    arcs = []
    for curve in curves:
        polylines = trace_preimage(m, curve, r, resolution, on_ambiguous="resolve")
        for pl in polylines:
            arcs.extend(_cut_at_vertices(pl, m, graph, vertices, cut_radius))

    dm_abs_cache = {}
    final_arcs = []
    adjacency = []
    for pts, endpoint_ids, closed, touched in arcs:
        pl_max = float(np.abs(pts).max())
        if touched or pl_max >= margin_r:
            tag = "bad"
        else:
            dvals = np.abs(evaluate_array(dm, pts))
            dvals = dvals[np.isfinite(dvals)]
            if len(dvals) and dvals.min() < 1e-4 * max(dvals.max(), 1e-280):
                tag = "ramified-suspect"
            else:
                tag = "good"
        final_arcs.append(Arc(points=pts, tag=tag, endpoints=endpoint_ids, closed=closed))
        adjacency.append(endpoint_ids)

    retained = [a for a in final_arcs if a.tag != "bad"]
    n_edges = sum(1 for a in retained if not a.closed or a.endpoints[0] is not None)
    euler = len(vertices) - n_edges
    return PreimageGraph(
        arcs=final_arcs,
        vertices=vertices,
        adjacency=adjacency,
        euler=euler,
        r=r,
        resolution=resolution,
        map_source=m.source_text,
        graph=graph,
    )


def _cut_at_vertices(pl, m, graph, vertices, cut_radius):
    """Cut a polyline where f enters the node ball; snap ends to vertices.

    Returns tuples (points, (vid_a, vid_b), closed, touches_clip).
    """
    pts = pl.points
    ws = evaluate_array(m, pts)
    near_node = np.zeros(len(pts), dtype=bool)
    for w_star in graph.vertex_points():
        with np.errstate(all="ignore"):
            d = np.abs(ws - w_star)
        near_node |= np.where(np.isfinite(d), d, np.inf) < cut_radius

    if not near_node.any():
        vid = None
        return [(pts, (vid, vid), pl.closed, pl.touches_clip)]

    def snap(z):
        if not vertices:
            return None
        dists = [abs(z - v) for v in vertices]
        k = int(np.argmin(dists))
        return k

    pieces = []
    if pl.closed:
        base = pts[:-1] if len(pts) > 1 and pts[0] == pts[-1] else pts
        keep = ~near_node[: len(base)]
        if not keep.any():
            return []
        start = int(np.argmin(keep))  # first removed index
        base = np.roll(base, -start)
        keep = np.roll(keep, -start)
        run = []
        for z, ok in zip(base, keep):
            if ok:
                run.append(z)
            elif run:
                pieces.append(np.asarray(run))
                run = []
        if run:
            pieces.append(np.asarray(run))
        out = []
        for piece in pieces:
            va = snap(piece[0])
            vb = snap(piece[-1])
            arc_pts = piece
            if va is not None:
                arc_pts = np.concatenate([[vertices[va]], arc_pts])
            if vb is not None:
                arc_pts = np.concatenate([arc_pts, [vertices[vb]]])
            out.append((arc_pts, (va, vb), False, pl.touches_clip))
        return out
    keep = ~near_node
    run = []
    runs = []
    for z, ok in zip(pts, keep):
        if ok:
            run.append(z)
        elif run:
            runs.append((run, True))
            run = []
    if run:
        runs.append((run, False))
    out = []
    for k, (piece, cut_at_end) in enumerate(runs):
        piece = np.asarray(piece)
        cut_at_start = not (k == 0 and keep[0])
        va = snap(piece[0]) if cut_at_start else None
        vb = snap(piece[-1]) if cut_at_end else None
        arc_pts = piece
        if va is not None:
            arc_pts = np.concatenate([[vertices[va]], arc_pts])
        if vb is not None:
            arc_pts = np.concatenate([arc_pts, [vertices[vb]]])
        out.append((arc_pts, (va, vb), False, pl.touches_clip))
    return out


# ---------------------------------------------------------------------------
# Complement components


@dataclass
class ComplementComponent:
    chi: int
    touches_boundary: bool
    face: str
    sample_point: complex
    n_pixels: int
    label: int


@dataclass
class ComplementAnalysis:
    components: list
    label_grid: np.ndarray
    extent: float  # grid covers [-extent, extent]^2
    resolution: int

    def label_of_point(self, z):
        n = self.resolution
        i = int((z.real + self.extent) / (2 * self.extent) * n)
        j = int((z.imag + self.extent) / (2 * self.extent) * n)
        if not (0 <= i < n and 0 <= j < n):
            return 0
        return int(self.label_grid[j, i])

    def component_by_label(self, label):
        for comp in self.components:
            if comp.label == label:
                return comp
        return None


def complement_components(g, r, resolution=512):
    """Flood fill of the disk minus the retained arcs of a preimage graph.

    Per component: chi from the pixel complex (2 - #boundary curves for a
    planar piece), a boundary-touching flag, and the target face its map
    image covers.  Raises ResolutionError when two distinct arcs share a
    pixel corridor (the rasterization would merge their sides).
    """
    from coverlab.expr import parse_map

    m = parse_map(g.map_source)
    n = resolution
    h = 2.0 * r / n
    xs = -r + (np.arange(n) + 0.5) * h
    zz = xs[None, :] + 1j * xs[:, None]
    inside = np.abs(zz) <= r

    blocked = np.zeros((n, n), dtype=bool)
    owner = np.full((n, n), -1, dtype=int)
    conflict = []

    def paint(z, arc_id):
        i = int((z.real + r) / (2 * r) * n)
        j = int((z.imag + r) / (2 * r) * n)
        for dj in (-1, 0, 1):
            for di in (-1, 0, 1):
                jj, ii = j + dj, i + di
                if 0 <= jj < n and 0 <= ii < n:
                    blocked[jj, ii] = True
                    prev = owner[jj, ii]
                    if prev >= 0 and prev != arc_id:
                        conflict.append((prev, arc_id, zz[jj, ii]))
                    owner[jj, ii] = arc_id

    # vertices are part of the retained graph even when all their incident
    # arcs were deleted as bad; block them so isolated ones puncture C_0
    for v in g.vertices:
        i = int((v.real + r) / (2 * r) * n)
        j = int((v.imag + r) / (2 * r) * n)
        for dj in (-1, 0, 1):
            for di in (-1, 0, 1):
                if 0 <= j + dj < n and 0 <= i + di < n:
                    blocked[j + dj, i + di] = True

    retained = g.retained_arcs
    for arc_id, arc in enumerate(retained):
        pts = arc.points
        # supercover: resample each segment at sub-pixel steps
        for p, q in zip(pts[:-1], pts[1:]):
            steps = max(1, int(abs(q - p) / (0.5 * h)) + 1)
            for s in range(steps + 1):
                paint(p + (q - p) * s / steps, arc_id)

    if conflict:
        shared = {}
        for a_id, b_id, where in conflict:
            a, b = retained[a_id], retained[b_id]
            # arcs that legitimately meet at a common vertex may touch there
            common = set(v for v in a.endpoints if v is not None) & set(
                v for v in b.endpoints if v is not None
            )
            near_vertex = any(
                abs(where - g.vertices[v]) < 4 * h for v in common
            )
            if not near_vertex:
                shared[(min(a_id, b_id), max(a_id, b_id))] = where
        if shared:
            raise ResolutionError(
                f"arcs share a pixel corridor at {list(shared.values())[:3]!r}; "
                f"retry with a finer resolution"
            )

    free = inside & ~blocked
    labels, n_comp = ndimage.label(free)
    ring = inside & (np.abs(zz) > r - 2.5 * h)
    components = []
    for comp_id in range(1, n_comp + 1):
        comp = labels == comp_id
        npix = int(comp.sum())
        if npix == 0:
            continue
        chi = _march.mask_euler_characteristic(comp)
        touches = bool((comp & ring).any())
        # sample point far from the blocked set for a stable face probe
        dist = ndimage.distance_transform_cdt(comp)
        j, i = np.unravel_index(int(np.argmax(dist)), comp.shape)
        sample = complex(zz[j, i])
        try:
            w = evaluate(m, sample)
            # the point at infinity always lies in the outer face
            face = g.graph.face_of(w) if isinstance(w, complex) else "outer"
        except IndeterminateError:
            face = "outer"
        components.append(
            ComplementComponent(
                chi=chi,
                touches_boundary=touches,
                face=face,
                sample_point=sample,
                n_pixels=npix,
                label=comp_id,
            )
        )
    return ComplementAnalysis(
        components=components, label_grid=labels, extent=r, resolution=n
    )


# ---------------------------------------------------------------------------
# Test 1-form integral along a perturbed arc


def make_unit_bump(x_range):
    """Smooth weight on x_range with unit integral (cos^2 window)."""
    x0, x1 = x_range
    width = x1 - x0

    def beta(x):
        x = np.asarray(x, dtype=float)
        u = (x - x0) / width
        inside = (u >= 0) & (u <= 1)
        return np.where(inside, (2.0 / width) * np.sin(math.pi * u) ** 2, 0.0)

    return beta


def arc_test_integral(m, chart, t, r, beta_profile=None, n_nodes=24):
    """Integral of d_n(gamma_t(x)) beta(x) dx along the chart line t.

    beta_profile must integrate to 1 over x_range (checked); the result
    approximates the covering area a(r) when the arc has only good lifts.
    """
    x0, x1 = chart.x_range
    if beta_profile is None:
        beta_profile = make_unit_bump(chart.x_range)
    nodes, weights = np.polynomial.legendre.leggauss(64)
    xs = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * nodes
    total_mass = float(np.sum(beta_profile(xs) * weights) * 0.5 * (x1 - x0))
    if abs(total_mass - 1.0) > 1e-6:
        raise ValueError(
            f"beta_profile integrates to {total_mass!r} over x_range, not 1"
        )
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    xs = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * nodes
    total = 0.0
    for x, w in zip(xs, weights):
        target = complex(chart.inverse(complex(x, t)))
        d = count_preimages(m, target, r)
        total += w * float(beta_profile(np.array([x]))[0]) * d
    return total * 0.5 * (x1 - x0)


# ---------------------------------------------------------------------------
# Exports


def export_svg(path, r, graph=None, components=None, islands=None):
    """Static SVG render of the source disk: arcs, vertices, islands."""
    size = 800
    scale = size / (2.2 * r)

    def xy(z):
        return (
            (z.real + 1.1 * r) * scale,
            (1.1 * r - z.imag) * scale,
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<circle cx="{size/2}" cy="{size/2}" r="{r*scale}" fill="none" '
        f'stroke="#888" stroke-width="1"/>',
    ]
    styles = {
        "good": 'stroke="#1f77b4" stroke-width="1.5"',
        "bad": 'stroke="#d62728" stroke-width="1.2" stroke-dasharray="6 4"',
        "ramified-suspect": 'stroke="#ff7f0e" stroke-width="1.5" stroke-dasharray="2 3"',
    }
    if graph is not None:
        for arc in graph.arcs:
            pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in (xy(z) for z in arc.points))
            parts.append(f'<polyline points="{pts}" fill="none" {styles[arc.tag]}/>')
        for v in graph.vertices:
            x, y = xy(v)
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="#000"/>')
    if islands:
        for rec in islands:
            pts = " ".join(
                f"{x:.2f},{y:.2f}" for x, y in (xy(z) for z in rec.boundary)
            )
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="#2ca02c" stroke-width="1.5"/>'
            )
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


def export_json(path, graph=None, components=None, islands=None):
    """JSON document with arcs, tags, euler and the component table."""
    doc = {}
    if graph is not None:
        doc["euler"] = graph.euler
        doc["vertices"] = [[v.real, v.imag] for v in graph.vertices]
        doc["arcs"] = [
            {
                "tag": arc.tag,
                "closed": bool(arc.closed),
                "endpoints": [
                    None if e is None else int(e) for e in arc.endpoints
                ],
                "points": [[round(z.real, 9), round(z.imag, 9)] for z in arc.points],
            }
            for arc in graph.arcs
        ]
    if components is not None:
        doc["components"] = [
            {
                "chi": c.chi,
                "touches_boundary": c.touches_boundary,
                "face": c.face,
                "n_pixels": c.n_pixels,
            }
            for c in components.components
        ]
    if islands is not None:
        doc["islands"] = [
            {
                "disk_index": rec.disk_index,
                "chi": rec.chi,
                "degree": rec.degree,
                "ramification": rec.ramification,
                "centroid": [rec.centroid.real, rec.centroid.imag],
            }
            for rec in islands
        ]
    text = json.dumps(doc, sort_keys=True, indent=2)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    return text
