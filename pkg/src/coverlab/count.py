"""Preimage counting, islands, covering degrees and ramification.

Root counting follows the argument principle: recursive subdivision of the
disk's bounding square, with the winding number of f - p along each cell
boundary deciding where roots are.  Cells whose winding vanishes are
discarded unless the boundary argument variation is large (which flags a
possible zero/pole cancellation inside, as happens for rational maps);
those are subdivided as well.  Isolated cells are polished by Newton.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from coverlab import _march
from coverlab.expr import (
    Const,
    IndeterminateError,
    MapExpr,
    Mul,
    Sub,
    as_fraction,
    differentiate,
    evaluate,
    evaluate_array,
)
from coverlab.metric import (
    SpherePoint,
    SphericalDisk,
    chordal_distance,
    chordal_distance_array,
    density_array,
    sample_sphere_uniform,
)

_MAX_CONTOUR_POINTS = 30_000
_VARIATION_THRESHOLD = 3.5 * math.pi
_SPLIT_FRACTIONS = (0.5, 0.53, 0.4617)


class WindingError(ArithmeticError):
    """Argument tracking failed to stabilize (step control exhausted)."""


class ContourPassesThroughRoot(ArithmeticError):
    """A sample on the contour was (numerically) a root or a pole."""


class RootOnCircleError(ArithmeticError):
    """A preimage sits on |z| = r within tolerance; perturb the radius."""


@dataclass(frozen=True)
class Root:
    location: complex
    multiplicity: int


def _winding_number(F, path, dF=None):
    """(winding, total variation) of arg F along a closed polygonal path.

    `path` is a list of complex corners (closed implicitly).  The initial
    sampling density per edge comes from the log-derivative |F'/F| (when
    `dF` is given), which bounds the rotation rate and prevents phase
    aliasing; points are then inserted until every step of arg is at most
    pi/4 AND every chord is short relative to |F| (so a step cannot hide a
    full extra turn).
    """
    corners = np.asarray(path, dtype=np.complex128)
    nseg = len(corners)
    nxt = np.roll(corners, -1)
    seg_len = np.abs(nxt - corners)

    def positions(tvals):
        base = np.floor(tvals).astype(int) % nseg
        frac = tvals - np.floor(tvals)
        a = corners[base]
        b = corners[(base + 1) % nseg]
        return a + frac * (b - a)

    if dF is not None:
        probe_t = np.concatenate(
            [np.arange(nseg), np.arange(nseg) + 0.5]
        )
        probe_z = positions(probe_t)
        with np.errstate(all="ignore"):
            pw = np.asarray(F(probe_z), dtype=np.complex128)
            pd = np.asarray(dF(probe_z), dtype=np.complex128)
            rate = np.abs(pd) / np.maximum(np.abs(pw), 1e-280)
        rate = np.where(np.isfinite(rate), rate, 1e30)
        edge_rate = np.maximum(
            np.maximum(rate[:nseg], np.roll(rate[:nseg], -1)), rate[nseg:]
        )
        n_per_edge = np.clip(
            np.ceil(seg_len * edge_rate / 0.35), 1, 3000
        ).astype(int)
        total = int(n_per_edge.sum())
        if total > 20000:
            n_per_edge = np.maximum(1, (n_per_edge * 20000) // total)
    else:
        n_per_edge = np.full(nseg, 4, dtype=int)

    ts = np.concatenate(
        [k + np.arange(n_per_edge[k]) / n_per_edge[k] for k in range(nseg)]
    )
    zs = positions(ts)
    ws = np.asarray(F(zs), dtype=np.complex128)
    diam = float(np.abs(corners - corners.mean()).max()) * 2.0 + 1e-300
    for _ in range(80):
        if not np.isfinite(ws).all():
            raise ContourPassesThroughRoot("pole on the contour")
        mags = np.abs(ws)
        if mags.min() <= 1e-290:
            raise ContourPassesThroughRoot("root on the contour")
        ph = np.angle(ws)
        dph = np.diff(ph, append=ph[0])
        dph = (dph + math.pi) % (2 * math.pi) - math.pi
        chord = np.abs(np.diff(ws, append=ws[:1]))
        neighbor_min = np.minimum(mags, np.roll(mags, -1))
        big = (np.abs(dph) > math.pi / 4) | (chord > 0.6 * neighbor_min)
        if not big.any():
            winding = dph.sum() / (2 * math.pi)
            nearest = round(winding)
            if abs(winding - nearest) > 0.1:
                raise WindingError(f"non-integer winding {winding}")
            return int(nearest), float(np.abs(dph).sum())
        # a segment that keeps flipping after shrinking to nothing is pinched
        # on a zero (or pole) of F sitting essentially on the path
        gaps = np.abs(np.diff(zs, append=zs[:1]))
        if (big & (gaps < 1e-13 * diam)).any():
            raise ContourPassesThroughRoot("root on the contour")
        if len(ts) > _MAX_CONTOUR_POINTS:
            raise WindingError("contour refinement budget exceeded")
        t_next = np.roll(ts, -1)
        t_next[-1] += nseg
        mid = (ts[big] + t_next[big]) / 2.0
        new_z = positions(mid % nseg)
        new_w = np.asarray(F(new_z), dtype=np.complex128)
        ts = np.concatenate([ts, mid])
        zs = np.concatenate([zs, new_z])
        ws = np.concatenate([ws, new_w])
        order = np.argsort(ts)
        ts, zs, ws = ts[order], zs[order], ws[order]
    raise WindingError("step control did not converge")


def _rect_path(x0, x1, y0, y1, n_per_side=6):
    pts = []
    for a, b in (
        (complex(x0, y0), complex(x1, y0)),
        (complex(x1, y0), complex(x1, y1)),
        (complex(x1, y1), complex(x0, y1)),
        (complex(x0, y1), complex(x0, y0)),
    ):
        for k in range(n_per_side):
            pts.append(a + (b - a) * k / n_per_side)
    return pts


def _newton_polish(target_root, q, z0, cell_size, max_iter=40):
    m, dm = target_root
    z = complex(z0)
    converged = False
    for _ in range(max_iter):
        try:
            fz = evaluate(m, z)
            dz = evaluate(dm, z)
        except ArithmeticError:
            return None
        if not isinstance(fz, complex) or not isinstance(dz, complex):
            return None
        if dz == 0:
            return None
        step = (fz - q) / dz
        if not (math.isfinite(step.real) and math.isfinite(step.imag)):
            return None
        z -= step
        if abs(step) < 1e-13 * (1.0 + abs(z)):
            converged = True
            break
    if not converged or abs(z - z0) > 3.0 * cell_size:
        return None
    return z


def _root_target(m, p):
    """Pole-free function whose zeros in the cell scheme are f^{-1}(p).

    Clearing denominators turns f = N/D into the entire target N - p D
    (or D itself for p at infinity), so cell windings are always >= 0 and
    zero/pole cancellation cannot hide roots.
    """
    p = SpherePoint.of(p)
    n_f, d_f = as_fraction(m)
    if p.is_infinity:
        target = d_f.root
    elif p.value == 0:
        target = n_f.root
    else:
        target = Sub(n_f.root, Mul(Const(complex(p.value)), d_f.root))
    from coverlab.expr import _print  # canonical text for error messages

    return MapExpr(root=target, source_text=_print(target))


def find_roots(m, p, r, isolation_rel=1e-5, max_cells=60_000):
    """Distinct solutions of f(z) = p with |z| < r (plus boundary guard).

    Returns Root records (location, multiplicity).  A root within 1e-7 * r
    of the circle |z| = r raises RootOnCircleError.
    """
    p = SpherePoint.of(p)
    g = _root_target(m, p)
    q = 0j
    dg = differentiate(g)

    def F(zs):
        return evaluate_array(g, zs)

    def dF(zs):
        return evaluate_array(dg, zs)

    isolation = max(isolation_rel * r, 1e-12)
    found = []
    cells = [0]

    def process(x0, x1, y0, y1, sink):
        """Recurse on one cell; roots go into `sink` (committed by caller).

        Raises ContourPassesThroughRoot up to the caller when this cell's
        own boundary hits a root, so the parent can re-split off-center.
        """
        cells[0] += 1
        if cells[0] > max_cells:
            raise WindingError("cell subdivision budget exceeded")
        size = max(x1 - x0, y1 - y0)
        w, var = _winding_number(F, _rect_path(x0, x1, y0, y1), dF=dF)
        if w <= 0 and (var < _VARIATION_THRESHOLD or size <= 4 * isolation):
            return
        if size <= isolation:
            if w > 0:
                sink.append(Root(complex((x0 + x1) / 2, (y0 + y1) / 2), w))
            return
        if w == 1:
            z = _newton_polish((g, dg), q, complex((x0 + x1) / 2, (y0 + y1) / 2), size)
            if (
                z is not None
                and x0 - 1e-12 <= z.real <= x1 + 1e-12
                and y0 - 1e-12 <= z.imag <= y1 + 1e-12
            ):
                sink.append(Root(z, 1))
                return
        last_error = None
        for attempt in range(len(_SPLIT_FRACTIONS)):
            frac = _SPLIT_FRACTIONS[attempt]
            xm = x0 + frac * (x1 - x0)
            ym = y0 + frac * (y1 - y0)
            local = []
            try:
                for bb in (
                    (x0, xm, y0, ym),
                    (xm, x1, y0, ym),
                    (x0, xm, ym, y1),
                    (xm, x1, ym, y1),
                ):
                    process(*bb, local)
            except ContourPassesThroughRoot as exc:
                last_error = exc
                continue  # a split line hit a root: re-split off-center
            sink.extend(local)
            return
        raise WindingError(f"could not avoid a root on subdivision lines: {last_error}")

    R = r * (1 + 1e-6)
    try:
        process(-R, R, -R, R, found)
    except ContourPassesThroughRoot:
        # root essentially on the inflated bounding square: inflate again
        found = []
        R = r * (1 + 7.3e-4)
        process(-R, R, -R, R, found)

    # cluster anything closer than the isolation scale
    merged = []
    for root in sorted(found, key=lambda rt: (rt.location.real, rt.location.imag)):
        for k, other in enumerate(merged):
            if abs(other.location - root.location) <= 2 * isolation:
                merged[k] = Root(other.location, other.multiplicity + root.multiplicity)
                break
        else:
            merged.append(root)

    inside = []
    for root in merged:
        d_to_circle = abs(abs(root.location) - r)
        if d_to_circle < 1e-7 * r:
            raise RootOnCircleError(
                f"preimage at {root.location!r} lies on |z| = {r}; perturb r"
            )
        if abs(root.location) >= r:
            continue
        # reject zeros shared with the cleared denominator (0/0 points of f)
        try:
            value = evaluate(m, root.location)
        except IndeterminateError:
            continue
        if chordal_distance(value, p) > 1e-5:
            continue
        inside.append(root)
    return inside


def count_preimages(m, p, r):
    """Number of DISTINCT solutions of f(z) = p in |z| < r."""
    return len(find_roots(m, p, r))


def multiplicity_count(m, p, r):
    """Solutions of f(z) = p in |z| < r counted with multiplicity."""
    return sum(rt.multiplicity for rt in find_roots(m, p, r))


@dataclass(frozen=True)
class MeanDegree:
    mean: float
    stderr: float
    n_samples: int
    n_resampled: int

    def __iter__(self):  # tuple-compatible: (mean, stderr)
        return iter((self.mean, self.stderr))


def mean_degree(m, r, n_samples, seed=0, resample_budget=None):
    """Monte-Carlo average of count_preimages over uniform sphere points."""
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    if resample_budget is None:
        resample_budget = max(50, n_samples // 4)
    pts = sample_sphere_uniform(seed, n_samples + resample_budget)
    counts = []
    resampled = 0
    idx = 0
    while len(counts) < n_samples and idx < len(pts):
        p = pts[idx]
        idx += 1
        try:
            counts.append(count_preimages(m, p, r))
        except (WindingError, RootOnCircleError, ContourPassesThroughRoot):
            resampled += 1
    if len(counts) < n_samples:
        raise WindingError("resample budget exhausted in mean_degree")
    arr = np.asarray(counts, dtype=float)
    return MeanDegree(
        mean=float(arr.mean()),
        stderr=float(arr.std(ddof=1) / math.sqrt(len(arr))),
        n_samples=n_samples,
        n_resampled=resampled,
    )


# ---------------------------------------------------------------------------
# Islands


@dataclass
class IslandRecord:
    disk_index: int
    boundary: np.ndarray  # outer boundary, closed complex polyline
    chi: int
    degree: int
    ramification: int
    area_share: float
    centroid: complex = 0j
    holes: list = field(default_factory=list)  # inner boundaries, if any


class AmbiguousComponentError(ArithmeticError):
    """A component could not be classified at the working resolution."""


def _window_mask(m, disk, x0, x1, y0, y1, nx, ny):
    xs = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    ys = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    zz = xs[None, :] + 1j * ys[:, None]
    w = evaluate_array(m, zz)
    dist = chordal_distance_array(w, disk.center)
    return zz, dist < disk.radius


def find_islands(m, disk, r, resolution=512):
    """Islands of `disk`: proper preimage components inside |z| < r.

    Two-phase rasterization: a coarse global mask finds candidate
    components; each is re-rasterized in a padded local window at higher
    resolution, where its boundary is traced and its degree computed by the
    argument principle.  Components entering the 10-cell properness margin
    are flagged ambiguous (returned separately, never counted).
    """
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    disk = disk if isinstance(disk, SphericalDisk) else SphericalDisk.of(*disk)
    margin_r = r * (1.0 - 10.0 / resolution)
    h = 2.0 * r / resolution
    zz, mask = _window_mask(m, disk, -r, r, -r, r, resolution, resolution)
    mask &= np.abs(zz) <= r
    labels, n_comp = ndimage.label(mask)
    islands = []
    ambiguous = []
    for comp_id in range(1, n_comp + 1):
        comp = labels == comp_id
        pts = zz[comp]
        reach = np.abs(pts).max()
        if reach > margin_r - h:
            # reaches the margin band: boundary-touching or undecidable
            if reach >= r - 2.5 * h:
                continue  # definitely touches the boundary: not proper
            ambiguous.append(comp_id)
            continue
        js, iis = np.nonzero(comp)
        pad = 6 * h
        wx0 = zz[0, iis.min()].real - pad
        wx1 = zz[0, iis.max()].real + pad
        wy0 = zz[js.min(), 0].imag - pad
        wy1 = zz[js.max(), 0].imag + pad
        rec = _refine_island(m, disk, (wx0, wx1, wy0, wy1), r)
        if rec is None:
            ambiguous.append(comp_id)
            continue
        islands.extend(rec)
    # deduplicate refined islands that fell in overlapping windows
    unique = []
    for rec in sorted(islands, key=lambda q: (q.centroid.real, q.centroid.imag)):
        if any(abs(rec.centroid - u.centroid) < 2 * h for u in unique):
            continue
        unique.append(rec)
    return unique, len(ambiguous)


def _refine_island(m, disk, window, r, local_n=160):
    """Re-rasterize one candidate window; return IslandRecords or None."""
    x0, x1, y0, y1 = window
    nx = ny = local_n
    zz, mask = _window_mask(m, disk, x0, x1, y0, y1, nx, ny)
    mask &= np.abs(zz) <= r
    labels, n_comp = ndimage.label(mask)
    if n_comp == 0:
        return []
    hx = (x1 - x0) / nx
    records = []
    dm = differentiate(m)

    def fieldfn(zs):
        w = evaluate_array(m, zs)
        return chordal_distance_array(w, disk.center) - disk.radius

    for comp_id in range(1, n_comp + 1):
        comp = labels == comp_id
        js, iis = np.nonzero(comp)
        # components clipped by the window edge belong to a different window
        # (or are non-proper); skip them here
        if js.min() == 0 or iis.min() == 0 or js.max() == ny - 1 or iis.max() == nx - 1:
            continue
        # trace the boundary contours restricted to this component's box;
        # pad well past the pixel-center bbox so the zero level stays inside
        bx0 = x0 + (iis.min() - 8) * hx
        bx1 = x0 + (iis.max() + 9) * hx
        by0 = y0 + (js.min() - 8) * hx
        by1 = y0 + (js.max() + 9) * hx
        chains = _march.extract(fieldfn, (bx0, bx1, by0, by1), 128, 128, on_ambiguous="resolve")
        # keep contours hugging this component
        comp_pts = zz[comp]
        centroid = complex(comp_pts.mean())
        mine = []
        for ch in chains:
            if not ch.closed:
                continue
            probe = ch.points[len(ch.points) // 2]
            d = np.abs(comp_pts - probe).min()
            if d < 3 * hx:
                mine.append(ch)
        if not mine:
            return None
        # outer contour = largest bounding box
        def extent(c):
            return (c.points.real.max() - c.points.real.min()) + (
                c.points.imag.max() - c.points.imag.min()
            )

        mine.sort(key=extent, reverse=True)
        outer = mine[0]
        holes = mine[1:]
        chi = 2 - (1 + len(holes))
        g = _root_target(m, disk.center)
        dg_t = differentiate(g)

        def F(zs):
            return evaluate_array(g, zs)

        def dF(zs):
            return evaluate_array(dg_t, zs)

        def contour_winding(chain):
            pts = list(chain.points[:-1]) if chain.points[0] == chain.points[-1] else list(chain.points)
            w, _ = _winding_number(F, pts, dF=dF)
            # normalize to the counterclockwise traversal
            signed_area = _polygon_area(chain.points)
            return w if signed_area > 0 else -w

        try:
            degree = contour_winding(outer)
            for hole in holes:
                degree -= contour_winding(hole)
        except (WindingError, ContourPassesThroughRoot):
            return None
        if degree <= 0:
            return None
        # pullback area over the component pixels
        hloc = density_array(m, dm, comp_pts)
        area_share = float(np.sum(hloc * hloc)) * hx * hx
        records.append(
            IslandRecord(
                disk_index=-1,
                boundary=outer.points,
                chi=chi,
                degree=int(degree),
                ramification=int(degree) - chi,
                area_share=area_share,
                centroid=centroid,
                holes=[hh.points for hh in holes],
            )
        )
    return records


def _polygon_area(points):
    x, y = points.real, points.imag
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def island_degree(m, island, center):
    """Covering degree of an island: winding of f - center along its boundary."""
    g = _root_target(m, center)
    dg_t = differentiate(g)

    def F(zs):
        return evaluate_array(g, zs)

    def dF(zs):
        return evaluate_array(dg_t, zs)

    def one(points):
        pts = list(points[:-1]) if points[0] == points[-1] else list(points)
        w, _ = _winding_number(F, pts, dF=dF)
        return w if _polygon_area(points) > 0 else -w

    degree = one(island.boundary)
    for hole in island.holes:
        degree -= one(hole)
    if degree <= 0:
        raise WindingError(f"non-positive island degree {degree}")
    return int(degree)


def total_ramification(islands):
    """Sum of (degree - chi) over island records; each term is >= 0."""
    total = 0
    for rec in islands:
        term = rec.degree - rec.chi
        if term < 0:
            raise ValueError(f"negative ramification term for island at {rec.centroid}")
        total += term
    return total
