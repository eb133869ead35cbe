"""Experiment configuration and orchestration.

Config files are flat ``key = value`` pairs with dotted sections, UTF-8,
``#`` comments.  Example::

    map = z^5
    radii.mode = explicit-list
    radii.list = 2, 5, 10
    disk.1.center = 0
    disk.1.radius = 0.112837916709551
    disk.2.center = 1
    disk.2.radius = 0.112837916709551
    disk.3.center = inf
    disk.3.radius = 0.112837916709551
    graph.node = 0.5i
    graph.scale = 0.5
    chart.moebius = 1, 0, 0, 1
    chart.x_range = 0.7, 1.3
    chart.t_range = -0.1, 0.1
    resolution = 512
    seed = 7
    samples = 400
    outputs = out
    verifiers = mean_degree, islands, graph, arcs, rh, euler, containment

Exit codes: 0 all enabled verifiers pass, 1 verifier failure, 2 config
error, 3 numeric error during a stage.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from coverlab.expr import ParseError, parse_map
from coverlab.metric import (
    MAX_DISK_RADIUS,
    MetricProfile,
    SphericalDisk,
    area,
    boundary_length,
    build_profile,
    chordal_distance,
    select_radii,
)
from coverlab.count import find_islands, total_ramification
from coverlab.trace import (
    GraphSpec,
    RectangleChart,
    build_preimage_graph,
    complement_components,
    export_json,
    export_svg,
    select_perturbation,
    arc_test_integral,
)
from coverlab import verify as verify_mod
from coverlab.verify import (
    DEFAULT_C1,
    DEFAULT_C2,
    ExperimentReport,
    verify_asymptotic_equality,
    verify_euler_identity,
    verify_island_in_component,
    verify_island_theorem,
    verify_mean_degree,
    verify_rh_inequality,
)

ALL_VERIFIERS = ("mean_degree", "islands", "graph", "arcs", "rh", "euler", "containment")


class ConfigError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.field_path = path


def parse_complex(text):
    """Complex literal for config values: '1+2i', '-0.5i', 'inf', '3'."""
    s = text.strip().lower().replace(" ", "")
    if s in ("inf", "infinity", "oo"):
        return "inf"
    s = s.replace("i", "j")
    # allow bare 'j' suffixes like '2j' and combined 'a+bj'
    try:
        return complex(s)
    except ValueError as exc:
        raise ValueError(f"not a complex literal: {text!r}") from exc


@dataclass
class ExperimentConfig:
    map_source: str
    radii_mode: str = "explicit-list"
    radii_list: list = field(default_factory=lambda: [1.0, 2.0, 5.0])
    radii_min: float = 1.0
    radii_max: float = 10.0
    radii_count: int = 3
    disks: list = field(default_factory=list)  # SphericalDisk
    graph: GraphSpec | None = None
    chart: RectangleChart | None = None
    resolution: int = 512
    tolerance: float = 1e-6
    seed: int = 0
    samples: int = 400
    outputs: str = "out"
    verifiers: tuple = ALL_VERIFIERS
    c1: float = DEFAULT_C1
    c2: float = DEFAULT_C2

    def validate(self):
        try:
            parse_map(self.map_source)
        except ParseError as exc:
            raise ConfigError("map", str(exc))
        if self.radii_mode not in ("explicit-list", "length-area-selected"):
            raise ConfigError("radii.mode", f"unknown mode {self.radii_mode!r}")
        if self.radii_mode == "explicit-list" and not self.radii_list:
            raise ConfigError("radii.list", "no radii given")
        if self.radii_mode == "length-area-selected" and not (
            0 < self.radii_min < self.radii_max
        ):
            raise ConfigError("radii.min", "need 0 < min < max")
        if self.resolution < 64:
            raise ConfigError("resolution", "resolution must be at least 64")
        enabled = set(self.verifiers)
        unknown = enabled - set(ALL_VERIFIERS)
        if unknown:
            raise ConfigError("verifiers", f"unknown verifiers {sorted(unknown)}")
        needs_disks = enabled & {"islands", "rh", "containment"}
        if needs_disks and len(self.disks) != 3:
            raise ConfigError(
                "disks", f"exactly 3 disks required for {sorted(needs_disks)}"
            )
        for k, disk in enumerate(self.disks, start=1):
            if not 0 < disk.radius < MAX_DISK_RADIUS:
                raise ConfigError(
                    f"disk.{k}.radius",
                    f"must lie in (0, {MAX_DISK_RADIUS:.6f})",
                )
        for i in range(len(self.disks)):
            for j in range(i + 1, len(self.disks)):
                a, b = self.disks[i], self.disks[j]
                if chordal_distance(a.center, b.center) <= a.radius + b.radius:
                    raise ConfigError(
                        f"disk.{j + 1}", f"overlaps disk.{i + 1} (disks must be disjoint)"
                    )
        if enabled & {"graph", "euler", "containment"} and self.graph is None:
            raise ConfigError("graph", "graph section required for graph verifiers")
        if "arcs" in enabled and self.chart is None:
            raise ConfigError("chart", "chart section required for the arcs verifier")
        return self

    def resolved(self):
        """Plain-dict view for summary.json (fully self-describing)."""
        doc = {
            "map": self.map_source,
            "radii": {
                "mode": self.radii_mode,
                "list": self.radii_list,
                "min": self.radii_min,
                "max": self.radii_max,
                "count": self.radii_count,
            },
            "disks": [
                {
                    "center": "inf" if d.center.is_infinity else [d.center.value.real, d.center.value.imag],
                    "radius": d.radius,
                }
                for d in self.disks
            ],
            "resolution": self.resolution,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "samples": self.samples,
            "outputs": self.outputs,
            "verifiers": list(self.verifiers),
            "slack": {"c1": self.c1, "c2": self.c2},
        }
        if self.graph is not None:
            doc["graph"] = {
                "kind": self.graph.kind,
                "node": [self.graph.node.real, self.graph.node.imag],
                "scale": self.graph.scale,
            }
        if self.chart is not None:
            doc["chart"] = {
                "moebius": [
                    [c.real, c.imag]
                    for c in (self.chart.a, self.chart.b, self.chart.c, self.chart.d)
                ],
                "x_range": list(self.chart.x_range),
                "t_range": list(self.chart.t_range),
            }
        return doc


_KNOWN_KEYS = re.compile(
    r"^(map|radii\.(mode|list|min|max|count)|disk\.\d+\.(center|radius)|"
    r"graph\.(kind|node|scale)|chart\.(moebius|x_range|t_range)|"
    r"resolution|tolerance|seed|samples|outputs|verifiers|slack\.(c1|c2))$"
)


def parse_config_text(text):
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not _KNOWN_KEYS.match(key):
            raise ConfigError(key, "unknown configuration key")
        pairs[key] = value
    return build_config(pairs)


def build_config(pairs):
    if "map" not in pairs:
        raise ConfigError("map", "missing map definition")
    cfg = ExperimentConfig(map_source=pairs["map"])

    def floats(key):
        return [float(v) for v in pairs[key].split(",") if v.strip()]

    if "radii.mode" in pairs:
        cfg.radii_mode = pairs["radii.mode"].strip()
    if "radii.list" in pairs:
        try:
            cfg.radii_list = floats("radii.list")
        except ValueError as exc:
            raise ConfigError("radii.list", str(exc))
    for key, attr, conv in (
        ("radii.min", "radii_min", float),
        ("radii.max", "radii_max", float),
        ("radii.count", "radii_count", int),
        ("resolution", "resolution", int),
        ("tolerance", "tolerance", float),
        ("seed", "seed", int),
        ("samples", "samples", int),
        ("outputs", "outputs", str),
        ("slack.c1", "c1", float),
        ("slack.c2", "c2", float),
    ):
        if key in pairs:
            try:
                setattr(cfg, attr, conv(pairs[key]))
            except ValueError as exc:
                raise ConfigError(key, str(exc))

    disk_ids = sorted(
        {int(k.split(".")[1]) for k in pairs if k.startswith("disk.")}
    )
    disks = []
    for n in disk_ids:
        ckey, rkey = f"disk.{n}.center", f"disk.{n}.radius"
        if ckey not in pairs or rkey not in pairs:
            raise ConfigError(f"disk.{n}", "needs both center and radius")
        try:
            center = parse_complex(pairs[ckey])
            disks.append(SphericalDisk.of(center, float(pairs[rkey])))
        except ValueError as exc:
            raise ConfigError(f"disk.{n}", str(exc))
    cfg.disks = disks

    if any(k.startswith("graph.") for k in pairs):
        try:
            node = parse_complex(pairs.get("graph.node", "0.5i"))
            if node == "inf":
                raise ValueError("graph node must be finite")
            cfg.graph = GraphSpec(
                kind=pairs.get("graph.kind", "figure8").strip(),
                node=complex(node),
                scale=float(pairs.get("graph.scale", "0.5")),
            )
        except ValueError as exc:
            raise ConfigError("graph", str(exc))

    if any(k.startswith("chart.") for k in pairs):
        try:
            moebius = [parse_complex(v) for v in pairs["chart.moebius"].split(",")]
            if len(moebius) != 4 or "inf" in moebius:
                raise ValueError("moebius needs 4 finite coefficients a, b, c, d")
            x_range = tuple(float(v) for v in pairs["chart.x_range"].split(","))
            t_range = tuple(float(v) for v in pairs["chart.t_range"].split(","))
            cfg.chart = RectangleChart(*[complex(c) for c in moebius],
                                       x_range=x_range, t_range=t_range)
        except KeyError as exc:
            raise ConfigError("chart", f"missing {exc.args[0]}")
        except ValueError as exc:
            raise ConfigError("chart", str(exc))

    if "verifiers" in pairs:
        cfg.verifiers = tuple(
            v.strip() for v in pairs["verifiers"].split(",") if v.strip()
        )
    else:
        enabled = ["mean_degree"]
        if len(cfg.disks) == 3:
            enabled += ["islands", "rh"]
        if cfg.graph is not None:
            enabled += ["graph", "euler"]
            if len(cfg.disks) == 3:
                enabled.append("containment")
        if cfg.chart is not None:
            enabled.append("arcs")
        cfg.verifiers = tuple(enabled)
    return cfg.validate()


def load_config(path):
    p = Path(path)
    if not p.exists():
        raise ConfigError("config", f"config file not found: {path}")
    return parse_config_text(p.read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Orchestration


def _fmt12(x):
    return f"{x:.12g}"


def run(cfg):
    """Execute the enabled verifiers, write artifacts, return the exit code."""
    m = parse_map(cfg.map_source)
    outdir = Path(cfg.outputs)
    outdir.mkdir(parents=True, exist_ok=True)
    summary = {"config": cfg.resolved(), "verifiers": {}, "errors": []}
    report = ExperimentReport()
    enabled = set(cfg.verifiers)

    # radius schedule
    try:
        if cfg.radii_mode == "length-area-selected":
            radii = select_radii(
                m, cfg.radii_min, cfg.radii_max, cfg.radii_count, tol=cfg.tolerance
            )
        else:
            radii = list(cfg.radii_list)
    except (ValueError, ArithmeticError) as exc:
        summary["errors"].append({"stage": "radius-selection", "error": str(exc)})
        _write_summary(outdir, summary, exit_code=3)
        return 3
    summary["radii"] = radii

    # metric profile
    try:
        profile = build_profile(m, radii, tol=cfg.tolerance)
        profile.to_csv(outdir / "profile.csv")
        for r, a, l in zip(profile.radii, profile.a, profile.l):
            report.merge_row(r, {"a": a, "l": l, "resolution": cfg.resolution})
        radii = profile.radii  # pole-nudged values
    except (ValueError, ArithmeticError) as exc:
        summary["errors"].append({"stage": "profile", "error": str(exc)})
        _write_summary(outdir, summary, exit_code=3)
        return 3

    results = {}
    graph_by_r = {}
    islands_by_r = {}

    def record(name, result):
        results[name] = result
        summary["verifiers"][name] = {
            "passed": bool(result.passed),
            "worst_slack": result.worst_slack,
            "trend_ok": bool(result.trend_ok),
        }

    def stage(name, fn):
        if name not in enabled:
            return
        try:
            fn()
        except (ValueError, ArithmeticError) as exc:
            summary["errors"].append({"stage": name, "error": str(exc)})

    def run_mean():
        res = verify_mean_degree(
            m, radii, n_samples=cfg.samples, seed=cfg.seed, tol=cfg.tolerance, c1=cfg.c1
        )
        for row in res.rows:
            report.merge_row(
                row["r"],
                {
                    "mean_degree": row["mean_degree"],
                    "mean_stderr": row["mean_stderr"],
                    "mean_err": row["mean_err"],
                    "mean_allowed": row["mean_allowed"],
                },
            )
        record("mean_degree", res)

    def run_islands():
        res = verify_island_theorem(
            m, cfg.disks, radii, resolution=cfg.resolution, tol=cfg.tolerance,
            c1=cfg.c1, c2=cfg.c2,
        )
        for row in res.rows:
            islands_by_r[row["r"]] = row["islands"]
            report.merge_row(
                row["r"],
                {
                    "island_count": row["island_count"],
                    "degree_sum": row["degree_sum"],
                    "ramification": row["ramification"],
                    "ambiguous_islands": row["ambiguous_islands"],
                    "island_slack_allowed": row["island_slack_allowed"],
                    "island_slack_needed": row["island_slack_needed"],
                },
            )
            export_svg(
                outdir / f"islands_{_fmt12(row['r'])}.svg",
                row["r"],
                islands=row["islands"],
            )
        record("islands", res)

    def run_graph():
        res = verify_asymptotic_equality(
            m, cfg.graph, radii, resolution=cfg.resolution, tol=cfg.tolerance, c1=cfg.c1
        )
        for row in res.rows:
            graph_by_r[row["r"]] = row["graph_object"]
            report.merge_row(
                row["r"],
                {
                    "graph_euler": row["graph_euler"],
                    "good_arcs": row["good_arcs"],
                    "bad_arcs": row["bad_arcs"],
                    "suspect_arcs": row["suspect_arcs"],
                    "graph_ratio": row["graph_ratio"],
                    "graph_err": row["graph_err"],
                    "graph_allowed": row["graph_allowed"],
                },
            )
            export_svg(
                outdir / f"graph_{_fmt12(row['r'])}.svg",
                row["r"],
                graph=row["graph_object"],
                islands=islands_by_r.get(row["r"]),
            )
        record("graph", res)

    def run_arcs():
        rows = []
        ok = True
        for r in radii:
            t_star, lhs, rhs = select_perturbation(m, r, cfg.chart, n_samples=1000)
            integral = arc_test_integral(m, cfg.chart, t_star, r)
            coarea_ok = abs(lhs - rhs) <= 0.02 * max(rhs, 1.0)
            ok &= coarea_ok
            report.merge_row(
                r,
                {
                    "t_star": t_star,
                    "coarea_lhs": lhs,
                    "coarea_rhs": rhs,
                    "arc_integral": integral,
                },
            )
            rows.append(
                {"r": r, "t_star": t_star, "coarea_lhs": lhs, "coarea_rhs": rhs,
                 "arc_integral": integral, "pass": coarea_ok}
            )
        record(
            "arcs",
            verify_mod.VerifierResult(
                name="arcs", passed=ok, rows=rows, worst_slack=0.0, trend_ok=True
            ),
        )

    def run_rh():
        ram_by_r = {}
        for r in radii:
            islands = islands_by_r.get(r)
            if islands is None:
                per = []
                for k, disk in enumerate(cfg.disks):
                    isl, _ = find_islands(m, disk, r, cfg.resolution)
                    for rec in isl:
                        rec.disk_index = k
                    per.extend(isl)
                islands_by_r[r] = per
                islands = per
            ram_by_r[r] = total_ramification(islands)
        res = verify_rh_inequality(
            m, radii, ram_by_r, resolution=cfg.resolution, tol=cfg.tolerance, c1=cfg.c1
        )
        for row in res.rows:
            report.merge_row(
                row["r"],
                {"ramification": row["ramification"], "rh_lhs": row["rh_lhs"],
                 "rh_rhs": row["rh_rhs"]},
            )
        record("rh", res)

    def run_euler():
        all_ok = True
        worst = 0.0
        rows = []
        for r in radii:
            pg = graph_by_r.get(r)
            if pg is None:
                pg = build_preimage_graph(m, cfg.graph, r, cfg.resolution)
                graph_by_r[r] = pg
            comps = complement_components(pg, r, cfg.resolution)
            res = verify_euler_identity(pg, comps)
            row = dict(res.rows[0])
            row["r"] = r
            rows.append(row)
            all_ok &= res.passed
            worst = max(worst, res.worst_slack)
            report.merge_row(
                r,
                {
                    "chi_c0": row["chi_c0"],
                    "sum_chi_c": row["sum_chi_c"],
                    "euler_identity": row["total"],
                },
            )
            export_json(
                outdir / f"graph_{_fmt12(r)}.json",
                graph=pg,
                components=comps,
                islands=islands_by_r.get(r),
            )
        record(
            "euler",
            verify_mod.VerifierResult(
                name="euler", passed=all_ok, rows=rows, worst_slack=worst, trend_ok=True
            ),
        )

    def run_containment():
        all_ok = True
        rows = []
        for r in radii:
            pg = graph_by_r.get(r)
            if pg is None:
                pg = build_preimage_graph(m, cfg.graph, r, cfg.resolution)
                graph_by_r[r] = pg
            comps = complement_components(pg, r, cfg.resolution)
            islands = islands_by_r.get(r)
            if islands is None:
                per = []
                for k, disk in enumerate(cfg.disks):
                    isl, _ = find_islands(m, disk, r, cfg.resolution)
                    for rec in isl:
                        rec.disk_index = k
                    per.extend(isl)
                islands_by_r[r] = per
                islands = per
            res = verify_island_in_component(comps, islands, cfg.graph, cfg.disks)
            rows.extend({"r": r, **row} for row in res.rows)
            all_ok &= res.passed
        record(
            "containment",
            verify_mod.VerifierResult(
                name="containment", passed=all_ok, rows=rows,
                worst_slack=0.0 if all_ok else 1.0, trend_ok=True,
            ),
        )

    stage("mean_degree", run_mean)
    stage("islands", run_islands)
    stage("graph", run_graph)
    stage("arcs", run_arcs)
    stage("rh", run_rh)
    stage("euler", run_euler)
    stage("containment", run_containment)

    report.to_csv(outdir / "report.csv")
    if summary["errors"]:
        code = 3
    elif all(v["passed"] for v in summary["verifiers"].values()):
        code = 0
    else:
        code = 1
    _write_summary(outdir, summary, exit_code=code)
    return code


def _write_summary(outdir, summary, exit_code):
    summary["exit_code"] = exit_code
    with open(Path(outdir) / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Command line


def _base_parser(sub, name, help_text):
    p = sub.add_parser(name, help=help_text)
    p.add_argument("--map", dest="map_source", help="map source expression")
    p.add_argument("--r", dest="radius", help="radius or comma list of radii")
    p.add_argument("--config", help="config file (flags override its values)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="RNG seed")
    p.add_argument("--resolution", type=int, help="grid resolution")
    return p


def _effective_config(args, default_disks=None, need_graph=False, need_chart=False):
    if args.config:
        cfg = load_config(args.config)
    else:
        if not args.map_source:
            raise ConfigError("map", "missing map (--map or --config)")
        cfg = ExperimentConfig(map_source=args.map_source, verifiers=())
        if default_disks:
            cfg.disks = default_disks
        if need_graph:
            cfg.graph = GraphSpec(node=0.5j, scale=0.5)
        if need_chart:
            cfg.chart = RectangleChart(1, 0, 0, 1, x_range=(0.7, 1.3), t_range=(-0.1, 0.1))
    if args.map_source:
        cfg.map_source = args.map_source
    if args.radius:
        cfg.radii_mode = "explicit-list"
        cfg.radii_list = [float(v) for v in str(args.radius).split(",")]
    if args.out:
        cfg.outputs = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.resolution is not None:
        cfg.resolution = args.resolution
    return cfg


def _standard_disks():
    rho = 0.2 / math.sqrt(math.pi)
    return [
        SphericalDisk.of(1, rho),
        SphericalDisk.of(-1, rho),
        SphericalDisk.of("inf", rho),
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="coverlab",
        description="covering-surface experiments on the Riemann sphere",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _base_parser(sub, "profile", "print a(r), l(r) and their ratio")
    _base_parser(sub, "islands", "count islands over the configured disks")
    g = _base_parser(sub, "graph", "trace the figure-eight preimage")
    g.add_argument("--node", help="figure-eight node (complex literal)")
    g.add_argument("--scale", type=float, help="figure-eight scale")
    _base_parser(sub, "arcs", "classify arcs over a chart segment")
    _base_parser(sub, "verify-all", "run every enabled verifier from a config")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        if args.command == "profile":
            cfg = _effective_config(args)
            m = parse_map(cfg.map_source)
            for r in cfg.radii_list:
                a = area(m, r, tol=cfg.tolerance)
                l = boundary_length(m, r)
                print(f"r={_fmt12(r)} a={_fmt12(a)} l={_fmt12(l)} ratio={_fmt12(l / a)}")
            return 0

        if args.command == "islands":
            cfg = _effective_config(args, default_disks=_standard_disks())
            if len(cfg.disks) != 3:
                raise ConfigError("disks", "exactly 3 disks required for islands")
            m = parse_map(cfg.map_source)
            total = 0
            for r in cfg.radii_list:
                per = []
                for k, disk in enumerate(cfg.disks):
                    isl, amb = find_islands(m, disk, r, cfg.resolution)
                    for rec in isl:
                        rec.disk_index = k
                    per.append((len(isl), amb))
                total = sum(n for n, _ in per)
                a = area(m, r, tol=cfg.tolerance)
                print(
                    f"r={_fmt12(r)} islands={total} per_disk={[n for n, _ in per]} "
                    f"ambiguous={sum(a_ for _, a_ in per)} a={_fmt12(a)}"
                )
            return 0

        if args.command == "graph":
            cfg = _effective_config(args, need_graph=True)
            if args.node or args.scale:
                node = complex(parse_complex(args.node)) if args.node else cfg.graph.node
                scale = args.scale if args.scale else cfg.graph.scale
                cfg.graph = GraphSpec(node=node, scale=scale)
            m = parse_map(cfg.map_source)
            for r in cfg.radii_list:
                pg = build_preimage_graph(m, cfg.graph, r, cfg.resolution)
                comps = complement_components(pg, r, cfg.resolution)
                chi_c0 = sum(c.chi for c in comps.components if c.touches_boundary)
                sum_chi = sum(c.chi for c in comps.components if not c.touches_boundary)
                print(
                    f"r={_fmt12(r)} V={len(pg.vertices)} "
                    f"E={sum(1 for a_ in pg.retained_arcs)} euler={pg.euler} "
                    f"chi_c0={chi_c0} sum_chi_c={sum_chi} "
                    f"identity={chi_c0 + pg.euler + sum_chi}"
                )
            return 0

        if args.command == "arcs":
            cfg = _effective_config(args, need_chart=True)
            m = parse_map(cfg.map_source)
            from coverlab.trace import ImplicitCurve, classify_arcs, trace_preimage

            for r in cfg.radii_list:
                t_star, lhs, rhs = select_perturbation(m, r, cfg.chart, 1000)
                seg = ImplicitCurve.segment(cfg.chart, t_star)
                pls = trace_preimage(m, seg, r, cfg.resolution)
                good, bad, suspect = classify_arcs(pls, m, seg, r)
                integral = arc_test_integral(m, cfg.chart, t_star, r)
                print(
                    f"r={_fmt12(r)} t_star={_fmt12(t_star)} good={good} bad={bad} "
                    f"suspect={suspect} coarea=({_fmt12(lhs)},{_fmt12(rhs)}) "
                    f"arc_integral={_fmt12(integral)}"
                )
            return 0

        if args.command == "verify-all":
            if not args.config:
                raise ConfigError("config", "verify-all requires --config")
            cfg = _effective_config(args)
            return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
