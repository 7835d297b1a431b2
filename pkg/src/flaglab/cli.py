"""Command-line surface: certify, hyperconvex, foliate, dimension,
crossratio, visualmass, replay.

Every run writes a CSV next to a RunManifest JSON; re-running a manifest
(replay) reproduces the CSV byte for byte, stochastic steps included,
because every sampler is seeded and every float is formatted with a fixed
rule.  Exit codes: 0 pass/certified, 2 refuted/fails, 3 inconclusive,
5 unmet Anosov prerequisites, 64 usage or malformed input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, boxdim, words as W
from .certify import certify_anosov, gap_sweep
from .errors import FlaglabError, InputError
from .fibers import (
    TripleSpec,
    check_Hk,
    check_hyperconvex,
    foliated_limit_sample,
    required_anosov_indices,
    tangent_project,
)
from .mobius import INF
from .reps import Representation, preset, preset_names
from .sphere import VisualMeasure, cross_ratio, visual_mass
from .words import GroupPresentation, free_group, surface_group

EXIT_OK = 0
EXIT_FAIL = 2
EXIT_INCONCLUSIVE = 3
EXIT_PREREQ = 5
EXIT_USAGE = 64


def fmt(x: float) -> str:
    return format(float(x), ".17g")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# --- representation files ---------------------------------------------------


def rep_digest(rep: Representation) -> str:
    h = hashlib.sha256()
    h.update(repr((rep.dim, rep.presentation)).encode())
    for g in rep.generators:
        h.update(np.ascontiguousarray(g).tobytes())
    return h.hexdigest()[:16]


def load_rep_file(path: str) -> Representation:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}")
    if doc.get("format") != 1:
        raise InputError(f"{path}: expected \"format\": 1")
    try:
        d = int(doc["dim"])
        pres_doc = doc["presentation"]
        kind = pres_doc["kind"]
        if kind == "free":
            pres = free_group(int(pres_doc["rank"]))
        elif kind == "surface":
            rels = [tuple(int(x) for x in r) for r in pres_doc["relations"]]
            pres = surface_group(int(pres_doc["genus"]), rels[0])
        else:
            rels = tuple(tuple(int(x) for x in r) for r in pres_doc.get("relations", []))
            pres = GroupPresentation(
                generator_count=int(pres_doc["rank"]),
                kind="custom",
                relations=rels,
                length_mode="letter-count",
            )
        mats = []
        for gen in doc["generators"]:
            rows = [[complex(e[0], e[1]) for e in row] for row in gen]
            m = np.array(rows, dtype=complex)
            if m.shape != (d, d):
                raise InputError(f"{path}: generator matrix is not {d}x{d}")
            mats.append(m)
        return Representation(pres, mats, label=doc.get("label", os.path.basename(path)))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: bad representation document ({exc})")


def resolve_rep(spec: str) -> tuple[Representation, str]:
    """Returns (representation, input descriptor for the manifest)."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        return preset(name), spec
    rep = load_rep_file(spec)
    return rep, f"file:{spec}:sha256:{rep_digest(rep)}"


# --- manifests ---------------------------------------------------------------


def write_manifest(out_dir: str, command: str, params: dict, seeds, inputs, outputs, t0: float):
    manifest = {
        "command": command,
        "params": params,
        "seeds": list(seeds),
        "version": __version__,
        "inputs": inputs,
        "outputs": outputs,
        "wall_time_s": round(time.time() - t0, 3),
    }
    path = os.path.join(out_dir, f"{command}.manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_csv(path: str, header: str, columns: list[str], rows: list[list[str]]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {header}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def emit(args, name: str, header: str, columns: list[str], rows: list[list[str]]) -> str:
    """Write the result table as CSV (default) or JSON per --format."""
    fmt_kind = getattr(args, "format", "csv")
    if fmt_kind == "json":
        path = os.path.join(args.out, f"{name}.json")
        doc = {"schema": header, "rows": [dict(zip(columns, row)) for row in rows]}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        path = os.path.join(args.out, f"{name}.csv")
        _write_csv(path, header, columns, rows)
    return path


# --- svg ---------------------------------------------------------------------


def write_svg(path: str, values: list[complex], infinities: int, markers: dict[str, complex]):
    """Point cloud in the plane chart; presentation only, no data round trip."""
    finite = [v for v in values if abs(v) < 20.0]
    xs = [v.real for v in finite] or [0.0]
    ys = [v.imag for v in finite] or [0.0]
    lo = min(min(xs), min(ys), -1.5)
    hi = max(max(xs), max(ys), 2.5)
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    size = 640.0
    scale = size / (hi - lo)

    def px(z: complex) -> tuple[float, float]:
        return (z.real - lo) * scale, size - (z.imag - lo) * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" height="{size:.0f}" '
        f'viewBox="0 0 {size:.0f} {size:.0f}">',
        f'<rect width="{size:.0f}" height="{size:.0f}" fill="white"/>',
    ]
    for v in finite:
        x, y = px(v)
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.6" fill="#1f4e9c" fill-opacity="0.7"/>')
    for name, z in markers.items():
        if name == "inf":
            parts.append(
                f'<text x="{size - 60:.0f}" y="24" font-size="15" fill="#b02020">'
                f"inf ({infinities} pts)</text>"
            )
            continue
        x, y = px(z)
        parts.append(
            f'<g stroke="#b02020" stroke-width="2">'
            f'<line x1="{x - 6:.1f}" y1="{y:.1f}" x2="{x + 6:.1f}" y2="{y:.1f}"/>'
            f'<line x1="{x:.1f}" y1="{y - 6:.1f}" x2="{x:.1f}" y2="{y + 6:.1f}"/></g>'
        )
        parts.append(f'<text x="{x + 8:.1f}" y="{y - 8:.1f}" font-size="14" fill="#b02020">{name}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


# --- commands ----------------------------------------------------------------


def cmd_certify(args) -> int:
    t0 = time.time()
    rep, descriptor = resolve_rep(args.rep)
    cert = certify_anosov(
        rep,
        args.k,
        args.radius,
        slope_threshold=args.slope_threshold,
        r2_threshold=args.r2_threshold,
    )
    rows = [
        [str(cert.k), str(n), fmt(g), fmt(cert.c1), fmt(cert.c2), fmt(cert.r_squared), cert.verdict]
        for n, g in zip(cert.lengths, cert.min_gaps)
    ]
    out = emit(args, "certify", "flaglab certificate v1",
               ["k", "length", "min_gap", "c1", "c2", "r2", "verdict"], rows)
    write_manifest(args.out, "certify", _params(args), [], {"rep": descriptor}, [out], t0)
    for note in cert.notes:
        print(f"note: {note}")
    print(f"certify {args.rep} k={args.k} radius={cert.radius}: {cert.verdict} "
          f"(c1={cert.c1:.4f}, c2={cert.c2:.4f}, R2={cert.r_squared:.4f})")
    return {"certified": EXIT_OK, "refuted": EXIT_FAIL}.get(cert.verdict, EXIT_INCONCLUSIVE)


def cmd_hyperconvex(args) -> int:
    t0 = time.time()
    rep, descriptor = resolve_rep(args.rep)
    checker = check_hyperconvex if args.mode == "eq1" else check_Hk
    certificates = {}
    if not args.assume_anosov:
        needed = required_anosov_indices(rep, args.k, args.mode)
        sweep = gap_sweep(rep, args.radius)
        missing = []
        for j in needed:
            cert = certify_anosov(rep, j, args.radius, sweep=sweep)
            certificates[j] = cert
            if cert.verdict != "certified":
                missing.append(f"{j}:{cert.verdict}")
        if missing:
            print(f"uncertified prerequisite Anosov indices: {', '.join(missing)}")
            return EXIT_PREREQ
    spec = TripleSpec(
        count=args.triples,
        seed=args.seed,
        word_length=args.word_length,
        pool_size=args.pool,
        tau=args.tau,
    )
    report = checker(rep, args.k, spec, certificates=certificates, assume_anosov=args.assume_anosov)
    out = emit(
        args,
        "hyperconvex",
        "flaglab hyperconvex v1",
        ["mode", "k", "triples_tested", "skipped", "min_transversality", "worst_x", "worst_y", "worst_z", "verdict"],
        [[
            report.mode,
            str(report.k),
            str(report.triples_tested),
            str(report.skipped),
            fmt(report.min_transversality),
            W.word_to_str(report.worst_triple[0]),
            W.word_to_str(report.worst_triple[1]),
            W.word_to_str(report.worst_triple[2]),
            report.verdict,
        ]],
    )
    write_manifest(args.out, "hyperconvex", _params(args), [args.seed], {"rep": descriptor}, [out], t0)
    print(f"hyperconvex {args.rep} k={args.k} mode={args.mode}: {report.verdict} "
          f"(min={report.min_transversality:.6f} over {report.triples_tested} triples)")
    return {"passes": EXIT_OK, "fails": EXIT_FAIL}.get(report.verdict, EXIT_INCONCLUSIVE)


def cmd_foliate(args) -> int:
    t0 = time.time()
    rep, descriptor = resolve_rep(args.rep)
    sample = foliated_limit_sample(
        rep,
        args.k,
        base_count=args.bases,
        fiber_count=args.fibers,
        seed=args.seed,
        word_length=args.word_length,
    )
    rows = []
    for r in sample.rows:
        rows.append([
            W.word_to_str(r.base_word),
            W.word_to_str(r.fiber_word),
            fmt(r.value.real),
            fmt(r.value.imag),
            "1" if r.at_infinity else "0",
            sample.base_status.get(r.base_word, ""),
        ])
    out = emit(
        args,
        "foliate",
        "flaglab foliate v1",
        ["base_word", "fiber_source_word", "re", "im", "is_infinity", "base_status"],
        rows,
    )
    outputs = [out]
    if args.svg:
        os.makedirs(args.svg, exist_ok=True)
        by_base: dict = {}
        for r in sample.rows:
            by_base.setdefault(r.base_word, []).append(r)
        for base_word, rws in by_base.items():
            values = [r.value for r in rws if not r.at_infinity]
            n_inf = sum(1 for r in rws if r.at_infinity)
            svg_path = os.path.join(args.svg, f"fiber_{W.word_to_str(base_word)}.svg")
            write_svg(svg_path, values, n_inf, {"0": 0j, "1": 1 + 0j, "inf": INF})
            outputs.append(svg_path)
    write_manifest(args.out, "foliate", _params(args), [args.seed], {"rep": descriptor}, outputs, t0)
    print(f"foliate {args.rep} k={args.k}: {len(sample.rows)} fiber points over "
          f"{len(sample.base_status)} bases; basepoints "
          f"{[W.word_to_str(w) for w in sample.basepoint_words]}")
    return EXIT_OK


def _fiber_cloud(rep, k, count, length, seed, threads):
    """Tangent-project a limit-set sample into the fiber of one extra base."""
    from .cache import cached_limit_set_sample

    flags = cached_limit_set_sample(
        rep, rep_digest(rep), _fiber_ks(rep.dim, k), count=count + 1, length=length, seed=seed
    )
    base, rest = flags[0], flags[1:]
    def project(f):
        try:
            return tangent_project(base, f, k).coords
        except FlaglabError:
            return None
    with ThreadPoolExecutor(max_workers=threads) as pool:
        coords = list(pool.map(project, rest))
    pts = [c for c in coords if c is not None]
    return np.stack(pts)


def _fiber_ks(d: int, k: int) -> list[int]:
    return sorted({j for j in (k - 1, k, k + 1, d - k) if 0 < j < d})


def cmd_dimension(args) -> int:
    t0 = time.time()
    inputs = {}
    seeds = [args.seed]
    scales = [float(s) for s in args.scales.split(",")] if args.scales else None
    chart_id = "fiber"
    if args.synthetic:
        if args.synthetic == "circle":
            pts = boxdim.circle_cloud(args.points)
        elif args.synthetic == "cantor":
            pts = boxdim.cantor_cloud(max(2, int(math.ceil(math.log2(args.points)))))
        elif args.synthetic == "uniform":
            pts = boxdim.uniform_cloud(args.points, seed=args.seed)
        else:
            raise InputError(f"unknown synthetic cloud {args.synthetic}")
        inputs["synthetic"] = args.synthetic
        est = boxdim.box_dimension_sphere(pts, scales=scales)
        chart_id = args.synthetic
    else:
        if not args.rep:
            raise InputError("dimension needs a representation or --synthetic")
        rep, descriptor = resolve_rep(args.rep)
        inputs["rep"] = descriptor
        if args.mode == "fiber":
            pts = _fiber_cloud(rep, args.k, args.points, args.word_length, args.seed, args.threads)
            est = boxdim.box_dimension_sphere(pts, scales=scales)
        else:
            ks = sorted(set(_fiber_ks(rep.dim, args.k)) | {rep.dim - args.k})
            from .cache import cached_limit_set_sample

            n_anchors = args.anchors
            flags = cached_limit_set_sample(
                rep, rep_digest(rep), ks, count=args.points + n_anchors,
                length=args.word_length, seed=args.seed,
            )
            while True:
                anchors, cloud = flags[:n_anchors], flags[n_anchors:]
                try:
                    est = boxdim.grassmann_dimension(cloud, args.k, anchors, scales=scales)
                    break
                except InputError as exc:
                    if "add anchors" not in str(exc) or n_anchors >= 4 * args.anchors:
                        raise
                    n_anchors *= 2
                    extra = cached_limit_set_sample(
                        rep, rep_digest(rep), ks, count=n_anchors,
                        length=args.word_length, seed=args.seed + 1000,
                    )
                    flags = extra[: n_anchors] + flags[args.anchors :]
            chart_id = "grassmann"
    rows = [[fmt(s), str(c), chart_id] for s, c in zip(est.scales, est.counts)]
    verdict = "below_2" if est.verdict_below(2.0) else "not_below_2"
    rows.append(["summary", fmt(est.slope), f"{fmt(est.ci_halfwidth)};{verdict}"])
    out = emit(args, "dimension", "flaglab dimension v1", ["scale", "count", "chart_id"], rows)
    write_manifest(args.out, "dimension", _params(args), seeds, inputs, [out], t0)
    for wmsg in est.warnings:
        print(f"warning: {wmsg}")
    print(f"dimension: slope={est.slope:.4f} +- {est.ci_halfwidth:.4f} ({verdict}, "
          f"{est.n_points} points)")
    if est.chart_breakdown:
        for name, s in sorted(est.chart_breakdown.items()):
            print(f"  chart {name}: slope {s:.4f}")
    return EXIT_OK if est.verdict_below(2.0) else EXIT_INCONCLUSIVE


def _parse_point(text: str) -> complex:
    if text.strip().lower() in ("inf", "infinity", "oo"):
        return INF
    return complex(text.replace(" ", ""))


def cmd_crossratio(args) -> int:
    value = cross_ratio(
        _parse_point(args.z1), _parse_point(args.z2), _parse_point(args.z3), _parse_point(args.z4)
    )
    if math.isinf(value.real) or math.isinf(value.imag):
        print("inf")
    else:
        print(f"{fmt(value.real)}{'+' if value.imag >= 0 else '-'}{fmt(abs(value.imag))}j")
    return EXIT_OK


def cmd_visualmass(args) -> int:
    t0 = time.time()
    inputs = {}
    if args.synthetic == "hemisphere":
        cloud = np.array([[1.0 + 0j, 0.0 + 0j]])  # cap of radius pi/2 around the pole
        eps = math.pi / 2.0
    else:
        rep, descriptor = resolve_rep(args.rep)
        inputs["rep"] = descriptor
        cloud = _fiber_cloud(rep, args.k, args.points, args.word_length, args.seed, args.threads)
        eps = args.eps
    base = [float(x) for x in args.basepoint.split(",")]
    nu = VisualMeasure(complex(base[0], base[1]), base[2])
    est = visual_mass(nu, cloud, eps, mc_count=args.mc, seed=args.seed)
    out = emit(
        args,
        "visualmass",
        "flaglab visualmass v1",
        ["estimate", "sigma", "eps", "mc_count", "seed"],
        [[fmt(est.estimate), fmt(est.sigma), fmt(eps), str(est.mc_count), str(est.seed)]],
    )
    write_manifest(args.out, "visualmass", _params(args), [args.seed], inputs, [out], t0)
    print(f"visual mass: {est.estimate:.6f} +- {est.sigma:.6f} (eps={eps:.4f}, mc={est.mc_count})")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in preset_names():
        print(name)
    return EXIT_OK


def cmd_replay(args) -> int:
    with open(args.manifest, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    params = dict(manifest["params"])
    argv = [manifest["command"]]
    if "rep" in params and params["rep"]:
        argv.append(params.pop("rep"))
    for key, value in sorted(params.items()):
        if key in ("out",):
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        elif value is not None:
            argv.extend([flag, str(value)])
    argv.extend(["--out", args.out])
    return main(argv)


def _params(args) -> dict:
    skip = {"func", "manifest", "command"}
    return {k: v for k, v in vars(args).items() if k not in skip}


# --- parser ------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="flaglab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, rep=True, seeded=True):
        if rep:
            p.add_argument("rep", help="builtin:NAME or path to a representation JSON file")
        p.add_argument("--out", default=".", help="output directory (default .)")
        if seeded:
            p.add_argument("--seed", type=int, default=1)
        p.add_argument("--threads", type=int, default=min(8, os.cpu_count() or 1))
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="machine-readable output format")

    p = sub.add_parser("certify", help="gap-growth certificate over a word ball")
    common(p, seeded=False)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--radius", type=int, default=6)
    p.add_argument("--slope-threshold", type=float, default=0.01)
    p.add_argument("--r2-threshold", type=float, default=0.95)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("hyperconvex", help="triple transversality sweep")
    common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mode", choices=("eq1", "Hk"), default="eq1")
    p.add_argument("--triples", type=int, default=1000)
    p.add_argument("--radius", type=int, default=5, help="radius for prerequisite certificates")
    p.add_argument("--word-length", type=int, default=8)
    p.add_argument("--pool", type=int, default=64)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--assume-anosov", action="store_true")
    p.set_defaults(func=cmd_hyperconvex)

    p = sub.add_parser("foliate", help="trivialized fiber limit sets over sampled bases")
    common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--bases", type=int, default=1)
    p.add_argument("--fibers", type=int, default=500)
    p.add_argument("--word-length", type=int, default=8)
    p.add_argument("--svg", default=None, help="directory for per-base SVG clouds")
    p.set_defaults(func=cmd_foliate)

    p = sub.add_parser("dimension", help="box-counting dimension of a limit-set sample")
    common(p, rep=False)
    p.add_argument("rep", nargs="?", default=None)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--mode", choices=("fiber", "grassmann"), default="fiber")
    p.add_argument("--synthetic", choices=("circle", "cantor", "uniform"), default=None)
    p.add_argument("--points", type=int, default=2000)
    p.add_argument("--anchors", type=int, default=3)
    p.add_argument("--word-length", type=int, default=10)
    p.add_argument("--scales", default=None, help="comma-separated cell sizes in radians")
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("crossratio", help="cross-ratio of four sphere points")
    p.add_argument("z1"); p.add_argument("z2"); p.add_argument("z3"); p.add_argument("z4")
    p.set_defaults(func=cmd_crossratio)

    p = sub.add_parser("visualmass", help="Monte-Carlo visual measure of a thickened cloud")
    common(p, rep=False)
    p.add_argument("rep", nargs="?", default=None)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--synthetic", choices=("hemisphere",), default=None)
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--word-length", type=int, default=8)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--mc", type=int, default=100000)
    p.add_argument("--basepoint", default="0,0,1", help="upper-half-space x,y,t")
    p.set_defaults(func=cmd_visualmass)

    p = sub.add_parser("presets", help="list builtin representations")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("replay", help="re-execute a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        os.makedirs(getattr(args, "out", "."), exist_ok=True)
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FlaglabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
