"""Command-line entry point: ``podprom <command> [options]``.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import report as rpt
from .errors import ConfigError, NumericalError, PromError, ValidationError
from .fom import REYNOLDS_GRID, BurgersConfig, burgers_run, config_overrides, load_config, parse_config_text
from .mrpwi import write_alignment_csv
from .pipeline import (
    CaseLibrary,
    burgers_model_factory,
    interpolate_bases,
    load_bases,
    parse_plan,
    predict,
    run_sweep,
    select_cases,
)
from .plan import read_manifest, write_manifest
from .pod import compute_pod, orthonormality_error, read_basis, write_basis
from .snapshots import read_snapshots, write_snapshots

log = logging.getLogger("podprom")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


def _fmt_param(p: float) -> str:
    return f"{p:g}"


def _config_items(path: str | None, sets: list[str] | None) -> dict:
    items = load_config(path) if path else {}
    if sets:
        items.update(parse_config_text("\n".join(sets)))
    return items


def _reynolds_list(text: str | None, items: dict) -> list[float]:
    text = text or items.get("reynolds")
    if not text:
        return list(REYNOLDS_GRID)
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise ConfigError(f"bad Reynolds list {text!r}") from exc


def _overrides(args, items: dict) -> dict:
    kw = config_overrides(items)
    if args.seed is not None:
        kw["init_seed"] = args.seed
    return kw


def _out_dir(args) -> Path:
    out = Path(args.out)
    if not out.exists():
        out.mkdir(parents=True)
        log.info("created output directory %s", out)
    return out


def _guard(path: Path, force: bool) -> bool:
    """True when ``path`` may be written."""
    if path.exists() and not force:
        log.info("%s exists; skipping (use --force to overwrite)", path)
        return False
    return True


# --- commands ---------------------------------------------------------------


def cmd_generate(args) -> int:
    items = _config_items(args.config, args.set)
    reynolds = _reynolds_list(args.reynolds, items)
    kw = _overrides(args, items)
    cfgs = [BurgersConfig.for_reynolds(re, **kw) for re in reynolds]  # validate before any run
    out = _out_dir(args)
    entries, todo = [], []
    for cfg in cfgs:
        path = out / f"burgers_Re{_fmt_param(cfg.reynolds)}.psnap"
        entries.append((cfg.reynolds, str(path)))
        if _guard(path, args.force):
            todo.append((cfg, path))

    def run(job):
        cfg, path = job
        s, w = burgers_run(cfg)
        write_snapshots(s, w, path)
        return path

    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        for path in pool.map(run, todo):
            print(f"wrote {path}")
    write_manifest(out / "catalog.tsv", entries)
    print(f"wrote {out / 'catalog.tsv'} ({len(entries)} cases)")
    return EXIT_OK


def cmd_pod(args) -> int:
    out = _out_dir(args)
    for src in args.snapshots:
        s, w = read_snapshots(src)
        if w is None:
            raise ConfigError(f"{src}: snapshot file carries no quadrature weights")
        basis = compute_pod(s, w, args.rank, method=args.method)
        path = out / f"{Path(src).stem}_pod{args.rank}.psnap"
        if _guard(path, args.force):
            write_basis(basis, path)
        err = orthonormality_error(basis, w)
        print(f"{path}: N_r={basis.n_rank} max|Phi^T W Phi - I|={err:.3e} sigma_r/sigma_1={basis.singular_values[-1] / basis.singular_values[0]:.3e}")
    return EXIT_OK


def cmd_interpolate(args) -> int:
    entries = read_manifest(args.catalog)
    paths = dict(entries)
    neighbors, ref = select_cases(
        list(paths), args.target, args.neighbors, delta=args.delta, include_exact=args.include_exact
    )
    bases, weights = load_bases([(p, paths[p]) for p in neighbors], args.rank)
    if args.weights:
        _, weights = read_snapshots(args.weights)
    if weights is None:
        raise ConfigError("quadrature weights unknown; pass --weights with a snapshot file")
    kw = {"orthonormalize": args.orthonormalize, "return_packs": bool(args.alignment)} if args.method == "mrpwi" else {}
    result = interpolate_bases(args.method, bases, neighbors.index(ref), args.target, weights, **kw)
    if args.method == "mrpwi" and args.alignment:
        result, packs = result
        write_alignment_csv(args.alignment, packs)
    out = Path(args.output) if args.output else _out_dir(args) / f"{args.method}_Re{_fmt_param(args.target)}_Nr{bases[0].n_rank}_Np{len(bases)}.psnap"
    if _guard(out, args.force):
        write_basis(result, out)
    print(f"neighbors: {' '.join(_fmt_param(p) for p in neighbors)}  reference: {_fmt_param(ref)}")
    print(f"wrote {out} (orthonormality error {orthonormality_error(result, weights):.3e})")
    return EXIT_OK


def cmd_rom(args) -> int:
    basis = read_basis(args.basis)
    truth, w = read_snapshots(args.truth)
    if w is None:
        raise ConfigError(f"{args.truth}: snapshot file carries no quadrature weights")
    reynolds = args.reynolds if args.reynolds is not None else truth.parameter
    items = _config_items(args.config, args.set)
    model = burgers_model_factory(config_overrides(items))(reynolds, truth.n_dof)
    pred = predict(
        basis, truth, w, model, viscosity=1.0 / reynolds, n_snapshots=args.horizon, method_tag=basis.provenance
    )
    out = _out_dir(args)
    stem = Path(args.basis).stem
    traj_path, recon_path = out / f"{stem}_trajectory.csv", out / f"{stem}_reconstruction.psnap"
    if _guard(traj_path, args.force):
        pred.trajectory.write_csv(traj_path)
    if _guard(recon_path, args.force):
        write_snapshots(pred.reconstruction, w, recon_path)
    print(f"method={basis.provenance} Re={_fmt_param(reynolds)} N_r={basis.n_rank} snapshots={pred.report.n_snapshots_used} RLE={pred.report.rle:.6e}")
    return EXIT_OK


def _library(args, items: dict) -> CaseLibrary:
    if args.catalog:
        factory = burgers_model_factory(config_overrides(items))
        return CaseLibrary.from_manifest(read_manifest(args.catalog), factory)
    reynolds = _reynolds_list(None, items)
    log.info("generating %d Burgers cases in memory", len(reynolds))
    return CaseLibrary.generate(reynolds, _overrides(args, items), jobs=args.jobs)


def cmd_sweep(args) -> int:
    items = _config_items(args.plan, args.set)
    plan = parse_plan(items)
    library = _library(args, _config_items(args.config, None) if args.config else items)
    rows = run_sweep(library, plan, jobs=args.jobs)
    out = _out_dir(args)
    csv_path = out / f"sweep_{plan.axis}.csv"
    if _guard(csv_path, args.force):
        rpt.write_sweep_csv(csv_path, rows)
    records = [dict(zip(rpt.SWEEP_HEADER, map(str, r.as_csv()))) for r in rows]
    print(rpt.format_table(records, plan.axis))
    print(f"wrote {csv_path}")
    if args.chart:
        svg = out / f"sweep_{plan.axis}.svg"
        rpt.plot_sweep(records, plan.axis, svg)
        print(f"wrote {svg}")
    if args.timing:
        _benchmark(args, out)
    return EXIT_OK


def _benchmark(args, out: Path) -> None:
    reports = rpt.run_benchmark(
        n_dof=args.bench_dof,
        n_rank=args.bench_rank,
        n_neighbors=args.bench_neighbors,
        repetitions=args.repetitions,
        seed=args.seed or 0,
    )
    path = out / "timing.csv"
    rpt.write_timing_csv(path, reports)
    gmi, mrpwi = reports[0].wall_seconds, reports[1].wall_seconds
    print(f"GMI {gmi:.4f} s  MRPWI {mrpwi:.4f} s  MRPWI/GMI {mrpwi / gmi:.3f}  (N_n={reports[0].n_dof}, N_r={reports[0].n_rank}, N_p={reports[0].n_neighbors})")
    print(f"wrote {path}")


def cmd_report(args) -> int:
    if not args.sweeps and not args.benchmark:
        raise ConfigError("nothing to report: pass sweep CSV files and/or --benchmark")
    for path in args.sweeps:
        records = rpt.read_sweep_csv(path)
        axis = args.axis or _guess_axis(records)
        print(f"== {path} (axis {axis})")
        print(rpt.format_table(records, axis))
        if args.chart:
            svg = Path(path).with_suffix(".svg")
            rpt.plot_sweep(records, axis, svg)
            print(f"wrote {svg}")
    if args.benchmark:
        _benchmark(args, _out_dir(args))
    return EXIT_OK


def _guess_axis(records) -> str:
    for axis, col in rpt.AXIS_COLUMN.items():
        if len({r[col] for r in records if r["method"] != "ROM"}) > 1:
            return axis
    return "n_rank"


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="podprom", description="Parametric POD-Galerkin ROMs with GMI and MRPWI basis interpolation.")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p.add_argument("--seed", type=int, default=None, help="initial-condition seed for generated data")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="run the Burgers FOM and write PSNAP snapshot files")
    g.add_argument("--config", help="key=value config file")
    g.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override (repeatable)")
    g.add_argument("--reynolds", help="comma-separated Reynolds numbers (default: the 17-case grid 70..190)")
    g.set_defaults(func=cmd_generate)

    q = sub.add_parser("pod", help="compute POD bases from snapshot files")
    q.add_argument("snapshots", nargs="+")
    q.add_argument("--rank", type=int, required=True)
    q.add_argument("--method", choices=("svd", "snapshots"), default="svd")
    q.set_defaults(func=cmd_pod)

    i = sub.add_parser("interpolate", help="interpolate a POD basis to a target parameter")
    i.add_argument("--method", choices=("gmi", "mrpwi"), required=True)
    i.add_argument("--catalog", required=True, help="manifest of 'parameter<TAB>file' lines")
    i.add_argument("--target", type=float, required=True)
    i.add_argument("--neighbors", type=int, default=2)
    i.add_argument("--rank", type=int, help="modes kept (required for snapshot catalogs)")
    i.add_argument("--delta", type=float, help="parameter spacing of the neighbor grid")
    i.add_argument("--include-exact", action="store_true", help="allow the target itself as a neighbor")
    i.add_argument("--orthonormalize", action="store_true", help="QR the MRPWI output")
    i.add_argument("--weights", help="snapshot file supplying quadrature weights")
    i.add_argument("--alignment", help="MRPWI alignment diagnostics CSV")
    i.add_argument("--output", help="basis file to write")
    i.set_defaults(func=cmd_interpolate)

    r = sub.add_parser("rom", help="integrate the Galerkin ROM and score it against truth data")
    r.add_argument("--basis", required=True)
    r.add_argument("--truth", required=True)
    r.add_argument("--config", help="key=value Burgers config")
    r.add_argument("--set", action="append", metavar="KEY=VALUE")
    r.add_argument("--reynolds", type=float, help="ROM Reynolds number (default: truth parameter)")
    r.add_argument("--horizon", type=int, help="number of truth snapshots to predict")
    r.set_defaults(func=cmd_rom)

    s = sub.add_parser("sweep", help="run one sweep plan and write a CSV table")
    s.add_argument("--plan", required=True, help="key=value plan file")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="plan override")
    s.add_argument("--catalog", help="manifest of snapshot files (default: generate in memory)")
    s.add_argument("--config", help="Burgers config for in-memory generation and the ROM model")
    s.add_argument("--chart", action="store_true", help="also write an SVG line chart")
    s.add_argument("--timing", action="store_true", help="also run the interpolation benchmark")
    _bench_args(s)
    s.set_defaults(func=cmd_sweep)

    t = sub.add_parser("report", help="summarize sweep CSVs and/or run the timing benchmark")
    t.add_argument("sweeps", nargs="*")
    t.add_argument("--axis", choices=tuple(rpt.AXIS_COLUMN))
    t.add_argument("--chart", action="store_true")
    t.add_argument("--benchmark", action="store_true")
    _bench_args(t)
    t.set_defaults(func=cmd_report)
    return p


def _bench_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bench-dof", type=int, default=200_000)
    p.add_argument("--bench-rank", type=int, default=13)
    p.add_argument("--bench-neighbors", type=int, default=4)
    p.add_argument("--repetitions", type=int, default=5)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except PromError as exc:  # storage
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
