"""Sweep tables, SVG charts and the interpolation timing benchmark."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, MissingFileError
from .fom import ManufacturedFamily, manufactured_bases
from .metrics import TimingReport, benchmark_interpolation
from .pipeline import SWEEP_HEADER, SweepRow
from .snapshots import write_csv

AXIS_COLUMN = {"n_rank": "N_r", "delta_param": "delta_param", "n_neighbors": "N_p"}
TIMING_HEADER = ("method", "N_n", "N_r", "N_p", "wall_seconds", "ratio_to_gmi")


def write_sweep_csv(path, rows: Sequence[SweepRow]) -> None:
    write_csv(path, (r.as_csv() for r in rows), header=SWEEP_HEADER)


def read_sweep_csv(path) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            records = list(csv.DictReader(fh))
    except FileNotFoundError:
        raise MissingFileError(f"{path}: no such file", path) from None
    missing = set(SWEEP_HEADER[:6]) - set(records[0] if records else SWEEP_HEADER)
    if missing:
        raise FormatError(f"{path}: not a sweep table (missing columns {sorted(missing)})", path)
    return records


def series(records: Sequence[dict], axis: str, field: str = "u") -> dict[str, list[tuple[float, float]]]:
    """Group sweep records into ``label -> [(axis value, rle), ...]`` sorted by axis value."""
    col = AXIS_COLUMN[axis]
    others = [c for c in ("N_r", "delta_param", "N_p") if c != col]
    out = defaultdict(list)
    for rec in records:
        if rec["field"] != field:
            continue
        label = rec["method"] + "".join(f", {c}={rec[c]}" for c in others if rec["method"] != "ROM" or c == "N_r")
        out[label].append((float(rec[col]), float(rec["rle"])))
    return {k: sorted(set(v)) for k, v in sorted(out.items())}


def plot_sweep(records: Sequence[dict], axis: str, path, field: str = "u") -> None:
    """Line chart of RLE against the swept factor, one series per method and setting."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, pts in series(records, axis, field).items():
        x, y = zip(*pts)
        ax.semilogy(x, y, marker="o", label=label)
    ax.set_xlabel(AXIS_COLUMN[axis])
    ax.set_ylabel(f"RLE ({field})")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def format_table(records: Sequence[dict], axis: str, field: str = "u") -> str:
    lines = []
    for label, pts in series(records, axis, field).items():
        cells = "  ".join(f"{x:g}:{y:.3e}" for x, y in pts)
        lines.append(f"{label:<40s} {cells}")
    return "\n".join(lines)


def run_benchmark(
    n_dof: int = 200_000,
    n_rank: int = 13,
    n_neighbors: int = 4,
    repetitions: int = 5,
    seed: int = 0,
) -> list[TimingReport]:
    """Time GMI and MRPWI on manufactured bases of the requested size (single thread)."""
    family = ManufacturedFamily(n_dof=n_dof, n_rank=n_rank, angle_rate=0.05, base_seed=seed)
    params = np.arange(n_neighbors, dtype=float)
    bases = manufactured_bases(family, params)
    target = 0.5 * (params[0] + params[-1]) + 0.25
    ref = int(np.argmin(np.abs(params - target)))
    w = family.quadrature()
    return [
        benchmark_interpolation(m, bases, ref, target, w, repetitions=repetitions)
        for m in ("GMI", "MRPWI")
    ]


def write_timing_csv(path, reports: Sequence[TimingReport]) -> None:
    gmi = next((r.wall_seconds for r in reports if r.method == "GMI"), None)
    rows = []
    for r in reports:
        ratio = r.wall_seconds / gmi if gmi else float("nan")
        rows.append((r.method, r.n_dof, r.n_rank, r.n_neighbors, r.wall_seconds, ratio))
    write_csv(Path(path), rows, header=TIMING_HEADER)
