"""Acceptance checks, one test per numbered criterion.

Every test emits a single ``criterion N PASS|FAIL ...`` line; the lines are
also repeated in the pytest terminal summary.  Run with ``-s`` to see them
inline.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from podprom.fom import REYNOLDS_GRID, ManufacturedFamily, manufactured_bases
from podprom.galerkin import assemble_operators, galerkin_residual
from podprom.grassmann import TangentImage, exp_map, gmi_interpolate, log_map
from podprom.metrics import principal_angles
from podprom.mrpwi import mrpwi_interpolate
from podprom.pipeline import CaseLibrary, SweepCell, predict, run_cell
from podprom.plan import lagrange_weights
from podprom.pod import PodBasis, compute_pod, orthonormality_error
from podprom.report import run_benchmark, write_timing_csv
from podprom.snapshots import FieldBlock, Quadrature, SnapshotSet, read_snapshots, write_snapshots

from conftest import random_basis

RESULTS: list[str] = []
TARGET = 130.0
RANKS = tuple(range(7, 22, 2))
DELTAS = (10, 20, 30, 40)


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def timed_library():
    start = time.perf_counter()
    lib = CaseLibrary.generate(REYNOLDS_GRID)
    return lib, time.perf_counter() - start


@pytest.fixture(scope="module")
def library(timed_library):
    return timed_library[0]


_rle_cache: dict[SweepCell, float] = {}


def cell_rle(library, method, n_rank, delta, n_p):
    cell = SweepCell(method, n_rank, float(delta), n_p, TARGET)
    if cell not in _rle_cache:
        _rle_cache[cell] = run_cell(library, cell)[0].rle
    return _rle_cache[cell]


def _fmt(seq):
    return "[" + ", ".join(f"{x:.3e}" for x in seq) + "]"


def test_criterion_01_orthonormality(timed_library):
    lib, gen_seconds = timed_library
    start = time.perf_counter()
    worst = 0.0
    for g in lib.parameters:
        s, w = lib.snapshots(g)
        worst = max(worst, orthonormality_error(compute_pod(s, w, 21), w))
    seconds = gen_seconds + time.perf_counter() - start
    ok = len(lib.parameters) == 17 and worst <= 1e-10 and seconds <= 60
    record(1, ok, f"17 cases, N_r=21: max|Phi^T W Phi - I| = {worst:.2e}, {seconds:.1f} s (FOM runs included)")


def test_criterion_02_grassmann_roundtrip():
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst, pairs = 0.0, 0
    for r in (1, 5, 13):
        for _ in range(100):
            w = Quadrature(rng.uniform(0.5, 2.0, 200))
            ref, other = random_basis(rng, 200, r, w), random_basis(rng, 200, r, w)
            back = exp_map(ref, log_map(ref, other, w), w)
            worst = max(worst, float(np.max(principal_angles(back, other, w))))
            pairs += 1
    seconds = time.perf_counter() - start
    record(2, worst <= 1e-8 and seconds <= 10, f"{pairs} pairs, max angle {worst:.2e}, {seconds:.2f} s")


def test_criterion_03_analytic_geodesic():
    w = Quadrature(np.ones(2))
    theta = math.pi / 6
    e1 = PodBasis(np.array([[1.0], [0.0]]), np.ones(1), 0.0, w.id)
    phi = PodBasis(np.array([[math.cos(theta)], [math.sin(theta)]]), np.ones(1), 1.0, w.id)
    gamma = log_map(e1, phi, w).gamma
    log_err = float(np.max(np.abs(gamma - np.array([[0.0], [theta]]))))
    out = exp_map(e1, TangentImage(np.array([[0.0], [theta]]), e1.id, 1.0), w)
    exp_err = float(np.max(np.abs(out.modes - phi.modes)))
    record(3, max(log_err, exp_err) <= 1e-12, f"log error {log_err:.1e}, exp error {exp_err:.1e}")


def test_criterion_04_node_reproduction():
    family = ManufacturedFamily(n_dof=512, n_rank=7, angle_rate=0.1, base_seed=11)
    params = [0.0, 1.0, 2.0, 3.0]
    bases = manufactured_bases(family, params)
    w = family.quadrature()
    gmi = max(float(np.max(principal_angles(gmi_interpolate(bases, 1, g, w), b, w))) for g, b in zip(params, bases))
    mrp = max(float(np.max(principal_angles(mrpwi_interpolate(bases, 1, g, w), b, w))) for g, b in zip(params, bases))
    record(4, gmi <= 1e-8 and mrp <= 1e-10, f"max angle GMI {gmi:.1e}, MRPWI {mrp:.1e}")


def test_criterion_05_galerkin_consistency(library):
    s, w = library.snapshots(TARGET)
    basis = library.basis(TARGET, 13)
    model = library.model_factory(TARGET, s.n_dof)
    ops = assemble_operators(basis, model, 1 / TARGET)
    rng = np.random.default_rng(5)
    alphas = [rng.standard_normal(13) for _ in range(20)]
    err = galerkin_residual(basis, model, ops, alphas)
    record(5, err <= 1e-10, f"20 coefficient vectors, N_r=13: relative error {err:.1e}")


def test_criterion_06_baseline_rom(library):
    start = time.perf_counter()
    s, w = library.snapshots(TARGET)
    basis = compute_pod(s, w, 13)
    pred = predict(basis, s, w, library.model_factory(TARGET, s.n_dof), viscosity=1 / TARGET)
    seconds = time.perf_counter() - start
    value = pred.report.rle
    record(6, value <= 1e-3 and seconds <= 30, f"Re=130, N_r=13: RLE {value:.3e} over {s.n_snap} snapshots, {seconds:.2f} s")


def test_criterion_07_rank_trend(library):
    lines, ok = [], True
    for method in ("GMI", "MRPWI"):
        for n_p in (2, 4):
            seq = [cell_rle(library, method, r, 20, n_p) for r in RANKS]
            good = seq[-1] <= 0.5 * seq[0] and all(b <= 1.1 * a for a, b in zip(seq, seq[1:]))
            ok &= good
            lines.append(f"{method} N_p={n_p} {_fmt(seq)}")
    record(7, ok, "N_r 7..21: " + "; ".join(lines))


def test_criterion_08_interval_trend(library):
    lines, ok = [], True
    for method in ("GMI", "MRPWI"):
        for n_p in (2, 4):
            seq = [cell_rle(library, method, 13, d, n_p) for d in DELTAS]
            good = all(b >= a / 1.1 for a, b in zip(seq, seq[1:]))
            ok &= good
            lines.append(f"{method} N_p={n_p} {_fmt(seq)}")
    record(8, ok, "delta Re 10..40: " + "; ".join(lines))


def test_criterion_09_neighbor_trend(library):
    lines, ok = [], True
    for method in ("GMI", "MRPWI"):
        seq = [cell_rle(library, method, 13, 20, n_p) for n_p in (2, 3, 4, 5)]
        ok &= seq[-1] <= seq[0]
        lines.append(f"{method} N_p=2..5 {_fmt(seq)}")
    record(9, ok, "; ".join(lines))


def test_criterion_10_method_parity(library):
    cells = {(r, 20, p) for r in RANKS for p in (2, 4)}
    cells |= {(13, d, p) for d in DELTAS for p in (2, 4)}
    cells |= {(13, 20, p) for p in (2, 3, 4, 5)}
    worst, where = 0.0, None
    for r, d, p in sorted(cells):
        g = cell_rle(library, "GMI", r, d, p)
        m = cell_rle(library, "MRPWI", r, d, p)
        factor = max(m / g, g / m)
        if factor > worst:
            worst, where = factor, (r, d, p)
    record(10, worst <= 2.0, f"{len(cells)} cells, worst MRPWI/GMI factor {worst:.3f} at (N_r, dRe, N_p)={where}")


def test_criterion_11_efficiency(tmp_path):
    gmi, mrpwi = run_benchmark(n_dof=200_000, n_rank=13, n_neighbors=4, repetitions=5)
    write_timing_csv(tmp_path / "timing.csv", [gmi, mrpwi])
    ratio = mrpwi.wall_seconds / gmi.wall_seconds
    written = (tmp_path / "timing.csv").read_text().splitlines()[2].split(",")[-1]
    ok = mrpwi.wall_seconds < gmi.wall_seconds and float(written) == pytest.approx(ratio)
    record(11, ok, f"N_n=2e5, N_r=13, N_p=4: GMI {gmi.wall_seconds:.3f} s, MRPWI {mrpwi.wall_seconds:.3f} s, ratio {ratio:.2f}")


def test_criterion_12_lagrange():
    rng = np.random.default_rng(12)
    partition = delta = 0.0
    for _ in range(200):
        nodes = np.sort(rng.choice(np.arange(-200, 201), size=rng.integers(2, 7), replace=False) / 4.0)
        t = rng.uniform(nodes[0], nodes[-1])
        partition = max(partition, abs(lagrange_weights(nodes, t).sum() - 1.0))
        for k, g in enumerate(nodes):
            delta = max(delta, float(np.max(np.abs(lagrange_weights(nodes, g) - np.eye(len(nodes))[k]))))
    params = [100, 120, 140, 160]
    oracle = []
    for j, gj in enumerate(params):
        v = Fraction(1)
        for m, gm in enumerate(params):
            if m != j:
                v *= Fraction(130 - gm, gj - gm)
        oracle.append(v)
    got = [Fraction(x) for x in lagrange_weights(params, 130)]
    exact = got == oracle == [Fraction(-1, 16), Fraction(9, 16), Fraction(9, 16), Fraction(-1, 16)]
    ok = partition <= 1e-12 and delta <= 1e-14 and exact
    record(12, ok, f"partition {partition:.1e}, node delta {delta:.1e}, 4-node set exact={exact}")


def test_criterion_13_psnap_roundtrip(tmp_path):
    rng = np.random.default_rng(13)
    path = tmp_path / "r.psnap"
    mismatches = 0
    for i in range(1000):
        n_snap = int(rng.integers(1, 9))
        if i % 3 == 0:
            layout = (FieldBlock("u", 2, 3), FieldBlock("p", 1, 3))
            n_dof = 9
        else:
            layout = ()
            n_dof = int(rng.integers(1, 40))
        raw = rng.integers(0, 2**64, size=(n_dof, n_snap), dtype=np.uint64).view(np.float64)
        data = np.where(np.isfinite(raw), raw, rng.standard_normal(raw.shape))
        s = SnapshotSet(data, float(rng.standard_normal() * 100), float(rng.uniform(1e-6, 1)), float(rng.standard_normal()), layout)
        w = Quadrature(rng.uniform(1e-3, 10, n_dof)) if i % 2 else None
        write_snapshots(s, w, path)
        s2, w2 = read_snapshots(path)
        same = (
            s2.data.tobytes() == s.data.tobytes()
            and (s2.parameter, s2.dt_snap, s2.t0, s2.field_layout) == (s.parameter, s.dt_snap, s.t0, s.field_layout)
            and ((w is None and w2 is None) or (w is not None and w2.weights.tobytes() == w.weights.tobytes()))
        )
        mismatches += not same
    record(13, mismatches == 0, f"1000 files, {mismatches} mismatches")
