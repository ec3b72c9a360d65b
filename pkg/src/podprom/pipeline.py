"""End-to-end PROM construction and the three-factor sweeps.

A :class:`CaseLibrary` holds snapshot data for every available parameter and
caches POD bases. :func:`build_prom` runs the interpolation steps (neighbor
and reference selection, GMI or MRPWI) and :func:`predict` integrates the
Galerkin ROM at the target and scores it against the truth data.
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CatalogError, ConfigError
from .fom import REYNOLDS_GRID, TARGET_REYNOLDS, BurgersConfig, BurgersModel, burgers_run
from .galerkin import DiscreteModel, RomTrajectory, assemble_operators, integrate_rom, reconstruct
from .grassmann import gmi_interpolate
from .metrics import RleReport, rle
from .mrpwi import mrpwi_interpolate
from .plan import CaseCatalog, interval_catalog, select_neighbors, select_reference
from .pod import PodBasis, compute_pod, project, read_basis
from .snapshots import Quadrature, SnapshotSet, read_header, read_snapshots

log = logging.getLogger(__name__)

METHODS = ("GMI", "MRPWI", "ROM")
ROM_SUBSTEPS = 10  # ROM steps per snapshot interval


def burgers_model_factory(overrides: dict | None = None) -> Callable[[float, int], BurgersModel]:
    """Model factory ``(parameter, n_dof) -> BurgersModel`` with ``nu = 1/parameter``."""
    overrides = dict(overrides or {})
    overrides.pop("viscosity", None)

    def factory(parameter: float, n_dof: int) -> BurgersModel:
        kw = dict(overrides)
        kw["n_points"] = n_dof
        return BurgersModel(BurgersConfig.for_reynolds(parameter, **kw))

    return factory


class CaseLibrary:
    """Snapshot sets keyed by parameter, with a thread-safe POD cache."""

    def __init__(
        self,
        cases: dict[float, tuple[SnapshotSet, Quadrature]],
        model_factory: Callable[[float, int], DiscreteModel] | None = None,
    ):
        if not cases:
            raise CatalogError("empty case library")
        self.cases = {float(k): v for k, v in sorted(cases.items())}
        self.model_factory = model_factory or burgers_model_factory()
        self._bases: dict[tuple[float, int], PodBasis] = {}
        self._lock = threading.Lock()

    @classmethod
    def generate(
        cls,
        reynolds: Iterable[float] = REYNOLDS_GRID,
        overrides: dict | None = None,
        jobs: int = 1,
    ) -> "CaseLibrary":
        overrides = dict(overrides or {})
        overrides.pop("viscosity", None)
        reynolds = [float(r) for r in reynolds]
        cfgs = [BurgersConfig.for_reynolds(r, **overrides) for r in reynolds]
        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            runs = list(pool.map(burgers_run, cfgs))
        return cls(dict(zip(reynolds, runs)), burgers_model_factory(overrides))

    @classmethod
    def from_manifest(cls, entries: Sequence[tuple[float, str]], model_factory=None) -> "CaseLibrary":
        cases = {}
        for param, path in entries:
            s, w = read_snapshots(path)
            if w is None:
                raise CatalogError(f"{path}: snapshot file carries no quadrature weights")
            cases[float(param)] = (s, w)
        return cls(cases, model_factory)

    @property
    def parameters(self) -> list[float]:
        return list(self.cases)

    def snapshots(self, parameter: float) -> tuple[SnapshotSet, Quadrature]:
        try:
            return self.cases[float(parameter)]
        except KeyError:
            raise CatalogError(f"no snapshot data for parameter {parameter}") from None

    def basis(self, parameter: float, n_rank: int) -> PodBasis:
        key = (float(parameter), int(n_rank))
        with self._lock:
            cached = self._bases.get(key)
        if cached is None:
            cached = compute_pod(*self.snapshots(parameter), n_rank)
            with self._lock:
                cached = self._bases.setdefault(key, cached)
        return cached

    def catalog(self, target: float, n_neighbors: int, *, include_exact: bool = False) -> CaseCatalog:
        return CaseCatalog(
            tuple((p, p) for p in self.parameters),
            target,
            n_neighbors,
            include_exact=include_exact,
        )


@dataclass(frozen=True)
class PromBuild:
    basis: PodBasis
    neighbors: tuple[float, ...]
    reference: float
    method: str


def select_cases(
    parameters: Sequence[float],
    target: float,
    n_neighbors: int,
    *,
    delta: float | None = None,
    include_exact: bool = False,
) -> tuple[list[float], float]:
    """Neighbor parameters (ascending) and the reference parameter."""
    catalog = CaseCatalog(tuple((p, p) for p in parameters), target, n_neighbors, include_exact=include_exact)
    if delta is not None:
        catalog = interval_catalog(catalog, delta)
    idx = select_neighbors(catalog)
    ref = select_reference(idx, catalog)
    params = catalog.parameters
    return [params[i] for i in idx], params[ref]


def interpolate_bases(
    method: str,
    bases: Sequence[PodBasis],
    reference_index: int,
    target: float,
    w: Quadrature,
    **kwargs,
) -> PodBasis:
    key = method.upper()
    if key == "GMI":
        return gmi_interpolate(bases, reference_index, target, w)
    if key == "MRPWI":
        return mrpwi_interpolate(bases, reference_index, target, w, **kwargs)
    raise ConfigError(f"unknown interpolation method {method!r} (expected GMI or MRPWI)")


def build_prom(
    library: CaseLibrary,
    method: str,
    target: float,
    n_rank: int,
    n_neighbors: int,
    *,
    delta: float | None = None,
    include_exact: bool = False,
    **kwargs,
) -> PromBuild:
    """POD bases of the neighbors, then GMI/MRPWI to ``target``."""
    neighbors, ref = select_cases(
        library.parameters, target, n_neighbors, delta=delta, include_exact=include_exact
    )
    bases = [library.basis(p, n_rank) for p in neighbors]
    w = library.snapshots(ref)[1]
    basis = interpolate_bases(method, bases, neighbors.index(ref), target, w, **kwargs)
    return PromBuild(basis, tuple(neighbors), ref, method.upper())


@dataclass(frozen=True)
class Prediction:
    trajectory: RomTrajectory
    reconstruction: SnapshotSet
    report: RleReport


def predict(
    basis: PodBasis,
    truth: SnapshotSet,
    w: Quadrature,
    model: DiscreteModel,
    *,
    viscosity: float | None = None,
    n_snapshots: int | None = None,
    method_tag: str = "",
) -> Prediction:
    """Integrate the Galerkin ROM from the projected first truth snapshot and score it.

    ``n_snapshots`` limits the horizon to the first records of ``truth``.
    """
    n = truth.n_snap if n_snapshots is None else int(n_snapshots)
    if not 2 <= n <= truth.n_snap:
        raise ConfigError(f"horizon of {n} snapshots is outside [2, {truth.n_snap}]")
    if n < truth.n_snap:
        truth = SnapshotSet(truth.data[:, :n], truth.parameter, truth.dt_snap, truth.t0, truth.field_layout)
    ops = assemble_operators(basis, model, viscosity)
    alpha0 = project(truth.data[:, 0], basis, w)
    traj = integrate_rom(
        ops,
        alpha0,
        truth.dt_snap / ROM_SUBSTEPS,
        (n - 1) * ROM_SUBSTEPS,
        stride=ROM_SUBSTEPS,
        t0=truth.t0,
    )
    recon = reconstruct(basis, traj)
    report = rle(truth, recon, method_tag=method_tag, per_field=True)
    return Prediction(traj, recon, report)


# --- sweeps -----------------------------------------------------------------

AXES = ("n_rank", "delta_param", "n_neighbors")


@dataclass(frozen=True)
class SweepPlan:
    """One sweep axis; each fixed factor may hold several values (crossed)."""

    axis: str
    values: tuple
    fixed: dict = field(default_factory=dict)
    target_param: float = TARGET_REYNOLDS
    methods: tuple[str, ...] = METHODS

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            raise ConfigError("sweep values are empty")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; expected a subset of {METHODS}")
        for key in AXES:
            if key != self.axis and key not in self.fixed:
                raise ConfigError(f"fixed value for {key!r} is missing")
        for cell in self.cells():
            if cell.n_neighbors < 2 and cell.method != "ROM":
                raise ConfigError("interpolation needs n_neighbors >= 2")
            if cell.method == "MRPWI" and cell.n_rank % 2 == 0:
                raise ConfigError(f"MRPWI needs odd N_r, got {cell.n_rank}")

    def cells(self) -> list["SweepCell"]:
        combos = [{}]
        for key in AXES:
            vals = self.values if key == self.axis else self.fixed[key]
            vals = vals if isinstance(vals, (list, tuple)) else (vals,)
            combos = [dict(c, **{key: v}) for c in combos for v in vals]
        out = []
        for c in combos:
            for method in self.methods:
                out.append(
                    SweepCell(
                        method,
                        int(c["n_rank"]),
                        float(c["delta_param"]),
                        int(c["n_neighbors"]),
                        float(self.target_param),
                    )
                )
        return out


@dataclass(frozen=True)
class SweepCell:
    method: str
    n_rank: int
    delta_param: float
    n_neighbors: int
    target: float


@dataclass(frozen=True)
class SweepRow:
    cell: SweepCell
    field: str
    rle: float
    neighbors: tuple[float, ...]

    def as_csv(self) -> tuple:
        c = self.cell
        nb = " ".join(f"{p:g}" for p in self.neighbors)
        return (c.method, c.n_rank, f"{c.delta_param:g}", c.n_neighbors, self.field, self.rle, nb)


SWEEP_HEADER = ("method", "N_r", "delta_param", "N_p", "field", "rle", "neighbors")


def run_cell(library: CaseLibrary, cell: SweepCell) -> list[SweepRow]:
    truth, w = library.snapshots(cell.target)
    model = library.model_factory(cell.target, truth.n_dof)
    if cell.method == "ROM":
        basis = library.basis(cell.target, cell.n_rank)
        neighbors: tuple[float, ...] = (cell.target,)
    else:
        build = build_prom(
            library, cell.method, cell.target, cell.n_rank, cell.n_neighbors, delta=cell.delta_param
        )
        basis, neighbors = build.basis, build.neighbors
    pred = predict(basis, truth, w, model, viscosity=1.0 / cell.target, method_tag=cell.method)
    per_field = pred.report.per_field or {}
    return [SweepRow(cell, name, value, neighbors) for name, value in per_field.items()]


def run_sweep(library: CaseLibrary, plan: SweepPlan, jobs: int = 1) -> list[SweepRow]:
    """Evaluate every cell; rows come back in plan order whatever the completion order."""
    cells = plan.cells()
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(lambda c: run_cell(library, c), cells))
    return [row for rows in results for row in rows]


def _parse_values(text: str) -> tuple:
    """``7,9,11`` or ``7..21:2`` (inclusive range with step)."""
    text = text.strip()
    if ".." in text:
        lo, _, rest = text.partition("..")
        hi, _, step = rest.partition(":")
        lo, hi, step = float(lo), float(hi), float(step or 1)
        vals = np.arange(lo, hi + 0.5 * step, step)
        return tuple(int(v) if float(v).is_integer() else float(v) for v in vals)
    out = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        v = float(item)
        out.append(int(v) if v.is_integer() else v)
    return tuple(out)


def parse_plan(items: dict) -> SweepPlan:
    """Build a plan from ``key=value`` items (see the README for the keys)."""
    try:
        axis = items["axis"]
        values = _parse_values(items["values"])
    except KeyError as exc:
        raise ConfigError(f"sweep plan is missing {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(f"bad sweep values: {exc}") from None
    fixed = {}
    for key in AXES:
        if key != axis and key in items:
            fixed[key] = _parse_values(items[key])
    methods = tuple(m.strip().upper() for m in items.get("methods", ",".join(METHODS)).split(",") if m.strip())
    methods = tuple("ROM" if m in ("ROM-BASELINE", "BASELINE") else m for m in methods)
    return SweepPlan(axis, values, fixed, float(items.get("target", TARGET_REYNOLDS)), methods)


def load_bases(entries: Sequence[tuple[float, str]], n_rank: int | None) -> tuple[list[PodBasis], Quadrature | None]:
    """Load catalog entries as bases: POD files directly, snapshot files via POD."""
    bases, weights = [], None
    for param, path in entries:
        head = read_header(path)
        if head.get("tag") == "pod_modes":
            b = read_basis(path)
            if n_rank is not None:
                b = b.truncate(n_rank)
            bases.append(b)
        else:
            if n_rank is None:
                raise ConfigError(f"{path} holds snapshots; --rank is required")
            s, w = read_snapshots(Path(path))
            if w is None:
                raise CatalogError(f"{path}: snapshot file carries no quadrature weights")
            weights = w
            bases.append(compute_pod(s, w, n_rank))
    return bases, weights
