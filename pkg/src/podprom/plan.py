"""Neighbor/reference selection and Lagrange weights."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import CatalogError, ConfigError, WeightError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CaseCatalog:
    """Available cases ``(parameter, handle)`` and the interpolation target.

    ``handle`` is opaque here: a path, a basis, or anything the caller needs.
    """

    entries: tuple[tuple[float, Any], ...]
    target: float
    n_neighbors: int = 2
    allow_extrapolation: bool = False
    include_exact: bool = False

    def __post_init__(self):
        entries = tuple((float(p), h) for p, h in self.entries)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "target", float(self.target))
        params = [p for p, _ in entries]
        if len(set(params)) != len(params):
            raise CatalogError(f"duplicate parameters in catalog: {sorted(params)}")
        if self.n_neighbors < 1:
            raise CatalogError("n_neighbors must be >= 1")
        if self.n_neighbors > len(entries):
            raise CatalogError(f"n_neighbors={self.n_neighbors} exceeds the {len(entries)} available cases")
        if params and not min(params) <= self.target <= max(params):
            if not self.allow_extrapolation:
                raise CatalogError(f"target {self.target} lies outside [{min(params)}, {max(params)}]")
            log.warning("extrapolating to %s outside [%s, %s]", self.target, min(params), max(params))

    @property
    def parameters(self) -> list[float]:
        return [p for p, _ in self.entries]

    @property
    def n_cases(self) -> int:
        return len(self.entries)


def select_neighbors(catalog: CaseCatalog) -> list[int]:
    """Indices of the ``n_neighbors`` cases closest to the target.

    Ties go to the smaller parameter; the result is sorted by parameter. A
    case sitting exactly on the target is skipped unless ``include_exact``.
    """
    params = catalog.parameters
    target = catalog.target
    eligible = [i for i, p in enumerate(params) if catalog.include_exact or p != target]
    if len(eligible) < catalog.n_neighbors:
        raise CatalogError(f"only {len(eligible)} eligible cases for n_neighbors={catalog.n_neighbors}")
    ranked = sorted(eligible, key=lambda i: (abs(params[i] - target), params[i]))
    chosen = ranked[: catalog.n_neighbors]
    return sorted(chosen, key=lambda i: params[i])


def select_reference(neighbors: Sequence[int], catalog: CaseCatalog) -> int:
    """The neighbor nearest the target (ties to the smaller parameter)."""
    if not neighbors:
        raise CatalogError("no neighbors to choose a reference from")
    params = catalog.parameters
    return min(neighbors, key=lambda i: (abs(params[i] - catalog.target), params[i]))


def lagrange_weights(params: Sequence[float], target: float) -> np.ndarray:
    """``sigma_j = prod_{m != j} (target - g_m) / (g_j - g_m)``."""
    g = [float(p) for p in params]
    if len(set(g)) != len(g):
        raise WeightError(f"interpolation nodes must be distinct, got {g}")
    if not g:
        raise WeightError("no interpolation nodes")
    target = float(target)
    out = np.empty(len(g))
    for j, gj in enumerate(g):
        num = 1.0
        den = 1.0
        for m, gm in enumerate(g):
            if m != j:
                num *= target - gm
                den *= gj - gm
        out[j] = num / den
    return out


def interval_catalog(catalog: CaseCatalog, spacing: float) -> CaseCatalog:
    """Restrict ``catalog`` to cases at ``target +/- spacing * (k + 1/2)``.

    This is the staggered lattice behind a parameter-interval sweep: with
    target 130 and spacing 20 it keeps 120, 140, 100, 160, 80, 180, ...
    """
    keep = []
    for p, h in catalog.entries:
        offset = abs(p - catalog.target) / spacing - 0.5
        if offset >= -1e-9 and abs(offset - round(offset)) < 1e-9:
            keep.append((p, h))
    if len(keep) < catalog.n_neighbors:
        raise CatalogError(
            f"spacing {spacing} leaves {len(keep)} cases around {catalog.target}, "
            f"fewer than n_neighbors={catalog.n_neighbors}"
        )
    return replace(catalog, entries=tuple(keep))


def read_manifest(path) -> list[tuple[float, str]]:
    """Read ``parameter<TAB>path`` lines; relative paths resolve against the manifest."""
    path = Path(path)
    out = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ConfigError(f"{path}:{lineno}: expected 'parameter<TAB>path'")
        try:
            param = float(parts[0])
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad parameter {parts[0]!r}") from exc
        if not math.isfinite(param):
            raise ConfigError(f"{path}:{lineno}: parameter must be finite")
        target = Path(parts[1].strip())
        out.append((param, str(target if target.is_absolute() else path.parent / target)))
    return out


def write_manifest(path, entries: Sequence[tuple[float, str]]) -> None:
    path = Path(path)
    lines = ["# parameter\tpath"]
    for p, f in entries:
        f = Path(f)
        try:
            f = f.relative_to(path.parent)
        except ValueError:
            pass
        lines.append(f"{p!r}\t{f}")
    path.write_text("\n".join(lines) + "\n")
