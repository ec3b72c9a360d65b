"""Weighted proper orthogonal decomposition."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, DataError, DimensionError, HeaderError, PairingError, RankError
from .snapshots import (
    FieldBlock,
    Quadrature,
    SnapshotSet,
    content_hash,
    format_layout,
    parse_layout,
    read_psnap,
    write_psnap,
)

SV_CUTOFF = 1e-12
POD_TAG = "pod_modes"


@dataclass(frozen=True, eq=False)
class PodBasis:
    """Truncated POD basis ``Phi`` with ``Phi^T W Phi = I``.

    Interpolated bases reuse this type. For those, ``singular_values`` are
    copied from the reference case and ``authoritative_sv`` is False;
    ``orthonormal`` is False when the modes were not re-orthonormalized.
    """

    modes: np.ndarray
    singular_values: np.ndarray
    parameter: float
    weights_id: str
    temporal: np.ndarray | None = None
    field_layout: tuple[FieldBlock, ...] = ()
    orthonormal: bool = True
    authoritative_sv: bool = True
    provenance: str = "pod"
    mean: np.ndarray | None = None

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=np.float64)
        if modes.ndim == 1:
            modes = modes[:, None]
        modes.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        sv = np.asarray(self.singular_values, dtype=np.float64).ravel()
        if sv.size != modes.shape[1]:
            raise DimensionError(f"{sv.size} singular values for {modes.shape[1]} modes")
        object.__setattr__(self, "singular_values", sv)
        object.__setattr__(self, "parameter", float(self.parameter))
        layout = tuple(FieldBlock(*b) for b in self.field_layout) or (FieldBlock("u", 1, modes.shape[0]),)
        object.__setattr__(self, "field_layout", layout)

    @property
    def n_dof(self) -> int:
        return self.modes.shape[0]

    @property
    def n_rank(self) -> int:
        return self.modes.shape[1]

    @cached_property
    def id(self) -> str:
        return content_hash(self.modes)

    def weighted_modes(self, w: Quadrature) -> np.ndarray:
        """``U = W^{1/2} Phi``, checking that ``w`` is the basis' quadrature."""
        check_weights(self, w)
        return w.sqrt_weights[:, None] * self.modes

    def truncate(self, n_rank: int) -> "PodBasis":
        if not 1 <= n_rank <= self.n_rank:
            raise RankError(f"cannot truncate a rank-{self.n_rank} basis to {n_rank}")
        return PodBasis(
            self.modes[:, :n_rank],
            self.singular_values[:n_rank],
            self.parameter,
            self.weights_id,
            None if self.temporal is None else self.temporal[:, :n_rank],
            self.field_layout,
            self.orthonormal,
            self.authoritative_sv,
            self.provenance,
            self.mean,
        )


def check_weights(basis: PodBasis, w: Quadrature) -> None:
    if w.size != basis.n_dof:
        raise PairingError(f"basis has {basis.n_dof} dofs, weights {w.size}")
    if basis.weights_id != w.id:
        raise PairingError(f"basis was built with weights {basis.weights_id}, got {w.id}")


def _sign_convention(u: np.ndarray, sqrt_w: np.ndarray) -> np.ndarray:
    """+1/-1 per column so that each mode's largest-magnitude entry is positive."""
    phi = u / sqrt_w[:, None]
    idx = np.argmax(np.abs(phi), axis=0)  # first occurrence on ties
    signs = np.sign(phi[idx, np.arange(phi.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def _svd_direct(a: np.ndarray):
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return u, s, vt.T


def _svd_snapshots(a: np.ndarray):
    gram = a.T @ a
    evals, evecs = np.linalg.eigh(gram)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    v = evecs[:, order]
    s = np.sqrt(evals)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (a @ v) / s
    return u, s, v


def compute_pod(
    s: SnapshotSet,
    w: Quadrature,
    n_rank: int,
    *,
    method: str = "svd",
    subtract_mean: bool = False,
) -> PodBasis:
    """Rank-``n_rank`` POD of ``s`` under the inner product defined by ``w``.

    ``method="svd"`` takes the thin SVD of ``W^{1/2} Q``; ``"snapshots"`` is
    the method of snapshots (eigendecomposition of the ``N_s x N_s`` Gram
    matrix). Both agree for well-separated spectra, but only the direct SVD
    keeps modes orthonormal to 1e-10 when trailing singular values fall below
    ~1e-4 of the leading one, so it is the default.
    """
    if w.size != s.n_dof:
        raise DimensionError(f"weights have {w.size} entries, snapshots {s.n_dof} dofs")
    if not np.all(np.isfinite(s.data)):
        raise DataError("snapshot data contain non-finite values")
    if not 1 <= n_rank <= min(s.n_dof, s.n_snap):
        raise RankError(f"n_rank={n_rank} must be in [1, min(N_n, N_s)] = [1, {min(s.n_dof, s.n_snap)}]")

    q = s.data
    mean = None
    if subtract_mean:
        mean = q.mean(axis=1)
        q = q - mean[:, None]
    a = w.sqrt_weights[:, None] * q
    if method == "svd":
        u, sv, v = _svd_direct(a)
    elif method == "snapshots":
        u, sv, v = _svd_snapshots(a)
    else:
        raise ConfigError(f"unknown POD method {method!r}")

    if sv[0] == 0.0:
        raise RankError("snapshot data are identically zero")
    if sv[n_rank - 1] < SV_CUTOFF * sv[0]:
        usable = int(np.sum(sv >= SV_CUTOFF * sv[0]))
        raise RankError(
            f"mode {n_rank} has sigma/sigma_1 = {sv[n_rank - 1] / sv[0]:.3e} < {SV_CUTOFF:g}; "
            f"at most {usable} modes are resolvable"
        )
    u, sv, v = u[:, :n_rank], sv[:n_rank], v[:, :n_rank]
    signs = _sign_convention(u, w.sqrt_weights)
    u = u * signs
    v = v * signs
    return PodBasis(
        modes=u / w.sqrt_weights[:, None],
        singular_values=sv,
        parameter=s.parameter,
        weights_id=w.id,
        temporal=v,
        field_layout=s.field_layout,
        mean=mean,
    )


def gram(basis: PodBasis, w: Quadrature) -> np.ndarray:
    """``Phi^T W Phi``."""
    u = basis.weighted_modes(w)
    return u.T @ u


def orthonormality_error(basis: PodBasis, w: Quadrature) -> float:
    return float(np.max(np.abs(gram(basis, w) - np.eye(basis.n_rank))))


def project(q, basis: PodBasis, w: Quadrature) -> np.ndarray:
    """Coefficients of the W-orthogonal projection of ``q`` onto span(Phi).

    ``q`` may be a state vector or a matrix of states (columns); the result
    has shape ``(N_r,)`` or ``(N_r, n_cols)``. For bases flagged
    non-orthonormal the normal equations with the Gram matrix are solved.
    """
    check_weights(basis, w)
    q = np.asarray(q, dtype=np.float64)
    if q.shape[0] != basis.n_dof:
        raise DimensionError(f"state has {q.shape[0]} dofs, basis {basis.n_dof}")
    if basis.mean is not None:
        q = q - (basis.mean if q.ndim == 1 else basis.mean[:, None])
    rhs = basis.modes.T @ (w.weights * q.T).T
    if basis.orthonormal:
        return rhs
    return np.linalg.solve(gram(basis, w), rhs)


def write_basis(basis: PodBasis, path) -> None:
    header = {
        "parameter": repr(basis.parameter),
        "dt_snap": "1.0",
        "t0": "0.0",
        "field_layout": format_layout(basis.field_layout),
        "tag": POD_TAG,
        "singular_values": ",".join(repr(float(x)) for x in basis.singular_values),
        "weights_id": basis.weights_id,
        "orthonormal": int(basis.orthonormal),
        "authoritative_sv": int(basis.authoritative_sv),
        "provenance": basis.provenance,
    }
    write_psnap(path, basis.modes, header)


def read_basis(path) -> PodBasis:
    header, data, _ = read_psnap(path)
    if header.get("tag") != POD_TAG:
        raise HeaderError(f"{path}: not a POD basis file (tag={header.get('tag')!r})", path)
    sv = np.array([float(x) for x in header["singular_values"].split(",") if x], dtype=np.float64)
    return PodBasis(
        modes=data,
        singular_values=sv,
        parameter=float(header["parameter"]),
        weights_id=header["weights_id"],
        field_layout=parse_layout(header.get("field_layout", "")),
        orthonormal=bool(int(header.get("orthonormal", "1"))),
        authoritative_sv=bool(int(header.get("authoritative_sv", "1"))),
        provenance=header.get("provenance", "pod"),
    )
