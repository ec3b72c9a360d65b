"""Mode-realigned pointwise interpolation (MRPWI).

Modes are packed into complex columns (mode 1 alone, then pairs
``phi^{2k-2} + i phi^{2k-1}``), aligned to a reference pack by a sign flip of
the real and imaginary parts and a phase rotation by Kasner's pseudo-angle,
and then interpolated entry by entry with Lagrange weights. Inner products
are plain dot products of ``W^{1/2}``-scaled modes, which is why packs hold
weighted modes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionError, PairingError, ParityError, UndefinedAngleError
from .plan import lagrange_weights
from .pod import PodBasis
from .snapshots import Quadrature, content_hash, write_csv

log = logging.getLogger(__name__)

ANGLE_TOL = 1e-12
PAIR_TOL = 0.2


@dataclass(frozen=True, eq=False)
class ComplexModePack:
    """Complex-paired modes of one case, in ``W^{1/2}`` coordinates."""

    cmodes: np.ndarray
    parameter: float
    aligned_to: str | None = None
    applied_angles: np.ndarray | None = None
    applied_signs: np.ndarray | None = None  # (n_cols, 2): real sign, imaginary sign

    @property
    def n_cols(self) -> int:
        return self.cmodes.shape[1]

    @property
    def n_rank(self) -> int:
        return 2 * self.n_cols - 1

    @cached_property
    def id(self) -> str:
        return content_hash(self.cmodes)

    def real_modes(self) -> np.ndarray:
        """Unpack to ``N_n x N_r`` real modes (still ``W^{1/2}``-scaled)."""
        c = self.cmodes
        out = np.empty((c.shape[0], self.n_rank))
        out[:, 0] = c[:, 0].real
        out[:, 1::2] = c[:, 1:].real
        out[:, 2::2] = c[:, 1:].imag
        return out


def complexify(basis: PodBasis, w: Quadrature) -> ComplexModePack:
    r = basis.n_rank
    if r % 2 == 0:
        raise ParityError(f"MRPWI needs an odd number of modes, got N_r={r}; use N_r={r - 1} or {r + 1}")
    u = basis.weighted_modes(w)
    c = np.empty((u.shape[0], (r + 1) // 2), dtype=np.complex128, order="F")  # contiguous columns
    c[:, 0] = u[:, 0]
    c[:, 1:] = u[:, 1::2] + 1j * u[:, 2::2]
    return ComplexModePack(c, basis.parameter)


def _check_shapes(reference: ComplexModePack, pack: ComplexModePack) -> None:
    if reference.cmodes.shape != pack.cmodes.shape:
        raise DimensionError(f"pack shapes differ: {reference.cmodes.shape} vs {pack.cmodes.shape}")


def _sgn(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, 1.0, -1.0)


def sign_align(reference: ComplexModePack, pack: ComplexModePack) -> ComplexModePack:
    """Flip real and imaginary parts so their dot products with the reference are >= 0."""
    _check_shapes(reference, pack)
    ref, c = reference.cmodes, pack.cmodes
    s_re = _sgn(np.einsum("ik,ik->k", ref.real, c.real))
    s_im = _sgn(np.einsum("ik,ik->k", ref.imag, c.imag))
    aligned = s_re * c.real + 1j * (s_im * c.imag)
    return replace(
        pack,
        cmodes=aligned,
        aligned_to=reference.id,
        applied_signs=np.column_stack([s_re, s_im]),
    )


def kasner_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Argument of ``<a, b> = a^H b``, in ``[-pi, pi]``."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise DimensionError(f"vector shapes differ: {a.shape} vs {b.shape}")
    inner = np.vdot(a, b)
    scale = np.linalg.norm(a) * np.linalg.norm(b)
    if not abs(inner) > ANGLE_TOL * scale:
        raise UndefinedAngleError(f"|<a,b>| = {abs(inner):.3e} is too small to define a phase (scale {scale:.3e})")
    return float(np.angle(inner))


def rotation_align(reference: ComplexModePack, pack: ComplexModePack) -> ComplexModePack:
    """Rotate each column by ``exp(-i phi)`` so its Kasner angle to the reference vanishes."""
    _check_shapes(reference, pack)
    angles = np.empty(pack.n_cols)
    for k in range(pack.n_cols):
        try:
            angles[k] = kasner_angle(reference.cmodes[:, k], pack.cmodes[:, k])
        except UndefinedAngleError as exc:
            exc.column = k
            exc.args = (f"column {k + 1}: {exc.args[0]}",)
            raise
    return replace(
        pack,
        cmodes=pack.cmodes * np.exp(-1j * angles),
        aligned_to=reference.id,
        applied_angles=angles,
    )


def align(reference: ComplexModePack, pack: ComplexModePack) -> ComplexModePack:
    """Sign alignment followed by rotation alignment; both corrections are kept."""
    signed = sign_align(reference, pack)
    rotated = rotation_align(reference, signed)
    return replace(rotated, applied_signs=signed.applied_signs)


def pair_integrity(basis: PodBasis) -> list[tuple[int, float]]:
    """Mode pairs whose singular-value ratio departs from 1 by more than 20%.

    Returns ``(complex column index, ratio)`` for every suspicious pair; an
    unequal pair suggests the modes are not a travelling-wave pair.
    """
    if not basis.authoritative_sv:
        return []
    sv = basis.singular_values
    bad = []
    for k in range(2, (basis.n_rank + 1) // 2 + 1):
        hi, lo = sv[2 * k - 3], sv[2 * k - 2]
        ratio = hi / lo if lo > 0 else np.inf
        if abs(ratio - 1.0) > PAIR_TOL:
            bad.append((k, float(ratio)))
    return bad


def mrpwi_interpolate(
    bases: Sequence[PodBasis],
    reference_index: int,
    target_param: float,
    w: Quadrature,
    *,
    orthonormalize: bool = False,
    check_pairs: bool = True,
    return_packs: bool = False,
):
    """Interpolate POD modes to ``target_param`` by MRPWI.

    The output is not re-orthonormalized unless ``orthonormalize`` is set;
    its singular values are the reference's and are marked non-authoritative.
    With ``return_packs`` the aligned packs are returned as well.
    """
    if len(bases) < 2:
        raise DimensionError("MRPWI needs at least two bases")
    sigma = lagrange_weights([b.parameter for b in bases], target_param)
    ref_basis = bases[reference_index]
    packs = []
    for j, basis in enumerate(bases):
        if basis.modes.shape != ref_basis.modes.shape:
            raise DimensionError(f"case {j}: basis shape {basis.modes.shape} vs {ref_basis.modes.shape}")
        if basis.weights_id != ref_basis.weights_id:
            raise PairingError(f"case {j}: bases were built with different quadrature weights")
        try:
            packs.append(complexify(basis, w))
        except ParityError as exc:
            exc.args = (f"case {j}: {exc.args[0]}",)
            raise
        bad = pair_integrity(basis) if check_pairs else []
        if bad:
            log.warning(
                "case %d (parameter %g): unequal mode pairs (column: sigma ratio) %s; "
                "modes may not form travelling-wave pairs",
                j,
                basis.parameter,
                ", ".join(f"{k}: {ratio:.2f}" for k, ratio in bad),
            )
    ref = packs[reference_index]
    aligned = []
    for j, pack in enumerate(packs):
        try:
            aligned.append(align(ref, pack))
        except UndefinedAngleError as exc:
            exc.case = j
            exc.args = (f"case {j} (parameter {pack.parameter}): {exc.args[0]}",)
            raise

    interp = np.zeros_like(ref.cmodes)
    for s, pack in zip(sigma, aligned):
        interp += s * pack.cmodes
    u = ComplexModePack(interp, float(target_param)).real_modes()
    if orthonormalize:
        u, rfac = np.linalg.qr(u)
        u *= np.where(np.diag(rfac) < 0, -1.0, 1.0)
    out = PodBasis(
        modes=u / w.sqrt_weights[:, None],
        singular_values=ref_basis.singular_values,
        parameter=float(target_param),
        weights_id=ref_basis.weights_id,
        field_layout=ref_basis.field_layout,
        orthonormal=orthonormalize,
        authoritative_sv=False,
        provenance="mrpwi",
    )
    if return_packs:
        return out, aligned
    return out


def write_alignment_csv(path, packs: Sequence[ComplexModePack]) -> None:
    """Diagnostics rows: case, column, sign_re, sign_im, angle."""
    rows = []
    for j, pack in enumerate(packs):
        signs = pack.applied_signs if pack.applied_signs is not None else np.ones((pack.n_cols, 2))
        angles = pack.applied_angles if pack.applied_angles is not None else np.zeros(pack.n_cols)
        for k in range(pack.n_cols):
            rows.append((j, k + 1, int(signs[k, 0]), int(signs[k, 1]), float(angles[k])))
    write_csv(Path(path), rows, header=("case", "column", "sign_re", "sign_im", "angle"))
