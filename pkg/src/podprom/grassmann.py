"""Grassmann manifold interpolation of POD bases.

All manifold formulas run on ``U = W^{1/2} Phi``, where weighted
orthonormality becomes Euclidean orthonormality; results are mapped back to
``Phi`` coordinates at the boundary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, GeodesicDomainError, PairingError
from .plan import lagrange_weights
from .pod import PodBasis
from .snapshots import Quadrature

MIN_ALIGNMENT = 1e-10


@dataclass(frozen=True, eq=False)
class TangentImage:
    """Tangent vector at a reference basis, stored in ``Phi`` coordinates."""

    gamma: np.ndarray
    reference_id: str
    parameter: float


def _check_compatible(a: PodBasis, b: PodBasis) -> None:
    if a.modes.shape != b.modes.shape:
        raise DimensionError(f"basis shapes differ: {a.modes.shape} vs {b.modes.shape}")
    if a.weights_id != b.weights_id:
        raise PairingError("bases were built with different quadrature weights")


def log_map(reference: PodBasis, target: PodBasis, w: Quadrature) -> TangentImage:
    """Tangent representative of ``target`` at ``reference``."""
    _check_compatible(reference, target)
    u0 = reference.weighted_modes(w)
    uj = target.weighted_modes(w)
    c = u0.T @ uj
    # (U0^T Uj)^{-1} through its SVD so that near-orthogonality is diagnosable
    pc, sc, qct = np.linalg.svd(c)
    if sc[-1] < MIN_ALIGNMENT:
        raise GeodesicDomainError(
            f"reference and target are nearly orthogonal: smallest singular value of U0^T Uj is {sc[-1]:.3e}",
            singular_value=float(sc[-1]),
        )
    c_inv = (qct.T / sc) @ pc.T
    x = (uj - u0 @ c) @ c_inv
    m, xi, nt = np.linalg.svd(x, full_matrices=False)
    gamma_u = (m * np.arctan(xi)) @ nt
    return TangentImage(gamma_u / w.sqrt_weights[:, None], reference.id, target.parameter)


def exp_map(reference: PodBasis, tangent: TangentImage, w: Quadrature, parameter: float | None = None) -> PodBasis:
    """Point on the manifold reached from ``reference`` along ``tangent``."""
    if tangent.reference_id != reference.id:
        raise PairingError("tangent image belongs to a different reference basis")
    if tangent.gamma.shape != reference.modes.shape:
        raise DimensionError(f"tangent shape {tangent.gamma.shape} vs basis {reference.modes.shape}")
    u0 = reference.weighted_modes(w)
    gamma_u = w.sqrt_weights[:, None] * tangent.gamma
    m, xi, nt = np.linalg.svd(gamma_u, full_matrices=False)
    if np.any(xi >= math.pi / 2):
        warnings.warn(
            f"tangent norm {xi.max():.3f} >= pi/2: the interpolant may leave the injectivity radius",
            RuntimeWarning,
            stacklevel=2,
        )
    u = ((u0 @ nt.T) * np.cos(xi) + m * np.sin(xi)) @ nt
    return PodBasis(
        modes=u / w.sqrt_weights[:, None],
        singular_values=reference.singular_values,
        parameter=tangent.parameter if parameter is None else parameter,
        weights_id=reference.weights_id,
        field_layout=reference.field_layout,
        authoritative_sv=False,
        provenance="gmi",
    )


def gmi_interpolate(
    bases: Sequence[PodBasis],
    reference_index: int,
    target_param: float,
    w: Quadrature,
) -> PodBasis:
    """Interpolate the subspaces of ``bases`` to ``target_param`` on the Grassmann manifold."""
    if len(bases) < 2:
        raise DimensionError("GMI needs at least two bases")
    sigma = lagrange_weights([b.parameter for b in bases], target_param)
    ref = bases[reference_index]
    gamma = np.zeros_like(ref.modes)
    for j, (basis, s) in enumerate(zip(bases, sigma)):
        _check_compatible(ref, basis)
        if j == reference_index:
            continue  # log of the base point is zero
        try:
            tangent = log_map(ref, basis, w)
        except GeodesicDomainError as exc:
            exc.case = j
            exc.args = (f"case {j} (parameter {basis.parameter}): {exc.args[0]}",)
            raise
        gamma += s * tangent.gamma
    return exp_map(ref, TangentImage(gamma, ref.id, float(target_param)), w)
