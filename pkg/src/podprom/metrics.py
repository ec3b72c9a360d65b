"""Error measures, subspace distances and interpolation timing."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import DegenerateTruthError, DimensionError, ValidationError
from .pod import PodBasis, check_weights
from .snapshots import Quadrature, SnapshotSet, field_slice


@dataclass(frozen=True)
class RleReport:
    rle: float
    n_snapshots_used: int
    per_field: dict[str, float] | None = None
    method_tag: str = ""


@dataclass(frozen=True)
class TimingReport:
    method: str
    n_dof: int
    n_rank: int
    n_neighbors: int
    wall_seconds: float
    repetitions: int
    samples: tuple[float, ...] = ()


def _rle_block(truth: np.ndarray, pred: np.ndarray, weights: np.ndarray | None) -> float:
    diff = pred - truth
    if weights is None:
        num, den = np.sum(diff * diff), np.sum(truth * truth)
    else:
        num, den = np.sum(weights[:, None] * diff * diff), np.sum(weights[:, None] * truth * truth)
    if den == 0:
        raise DegenerateTruthError("truth snapshots have zero norm")
    return float(np.sqrt(num / den))


def rle(
    truth: SnapshotSet,
    prediction: SnapshotSet,
    field: str | None = None,
    *,
    method_tag: str = "",
    weights: Quadrature | None = None,
    per_field: bool = False,
) -> RleReport:
    """Relative L2 error over all snapshots.

    ``sqrt(sum_j |pred_j - truth_j|^2 / sum_j |truth_j|^2)`` with plain
    Euclidean norms unless ``weights`` is given. ``field`` restricts both sets
    to one block of the field layout.
    """
    if truth.data.shape != prediction.data.shape:
        raise DimensionError(f"truth {truth.data.shape} vs prediction {prediction.data.shape}")
    if np.max(np.abs(truth.times - prediction.times)) > 1e-9:
        raise DimensionError("truth and prediction time stamps differ")
    w = None if weights is None else weights.weights
    if field is None:
        value = _rle_block(truth.data, prediction.data, w)
    else:
        sl = field_slice(truth.field_layout, field)
        value = _rle_block(truth.data[sl], prediction.data[sl], None if w is None else w[sl])
    fields = None
    if per_field:
        fields = {}
        for block in truth.field_layout:
            sl = field_slice(truth.field_layout, block.name)
            fields[block.name] = _rle_block(truth.data[sl], prediction.data[sl], None if w is None else w[sl])
    return RleReport(value, truth.n_snap, fields, method_tag)


def _orthonormal_weighted(basis: PodBasis, w: Quadrature) -> np.ndarray:
    u = basis.weighted_modes(w)
    if basis.orthonormal:
        return u
    q, _ = np.linalg.qr(u)
    return q


def principal_angles(a: PodBasis, b: PodBasis, w: Quadrature) -> np.ndarray:
    """Principal angles between span(a) and span(b) in the weighted geometry, ascending.

    Cosines come from the singular values of ``U_a^T U_b`` (clamped to
    [0, 1]); angles below pi/4 are taken from the sines, the singular values
    of ``(I - U_a U_a^T) U_b``, which stay accurate near zero where arccos
    cannot resolve angles below ~1e-8. Bases flagged non-orthonormal are
    orthonormalized first.
    """
    if a.n_dof != b.n_dof:
        raise DimensionError(f"bases have {a.n_dof} and {b.n_dof} dofs")
    check_weights(a, w)
    check_weights(b, w)
    ua = _orthonormal_weighted(a, w)
    ub = _orthonormal_weighted(b, w)
    if ua.shape[1] > ub.shape[1]:
        ua, ub = ub, ua
    cos = np.clip(np.linalg.svd(ua.T @ ub, compute_uv=False), 0.0, 1.0)  # descending
    angles = np.arccos(cos)
    sin = np.clip(np.linalg.svd(ub - ua @ (ua.T @ ub), compute_uv=False), 0.0, 1.0)[::-1]
    sin = sin[: cos.size]  # extra columns of ub contribute sines of 1
    small = cos**2 > 0.5
    angles[small] = np.arcsin(sin[small])
    return np.sort(angles)


def _interpolator(method: str):
    from .grassmann import gmi_interpolate
    from .mrpwi import mrpwi_interpolate

    key = method.lower()
    if key == "gmi":
        return gmi_interpolate
    if key == "mrpwi":
        return lambda *args: mrpwi_interpolate(*args, check_pairs=False)
    raise ValidationError(f"unknown interpolation method {method!r}")


def benchmark_interpolation(
    method: str,
    bases: Sequence[PodBasis],
    reference_index: int,
    target: float,
    w: Quadrature,
    *,
    repetitions: int = 5,
    threads: int = 1,
) -> TimingReport:
    """Median wall time of one interpolation call (after a warm-up call)."""
    if repetitions < 5:
        raise ValidationError(f"at least 5 timed repetitions are required, got {repetitions}")
    fn = _interpolator(method)
    samples = []
    with threadpool_limits(limits=threads):
        fn(bases, reference_index, target, w)
        for _ in range(repetitions):
            start = time.perf_counter()
            out = fn(bases, reference_index, target, w)
            samples.append(time.perf_counter() - start)
            del out
    return TimingReport(
        method=method.upper(),
        n_dof=bases[0].n_dof,
        n_rank=bases[0].n_rank,
        n_neighbors=len(bases),
        wall_seconds=statistics.median(samples),
        repetitions=repetitions,
        samples=tuple(samples),
    )
