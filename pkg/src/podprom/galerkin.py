"""POD-Galerkin operator assembly and reduced time integration.

The reduced system is ``M dalpha/dt = Q:alpha alpha + L alpha`` with

* ``M[l, m] = <phi_l, phi_m>``
* ``L[l, m] = <phi_l, nu lap(phi_m) - grad(psi_m)>``
* ``Q[l, m, n] = <phi_l, -phi_m . grad(phi_n)>``

where every inner product is the weighted one restricted to the velocity
block of the state vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
import scipy.linalg as la

from .errors import DimensionError, DivergenceError, MassMatrixError, PairingError
from .pod import PodBasis, check_weights
from .snapshots import FieldBlock, Quadrature, SnapshotSet, write_csv, write_matrix_csv

MASS_COND_LIMIT = 1e12


class DiscreteModel(Protocol):
    """Spatial discretization consumed by :func:`assemble_operators`.

    ``apply_linear`` and ``apply_quadratic`` take full state vectors (all
    fields stacked per ``field_layout``) and return velocity-block vectors.
    """

    weights: Quadrature
    field_layout: tuple[FieldBlock, ...]
    velocity: slice
    viscosity: float

    def apply_linear(self, mode: np.ndarray, viscosity: float | None = None) -> np.ndarray: ...

    def apply_quadratic(self, mode_m: np.ndarray, mode_n: np.ndarray) -> np.ndarray: ...

    def rhs(self, state: np.ndarray, viscosity: float | None = None) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class GalerkinOperators:
    mass: np.ndarray
    linear: np.ndarray
    quadratic: np.ndarray
    viscosity: float
    _factor: tuple = field(init=False, repr=False)

    def __post_init__(self):
        r = self.mass.shape[0]
        if self.mass.shape != (r, r) or self.linear.shape != (r, r) or self.quadratic.shape != (r, r, r):
            raise DimensionError(
                f"operator shapes {self.mass.shape}, {self.linear.shape}, {self.quadratic.shape} disagree"
            )
        for name in ("mass", "linear", "quadratic"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise MassMatrixError(f"{name} operator has non-finite entries")
        cond = np.linalg.cond(self.mass)
        if not cond <= MASS_COND_LIMIT:
            raise MassMatrixError(f"mass matrix condition estimate {cond:.3e} exceeds {MASS_COND_LIMIT:g}")
        try:
            factor = la.cho_factor(0.5 * (self.mass + self.mass.T))
        except la.LinAlgError as exc:
            raise MassMatrixError(f"mass matrix is not positive definite: {exc}") from exc
        object.__setattr__(self, "_factor", factor)

    @property
    def n_rank(self) -> int:
        return self.mass.shape[0]

    def solve_mass(self, rhs: np.ndarray) -> np.ndarray:
        return la.cho_solve(self._factor, rhs, check_finite=False)

    def write_csv_bundle(self, directory) -> None:
        """Write ``mass.csv``, ``linear.csv`` and ``quadratic.csv`` (1-based l,m,n,value rows)."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_matrix_csv(directory / "mass.csv", self.mass)
        write_matrix_csv(directory / "linear.csv", self.linear)
        r = self.n_rank
        idx = np.indices((r, r, r)).reshape(3, -1).T
        rows = ((int(l) + 1, int(m) + 1, int(n) + 1, float(self.quadratic[l, m, n])) for l, m, n in idx)
        write_csv(directory / "quadratic.csv", rows, header=("l", "m", "n", "value"))


@dataclass(frozen=True, eq=False)
class RomTrajectory:
    """Recorded reduced coefficients; row ``k`` is ``alpha(times[k])``."""

    coefficients: np.ndarray
    times: np.ndarray
    dt: float
    stride: int = 1

    def write_csv(self, path) -> None:
        r = self.coefficients.shape[1]
        header = ["time"] + [f"alpha_{l + 1}" for l in range(r)]
        rows = ([float(t), *map(float, a)] for t, a in zip(self.times, self.coefficients))
        write_csv(path, rows, header=header)


def _check_pairing(basis: PodBasis, model: DiscreteModel) -> None:
    if tuple(basis.field_layout) != tuple(model.field_layout):
        raise PairingError(f"basis layout {basis.field_layout} differs from model layout {model.field_layout}")
    check_weights(basis, model.weights)
    if basis.mean is not None:
        raise PairingError("mean-subtracted bases are not supported by the Galerkin assembly")


def assemble_operators(basis: PodBasis, model: DiscreteModel, viscosity: float | None = None) -> GalerkinOperators:
    """Project the model's linear and quadratic terms onto ``basis``."""
    _check_pairing(basis, model)
    nu = model.viscosity if viscosity is None else float(viscosity)
    vel = model.velocity
    phi = basis.modes
    wphi = model.weights.weights[vel, None] * phi[vel]  # W phi_l, velocity rows
    r = basis.n_rank

    mass = wphi.T @ phi[vel]
    lin_images = np.column_stack([model.apply_linear(phi[:, m], nu) for m in range(r)])
    linear = wphi.T @ lin_images
    quad = np.empty((r, r, r))
    for m in range(r):
        images = np.column_stack([model.apply_quadratic(phi[:, m], phi[:, n]) for n in range(r)])
        quad[:, m, :] = wphi.T @ images
    return GalerkinOperators(mass=0.5 * (mass + mass.T), linear=linear, quadratic=quad, viscosity=nu)


def rom_rhs(ops: GalerkinOperators, alpha: np.ndarray) -> np.ndarray:
    """``M^{-1} (Q:alpha alpha + L alpha)``."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (ops.n_rank,):
        raise DimensionError(f"alpha has shape {alpha.shape}, expected ({ops.n_rank},)")
    quad = (ops.quadratic @ alpha) @ alpha
    return ops.solve_mass(quad + ops.linear @ alpha)


def rk4_step(f, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_rom(
    ops: GalerkinOperators,
    alpha0,
    dt: float,
    n_steps: int,
    *,
    stride: int = 1,
    t0: float = 0.0,
) -> RomTrajectory:
    """Classical RK4 with fixed step ``dt``; every ``stride``-th state is kept.

    The initial state is always recorded, so ``n_steps // stride + 1`` rows
    are returned.
    """
    if not dt > 0:
        raise DimensionError(f"dt must be positive, got {dt}")
    if n_steps < 1 or stride < 1:
        raise DimensionError("n_steps and stride must be >= 1")
    alpha = np.array(alpha0, dtype=np.float64)
    if alpha.shape != (ops.n_rank,):
        raise DimensionError(f"alpha0 has shape {alpha.shape}, expected ({ops.n_rank},)")

    # rom_rhs minus the argument checks, for the inner loop
    quadratic, linear, solve = ops.quadratic, ops.linear, ops.solve_mass

    def f(a):
        return solve((quadratic @ a) @ a + linear @ a)

    kept = [alpha.copy()]
    with np.errstate(over="ignore", invalid="ignore"):  # overflow is reported as divergence below
        for step in range(1, n_steps + 1):
            alpha = rk4_step(f, alpha, dt)
            if not np.all(np.isfinite(alpha)):
                raise DivergenceError(f"ROM integration diverged at step {step} (t={t0 + step * dt:.6g})", step)
            if step % stride == 0:
                kept.append(alpha.copy())
    coeffs = np.array(kept)
    times = t0 + dt * stride * np.arange(coeffs.shape[0])
    return RomTrajectory(coefficients=coeffs, times=times, dt=dt, stride=stride)


def reconstruct(basis: PodBasis, traj: RomTrajectory) -> SnapshotSet:
    """Lift reduced coefficients back to full states, one column per record."""
    coeffs = np.asarray(traj.coefficients)
    if coeffs.shape[1] != basis.n_rank:
        raise DimensionError(f"trajectory has {coeffs.shape[1]} coefficients, basis {basis.n_rank} modes")
    data = basis.modes @ coeffs.T
    if basis.mean is not None:
        data += basis.mean[:, None]
    return SnapshotSet.from_times(data, basis.parameter, traj.times, basis.field_layout)


def galerkin_residual(basis: PodBasis, model: DiscreteModel, ops: GalerkinOperators, alphas: Sequence[np.ndarray]) -> float:
    """Largest relative mismatch between the assembled RHS and the projected model RHS.

    For each ``alpha`` the reference is ``<phi_l, f(Phi alpha)>`` computed
    directly from the model, bypassing the operator tensors.
    """
    vel = model.velocity
    wphi = model.weights.weights[vel, None] * basis.modes[vel]
    worst = 0.0
    for alpha in alphas:
        state = basis.modes @ alpha
        direct = wphi.T @ model.rhs(state, ops.viscosity)
        assembled = (ops.quadratic @ alpha) @ alpha + ops.linear @ alpha
        worst = max(worst, float(np.linalg.norm(assembled - direct) / np.linalg.norm(direct)))
    return worst
