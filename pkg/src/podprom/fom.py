"""Desk-scale full-order models.

* A 1-D periodic viscous Burgers solver, ``u_t = -u u_x + nu u_xx``, whose
  Galerkin ROM has the same quadratic-plus-linear structure as the
  incompressible Navier-Stokes ROM.
* A manufactured family of orthonormal bases with analytically known
  subspaces, used as an oracle for the interpolation methods.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DivergenceError, RankError, StabilityError
from .galerkin import rk4_step
from .pod import PodBasis
from .snapshots import FieldBlock, Quadrature, SnapshotSet

# Reynolds numbers of the seventeen reference cases; the default target is 130.
REYNOLDS_GRID = (70, 80, 85, 100, 110, 115, 120, 125, 130, 135, 140, 145, 150, 160, 175, 180, 190)
TARGET_REYNOLDS = 130.0


@dataclass(frozen=True)
class BurgersConfig:
    """Parameters of one Burgers run.

    The initial condition is ``mean_velocity + amplitude * sum_k k^-1 sin(k x + p_k)``
    over ``n_harmonics`` harmonics with phases ``p_k`` drawn from ``init_seed``.
    ``init_profile="sine"`` gives ``mean_velocity + amplitude * sin(x)`` and
    ``"zero"`` a zero field.

    With the defaults the recorded window (6 time units at mean speed 0.5)
    covers about half a travel period, so POD subspaces depend on the
    viscosity instead of collapsing onto the same Fourier pairs for every
    case.
    """

    n_points: int = 256
    viscosity: float = 1.0 / TARGET_REYNOLDS
    domain_length: float = 2.0 * math.pi
    dt_fom: float = 1e-3
    n_transient: int = 1000
    n_snapshots: int = 61
    snapshot_stride: int = 100
    init_seed: int = 7
    amplitude: float = 0.05
    mean_velocity: float = 0.5
    n_harmonics: int = 3
    init_profile: str = "harmonics"

    def __post_init__(self):
        n = self.n_points
        if n < 64 or n & (n - 1):
            raise ConfigError(f"n_points must be a power of two >= 64, got {n}")
        if self.init_profile not in ("harmonics", "sine", "zero"):
            raise ConfigError(f"unknown init_profile {self.init_profile!r}")
        if not (self.viscosity >= 0 and self.dt_fom > 0):
            raise ConfigError("viscosity must be >= 0 and dt_fom > 0")
        if self.n_snapshots < 1 or self.snapshot_stride < 1 or self.n_transient < 0:
            raise ConfigError("n_snapshots and snapshot_stride must be >= 1, n_transient >= 0")
        umax = float(np.max(np.abs(self.initial_condition())))
        if umax > 0 and self.dt_fom > 0.5 * self.dx / umax:
            raise StabilityError(
                f"dt_fom={self.dt_fom:g} violates the advective bound 0.5*dx/max|u0| = {0.5 * self.dx / umax:.4g}"
            )
        if self.viscosity > 0 and self.dt_fom > 0.25 * self.dx**2 / self.viscosity:
            raise StabilityError(
                f"dt_fom={self.dt_fom:g} violates the diffusive bound 0.25*dx^2/nu = "
                f"{0.25 * self.dx**2 / self.viscosity:.4g}"
            )

    @classmethod
    def for_reynolds(cls, reynolds: float, **overrides) -> "BurgersConfig":
        return cls(viscosity=1.0 / float(reynolds), **overrides)

    @property
    def reynolds(self) -> float:
        return math.inf if self.viscosity == 0 else 1.0 / self.viscosity

    @property
    def dx(self) -> float:
        return self.domain_length / self.n_points

    @property
    def grid(self) -> np.ndarray:
        return self.dx * np.arange(self.n_points)

    @property
    def dt_snap(self) -> float:
        return self.dt_fom * self.snapshot_stride

    def initial_condition(self) -> np.ndarray:
        x = self.grid
        if self.init_profile == "zero":
            return np.zeros_like(x)
        if self.init_profile == "sine":
            return self.mean_velocity + self.amplitude * np.sin(2.0 * math.pi * x / self.domain_length)
        rng = np.random.default_rng(self.init_seed)
        phases = rng.uniform(0.0, 2.0 * math.pi, self.n_harmonics)
        kx = 2.0 * math.pi * x / self.domain_length
        u = np.full_like(x, self.mean_velocity)
        for k, p in enumerate(phases, start=1):
            u += self.amplitude / k * np.sin(k * kx + p)
        return u


_CONFIG_TYPES = {f.name: f.type for f in dataclasses.fields(BurgersConfig)}


def parse_config_text(text: str) -> dict:
    """Parse flat ``key=value`` lines (``#`` comments allowed) into a dict of strings."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        out[key.strip()] = value.strip()
    return out


def config_overrides(items: dict) -> dict:
    """Convert the BurgersConfig keys of ``items`` to typed keyword arguments."""
    kwargs = {}
    for key, value in items.items():
        if key not in _CONFIG_TYPES:
            continue
        kind = _CONFIG_TYPES[key]
        try:
            if kind == "int":
                kwargs[key] = int(value)
            elif kind == "float":
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        except ValueError as exc:
            raise ConfigError(f"{key}={value!r}: {exc}") from exc
    return kwargs


def load_config(path) -> dict:
    return parse_config_text(Path(path).read_text())


class BurgersModel:
    """Periodic central-difference Burgers discretization.

    ``D1 u = (u[i+1] - u[i-1]) / (2 dx)`` and
    ``D2 u = (u[i+1] - 2 u[i] + u[i-1]) / dx^2``.
    """

    def __init__(self, cfg: BurgersConfig):
        self.cfg = cfg
        self.viscosity = cfg.viscosity
        self.dx = cfg.dx
        self.weights = Quadrature.uniform(cfg.n_points, cfg.dx)
        self.field_layout = (FieldBlock("u", 1, cfg.n_points),)
        self.velocity = slice(0, cfg.n_points)

    @staticmethod
    def _neighbors(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        padded = np.concatenate((u[-1:], u, u[:1]))
        return padded[2:], padded[:-2]

    def d1(self, u: np.ndarray) -> np.ndarray:
        up, um = self._neighbors(u)
        return (up - um) * (0.5 / self.dx)

    def d2(self, u: np.ndarray) -> np.ndarray:
        up, um = self._neighbors(u)
        return (up + um - 2.0 * u) / self.dx**2

    def apply_linear(self, mode: np.ndarray, viscosity: float | None = None) -> np.ndarray:
        nu = self.viscosity if viscosity is None else viscosity
        return nu * self.d2(mode)

    def apply_quadratic(self, mode_m: np.ndarray, mode_n: np.ndarray) -> np.ndarray:
        return -mode_m * self.d1(mode_n)

    def rhs(self, state: np.ndarray, viscosity: float | None = None) -> np.ndarray:
        """``-u D1 u + nu D2 u`` with the stencil evaluated once."""
        nu = self.viscosity if viscosity is None else viscosity
        up, um = self._neighbors(state)
        return (up - um) * (-0.5 / self.dx) * state + (nu / self.dx**2) * (up + um - 2.0 * state)


def burgers_model(cfg: BurgersConfig) -> BurgersModel:
    return BurgersModel(cfg)


def burgers_run(cfg: BurgersConfig) -> tuple[SnapshotSet, Quadrature]:
    """Integrate the Burgers FOM with RK4 and record snapshots after the transient."""
    model = BurgersModel(cfg)
    u = cfg.initial_condition()
    dt = cfg.dt_fom

    def f(v):
        return model.rhs(v)

    for step in range(cfg.n_transient):
        u = rk4_step(f, u, dt)
    snaps = np.empty((cfg.n_points, cfg.n_snapshots), order="F")
    snaps[:, 0] = u
    for j in range(1, cfg.n_snapshots):
        for _ in range(cfg.snapshot_stride):
            u = rk4_step(f, u, dt)
        if not np.all(np.isfinite(u)):
            raise DivergenceError(f"Burgers FOM diverged before snapshot {j}", j)
        snaps[:, j] = u
    if not np.all(np.isfinite(snaps)):
        raise DivergenceError("Burgers FOM produced non-finite values")
    s = SnapshotSet(
        snaps,
        parameter=cfg.reynolds,
        dt_snap=cfg.dt_snap,
        t0=cfg.n_transient * dt,
        field_layout=model.field_layout,
    )
    return s, model.weights


# --- manufactured basis family ----------------------------------------------


@dataclass(frozen=True)
class ManufacturedFamily:
    """Orthonormal bases with an analytically known parameter dependence.

    The seed basis is a constant vector followed by ``(cos kx, sin kx)`` pairs
    on a uniform periodic grid (Euclidean orthonormal, unit weights). At
    parameter ``g`` pair ``k`` (complex column index, k >= 2) is rotated
    within its plane by ``g * angle_rate * k`` and every column is tilted
    toward its own fixed drift direction by ``0.1 * g * angle_rate``.
    """

    n_dof: int = 256
    n_rank: int = 7
    angle_rate: float = 0.1
    base_seed: int = 0

    def quadrature(self) -> Quadrature:
        return Quadrature.uniform(self.n_dof)

    def seed_basis(self) -> np.ndarray:
        n, r = self.n_dof, self.n_rank
        x = 2.0 * math.pi * np.arange(n) / n
        cols = [np.full(n, 1.0 / math.sqrt(n))]
        for k in range(1, (r - 1) // 2 + 1):
            cols.append(math.sqrt(2.0 / n) * np.cos(k * x))
            cols.append(math.sqrt(2.0 / n) * np.sin(k * x))
        return np.column_stack(cols)

    def drift_directions(self) -> np.ndarray:
        seed = self.seed_basis()
        rng = np.random.default_rng(self.base_seed)
        d = rng.standard_normal((self.n_dof, self.n_rank))
        for _ in range(2):
            d -= seed @ (seed.T @ d)
            d, _ = np.linalg.qr(d)
        return d

    def pair_angles(self, g: float) -> np.ndarray:
        """In-plane rotation angle of each complex column (0 for column 1)."""
        k = np.arange(1, (self.n_rank + 1) // 2 + 1)
        return np.where(k == 1, 0.0, g * self.angle_rate * k)

    def drift_angle(self, g: float) -> float:
        return 0.1 * g * self.angle_rate

    def closed_form_angles(self, g1: float, g2: float) -> np.ndarray:
        """Principal angles between the subspaces at ``g1`` and ``g2``, ascending."""
        b1, b2 = self.drift_angle(g1), self.drift_angle(g2)
        c, s = math.cos(b1) * math.cos(b2), math.sin(b1) * math.sin(b2)
        out = [math.acos(min(1.0, math.cos(b1 - b2)))]
        for d in (self.pair_angles(g2) - self.pair_angles(g1))[1:]:
            p, q = c * math.cos(d) + s, c * math.sin(d)
            ang = math.acos(min(1.0, math.hypot(p, q)))
            out += [ang, ang]
        return np.sort(np.array(out))


def manufactured_bases(family: ManufacturedFamily, params) -> list[PodBasis]:
    n, r = family.n_dof, family.n_rank
    if r % 2 == 0:
        raise RankError(f"manufactured family needs an odd rank, got {r}")
    if r > n // 2 - 1:
        raise RankError(f"rank {r} exceeds n_dof/2 - 1 = {n // 2 - 1}")
    seed = family.seed_basis()
    drift = family.drift_directions()
    w = family.quadrature()
    out = []
    for g in params:
        g = float(g)
        rotated = seed.copy()
        for k, theta in enumerate(family.pair_angles(g)[1:], start=2):
            a, b = seed[:, 2 * k - 3], seed[:, 2 * k - 2]
            c, s = math.cos(theta), math.sin(theta)
            rotated[:, 2 * k - 3] = c * a - s * b
            rotated[:, 2 * k - 2] = s * a + c * b
        beta = family.drift_angle(g)
        modes = math.cos(beta) * rotated + math.sin(beta) * drift
        out.append(
            PodBasis(
                modes=modes,
                singular_values=np.ones(r),
                parameter=g,
                weights_id=w.id,
                provenance="manufactured",
                authoritative_sv=False,
            )
        )
    return out
