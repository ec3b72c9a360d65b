"""Parametric POD-Galerkin reduced-order models with subspace interpolation."""

from .errors import NumericalError, PromError, ValidationError
from .fom import REYNOLDS_GRID, TARGET_REYNOLDS, BurgersConfig, BurgersModel, ManufacturedFamily, burgers_run, manufactured_bases
from .galerkin import GalerkinOperators, RomTrajectory, assemble_operators, integrate_rom, reconstruct, rom_rhs
from .grassmann import TangentImage, exp_map, gmi_interpolate, log_map
from .metrics import RleReport, TimingReport, benchmark_interpolation, principal_angles, rle
from .mrpwi import ComplexModePack, align, complexify, kasner_angle, mrpwi_interpolate, rotation_align, sign_align
from .pipeline import CaseLibrary, SweepPlan, build_prom, predict, run_sweep
from .plan import CaseCatalog, interval_catalog, lagrange_weights, select_neighbors, select_reference
from .pod import PodBasis, compute_pod, orthonormality_error, project, read_basis, write_basis
from .snapshots import Quadrature, SnapshotSet, read_snapshots, weighted_inner, write_snapshots

__version__ = "0.1.0"
