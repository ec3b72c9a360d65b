import math
import sys

import numpy as np
import pytest

from podprom.fom import ManufacturedFamily, manufactured_bases
from podprom.pod import PodBasis
from podprom.snapshots import Quadrature


def random_basis(rng, n, r, w: Quadrature, parameter=0.0) -> PodBasis:
    """W-orthonormal random basis."""
    q, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return PodBasis(q / w.sqrt_weights[:, None], np.ones(r), parameter, w.id, provenance="random", authoritative_sv=False)


def plane_basis(theta: float, w: Quadrature, parameter=0.0) -> PodBasis:
    """1-D subspace spanned by (cos theta, sin theta) in R^2."""
    return PodBasis(np.array([[math.cos(theta)], [math.sin(theta)]]), np.ones(1), parameter, w.id)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def family():
    return ManufacturedFamily(n_dof=256, n_rank=7, angle_rate=0.1, base_seed=3)


@pytest.fixture(scope="session")
def family_nodes(family):
    params = np.array([0.0, 1.0, 2.0, 3.0])
    return params, manufactured_bases(family, params)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines):
            terminalreporter.write_line(line)
