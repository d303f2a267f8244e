import numpy as np
import pytest

from swirlns import CylinderDomain, OperatorWorkspace, build_grid


@pytest.fixture(scope="session")
def unit_domain():
    return CylinderDomain(R=1.0, a=1.0, nu=0.5)


@pytest.fixture(scope="session")
def grid64(unit_domain):
    return build_grid(unit_domain, 64, 64)


@pytest.fixture(scope="session")
def grid32(unit_domain):
    return build_grid(unit_domain, 32, 32)


@pytest.fixture(scope="session")
def ws64(grid64):
    return OperatorWorkspace(grid64)


@pytest.fixture(scope="session")
def ws32(grid32):
    return OperatorWorkspace(grid32)


def mesh(grid):
    """(r, z) broadcast arrays over the grid."""
    rr = grid.r_centers[:, None] + np.zeros((1, grid.Nz))
    zz = grid.z_nodes[None, :] + np.zeros((grid.Nr, 1))
    return rr, zz
