import numpy as np
import pytest

from spiralcap.capacitor import CapacitorConfig, cached_mesh
from spiralcap.mesh import MeshGeometry


@pytest.fixture(scope="session")
def default_mesh():
    return cached_mesh(CapacitorConfig().geometry())


@pytest.fixture(scope="session")
def coarse_geometry():
    """Quarter-resolution geometry for tests that only need qualitative behaviour."""
    return MeshGeometry(sectors=240, center_density=0.2, cyl_density=0.03,
                        out_density=0.5, near_cyl_density=0.06)


@pytest.fixture
def rng():
    return np.random.default_rng(20190212)
