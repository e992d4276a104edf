import numpy as np
import pytest

from fofkit.fof import BasisConfig
from fofkit.mesh import mesh_to_fof
from fofkit.raster import OrthoFrame
from fofkit.shapes import make_capsule_figure, make_sphere, make_torus
from fofkit.surface import reconstruct_field


@pytest.fixture(scope="session")
def frame128():
    return OrthoFrame(128, 128)


@pytest.fixture(scope="session")
def sphere_mesh():
    return make_sphere(0.6, 4)


@pytest.fixture(scope="session")
def torus_mesh():
    return make_torus()


@pytest.fixture(scope="session")
def capsule_mesh():
    return make_capsule_figure()


@pytest.fixture(scope="session")
def sphere_field(sphere_mesh, frame128):
    return mesh_to_fof(sphere_mesh, frame128, BasisConfig(15))


@pytest.fixture(scope="session")
def sphere_recon(sphere_field, frame128):
    return reconstruct_field(sphere_field, frame128, 128)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
