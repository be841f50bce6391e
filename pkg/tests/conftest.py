from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

import meshdenoise as md
from meshdenoise import primitives

settings.register_profile("repo", derandomize=True, max_examples=200)
settings.load_profile("repo")

CUBE_SEED = 7
ICO_SEED = 11
SIGMA_REL = 0.3


@pytest.fixture(scope="session")
def single_tri():
    return primitives.single_triangle()


@pytest.fixture(scope="session")
def strip():
    return primitives.two_triangle_strip()


@pytest.fixture(scope="session")
def grid():
    return primitives.flat_grid(5, 4)


@pytest.fixture(scope="session")
def tetra():
    return primitives.tetrahedron()


@pytest.fixture(scope="session")
def cube1():
    return primitives.cube(1)


@pytest.fixture(scope="session")
def cube3():
    return primitives.cube(3)


@pytest.fixture(scope="session")
def ico2():
    return primitives.icosphere(2)


@pytest.fixture(scope="session")
def fan3():
    # Three-triangle fan: exactly one active stencil (middle face, apex 0).
    positions = [
        (0.0, 0.0, 0.0),
        (1.0, 0.0, 0.0),
        (0.5, np.sqrt(3) / 2, 0.0),
        (-0.5, np.sqrt(3) / 2, 0.0),
        (-1.0, 0.0, 0.0),
    ]
    return md.build_mesh(positions, [(0, 1, 2), (0, 2, 3), (0, 3, 4)])


@pytest.fixture(scope="session")
def cube_fine():
    return primitives.cube(16)


@pytest.fixture(scope="session")
def ico_fine():
    return primitives.icosphere(4)


@pytest.fixture(scope="session")
def noisy_cube(cube_fine):
    return md.add_noise(cube_fine, md.NoiseSpec(sigma_rel=SIGMA_REL, seed=CUBE_SEED))


@pytest.fixture(scope="session")
def noisy_ico(ico_fine):
    return md.add_noise(ico_fine, md.NoiseSpec(sigma_rel=SIGMA_REL, seed=ICO_SEED))
