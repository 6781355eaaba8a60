import os

import pytest

from voronoi_forge import faces as fc
from voronoi_forge.lattice import make_lattice

EXTENDED = os.environ.get("VORONOI_FORGE_EXTENDED") == "1"


@pytest.fixture(scope="session")
def z2():
    return make_lattice("Zn(2)")


@pytest.fixture(scope="session")
def z3():
    return make_lattice("Zn(3)")


@pytest.fixture(scope="session")
def d4():
    return make_lattice("d4")


@pytest.fixture(scope="session")
def bw16():
    """Shared BW16 context; heavy sub-results are memoized inside it."""
    return fc.bw16_context()
