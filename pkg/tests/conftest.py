import json
from pathlib import Path

import pytest

from isoscatter import groups, schottky, zeta

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def frozen():
    return json.loads((FIXTURES / "frozen.json").read_text())


@pytest.fixture(scope="session")
def psl32():
    return groups.build_psl3(2)


@pytest.fixture(scope="session")
def k1(psl32):
    return groups.stabilizer(psl32, point=[1, 0, 0])


@pytest.fixture(scope="session")
def k2(psl32):
    return groups.stabilizer(psl32, hyperplane=[1, 0, 0])


@pytest.fixture(scope="session")
def gens(psl32, frozen):
    return [psl32.element(m) for m in frozen["generating_pair"]]


@pytest.fixture(scope="session")
def hom2(psl32, gens):
    return groups.hom_from_free(psl32, gens)


@pytest.fixture(scope="session")
def rank2():
    return schottky.example_rank2()


@pytest.fixture(scope="session")
def rank1():
    return schottky.example_rank1()


@pytest.fixture(scope="session")
def spectrum8(rank2):
    return zeta.length_spectrum(rank2, 8)
