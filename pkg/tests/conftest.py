import pytest

from asdimlab.amalgam import RacgAmalgam, TableAmalgam
from asdimlab.coxeter import CoxeterSystem
from asdimlab.groups import FiniteTableGroup, RacgEngine, cyclic_table


def z_n_group(n, stem):
    table, _ = cyclic_table(n)
    names = ["e"] + [f"{stem}{i}" if i > 1 else stem for i in range(1, n)]
    return FiniteTableGroup(table, names=names)


@pytest.fixture(scope="session")
def dinf_amalgam():
    return TableAmalgam(z_n_group(2, "a"), z_n_group(2, "b"), [0], [0], name="Dinf")


@pytest.fixture(scope="session")
def z2z3_amalgam():
    return TableAmalgam(z_n_group(2, "a"), z_n_group(3, "b"), [0], [0], name="Z2*Z3")


@pytest.fixture(scope="session")
def z4z2z4_amalgam():
    return TableAmalgam(
        z_n_group(4, "x"), z_n_group(4, "y"), [0, 2], [0, 2], name="Z4*Z2*Z4"
    )


PATH3 = [[1, 2, 0], [2, 1, 2], [0, 2, 1]]
PATH4 = [[1, 2, 0, 0], [2, 1, 2, 0], [0, 2, 1, 2], [0, 0, 2, 1]]
CYCLE5 = [
    [1, 2, 0, 0, 2],
    [2, 1, 2, 0, 0],
    [0, 2, 1, 2, 0],
    [0, 0, 2, 1, 2],
    [2, 0, 0, 2, 1],
]


@pytest.fixture(scope="session")
def path3_engine():
    return RacgEngine(PATH3, names=["a", "b", "c"])


@pytest.fixture(scope="session")
def cycle5_system():
    return CoxeterSystem(CYCLE5, names=["a", "b", "c", "d", "e"])


@pytest.fixture(scope="session")
def path3_amalgam(path3_engine):
    return RacgAmalgam(path3_engine, n1=[0, 1], knk=[1], n2=[1, 2], name="path3")
