import pytest

from padic_langlands.galois_side import make_module
from padic_langlands.correspondence import limproj_solve

_SOLVED = {}


def solve(p, k, profile, N, M, n_max, m_max, rule="unit-sum"):
    """Solver runs are the slow part of the suite; share them across tests."""
    key = (p, k, profile, N, M, n_max, m_max, rule)
    if key not in _SOLVED:
        D = make_module(p, k, profile, N, rule)
        _SOLVED[key] = limproj_solve(D, n_max, M, N, m_max)
    return _SOLVED[key]


@pytest.fixture(scope="session")
def small_unramified():
    return solve(3, 2, "unramified", 2, 27, 2, 2)


@pytest.fixture(scope="session")
def small_tame():
    return solve(3, 3, "tame", 2, 27, 2, 2)
