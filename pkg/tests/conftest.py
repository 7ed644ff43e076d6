import pytest

from fracobs.solver import (
    default_scenario,
    manufactured_scenario,
    oracle_solve,
    solve_obstacle,
)

A_VALUES = (-0.5, 0.0, 0.5)


@pytest.fixture(scope="session")
def default_solves_257():
    """Default scenario on 257x129 for each weight exponent (omega = 1.9 for
    speed; the fixed point does not depend on the sweep relaxation)."""
    out = {}
    for a in A_VALUES:
        prob = default_scenario(a=a, nx=257, ny=129)
        out[a] = (prob, solve_obstacle(prob, omega=1.9))
    return out


@pytest.fixture(scope="session")
def default_solve_129():
    prob = default_scenario(a=0.0, nx=129, ny=65)
    return prob, solve_obstacle(prob, omega=1.9)


@pytest.fixture(scope="session")
def manufactured_solves_129():
    """Manufactured global-profile scenario on 129x65, solved tightly."""
    out = {}
    for a in A_VALUES:
        prob = manufactured_scenario(a=a, nx=129, ny=65)
        out[a] = (prob, solve_obstacle(prob, omega=1.7, tol=1e-10))
    return out


@pytest.fixture(scope="session")
def small_default_pair():
    """33x17 default scenario solved by PSOR and by the oracle."""
    prob = default_scenario(a=0.0, nx=33, ny=17)
    return prob, solve_obstacle(prob, tol=1e-9), oracle_solve(prob)


@pytest.fixture(scope="session")
def battery_rows():
    from fracobs.battery import run_battery

    return run_battery()
