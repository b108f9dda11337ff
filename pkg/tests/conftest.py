import math

import numpy as np
import pytest

from nullshock import exact_solutions as es
from nullshock import lightlike_solution as ls
from nullshock import shock_matching as sm

# frozen oracle values (bracketing with scipy.optimize.brentq at xtol 1e-15)
SIGMA2 = 0.6344039753038511
SIGMA_BAR2 = 0.5254275608435175


@pytest.fixture(scope="session")
def sigma2():
    return ls.sigma2()


@pytest.fixture(scope="session")
def frw_params(sigma2):
    return es.FrwParameters(sigma2)


@pytest.fixture(scope="session")
def tov_params(sigma2):
    return es.tov_solve(es.eos_H(sigma2))


@pytest.fixture(scope="session")
def frw_m(frw_params):
    return es.frw_metric(frw_params)


@pytest.fixture(scope="session")
def tov_m(tov_params):
    return es.tov_metric(tov_params)


@pytest.fixture(scope="session")
def exact(sigma2):
    return sm.match(es.eos_H(sigma2))


@pytest.fixture(scope="session")
def perturbed(sigma2):
    return sm.match(es.eos_H(sigma2), perturb_gamma=0.01)


@pytest.fixture(scope="session")
def exact_chart(exact):
    return sm.build_chart(exact, 0.3)


@pytest.fixture(scope="session")
def perturbed_chart(perturbed):
    return sm.build_chart(perturbed, 0.3)


@pytest.fixture(scope="session")
def frw_point():
    return np.array([0.4, 0.7, 1.1, 0.3])


@pytest.fixture(scope="session")
def tov_point():
    return np.array([0.4, 1.3, 1.1, 0.3])


def random_points(rng, n, t=(0.0, 1.0), r=(0.2, 2.0)):
    return [np.array([rng.uniform(*t), rng.uniform(*r), rng.uniform(0.3, math.pi - 0.3),
                      rng.uniform(0, 2 * math.pi)]) for _ in range(n)]


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
