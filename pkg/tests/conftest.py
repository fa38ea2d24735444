import logging

import numpy as np
import pytest

from stieltjes_lab.app.families import make_construction
from stieltjes_lab.app.linrel import from_operator, from_pairs
from stieltjes_lab.services.instance_gen import make_rng, random_selfadjoint_block, random_system


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture
def system(rng):
    return random_system(rng, 2, 3)


@pytest.fixture
def sab(rng):
    return random_selfadjoint_block(rng, 2, 3)


@pytest.fixture
def diagonal_construction():
    """A_hat = diag(0.5, 2), V = 0.6 I, so Q0(lam) = I + 0.36 (1 + lam) (A - lam)^{-1}."""
    A_hat = from_operator(np.diag([0.5, 2.0]))
    return make_construction(A_hat, 0.6 * np.eye(2))


@pytest.fixture
def multivalued_construction():
    """A_hat = {e1, 0.5 e1} + {0} x span{e2}, V = 0.6 I."""
    top = np.array([[1.0, 0.0], [0.0, 0.0]])
    bottom = np.array([[0.5, 0.0], [0.0, 1.0]])
    return make_construction(from_pairs(top, bottom), 0.6 * np.eye(2))


@pytest.fixture
def lambdas():
    """Nonreal points well away from [0, inf)."""
    return [-1.0 + 1.0j, -0.5 - 0.3j, 0.4 + 0.8j, 2.0 - 1.5j, -3.0 + 0.2j]


@pytest.fixture
def restore_root_logger():
    """Drop whatever handlers a test's start_log call installed on the root logger."""
    root = logging.getLogger()
    handlers = list(root.handlers)
    level = root.level
    yield root
    for handler in list(root.handlers):
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    root.setLevel(level)
