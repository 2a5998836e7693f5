import numpy as np
import pytest

from mpcnet import build_implicit, condense
from mpcnet.presets import saturating_regulator

# canonical problem file used by the CLI tests; equivalent to
# presets.saturating_regulator()
PROBLEM_TEXT = """\
[system]
A = 4/3 -2/3 ; 1 0
B = 0 ; 1

[horizon]
N = 10

[cost]
Q = 1 -2/3 ; -2/3 3/2
R = 1
P = 7.1667 -4.2222 ; -4.2222 4.6852

[constraints]
input_bounds = -10 10
"""


@pytest.fixture(scope="session")
def benchmark():
    return saturating_regulator()


@pytest.fixture(scope="session")
def benchmark_qp(benchmark):
    return condense(benchmark)


@pytest.fixture(scope="session")
def benchmark_net(benchmark_qp):
    return build_implicit(benchmark_qp)


@pytest.fixture
def problem_file(tmp_path):
    path = tmp_path / "problem.txt"
    path.write_text(PROBLEM_TEXT)
    return path


def random_spd(rng, n, scale=1.0):
    A = rng.standard_normal((n, n))
    return A @ A.T + scale * np.eye(n)
