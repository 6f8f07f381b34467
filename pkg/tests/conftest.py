import numpy as np
import pytest

from jctriangle.model import ModelParams

J = 0.01


@pytest.fixture
def fig2_3ep():
    return ModelParams(omega=1.0, delta=50.0, g1=0.3, g2=0.3, g3=0.3, j1=J, j2=J, j3=J, theta=np.pi / 6, gamma=np.sqrt(3) * J)


@pytest.fixture
def fig3_params():
    return ModelParams(omega=1.0, delta=20.0, g1=0.1, g2=0.3, g3=0.1, j1=J, j2=J, j3=J)


def random_params(rng, gamma_max=0.05, equal_g=False):
    g1 = rng.uniform(0, 0.5)
    g2 = g1 if equal_g else rng.uniform(0, 0.5)
    j1, j3 = rng.uniform(0, 0.05, size=2)
    return ModelParams(
        omega=1.0,
        delta=rng.uniform(10, 100),
        g1=g1,
        g2=g2,
        g3=g1,
        gamma=rng.uniform(0, gamma_max),
        j1=j1,
        j2=j1,
        j3=j3,
        theta=rng.uniform(0, 2 * np.pi / 3),
    )


ACCEPTANCE = []


def record(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE, key=lambda item: item[0]):
        terminalreporter.write_line(line)
