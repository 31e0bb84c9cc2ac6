import numpy as np
import pytest

from ipsdrift.core import FourierDriftModel


def benchmark_model() -> FourierDriftModel:
    """G(x) = 0.3 cos(2 pi x), F(x) = 0.5 sin(2 pi x) on cutoffs K = 4."""
    return FourierDriftModel.from_modes(1, 4, 4, g=[(0, (1,), 0.3, 0.0)], f=[(0, (1,), 0.0, 0.5)])


def random_model(rng, dim, kg, kf, scale=0.5) -> FourierDriftModel:
    m = FourierDriftModel.zeros(dim, kg, kf)
    return FourierDriftModel.from_theta(dim, kg, kf, scale * rng.standard_normal(m.theta.shape))


@pytest.fixture
def truth():
    return benchmark_model()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, shown in the terminal summary regardless of capture
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
