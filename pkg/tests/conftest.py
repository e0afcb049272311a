from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import norm

from bregmi.divergence import HybridDensity
from bregmi.kde import DensityGrid
from bregmi.robustness import normal_null_model


@pytest.fixture(scope="session")
def normal_hd() -> HybridDensity:
    """Standard-normal null with equal group probabilities on [-21, 21]."""
    return normal_null_model()


@pytest.fixture(scope="session")
def small_normal_hd() -> HybridDensity:
    grid = np.linspace(-9.0, 9.0, 3601)
    return HybridDensity.product((0.5, 0.5), DensityGrid(grid, norm.pdf(grid)))


@pytest.fixture(scope="session")
def dependent_hd() -> HybridDensity:
    """Group 0 shifted left, group 1 shifted right."""
    grid = np.linspace(-10.0, 10.0, 4001)
    s0 = 0.5 * norm.pdf(grid, -1.0, 1.0)
    s1 = 0.5 * norm.pdf(grid, 1.0, 1.0)
    base = DensityGrid(grid, s0)
    return HybridDensity.from_slices((0.5, 0.5), base, base.with_values(s1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for an acceptance criterion, then assert it.

    Usage: ``criterion(label, ok, detail)``.
    """

    def record(label: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _ACCEPTANCE[label] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[label])
