import numpy as np
import pytest

from twistgabor.field import SampledField, make_grid


def gaussian(spec, s=4.0, x0=0.0, y0=0.0):
    return SampledField.from_function(spec, lambda x, y: np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / s))


def chi(spec, cx=0, cy=0):
    X, Y = spec.mesh()
    return SampledField(spec, ((X >= cx) & (X < cx + 1) & (Y >= cy) & (Y < cy + 1)).astype(float))


def interior_field(spec, rng, support=1.5):
    """Seeded random smooth-windowed field vanishing well inside the domain."""
    X, Y = spec.mesh()
    v = rng.standard_normal((spec.M, spec.M)) + 1j * rng.standard_normal((spec.M, spec.M))
    return SampledField(spec, v * ((np.abs(X) < support) & (np.abs(Y) < support)))


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture(scope="session")
def g16_6():
    return make_grid(16, 6)


@pytest.fixture(scope="session")
def g16_8():
    return make_grid(16, 8)


# one line per acceptance criterion, filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
