import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from rabi_expansion import ModelParams, SpinorFockState

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_state(rng, n_max, n_occ=None):
    """Normalized random state occupying photon numbers up to ``n_occ``."""
    n_occ = n_max if n_occ is None else n_occ
    up = np.zeros(n_max + 1, complex)
    down = np.zeros(n_max + 1, complex)
    up[: n_occ + 1] = rng.normal(size=n_occ + 1) + 1j * rng.normal(size=n_occ + 1)
    down[: n_occ + 1] = rng.normal(size=n_occ + 1) + 1j * rng.normal(size=n_occ + 1)
    s = SpinorFockState(up, down)
    return s * (1 / np.sqrt(s.norm2))


params_st = st.builds(
    ModelParams,
    delta=st.floats(0.0, 3.0),
    omega=st.floats(0.1, 3.0),
    lam=st.floats(-2.0, 2.0),
)
seeds = st.integers(0, 2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture
def reference_params():
    return ModelParams(delta=1.0, omega=1.0, lam=0.5)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, title: str, ok: bool, detail: str):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
