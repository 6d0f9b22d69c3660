import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from rankcopula.core import BivariateSample

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def tie_free_samples(draw, min_size=2, max_size=40):
    """Samples with distinct coordinates, built from two random permutations plus jitter-free scaling."""
    N = draw(st.integers(min_size, max_size))
    r = draw(st.permutations(range(N)))
    s = draw(st.permutations(range(N)))
    scale = draw(st.floats(0.1, 100.0))
    return BivariateSample(np.array(r, float) * scale - 3.0, np.array(s, float) ** 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# criterion number -> list of (ok, detail); filled by test_acceptance, printed at the end
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record(criterion: int, ok: bool, detail: str):
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        rows = ACCEPTANCE[c]
        bad = [d for ok, d in rows if not ok]
        verdict = "PASS" if not bad else "FAIL"
        summary = f"{len(rows) - len(bad)}/{len(rows)} checks"
        if bad:
            summary += "; failing: " + "; ".join(bad)
        terminalreporter.write_line(f"criterion {c}: {verdict} ({summary})")
        for ok, d in rows:
            terminalreporter.write_line(f"    {'ok  ' if ok else 'MISS'} {d}")
