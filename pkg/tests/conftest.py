import numpy as np
import pytest
from hypothesis import settings

from polynorm.polycore import HomPoly, enumerate_lambda

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def random_poly(rng: np.random.Generator, m: int, n: int, density: float = 1.0) -> HomPoly:
    alphas = enumerate_lambda(m, n)
    keep = rng.random(len(alphas)) < density
    if not keep.any():
        keep[rng.integers(len(alphas))] = True
    c = rng.standard_normal(len(alphas)) + 1j * rng.standard_normal(len(alphas))
    return HomPoly(m, n, ((a, v) for a, v, k in zip(alphas, c, keep) if k))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion, echoed in the summary."""
    def report(label: str, ok: bool, detail: str = "") -> bool:
        line = f"{label}: {'PASS' if ok else 'FAIL'} {detail}".rstrip()
        print(line)
        _ACCEPTANCE.append((label, ok, detail))
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(_ACCEPTANCE, key=lambda t: int(t[0].split()[1])):
        terminalreporter.write_line(f"{label}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
