import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("lindqfi", max_examples=40, deadline=None)
settings.load_profile("lindqfi")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


def random_psd(rng, n, rank=None):
    a = rng.normal(size=(n, rank or n)) + 1j * rng.normal(size=(n, rank or n))
    return a @ a.conj().T


# acceptance bookkeeping: criterion -> list of (part, ok, detail)
ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    def record(criterion: int, part: str, ok: bool, detail: str = ""):
        ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        ok = all(p[1] for p in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {crit}")
        for part, good, detail in parts:
            terminalreporter.write_line(f"    {'ok  ' if good else 'FAIL'} {part}: {detail}")
