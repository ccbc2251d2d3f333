import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from orbitflow.ensemble import EnsembleSpec, sample_field
from orbitflow.lattice import enumerate_lattice

settings.register_profile(
    "orbitflow", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("orbitflow")


@pytest.fixture(scope="session")
def lattices():
    cache = {}

    def get(N, truncation="cube"):
        key = (N, truncation)
        if key not in cache:
            cache[key] = enumerate_lattice(N, truncation)
        return cache[key]

    return get


@pytest.fixture
def field_factory(lattices):
    def make(N=2, kind="isotropic", seed=0, sample_id=0, **kw):
        return sample_field(EnsembleSpec(kind=kind, seed=seed, **kw), lattices(N), sample_id)

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance criteria register their outcome here; the terminal summary prints one line each.
ACCEPTANCE: dict[int, dict] = {}


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> None:
    entry = ACCEPTANCE.setdefault(number, {"title": title, "ok": True, "details": []})
    entry["ok"] = entry["ok"] and bool(ok)
    if detail:
        entry["details"].append(detail)
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        e = ACCEPTANCE[number]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {e['title']}")
        for d in e["details"]:
            terminalreporter.write_line(f"           {d}")
