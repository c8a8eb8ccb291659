from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("repo")

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

# (criterion number, title, passed, detail) filled in by test_acceptance
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def corpus() -> Path:
    return CORPUS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")
