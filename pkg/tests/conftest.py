"""Shared fixtures plus the acceptance-criteria terminal summary."""

import pytest

from trajmode import synthgen, trajfeat

# Seed pinned after measuring the synthetic benchmark; see test_acceptance.py.
ACCEPTANCE_SEED = 20260819

_criterion_lines: list[str] = []


def _record(number: int, verdict: str, detail: str) -> str:
    line = f"[criterion {number:2d}] {verdict:4s} {detail}"
    _criterion_lines.append(line)
    print(line)
    return line


@pytest.fixture
def criterion():
    """Record one acceptance-criterion outcome and return whether it held."""

    def check(number: int, ok: bool, detail: str) -> str:
        return _record(number, "PASS" if ok else "FAIL", detail)

    return check


@pytest.fixture
def criterion_skip():
    def skip(number: int, detail: str) -> str:
        return _record(number, "SKIP", detail)

    return skip


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_criterion_lines):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_samples():
    """The pinned four-mode synthetic benchmark dataset (800 samples)."""
    return synthgen.generate(synthgen.DEFAULT_PROFILES, seed=ACCEPTANCE_SEED)


@pytest.fixture(scope="session")
def default_matrix(default_samples):
    return trajfeat.featurize_samples(default_samples)


@pytest.fixture(scope="session")
def corrupted_tenth(default_samples):
    """default_samples with 10% of samples corrupted, plus the true refs."""
    return synthgen.corrupt(default_samples, 0.10, seed=ACCEPTANCE_SEED)


@pytest.fixture(scope="session")
def corrupted_matrix(corrupted_tenth):
    samples, _ = corrupted_tenth
    return trajfeat.featurize_samples(samples)
