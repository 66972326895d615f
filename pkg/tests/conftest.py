"""Shared fixtures and the acceptance-line reporter.

The expensive solves are session-scoped so the acceptance tests and the
unit tests that poke at the same states don't re-run them.  Acceptance
tests record one summary line each; the lines are printed together in a
terminal section at the end of the run so pass/fail status is scannable
without grepping the log.
"""

import numpy as np
import pytest

import hitchinlab as hl

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Recorder for acceptance summary lines: criterion(num, title, ok, detail)."""

    def record(num: int, title: str, ok: bool, detail: str) -> None:
        flag = "PASS" if ok else "FAIL"
        _ACCEPTANCE_LINES.append(f"[criterion-{num:02d}] {title}: {flag} ({detail})")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


# ---------------------------------------------------------------------------
# shared solves (R=0.5, N=64 unless stated)

@pytest.fixture(scope="session")
def patch64():
    return hl.make_patch(0.5, 64)


@pytest.fixture(scope="session")
def n2_run():
    """Full-mode n=2, q2 = 0.3."""
    q = hl.DifferentialTuple.single(2, 2, [0.3])
    config = hl.SolveConfig(n=2, differentials=q, N=64)
    state, report = hl.solve(config)
    return config, state, report


@pytest.fixture(scope="session")
def n3_full_run():
    """Full-mode n=3, q3 = 0.5."""
    q = hl.DifferentialTuple.single(3, 3, [0.5])
    config = hl.SolveConfig(n=3, differentials=q, N=64)
    state, report = hl.solve(config)
    return config, state, report


@pytest.fixture(scope="session")
def n3_diag_run():
    """Diagonal-mode twin of n3_full_run."""
    q = hl.DifferentialTuple.single(3, 3, [0.5])
    config = hl.SolveConfig(n=3, differentials=q, N=64, mode="diagonal")
    state, report = hl.solve(config)
    return config, state, report


def phi_for(config, patch):
    return hl.assemble_phi(config.differentials, patch)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
