"""Identity suite, inequality battery, and the independent oracles."""

import numpy as np
import pytest

import hitchinlab as hl
from hitchinlab.verification import (
    CheckResult,
    OracleFailure,
    char_poly_bruteforce,
    gram_schmidt_line_metrics,
    vortex_oracle_n2,
)


def test_check_result_semantics():
    ok = CheckResult.from_measurement("a", 1e-13, 1e-12)
    bad = CheckResult.from_measurement("b", 2e-12, 1e-12)
    edge = CheckResult.from_measurement("c", 1e-12, 1e-12)
    assert ok.passed and not bad.passed and edge.passed
    assert "pass" in str(ok) and "FAIL" in str(bad)


def test_identities_all_pass_to_n10():
    checks = hl.check_identities(10, samples=200)
    assert [c.name for c in checks] == [
        "sl2-brackets",
        "ad-eigenvector",
        "exponent-partial-sum",
        "weight-sum",
        "sum-exchange",
    ]
    for c in checks:
        assert c.passed, str(c)
    exact = {c.name: c for c in checks}
    assert exact["sl2-brackets"].measured == 0.0
    assert exact["weight-sum"].measured == 0.0


def test_identities_rejects_small_rank():
    with pytest.raises(ValueError):
        hl.check_identities(1)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_amgm_chain(n):
    c = hl.check_amgm_chain(n, samples=4000)
    assert c.passed, str(c)
    assert c.samples == 4000


def test_amgm_rejects_small_rank():
    with pytest.raises(ValueError):
        hl.check_amgm_chain(1, 10)


def test_check_solution_refuses_nonconverged(patch64):
    n = 2
    base = hl.fuchsian_baseline(n, patch64)
    state = hl.MetricState(S=np.zeros_like(base.H), H=base.H, mode="full", converged=False)
    phi = hl.assemble_phi(hl.DifferentialTuple.zero(n), patch64)
    with pytest.raises(ValueError):
        hl.check_solution(state, phi, patch64)


def test_check_solution_on_baseline(patch64):
    # the baseline is an exact discrete solution: everything passes with
    # machine-zero margins and the informational margins sit at ~0
    n = 3
    base = hl.fuchsian_baseline(n, patch64)
    state = hl.MetricState(S=np.zeros_like(base.H), H=base.H, mode="full", converged=True)
    phi = hl.assemble_phi(hl.DifferentialTuple.zero(n), patch64)
    checks = hl.check_solution(state, phi, patch64, baseline=base)
    by_name = {c.name: c for c in checks}
    for c in checks:
        assert c.passed, str(c)
    assert by_name["vn-zero"].measured < 1e-13
    assert abs(by_name["interior-energy-margin"].measured) < 1e-13


def test_vortex_oracle_zero_differential(patch64):
    z = vortex_oracle_n2([], patch64)
    assert np.abs(z).max() == 0.0


def test_vortex_oracle_matches_diagonal_solver():
    # independent scalar assembly + fixed point vs the packaged diagonal-mode
    # Newton solve, at a coarse grid for speed
    N = 32
    patch = hl.make_patch(0.5, N)
    q = hl.DifferentialTuple.single(2, 2, [0.3])
    state, report = hl.solve(hl.SolveConfig(n=2, differentials=q, N=N, mode="diagonal"))
    assert state.converged
    z_solver = np.log(np.abs(state.H[..., 0, 0])) - np.log(
        hl.fuchsian_baseline(2, patch).h[..., 0]
    )
    z_oracle = vortex_oracle_n2([0.3], patch, tol=1e-10)
    assert np.abs(z_solver - z_oracle).max() < 1e-7


def test_vortex_oracle_failure_is_loud(patch64):
    with pytest.raises(OracleFailure):
        vortex_oracle_n2([0.3], patch64, tol=1e-12, max_sweeps=3)


def test_vortex_oracle_grid_convergence():
    # nested grids (N, 2N-1) share the coarse nodes; the oracle solutions
    # converge there at second order.  tol sits four orders below the
    # smallest node difference being measured (~4e-6) but above the
    # damped-Jacobi roundoff floor (~1e-10).
    diffs = []
    for N in (17, 33):
        coarse = vortex_oracle_n2([0.3], hl.make_patch(0.5, N), tol=3e-10)
        fine = vortex_oracle_n2([0.3], hl.make_patch(0.5, 2 * N - 1), tol=3e-10)
        diffs.append(np.abs(fine[::2, ::2] - coarse).max())
    order = np.log2(diffs[0] / diffs[1])
    assert 1.5 < order < 2.5, (diffs, order)


def corrupted_battery(state, config, mutate):
    patch = hl.make_patch(config.R, config.N)
    phi = hl.assemble_phi(config.differentials, patch)
    bad_state, bad_phi = mutate(state, phi)
    checks = hl.check_solution(bad_state, bad_phi, patch)
    return {c.name: c for c in checks}


def test_negative_control_scaled_perturbation(n2_run):
    # doubling S leaves every structural property intact but is no longer a
    # solution: only the residual magnitude check can catch it, and it does
    config, state, _ = n2_run
    base = hl.fuchsian_baseline(config.n, hl.make_patch(config.R, config.N))

    def mutate(s, phi):
        from hitchinlab.hitchin_solver import _expm_hermitian
        S2 = 2.0 * s.S
        H2 = base.sqrt_h[..., :, None] * _expm_hermitian(S2) * base.sqrt_h[..., None, :]
        return hl.MetricState(S=S2, H=H2, mode=s.mode, converged=True), phi

    by = corrupted_battery(state, config, mutate)
    assert not by["residual-sup"].passed
    assert by["residual-trace"].passed and by["residual-h-selfadjoint"].passed


def test_negative_control_determinant_drift(n2_run):
    # scaling H breaks det H = 1, which v_n = 0 is the watchdog for
    config, state, _ = n2_run

    def mutate(s, phi):
        return hl.MetricState(S=s.S, H=1.01 * s.H, mode=s.mode, converged=True), phi

    by = corrupted_battery(state, config, mutate)
    assert not by["vn-zero"].passed


def test_negative_control_diagonal_tilt(n2_run):
    # tilting the splitting the wrong way sends v_1 positive and pushes the
    # energy density below 1
    config, state, _ = n2_run
    patch = hl.make_patch(config.R, config.N)
    base = hl.fuchsian_baseline(config.n, patch)

    def mutate(s, phi):
        H = np.array(s.H)
        H[..., 0, 0] *= 1.1
        H[..., 1, 1] /= 1.1
        return hl.MetricState(S=s.S, H=H, mode=s.mode, converged=True), phi

    by = corrupted_battery(state, config, mutate)
    assert not by["vk-nonpositive"].passed
    assert not by["energy-lower-bound"].passed


def test_negative_control_nonholomorphic_higgs(n2_run):
    # a non-holomorphic Higgs field has a non-holomorphic Hopf coefficient
    config, state, _ = n2_run
    patch = hl.make_patch(config.R, config.N)

    def mutate(s, phi):
        return s, phi * (1.0 + np.abs(patch.z[..., None, None]) ** 2)

    by = corrupted_battery(state, config, mutate)
    assert not by["hopf-holomorphy"].passed


def test_structure_measurement_detects_unprojected_residual(patch64):
    # the trace diagnostic itself is sensitive: an un-projected matrix field
    # registers far above the tolerance (the projection in residual() is
    # what keeps real states at machine zero)
    from hitchinlab.hitchin_solver import _structure_diagnostics

    base = hl.fuchsian_baseline(2, patch64)
    R = np.zeros_like(base.H)
    R[..., 0, 0] = 0.5
    R[..., 1, 1] = 0.4                      # trace 0.9, not projected out
    tr_rel, _ = _structure_diagnostics(base.H, R)
    assert tr_rel > 1e-12


def test_gram_schmidt_oracle_identity():
    assert np.allclose(gram_schmidt_line_metrics(np.eye(3)), [1, 1, 1], atol=1e-15)


def test_char_poly_bruteforce_shape():
    A = np.diag([1.0, 2.0, 3.0])
    c = char_poly_bruteforce(A)
    assert np.allclose(c, [1.0, -6.0, 11.0, -6.0], atol=1e-12)
