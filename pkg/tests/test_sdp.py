import numpy as np
import pytest

from steerkit.sdp import (
    HermitianVar,
    SdpBlock,
    SdpProblem,
    sdp_solve,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
)


def test_largest_eigenvalue_form():
    # maximize tr(C X), tr X = 1, X >= 0, C = diag(1, -1): optimum 1
    var = HermitianVar(2, 0)
    m = var.size
    c = np.diag([1.0, -1.0]).astype(complex)
    prob = SdpProblem(
        blocks=[SdpBlock(const=np.zeros((2, 2), dtype=complex), coeffs=var.coeff_columns(m))],
        objective=var.linear_row(c, m),
        eq=(var.linear_row(np.eye(2, dtype=complex), m)[None, :], np.array([1.0])),
    )
    sol = sdp_solve(prob, tol=1e-9)
    assert sol.status == STATUS_OPTIMAL
    assert sol.objective == pytest.approx(1.0, abs=1e-8)


def test_scalar_bound():
    # maximize s subject to s * 1 <= 1 (one-dimensional block)
    prob = SdpProblem(
        blocks=[SdpBlock(const=np.eye(1, dtype=complex), coeffs=[-np.eye(1, dtype=complex)])],
        objective=np.array([1.0]),
    )
    sol = sdp_solve(prob, tol=1e-9)
    assert sol.status == STATUS_OPTIMAL
    assert sol.objective == pytest.approx(1.0, abs=1e-8)


def test_complex_block_embedding():
    # maximize <Y> over qubit states: optimum 1 needs the imaginary part
    var = HermitianVar(2, 0)
    m = var.size
    y = np.array([[0.0, -1j], [1j, 0.0]])
    prob = SdpProblem(
        blocks=[SdpBlock(const=np.zeros((2, 2), dtype=complex), coeffs=var.coeff_columns(m))],
        objective=var.linear_row(y, m),
        eq=(var.linear_row(np.eye(2, dtype=complex), m)[None, :], np.array([1.0])),
    )
    sol = sdp_solve(prob, tol=1e-9)
    assert sol.status == STATUS_OPTIMAL
    assert sol.objective == pytest.approx(1.0, abs=1e-8)


def test_infeasible_detected():
    # X >= 0, tr X = -1 is infeasible
    var = HermitianVar(2, 0)
    m = var.size
    prob = SdpProblem(
        blocks=[SdpBlock(const=np.zeros((2, 2), dtype=complex), coeffs=var.coeff_columns(m))],
        objective=np.zeros(m),
        eq=(var.linear_row(np.eye(2, dtype=complex), m)[None, :], np.array([-1.0])),
    )
    sol = sdp_solve(prob, tol=1e-9)
    assert sol.status == STATUS_INFEASIBLE


def test_weak_duality_on_regression_set():
    # maximize tr(C X), tr X = 1, X >= 0 never exceeds max eigenvalue of C
    rng = np.random.default_rng(3)
    var = HermitianVar(3, 0)
    m = var.size
    for _ in range(5):
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        c = (g + g.conj().T) / 2
        prob = SdpProblem(
            blocks=[SdpBlock(const=np.zeros((3, 3), dtype=complex), coeffs=var.coeff_columns(m))],
            objective=var.linear_row(c, m),
            eq=(var.linear_row(np.eye(3, dtype=complex), m)[None, :], np.array([1.0])),
        )
        sol = sdp_solve(prob, tol=1e-9)
        lam = np.linalg.eigvalsh(c)[-1]
        assert sol.status == STATUS_OPTIMAL
        # dual feasible value lam certifies the optimum from above
        assert sol.objective <= lam + 1e-7
        assert sol.objective == pytest.approx(lam, abs=1e-7)


def test_solution_reports_gap():
    prob = SdpProblem(
        blocks=[SdpBlock(const=np.eye(1, dtype=complex), coeffs=[-np.eye(1, dtype=complex)])],
        objective=np.array([1.0]),
    )
    sol = sdp_solve(prob, tol=1e-8)
    assert sol.gap <= 1e-8
