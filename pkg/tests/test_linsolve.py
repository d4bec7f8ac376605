import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from pdwg.assembly import build_saddle_system
from pdwg.linsolve import SingularSystem, factor_and_solve, solve_sparse
from pdwg.mesh import build_uniform_unit_square
from pdwg.problems import get_problem

from conftest import tags_for


def dense_elimination(A, b):
    """Plain Gaussian elimination with partial pivoting (test oracle)."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    for k in range(n):
        p = k + np.argmax(np.abs(A[k:, k]))
        A[[k, p]] = A[[p, k]]
        b[[k, p]] = b[[p, k]]
        for i in range(k + 1, n):
            m = A[i, k] / A[k, k]
            A[i, k:] -= m * A[k, k:]
            b[i] -= m * b[k]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - A[i, i + 1 :] @ x[i + 1 :]) / A[i, i]
    return x


def test_scalar_system():
    out = solve_sparse(sp.csc_matrix([[2.0]]), np.array([4.0]))
    assert out.x == pytest.approx([2.0])
    assert out.residual_inf <= 1e-14


def test_random_spd_against_elimination_oracle(rng):
    A = rng.standard_normal((5, 5))
    A = A @ A.T + 5 * np.eye(5)
    b = rng.standard_normal(5)
    want = dense_elimination(A, b)
    got = solve_sparse(sp.csc_matrix(A), b)
    assert np.abs(got.x - want).max() <= 1e-12


def test_hand_inverted_saddle_block():
    M = sp.csc_matrix(np.array([[1.0, 1.0], [1.0, 0.0]]))
    out = solve_sparse(M, np.array([1.0, 1.0]))
    assert out.x == pytest.approx([1.0, 0.0], abs=1e-14)


def test_exactly_singular_matrix_raises():
    M = sp.csc_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SingularSystem):
        solve_sparse(M, np.array([1.0, 1.0]))


def test_pivot_underflow_raises():
    M = sp.csc_matrix(np.diag([1.0, 1e-20]))
    with pytest.raises(SingularSystem):
        solve_sparse(M, np.array([1.0, 1.0]))


def test_pivot_report_populated():
    M = sp.csc_matrix(np.diag([4.0, 2.0]))
    out = solve_sparse(M, np.array([4.0, 2.0]))
    assert out.pivot_report.min_pivot == pytest.approx(2.0)
    assert out.pivot_report.max_pivot == pytest.approx(4.0)
    assert out.pivot_report.ratio == pytest.approx(0.5)


def test_matches_symmetric_ldlt_factorization():
    # unsymmetric LU vs dense Bunch-Kaufman on the same assembled matrix
    mesh = build_uniform_unit_square(2)
    system = build_saddle_system(mesh, tags_for(mesh, "case1"), get_problem("sinsin"))
    out = solve_sparse(system.M, system.rhs)
    A = system.M.toarray()
    l, d, perm = scipy.linalg.ldl(A)
    want = scipy.linalg.solve(
        d, scipy.linalg.solve_triangular(l[perm], system.rhs[perm], lower=True, unit_diagonal=True)
    )
    want = scipy.linalg.solve_triangular(
        l[perm].T, want, lower=False, unit_diagonal=True
    )[np.argsort(perm)]
    scale = max(1.0, np.abs(out.x).max())
    assert np.abs(out.x - want).max() <= 1e-12 * scale


def test_wellposed_mixed_solve_reproduces_rhs():
    mesh = build_uniform_unit_square(8)
    system = build_saddle_system(mesh, tags_for(mesh, "case2"), get_problem("sinsin"))
    solution = factor_and_solve(system)
    x = np.concatenate([solution.primal[system.dofmap.free], solution.lam])
    rel = np.abs(system.M @ x - system.rhs).max() / max(1.0, np.abs(system.rhs).max())
    assert rel <= 1e-11


def test_solution_scatter_respects_constraints():
    mesh = build_uniform_unit_square(4)
    system = build_saddle_system(mesh, tags_for(mesh, "case1"), get_problem("coscos"))
    solution = factor_and_solve(system)
    dm = system.dofmap
    assert np.array_equal(solution.primal[dm.constrained], system.g[dm.constrained])
    assert solution.u0.shape == (dm.n_u,)
    assert solution.un.shape == (dm.n_edges, 2)
    assert solution.lam.shape == (mesh.num_triangles,)
    assert solution.residual_inf <= 1e-10 * max(1.0, np.abs(system.rhs).max())
