import itertools

import numpy as np
import pytest

from synthmatch.exceptions import ConfigError, EmptyDonorPool, NotPsd, ValidationError
from synthmatch.optim import (
    QuadraticProgram,
    project_to_simplex,
    solve_box_qp,
    solve_qp,
    solve_simplex_qp,
)


def random_program(rng, n, constraint='box01', rows=20):
    a = rng.standard_normal((rows, n))
    b = rng.standard_normal(rows) + a @ rng.uniform(0, 1, n)
    return QuadraticProgram.least_squares(a, b, constraint=constraint)


def grid_minimum(qp, step=0.02):
    ticks = np.arange(0.0, 1.0 + step / 2, step)
    grid = np.array(list(itertools.product(ticks, repeat=qp.n)))
    values = np.einsum('ij,jk,ik->i', grid, qp.q, grid) - 2.0 * grid @ qp.lin + qp.const_term
    return float(values.min())


def test_project_to_simplex():
    np.testing.assert_allclose(project_to_simplex([0.2, 0.3, 0.5]), [0.2, 0.3, 0.5])
    np.testing.assert_allclose(project_to_simplex([2.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(project_to_simplex([1.0, 1.0]), [0.5, 0.5])
    np.testing.assert_allclose(project_to_simplex([-1.0, -1.0, -1.0]), np.full(3, 1 / 3))
    assert project_to_simplex([]).shape == (0, )


def test_project_to_simplex_random(rng):
    for _ in range(200):
        v = rng.standard_normal(7) * 3
        w = project_to_simplex(v)
        assert (w >= 0).all()
        assert abs(w.sum() - 1.0) <= 1e-12
        # projection optimality: (v - w)'(u - w) <= 0 for any simplex point u
        u = rng.dirichlet(np.ones(7))
        assert (v - w) @ (u - w) <= 1e-9


def test_box_interior_and_clipped():
    sol = solve_box_qp(QuadraticProgram(q=[[1.0]], lin=[0.5]))
    assert sol.w[0] == pytest.approx(0.5, abs=1e-8)
    assert sol.converged
    sol = solve_box_qp(QuadraticProgram(q=[[1.0]], lin=[2.0]))
    assert sol.w[0] == 1.0
    sol = solve_box_qp(QuadraticProgram(q=[[1.0]], lin=[-3.0]))
    assert sol.w[0] == 0.0


@pytest.mark.parametrize('n', [1, 2, 3])
def test_box_matches_grid(rng, n):
    for _ in range(100):
        qp = random_program(rng, n)
        sol = solve_box_qp(qp)
        assert qp.is_feasible(sol.w)
        assert sol.objective <= grid_minimum(qp) + 1e-9 * max(1.0, abs(sol.objective))
        assert sol.objective == pytest.approx(qp.objective(sol.w), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize('n', [2, 3])
def test_simplex_matches_grid(rng, n):
    for _ in range(100):
        qp = random_program(rng, n, constraint='simplex')
        sol = solve_simplex_qp(qp)
        assert (sol.w >= 0).all()
        assert abs(sol.w.sum() - 1.0) <= 1e-10
        ticks = np.arange(0.0, 1.0 + 1e-9, 0.02)
        grid = np.array([p for p in itertools.product(ticks, repeat=n - 1) if sum(p) <= 1.0 + 1e-12])
        grid = np.column_stack([grid, 1.0 - grid.sum(axis=1)])
        values = np.einsum('ij,jk,ik->i', grid, qp.q, grid) - 2.0 * grid @ qp.lin + qp.const_term
        assert sol.objective <= values.min() + 1e-9 * max(1.0, abs(sol.objective))


def test_simplex_line_search_oracle(rng):
    for _ in range(20):
        qp = random_program(rng, 2, constraint='simplex')
        sol = solve_simplex_qp(qp)
        t = np.linspace(0.0, 1.0, 10001)
        grid = np.column_stack([t, 1.0 - t])
        values = np.einsum('ij,jk,ik->i', grid, qp.q, grid) - 2.0 * grid @ qp.lin + qp.const_term
        assert sol.objective <= values.min() + 1e-9 * max(1.0, abs(values.min()))


def test_box_kkt(rng):
    qp = random_program(rng, 8, rows=30)
    sol = solve_box_qp(qp)
    grad = qp.gradient(sol.w)
    scale = max(1.0, np.abs(qp.q).max(), np.abs(qp.lin).max())
    tol = 1e-6 * scale
    interior = (sol.w > 1e-9) & (sol.w < 1 - 1e-9)
    assert np.all(np.abs(grad[interior]) <= tol)
    assert np.all(grad[sol.w <= 1e-9] >= -tol)
    assert np.all(grad[sol.w >= 1 - 1e-9] <= tol)


def test_simplex_exact_match():
    y1 = np.array([1.0, -1.0, 2.0, 0.0])
    yb = np.array([1.0, 1.0, 0.0, 0.0])
    a = np.column_stack([y1, yb])
    sol = solve_simplex_qp(QuadraticProgram.least_squares(a, y1, constraint='simplex'))
    np.testing.assert_allclose(sol.w, [1.0, 0.0], atol=1e-8)
    assert sol.objective == pytest.approx(0.0, abs=1e-12)


def test_simplex_single_and_empty():
    sol = solve_simplex_qp(QuadraticProgram(q=[[4.0]], lin=[-7.0], constraint='simplex'))
    np.testing.assert_array_equal(sol.w, [1.0])
    with pytest.raises(EmptyDonorPool):
        solve_simplex_qp(QuadraticProgram(q=np.zeros((0, 0)), lin=np.zeros(0), constraint='simplex'))


def test_box_empty():
    sol = solve_box_qp(QuadraticProgram(q=np.zeros((0, 0)), lin=np.zeros(0), const_term=3.0))
    assert sol.w.shape == (0, )
    assert sol.objective == 3.0


def test_not_psd():
    qp = QuadraticProgram(q=[[1.0, 0.0], [0.0, -1.0]], lin=[0.0, 0.0])
    with pytest.raises(NotPsd):
        solve_box_qp(qp)


def test_asymmetric_rejected():
    with pytest.raises(ValidationError):
        QuadraticProgram(q=[[1.0, 0.5], [0.0, 1.0]], lin=[0.0, 0.0])


def test_bad_parameters():
    qp = QuadraticProgram(q=[[1.0]], lin=[0.5])
    with pytest.raises(ConfigError):
        solve_box_qp(qp, tol=0.0)
    with pytest.raises(ConfigError):
        solve_box_qp(qp, max_iter=0)
    with pytest.raises(ConfigError):
        solve_simplex_qp(qp)


def test_history_is_monotone(rng):
    qp = random_program(rng, 12, rows=15)
    sol = solve_qp(qp)
    assert np.all(np.diff(sol.history) <= 1e-12 * max(1.0, abs(sol.history[0])))


def test_warm_start_never_worse(rng):
    qp = random_program(rng, 6)
    cold = solve_box_qp(qp)
    warm = solve_box_qp(qp, w0=cold.w)
    assert warm.objective <= cold.objective + 1e-12 * max(1.0, abs(cold.objective))


def test_singular_program(rng):
    a = rng.standard_normal((10, 2))
    a = np.column_stack([a, a[:, 0]])
    b = a @ np.array([0.4, 0.2, 0.4])
    sol = solve_box_qp(QuadraticProgram.least_squares(a, b))
    assert sol.objective == pytest.approx(0.0, abs=1e-8)


def test_penalty_shrinks_weights(rng):
    a = rng.standard_normal((20, 4))
    b = a @ np.array([0.5, 0.5, 0.5, 0.5])
    w_plain = solve_box_qp(QuadraticProgram.least_squares(a, b)).w
    w_pen = solve_box_qp(QuadraticProgram.least_squares(a, b, penalty=5.0)).w
    assert w_pen.sum() <= w_plain.sum() + 1e-8


def kkt_point(qp, tol=1e-9):
    """Exhaustive active-set enumeration: the feasible point meeting the KKT conditions."""
    n, q, lin = qp.n, qp.q, qp.lin
    if qp.constraint == 'box01':
        for states in itertools.product(('low', 'high', 'free'), repeat=n):
            free = np.array([s == 'free' for s in states])
            w = np.array([1.0 if s == 'high' else 0.0 for s in states])
            if free.any():
                rhs = lin[free] - q[np.ix_(free, ~free)] @ w[~free]
                w[free] = np.linalg.solve(q[np.ix_(free, free)], rhs)
            if (w < -tol).any() or (w > 1 + tol).any():
                continue
            grad = 2.0 * (q @ w - lin)
            low = np.array([s == 'low' for s in states])
            high = np.array([s == 'high' for s in states])
            if (grad[low] >= -tol).all() and (grad[high] <= tol).all():
                return w
    else:
        for size in range(1, n + 1):
            for support in itertools.combinations(range(n), size):
                s = list(support)
                kkt = np.zeros((size + 1, size + 1))
                kkt[:size, :size] = 2.0 * q[np.ix_(s, s)]
                kkt[:size, size] = 1.0
                kkt[size, :size] = 1.0
                solution = np.linalg.solve(kkt, np.append(2.0 * lin[s], 1.0))
                w = np.zeros(n)
                w[s] = solution[:size]
                nu = solution[size]
                if (w < -tol).any():
                    continue
                grad = 2.0 * (q @ w - lin)
                if (grad + nu >= -tol).all():
                    return w
    raise AssertionError("no KKT point found")


@pytest.mark.parametrize('constraint', ['box01', 'simplex'])
@pytest.mark.parametrize('n', [1, 2, 3, 4])
def test_matches_kkt_enumeration(rng, constraint, n):
    for _ in range(50):
        qp = random_program(rng, n, constraint=constraint)
        sol = solve_qp(qp)
        oracle = kkt_point(qp)
        np.testing.assert_allclose(sol.w, oracle, atol=1e-6)
        assert sol.objective <= qp.objective(oracle) + 1e-9 * max(1.0, abs(sol.objective))


def test_project_to_simplex_idempotent_and_nonexpansive(rng):
    for _ in range(500):
        u = rng.standard_normal(6) * 2
        v = rng.standard_normal(6) * 2
        pu, pv = project_to_simplex(u), project_to_simplex(v)
        np.testing.assert_allclose(project_to_simplex(pu), pu, atol=1e-12)
        assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-12


@pytest.mark.parametrize('constraint', ['box01', 'simplex'])
def test_scale_equivariance(rng, constraint):
    for _ in range(20):
        qp = random_program(rng, 5, constraint=constraint)
        sol = solve_qp(qp)
        for lam in (0.01, 100.0):
            scaled = QuadraticProgram(
                q=lam * qp.q, lin=lam * qp.lin, constraint=constraint, const_term=lam * qp.const_term
            )
            other = solve_qp(scaled)
            np.testing.assert_allclose(other.w, sol.w, atol=1e-6)
            assert other.objective == pytest.approx(lam * sol.objective, rel=1e-8, abs=1e-10 * lam)


@pytest.mark.parametrize('constraint', ['box01', 'simplex'])
def test_beats_random_feasible_points(rng, constraint):
    for _ in range(10):
        qp = random_program(rng, 6, constraint=constraint)
        sol = solve_qp(qp)
        if constraint == 'box01':
            points = rng.uniform(0.0, 1.0, (1000, 6))
        else:
            points = rng.dirichlet(np.ones(6), 1000)
        values = np.einsum('ij,jk,ik->i', points, qp.q, points) - 2.0 * points @ qp.lin + qp.const_term
        assert sol.objective <= values.min() + 1e-9 * max(1.0, abs(sol.objective))
