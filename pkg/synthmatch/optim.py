"""
Quadratic-programming kernels.

Objective is ``w'qw - 2 lin'w + const`` over either the box [0, 1]^J or the
unit simplex. Both are solved with accelerated projected gradient (step 1/L,
L from power iteration on q, momentum restart on any objective increase)
followed by an active-set refinement of the free coordinates.
"""
import logging
from typing import Optional

import numpy as np

from .conf import POWER_ITERATIONS, POWER_RTOL, PSD_TOL, QP_MAX_ITER, QP_TOL
from .exceptions import (
    ConfigError,
    Diverged,
    EmptyDonorPool,
    LengthMismatch,
    MissingValue,
    NotPsd,
    ValidationError,
)
from .fields import Field
from .models import Model

logger = logging.getLogger(__name__)

CONSTRAINTS = ('box01', 'simplex')
SYMMETRY_RTOL = 1e-10
# power iteration underestimates the top eigenvalue, pad it a little.
LIPSCHITZ_PAD = 1.01
MAX_BACKTRACK = 60
MAX_STALL = 50
REFINE_EVERY = 25
ACTIVE_TOL = 1e-12


class QuadraticProgram(Model):
    """Convex quadratic program ``min w'qw - 2 lin'w + const_term`` over a constraint set."""
    q: np.ndarray
    lin: np.ndarray
    constraint: str = Field(default='box01', choices=CONSTRAINTS)
    const_term: float = 0.0

    class Meta:
        name = 'quadratic_program'

    def __post_init__(self) -> None:
        q = np.array(self.q, dtype=float, ndmin=2)
        lin = np.array(self.lin, dtype=float).ravel()
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise LengthMismatch(f"q must be square, got shape {q.shape}")
        if q.shape[0] != lin.shape[0]:
            raise LengthMismatch(
                f"q is {q.shape[0]}x{q.shape[0]} but lin has length {lin.shape[0]}"
            )
        if not (np.isfinite(q).all() and np.isfinite(lin).all()):
            raise MissingValue("quadratic program has non-finite coefficients")
        if self.constraint not in CONSTRAINTS:
            raise ConfigError(
                f"unknown constraint {self.constraint!r}, expected one of {CONSTRAINTS}"
            )
        if q.size:
            scale = max(1.0, float(np.abs(q).max()))
            if float(np.abs(q - q.T).max()) > SYMMETRY_RTOL * scale:
                raise ValidationError("q is not symmetric")
            q = 0.5 * (q + q.T)
        q.setflags(write=False)
        lin.setflags(write=False)
        object.__setattr__(self, 'q', q)
        object.__setattr__(self, 'lin', lin)
        object.__setattr__(self, 'const_term', float(self.const_term))

    @classmethod
    def least_squares(
        cls,
        a: np.ndarray,
        b: np.ndarray,
        constraint: str = 'box01',
        penalty: float = 0.0
    ) -> 'QuadraticProgram':
        """Expansion of ``||b - a w||^2 + 2 penalty sum(w)``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float).ravel()
        if a.ndim != 2 or a.shape[0] != b.shape[0]:
            raise LengthMismatch(
                f"design of shape {a.shape} for a response of length {b.shape[0]}"
            )
        return cls(
            q=a.T @ a,
            lin=a.T @ b - penalty,
            constraint=constraint,
            const_term=float(b @ b)
        )

    @property
    def n(self) -> int:
        return self.lin.shape[0]

    def objective(self, w: np.ndarray) -> float:
        w = np.asarray(w, dtype=float)
        return float(w @ (self.q @ w) - 2.0 * (self.lin @ w) + self.const_term)

    def gradient(self, w: np.ndarray) -> np.ndarray:
        return 2.0 * (self.q @ w - self.lin)

    def project(self, w: np.ndarray) -> np.ndarray:
        if self.constraint == 'box01':
            return np.clip(w, 0.0, 1.0)
        return project_to_simplex(w)

    def is_feasible(self, w: np.ndarray, atol: float = 1e-10) -> bool:
        w = np.asarray(w, dtype=float)
        if self.constraint == 'box01':
            return bool(((w >= 0.0) & (w <= 1.0)).all())
        return bool((w >= 0.0).all() and abs(w.sum() - 1.0) <= atol)


class QpSolution(Model):
    """Solver result: minimizer, objective value and diagnostics."""
    w: np.ndarray
    objective: float
    iterations: int = 0
    converged: bool = True
    kkt_residual: float = 0.0
    constraint: str = 'box01'
    history: Optional[np.ndarray] = None

    class Meta:
        name = 'qp_solution'


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum(w) = 1} (sort-based).

    Active coordinates are renormalized at the end so the output sums to
    one up to rounding.
    """
    v = np.asarray(v, dtype=float).ravel()
    n = v.shape[0]
    if n == 0:
        return v.copy()
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, n + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    w = np.maximum(v - tau, 0.0)
    active = w > 0
    w[active] /= w[active].sum()
    return w


def _top_eigenvalue(q: np.ndarray) -> float:
    """Largest eigenvalue magnitude of a symmetric q by power iteration."""
    n = q.shape[0]
    # fixed start vector, so solves are reproducible.
    x = np.random.default_rng(20231).standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(POWER_ITERATIONS):
        y = q @ x
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        x = y / norm
        if abs(norm - lam) <= POWER_RTOL * norm:
            return norm
        lam = norm
    return lam


def _check_psd(q: np.ndarray) -> None:
    if q.size == 0:
        return
    eig = np.linalg.eigvalsh(q)
    norm = float(np.abs(eig).max())
    if eig[0] < -PSD_TOL * max(norm, np.finfo(float).tiny):
        raise NotPsd(
            f"quadratic term has negative curvature {eig[0]:.3e} (norm {norm:.3e})"
        )


def _check_params(tol: float, max_iter: int) -> None:
    if not tol > 0:
        raise ConfigError(f"solver tolerance must be positive, got {tol}")
    if int(max_iter) < 1:
        raise ConfigError(f"max_iter must be at least 1, got {max_iter}")


def _scale(qp: QuadraticProgram) -> float:
    scale = 1.0
    if qp.n:
        scale = max(scale, float(np.abs(qp.q).max()), float(np.abs(qp.lin).max()))
    return scale


def _residual(qp: QuadraticProgram, w: np.ndarray, L: float) -> float:
    """Norm of the gradient mapping L * (w - P(w - grad/L))."""
    step = qp.project(w - qp.gradient(w) / L)
    return float(L * np.linalg.norm(w - step))


def _refine(qp: QuadraticProgram, w: np.ndarray, fw: float) -> tuple:
    """Solves the equality-constrained problem on the free coordinates of w.

    The candidate is kept only when feasible and not worse.
    """
    if qp.constraint == 'box01':
        free = (w > ACTIVE_TOL) & (w < 1.0 - ACTIVE_TOL)
        if not free.any():
            return w, fw
        fixed = ~free
        bound = np.where(w[fixed] >= 0.5, 1.0, 0.0)
        rhs = qp.lin[free] - qp.q[np.ix_(free, fixed)] @ bound
        sol = np.linalg.lstsq(qp.q[np.ix_(free, free)], rhs, rcond=None)[0]
        if not ((sol >= -ACTIVE_TOL) & (sol <= 1.0 + ACTIVE_TOL)).all():
            return w, fw
        candidate = np.empty_like(w)
        candidate[fixed] = bound
        candidate[free] = np.clip(sol, 0.0, 1.0)
    else:
        free = w > ACTIVE_TOL
        k = int(free.sum())
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = 2.0 * qp.q[np.ix_(free, free)]
        kkt[:k, k] = 1.0
        kkt[k, :k] = 1.0
        rhs = np.concatenate([2.0 * qp.lin[free], [1.0]])
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
        if (sol < -ACTIVE_TOL).any() or not np.isfinite(sol).all():
            return w, fw
        candidate = np.zeros_like(w)
        candidate[free] = np.maximum(sol, 0.0)
        total = candidate.sum()
        if total <= 0:
            return w, fw
        candidate /= total
    fc = qp.objective(candidate)
    if np.isfinite(fc) and fc <= fw:
        return candidate, fc
    return w, fw


def _accelerated_pg(
    qp: QuadraticProgram,
    tol: float,
    max_iter: int,
    w0: Optional[np.ndarray]
) -> QpSolution:
    n = qp.n
    if w0 is None:
        w0 = np.zeros(n) if qp.constraint == 'box01' else np.full(n, 1.0 / n)
    w0 = np.asarray(w0, dtype=float).ravel()
    if w0.shape[0] != n:
        raise LengthMismatch(f"initial point of length {w0.shape[0]} for J={n}")
    lam = _top_eigenvalue(qp.q)
    L = 2.0 * LIPSCHITZ_PAD * lam if lam > 0 else 1.0
    scale = _scale(qp)
    x = qp.project(w0)
    fx = qp.objective(x)
    y = x.copy()
    t = 1.0
    history = [fx]
    residual = _residual(qp, x, L)
    iterations = 0
    stalled = 0
    converged = residual <= tol * scale
    while not converged and iterations < max_iter:
        iterations += 1
        z = qp.project(y - qp.gradient(y) / L)
        fz = qp.objective(z)
        if not (np.isfinite(fz) and np.isfinite(z).all()):
            raise Diverged(f"non-finite iterate at iteration {iterations}")
        if fz > fx:
            # momentum restart: plain projected-gradient step from x
            t = 1.0
            gx = qp.gradient(x)
            z = qp.project(x - gx / L)
            fz = qp.objective(z)
            backtracks = 0
            while fz > fx and backtracks < MAX_BACKTRACK:
                L *= 2.0
                z = qp.project(x - gx / L)
                fz = qp.objective(z)
                backtracks += 1
            if fz > fx:
                # no descent left at working precision
                break
        stalled = stalled + 1 if fz >= fx else 0
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = z + ((t - 1.0) / t_next) * (z - x)
        x, fx, t = z, fz, t_next
        history.append(fx)
        residual = _residual(qp, x, L)
        converged = residual <= tol * scale
        if not converged and iterations % REFINE_EVERY == 0:
            candidate, fc = _refine(qp, x, fx)
            if fc < fx:
                x, fx, y, t = candidate, fc, candidate.copy(), 1.0
                history.append(fx)
                residual = _residual(qp, x, L)
                converged = residual <= tol * scale
        if stalled >= MAX_STALL:
            break
    x, fx = _refine(qp, x, fx)
    if fx < history[-1]:
        history.append(fx)
    residual = _residual(qp, x, L)
    converged = converged or residual <= tol * scale
    if not converged:
        logger.warning(
            f"QP ({qp.constraint}, J={n}) stopped after {iterations} iterations "
            f"with residual {residual:.3e}"
        )
    else:
        logger.debug(
            f"QP ({qp.constraint}, J={n}) converged in {iterations} iterations"
        )
    return QpSolution(
        w=x,
        objective=qp.objective(x),
        iterations=iterations,
        converged=bool(converged),
        kkt_residual=residual,
        constraint=qp.constraint,
        history=np.asarray(history)
    )


def solve_box_qp(
    qp: QuadraticProgram,
    tol: float = QP_TOL,
    max_iter: int = QP_MAX_ITER,
    w0: Optional[np.ndarray] = None
) -> QpSolution:
    """Minimizes the program over the box [0, 1]^J.

    Raises:
        NotPsd: q has a negative curvature direction.
        Diverged: non-finite iterate.
    """
    if qp.constraint != 'box01':
        raise ConfigError(f"solve_box_qp needs a box01 program, got {qp.constraint}")
    _check_params(tol, max_iter)
    _check_psd(qp.q)
    if qp.n == 0:
        w = np.zeros(0)
        return QpSolution(w=w, objective=qp.objective(w), constraint='box01')
    return _accelerated_pg(qp, tol, int(max_iter), w0)


def solve_simplex_qp(
    qp: QuadraticProgram,
    tol: float = QP_TOL,
    max_iter: int = QP_MAX_ITER,
    w0: Optional[np.ndarray] = None
) -> QpSolution:
    """Minimizes the program over the unit simplex."""
    if qp.constraint != 'simplex':
        raise ConfigError(f"solve_simplex_qp needs a simplex program, got {qp.constraint}")
    _check_params(tol, max_iter)
    if qp.n == 0:
        raise EmptyDonorPool("the simplex over zero units is empty")
    _check_psd(qp.q)
    if qp.n == 1:
        w = np.ones(1)
        return QpSolution(w=w, objective=qp.objective(w), constraint='simplex')
    return _accelerated_pg(qp, tol, int(max_iter), w0)


def solve_qp(
    qp: QuadraticProgram,
    tol: float = QP_TOL,
    max_iter: int = QP_MAX_ITER,
    w0: Optional[np.ndarray] = None
) -> QpSolution:
    if qp.constraint == 'simplex':
        return solve_simplex_qp(qp, tol, max_iter, w0)
    return solve_box_qp(qp, tol, max_iter, w0)
