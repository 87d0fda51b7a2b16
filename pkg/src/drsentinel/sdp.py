"""Self-contained solver for small dense linear SDPs in inequality form.

Problems are  minimize c'x  subject to  F_b(x) = F0_b + sum_i x_i Fi_b >= 0
for every block b (scalar affine constraints are 1x1 blocks).  The solver
is logarithmic-barrier path following with damped Newton steps: ample for
a few dozen variables and blocks up to a few tens of rows, which is the
regime the reachable-set programs live in.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .matcore import InvalidInput

NEWTON_REGULARIZATION = 1e-12
NEWTON_DECREMENT_TOL = 1e-10
MAX_NEWTON_PER_CENTER = 300
PHASE1_MARGIN_CAP = 1e6
# Tiny pull toward the origin used by Phase I.  Its slack objective ignores
# the original variables, so without damping the feasible set's recession
# directions put the barrier centers at infinity; the damping caps them
# while under-estimating the achievable margin by at most
# PHASE1_DAMPING * ||x||^2 of the best moderate-norm point.
PHASE1_DAMPING = 1e-10
# Same mechanism for the main path: when the optimal VALUE is attained but
# the optimal SET is unbounded (directions the objective ignores), the
# damping keeps centers finite.  It biases reported objectives by at most
# OBJECTIVE_DAMPING * ||x*||^2, negligible for solution norms up to ~1e4.
OBJECTIVE_DAMPING = 1e-14


class NumericalFailure(RuntimeError):
    """The Newton iteration could not make progress despite regularization."""


class SdpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITER = "max_iter"
    NUMERICAL_FAILURE = "numerical_failure"


def _check_sym_stack(coeffs: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(coeffs, dtype=float)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise InvalidInput(f"{name} must have shape (nvars, d, d)")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} has non-finite entries")
    scale = 1.0 + (np.abs(a).max() if a.size else 0.0)
    if a.size and np.abs(a - a.transpose(0, 2, 1)).max() > 1e-12 * scale:
        raise InvalidInput(f"{name} contains a non-symmetric matrix")
    return a


@dataclass(frozen=True)
class SdpBlock:
    """One PSD constraint F0 + sum_i x_i Fi >= 0."""

    f0: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        f0 = np.asarray(self.f0, dtype=float)
        if f0.ndim != 2 or f0.shape[0] != f0.shape[1]:
            raise InvalidInput("f0 must be square")
        if not np.all(np.isfinite(f0)):
            raise InvalidInput("f0 has non-finite entries")
        scale = 1.0 + (np.abs(f0).max() if f0.size else 0.0)
        if f0.size and np.abs(f0 - f0.T).max() > 1e-12 * scale:
            raise InvalidInput("f0 is not symmetric")
        coeffs = _check_sym_stack(self.coeffs, "coeffs")
        if coeffs.shape[1] != f0.shape[0]:
            raise InvalidInput("coeffs and f0 dimensions differ")
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def dim(self) -> int:
        return self.f0.shape[0]

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.f0 + np.tensordot(x, self.coeffs, axes=(0, 0))


@dataclass(frozen=True)
class SdpProblem:
    """minimize c'x subject to every block being positive semidefinite."""

    c: np.ndarray
    blocks: tuple[SdpBlock, ...]

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise InvalidInput("c must be a finite vector")
        blocks = tuple(self.blocks)
        if not blocks:
            raise InvalidInput("at least one block is required")
        for b in blocks:
            if b.coeffs.shape[0] != c.size:
                raise InvalidInput("every block needs one coefficient matrix per variable")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "blocks", blocks)

    @property
    def nvars(self) -> int:
        return self.c.size

    @property
    def total_dim(self) -> int:
        return sum(b.dim for b in self.blocks)

    def constraint_values(self, x) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        return [b.value(x) for b in self.blocks]

    def min_eigenvalue(self, x) -> float:
        return min(float(np.linalg.eigvalsh(F).min()) for F in self.constraint_values(x))


@dataclass
class SdpSolution:
    x: np.ndarray
    objective: float
    status: SdpStatus
    min_eig_slack: float
    duality_gap_estimate: float
    outer_history: list[tuple[float, float, int]] = field(default_factory=list)


def _batch_lsolve(chol: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """Apply L^{-1} to each matrix of a (k, d, d) stack."""
    k, d, _ = stack.shape
    flat = stack.transpose(1, 0, 2).reshape(d, k * d)
    solved = solve_triangular(chol, flat, lower=True, check_finite=False)
    return solved.reshape(d, k, d).transpose(1, 0, 2)


def _sandwich(chol: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """S_i = L^{-1} F_i L^{-T} for every coefficient matrix (F_i symmetric)."""
    half = _batch_lsolve(chol, coeffs)
    return _batch_lsolve(chol, half.transpose(0, 2, 1))


def _chol_all(blocks, x) -> list[np.ndarray] | None:
    out = []
    for b in blocks:
        F = b.value(x)
        try:
            out.append(np.linalg.cholesky(F))
        except np.linalg.LinAlgError:
            return None
    return out


def _logdet(chols) -> float:
    return sum(2.0 * float(np.log(np.diag(L)).sum()) for L in chols)


def _center(t, c, blocks, x, *, mu=0.0, decr_tol=NEWTON_DECREMENT_TOL, max_newton=MAX_NEWTON_PER_CENTER):
    """Damped Newton on phi(x) = t (c'x + mu ||x||^2) - sum_b log det F_b(x).

    `x` must be strictly feasible on entry and stays so throughout.  The
    line search evaluates barrier decreases as exact differences
    (t * step * c'dx plus log-det changes), keeping full float resolution
    even when t * c'x is astronomically large late on the path.  Returns
    (x, newton_steps); raises NumericalFailure rather than ever returning
    an uncentered point as if it were centered.
    """
    k = x.size
    lam2 = np.inf
    for it in range(max_newton):
        chols = _chol_all(blocks, x)
        if chols is None:
            raise NumericalFailure("barrier iterate lost strict feasibility")
        grad = t * (c + 2.0 * mu * x)
        hess = 2.0 * t * mu * np.eye(k)
        sandwiches = []
        for chol, b in zip(chols, blocks):
            S = _sandwich(chol, b.coeffs)
            sandwiches.append(S)
            grad -= np.einsum("kii->k", S)
            V = S.reshape(k, -1)
            hess += V @ V.T
        # The Hessian is positive semidefinite by construction, so the plain
        # solve almost always works; regularization is a fallback scaled to
        # the Hessian (a fixed absolute shift would freeze Newton along
        # legitimately low-curvature directions).
        scale = max(float(np.diag(hess).max()), 1e-300)
        reg = 0.0
        while True:
            try:
                dx = np.linalg.solve(hess + reg * np.eye(k), -grad)
            except np.linalg.LinAlgError:
                dx = None
            if dx is not None and np.all(np.isfinite(dx)):
                break
            reg = NEWTON_REGULARIZATION * scale if reg == 0.0 else reg * 100.0
            if reg > 1e20 * scale:
                raise NumericalFailure("Newton system singular beyond regularization")
        lam2 = max(float(-grad @ dx), 0.0)
        if 0.5 * lam2 <= decr_tol:
            return x, it
        # Fraction-to-boundary rule: the largest feasible step along dx is
        # read off the whitened direction, so the search starts just inside
        # the cone instead of halving its way there.
        step = 1.0
        for S in sandwiches:
            lam_min = float(np.linalg.eigvalsh(np.tensordot(dx, S, axes=(0, 0))).min())
            if lam_min < 0.0:
                step = min(step, -0.99 / lam_min)
        logdet_x = _logdet(chols)
        c_dx = float(c @ dx)
        dx_sq = float(dx @ dx)
        x_dx = float(x @ dx)
        accepted = False
        while step >= 1e-16:
            x_try = x + step * dx
            chols_try = _chol_all(blocks, x_try)
            if chols_try is not None:
                decrease = t * step * (c_dx + mu * (2.0 * x_dx + step * dx_sq)) \
                    + (logdet_x - _logdet(chols_try))
                if decrease <= -1e-4 * step * lam2:
                    x = x_try
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            # Flat to machine precision: accept only if essentially centered.
            if 0.5 * lam2 <= 1e-6:
                return x, it
            raise NumericalFailure("line search stalled away from the center")
        if np.abs(x).max() > 1e12:
            raise NumericalFailure("iterates diverging; problem may be unbounded")
    if 0.5 * lam2 <= 1e-4:
        return x, max_newton
    raise NumericalFailure(f"centering did not converge in {max_newton} Newton steps")


def _path(c, blocks, x0, *, t0, growth, gap_tol, max_outer, m_total, mu=0.0):
    """Follow the central path until m_total / t falls below gap_tol.

    A centering failure after at least one completed center degrades
    gracefully: the last certified iterate is returned with the gap it
    actually achieved (callers see a non-optimal status).  The ladder never
    overshoots the t the tolerance asks for, which keeps the final centers
    out of the float-resolution regime.
    """
    x = np.asarray(x0, dtype=float).copy()
    t = float(t0)
    t_target = m_total / gap_tol
    t_done = None
    history: list[tuple[float, float, int]] = []
    for _ in range(max_outer):
        try:
            x, steps = _center(t, c, blocks, x, mu=mu)
        except NumericalFailure:
            if t_done is None:
                raise
            return x, t_done, history, m_total / t_done <= gap_tol
        t_done = t
        history.append((t, float(c @ x), steps))
        if m_total / t <= gap_tol:
            return x, t, history, True
        t = min(t * growth, t_target * (1.0 + 1e-9))
    return x, t_done, history, False


def phase1(prob: SdpProblem, *, margin_cap: float = PHASE1_MARGIN_CAP, tol: float = 1e-6,
           max_outer: int = 80, barrier_growth: float = 10.0,
           stop_margin: float | None = None) -> tuple[np.ndarray, float]:
    """Maximize the uniform slack s subject to F_b(x) - s I >= 0 (s capped).

    Always has a strictly feasible start (any x with s below the smallest
    constraint eigenvalue), so it doubles as the infeasibility detector:
    a non-positive returned margin means no strictly feasible point was
    found.  The margin is certified: F_b(x) > margin * I at the returned x.

    `stop_margin` stops the path early once the iterate's certified margin
    reaches that value; use it when any comfortably interior point will do.
    """
    k = prob.nvars
    aug_blocks = []
    for b in prob.blocks:
        eye = np.eye(b.dim)
        aug_blocks.append(SdpBlock(f0=b.f0, coeffs=np.concatenate([b.coeffs, -eye[None]], axis=0)))
    cap_coeffs = np.zeros((k + 1, 1, 1))
    cap_coeffs[k, 0, 0] = -1.0
    aug_blocks.append(SdpBlock(f0=np.array([[float(margin_cap)]]), coeffs=cap_coeffs))

    c_aug = np.zeros(k + 1)
    c_aug[k] = -1.0
    s0 = min(float(np.linalg.eigvalsh(b.f0).min()) for b in prob.blocks) - 1.0
    s0 = min(s0, margin_cap - 1.0)
    x0 = np.zeros(k + 1)
    x0[k] = s0

    x = x0
    t = 1.0
    m_total = prob.total_dim + 1
    centered_once = False
    for _ in range(max_outer):
        try:
            x, _ = _center(t, c_aug, aug_blocks, x, mu=PHASE1_DAMPING)
        except NumericalFailure:
            # Margins pinned against the cap stop being resolvable in
            # floats at large t; the current iterate is still a valid
            # certificate, just not the last word on optimality.
            if centered_once:
                break
            raise
        centered_once = True
        if stop_margin is not None and x[k] >= stop_margin:
            break
        if m_total / t <= tol:
            break
        t *= barrier_growth
    return x[:k], float(x[k])


def solve(prob: SdpProblem, *, tol: float = 1e-9, max_outer: int = 60,
          barrier_growth: float = 10.0, feas_tol: float = 1e-9, t0: float = 1.0,
          x0: np.ndarray | None = None) -> SdpSolution:
    """Solve the SDP by Phase-I then barrier path following.

    `tol` bounds the final duality-gap estimate total_dim / t.  A strictly
    feasible `x0` skips Phase I; an `x0` that is not strictly feasible
    falls back to Phase I silently.  Returns status INFEASIBLE when
    Phase I cannot produce a strictly interior point; raises
    NumericalFailure if Newton stalls beyond recovery.
    """
    # Per-block scaling so ||F0||_2 <= 1: the barrier geometry is unchanged
    # (the log-det shifts by a constant) but Cholesky conditioning improves.
    scaled_blocks = []
    for b in prob.blocks:
        norm = float(np.abs(np.linalg.eigvalsh(b.f0)).max()) if b.dim else 0.0
        sigma = 1.0 / max(1.0, norm)
        scaled_blocks.append(SdpBlock(f0=sigma * b.f0, coeffs=sigma * b.coeffs))
    scaled = SdpProblem(c=prob.c, blocks=tuple(scaled_blocks))

    start = None
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape == (prob.nvars,) and _chol_all(scaled.blocks, x0) is not None:
            start = x0.copy()
    if start is None:
        # Any comfortably interior point serves as the start; margins are
        # only resolved finely enough to make the feasibility call.
        start, margin = phase1(scaled, tol=1e-6, stop_margin=1e-3)
        if margin <= feas_tol:
            return SdpSolution(
                x=start,
                objective=float(prob.c @ start),
                status=SdpStatus.INFEASIBLE,
                min_eig_slack=prob.min_eigenvalue(start),
                duality_gap_estimate=np.inf,
            )

    m_total = prob.total_dim
    x, t, history, converged = _path(prob.c, scaled.blocks, start, t0=t0, growth=barrier_growth,
                                     gap_tol=tol, max_outer=max_outer, m_total=m_total,
                                     mu=OBJECTIVE_DAMPING)
    return SdpSolution(
        x=x,
        objective=float(prob.c @ x),
        status=SdpStatus.OPTIMAL if converged else SdpStatus.MAX_ITER,
        min_eig_slack=prob.min_eigenvalue(x),
        duality_gap_estimate=m_total / t,
        outer_history=history,
    )
