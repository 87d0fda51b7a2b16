"""Minimum-trace outer ellipsoidal bounds on the attack-reachable state set.

With the joint closed-loop dynamics xi+ = A_hat xi + B_hat (w, dbar), the
stealthy-attack budget dbar'dbar <= alpha, and the truncated process noise
w' Sigma_w^{-1} w <= w_bar, a quadratic invariant-set argument turns the
containment condition into a linear matrix inequality in the shape matrix
Q_xi and two input-splitting scalars a1, a2, for each fixed decay constant
a in (0, 1).  Minimizing trace over the upper-left block and line-searching
a on a grid yields the reported bound.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .ambiguity import EllipsoidBoundarySampler, MomentAmbiguitySet, stream_rng
from .detector import tune_dr
from .matcore import InvalidInput, as_matrix, as_sym_matrix, inverse_spd, sqrt_psd
from .sdp import NumericalFailure, SdpBlock, SdpProblem, SdpStatus, solve as solve_sdp
from .system import JointSystem, LtiSystem, ResidualModel, joint_system

# Strictness floor keeping Q_xi invertible for containment checks.
Q_FLOOR = 1e-9
# Open-interval margin for the input-splitting scalars a1, a2 in [0, 1).
BOX_EPS = 1e-6
# Containment slack absorbing solver tolerances.
CONTAINS_TOL = 1e-6


class AllInfeasible(RuntimeError):
    """No grid point admitted a strictly feasible bounding program."""


@dataclass(frozen=True)
class Ellipsoid:
    """{x : x' Q^{-1} x <= 1} with positive definite shape matrix Q."""

    Q: np.ndarray

    def __post_init__(self):
        q = as_sym_matrix(self.Q, name="Q")
        inverse_spd(q)
        object.__setattr__(self, "Q", q)

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def margin(self, x) -> float | np.ndarray:
        """x' Q^{-1} x for one vector or a batch in the leading axes."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise InvalidInput(f"point has dimension {x.shape[-1]}, ellipsoid is {self.dim}-dimensional")
        solved = np.linalg.solve(self.Q, x[..., None])[..., 0]
        m = np.einsum("...i,...i->...", x, solved)
        return float(m) if m.ndim == 0 else m

    def boundary_points(self, count: int = 64) -> np.ndarray:
        """Boundary polyline x = Q^{1/2} (cos t, sin t); 2-D ellipsoids only."""
        if self.dim != 2:
            raise InvalidInput("boundary_points is defined for 2-D ellipsoids")
        theta = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
        circle = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return circle @ sqrt_psd(self.Q)


def contains(ellipsoid: Ellipsoid, x, *, tol: float = CONTAINS_TOL) -> tuple[bool, float]:
    """Whether x lies in the ellipsoid, and the margin x' Q^{-1} x."""
    m = float(ellipsoid.margin(np.asarray(x, dtype=float)))
    return m <= 1.0 + tol, m


class TradeoffPoint(NamedTuple):
    target_rate: float
    alpha: float
    w_bar: float
    trace_qx: float


@dataclass(frozen=True)
class GridPointDiagnostics:
    a: float
    status: SdpStatus
    trace_qx: float
    a1: float
    a2: float
    min_eig_slack: float
    duality_gap: float


@dataclass(frozen=True)
class ReachSetResult:
    Q_xi: np.ndarray
    Q_x: Ellipsoid
    a: float
    a1: float
    a2: float
    trace_Qx: float
    diagnostics: tuple[GridPointDiagnostics, ...]


def default_decay_grid() -> np.ndarray:
    """49 decay constants 0.02, 0.04, ..., 0.98 (endpoints excluded)."""
    return np.round(np.arange(1, 50) * 0.02, 10)


def noise_truncation(n: int, target_rate: float) -> float:
    """Truncation level w_bar with sup P(w' Sigma_w^{-1} w <= w_bar) = 1 - rate.

    Same distribution-free tail bound as the detector threshold, applied to
    the n-dimensional process noise: w_bar = n / rate.
    """
    if n < 1:
        raise InvalidInput("n must be a positive integer")
    if not 0 < target_rate <= 1:
        raise InvalidInput("target_rate must lie in (0, 1]")
    return n / float(target_rate)


def _sym_basis(d: int, i: int, j: int) -> np.ndarray:
    E = np.zeros((d, d))
    E[i, j] = 1.0
    E[j, i] = 1.0
    if i == j:
        E[i, i] = 1.0
    return E


def _tri_pairs(d: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(d) for j in range(i, d)]


def assemble_lmi(
    joint: JointSystem,
    Sigma_w,
    alpha: float,
    w_bar: float,
    a: float,
    *,
    q_floor: float = Q_FLOOR,
    box_eps: float = BOX_EPS,
) -> SdpProblem:
    """Bounding program for one decay constant, as an inequality-form SDP.

    Decision variables: the upper-triangular entries of Q_xi (row major)
    followed by a1 and a2.  Blocks: the containment LMI, Q_xi >= q_floor*I,
    and 1x1 boxes 0 <= a1, a2 <= 1 - box_eps with a1 + a2 >= a.  The
    objective picks out the trace of the upper-left (state) block.  The
    level normalization (1-a)/(2-a) is folded into the input-weight corner,
    so the solved Q_xi directly defines the invariant ellipsoid.
    """
    if not 0 < a < 1:
        raise InvalidInput("a must lie strictly inside (0, 1)")
    if not alpha > 0 or not w_bar > 0:
        raise InvalidInput("alpha and w_bar must be positive")
    n, p = joint.n, joint.p
    d = 2 * n
    a_hat = as_matrix(joint.A_hat, rows=d, cols=d, name="A_hat")
    b_hat = as_matrix(joint.B_hat, rows=d, cols=n + p, name="B_hat")
    sw_inv = inverse_spd(as_sym_matrix(Sigma_w, dim=n, name="Sigma_w"))

    pairs = _tri_pairs(d)
    nvars = len(pairs) + 2
    idx_a1, idx_a2 = nvars - 2, nvars - 1
    nin = n + p
    big = 2 * d + nin
    kappa = (1.0 - a) / (2.0 - a)

    w_input = np.zeros((nin, nin))
    w_input[:n, :n] = sw_inv / w_bar
    w_input[n:, n:] = np.eye(p) / alpha

    # Containment LMI block.
    f0 = np.zeros((big, big))
    f0[d:2 * d, 2 * d:] = b_hat
    f0[2 * d:, d:2 * d] = b_hat.T
    f0[2 * d:, 2 * d:] = kappa * w_input
    coeffs = np.zeros((nvars, big, big))
    for k, (i, j) in enumerate(pairs):
        E = _sym_basis(d, i, j)
        coeffs[k, :d, :d] = a * E
        coeffs[k, :d, d:2 * d] = E @ a_hat.T
        coeffs[k, d:2 * d, :d] = a_hat @ E
        coeffs[k, d:2 * d, d:2 * d] = E
    coeffs[idx_a1, 2 * d:2 * d + n, 2 * d:2 * d + n] = -kappa * sw_inv / w_bar
    coeffs[idx_a2, 2 * d + n:, 2 * d + n:] = -kappa * np.eye(p) / alpha
    lmi_block = SdpBlock(f0=f0, coeffs=coeffs)

    # Q_xi >= q_floor * I.
    q_coeffs = np.zeros((nvars, d, d))
    for k, (i, j) in enumerate(pairs):
        q_coeffs[k] = _sym_basis(d, i, j)
    q_block = SdpBlock(f0=-q_floor * np.eye(d), coeffs=q_coeffs)

    def scalar_block(constant, coeff_map):
        cs = np.zeros((nvars, 1, 1))
        for idx, val in coeff_map.items():
            cs[idx, 0, 0] = val
        return SdpBlock(f0=np.array([[constant]]), coeffs=cs)

    boxes = (
        scalar_block(0.0, {idx_a1: 1.0}),                      # a1 >= 0
        scalar_block(0.0, {idx_a2: 1.0}),                      # a2 >= 0
        scalar_block(1.0 - box_eps, {idx_a1: -1.0}),           # a1 <= 1 - eps
        scalar_block(1.0 - box_eps, {idx_a2: -1.0}),           # a2 <= 1 - eps
        scalar_block(-a, {idx_a1: 1.0, idx_a2: 1.0}),          # a1 + a2 >= a
    )

    c = np.zeros(nvars)
    for k, (i, j) in enumerate(pairs):
        if i == j and i < n:
            c[k] = 1.0
    return SdpProblem(c=c, blocks=(lmi_block, q_block) + boxes)


def _q_from_solution(x: np.ndarray, d: int) -> np.ndarray:
    Q = np.zeros((d, d))
    for k, (i, j) in enumerate(_tri_pairs(d)):
        Q[i, j] = x[k]
        Q[j, i] = x[k]
    return Q


def spectral_radius(M) -> float:
    return float(np.abs(np.linalg.eigvals(np.asarray(M, dtype=float))).max())


def min_trace_ellipsoid(
    joint: JointSystem,
    Sigma_w,
    alpha: float,
    w_bar: float,
    grid=None,
    *,
    threads: int = 1,
    sdp_tol: float = 1e-7,
) -> ReachSetResult:
    """Best outer ellipsoid over a grid of decay constants.

    Solves one SDP per grid point (concurrently when threads > 1; the
    min-by-trace reduction is deterministic regardless of completion
    order) and returns the feasible solution of smallest state-block
    trace.  Raises AllInfeasible when the joint dynamics are unstable or
    every grid point fails.
    """
    grid = default_decay_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InvalidInput("grid must be nonempty")
    if np.any(grid <= 0.0) or np.any(grid >= 1.0):
        raise InvalidInput("grid values must lie strictly inside (0, 1)")
    rho = spectral_radius(joint.A_hat)
    if rho >= 1.0:
        raise AllInfeasible(f"joint dynamics are unstable (spectral radius {rho:.4f}); no decay constant works")

    d = 2 * joint.n
    # Necessary condition from the LMI's top-left principal submatrix:
    # a P >= A_hat' P A_hat for some P > 0 forces a >= rho(A_hat)^2, so
    # smaller grid points are infeasible without solving.
    rho_sq = rho * rho

    def solve_one(a: float) -> tuple[GridPointDiagnostics, np.ndarray | None]:
        if a <= rho_sq:
            diag = GridPointDiagnostics(a=a, status=SdpStatus.INFEASIBLE, trace_qx=np.nan,
                                        a1=np.nan, a2=np.nan, min_eig_slack=np.nan, duality_gap=np.nan)
            return diag, None
        prob = assemble_lmi(joint, Sigma_w, alpha, w_bar, a)
        try:
            sol = solve_sdp(prob, tol=sdp_tol)
        except NumericalFailure:
            diag = GridPointDiagnostics(a=a, status=SdpStatus.NUMERICAL_FAILURE, trace_qx=np.nan,
                                        a1=np.nan, a2=np.nan, min_eig_slack=np.nan, duality_gap=np.nan)
            return diag, None
        ok = sol.status is SdpStatus.OPTIMAL
        diag = GridPointDiagnostics(
            a=a,
            status=sol.status,
            trace_qx=float(sol.objective) if ok else np.nan,
            a1=float(sol.x[-2]) if ok else np.nan,
            a2=float(sol.x[-1]) if ok else np.nan,
            min_eig_slack=float(sol.min_eig_slack),
            duality_gap=float(sol.duality_gap_estimate),
        )
        return diag, sol.x if ok else None

    a_values = [float(a) for a in grid]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(solve_one, a_values))
    else:
        outcomes = [solve_one(a) for a in a_values]

    diagnostics = tuple(diag for diag, _ in outcomes)
    feasible = [(diag, x) for diag, x in outcomes if x is not None]
    if not feasible:
        raise AllInfeasible("every grid point was infeasible; enlarge the grid or check stability margins")

    best_diag, best_x = min(feasible, key=lambda item: (item[0].trace_qx, item[0].a))
    Q_xi = _q_from_solution(best_x, d)
    return ReachSetResult(
        Q_xi=Q_xi,
        Q_x=Ellipsoid(Q_xi[:joint.n, :joint.n]),
        a=best_diag.a,
        a1=best_diag.a1,
        a2=best_diag.a2,
        trace_Qx=best_diag.trace_qx,
        diagnostics=diagnostics,
    )


def trace_tradeoff_sweep(
    sys: LtiSystem,
    rm: ResidualModel,
    rates,
    *,
    grid=None,
    threads: int = 1,
) -> list[TradeoffPoint]:
    """Bound size versus target false-alarm rate under robust tuning.

    For each rate the detector threshold and the noise truncation follow
    the same distribution-free tail bound, so smaller target rates mean
    larger admissible inputs and a larger certified bound.
    """
    rates = [float(r) for r in rates]
    if not rates:
        raise InvalidInput("rates must be nonempty")
    for r in rates:
        if not 0 < r <= 1:
            raise InvalidInput("rates must lie in (0, 1]")
    joint = joint_system(sys, rm)
    points = []
    for r in rates:
        alpha = tune_dr(sys.p, r)
        w_bar = noise_truncation(sys.n, r)
        result = min_trace_ellipsoid(joint, sys.Sigma_w, alpha, w_bar, grid=grid, threads=threads)
        points.append(TradeoffPoint(target_rate=r, alpha=alpha, w_bar=w_bar, trace_qx=result.trace_Qx))
    return points


def reachable_cloud(
    joint: JointSystem,
    Sigma_w,
    alpha: float,
    w_bar: float,
    *,
    trajectories: int,
    horizon: int,
    seed: int,
    strategy: str = "extremal",
    Q_hint: np.ndarray | None = None,
) -> np.ndarray:
    """States visited by batches of stealthy-attack trajectories.

    All trajectories start at xi = 0 and are driven by extremal inputs:
    w uniform on the shell w' Sigma_w^{-1} w = w_bar and dbar on the sphere
    of radius sqrt(alpha) ("extremal"), or dbar greedily aligned to grow
    the joint state ("greedy").  Returns the visited x-parts stacked as a
    (trajectories * horizon, n) array.  Deterministic given seed.
    """
    if strategy not in ("extremal", "greedy"):
        raise InvalidInput("strategy must be 'extremal' or 'greedy'")
    if trajectories < 1 or horizon < 1:
        raise InvalidInput("trajectories and horizon must be >= 1")
    n, p = joint.n, joint.p
    d = 2 * n
    sw = as_sym_matrix(Sigma_w, dim=n, name="Sigma_w")
    w_sampler = EllipsoidBoundarySampler(
        MomentAmbiguitySet(n, sw), seed=seed, stream=0, radius=float(np.sqrt(w_bar))
    )
    rng = stream_rng(seed, 1)
    gain_w = joint.B_hat[:, :n]
    gain_d = joint.B_hat[:, n:]
    root_alpha = float(np.sqrt(alpha))

    if strategy == "greedy":
        weight = inverse_spd(Q_hint) if Q_hint is not None else np.eye(d)
        quad = gain_d.T @ weight @ gain_d
        _, eigvecs = np.linalg.eigh(0.5 * (quad + quad.T))

    xi = np.zeros((trajectories, d))
    out = np.empty((horizon, trajectories, n))
    for t in range(horizon):
        w = w_sampler.sample(trajectories)
        if strategy == "extremal":
            g = rng.standard_normal((trajectories, p))
            dbar = root_alpha * g / np.linalg.norm(g, axis=1, keepdims=True)
        else:
            base = xi @ joint.A_hat.T
            lin = base @ weight @ gain_d
            norms = np.linalg.norm(lin, axis=1, keepdims=True)
            lin = np.divide(lin, norms, out=np.zeros_like(lin), where=norms > 1e-30)
            cands = [lin] + [np.tile(eigvecs[:, k], (trajectories, 1)) for k in range(p)]
            best_val = np.full(trajectories, -np.inf)
            dbar = np.zeros((trajectories, p))
            for cand in cands:
                for sign in (1.0, -1.0):
                    step = base + root_alpha * (sign * cand) @ gain_d.T
                    val = np.einsum("ij,jk,ik->i", step, weight, step)
                    better = val > best_val
                    best_val = np.where(better, val, best_val)
                    dbar[better] = (root_alpha * sign) * cand[better]
        xi = xi @ joint.A_hat.T + w @ gain_w.T + dbar @ gain_d.T
        out[t] = xi[:, :n]
    return out.reshape(-1, n)


def lyapunov_certificate_gap(
    result: ReachSetResult,
    joint: JointSystem,
    Sigma_w,
    alpha: float,
    w_bar: float,
    *,
    samples: int = 1_000_000,
    seed: int = 0,
) -> float:
    """Largest sampled violation of the decrease inequality at the optimum.

    Restates the solved LMI as the scalar inequality
    V(xi+) - a V(xi) - (1-a1)/w_bar * w' Sigma_w^{-1} w
                    - (1-a2)/alpha * dbar'dbar <= 0
    with V(xi) = xi' Ptilde xi and Ptilde = (2-a)/(1-a) * Q_xi^{-1}, and
    evaluates it on unit-norm random input/state samples.  Returns the
    maximum value scaled by (1 + ||M||_F) of the underlying quadratic form;
    a nonpositive (or tiny positive) return certifies the bound without
    trusting solver internals.
    """
    n, p = joint.n, joint.p
    d = 2 * n
    a = result.a
    p_tilde = (2.0 - a) / (1.0 - a) * inverse_spd(result.Q_xi)
    sw_inv = inverse_spd(as_sym_matrix(Sigma_w, dim=n, name="Sigma_w"))

    tmap = np.hstack([joint.A_hat, joint.B_hat])
    M = tmap.T @ p_tilde @ tmap
    M[:d, :d] -= a * p_tilde
    M[d:d + n, d:d + n] -= (1.0 - result.a1) / w_bar * sw_inv
    M[d + n:, d + n:] -= (1.0 - result.a2) / alpha * np.eye(p)
    M = 0.5 * (M + M.T)

    rng = stream_rng(seed, 0)
    scale = 1.0 + float(np.linalg.norm(M, "fro"))
    worst = -np.inf
    chunk = 100_000
    remaining = samples
    while remaining > 0:
        count = min(chunk, remaining)
        u = rng.standard_normal((count, M.shape[0]))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        vals = np.einsum("ij,jk,ik->i", u, M, u)
        worst = max(worst, float(vals.max()))
        remaining -= count
    return worst / scale
