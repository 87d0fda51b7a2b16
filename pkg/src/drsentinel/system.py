"""Plant, observer and closed-loop joint models plus trajectory simulation.

The model is the standard output-feedback loop

    x_{t+1}    = A x_t + B u_t + w_t
    y_t        = C x_t + v_t            (received as y_t + delta_t under attack)
    u_t        = K xhat_t
    xhat_{t+1} = A xhat_t + B u_t + L (y_received - C xhat_t)

with zero-mean noises of known covariance but otherwise unknown
distribution.  The estimation error e = x - xhat then satisfies
e_{t+1} = (A - LC) e_t + w_t - L v_t - L delta_t, and the innovation
r = y_received - C xhat has steady-state covariance C P C' + Sigma_v.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import attack as _attack
from .ambiguity import NoiseSampler, stream_rng
from .matcore import InvalidInput, as_matrix, as_sym_matrix, inverse_spd, sqrt_psd

DARE_TOL = 1e-14
DARE_MAX_ITER = 10_000


class NoSteadyState(RuntimeError):
    """The covariance iteration failed to converge."""


@dataclass(frozen=True)
class LtiSystem:
    """Discrete-time LTI plant with state feedback and a fixed observer gain.

    `K` acts on the state estimate, `L` is the observer gain (use
    `solve_dare` to design a steady-state Kalman gain when none is given
    by the application), and Sigma_w / Sigma_v are the exact second
    moments of the process and sensor noise.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    K: np.ndarray
    L: np.ndarray
    Sigma_w: np.ndarray
    Sigma_v: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, name="A")
        n = A.shape[0]
        if A.shape[1] != n:
            raise InvalidInput("A must be square")
        B = as_matrix(self.B, rows=n, name="B")
        m = B.shape[1]
        C = as_matrix(self.C, cols=n, name="C")
        p = C.shape[0]
        K = as_matrix(self.K, rows=m, cols=n, name="K")
        L = as_matrix(self.L, rows=n, cols=p, name="L")
        Sw = as_sym_matrix(self.Sigma_w, dim=n, name="Sigma_w")
        Sv = as_sym_matrix(self.Sigma_v, dim=p, name="Sigma_v")
        inverse_spd(Sw)
        inverse_spd(Sv)
        for name, value in (("A", A), ("B", B), ("C", C), ("K", K), ("L", L), ("Sigma_w", Sw), ("Sigma_v", Sv)):
            object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class ResidualModel:
    """Steady-state innovation model: error covariance and residual covariance forms."""

    P: np.ndarray
    Sigma_r: np.ndarray
    Sigma_r_inv: np.ndarray
    Sigma_r_sqrt: np.ndarray


@dataclass(frozen=True)
class JointSystem:
    """Stacked dynamics of (x, e) driven by (w, delta_bar) under residual-shaping attacks.

    A_hat = [[A + BK, -BK], [0, A]] and B_hat = [[I, 0], [I, -L Sigma_r^{1/2}]].
    """

    A_hat: np.ndarray
    B_hat: np.ndarray
    n: int
    p: int


def solve_dare(A, C, Sigma_w, Sigma_v, *, tol: float = DARE_TOL, max_iter: int = DARE_MAX_ITER) -> tuple[np.ndarray, np.ndarray]:
    """Steady-state predictor covariance P and observer gain L.

    Iterates P <- A P A' - A P C' (C P C' + Sigma_v)^{-1} C P A' + Sigma_w
    from P_0 = Sigma_w until the Frobenius increment falls below
    tol * (1 + ||P||_F), then returns P and L = A P C' (C P C' + Sigma_v)^{-1}.

    Raises NoSteadyState if `max_iter` iterations do not converge.
    """
    A = as_matrix(A, name="A")
    n = A.shape[0]
    if A.shape[1] != n:
        raise InvalidInput("A must be square")
    C = as_matrix(C, cols=n, name="C")
    Sw = as_sym_matrix(Sigma_w, dim=n, name="Sigma_w")
    Sv = as_sym_matrix(Sigma_v, dim=C.shape[0], name="Sigma_v")

    P = Sw.copy()
    for _ in range(max_iter):
        innov = C @ P @ C.T + Sv
        cross = A @ P @ C.T
        P_next = A @ P @ A.T - cross @ np.linalg.solve(innov, cross.T) + Sw
        P_next = 0.5 * (P_next + P_next.T)
        if np.linalg.norm(P_next - P, "fro") <= tol * (1.0 + np.linalg.norm(P, "fro")):
            P = P_next
            break
        P = P_next
    else:
        raise NoSteadyState(f"covariance iteration did not converge in {max_iter} iterations")

    innov = C @ P @ C.T + Sv
    L = np.linalg.solve(innov, (A @ P @ C.T).T).T
    return P, L


def steady_state_error_cov(A, C, L, Sigma_w, Sigma_v, *, tol: float = DARE_TOL, max_iter: int = DARE_MAX_ITER) -> np.ndarray:
    """Steady-state estimation-error covariance for a fixed observer gain.

    Fixed point of X <- (A - LC) X (A - LC)' + Sigma_w + L Sigma_v L'.
    Coincides with the `solve_dare` solution when L is the gain it returns.
    """
    A = as_matrix(A, name="A")
    n = A.shape[0]
    C = as_matrix(C, cols=n, name="C")
    L = as_matrix(L, rows=n, cols=C.shape[0], name="L")
    Sw = as_sym_matrix(Sigma_w, dim=n, name="Sigma_w")
    Sv = as_sym_matrix(Sigma_v, dim=C.shape[0], name="Sigma_v")

    F = A - L @ C
    Q = Sw + L @ Sv @ L.T
    X = Sw.copy()
    for _ in range(max_iter):
        X_next = F @ X @ F.T + Q
        X_next = 0.5 * (X_next + X_next.T)
        if not np.all(np.isfinite(X_next)) or np.abs(X_next).max() > 1e100:
            raise NoSteadyState("error covariance diverges; A - LC is not stable")
        if np.linalg.norm(X_next - X, "fro") <= tol * (1.0 + np.linalg.norm(X, "fro")):
            return X_next
        X = X_next
    raise NoSteadyState(f"error-covariance iteration did not converge in {max_iter} iterations")


def residual_model(sys: LtiSystem) -> ResidualModel:
    """Steady-state residual covariance and its inverse / square-root forms.

    P is the steady-state error covariance for the system's configured L,
    so Sigma_r = C P C' + Sigma_v is the true covariance of the attack-free
    residual and the distribution-free detector guarantee applies even when
    L is not the optimal gain.
    """
    P = steady_state_error_cov(sys.A, sys.C, sys.L, sys.Sigma_w, sys.Sigma_v)
    Sigma_r = as_sym_matrix(sys.C @ P @ sys.C.T + sys.Sigma_v, name="Sigma_r")
    return ResidualModel(
        P=P,
        Sigma_r=Sigma_r,
        Sigma_r_inv=inverse_spd(Sigma_r),
        Sigma_r_sqrt=sqrt_psd(Sigma_r),
    )


def joint_system(sys: LtiSystem, rm: ResidualModel) -> JointSystem:
    """Assemble the stacked (x, e) dynamics driven by (w, delta_bar)."""
    n, p = sys.n, sys.p
    eye_n = np.eye(n)
    A_hat = np.block([
        [sys.A + sys.B @ sys.K, -sys.B @ sys.K],
        [np.zeros((n, n)), sys.A],
    ])
    B_hat = np.block([
        [eye_n, np.zeros((n, p))],
        [eye_n, -sys.L @ rm.Sigma_r_sqrt],
    ])
    return JointSystem(A_hat=A_hat, B_hat=B_hat, n=n, p=p)


@dataclass(frozen=True)
class Trace:
    """Per-step record of one simulated trajectory (arrays of length horizon)."""

    x: np.ndarray
    e: np.ndarray
    r: np.ndarray
    z: np.ndarray
    alarms: np.ndarray
    w: np.ndarray
    v: np.ndarray
    delta: np.ndarray
    delta_bar: np.ndarray


def simulate(
    sys: LtiSystem,
    rm: ResidualModel,
    samplers: tuple[NoiseSampler | None, NoiseSampler | None] | None,
    attack_policy: _attack.AttackPolicy | None = None,
    *,
    horizon: int,
    seed: int,
    alarm_threshold: float | None = None,
) -> Trace:
    """Run one closed-loop trajectory from x_0 = xhat_0 = 0.

    `samplers` is (w_sampler, v_sampler); either entry (or the pair) may be
    None for noise-free runs.  Samplers are used as family specs: fresh
    streams are derived from `seed` (w on stream 0, v on stream 1, the
    attack on stream 2), so the trace is a pure function of the arguments.

    Alarm flags compare z_t against `alarm_threshold`; when omitted, the
    attack policy's budget is used, and without either no alarms are
    flagged.
    """
    if horizon < 1:
        raise InvalidInput("horizon must be >= 1")
    w_spec, v_spec = samplers if samplers is not None else (None, None)
    w_sampler = w_spec.with_stream(seed, 0) if w_spec is not None else None
    v_sampler = v_spec.with_stream(seed, 1) if v_spec is not None else None
    attack_rng = stream_rng(seed, 2)

    policy = attack_policy if attack_policy is not None else _attack.AttackPolicy.none()
    attacking = policy.kind is _attack.AttackKind.ZERO_ALARM
    if alarm_threshold is not None:
        threshold = float(alarm_threshold)
    elif attacking:
        threshold = policy.alpha
    else:
        threshold = np.inf

    n, p = sys.n, sys.p
    ws = w_sampler.sample(horizon) if w_sampler is not None else np.zeros((horizon, n))
    vs = v_sampler.sample(horizon) if v_sampler is not None else np.zeros((horizon, p))

    x = np.zeros(n)
    xhat = np.zeros(n)
    out_x = np.empty((horizon, n))
    out_e = np.empty((horizon, n))
    out_r = np.empty((horizon, p))
    out_z = np.empty(horizon)
    out_delta = np.zeros((horizon, p))
    out_dbar = np.zeros((horizon, p))

    for t in range(horizon):
        e = x - xhat
        w_t, v_t = ws[t], vs[t]
        if attacking:
            dbar = _attack.budget_direction(policy, attack_rng, p, e_t=e, x_t=x)
            delta = -(sys.C @ e) - v_t + rm.Sigma_r_sqrt @ dbar
            out_dbar[t] = dbar
            out_delta[t] = delta
        else:
            delta = np.zeros(p)
        r = sys.C @ e + v_t + delta
        out_x[t] = x
        out_e[t] = e
        out_r[t] = r
        out_z[t] = r @ rm.Sigma_r_inv @ r
        u = sys.K @ xhat
        x = sys.A @ x + sys.B @ u + w_t
        xhat = sys.A @ xhat + sys.B @ u + sys.L @ r

    return Trace(
        x=out_x,
        e=out_e,
        r=out_r,
        z=out_z,
        alarms=out_z > threshold,
        w=ws,
        v=vs,
        delta=out_delta,
        delta_bar=out_dbar,
    )
