"""Residual-shaping sensor attacks that keep the detector silent.

The attacker cancels the natural residual and replaces it with a designed
one whose distance measure never exceeds the detector threshold, so no
alarms are raised while the injected signal drives the plant.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .matcore import InvalidInput, inverse_spd

if TYPE_CHECKING:  # pragma: no cover
    from .system import JointSystem, LtiSystem, ResidualModel

# Budget directions are pulled strictly inside the sphere so floating-point
# round-off in the residual cancellation can never push z_t above alpha.
_BOUNDARY_BACKOFF = 1.0 - 1e-12


class AttackKind(enum.Enum):
    NONE = "none"
    ZERO_ALARM = "zero_alarm"


@dataclass(frozen=True)
class FixedUnit:
    """Constant budget direction; `direction` must have norm at most 1."""

    direction: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.direction, dtype=float))
        if d.ndim != 1 or not np.all(np.isfinite(d)):
            raise InvalidInput("direction must be a finite vector")
        if np.linalg.norm(d) > 1.0 + 1e-12:
            raise InvalidInput("direction must have norm <= 1")
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class UniformSphere:
    """Fresh direction uniform on the unit sphere at every step."""


@dataclass(frozen=True)
class GreedyAligned:
    """Direction chosen to maximize the one-step growth of the joint state.

    `joint` is the stacked closed-loop model; `Q_hint`, when given, is a
    shape matrix whose inverse weights the one-step objective.
    """

    joint: "JointSystem"
    Q_hint: np.ndarray | None = None


@dataclass(frozen=True)
class AttackPolicy:
    """What the attacker injects: nothing, or a zero-alarm budget spender."""

    kind: AttackKind
    alpha: float = 1.0
    direction_strategy: object = field(default_factory=UniformSphere)

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidInput("alpha must be positive")

    @staticmethod
    def none() -> "AttackPolicy":
        return AttackPolicy(kind=AttackKind.NONE)

    @staticmethod
    def zero_alarm(alpha: float, direction_strategy=None) -> "AttackPolicy":
        return AttackPolicy(
            kind=AttackKind.ZERO_ALARM,
            alpha=alpha,
            direction_strategy=direction_strategy if direction_strategy is not None else UniformSphere(),
        )


def greedy_direction(joint: "JointSystem", Q_hint: np.ndarray | None, state: np.ndarray, *, radius: float = 1.0) -> np.ndarray:
    """Unit direction maximizing the one-step weighted norm of the joint state.

    Candidates are the linear-response direction plus the eigenvectors of
    the quadratic-response matrix, each tried with both signs; the best
    one-step objective wins.  With a zero attack-gain block the objective
    is flat and the first basis vector is returned.
    """
    a_hat = joint.A_hat
    gain = joint.B_hat[:, joint.n:]
    p = gain.shape[1]
    weight = inverse_spd(Q_hint) if Q_hint is not None else np.eye(a_hat.shape[0])
    base = a_hat @ np.asarray(state, dtype=float)

    candidates = []
    lin = gain.T @ (weight @ base)
    lin_norm = np.linalg.norm(lin)
    if lin_norm > 1e-30:
        candidates.append(lin / lin_norm)
    quad = gain.T @ weight @ gain
    _, vecs = np.linalg.eigh(0.5 * (quad + quad.T))
    candidates.extend(vecs[:, k] for k in range(p))
    if not candidates:
        candidates.append(np.eye(p)[0])

    def objective(d):
        step = base + radius * (gain @ d)
        return float(step @ weight @ step)

    best, best_val = None, -np.inf
    for cand in candidates:
        for sign in (1.0, -1.0):
            val = objective(sign * cand)
            if val > best_val:
                best, best_val = sign * cand, val
    return best


def budget_direction(policy: AttackPolicy, rng: np.random.Generator, p: int, *, e_t=None, x_t=None) -> np.ndarray:
    """The designed residual direction delta_bar with ||delta_bar||^2 <= alpha."""
    radius = np.sqrt(policy.alpha) * _BOUNDARY_BACKOFF
    strategy = policy.direction_strategy
    if isinstance(strategy, FixedUnit):
        return radius * strategy.direction
    if isinstance(strategy, UniformSphere):
        g = rng.standard_normal(p)
        return radius * g / np.linalg.norm(g)
    if isinstance(strategy, GreedyAligned):
        if x_t is None or e_t is None:
            raise InvalidInput("greedy strategy needs the full joint state (x_t, e_t)")
        xi = np.concatenate([np.asarray(x_t, float), np.asarray(e_t, float)])
        direction = greedy_direction(strategy.joint, strategy.Q_hint, xi, radius=radius)
        return radius * direction
    raise InvalidInput(f"unknown direction strategy {strategy!r}")


def attack_input(policy: AttackPolicy, e_t, v_t, sys: "LtiSystem", rm: "ResidualModel", rng: np.random.Generator, *, x_t=None) -> np.ndarray:
    """Sensor injection cancelling the natural residual and spending the budget.

    Returns delta_t = -C e_t - v_t + Sigma_r^{1/2} delta_bar_t, which makes
    the measured residual exactly Sigma_r^{1/2} delta_bar_t and the distance
    measure delta_bar' delta_bar <= alpha.  Assumes the strong threat model:
    the attacker reads e_t and v_t at every step.
    """
    p = sys.C.shape[0]
    if policy.kind is not AttackKind.ZERO_ALARM:
        return np.zeros(p)
    dbar = budget_direction(policy, rng, p, e_t=e_t, x_t=x_t)
    return -(sys.C @ np.asarray(e_t, float)) - np.asarray(v_t, float) + rm.Sigma_r_sqrt @ dbar
