"""Quadratic residual monitor: distance measure, threshold tuners, alarm rates.

Two tunings are provided for a target false-alarm rate.  The chi-squared
tuning is exact when the residual is Gaussian; the distributionally robust
tuning guarantees the rate bound for every zero-mean distribution with the
modeled covariance, at the price of a larger threshold.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincinv

from .ambiguity import NoiseSampler
from .matcore import InvalidInput, as_sym_matrix, inverse_spd
from .system import LtiSystem, ResidualModel

# Steps discarded before counting alarms so the error dynamics reach the
# steady state the residual covariance describes.
BURN_IN_STEPS = 200


class Tuning(enum.Enum):
    CHI_SQUARED = "chi_squared"
    DISTRIBUTIONALLY_ROBUST = "distributionally_robust"


@dataclass(frozen=True)
class DetectorConfig:
    """Distance-measure weight, scalar threshold, and how the threshold was tuned."""

    Sigma_r_inv: np.ndarray
    alpha: float
    tuning: Tuning
    target_rate: float

    def __post_init__(self):
        w = as_sym_matrix(self.Sigma_r_inv, name="Sigma_r_inv")
        inverse_spd(w)
        object.__setattr__(self, "Sigma_r_inv", w)
        if not self.alpha > 0:
            raise InvalidInput("alpha must be positive")
        if not 0 < self.target_rate <= 1:
            raise InvalidInput("target_rate must lie in (0, 1]")


@dataclass(frozen=True)
class FalseAlarmEstimate:
    """Monte-Carlo alarm-rate estimate with its 95% binomial half-width."""

    rate: float
    trials: int
    ci95_halfwidth: float

    @staticmethod
    def from_counts(alarms: int, samples: int) -> "FalseAlarmEstimate":
        rate = alarms / samples
        return FalseAlarmEstimate(
            rate=rate,
            trials=samples,
            ci95_halfwidth=1.96 * float(np.sqrt(rate * (1.0 - rate) / samples)),
        )


def distance_measure(r, Sigma_r_inv) -> float | np.ndarray:
    """z = r' Sigma_r^{-1} r for a single vector or a batch in the leading axes."""
    weight = np.asarray(Sigma_r_inv, dtype=float)
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != weight.shape[0]:
        raise InvalidInput(f"residual has dimension {r.shape[-1]}, weight expects {weight.shape[0]}")
    z = np.einsum("...i,ij,...j->...", r, weight, r)
    return float(z) if z.ndim == 0 else z


def tune_chi_squared(p: int, target_rate: float) -> float:
    """Threshold with P(chi2_p > alpha) equal to the target rate.

    alpha = 2 * Pinv(1 - target_rate, p/2) where Pinv inverts the
    regularized lower incomplete gamma function.  Exact for Gaussian
    residuals, optimistic otherwise.
    """
    if p < 1:
        raise InvalidInput("p must be a positive integer")
    if not 0 < target_rate < 1:
        raise InvalidInput("target_rate must lie in (0, 1)")
    return float(2.0 * gammaincinv(0.5 * p, 1.0 - target_rate))


def tune_dr(p: int, target_rate: float) -> float:
    """Distribution-free threshold alpha = p / target_rate.

    For every zero-mean residual distribution with the modeled covariance,
    the false-alarm rate is at most the target; the bound is attained in
    the worst case, so no smaller threshold is distributionally robust.
    """
    if p < 1:
        raise InvalidInput("p must be a positive integer")
    if not 0 < target_rate <= 1:
        raise InvalidInput("target_rate must lie in (0, 1]")
    return p / float(target_rate)


def make_detector(rm: ResidualModel, tuning: Tuning, target_rate: float) -> DetectorConfig:
    """Build a DetectorConfig from a residual model and a tuning choice."""
    p = rm.Sigma_r.shape[0]
    if tuning is Tuning.CHI_SQUARED:
        alpha = tune_chi_squared(p, target_rate)
    elif tuning is Tuning.DISTRIBUTIONALLY_ROBUST:
        alpha = tune_dr(p, target_rate)
    else:
        raise InvalidInput(f"unknown tuning {tuning!r}")
    return DetectorConfig(Sigma_r_inv=rm.Sigma_r_inv, alpha=alpha, tuning=tuning, target_rate=target_rate)


def attack_free_distance_samples(
    sys: LtiSystem,
    rm: ResidualModel,
    sampler_v: NoiseSampler,
    sampler_w: NoiseSampler,
    *,
    trials: int,
    horizon: int,
    seed: int,
    burn_in: int = BURN_IN_STEPS,
) -> np.ndarray:
    """Steady-state attack-free z_t samples, vectorized across trials.

    Runs `trials` independent error trajectories for `horizon` steps,
    discards the first `burn_in` steps of each, and returns the remaining
    trials * (horizon - burn_in) distance-measure values.  Deterministic
    given `seed` (w on stream 0, v on stream 1).
    """
    if trials < 1 or horizon < 1:
        raise InvalidInput("trials and horizon must be >= 1")
    if horizon <= burn_in:
        raise InvalidInput(f"horizon must exceed the burn-in of {burn_in} steps")
    w_s = sampler_w.with_stream(seed, 0)
    v_s = sampler_v.with_stream(seed, 1)

    F = sys.A - sys.L @ sys.C
    e = np.zeros((trials, sys.n))
    chunks = []
    for t in range(horizon):
        w = w_s.sample(trials)
        v = v_s.sample(trials)
        if t >= burn_in:
            r = e @ sys.C.T + v
            chunks.append(distance_measure(r, rm.Sigma_r_inv))
        e = e @ F.T + w - v @ sys.L.T
    return np.concatenate(chunks)


def estimate_false_alarm_rate(
    sys: LtiSystem,
    rm: ResidualModel,
    config: DetectorConfig,
    sampler_v: NoiseSampler,
    sampler_w: NoiseSampler,
    trials: int,
    horizon: int,
    seed: int,
    *,
    burn_in: int = BURN_IN_STEPS,
) -> FalseAlarmEstimate:
    """Empirical per-step false-alarm rate of the detector, attack free.

    The rate is the fraction of steady-state time steps with z_t above the
    configured threshold, pooled over all trials.
    """
    if trials * horizon < 10_000:
        raise InvalidInput("trials * horizon must be at least 10000 for a usable estimate")
    z = attack_free_distance_samples(
        sys, rm, sampler_v, sampler_w, trials=trials, horizon=horizon, seed=seed, burn_in=burn_in
    )
    return FalseAlarmEstimate.from_counts(int(np.sum(z > config.alpha)), z.size)
