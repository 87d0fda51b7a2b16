"""Moment-based ambiguity sets and samplers for their member distributions.

An ambiguity set here is the family of all zero-mean distributions sharing
one fixed covariance.  The samplers draw from concrete members of that
family (or, for the ellipsoid-shell sampler, from an extremal generator)
and are the noise sources used to stress-test detector tunings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import InvalidInput, as_sym_matrix, inverse_spd, sqrt_psd


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    # Philox is counter based: every (seed, stream) pair is an independent stream.
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


@dataclass(frozen=True)
class MomentAmbiguitySet:
    """All zero-mean distributions with the given positive definite covariance."""

    dim: int
    covariance: np.ndarray

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidInput("dim must be a positive integer")
        cov = as_sym_matrix(self.covariance, dim=self.dim, name="covariance")
        inverse_spd(cov)  # raises NotPd unless positive definite
        object.__setattr__(self, "covariance", cov)


def chebyshev_tail_bound(ambiguity_set: MomentAmbiguitySet, threshold: float) -> float:
    """Distribution-free bound on P(x' Sigma^{-1} x >= threshold) over the set.

    The bound is min(1, dim/threshold) and is attained, so tuning against
    it is tight in the worst case.
    """
    if not threshold > 0:
        raise InvalidInput("threshold must be positive")
    return min(1.0, ambiguity_set.dim / float(threshold))


class NoiseSampler:
    """Draws from one concrete distribution associated with an ambiguity set.

    A sampler owns a dedicated RNG stream identified by (seed, stream).
    `with_stream` rebinds the same distribution family to a fresh stream;
    simulations use it to derive independent noise sources from a single
    experiment seed, which keeps results a pure function of their inputs.
    Instances are cheap; do not share one across threads, spawn instead.
    """

    def __init__(self, target: MomentAmbiguitySet, seed: int, stream: int = 0):
        self.target = target
        self.seed = int(seed)
        self.stream = int(stream)
        self._rng = stream_rng(self.seed, self.stream)

    @property
    def dim(self) -> int:
        return self.target.dim

    @property
    def is_ambiguity_member(self) -> bool:
        """True when the sampled distribution has exactly the target moments."""
        return True

    def sample(self, count: int) -> np.ndarray:
        """Draw `count` vectors as a (count, dim) array, advancing the stream."""
        if count < 1:
            raise InvalidInput("count must be >= 1")
        return self._draw(self._rng, int(count))

    def _draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        raise NotImplementedError

    def _params(self) -> dict:
        return {}

    def with_stream(self, seed: int, stream: int):
        """Same distribution family bound to a fresh (seed, stream) pair."""
        return type(self)(self.target, seed=seed, stream=stream, **self._params())

    def spawn(self, stream: int):
        """Same family and seed, distinct independent stream."""
        return self.with_stream(self.seed, stream)


class GaussianSampler(NoiseSampler):
    """Zero-mean Gaussian with exactly the target covariance."""

    def __init__(self, target: MomentAmbiguitySet, seed: int, stream: int = 0):
        super().__init__(target, seed, stream)
        self._sqrt_cov = sqrt_psd(target.covariance)

    def _draw(self, rng, count):
        return rng.standard_normal((count, self.dim)) @ self._sqrt_cov


class StudentTSampler(NoiseSampler):
    """Multivariate Student's t with exactly the target covariance.

    Sampled as z * sqrt(nu / chi2_nu) with Gaussian z of covariance
    Sigma * (nu - 2) / nu, so the population covariance equals Sigma for
    any nu > 2 while the tails stay heavy.
    """

    def __init__(self, target: MomentAmbiguitySet, seed: int, stream: int = 0, *, nu: float):
        if not nu > 2:
            raise InvalidInput("nu must exceed 2, otherwise the covariance is undefined")
        super().__init__(target, seed, stream)
        self.nu = float(nu)
        self._sqrt_scale = sqrt_psd(target.covariance * (self.nu - 2.0) / self.nu)

    def _params(self):
        return {"nu": self.nu}

    def _draw(self, rng, count):
        z = rng.standard_normal((count, self.dim)) @ self._sqrt_scale
        g = rng.chisquare(self.nu, size=count)
        return z * np.sqrt(self.nu / g)[:, None]


class EllipsoidBoundarySampler(NoiseSampler):
    """Uniform on the shell {x : x' Sigma^{-1} x = radius^2}.

    An extremal-input generator (Gaussian direction, normalized, mapped
    through the symmetric square root).  It is a member of the ambiguity
    set only for radius = sqrt(dim), which makes the second moment match.
    """

    def __init__(self, target: MomentAmbiguitySet, seed: int, stream: int = 0, *, radius: float):
        if not radius > 0:
            raise InvalidInput("radius must be positive")
        super().__init__(target, seed, stream)
        self.radius = float(radius)
        self._sqrt_cov = sqrt_psd(target.covariance)

    def _params(self):
        return {"radius": self.radius}

    @property
    def is_ambiguity_member(self) -> bool:
        root_dim = float(np.sqrt(self.dim))
        return abs(self.radius - root_dim) <= 1e-12 * root_dim

    def _draw(self, rng, count):
        g = rng.standard_normal((count, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return self.radius * (g @ self._sqrt_cov)
