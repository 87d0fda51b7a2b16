import numpy as np
import pytest
from scipy.stats import kurtosis

from drsentinel import (
    EllipsoidBoundarySampler,
    GaussianSampler,
    InvalidInput,
    MomentAmbiguitySet,
    NotPd,
    StudentTSampler,
    chebyshev_tail_bound,
)


def _assert_cov_matches(samples, target, n_se=3.0):
    # empirical standard error of each covariance entry from the product stream
    n = samples.shape[0]
    est = samples.T @ samples / n
    for i in range(target.shape[0]):
        for j in range(target.shape[1]):
            prods = samples[:, i] * samples[:, j]
            se = prods.std(ddof=1) / np.sqrt(n)
            assert abs(est[i, j] - target[i, j]) <= n_se * se, (i, j, est[i, j], target[i, j], se)


def test_gaussian_sampler_matches_covariance():
    amb = MomentAmbiguitySet(2, np.eye(2))
    x = GaussianSampler(amb, seed=11).sample(200_000)
    _assert_cov_matches(x, np.eye(2))
    assert abs(x.mean(axis=0)).max() <= 3.0 / np.sqrt(len(x))


def test_student_t_sampler_matches_covariance_with_heavy_tails():
    amb = MomentAmbiguitySet(2, 2.0 * np.eye(2))
    x = StudentTSampler(amb, seed=12, nu=5.0).sample(200_000)
    _assert_cov_matches(x, 2.0 * np.eye(2))
    for k in range(2):
        assert kurtosis(x[:, k], fisher=False) > 3.0


def test_single_draw_is_finite_vector():
    amb = MomentAmbiguitySet(3, np.eye(3))
    for sampler in (
        GaussianSampler(amb, seed=1),
        StudentTSampler(amb, seed=1, nu=3.5),
        EllipsoidBoundarySampler(amb, seed=1, radius=2.0),
    ):
        x = sampler.sample(1)
        assert x.shape == (1, 3)
        assert np.all(np.isfinite(x))


def test_student_t_rejects_undefined_covariance():
    amb = MomentAmbiguitySet(2, np.eye(2))
    with pytest.raises(InvalidInput):
        StudentTSampler(amb, seed=0, nu=2.0)


def test_ambiguity_set_requires_positive_definite_covariance():
    with pytest.raises(NotPd):
        MomentAmbiguitySet(2, np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_boundary_sampler_lies_on_shell_and_membership_flag():
    cov = np.array([[2.0, 0.3], [0.3, 1.0]])
    amb = MomentAmbiguitySet(2, cov)
    sampler = EllipsoidBoundarySampler(amb, seed=5, radius=3.0)
    x = sampler.sample(5_000)
    q = np.einsum("ij,jk,ik->i", x, np.linalg.inv(cov), x)
    assert np.allclose(q, 9.0, atol=1e-9)
    assert not sampler.is_ambiguity_member
    member = EllipsoidBoundarySampler(amb, seed=5, radius=np.sqrt(2.0))
    assert member.is_ambiguity_member
    _assert_cov_matches(member.sample(200_000), cov)


def test_chebyshev_tail_bound_values():
    assert chebyshev_tail_bound(MomentAmbiguitySet(2, np.eye(2)), 40.0) == pytest.approx(0.05)
    assert chebyshev_tail_bound(MomentAmbiguitySet(2, np.eye(2)), 2.0) == 1.0
    assert chebyshev_tail_bound(MomentAmbiguitySet(3, np.eye(3)), 60.0) == pytest.approx(0.05)
    with pytest.raises(InvalidInput):
        chebyshev_tail_bound(MomentAmbiguitySet(2, np.eye(2)), 0.0)


@pytest.mark.parametrize("threshold", [4.0, 10.0, 40.0])
def test_tail_bound_holds_for_member_samplers(threshold):
    cov = np.array([[1.5, -0.4], [-0.4, 0.8]])
    amb = MomentAmbiguitySet(2, cov)
    inv = np.linalg.inv(cov)
    n = 100_000
    bound = min(1.0, 2.0 / threshold)
    slack = 4.0 * np.sqrt(bound * (1.0 - bound) / n)
    samplers = [
        GaussianSampler(amb, seed=21),
        StudentTSampler(amb, seed=22, nu=3.0),
        StudentTSampler(amb, seed=23, nu=5.0),
        EllipsoidBoundarySampler(amb, seed=24, radius=np.sqrt(2.0)),
    ]
    for sampler in samplers:
        x = sampler.sample(n)
        rate = float(np.mean(np.einsum("ij,jk,ik->i", x, inv, x) >= threshold))
        assert rate <= bound + slack, (type(sampler).__name__, rate, bound)


def test_seed_determinism_and_stream_independence():
    amb = MomentAmbiguitySet(2, np.eye(2))
    a = StudentTSampler(amb, seed=99, nu=5.0).sample(1000)
    b = StudentTSampler(amb, seed=99, nu=5.0).sample(1000)
    assert np.array_equal(a, b)
    c = StudentTSampler(amb, seed=99, nu=5.0, stream=1).sample(1000)
    assert not np.array_equal(a, c)
    d = StudentTSampler(amb, seed=99, nu=5.0).spawn(1).sample(1000)
    assert np.array_equal(c, d)
    e = StudentTSampler(amb, seed=99, nu=5.0).with_stream(100, 0).sample(1000)
    assert not np.array_equal(a, e)
