import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gammainc

import drsentinel as ds
from drsentinel import Tuning


def test_distance_measure_examples():
    assert ds.distance_measure(np.zeros(2), np.eye(2)) == 0.0
    assert ds.distance_measure(np.array([3.0, 4.0]), np.eye(2)) == pytest.approx(25.0)
    assert ds.distance_measure(np.array([2.0, 0.0]), np.linalg.inv(2.0 * np.eye(2))) == pytest.approx(2.0)
    with pytest.raises(ds.InvalidInput):
        ds.distance_measure(np.zeros(3), np.eye(2))


def test_distance_measure_batched():
    rng = np.random.default_rng(0)
    w = np.array([[2.0, 0.3], [0.3, 1.0]])
    r = rng.standard_normal((100, 2))
    z = ds.distance_measure(r, w)
    assert z.shape == (100,)
    assert np.allclose(z, [row @ w @ row for row in r])


def test_tune_chi_squared_closed_form_two_outputs():
    # with two outputs the tail is exp(-alpha/2), so alpha = -2 ln(rate)
    assert ds.tune_chi_squared(2, 0.05) == pytest.approx(-2.0 * np.log(0.05), abs=1e-10)


def test_tune_chi_squared_boundary_rate():
    assert ds.tune_chi_squared(2, 1.0 - 1e-12) < 1e-6


def test_tune_chi_squared_single_output_quadrature_oracle():
    target = 0.3173105078629141  # two-sided standard normal beyond +-1
    alpha = ds.tune_chi_squared(1, target)
    assert alpha == pytest.approx(1.0, abs=1e-9)

    def chi1_pdf(x):
        return np.exp(-0.5 * x) / np.sqrt(2.0 * np.pi * x)

    tail, _ = quad(chi1_pdf, alpha, np.inf)
    assert tail == pytest.approx(target, abs=1e-8)


def test_tune_chi_squared_forward_inverse_property():
    for p in (1, 2, 3, 5, 10):
        for rate in (0.01, 0.05, 0.1, 0.25, 0.5):
            alpha = ds.tune_chi_squared(p, rate)
            assert gammainc(0.5 * p, 0.5 * alpha) == pytest.approx(1.0 - rate, abs=1e-10)


def test_tune_dr_examples():
    assert ds.tune_dr(2, 0.05) == 40.0
    assert ds.tune_dr(2, 1.0) == 2.0
    assert ds.tune_dr(5, 0.1) == 50.0


def test_tuner_input_validation():
    with pytest.raises(ds.InvalidInput):
        ds.tune_chi_squared(2, 0.0)
    with pytest.raises(ds.InvalidInput):
        ds.tune_chi_squared(2, 1.0)
    with pytest.raises(ds.InvalidInput):
        ds.tune_dr(2, 0.0)
    with pytest.raises(ds.InvalidInput):
        ds.tune_dr(2, 1.2)
    with pytest.raises(ds.InvalidInput):
        ds.tune_dr(0, 0.1)


def test_thresholds_monotone_and_ordered():
    rates = np.linspace(0.01, 0.5, 25)
    for p in range(1, 11):
        chi = np.array([ds.tune_chi_squared(p, r) for r in rates])
        dr = np.array([ds.tune_dr(p, r) for r in rates])
        assert np.all(np.diff(chi) < 0.0)
        assert np.all(np.diff(dr) < 0.0)
        assert np.all(dr >= chi)


def test_make_detector_carries_provenance(bench_rm):
    cfg = ds.make_detector(bench_rm, Tuning.DISTRIBUTIONALLY_ROBUST, 0.05)
    assert cfg.alpha == 40.0
    assert cfg.tuning is Tuning.DISTRIBUTIONALLY_ROBUST
    cfg2 = ds.make_detector(bench_rm, Tuning.CHI_SQUARED, 0.05)
    assert cfg2.alpha == pytest.approx(5.991464547, abs=1e-6)


def test_false_alarm_estimate_ci_formula():
    est = ds.FalseAlarmEstimate.from_counts(50, 1000)
    assert est.rate == pytest.approx(0.05)
    assert est.trials == 1000
    assert est.ci95_halfwidth == pytest.approx(1.96 * np.sqrt(0.05 * 0.95 / 1000))


def test_dr_guarantee_over_residual_ambiguity_members(bench_rm):
    # the distribution-free bound must hold for every member distribution
    amb = ds.MomentAmbiguitySet(2, bench_rm.Sigma_r)
    n = 100_000
    samplers = [
        ds.GaussianSampler(amb, seed=31),
        ds.StudentTSampler(amb, seed=32, nu=3.0),
        ds.StudentTSampler(amb, seed=33, nu=5.0),
        ds.StudentTSampler(amb, seed=34, nu=10.0),
        ds.EllipsoidBoundarySampler(amb, seed=35, radius=np.sqrt(2.0)),
    ]
    for rate in (0.05, 0.25):
        alpha = ds.tune_dr(2, rate)
        slack = 4.0 * np.sqrt(rate * (1.0 - rate) / n)
        for sampler in samplers:
            z = ds.distance_measure(sampler.sample(n), bench_rm.Sigma_r_inv)
            assert float(np.mean(z > alpha)) <= rate + slack


def test_estimate_false_alarm_rate_gaussian_chi_squared(bench, bench_rm):
    cfg = ds.make_detector(bench_rm, Tuning.CHI_SQUARED, 0.05)
    amb_w = ds.MomentAmbiguitySet(2, bench.Sigma_w)
    amb_v = ds.MomentAmbiguitySet(2, bench.Sigma_v)
    est = ds.estimate_false_alarm_rate(
        bench, bench_rm, cfg,
        ds.GaussianSampler(amb_v, seed=0), ds.GaussianSampler(amb_w, seed=0),
        200, 300, 1234,
    )
    assert est.trials == 200 * 100
    band = max(0.005, 4.0 * np.sqrt(0.05 * 0.95 / est.trials))
    assert abs(est.rate - 0.05) <= band


def test_estimate_false_alarm_rate_gaussian_dr_nearly_zero(bench, bench_rm):
    cfg = ds.make_detector(bench_rm, Tuning.DISTRIBUTIONALLY_ROBUST, 0.05)
    amb_w = ds.MomentAmbiguitySet(2, bench.Sigma_w)
    amb_v = ds.MomentAmbiguitySet(2, bench.Sigma_v)
    est = ds.estimate_false_alarm_rate(
        bench, bench_rm, cfg,
        ds.GaussianSampler(amb_v, seed=0), ds.GaussianSampler(amb_w, seed=0),
        200, 300, 99,
    )
    assert est.rate <= 0.002


def test_estimate_false_alarm_rate_student_t_dr_guarantee(bench, bench_rm):
    cfg = ds.make_detector(bench_rm, Tuning.DISTRIBUTIONALLY_ROBUST, 0.05)
    amb_w = ds.MomentAmbiguitySet(2, bench.Sigma_w)
    amb_v = ds.MomentAmbiguitySet(2, bench.Sigma_v)
    est = ds.estimate_false_alarm_rate(
        bench, bench_rm, cfg,
        ds.StudentTSampler(amb_v, seed=0, nu=5.0), ds.StudentTSampler(amb_w, seed=0, nu=5.0),
        200, 300, 7,
    )
    assert est.rate <= 0.05


def test_estimate_false_alarm_rate_requires_enough_samples(bench, bench_rm):
    cfg = ds.make_detector(bench_rm, Tuning.CHI_SQUARED, 0.05)
    amb = ds.MomentAmbiguitySet(2, np.eye(2))
    with pytest.raises(ds.InvalidInput):
        ds.estimate_false_alarm_rate(
            bench, bench_rm, cfg,
            ds.GaussianSampler(amb, seed=0), ds.GaussianSampler(amb, seed=0),
            10, 300, 0,
        )
