import numpy as np
import pytest

from drsentinel import (
    InvalidInput,
    NotPd,
    NotPsd,
    as_sym_matrix,
    inverse_spd,
    sqrt_psd,
    sym_eig,
)


def test_sym_eig_identity():
    w, v = sym_eig(np.eye(2))
    assert np.allclose(w, [1.0, 1.0])
    assert np.allclose(v @ v.T, np.eye(2), atol=1e-12)


def test_sym_eig_diagonal_descending():
    w, v = sym_eig(np.diag([3.0, -1.0]))
    assert np.allclose(w, [3.0, -1.0])
    # eigenvectors of a diagonal matrix are signed unit coordinates
    for col in v.T:
        assert np.isclose(np.abs(col).max(), 1.0, atol=1e-12)
        assert np.isclose(np.linalg.norm(col), 1.0, atol=1e-12)


def test_sym_eig_scaled_identity():
    w, _ = sym_eig(2.0 * np.eye(2))
    assert np.allclose(w, [2.0, 2.0])


def test_sym_eig_rejects_nonfinite_and_asymmetric():
    with pytest.raises(InvalidInput):
        sym_eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(InvalidInput):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_sym_eig_reconstruction_random():
    rng = np.random.default_rng(2)
    for _ in range(60):
        dim = int(rng.integers(1, 13))
        g = rng.standard_normal((dim, dim))
        m = 0.5 * (g + g.T)
        w, v = sym_eig(m)
        scale = 1.0 + np.linalg.norm(m, "fro")
        assert np.all(np.diff(w) <= 1e-12)
        assert np.linalg.norm((v * w) @ v.T - m, "fro") <= 1e-10 * scale
        assert np.abs(v.T @ v - np.eye(dim)).max() <= 1e-10


def test_sqrt_psd_identity_and_diag():
    assert np.allclose(sqrt_psd(np.eye(2)), np.eye(2))
    assert np.allclose(sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_sqrt_psd_resquares_bench_residual_cov(bench_rm):
    s = sqrt_psd(bench_rm.Sigma_r)
    assert np.linalg.norm(s @ s - bench_rm.Sigma_r, "fro") <= 1e-9


def test_sqrt_psd_clamps_roundoff_but_rejects_indefinite():
    m = np.eye(2)
    m[1, 1] = -1e-14  # round-off scale: clamped to zero
    s = sqrt_psd(m)
    assert s[1, 1] >= 0.0
    with pytest.raises(NotPsd):
        sqrt_psd(np.diag([1.0, -1e-3]))


def test_inverse_spd_examples():
    assert np.allclose(inverse_spd(2.0 * np.eye(2)), 0.5 * np.eye(2))
    inv = inverse_spd(np.diag([0.045, 0.02]))
    assert np.allclose(np.diag(inv), [1.0 / 0.045, 50.0])


def test_inverse_spd_rejects_singular():
    with pytest.raises(NotPd):
        inverse_spd(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(NotPd):
        inverse_spd(np.zeros((2, 2)))


def test_sqrt_and_inverse_properties_random_spd():
    rng = np.random.default_rng(7)
    for _ in range(60):
        dim = int(rng.integers(1, 13))
        g = rng.standard_normal((dim, dim))
        m = g.T @ g + 1e-6 * np.eye(dim)
        s = sqrt_psd(m)
        assert np.linalg.norm(s @ s - m, "fro") <= 1e-9 * (1.0 + np.linalg.norm(m, "fro"))
        inv = inverse_spd(m)
        assert np.abs(inv @ m - np.eye(dim)).max() <= 1e-9 * np.linalg.cond(m)


def test_as_sym_matrix_symmetrizes_roundoff():
    m = np.array([[1.0, 1e-14], [0.0, 1.0]])
    out = as_sym_matrix(m)
    assert np.allclose(out, out.T)
