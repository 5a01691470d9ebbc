from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import expm, logm

from conftest import random_hermitian
from qmetro import linalg
from qmetro.errors import DimensionMismatch, NegativeEigenvalue, NotHermitian
from qmetro.states import bell_state, gen_hs_random, maximally_mixed, product_state


def test_eig_identity_and_sigma_z():
    assert np.allclose(linalg.hermitian_eig(np.eye(4)).eigenvalues, 1.0)
    assert np.allclose(linalg.hermitian_eig(linalg.SIGMA_Z).eigenvalues, [1, -1])


def test_eig_descending_and_reconstructs(rng):
    for _ in range(50):
        a = random_hermitian(rng)
        d = linalg.hermitian_eig(a)
        assert np.all(np.diff(d.eigenvalues) <= 0)
        assert np.abs(d.reconstruct() - a).max() < 1e-10
        v = d.eigenvectors
        assert np.abs(v.conj().T @ v - np.eye(4)).max() < 1e-12


def test_eig_rejects_non_hermitian_and_bad_shape():
    with pytest.raises(NotHermitian):
        linalg.hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(DimensionMismatch):
        linalg.hermitian_eig(np.eye(3))


def test_kron_examples():
    assert np.array_equal(linalg.kron(linalg.I2, linalg.I2), np.eye(4))
    assert np.array_equal(linalg.kron(linalg.SIGMA_Z, linalg.SIGMA_Z), np.diag([1, -1, -1, 1]))
    yy = linalg.kron(linalg.SIGMA_Y, linalg.SIGMA_Y)
    assert np.array_equal(yy, np.fliplr(np.diag([-1, 1, 1, -1])))


def test_partial_transpose_bell_spectrum_and_product_states(rng):
    ev = np.linalg.eigvalsh(linalg.partial_transpose_A(bell_state()))
    assert np.allclose(np.sort(ev), [-0.5, 0.5, 0.5, 0.5])
    ra = rng.normal(size=3)
    rb = rng.normal(size=3)
    ra /= 2 * np.linalg.norm(ra)
    rb /= 2 * np.linalg.norm(rb)
    rho = product_state(ra, rb)
    a = rho.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
    b = rho.reshape(2, 2, 2, 2).trace(axis1=0, axis2=2)
    assert np.allclose(linalg.partial_transpose_A(rho), np.kron(a.T, b))
    assert np.linalg.eigvalsh(linalg.partial_transpose_A(rho)).min() > -1e-12


def test_partial_transpose_matches_index_oracle(rng):
    rho = gen_hs_random(3)
    oracle = np.zeros_like(rho)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for m in range(2):
                    oracle[2 * i + j, 2 * k + m] = rho[2 * k + j, 2 * i + m]
    assert np.array_equal(linalg.partial_transpose_A(rho), oracle)
    assert np.array_equal(linalg.partial_transpose_A(linalg.partial_transpose_A(rho)), rho)


def test_trace_norm():
    assert linalg.trace_norm(gen_hs_random(1)) == pytest.approx(1.0, abs=1e-12)
    assert linalg.trace_norm(np.diag([0.5, 0.5, 0.5, -0.5])) == pytest.approx(2.0)
    assert linalg.trace_norm(linalg.partial_transpose_A(bell_state())) == pytest.approx(2.0)


def test_log2_examples():
    assert np.allclose(np.diag(linalg.matrix_log2_regularized(maximally_mixed())), -2.0)
    assert np.abs(linalg.matrix_log2_regularized(np.eye(4))).max() <= 2 * linalg.LOG_EPSILON


def test_log2_round_trip_against_scipy(rng):
    rho = gen_hs_random(11)
    lg = linalg.matrix_log2_regularized(rho)
    assert np.abs(expm(lg * np.log(2)) - rho).max() < 1e-8
    assert np.abs(lg - logm(rho) / np.log(2)).max() < 1e-8


def test_log2_rejects_negative_spectrum():
    with pytest.raises(NegativeEigenvalue):
        linalg.matrix_log2_regularized(np.diag([0.6, 0.6, -0.1, -0.1]))
