from __future__ import annotations

import itertools
import json

import numpy as np
import pytest

from qmetro import channels as ch
from qmetro.entanglement import concurrence, negativity
from qmetro.errors import RangeViolation
from qmetro.states import bell_state, gen_hs_random, maximally_mixed, product_state, purity, validate

GRID = np.linspace(0, 0.5, 11)
LOCAL = (ch.amplitude_damping, ch.phase_damping)


def two_qubit_kraus_oracle(rho, kraus):
    """Sum over all K_i (x) K_j, written out explicitly."""
    return sum(np.kron(a, b) @ rho @ np.kron(a, b).conj().T for a, b in itertools.product(kraus, repeat=2))


def test_kraus_completeness():
    for g in GRID:
        assert ch.kraus_completeness_residual(ch.amplitude_damping_kraus(g)) <= 1e-12
        assert ch.kraus_completeness_residual(ch.phase_damping_kraus(g)) <= 1e-12


def test_incomplete_kraus_set_rejected():
    with pytest.raises(RangeViolation):
        ch.apply_local(bell_state(), [np.eye(2) * 0.9], [np.eye(2)])


def test_zero_gamma_is_identity():
    rho = gen_hs_random(1)
    for f in ch.CHANNELS.values():
        assert np.array_equal(f(rho, 0.0), rho)


def test_gamma_ranges():
    rho = bell_state()
    for f in LOCAL:
        with pytest.raises(RangeViolation):
            f(rho, 0.6)
        with pytest.raises(RangeViolation):
            f(rho, -0.1)
    with pytest.raises(RangeViolation):
        ch.depolarizing(rho, 1.0)
    ch.depolarizing(rho, 0.75)
    with pytest.raises(RangeViolation):
        ch.ChannelSpec("amplitude_damping", 0.7)


def test_amplitude_damping_examples():
    ket11 = product_state((0, 0, -1), (0, 0, -1))
    assert np.allclose(np.diag(ch.amplitude_damping(ket11, 0.5)).real, 0.25)
    # |1><1| on A with |0><0| on B: populations (gamma, 0, 1 - gamma, 0) in the |ab> basis
    for g in GRID:
        out = ch.amplitude_damping(product_state((0, 0, -1), (0, 0, 1)), g)
        assert np.allclose(np.diag(out).real, [g, 0, 1 - g, 0], atol=1e-15)


def test_local_channels_match_explicit_kraus_products():
    for seed, g in zip(range(20), np.linspace(0.01, 0.5, 20)):
        rho = gen_hs_random(seed)
        assert np.abs(ch.amplitude_damping(rho, g) - two_qubit_kraus_oracle(rho, ch.amplitude_damping_kraus(g))).max() < 1e-14
        assert np.abs(ch.phase_damping(rho, g) - two_qubit_kraus_oracle(rho, ch.phase_damping_kraus(g))).max() < 1e-14


def test_phase_damping_examples():
    for g in GRID:
        out = ch.phase_damping(bell_state(), g)
        assert out[0, 3] == pytest.approx((1 - g) ** 2 / 2, abs=1e-15)
        assert np.array_equal(np.diag(out), np.diag(bell_state()))
    rho = gen_hs_random(3)
    out = ch.phase_damping(rho, 0.3)
    assert np.array_equal(np.diag(out), np.diag(rho))
    # single-qubit coherence of A (|00> <-> |10>) scales by 1 - gamma
    assert out[0, 2] == pytest.approx(0.7 * rho[0, 2], abs=1e-15)
    assert out[0, 3] == pytest.approx(0.49 * rho[0, 3], abs=1e-15)


def test_depolarizing_examples():
    assert purity(ch.depolarizing(bell_state(), 0.75)) == pytest.approx(0.296875, abs=1e-15)
    for g in np.linspace(0, 0.75, 16):
        assert concurrence(ch.depolarizing(bell_state(), g)) == pytest.approx(max(0.0, (3 * (1 - g) - 1) / 2), abs=1e-9)
    assert concurrence(ch.depolarizing(bell_state(), 0.2)) == pytest.approx(0.7, abs=1e-9)


def test_depolarizing_linearity():
    g = np.random.default_rng(4)
    o = g.normal(size=(4, 4)) + 1j * g.normal(size=(4, 4))
    o = o + o.conj().T
    rho = gen_hs_random(6)
    for gamma in np.linspace(0, 0.75, 7):
        lhs = np.trace(o @ ch.depolarizing(rho, gamma)).real
        rhs = (1 - gamma) * np.trace(o @ rho).real + gamma * np.trace(o @ maximally_mixed()).real
        assert lhs == pytest.approx(rhs, abs=1e-13)


def test_cptp_suite():
    g = np.random.default_rng(5)
    for seed in range(50):
        rho = gen_hs_random(seed)
        for kind, f in ch.CHANNELS.items():
            gamma = g.uniform(0, ch.GAMMA_MAX[kind])
            assert validate(f(rho, gamma), tol=1e-10) == []


def test_local_order_irrelevant():
    for seed, g in zip(range(10), np.linspace(0.05, 0.5, 10)):
        rho = gen_hs_random(seed)
        for kraus in (ch.amplitude_damping_kraus(g), ch.phase_damping_kraus(g)):
            ab = ch.apply_local(rho, kraus, kraus, "ab")
            ba = ch.apply_local(rho, kraus, kraus, "ba")
            assert np.abs(ab - ba).max() < 1e-15


def test_local_channels_never_increase_entanglement():
    g = np.random.default_rng(6)
    for seed in range(100):
        rho = gen_hs_random(seed)
        c0, n0 = concurrence(rho), negativity(rho)
        for f in LOCAL:
            out = f(rho, g.uniform(0, 0.5))
            assert concurrence(out) <= c0 + 1e-8
            assert negativity(out) <= n0 + 1e-8


def test_depolarizing_correction():
    assert ch.depolarizing_correction(0.3, 0.45, 0.3) == pytest.approx(0.3)
    assert ch.depolarizing_correction(0.42, 0.0, 0.1) == 0.42
    assert ch.depolarizing_correction(0.5 * 0.756 + 0.5 * 0.0, 0.5, 0.0) == pytest.approx(0.756)
    for g in np.linspace(0, 0.9, 10):
        p0, pinf = 0.61, 0.17
        assert ch.depolarizing_correction((1 - g) * p0 + g * pinf, g, pinf) == pytest.approx(p0, abs=1e-14)
    with pytest.raises(RangeViolation):
        ch.depolarizing_correction(0.5, 1.0, 0.0)


def test_sweep_rejects_bad_inputs():
    with pytest.raises(ValueError):
        ch.channel_sweep(1, 100, "depolarizing", [0, 0.1])
    with pytest.raises(ValueError):
        ch.channel_sweep(1, 300, "depolarizing", [0.1, 0.2])
    with pytest.raises(ValueError):
        ch.channel_sweep(1, 300, "depolarizing", [0, 0.2, 0.1])
    with pytest.raises(RangeViolation):
        ch.channel_sweep(1, 300, "phase_damping", [0, 0.6])
    with pytest.raises(ValueError):
        ch.channel_sweep(1, 300, "phase_damping", [0, 0.1], "ree")


def test_small_sweep_structure_and_worker_determinism():
    kw = dict(bootstrap_n=10, n_bins=6)
    a = ch.channel_sweep(11, 400, "depolarizing", [0, 0.05], "negativity", **kw)
    b = ch.channel_sweep(11, 400, "depolarizing", [0, 0.05], "negativity", workers=2, **kw)
    da, db = a.to_dict(), b.to_dict()
    assert json.dumps(da, sort_keys=True) == json.dumps(db, sort_keys=True)
    assert set(da) >= {"kind", "measure", "gammas", "params", "n_sample", "seed"}
    assert set(da["params"][0]) >= {"gamma", "A", "A_ci", "alpha", "alpha_ci", "B", "B_ci", "r2"}
    assert da["gammas"] == [0.0, 0.05]
    assert a.series("gamma").tolist() == [0.0, 0.05]
