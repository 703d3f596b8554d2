import numpy as np
import pytest
from hypothesis import given, strategies as st

from lindqfi.errors import DimensionMismatch, NotRateOnly, ZeroRate
from lindqfi.linalg import SM, SZ
from lindqfi.model import DissipationModel, JumpBasis, correlator, propagate
from lindqfi.qfi import (connectivity, dissipation_kernel, drift_generator, eigenrate_flow,
                         eigenrate_precision_bound, kernel_from_amplitudes, optimal_rate, qfi_flow,
                         qfi_integrate, qgt_flow, rate_operator, sld_qfi, top_eigvec)
from lindqfi.scenarios.suites import dephasing_model, random_model, random_state

PLUS = np.array([1, 1]) / np.sqrt(2)


def test_dephasing_closed_form():
    q = qfi_integrate(dephasing_model(), PLUS, [0.5], 0.4)
    assert np.isclose(q.entries[0, 0], 0.4 / 0.5, rtol=1e-10)


def test_sld_below_collisional_for_dephasing():
    g, t = 0.5, 0.4
    q = qfi_integrate(dephasing_model(), PLUS, [g], t)
    # reduced-state QFI of a dephased |+>: r = exp(-2 g t)
    r = np.exp(-2 * g * t)
    sld = (2 * t * r) ** 2 / (1 - r * r)
    drho = np.array([[0, -t * r], [-t * r, 0]])
    assert np.isclose(sld_qfi(q.trajectory.final, [drho]).entries[0, 0], sld, rtol=1e-8)
    assert sld <= q.entries[0, 0]


def test_amplitude_damping_flow():
    m = DissipationModel(JumpBasis([SM]), 1, rates=lambda th: th, frame=lambda th: np.eye(1),
                         drates=lambda th, a: np.ones(1), dframe=lambda th, a: np.zeros((1, 1)))
    g, t = 0.8, 1.5
    q = qfi_integrate(m, np.array([1, 0]), [g], t, steps=400)
    # flow is p_excited(t) / gamma
    assert np.isclose(q.entries[0, 0], (1 - np.exp(-g * t)) / g ** 2, rtol=1e-8)


@given(st.integers(0, 2 ** 31))
def test_flow_is_psd_and_kernel_hermitian(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, ("rate-only", "rotating")[seed % 2], 3, 2, 2)
    th = rng.normal(scale=0.3, size=2)
    ks = dissipation_kernel(m, th)
    psi = random_state(rng, 3)
    c = correlator(np.outer(psi, psi.conj()), m.basis)
    f = qfi_flow(ks, c)
    assert np.linalg.eigvalsh(f)[0] > -1e-10
    assert np.allclose(4 * qgt_flow(ks, c).real, f)
    for a in range(2):
        for b in range(2):
            assert np.allclose(ks.blocks[a, b], ks.blocks[b, a].conj().T)


def test_flow_matches_eigenrate_specialization(rng):
    m = random_model(rng, "rate-only", 3, 3, 2)
    th = np.array([0.2, -0.1])
    psi = random_state(rng, 3)
    rho = np.outer(psi, psi.conj())
    f = qfi_flow(dissipation_kernel(m, th), correlator(rho, m.basis))
    assert np.allclose(f, eigenrate_flow(m, th, rho))


def test_eigenrate_bound_and_rate_only_guard(rng):
    m = random_model(rng, "rate-only", 3, 2, 1)
    q = qfi_integrate(m, random_state(rng, 3), [0.1], 1.0)
    assert q.entries[0, 0] <= eigenrate_precision_bound(m, [0.1], 1.0)[0] * (1 + 1e-8)
    with pytest.raises(NotRateOnly):
        eigenrate_flow(random_model(rng, "rotating", 2, 2, 1), [0.1], np.eye(2) / 2)


def test_zero_rate_guard():
    m = DissipationModel(JumpBasis([SZ]), 1, rates=lambda th: th ** 2, frame=lambda th: np.eye(1),
                         drates=lambda th, a: np.ones(1), dframe=lambda th, a: np.zeros((1, 1)))
    with pytest.raises(ZeroRate):
        eigenrate_precision_bound(m, [0.0], 1.0)


def test_kernel_shape_guard(rng):
    ks = kernel_from_amplitudes(rng.normal(size=(1, 2, 2)))
    with pytest.raises(DimensionMismatch):
        qfi_flow(ks, np.eye(3))


def test_connectivity():
    r = connectivity(np.array([[1, 0, 1e-14], [0, 2, 0], [1, 1, 1]]))
    assert r.row_connectivity == 3 and r.max_entry_norm == 2 and r.support_size == 5


def test_top_eigvec_deterministic_on_ties():
    rate, v = top_eigvec(np.diag([1.0, 3.0, 3.0]))
    assert rate == 3.0 and np.allclose(v, [0, 1, 0])


def test_optimal_rate_is_flow_maximum(rng):
    m = random_model(rng, "rate-only", 3, 2, 1)
    lam, psi = optimal_rate(m, [0.1])
    ks = dissipation_kernel(m, [0.1])
    f = qfi_flow(ks, correlator(np.outer(psi, psi.conj()), m.basis))
    assert np.isclose(f[0, 0], lam)
    a = rate_operator(m, [0.1])
    for _ in range(20):
        phi = random_state(rng, 3)
        assert np.vdot(phi, a @ phi).real <= lam + 1e-12


def test_drift_vanishes_for_rate_only_and_real_commuting(rng):
    assert np.linalg.norm(drift_generator(random_model(rng, "rate-only", 3, 2, 1), [0.1], 0)) < 1e-12
    assert np.linalg.norm(drift_generator(random_model(rng, "commuting-rotating", 3, 2, 1), [0.1], 0)) < 1e-10
    assert np.linalg.norm(drift_generator(random_model(rng, "rotating", 3, 2, 1), [0.1], 0)) > 1e-2


def test_sld_qfi_pure_state_limit():
    psi = lambda x: np.array([np.cos(x), np.sin(x)])
    rho = np.outer(psi(0.3), psi(0.3))
    d = np.array([-np.sin(0.3), np.cos(0.3)])
    drho = np.outer(d, psi(0.3)) + np.outer(psi(0.3), d)
    assert np.isclose(sld_qfi(rho, [drho]).entries[0, 0], 4.0)


def test_integrated_qfi_monotone_in_time(rng):
    m = random_model(rng, "rotating", 3, 2, 1)
    psi = random_state(rng, 3)
    vals = [qfi_integrate(m, psi, [0.1], t, steps=100).entries[0, 0] for t in (0.2, 0.5, 1.0)]
    assert vals[0] < vals[1] < vals[2]
    assert qfi_integrate(m, psi, [0.1], 0.0).entries[0, 0] == 0.0
    with pytest.raises(ValueError):
        qfi_integrate(m, psi, [0.1], 1.0, steps=7)


def test_connectivity_sweep():
    from lindqfi.qfi import connectivity_sweep
    m = np.array([[1.0, 1e-9, 0.0], [1e-9, 1.0, 0.0], [0.0, 0.0, 1.0]])
    sweep = connectivity_sweep(m)
    assert sweep[1e-12] == 2 and sweep[1e-8] == 1
