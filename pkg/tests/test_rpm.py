import numpy as np
import pytest
from hypothesis import given, strategies as st

from lindqfi.errors import DarkChannel, NotDistinguishable, NotShortTime
from lindqfi.linalg import SX, SZ
from lindqfi.rpm import (CountRecord, certify_distinguishable, exact_probs, make_design, mle_rates,
                         optimal_design, poisson_means, rpm_fisher, sample_bins, sample_count_trials,
                         sample_counts, short_time_probs)
from lindqfi.qfi import dissipation_kernel, qfi_flow, rate_operator
from lindqfi.scenarios.pauli import bell_design, pauli_model
from lindqfi.scenarios.spin import collective_spin_model


def test_bell_design_certifies_and_fisher_closed_form():
    model, design = bell_design(1, [1.0, 2.0, 3.0])
    assert design.certified
    f = rpm_fisher(design, model, model.meta["theta"], 100.0).entries
    assert np.allclose(f, 100.0 * np.diag([1.0, 0.5, 1 / 3]), atol=1e-12)


def test_rpm_fisher_equals_qfi_flow_times_T():
    model, design = bell_design(1, [1.0, 2.0, 3.0])
    th = model.meta["theta"]
    rho = np.outer(design.probe, design.probe.conj())
    flow = qfi_flow(dissipation_kernel(model, th), model.basis.correlator(rho))
    assert np.allclose(rpm_fisher(design, model, th, 7.0).entries, 7.0 * flow)


def test_not_distinguishable_reports_offenders():
    plus = np.array([1, 1]) / np.sqrt(2)
    with pytest.raises(NotDistinguishable) as e:
        make_design(plus, np.array([SX, SZ]))
    assert e.value.offending
    cert = certify_distinguishable(np.array([1, 0]), np.array([SX]))
    assert cert.ok


def test_short_time_probs_match_exact():
    model, design = bell_design(1, [1.0, 2.0, 3.0])
    th = model.meta["theta"]
    dt = 1e-4
    short = short_time_probs(design, model, th, dt)
    exact = exact_probs(design, model, th, dt)
    assert np.allclose(short, exact[:-1], rtol=0, atol=50 * dt ** 2)
    with pytest.raises(NotShortTime):
        short_time_probs(design, model, th, 1.0)


@given(st.integers(0, 10 ** 6), st.lists(st.integers(0, 10 ** 6), min_size=1, max_size=6),
       st.floats(0.1, 1e4))
def test_count_record_round_trip(seed, counts, T):
    rec = CountRecord(np.array(counts), T, seed)
    back = CountRecord.from_text(rec.to_text())
    assert np.array_equal(back.counts, rec.counts) and back.T == rec.T and back.seed == seed


def test_count_record_bins_and_errors():
    rec = CountRecord([3, 4], 1.0, 0, 100, 93)
    back = CountRecord.from_text(rec.to_text())
    assert back.n_bins == 100 and back.no_jump == 93
    for bad in ("", "2 1.0 0\n1 3\n", "2 1.0 0\n1 3\n3 4\n", "2 1.0\n", "1 1.0 0\n1 2 3\n"):
        with pytest.raises(ValueError):
            CountRecord.from_text(bad)
    with pytest.raises(ValueError):
        CountRecord([-1], 1.0, 0)


def test_sampling_is_deterministic():
    model, design = bell_design(1, [1.0, 2.0, 3.0])
    th = model.meta["theta"]
    a = sample_count_trials(poisson_means(design, model, th, 10.0), 9000, 42)
    b = sample_count_trials(poisson_means(design, model, th, 10.0), 9000, 42)
    assert np.array_equal(a, b)
    assert np.array_equal(sample_counts(design, model, th, 10.0, 3).counts,
                          sample_counts(design, model, th, 10.0, 3).counts)
    rec = sample_bins(design, model, th, 10.0, 1e-3, 5)
    assert rec.counts.sum() + rec.no_jump == rec.n_bins == 10000


def test_mle_unbiased_and_dark_guard():
    model, design = bell_design(1, [1.0, 2.0, 3.0])
    th = model.meta["theta"]
    counts = sample_count_trials(poisson_means(design, model, th, 50.0), 20000, 1)
    est = mle_rates(counts, design.weights, 50.0)
    assert np.allclose(est.gamma_hat, th, rtol=0.01)
    with pytest.raises(DarkChannel):
        mle_rates(counts[0], [1.0, 0.0, 1.0], 50.0)


def test_optimal_design_ancilla_fallback():
    model = collective_spin_model(2, 1.0, 1.0, 1.0)
    th = model.meta["theta"]
    od = optimal_design(model, th)
    assert od.design.certified and od.ancilla_dim > 1
    a = np.kron(rate_operator(model, th), np.eye(od.ancilla_dim))
    assert np.isclose(np.vdot(od.probe, a @ od.probe).real, od.rate)


def test_pauli_model_rate_count_guard():
    with pytest.raises(ValueError):
        pauli_model(1, [1.0, 2.0])
