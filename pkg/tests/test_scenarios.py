import numpy as np
import pytest

from lindqfi.errors import BadIndex, DimensionGuard, FitDegenerate, GridTooCoarse, OddN
from lindqfi.scenarios.imaging import (ImagingGrid, check_grid, imaging_eigenvalues, imaging_limit,
                                       imaging_model, imaging_qfi, p2_trace)
from lindqfi.scenarios.multipole import (dicke_choi_fisher, proportionality, scalar_channel, singlet,
                                         singlet_annihilation_residual, spherical_tensors)
from lindqfi.scenarios.pauli import (bell_fisher, bell_identity_residual, memory_advantage,
                                     no_memory_bound_check, pauli_labels, random_no_memory_design)
from lindqfi.scenarios.scaling import channel_count, fit_exponent, local_slope, scaling_study
from lindqfi.scenarios.spin import (apply_s2, dicke_state, optimal_collective_rate, separable_rate,
                                    spin_algebra)
from lindqfi.scenarios.toys import scenario_bound_survey, toy_study
from lindqfi.linalg import SP
from lindqfi.qfi import dissipation_kernel


# collective spin

@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_spin_commutators(n):
    assert spin_algebra(n, "FULL").commutation_residual() < 1e-12
    assert spin_algebra(n, "SYMMETRIC").commutation_residual() < 1e-12


def test_symmetric_matches_full():
    full, sym = spin_algebra(4, "FULL"), spin_algebra(4, "SYMMETRIC")
    w = np.array([dicke_state(4, k) for k in range(5)]).T
    for a, b in ((full.Sx, sym.Sx), (full.Sz, sym.Sz)):
        assert np.allclose(w.conj().T @ a @ w, b)


def test_dicke_index_guard():
    with pytest.raises(BadIndex):
        dicke_state(3, 4)


def test_total_spin_on_dicke():
    n = 5
    psi = dicke_state(n, 2)
    assert np.allclose(apply_s2(psi, n), n * (n + 2) * psi)


def test_collective_rates():
    lam = [optimal_collective_rate(n, 1.0)[0] for n in (2, 4, 6)]
    assert np.allclose(lam, [n * (n + 2) / 3 for n in (2, 4, 6)])
    assert np.allclose([separable_rate(n) for n in (2, 5)], [4 / 3, 10 / 3])
    assert np.isclose(separable_rate(3, sector_mode="FULL"), separable_rate(3))


# multipoles

def test_tensor_normalization():
    fam = spherical_tensors(3)
    sym = spin_algebra(3, "SYMMETRIC")
    assert np.allclose(fam.component(1, 0), sym.Sz)
    assert np.allclose(fam.component(2, 2), sym.Sp @ sym.Sp / 2)
    g = fam.gram([1, 2])
    assert np.allclose(g, np.diag(np.diag(g)))


def test_tensor_norm_scaling():
    for k in (1, 2, 3):
        sizes = list(range(4, 21, 2))
        slope, _ = fit_exponent(sizes, [spherical_tensors(n).norm(k) for n in sizes])
        assert abs(slope - 2 * k) < 0.2 * k


def test_dicke_choi_fisher_is_tensor_norm():
    for k in (1, 2):
        f = dicke_choi_fisher(6, k)
        assert np.allclose(f, spherical_tensors(6).norm(k))


def test_proportionality():
    c, res = proportionality(3 * np.eye(2), np.eye(2))
    assert np.isclose(c, 3) and res < 1e-14


def test_singlet_and_scalar_channel():
    with pytest.raises(OddN):
        singlet(3)
    assert singlet_annihilation_residual(4) < 1e-12
    rep = scalar_channel(4)
    assert np.isclose(rep.s2_sym, 4 * 6) and abs(rep.s2_singlet) < 1e-10
    assert rep.max_overlap < 1e-10
    assert np.isclose(rep.variance, (4 * 6) ** 2 / 4)


# Pauli

def test_pauli_bell():
    assert pauli_labels(1) == ["X", "Y", "Z"]
    assert len(pauli_labels(2)) == 15
    assert bell_identity_residual(2) < 1e-14
    f = bell_fisher(2, np.arange(1, 16.0), 2.0)
    assert np.allclose(f, np.diag(2.0 / np.arange(1, 16.0)))
    with pytest.raises(DimensionGuard):
        pauli_labels(4)


def test_no_memory_design_is_povm(rng):
    psi, vecs = random_no_memory_design(2, rng)
    assert np.allclose(vecs.T @ vecs.conj(), np.eye(4), atol=1e-10)
    assert np.allclose(vecs[0], psi)


def test_no_memory_bound_and_advantage():
    rep = no_memory_bound_check(1, povm_samples=50, seed=3)
    assert rep.passed and rep.worst_ratio <= 1 + 1e-8
    assert np.isclose(memory_advantage(2)["ratio"], 5.0)


# imaging

def test_imaging_default_grid():
    g = ImagingGrid()
    q = imaging_qfi(g).entries
    assert np.allclose(np.diag(q), np.diag(imaging_limit(g)), rtol=0.01)
    num, exact = imaging_eigenvalues(g)
    assert np.allclose(num, exact, atol=1e-12)
    assert np.isclose(p2_trace(g), g.eps / g.sigma ** 2, rtol=1e-3)
    assert imaging_model(g).dim == 258


def test_imaging_refinement_converges():
    g = ImagingGrid()
    a, b = imaging_qfi(g).entries, imaging_qfi(g.refined()).entries
    assert np.max(np.abs(a - b)) / np.max(np.abs(b)) < 1e-3


def test_imaging_grid_guards():
    with pytest.raises(GridTooCoarse):
        check_grid(ImagingGrid(n_points=9))
    with pytest.raises(ValueError):
        ImagingGrid(u_min=-3.0, u_max=3.0)


def test_imaging_amplitude_kernel_matches_model_at_finite_d():
    g = ImagingGrid(n_points=129, d=0.5)
    m = imaging_model(g)
    q = imaging_qfi(g).entries
    ks = dissipation_kernel(m, [g.xbar, g.d], check=False)
    from lindqfi.qfi import qfi_flow
    f = qfi_flow(ks, np.eye(g.n_points))
    # exact parameter derivatives reach the continuum value; the D-based
    # closed form carries the O(du^2) central-difference error
    assert np.allclose(f, imaging_limit(g), rtol=1e-6, atol=1e-9)
    assert np.allclose(q, f, rtol=1e-2, atol=1e-9)


# scaling and bounds

def test_fit_exponent_exact_and_degenerate():
    assert np.isclose(fit_exponent([1, 2, 4], [3, 12, 48])[0], 2.0)
    with pytest.raises(FitDegenerate):
        fit_exponent([1, 2], [1, -1])
    with pytest.raises(FitDegenerate):
        fit_exponent([2, 2], [1, 3])
    assert np.isclose(local_slope([2, 4], [1, 8]), 3.0)


def test_scaling_study_thread_independent():
    f = lambda n: float(n) ** 1.5
    a = scaling_study(f, [2, 3, 4, 5], workers=1)
    b = scaling_study(f, [2, 3, 4, 5], workers=4)
    assert a.values == b.values and np.isclose(a.fitted_exponent, 1.5)
    with pytest.raises(ValueError):
        scaling_study(f, [2, 3, 4])


def test_channel_count():
    assert channel_count(4, [1, 3]) == 1 + 12
    assert channel_count(3, [1, 3, 9, 27]) == 4 ** 3


def test_toy_exponents():
    assert abs(toy_study("dense").fitted_exponent - 2.0) < 0.05
    assert abs(toy_study("sparse").fitted_exponent - 1.0) < 0.05


def test_bound_survey():
    for chk in scenario_bound_survey():
        assert chk.passed, chk.name


def test_full_mode_caps():
    from lindqfi.scenarios.spin import FULL_MAX_N
    assert np.isclose(np.linalg.norm(dicke_state(12, 6)), 1.0)
    with pytest.raises(DimensionGuard):
        spin_algebra(FULL_MAX_N + 1, "FULL")
