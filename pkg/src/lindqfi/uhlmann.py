"""Short-time Uhlmann extremality of the collisional purification.

Everything here lives on the first bath bin restricted to vacuum (+)
single excitations, dimension R+1, and is expressed in the canonical jump
basis J_r = sum_i V_ir L_i.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm_frechet
from scipy.optimize import minimize

from .errors import BudgetExceeded, ZeroRate
from .linalg import as_pure_state, dag, hermitian_part, solve_anticommutator
from .model import DissipationModel, amplitude_derivative, eigen_derivatives, eigenmodel_at, _theta

RATE_FLOOR = 1e-14


@dataclass
class DressedMoments:
    m: np.ndarray            # <J_r>
    Cprime: np.ndarray       # <J_r^dagger J_s>
    rates: np.ndarray
    dm: np.ndarray           # sqrt(Lambda) m
    dC: np.ndarray           # sqrt(Lambda) C'^T sqrt(Lambda)

    @property
    def Cprime_c(self) -> np.ndarray:
        return self.Cprime - np.outer(self.m.conj(), self.m)

    @property
    def dC_c(self) -> np.ndarray:
        s = np.sqrt(self.rates)
        return hermitian_part(s[:, None] * self.Cprime_c.T * s[None, :])


def dressed_moments(psi, model: DissipationModel, theta) -> DressedMoments:
    psi = as_pure_state(psi)
    lam, v = eigenmodel_at(model, theta)
    jumps = model.basis.combine(v)
    jp = jumps @ psi
    m = jp @ psi.conj()
    cp = hermitian_part(jp.conj() @ jp.T)
    s = np.sqrt(lam)
    return DressedMoments(m, cp, lam, s * m, hermitian_part(s[:, None] * cp.T * s[None, :]))


def short_time_bath_state(mom: DressedMoments, dt: float) -> np.ndarray:
    """Leading-order reduced state of the first bath bin (vacuum index 0)."""
    r = mom.m.size
    phi = np.zeros((r + 1, r + 1), dtype=complex)
    phi[0, 0] = 1.0 - dt * np.trace(mom.dC).real
    phi[0, 1:] = 1j * np.sqrt(dt) * mom.dm.conj()
    phi[1:, 0] = -1j * np.sqrt(dt) * mom.dm
    phi[1:, 1:] = dt * mom.dC
    return phi


def f_matrix(model: DissipationModel, theta, u) -> np.ndarray:
    """F_u = sum_a u_a (Lambda^-1 d_a Lambda + 2 V^dagger d_a V)."""
    th = _theta(model, theta)
    lam, v = eigenmodel_at(model, th)
    if np.any(lam <= RATE_FLOOR):
        raise ZeroRate("F_u needs strictly positive eigenrates")
    u = np.asarray(u, dtype=float)
    f = np.zeros((lam.size, lam.size), dtype=complex)
    for a, ua in enumerate(u):
        if ua == 0:
            continue
        dl, dv = eigen_derivatives(model, th, a)
        f += ua * (np.diag(dl / lam) + 2.0 * dag(v) @ dv)
    return f


@dataclass
class ExtremalSolution:
    F_u: np.ndarray
    xi_star: np.ndarray
    Xi_star: np.ndarray
    lyapunov_residual: float
    xi_residual: float
    gap_metric: Optional[float] = None
    gap_curvature: Optional[float] = None


def _xi_rhs(mom: DressedMoments, f: np.ndarray) -> np.ndarray:
    s = np.sqrt(mom.rates)
    cc = mom.Cprime_c
    inner = f.T @ cc.T - cc.T @ f.conj()
    return -0.5j * s[:, None] * inner * s[None, :]


def extremal_generator(mom: DressedMoments, f: np.ndarray) -> ExtremalSolution:
    s = np.sqrt(mom.rates)
    rhs = hermitian_part(_xi_rhs(mom, f))
    dcc = mom.dC_c
    xi_mat = solve_anticommutator(dcc, rhs)
    lyap = float(np.linalg.norm(dcc @ xi_mat + xi_mat @ dcc - rhs))
    w = s * (f.T @ mom.m)
    xi = 1j * xi_mat @ mom.dm - 0.5 * w
    xi_res = float(np.linalg.norm(xi - (1j * xi_mat * s[None, :] - 0.5 * s[:, None] * f.T) @ mom.m))
    return ExtremalSolution(f, xi, xi_mat, lyap, xi_res)


def canonical_extremality_check(mom: DressedMoments, f: np.ndarray, tol: float = 1e-9):
    """(passes, ||F^dagger C'_c - C'_c F||_F) for the no-mixing condition."""
    cc = mom.Cprime_c
    viol = float(np.linalg.norm(dag(f) @ cc - cc @ f))
    scale = np.linalg.norm(f) * np.linalg.norm(cc)
    return viol <= tol * scale or viol == 0.0, viol


def metric_gap(mom: DressedMoments, f_u: np.ndarray, f_v: np.ndarray,
               sol_u: ExtremalSolution, sol_v: ExtremalSolution, dt: float) -> float:
    lam = mom.rates
    s = np.sqrt(lam)
    mm = np.outer(mom.m.conj(), mom.m)
    first = 0.25 * np.trace(mm @ (f_u @ np.diag(lam) @ dag(f_v) + f_v @ np.diag(lam) @ dag(f_u)))
    anti = sol_u.Xi_star @ sol_v.Xi_star + sol_v.Xi_star @ sol_u.Xi_star
    second = np.trace(mom.Cprime_c.T @ (s[:, None] * anti * s[None, :]))
    return float(np.real(0.5 * dt * (first + second)))


def b_matrix(mom: DressedMoments, f: np.ndarray, dt: float) -> np.ndarray:
    """Leading-order B_u = Tr_sys(Psi dG_u) on vacuum (+) single excitations."""
    s = np.sqrt(mom.rates)
    r = s.size
    w = s * (f.T @ mom.m)
    mu = -0.5j * s[:, None] * (mom.Cprime.T @ f.conj()) * s[None, :]
    b = np.zeros((r + 1, r + 1), dtype=complex)
    b[0, 1:] = 0.5 * np.sqrt(dt) * w.conj()
    b[1:, 1:] = dt * mu
    b[0, 0] = -dt * np.trace(mu)
    return b


def delta_h_star(mom: DressedMoments, sol: ExtremalSolution, dt: float) -> np.ndarray:
    """Block ansatz for the centred extremal generator, phi_out-mean set to zero."""
    r = sol.xi_star.size
    h = np.zeros((r + 1, r + 1), dtype=complex)
    h[1:, 0] = np.sqrt(dt) * sol.xi_star
    h[0, 1:] = np.sqrt(dt) * sol.xi_star.conj()
    h[1:, 1:] = sol.Xi_star
    phi = short_time_bath_state(mom, dt)
    return h - np.trace(phi @ h) * np.eye(r + 1)


def curvature_gap(mom: DressedMoments, f_u, f_v, sol_u, sol_v, dt: float) -> float:
    phi = short_time_bath_state(mom, dt)
    hu, hv = delta_h_star(mom, sol_u, dt), delta_h_star(mom, sol_v, dt)
    bu, bv = b_matrix(mom, f_u, dt), b_matrix(mom, f_v, dt)
    bua, bva = 0.5 * (bu - dag(bu)), 0.5 * (bv - dag(bv))
    val = -1j * np.trace(phi @ (hu @ hv - hv @ hu)) + 2j * np.trace(hu @ bva - bua @ hv)
    return float(np.real(val))


def analyze(psi, model: DissipationModel, theta, u, v=None, dt: float = 1e-4):
    """Moments, both extremal solutions, and metric/curvature gaps."""
    mom = dressed_moments(psi, model, theta)
    v = u if v is None else v
    fu, fv = f_matrix(model, theta, u), f_matrix(model, theta, v)
    su, sv = extremal_generator(mom, fu), extremal_generator(mom, fv)
    su.gap_metric = sv.gap_metric = metric_gap(mom, fu, fv, su, sv, dt)
    su.gap_curvature = sv.gap_curvature = curvature_gap(mom, fu, fv, su, sv, dt)
    return mom, su, sv


@dataclass
class BruteForceGap:
    gap: float
    canonical_metric: float
    extremal_metric: float
    evaluations: int
    certified: bool


def _first_bin(model: DissipationModel, theta, u, dt: float):
    th = _theta(model, theta)
    lam, v = eigenmodel_at(model, th)
    zeta = v * np.sqrt(lam)
    dzeta = np.zeros_like(zeta)
    for a, ua in enumerate(u):
        if ua != 0:
            dzeta = dzeta + ua * amplitude_derivative(model, th, a)
    r = zeta.shape[1]
    d = model.dim
    amps = model.basis.combine(zeta)
    damps = model.basis.combine(dzeta)

    def coupling(ops):
        h = np.zeros((d * (r + 1), d * (r + 1)), dtype=complex)
        for k, a in enumerate(ops):
            e = np.zeros((r + 1, r + 1))
            e[k + 1, 0] = 1.0
            term = np.kron(a, e)
            h += term + dag(term)
        return h

    x = -1j * np.sqrt(dt) * coupling(amps)
    dx = -1j * np.sqrt(dt) * coupling(damps)
    uu, du = expm_frechet(x, dx)
    return uu, du, d, r


def brute_force_gap(psi, model: DissipationModel, theta, u, dt: float = 1e-4,
                    opt_budget: int = 20000, restarts: int = 8, seed: int = 0) -> BruteForceGap:
    """Canonical metric minus the numerically minimized gauge-shifted variance."""
    psi = as_pure_state(psi)
    uu, du, d, r = _first_bin(model, theta, np.asarray(u, dtype=float), dt)
    e = r + 1
    vac = np.zeros(e)
    vac[0] = 1.0
    big = uu @ np.kron(psi, vac)
    g = 1j * du @ dag(uu)
    g = hermitian_part(g)
    gpsi = g @ big
    mat = big.reshape(d, e)
    phi = mat.T @ mat.conj()           # reduced bath state
    cross = gpsi.reshape(d, e).T @ mat.conj()   # Tr_sys(|G Psi><Psi|)

    def shifted_var(h):
        mean = big.conj() @ gpsi + np.trace(phi @ h)
        second = gpsi.conj() @ gpsi + 2 * np.real(np.trace(cross @ h)) + np.trace(phi @ h @ h)
        return float(np.real(second - abs(mean) ** 2))

    iu = np.triu_indices(e, 1)
    n_par = e * e

    def unpack(x):
        # off-diagonal entries scaled by sqrt(dt) so all directions have O(dt) curvature
        h = np.diag(x[:e]).astype(complex)
        off = np.sqrt(dt) * (x[e:e + len(iu[0])] + 1j * x[e + len(iu[0]):])
        h[iu] = off
        h[(iu[1], iu[0])] = off.conj()
        return h

    canon = shifted_var(np.zeros((e, e)))

    def obj(x):
        return shifted_var(unpack(x)) / dt

    # the objective is an exact quadratic in x: recover it from evaluations
    x_quad, evals = _quadratic_minimizer(obj, n_par)
    rng = np.random.default_rng(seed)
    per = max((opt_budget - evals) // restarts, 1)
    minima = [obj(x_quad) * dt]
    converged = False
    for k in range(restarts):
        x0 = x_quad if k == 0 else x_quad + rng.normal(scale=0.5, size=n_par)
        res = minimize(obj, x0, method="Powell", options={"maxfev": per, "xtol": 1e-7, "ftol": 1e-11})
        evals += res.nfev
        minima.append(res.fun * dt)
        converged = converged or bool(res.success)
    best = min(minima)
    gap = canon - best
    # Powell often stops on maxfev while sitting at the minimum; independent
    # starts landing on the same value count as convergence too
    lows = np.sort(minima)
    if lows[1] - lows[0] <= 1e-9 * max(abs(lows[0]), dt):
        converged = True
    if not converged:
        raise BudgetExceeded(f"optimizer did not converge within {opt_budget} evaluations", best=gap)
    return BruteForceGap(gap, canon, best, evals, True)


def _quadratic_minimizer(obj, n: int, step: float = 1.0):
    """Stationary point of an exactly quadratic objective from 1 + 2n + n(n-1)/2 calls."""
    f0 = obj(np.zeros(n))
    eye = np.eye(n) * step
    fp = np.array([obj(eye[i]) for i in range(n)])
    fm = np.array([obj(-eye[i]) for i in range(n)])
    grad = (fp - fm) / (2 * step)
    hess = np.diag((fp - 2 * f0 + fm) / step ** 2)
    calls = 1 + 2 * n
    for i in range(n):
        for j in range(i + 1, n):
            fij = obj(eye[i] + eye[j])
            hess[i, j] = hess[j, i] = (fij - fp[i] - fp[j] + f0) / step ** 2
            calls += 1
    # h -> h + c I leaves the variance unchanged, so the Hessian is singular
    x = -np.linalg.lstsq(hess, grad, rcond=1e-12)[0]
    return x, calls


def gap_tolerance(dt: float) -> float:
    return max(1e-6, 5.0 * dt ** 1.5)


def exact_first_bin_state(psi, model: DissipationModel, theta, dt: float) -> np.ndarray:
    """Reduced bath state of the truncated first bin, for checking the block form."""
    uu, _, d, r = _first_bin(model, theta, np.zeros(model.n_params), dt)
    vac = np.zeros(r + 1)
    vac[0] = 1.0
    mat = (uu @ np.kron(as_pure_state(psi), vac)).reshape(d, r + 1)
    return mat.T @ mat.conj()


__all__ = ["DressedMoments", "ExtremalSolution", "BruteForceGap", "dressed_moments", "short_time_bath_state",
           "f_matrix", "extremal_generator", "canonical_extremality_check", "metric_gap", "curvature_gap",
           "b_matrix", "delta_h_star", "analyze", "brute_force_gap", "gap_tolerance", "exact_first_bin_state"]
