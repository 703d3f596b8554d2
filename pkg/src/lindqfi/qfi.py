"""Collisional QFI/QGT flows, their time integral, eigenrate specializations,
Heisenberg-type bounds, optimal RPM rate and the exact SLD QFI.

The dissipation kernel is built from amplitude derivatives
``dzeta[a] = d_a (V Lambda^(1/2))`` as ``K[a, b] = 4 dzeta[b] dzeta[a]^dagger``,
so Tr(K[a, b] C) = 4 sum_k Tr(A_ak^dagger A_bk rho) with A_ak = sum_i dzeta[a]_ik L_i.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from .errors import DimensionMismatch, KernelMismatch, NotRateOnly, ZeroRate
from .linalg import check_density_matrix, dag, hermitian_part, spectral_norm
from .model import (DissipationModel, Trajectory, amplitude_derivative, connection, correlator,
                    dgamma, eigen_derivatives, eigenmodel_at, gamma_at, propagate,
                    sqrt_rate_derivative, _theta)

KERNEL_TOL = 1e-7
RATE_ONLY_TOL = 1e-8


@dataclass
class KernelSet:
    blocks: np.ndarray          # (d, d, R, R)
    theta: np.ndarray
    dzeta: np.ndarray           # (d, R, r)

    @property
    def n_params(self) -> int:
        return self.blocks.shape[0]

    @property
    def R(self) -> int:
        return self.blocks.shape[2]

    def average(self) -> np.ndarray:
        d = self.n_params
        return sum(self.blocks[a, a] for a in range(d)) / d


@dataclass
class QFIMatrix:
    entries: np.ndarray
    horizon: float = 0.0
    cap: Optional[float] = None
    flows: Optional[np.ndarray] = None
    trajectory: Optional[Trajectory] = field(default=None, repr=False)

    @property
    def average(self) -> float:
        return float(np.trace(self.entries) / self.entries.shape[0])


@dataclass
class ConnectivityReport:
    max_entry_norm: float
    row_connectivity: int
    support_size: int
    zero_tol: float


def kernel_from_amplitudes(dzeta: Sequence[np.ndarray], theta=None) -> KernelSet:
    dz = np.asarray(dzeta, dtype=complex)
    if dz.ndim == 2:
        dz = dz[None]
    blocks = 4.0 * np.einsum("bik,ajk->abij", dz, dz.conj(), optimize=True)
    th = np.asarray(theta, dtype=float) if theta is not None else np.zeros(dz.shape[0])
    return KernelSet(blocks, th, dz)


def dissipation_kernel(model: DissipationModel, theta, check: bool = True) -> KernelSet:
    """Amplitude-form kernel; cross-checked against the Gamma^-1 form when Gamma is full rank."""
    th = _theta(model, theta)
    d = model.n_params
    dz = [amplitude_derivative(model, th, a) for a in range(d)]
    ks = kernel_from_amplitudes(dz, th)
    if check:
        g = gamma_at(model, th)
        w = np.linalg.eigvalsh(g)
        if w.size == model.R and w[0] > 1e-10 * max(w[-1], 0.0) and w[-1] > 0:
            ginv = np.linalg.inv(g)
            m = []
            for a in range(d):
                k = connection(model, th, a)
                m.append(dgamma(model, th, a) + k @ g + g @ k)
            alt = np.array([[m[b] @ ginv @ dag(m[a]) for b in range(d)] for a in range(d)])
            scale = max(np.max(np.abs(ks.blocks)), 1e-300)
            err = np.max(np.abs(alt - ks.blocks)) / scale
            if np.max(np.abs(ks.blocks)) > 0 and err > KERNEL_TOL:
                raise KernelMismatch(f"kernel forms disagree (relative {err:.2e})")
    return ks


def _trace_kc(kernel: KernelSet, c: np.ndarray) -> np.ndarray:
    c = np.asarray(c)
    if c.shape != (kernel.R, kernel.R):
        raise DimensionMismatch(f"correlator shape {c.shape} vs kernel R={kernel.R}")
    return np.einsum("abij,ji->ab", kernel.blocks, c, optimize=True)


def qfi_flow(kernel: KernelSet, c: np.ndarray) -> np.ndarray:
    f = np.real(_trace_kc(kernel, c))
    asym = np.max(np.abs(f - f.T), initial=0.0)
    if asym > 1e-9 * max(1.0, np.max(np.abs(f), initial=0.0)):
        raise KernelMismatch(f"flow not symmetric ({asym:.2e})")
    return 0.5 * (f + f.T)


def qgt_flow(kernel: KernelSet, c: np.ndarray) -> np.ndarray:
    return hermitian_part(0.25 * _trace_kc(kernel, c))


def flow_cap(model: DissipationModel, dzeta: np.ndarray) -> float:
    """4 sum_{a,k} ||sum_i dzeta[a]_ik L_i||^2, the per-unit-time cap on Tr F."""
    total = 0.0
    for dz in dzeta:
        for op in model.basis.combine(dz):
            total += spectral_norm(op) ** 2
    return 4.0 * total


def drift_generator(model: DissipationModel, theta, alpha: int) -> np.ndarray:
    """(i/2) sum_k (dA_k^dagger A_k - A_k^dagger dA_k) for A_k = sum_i zeta_ik L_i.

    This is the O(dt) no-emission part of d_alpha of a bin unitary.  It is
    Hermitian and vanishes for rate-only models; when it does not vanish the
    collisional purification picks up extra, Hamiltonian-like information
    that the kernel flow does not contain.
    """
    th = _theta(model, theta)
    amps = model.basis.combine(_zeta(model, th))
    damps = model.basis.combine(amplitude_derivative(model, th, alpha))
    g = np.einsum("kba,kbc->ac", damps.conj(), amps) - np.einsum("kba,kbc->ac", amps.conj(), damps)
    return hermitian_part(0.5j * g)


def _zeta(model, th):
    lam, v = eigenmodel_at(model, th)
    return v * np.sqrt(lam)


def qfi_integrate(model: DissipationModel, psi0, theta, t: float, steps: int = 200,
                  connected: bool = False, kernel: Optional[KernelSet] = None) -> QFIMatrix:
    """Integrate the QFI flow along the propagated state (composite Simpson)."""
    if steps % 2:
        raise ValueError("steps must be even for Simpson quadrature")
    th = _theta(model, theta)
    d = model.n_params
    if t == 0:
        return QFIMatrix(np.zeros((d, d)), 0.0, 0.0, np.zeros((1, d, d)))
    ks = kernel if kernel is not None else dissipation_kernel(model, th)
    traj = propagate(psi0, model, th, t, steps)
    flows = np.array([qfi_flow(ks, correlator(r, model.basis, connected)) for r in traj.states])
    f = simpson(flows, x=traj.times, axis=0)
    f = 0.5 * (f + f.T)
    cap = t * flow_cap(model, ks.dzeta)
    tr = float(np.trace(f))
    if tr > cap * (1 + 1e-8) + 1e-14:
        raise KernelMismatch(f"Tr F = {tr:.6g} exceeds flow cap {cap:.6g}")
    return QFIMatrix(f, float(t), cap, flows, traj)


def _rate_only_parts(model: DissipationModel, theta):
    th = _theta(model, theta)
    em = eigenmodel_at(model, th)
    dls = []
    for a in range(model.n_params):
        dl, dv = eigen_derivatives(model, th, a)
        if np.linalg.norm(dv @ dag(em.frame)) > RATE_ONLY_TOL:
            raise NotRateOnly(f"eigenframe moves along parameter {a}")
        dls.append(dl)
    return em, np.array(dls)


def eigenrate_flow(model: DissipationModel, theta, rho: np.ndarray) -> np.ndarray:
    em, dls = _rate_only_parts(model, theta)
    dsq = np.array([sqrt_rate_derivative(em.rates, dl) for dl in dls])
    jumps = model.basis.combine(em.frame)
    mu = np.real(np.einsum("kba,kbc,ca->k", jumps.conj(), jumps, rho, optimize=True))
    return 4.0 * np.einsum("ak,bk,k->ab", dsq, dsq, mu)


def eigenrate_precision_bound(model: DissipationModel, theta, T: float,
                              zero: float = 1e-14) -> np.ndarray:
    em, dls = _rate_only_parts(model, theta)
    norms2 = np.array([spectral_norm(j) ** 2 for j in model.basis.combine(em.frame)])
    lam = em.rates
    out = np.zeros(model.n_params)
    for a, dl in enumerate(dls):
        bad = (lam <= zero) & (np.abs(dl) > 0)
        if bad.any():
            raise ZeroRate(f"zero rate with nonzero derivative for parameter {a}")
        live = lam > zero
        out[a] = T * np.sum(dl[live] ** 2 / lam[live] * norms2[live])
    return out


def connectivity(m: np.ndarray, zero_tol: Optional[float] = None) -> ConnectivityReport:
    a = np.abs(np.asarray(m))
    mx = float(np.max(a, initial=0.0))
    tol = 1e-10 * mx if zero_tol is None else float(zero_tol)
    nz = a > tol
    return ConnectivityReport(mx, int(np.max(nz.sum(axis=1), initial=0)), int(nz.sum()), tol)


def connectivity_sweep(m: np.ndarray, rel_tols=(1e-14, 1e-12, 1e-10, 1e-8, 1e-6)) -> dict:
    """Row connectivity at several relative zero thresholds.

    Near-zero correlator entries make r_C threshold dependent; a sweep shows
    whether the bound sits on a plateau.
    """
    mx = float(np.max(np.abs(np.asarray(m)), initial=0.0))
    return {tol: connectivity(m, tol * mx).row_connectivity for tol in rel_tols}


@dataclass
class HeisenbergBound:
    value: float
    kbar_max: float
    l_max: float
    R: int
    r_kernel: int
    r_corr: int


def heisenberg_bound(model: DissipationModel, theta, trajectory: Trajectory, T: float,
                     kernel: Optional[KernelSet] = None, zero_tol: Optional[float] = None,
                     connected: bool = False) -> HeisenbergBound:
    ks = kernel if kernel is not None else dissipation_kernel(model, theta)
    kbar = ks.average()
    rk = connectivity(kbar, zero_tol)
    rc = max(connectivity(correlator(r, model.basis, connected), zero_tol).row_connectivity
             for r in trajectory.states)
    lmax = float(np.max(model.basis.norms()))
    val = T * rk.max_entry_norm * lmax ** 2 * model.R * min(rk.row_connectivity, rc)
    return HeisenbergBound(val, rk.max_entry_norm, lmax, model.R, rk.row_connectivity, rc)


def rate_operator(model: DissipationModel, theta) -> np.ndarray:
    """A = sum_k c_k J_k^dagger J_k with c_k = (4/d) sum_a (d_a sqrt(gamma_k))^2."""
    em, dls = _rate_only_parts(model, theta)
    dsq = np.array([sqrt_rate_derivative(em.rates, dl) for dl in dls])
    c = 4.0 / model.n_params * np.sum(dsq ** 2, axis=0)
    jumps = model.basis.combine(em.frame)
    return hermitian_part(np.einsum("k,kba,kbc->ac", c, jumps.conj(), jumps, optimize=True))


def top_eigvec(a: np.ndarray, rel_tol: float = 1e-9):
    """Largest eigenvalue and a deterministic vector from its eigenspace.

    Ties are broken by projecting e_0, e_1, ... onto the top eigenspace and
    keeping the first non-negligible projection, phase-fixed so that its
    first nonzero component is real positive.
    """
    w, u = np.linalg.eigh(hermitian_part(a))
    top = w[-1]
    sel = u[:, w >= top - rel_tol * max(abs(top), 1.0)]
    for j in range(a.shape[0]):
        v = sel @ sel[j].conj()
        n = np.linalg.norm(v)
        if n > 1e-8:
            v = v / n
            first = np.flatnonzero(np.abs(v) > 1e-12)[0]
            return float(top), v * (abs(v[first]) / v[first])
    raise RuntimeError("empty eigenspace")


def optimal_rate(model: DissipationModel, theta):
    return top_eigvec(rate_operator(model, theta))


def sld_qfi(rho: np.ndarray, drho: Sequence[np.ndarray], cutoff: float = 1e-12) -> QFIMatrix:
    rho = check_density_matrix(rho, herm_tol=1e-10, trace_tol=1e-10)
    p, u = np.linalg.eigh(rho)
    mats = [dag(u) @ hermitian_part(np.asarray(x, dtype=complex)) @ u for x in drho]
    s = p[:, None] + p[None, :]
    mask = s > cutoff
    d = len(mats)
    f = np.zeros((d, d))
    for a in range(d):
        for b in range(a, d):
            val = 2.0 * np.sum(np.real(mats[a] * mats[b].T)[mask] / s[mask])
            f[a, b] = f[b, a] = val
    return QFIMatrix(f)
