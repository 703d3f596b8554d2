"""Kernel/correlator toy families for the generalized Heisenberg bound, and a
survey that checks the bound on every built-in scenario.

Toy jumps are L_i = sigma_z on spin i, so ||L||_max = 1.  The sparse family
has Gamma = theta I (diagonal kernel) probed by |+>^R (diagonal
correlator); the dense family has Gamma = theta * ones (all-ones kernel)
probed by a GHZ state (all-ones correlator).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..linalg import SZ, kron
from ..model import DissipationModel, JumpBasis, Trajectory
from ..qfi import (connectivity, dissipation_kernel, eigenrate_precision_bound, heisenberg_bound,
                   kernel_from_amplitudes, qfi_integrate)
from .scaling import ScalingReport, fit_exponent

KINDS = ("dense", "sparse")
TOY_MODEL_MAX_R = 8


def _kind(kind: str) -> str:
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    return kind


def toy_kernel(R: int, kind: str, theta: float = 1.0) -> np.ndarray:
    """Average kernel of the single-parameter toy (d = 1)."""
    return (np.ones((R, R)) if _kind(kind) == "dense" else np.eye(R)) / theta


def toy_correlator(R: int, kind: str) -> np.ndarray:
    """<sigma_z^i sigma_z^j>: all ones on GHZ, identity on |+>^R."""
    return np.ones((R, R)) if _kind(kind) == "dense" else np.eye(R)


def toy_model(R: int, kind: str) -> DissipationModel:
    if R > TOY_MODEL_MAX_R:
        raise ValueError(f"explicit toy models limited to R <= {TOY_MODEL_MAX_R}")
    ops = [kron(*[SZ if j == i else np.eye(2) for j in range(R)]) for i in range(R)]
    basis = JumpBasis(ops, [f"Z{i}" for i in range(R)], check=False)
    if _kind(kind) == "dense":
        col = np.ones((R, 1)) / np.sqrt(R)
        return DissipationModel(basis, 1, rates=lambda th: np.array([R * th[0]]), frame=lambda th: col,
                                drates=lambda th, a: np.array([float(R)]),
                                dframe=lambda th, a: np.zeros((R, 1)), name=f"toy-dense-R{R}")
    eye = np.eye(R)
    return DissipationModel(basis, 1, rates=lambda th: th[0] * np.ones(R), frame=lambda th: eye,
                            drates=lambda th, a: np.ones(R), dframe=lambda th, a: np.zeros((R, R)),
                            name=f"toy-sparse-R{R}")


def toy_probe(R: int, kind: str) -> np.ndarray:
    d = 2 ** R
    psi = np.zeros(d, dtype=complex)
    if _kind(kind) == "dense":
        psi[0] = psi[-1] = 1 / np.sqrt(2)
    else:
        psi[:] = 1 / np.sqrt(d)
    return psi


def bound_value(kbar: np.ndarray, corrs, l_max: float, T: float, zero_tol: Optional[float] = None) -> float:
    """T ||Kbar||_max ||L||_max^2 R min(r_K, r_C), r_C maximized over the trajectory."""
    rk = connectivity(kbar, zero_tol)
    rc = max(connectivity(c, zero_tol).row_connectivity for c in corrs)
    return T * rk.max_entry_norm * l_max ** 2 * kbar.shape[0] * min(rk.row_connectivity, rc)


def toy_values(R: int, kind: str, T: float = 1.0, theta: float = 1.0) -> tuple[float, float]:
    """(bound, F_bar) at the probe; the toy correlators are stationary."""
    k = toy_kernel(R, kind, theta)
    c = toy_correlator(R, kind)
    return bound_value(k, [c], 1.0, T), float(T * np.sum(k * c.T))


def toy_study(kind: str, sizes=range(2, 17), T: float = 1.0) -> ScalingReport:
    sizes = list(sizes)
    vals = [toy_values(r, kind, T) for r in sizes]
    slope, rms = fit_exponent(sizes, [v[0] for v in vals])
    return ScalingReport(sizes, [v[0] for v in vals], slope, rms, f"heisenberg-{kind}",
                         {"fbar": [v[1] for v in vals]})


@dataclass
class BoundCheck:
    name: str
    fbar: float
    bound: float
    diag: Optional[np.ndarray] = None
    diag_bound: Optional[np.ndarray] = None

    @property
    def passed(self) -> bool:
        ok = self.fbar <= self.bound * (1 + 1e-8) + 1e-12
        if self.diag is not None:
            ok = ok and bool(np.all(self.diag <= self.diag_bound * (1 + 1e-8) + 1e-12))
        return bool(ok)


def check_model(name: str, model: DissipationModel, theta, psi, T: float, steps: int = 100,
                rate_only: bool = True) -> BoundCheck:
    ks = dissipation_kernel(model, theta)
    q = qfi_integrate(model, psi, theta, T, steps=steps, kernel=ks)
    hb = heisenberg_bound(model, theta, q.trajectory, T, kernel=ks)
    diag_b = eigenrate_precision_bound(model, theta, T) if rate_only else None
    return BoundCheck(name, q.average, hb.value, np.diag(q.entries) if rate_only else None, diag_b)


def scenario_bound_survey(T: float = 0.5) -> list:
    """Generalized Heisenberg and eigenrate bounds on small instances of every scenario."""
    from .imaging import ImagingGrid, imaging_amplitudes, imaging_model, imaging_qfi
    from .multipole import dicke_choi_probe, multipole_model
    from .pauli import bell_probe, pauli_model
    from .spin import collective_spin_model, ghz_state, optimal_collective_rate, product_up

    out = []
    for n in (2, 3):
        m = collective_spin_model(n, 1.0, 1.5, 0.7)
        th = m.meta["theta"]
        for label, psi in (("product", product_up(n)), ("ghz", ghz_state(n)),
                           ("optimal", optimal_collective_rate(n, 1.0, "FULL")[1])):
            out.append(check_model(f"spin-N{n}-{label}", m, th, psi, T))
    for n in (1, 2):
        m = pauli_model(n, np.linspace(0.5, 2.0, 4 ** n - 1), memory=True)
        out.append(check_model(f"pauli-N{n}-bell", m, m.meta["theta"], bell_probe(n), T))
    # the tensors are large (||T|| ~ N^k), so slow rates keep RK4 stable
    m = multipole_model(4, (1, 2), rates=np.full(8, 1e-3), ancilla=True)
    out.append(check_model("multipole-N4-dicke-choi", m, m.meta["theta"], dicke_choi_probe(4), T))
    for kind in KINDS:
        m = toy_model(4, kind)
        out.append(check_model(f"toy-{kind}-R4", m, [1.0], toy_probe(4, kind), T))
    grid = ImagingGrid()
    model = imaging_model(grid)
    q = imaging_qfi(grid, nu=T)
    ks = kernel_from_amplitudes(imaging_amplitudes(grid)[1])
    vac = np.zeros((model.dim, model.dim), dtype=complex)
    vac[0, 0] = 1.0
    traj = Trajectory(np.zeros(1), vac[None], np.array([grid.xbar, grid.d]))
    hb = heisenberg_bound(model, traj.theta, traj, T, kernel=ks)
    out.append(BoundCheck("imaging", q.average, hb.value))
    return out
