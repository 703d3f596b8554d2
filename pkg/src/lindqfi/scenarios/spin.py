"""Collective spin operators, Dicke states and the collective-dissipation model.

Convention: S_a = sum_i sigma_i^(a) (Pauli normalization, so S_z has
eigenvalues N - 2n) and S_pm = S_x pm i S_y.  Qubit state |0> is spin up,
and n counts down spins.  FULL mode works on the 2^N space, SYMMETRIC mode
on the (N+1)-dimensional Dicke sector with basis index n.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from ..errors import BadIndex, DimensionGuard
from ..linalg import SX, SY, SZ
from ..model import DissipationModel, JumpBasis
from ..qfi import dissipation_kernel, qfi_flow, optimal_rate
from .common import check_rates, rate_only_model

FULL_MAX_N = 10          # dense 2^N x 2^N operators
FULL_STATE_MAX_N = 16    # 2^N state vectors only
SYMMETRIC_MAX_N = 200
MODES = ("FULL", "SYMMETRIC")


def _check_mode(mode: str, n: int, full_cap: int = FULL_MAX_N) -> str:
    mode = mode.upper()
    if mode not in MODES:
        raise ValueError(f"sector_mode must be one of {MODES}")
    if n < 1:
        raise ValueError("N must be >= 1")
    cap = full_cap if mode == "FULL" else SYMMETRIC_MAX_N
    if n > cap:
        raise DimensionGuard(f"{mode} mode is limited to N <= {cap}")
    return mode


def _site_sum(single: np.ndarray, n: int) -> np.ndarray:
    dim = 2 ** n
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        out += np.kron(np.kron(np.eye(2 ** i), single), np.eye(2 ** (n - i - 1)))
    return out


def _symmetric_ops(n: int):
    # S_+ |D_n> = 2 sqrt(n (N - n + 1)) |D_{n-1}>
    k = np.arange(1, n + 1)
    sp = np.zeros((n + 1, n + 1), dtype=complex)
    sp[k - 1, k] = 2.0 * np.sqrt(k * (n - k + 1))
    sm = sp.conj().T
    sz = np.diag(n - 2.0 * np.arange(n + 1)).astype(complex)
    sx = 0.5 * (sp + sm)
    sy = -0.5j * (sp - sm)
    return sx, sy, sz, sp, sm


@dataclass
class SpinAlgebra:
    N: int
    mode: str
    Sx: np.ndarray
    Sy: np.ndarray
    Sz: np.ndarray
    Sp: np.ndarray
    Sm: np.ndarray

    @property
    def S2(self) -> np.ndarray:
        return self.Sx @ self.Sx + self.Sy @ self.Sy + self.Sz @ self.Sz

    @property
    def dim(self) -> int:
        return self.Sz.shape[0]

    def commutation_residual(self) -> float:
        """max || [S_a, S_b] - 2i eps_abc S_c || over the cyclic triples."""
        ops = (self.Sx, self.Sy, self.Sz)
        worst = 0.0
        for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            lhs = ops[a] @ ops[b] - ops[b] @ ops[a]
            worst = max(worst, float(np.max(np.abs(lhs - 2j * ops[c]))))
        return worst


def spin_algebra(N: int, sector_mode: str = "FULL") -> SpinAlgebra:
    mode = _check_mode(sector_mode, N)
    if mode == "FULL":
        sx, sy, sz = (_site_sum(p, N) for p in (SX, SY, SZ))
        return SpinAlgebra(N, mode, sx, sy, sz, sx + 1j * sy, sx - 1j * sy)
    return SpinAlgebra(N, mode, *_symmetric_ops(N))


def dicke_state(N: int, n: int, sector_mode: str = "FULL") -> np.ndarray:
    mode = _check_mode(sector_mode, N, FULL_STATE_MAX_N)
    if not 0 <= n <= N:
        raise BadIndex(f"Dicke index n={n} outside 0..{N}")
    if mode == "SYMMETRIC":
        out = np.zeros(N + 1, dtype=complex)
        out[n] = 1.0
        return out
    out = np.zeros(2 ** N, dtype=complex)
    for down in combinations(range(N), n):
        idx = sum(1 << (N - 1 - i) for i in down)
        out[idx] = 1.0
    return out / np.sqrt(comb(N, n))


def dicke_isometry(N: int) -> np.ndarray:
    """(2^N, N+1) matrix whose columns are the Dicke states."""
    return np.stack([dicke_state(N, n, "FULL") for n in range(N + 1)], axis=1)


def ghz_state(N: int, sector_mode: str = "FULL") -> np.ndarray:
    return (dicke_state(N, 0, sector_mode) + dicke_state(N, N, sector_mode)) / np.sqrt(2)


def product_up(N: int, sector_mode: str = "FULL") -> np.ndarray:
    return dicke_state(N, 0, sector_mode)


def collective_spin_model(N: int, gamma_x: float = 1.0, gamma_y: float = 1.0, gamma_z: float = 1.0,
                          sector_mode: str = "FULL") -> DissipationModel:
    """Rate-only model with jumps (S_x, S_y, S_z); theta = (gamma_x, gamma_y, gamma_z)."""
    alg = spin_algebra(N, sector_mode)
    rates = check_rates([gamma_x, gamma_y, gamma_z])
    basis = JumpBasis([alg.Sx, alg.Sy, alg.Sz], ["Sx", "Sy", "Sz"], check=False)
    return rate_only_model(basis, 3, name=f"collective-spin-{alg.mode.lower()}-N{N}",
                           meta={"theta": rates, "N": N, "sector_mode": alg.mode})


def apply_collective(single: np.ndarray, psi: np.ndarray, N: int) -> np.ndarray:
    """sum_i single_i acting on the last N qubits of psi, without forming 2^N matrices."""
    psi = np.asarray(psi, dtype=complex)
    lead = psi.size // 2 ** N
    t = psi.reshape((lead,) + (2,) * N)
    out = np.zeros_like(t)
    for i in range(N):
        moved = np.tensordot(single, t, axes=([1], [i + 1]))
        out += np.moveaxis(moved, 0, i + 1)
    return out.reshape(-1)


def apply_s2(psi: np.ndarray, N: int) -> np.ndarray:
    out = np.zeros_like(np.asarray(psi, dtype=complex))
    for p in (SX, SY, SZ):
        out += apply_collective(p, apply_collective(p, psi, N), N)
    return out


def separable_rate(N: int, gamma: float = 1.0, sector_mode: str = "SYMMETRIC") -> float:
    """Average QFI rate of the product probe |0>^N, connected correlator."""
    model = collective_spin_model(N, gamma, gamma, gamma, sector_mode)
    th = model.meta["theta"]
    psi = product_up(N, sector_mode)
    rho = np.outer(psi, psi.conj())
    f = qfi_flow(dissipation_kernel(model, th), model.basis.correlator(rho, connected=True))
    return float(np.trace(f) / 3.0)


def optimal_collective_rate(N: int, gamma: float = 1.0, sector_mode: str = "SYMMETRIC"):
    """(lambda_max(A), probe) for equal rates."""
    model = collective_spin_model(N, gamma, gamma, gamma, sector_mode)
    return optimal_rate(model, model.meta["theta"])
