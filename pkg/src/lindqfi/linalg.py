"""Dense linear algebra on finite-dimensional Hilbert spaces.

Operators are plain ``numpy`` complex arrays; ``HilbertSpace`` only records
the tensor structure where it matters (partial traces, lifting).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import BadSubsystem, NotHermitian, NotPSD, NotState, UnsupportedRHS

HERM_TOL = 1e-10
PSD_FLOOR = 1e-10


@dataclass(frozen=True)
class HilbertSpace:
    subsystem_dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.subsystem_dims)
        if not dims or any(d < 1 for d in dims):
            raise BadSubsystem(f"invalid subsystem dims {self.subsystem_dims}")
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.subsystem_dims))

    def __mul__(self, other: "HilbertSpace") -> "HilbertSpace":
        return HilbertSpace(self.subsystem_dims + other.subsystem_dims)


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dag(a))


def kron(*ops) -> np.ndarray:
    if len(ops) == 1 and not isinstance(ops[0], np.ndarray):
        ops = tuple(ops[0])
    return reduce(np.kron, ops)


def asymmetry(m: np.ndarray) -> float:
    """Relative Frobenius size of the anti-Hermitian part."""
    n = np.linalg.norm(m)
    if n == 0.0:
        return 0.0
    return float(np.linalg.norm(m - dag(m)) / n)


def check_hermitian(m: np.ndarray, tol: float = HERM_TOL, what: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitian(f"{what} is not square: shape {m.shape}")
    a = asymmetry(m)
    if a > tol:
        raise NotHermitian(f"{what} violates Hermiticity (relative asymmetry {a:.3e} > {tol:.1e})")
    return hermitian_part(m)


def hermitian_eig(m: np.ndarray, tol: float = HERM_TOL):
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix."""
    h = check_hermitian(m, tol)
    w, u = np.linalg.eigh(h)
    return w, u


def psd_sqrt(m: np.ndarray, floor: float = PSD_FLOOR) -> np.ndarray:
    w, u = hermitian_eig(m)
    scale = max(float(np.max(np.abs(w))) if w.size else 0.0, 0.0)
    if w.size and w[0] < -floor * scale:
        raise NotPSD(f"eigenvalue {w[0]:.3e} below floor -{floor:.0e}*|M|")
    w = np.clip(w, 0.0, None)
    return (u * np.sqrt(w)) @ dag(u)


def solve_anticommutator(p: np.ndarray, b: np.ndarray, zero_tol: float = 1e-12,
                         support_tol: float = 1e-8) -> np.ndarray:
    """Solve {P, X} = B for Hermitian X on the support of P.

    Pairs (m, n) with p_m + p_n <= zero_tol * tr(P) are outside the support;
    B must (nearly) vanish there and X is set to zero on them.
    """
    w, u = hermitian_eig(p)
    b = check_hermitian(b, 1e-8, "anticommutator right-hand side")
    bt = dag(u) @ b @ u
    denom = w[:, None] + w[None, :]
    thr = zero_tol * max(float(np.sum(w)), 0.0)
    inside = denom > thr
    bnorm = np.linalg.norm(b)
    outside = np.linalg.norm(bt[~inside]) if (~inside).any() else 0.0
    if bnorm > 0 and outside > support_tol * bnorm:
        raise UnsupportedRHS(
            f"right-hand side has weight {outside:.3e} outside supp(P) (|B|={bnorm:.3e})")
    x = np.zeros_like(bt)
    x[inside] = bt[inside] / denom[inside]
    return hermitian_part(u @ x @ dag(u))


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not in ``keep``; kept factors follow ``keep`` order."""
    dims = [int(d) for d in dims]
    n = len(dims)
    keep = [int(k) for k in keep]
    if any(k < 0 or k >= n for k in keep) or len(set(keep)) != len(keep):
        raise BadSubsystem(f"keep={keep} invalid for {n} subsystems")
    m = np.asarray(m)
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise BadSubsystem(f"operator shape {m.shape} does not match dims {dims}")
    t = m.reshape(dims + dims)
    cur = n
    for i in sorted(set(range(n)) - set(keep), reverse=True):
        t = np.trace(t, axis1=i, axis2=i + cur)
        cur -= 1
    remaining = sorted(keep)
    order = [remaining.index(k) for k in keep]
    t = t.transpose(order + [o + cur for o in order])
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d, d)


def unitary_from_hermitian(h: np.ndarray, scale: float) -> np.ndarray:
    """exp(-i * scale * H) by spectral decomposition."""
    w, u = hermitian_eig(h)
    return (u * np.exp(-1j * scale * w)) @ dag(u)


def spectral_norm(m: np.ndarray) -> float:
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def as_pure_state(psi, tol: float = 1e-12, normalize: bool = False) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    nrm = np.linalg.norm(psi)
    if normalize:
        if nrm == 0:
            raise NotState("zero vector")
        return psi / nrm
    if abs(nrm - 1.0) > tol:
        raise NotState(f"state norm {nrm:.15f} differs from 1")
    return psi


def check_density_matrix(rho, herm_tol: float = 1e-12, trace_tol: float = 1e-12,
                         floor: float = PSD_FLOOR) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise NotState(f"density matrix must be square, got {rho.shape}")
    if np.max(np.abs(rho - dag(rho)), initial=0.0) > herm_tol:
        raise NotState("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise NotState(f"trace {tr!r} differs from 1")
    w = np.linalg.eigvalsh(hermitian_part(rho))
    if w[0] < -floor:
        raise NotState(f"negative eigenvalue {w[0]:.3e}")
    return hermitian_part(rho)


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    return np.outer(psi, psi.conj())


def commutator(a, b):
    return a @ b - b @ a


def anticommutator(a, b):
    return a @ b + b @ a


# Pauli matrices
I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SM = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|, lowers |0>=up to |1>=down
SP = SM.T.copy()
