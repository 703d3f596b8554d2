"""Discrete collisional purification used as a brute-force oracle.

Each time bin couples the system to a fresh bath element of R truncated
bosonic modes through

    U_j = exp(-i dt H_c(t_j)) exp(-i sqrt(dt) sum_k (A_k b_k^dagger + A_k^dagger b_k)),

with canonical amplitudes A_k = sum_i zeta_ik L_i.  Because a bin is never
revisited, overlaps of two purifications are contracted bin by bin through a
system-sized two-sided transfer matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionGuard, StepTooLarge
from .linalg import as_pure_state, dag, projector, unitary_from_hermitian
from .model import DissipationModel, Generator, _aligned, _theta, eigenmodel_at

BIN_GUARD = 2 ** 20
EXPLICIT_GUARD = 2 ** 16


@dataclass(frozen=True)
class CollisionalConfig:
    delta_t: float
    n_bins: int
    bath_levels: int = 2
    fd_step: float = 1e-4

    def __post_init__(self):
        if not self.delta_t > 0:
            raise ValueError("delta_t must be positive")
        if self.n_bins < 0:
            raise ValueError("n_bins must be nonnegative")
        if self.bath_levels < 2:
            raise ValueError("bath_levels must be >= 2")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")

    @property
    def total_time(self) -> float:
        return self.delta_t * self.n_bins

    @classmethod
    def for_time(cls, t: float, n_bins: int, **kw) -> "CollisionalConfig":
        if n_bins < 1:
            raise ValueError("n_bins must be >= 1")
        return cls(t / n_bins, n_bins, **kw)


def _lowering(levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, levels)), 1).astype(complex)


def _bath_ops(r: int, levels: int):
    b = _lowering(levels)
    eye = np.eye(levels)
    out = []
    for k in range(r):
        op = np.array([[1.0]])
        for j in range(r):
            op = np.kron(op, b if j == k else eye)
        out.append(op)
    return out


def canonical_amplitudes(model: DissipationModel, theta, ref_frame: Optional[np.ndarray] = None):
    """A_k = sum_i zeta_ik L_i, with the frame phase-aligned to ``ref_frame`` if given."""
    th = _theta(model, theta)
    if model.mode == "GAMMA" and ref_frame is not None:
        lam, v = _aligned(model, th, ref_frame)
    else:
        lam, v = eigenmodel_at(model, th)
    return model.basis.combine(v * np.sqrt(lam))


def bin_unitary(model: DissipationModel, theta, t_j: float, config: CollisionalConfig,
                ref_frame: Optional[np.ndarray] = None) -> np.ndarray:
    amps = canonical_amplitudes(model, theta, ref_frame)
    d = model.dim
    nb = config.bath_levels ** len(amps)
    if d * nb > BIN_GUARD:
        raise DimensionGuard(f"system x bin dimension {d * nb} exceeds {BIN_GUARD}")
    h = np.zeros((d * nb, d * nb), dtype=complex)
    for a, b in zip(amps, _bath_ops(len(amps), config.bath_levels)):
        term = np.kron(a, dag(b))
        h += term + dag(term)
    u = unitary_from_hermitian(h, np.sqrt(config.delta_t))
    if model.control is not None:
        hc = np.asarray(model.control(t_j), dtype=complex)
        u = np.kron(unitary_from_hermitian(hc, config.delta_t), np.eye(nb)) @ u
    return u


def kraus_operators(model: DissipationModel, theta, t_j: float, config: CollisionalConfig,
                    ref_frame: Optional[np.ndarray] = None) -> np.ndarray:
    """M_b = <b| U_j |vac>, shape (bath_dim, D, D)."""
    u = bin_unitary(model, theta, t_j, config, ref_frame)
    d = model.dim
    nb = u.shape[0] // d
    w = u.reshape(d, nb, d, nb)[:, :, :, 0]
    return np.ascontiguousarray(w.transpose(1, 0, 2))


class _KrausSeq:
    """Per-bin Kraus sets, reusing the dissipative part when there is no drive."""

    def __init__(self, model, theta, config, ref_frame=None):
        self.model, self.config = model, config
        if model.control is None:
            self.base = kraus_operators(model, theta, 0.0, config, ref_frame)
        else:
            stripped = _without_control(model)
            self.base = kraus_operators(stripped, theta, 0.0, config, ref_frame)

    def __getitem__(self, j: int) -> np.ndarray:
        if self.model.control is None:
            return self.base
        dt = self.config.delta_t
        hc = np.asarray(self.model.control(bin_time(j, self.config)), dtype=complex)
        return unitary_from_hermitian(hc, dt)[None] @ self.base


def _without_control(model: DissipationModel) -> DissipationModel:
    from dataclasses import replace
    return replace(model, control=None)


def bin_time(j: int, config: CollisionalConfig) -> float:
    # drive sampled at the bin midpoint
    return (j + 0.5) * config.delta_t


def kraus_step(rho: np.ndarray, model: DissipationModel, theta, t_j: float,
               config: CollisionalConfig) -> np.ndarray:
    ms = kraus_operators(model, theta, t_j, config)
    return np.einsum("bij,jk,blk->il", ms, rho, ms.conj(), optimize=True)


def kraus_increment_error(rho: np.ndarray, model: DissipationModel, theta,
                          dts: Sequence[float]) -> tuple[np.ndarray, float]:
    """||rho' - rho - dt L(rho)|| for each dt and the fitted log-log slope."""
    gen = Generator(model, theta)
    errs = []
    for dt in dts:
        cfg = CollisionalConfig(dt, 1)
        new = kraus_step(rho, model, theta, 0.0, cfg)
        errs.append(np.linalg.norm(new - rho - dt * gen(rho, 0.0)))
    errs = np.array(errs)
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    return errs, float(slope)


def two_sided_overlap(model: DissipationModel, theta, theta_p, psi0, config: CollisionalConfig,
                      ref_frame: Optional[np.ndarray] = None) -> complex:
    """<Psi(theta_p)|Psi(theta)> of the two purifications."""
    psi = as_pure_state(psi0)
    ka = _KrausSeq(model, theta, config, ref_frame)
    kb = _KrausSeq(model, theta_p, config, ref_frame)
    r = projector(psi)
    for j in range(config.n_bins):
        ma, mb = ka[j], kb[j]
        r = np.einsum("bij,jk,blk->il", ma, r, mb.conj(), optimize=True)
    return complex(np.trace(r))


def explicit_purification(model: DissipationModel, theta, psi0, config: CollisionalConfig) -> np.ndarray:
    """Global state on system (x) bin_1 (x) ... (x) bin_n (system index slowest)."""
    psi = as_pure_state(psi0)
    d = model.dim
    nb = config.bath_levels ** model.R
    total = d * nb ** config.n_bins
    if total > EXPLICIT_GUARD:
        raise DimensionGuard(f"purification dimension {total} exceeds {EXPLICIT_GUARD}")
    seq = _KrausSeq(model, theta, config)
    state = psi.reshape(d, 1)
    for j in range(config.n_bins):
        ms = seq[j]
        state = np.einsum("bxy,yr->xrb", ms, state, optimize=True).reshape(d, -1)
    return state.reshape(-1)


def reduced_system_state(vec: np.ndarray, dim: int) -> np.ndarray:
    m = vec.reshape(dim, -1)
    return m @ dag(m)


@dataclass
class OracleResult:
    qgt: np.ndarray          # complex Hermitian d x d
    fd_step: float
    config: CollisionalConfig

    @property
    def fisher(self) -> np.ndarray:
        return 4.0 * np.real(self.qgt)


def _scaled_step(model, th, psi0, config, delta, ref, target, max_step):
    """Grow delta until the smallest overlap deficit reaches ``target``.

    The deficit scales as delta^2 F / 8, so a weakly informative direction
    with the default step drowns in rounding error accumulated over bins.
    """
    eye = np.eye(model.n_params)
    worst = min(1.0 - abs(two_sided_overlap(model, th + delta * e, th, psi0, config, ref)) for e in eye)
    if worst >= target:
        return delta
    grow = np.sqrt(target / max(worst, 1e-300))
    return float(min(delta * grow, max_step))


def fd_purification_qgt(model: DissipationModel, theta, psi0, config: CollisionalConfig,
                        max_halvings: int = 6, target_deficit: Optional[float] = 1e-7,
                        max_step: float = 0.05) -> OracleResult:
    """Fubini-Study QGT of the purification from exactly contracted overlaps.

    ``config.fd_step`` is the starting step; with ``target_deficit`` set it
    is enlarged (up to ``max_step``) for weakly informative parameters.
    """
    th = _theta(model, theta)
    d = model.n_params
    ref = eigenmodel_at(model, th).frame if model.mode == "GAMMA" else None
    delta = config.fd_step
    if target_deficit is not None and config.n_bins > 0:
        delta = _scaled_step(model, th, psi0, config, delta, ref, target_deficit, max(max_step, delta))
    for _ in range(max_halvings + 1):
        try:
            q = _qgt_at_step(model, th, psi0, config, delta, ref)
            return OracleResult(q, delta, config)
        except StepTooLarge:
            delta /= 2
    raise StepTooLarge("overlap deficit stays above 0.1 after step halving")


def _qgt_at_step(model, th, psi0, config, delta, ref):
    d = model.n_params
    eye = np.eye(d)

    def ov(x, y):
        # <Psi(th + x)|Psi(th + y)>
        return two_sided_overlap(model, th + y, th + x, psi0, config, ref)

    def curv(direction):
        acc = 0.0
        for s in (1.0, -1.0):
            o = ov(np.zeros(d), s * delta * direction)
            deficit = 1.0 - abs(o)
            if deficit > 0.1:
                raise StepTooLarge(f"overlap deficit {deficit:.3f}")
            acc += 8.0 * deficit / delta ** 2
        return acc / 2.0

    f = np.zeros((d, d))
    for a in range(d):
        f[a, a] = curv(eye[a])
    for a in range(d):
        for b in range(a + 1, d):
            f[a, b] = f[b, a] = (curv(eye[a] + eye[b]) - curv(eye[a] - eye[b])) / 4.0
    im = np.zeros((d, d))
    if d > 1:
        z = np.zeros(d)
        first = [(ov(z, delta * eye[a]) - ov(z, -delta * eye[a])) / (2 * delta) for a in range(d)]
        for a in range(d):
            for b in range(a + 1, d):
                mixed = (ov(delta * eye[a], delta * eye[b]) - ov(delta * eye[a], -delta * eye[b])
                         - ov(-delta * eye[a], delta * eye[b]) + ov(-delta * eye[a], -delta * eye[b]))
                mixed /= 4 * delta ** 2
                val = np.imag(mixed - np.conj(first[a]) * first[b])
                im[a, b], im[b, a] = val, -val
    return f / 4.0 + 1j * im


def richardson_fisher(model: DissipationModel, theta, psi0, t: float, n_bins: int,
                      **kw) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(extrapolated, at n_bins, at n_bins/2); bias assumed linear in dt."""
    if n_bins % 2:
        raise ValueError("n_bins must be even")
    fine = fd_purification_qgt(model, theta, psi0, CollisionalConfig.for_time(t, n_bins, **kw)).fisher
    coarse = fd_purification_qgt(model, theta, psi0, CollisionalConfig.for_time(t, n_bins // 2, **kw)).fisher
    return 2 * fine - coarse, fine, coarse


def fitted_order(n_bins: Sequence[int], values: Sequence[float], reference: float) -> float:
    """Log-log slope of |value - reference| against dt ~ 1/n_bins."""
    err = np.abs(np.asarray(values, dtype=float) - reference)
    err = np.maximum(err, 1e-300)
    return float(np.polyfit(-np.log(np.asarray(n_bins, dtype=float)), np.log(err), 1)[0])
