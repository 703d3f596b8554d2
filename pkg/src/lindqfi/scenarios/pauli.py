"""Pauli-noise learning with and without a quantum memory.

Strings are ordered lexicographically with I < X < Y < Z per site and the
leftmost site most significant; the all-identity string is dropped.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from ..errors import DimensionGuard
from ..linalg import I2, SX, SY, SZ, kron
from ..model import DissipationModel, JumpBasis
from ..rpm import RPMDesign, make_design, rpm_fisher
from .common import check_rates, rate_only_model

MAX_N = 3
_SINGLE = {"I": I2, "X": SX, "Y": SY, "Z": SZ}


def _check_n(N: int):
    if not 1 <= N <= MAX_N:
        raise DimensionGuard(f"Pauli scenarios limited to 1 <= N <= {MAX_N}")


def pauli_labels(N: int) -> list:
    _check_n(N)
    return ["".join(s) for s in product("IXYZ", repeat=N)][1:]


def pauli_strings(N: int) -> np.ndarray:
    return np.array([kron(*(_SINGLE[c] for c in lab)) for lab in pauli_labels(N)])


def pauli_model(N: int, rates=None, memory: bool = False) -> DissipationModel:
    """Rate-only Pauli channel; ``memory=True`` lifts jumps to P_a (x) I_mem."""
    labels = pauli_labels(N)
    r = len(labels)
    g = np.ones(r) if rates is None else check_rates(rates, strict=True)
    if g.size != r:
        raise ValueError(f"expected {r} rates for N={N}, got {g.size}")
    basis = JumpBasis(pauli_strings(N), labels, check=False)
    if memory:
        basis = basis.lift(2 ** N, side="right")
    return rate_only_model(basis, r, name=f"pauli-N{N}" + ("-memory" if memory else ""),
                           meta={"theta": g, "N": N, "memory": memory})


def bell_probe(N: int) -> np.ndarray:
    """|Phi>^(x)N with all system qubits first, then the memory qubits."""
    _check_n(N)
    d = 2 ** N
    return (np.eye(d, dtype=complex) / np.sqrt(d)).reshape(-1)


def bell_identity_residual(N: int) -> float:
    """max |<Phi|P_a (x) P_b^T|Phi> - delta_ab| over all string pairs (identity included)."""
    _check_n(N)
    phi = bell_probe(N)
    d = 2 ** N
    m = phi.reshape(d, d)
    strings = [kron(*(_SINGLE[c] for c in s)) for s in product("IXYZ", repeat=N)]
    worst = 0.0
    for a, pa in enumerate(strings):
        left = pa @ m
        for b, pb in enumerate(strings):
            val = np.vdot(m, left @ pb)   # (P_a (x) P_b^T) acting on vec(m) is P_a m P_b
            worst = max(worst, abs(val - (a == b)))
    return float(worst)


def bell_design(N: int, rates=None) -> tuple[DissipationModel, RPMDesign]:
    model = pauli_model(N, rates, memory=True)
    design = make_design(bell_probe(N), model.basis.operators, labels=model.basis.labels)
    return model, design


def bell_fisher(N: int, rates=None, T: float = 1.0) -> np.ndarray:
    model, design = bell_design(N, rates)
    return rpm_fisher(design, model, model.meta["theta"], T).entries


def short_time_fisher(psi: np.ndarray, povm: np.ndarray, jumps: np.ndarray, rates: np.ndarray,
                      null_tol: float = 1e-12) -> np.ndarray:
    """Fisher rate from rank-1 effects |m><m| orthogonal to the probe.

    Outcomes overlapping the probe have O(1) probability and O(dt) slope,
    so they drop out of the rate; the rest click with probability
    dt sum_a gamma_a |<m|P_a|psi>|^2.
    """
    psi = np.asarray(psi, dtype=complex)
    q = np.abs(np.einsum("ma,kab,b->mk", povm.conj(), jumps, psi)) ** 2
    dark = np.abs(povm.conj() @ psi) ** 2 <= null_tol * np.sum(np.abs(povm) ** 2, axis=1)
    q = q[dark]
    p = q @ rates
    live = p > 0
    q, p = q[live], p[live]
    return np.einsum("mk,ml,m->kl", q, q, 1.0 / p)


def random_no_memory_design(N: int, rng: np.random.Generator, max_outcomes=None):
    """Random probe plus a random rank-1 POVM on its complement, probe effect added.

    Returns (psi, vectors) with sum_m |v_m><v_m| = I; the first vector is psi.
    """
    d = 2 ** N
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi /= np.linalg.norm(psi)
    perp = np.eye(d) - np.outer(psi, psi.conj())
    cap = 4 * d if max_outcomes is None else max_outcomes
    k = int(rng.integers(d - 1, cap))          # outcomes on the complement
    w = (rng.normal(size=(k, d)) + 1j * rng.normal(size=(k, d))) @ perp.T
    frame = w.T @ w.conj()
    ev, u = np.linalg.eigh(frame)
    keep = ev > 1e-10 * ev[-1]        # support is the complement of psi
    inv_sqrt = (u[:, keep] / np.sqrt(ev[keep])) @ u[:, keep].conj().T
    vecs = (inv_sqrt @ w.T).T
    return psi, np.vstack([psi[None], vecs])


@dataclass
class NoMemoryReport:
    N: int
    samples: int
    traces: np.ndarray
    cap: float                  # T (D - 1) / gamma_min
    avg_precision_bound: float  # T / (gamma_min (D + 1))
    worst_ratio: float
    completeness: float         # max deviation of sum |v><v| from I

    @property
    def passed(self) -> bool:
        return bool(np.all(self.traces <= self.cap * (1 + 1e-8)) and self.completeness < 1e-8)


def no_memory_bound_check(N: int, povm_samples: int = 500, seed: int = 0, rates=None,
                          T: float = 1.0) -> NoMemoryReport:
    if not 1 <= N <= 2:
        raise DimensionGuard("no-memory check limited to N <= 2")
    d = 2 ** N
    jumps = pauli_strings(N)
    r = jumps.shape[0]
    g = np.ones(r) if rates is None else check_rates(rates, strict=True)
    rng = np.random.default_rng(seed)
    traces = np.empty(povm_samples)
    comp = 0.0
    for s in range(povm_samples):
        psi, vecs = random_no_memory_design(N, rng)
        comp = max(comp, float(np.max(np.abs(vecs.T @ vecs.conj() - np.eye(d)))))
        traces[s] = T * np.trace(short_time_fisher(psi, vecs, jumps, g))
    gmin = float(g.min())
    cap = T * (d - 1) / gmin
    return NoMemoryReport(N, povm_samples, traces, cap, T / (gmin * (d + 1)),
                          float(traces.max() / cap), comp)


def memory_advantage(N: int = 2, T: float = 1.0) -> dict:
    """Bell-memory Fisher trace against the no-memory trace cap, unit rates."""
    mem = float(np.trace(bell_fisher(N, None, T)))
    cap = T * (2 ** N - 1)
    return {"memory_trace": mem, "no_memory_cap": cap, "ratio": mem / cap,
            "expected": (4 ** N - 1) / (2 ** N - 1)}
