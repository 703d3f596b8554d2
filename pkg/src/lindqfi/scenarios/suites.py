"""Small random model families used by the oracle, bound and gap checks.

All jump operators are scaled to unit spectral norm and rates are
O(1), so one time unit is roughly one decay time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.stats import unitary_group

from ..linalg import SZ
from ..model import DissipationModel, JumpBasis
from .common import rate_only_model

KINDS = ("rate-only", "commuting-rotating", "rotating")


@dataclass
class Instance:
    name: str
    model: DissipationModel
    theta: np.ndarray
    psi0: np.ndarray
    t: float = 0.5


def dephasing_model() -> DissipationModel:
    """Qubit dephasing, theta = (gamma,), jump sigma_z."""
    return rate_only_model(JumpBasis([SZ], ["Z"]), 1, name="dephasing")


def dephasing_suite() -> list:
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    tilted = np.array([np.cos(0.4), np.exp(0.3j) * np.sin(0.4)], dtype=complex)
    m = dephasing_model()
    return [Instance("dephasing-plus-g0.5", m, np.array([0.5]), plus, 0.4),
            Instance("dephasing-plus-g1", m, np.array([1.0]), plus, 0.3),
            Instance("dephasing-tilted-g2", m, np.array([2.0]), tilted, 0.2)]


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


def _antisymmetric(rng, n):
    a = rng.normal(size=(n, n))
    return a - a.T


def _unit(op):
    return op / np.linalg.norm(op, 2)


def _jumps(rng, kind, dim, r):
    if kind == "rate-only" or kind == "rotating":
        ops = [_unit(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) for _ in range(r)]
    else:
        w = unitary_group.rvs(dim, random_state=rng)
        ops = [_unit(w @ np.diag(rng.normal(size=dim)) @ w.conj().T) for _ in range(r)]
    return JumpBasis(ops)


def random_model(rng: np.random.Generator, kind: str, dim: int = 2, r: int = 2, d: int = 1,
                 rate_scale: float = 1.0) -> DissipationModel:
    """rate-only: fixed random frame.  commuting-rotating: commuting Hermitian
    jumps and a real orthogonal frame exp(-i theta.A) V0.  rotating: generic
    jumps and a complex rotating frame."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    basis = _jumps(rng, kind, dim, r)
    b = np.log(rate_scale) + 0.3 * rng.normal(size=r)
    slopes = rng.normal(scale=0.5, size=(r, d))
    v0 = unitary_group.rvs(r, random_state=rng) if r > 1 else np.eye(1, dtype=complex)

    def rates(th):
        return np.exp(b + slopes @ th)

    if kind == "rate-only":
        return DissipationModel(basis, d, rates=rates, frame=lambda th: v0,
                                drates=lambda th, a: slopes[:, a] * rates(th),
                                dframe=lambda th, a: np.zeros((r, r)), name=f"random-{kind}")
    if kind == "commuting-rotating":
        # real orthogonal rotations keep {K, Gamma} real, so the drift vanishes
        v0 = np.linalg.qr(rng.normal(size=(r, r)))[0]
        gens = [0.7j * _antisymmetric(rng, r) for _ in range(d)]
    else:
        gens = [0.7 * _random_hermitian(rng, r) for _ in range(d)]

    def frame(th):
        return expm(-1j * sum(t * g for t, g in zip(th, gens))) @ v0

    return DissipationModel(basis, d, rates=rates, frame=frame, name=f"random-{kind}",
                            meta={"generators": gens})


def oracle_suite(seed: int = 2024, count: int = 12, t: float = 0.5) -> list:
    """Rate-only and commuting-rotating instances, dim <= 4, R <= 2, d <= 2."""
    rng = np.random.default_rng(seed)
    out = []
    shapes = [(2, 1, 1), (2, 2, 2), (3, 2, 1), (4, 2, 2), (3, 1, 1), (2, 2, 1)]
    for i in range(count):
        kind = KINDS[i % 2]
        dim, r, d = shapes[i % len(shapes)]
        if kind == "commuting-rotating" and r < 2:
            r = 2
        m = random_model(rng, kind, dim, r, d)
        th = rng.normal(scale=0.3, size=d)
        out.append(Instance(f"{kind}-D{dim}-R{r}-d{d}-{i}", m, th, random_state(rng, dim), t))
    return out


def mixed_suite(seed: int, count: int, max_dim: int = 4, max_r: int = 3, max_d: int = 2) -> list:
    """All three kinds, for bound and monotonicity checks."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        kind = KINDS[i % 3]
        dim = int(rng.integers(2, max_dim + 1))
        r = int(rng.integers(2 if kind != "rate-only" else 1, max_r + 1))
        if kind == "commuting-rotating":
            r = min(r, dim)     # commuting operators share dim eigenprojectors
        d = int(rng.integers(1, max_d + 1))
        m = random_model(rng, kind, dim, r, d)
        th = rng.normal(scale=0.3, size=d)
        out.append(Instance(f"{kind}-{i}", m, th, random_state(rng, dim)))
    return out


def uhlmann_suite(seed: int = 7, count: int = 6) -> list:
    """Frame-rotating models with R <= 3 for the gauge-gap comparison."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        r = 2 + i % 2
        m = random_model(rng, "rotating", 3, r, 1)
        out.append(Instance(f"uhlmann-R{r}-{i}", m, np.array([0.2]), random_state(rng, 3)))
    return out


def extremality_pairs(seed: int = 11) -> list:
    """(instance, expected_extremal) pairs.

    Uniform log-rate slopes give F = I, which commutes with any C'_c; distinct
    slopes with a generic probe leave a non-zero commutator.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(3):
        basis = _jumps(rng, "rate-only", 3, 2)
        b = 0.3 * rng.normal(size=2)
        v0 = unitary_group.rvs(2, random_state=rng)
        psi = random_state(rng, 3)
        for slopes, ext in ((np.array([1.0, 1.0]), True), (np.array([1.0, -0.8]), False)):
            m = DissipationModel(basis, 1, rates=lambda th, s=slopes, b=b: np.exp(b + s * th[0]),
                                 frame=lambda th, v=v0: v,
                                 drates=lambda th, a, s=slopes, b=b: s * np.exp(b + s * th[0]),
                                 dframe=lambda th, a: np.zeros((2, 2)), name="extremal" if ext else "mixing")
            out.append((Instance(f"{m.name}-{i}", m, np.array([0.1]), psi), ext))
    return out
