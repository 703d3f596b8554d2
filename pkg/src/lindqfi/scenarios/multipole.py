"""Collective spherical tensors on the Dicke sector, Dicke-Choi and
singlet-augmented probes.

Tensors are generated top-down: T_k^(k) = (-1)^k 2^(-k/2) S_+^k, then
T_(q-1)^(k) = [S_-, T_q^(k)] / (2 sqrt((k+q)(k-q+1))).  With S = 2J this is
the usual lowering relation, so every component of a rank shares one
Hilbert-Schmidt norm, and T_0^(1) = S_z, T_2^(2) = S_+^2 / 2.  The rank-0
member is S^2 = N(N+2) on the sector.

C^(k)(N) is the mean of T^dagger T over the normalized sector projector,
which is exactly the jump weight mu seen by the Dicke-Choi probe.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ..errors import DimensionGuard, OddN
from ..linalg import SX, SY, SZ, SM, SP
from ..model import DissipationModel, JumpBasis
from ..rpm import RPMDesign, make_design, rpm_fisher
from .common import check_rates, rate_only_model
from .spin import SYMMETRIC_MAX_N, apply_collective, apply_s2, dicke_isometry, spin_algebra

SINGLET_GUARD = 2 ** 20


def _log_top_norm2(n: int, k: int) -> float:
    """log Tr((S_+^k)^dagger S_+^k) on the sector, times 2^-k."""
    if k == 0:
        return 0.0
    terms = []
    for m in range(k, n + 1):
        i = np.arange(k)
        terms.append(np.sum(np.log(4.0 * (m - i) * (n - m + i + 1))))
    return float(logsumexp(terms)) - k * np.log(2.0)


def _unit_top(n: int, k: int) -> np.ndarray:
    out = np.zeros((n + 1, n + 1), dtype=complex)
    if k == 0:
        return np.eye(n + 1, dtype=complex) / np.sqrt(n + 1)
    logs = []
    for m in range(k, n + 1):
        i = np.arange(k)
        logs.append(0.5 * np.sum(np.log(4.0 * (m - i) * (n - m + i + 1))))
    logs = np.array(logs)
    vals = np.exp(logs - logs.max())
    out[np.arange(0, n + 1 - k), np.arange(k, n + 1)] = vals
    return out / np.linalg.norm(out)


@dataclass
class TensorFamily:
    """Lazily built tensors T_q^(k), 0 <= k <= N, on the (N+1)-dim sector."""

    N: int
    _units: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 1 <= self.N <= SYMMETRIC_MAX_N:
            raise DimensionGuard(f"spherical tensors limited to 1 <= N <= {SYMMETRIC_MAX_N}")

    @property
    def dim(self) -> int:
        return self.N + 1

    @property
    def count(self) -> int:
        return (self.N + 1) ** 2

    def _check_k(self, k: int):
        if not 0 <= k <= self.N:
            raise ValueError(f"rank {k} outside 0..{self.N}")

    def log_norm(self, k: int) -> float:
        """log C^(k)(N)."""
        self._check_k(k)
        if k == 0:
            return 2.0 * np.log(self.N * (self.N + 2.0))
        return _log_top_norm2(self.N, k) - np.log(self.N + 1.0)

    def norm(self, k: int) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_norm(k)))

    def units(self, k: int) -> np.ndarray:
        """Unit-Frobenius components, shape (2k+1, N+1, N+1), index q + k."""
        self._check_k(k)
        if k not in self._units:
            sm = spin_algebra(self.N, "SYMMETRIC").Sm
            out = np.zeros((2 * k + 1, self.dim, self.dim), dtype=complex)
            out[2 * k] = _unit_top(self.N, k)
            for q in range(k, -k, -1):
                t = out[q + k]
                low = sm @ t - t @ sm
                out[q + k - 1] = low / np.linalg.norm(low)
            self._units[k] = out
        return self._units[k]

    def rank(self, k: int) -> np.ndarray:
        if k == 0:
            return (self.N * (self.N + 2.0)) * np.eye(self.dim, dtype=complex)[None]
        scale = (-1) ** k * np.sqrt(self.norm(k) * self.dim)
        return scale * self.units(k)

    def component(self, k: int, q: int) -> np.ndarray:
        if abs(q) > k:
            raise ValueError(f"|q| > k for (k, q) = ({k}, {q})")
        return self.rank(k)[q + k]

    def labels(self, ranks) -> list:
        return [f"T{k},{q}" for k in ranks for q in range(-k, k + 1)]

    def stack(self, ranks) -> np.ndarray:
        return np.concatenate([self.rank(k) for k in ranks], axis=0)

    def gram(self, ranks=None) -> np.ndarray:
        """Tr(P_sym T_a^dagger T_b) over the requested ranks (all by default)."""
        ranks = range(self.N + 1) if ranks is None else ranks
        flat = self.stack(ranks).reshape(-1, self.dim ** 2)
        return flat.conj() @ flat.T


def spherical_tensors(N: int) -> TensorFamily:
    return TensorFamily(N)


def proportionality(a: np.ndarray, b: np.ndarray):
    """(c, ||a - c b|| / ||a||) with c the least-squares constant."""
    c = np.vdot(b, a) / np.vdot(b, b)
    return complex(c), float(np.linalg.norm(a - c * b) / np.linalg.norm(a))


def dicke_choi_probe(N: int) -> np.ndarray:
    """(N+1)^(-1/2) sum_n |n>_anc |D_n>, ancilla first."""
    if not 1 <= N <= SYMMETRIC_MAX_N:
        raise DimensionGuard(f"Dicke-Choi probe limited to 1 <= N <= {SYMMETRIC_MAX_N}")
    return (np.eye(N + 1, dtype=complex) / np.sqrt(N + 1)).reshape(-1)


def multipole_model(N: int, ranks=(1, 2, 3), rates=None, ancilla: bool = False) -> DissipationModel:
    """Rate-only model over the tensors of the given ranks (all q).

    ``ancilla=True`` lifts the jumps to I_anc (x) T for the Dicke-Choi probe.
    """
    ranks = tuple(int(k) for k in ranks)
    fam = spherical_tensors(N)
    ops = fam.stack(ranks)
    labels = fam.labels(ranks)
    basis = JumpBasis(ops, labels, check=False)
    if ancilla:
        if (N + 1) ** 2 > 2 ** 14:
            raise DimensionGuard("ancilla-lifted multipole model limited to (N+1)^2 <= 16384")
        basis = basis.lift(N + 1, side="left")
    r = len(labels)
    g = np.ones(r) if rates is None else check_rates(rates, strict=True)
    if g.size != r:
        raise ValueError(f"expected {r} rates, got {g.size}")
    return rate_only_model(basis, r, name=f"multipole-N{N}",
                           meta={"theta": g, "N": N, "ranks": ranks, "family": fam})


def dicke_choi_design(N: int, ranks=(1, 2, 3)) -> tuple[DissipationModel, RPMDesign]:
    model = multipole_model(N, ranks, ancilla=True)
    design = make_design(dicke_choi_probe(N), model.basis.operators, labels=model.basis.labels)
    return model, design


def dicke_choi_fisher(N: int, k: int, T: float = 1.0, ranks=None) -> np.ndarray:
    """Diagonal RPM Fisher entries for the rank-k rates (unit rates)."""
    ranks = (k,) if ranks is None else tuple(ranks)
    model, design = dicke_choi_design(N, ranks)
    f = rpm_fisher(design, model, model.meta["theta"], T).entries
    off = sum(2 * j + 1 for j in ranks[:ranks.index(k)])
    idx = np.arange(off, off + 2 * k + 1)
    return np.diag(f)[idx]


def singlet(N: int) -> np.ndarray:
    """Product of two-spin singlets on pairs (0,1), (2,3), ..."""
    if N % 2:
        raise OddN(f"singlet needs an even number of spins, got N={N}")
    pair = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    out = np.array([1.0 + 0j])
    for _ in range(N // 2):
        out = np.kron(out, pair)
    return out


@dataclass
class SingletProbe:
    N: int
    vector: np.ndarray       # ancilla (N+2) x 2^N, ancilla first
    sym_branch: np.ndarray
    singlet_branch: np.ndarray

    @property
    def ancilla_dim(self) -> int:
        return self.N + 2


def singlet_augmented_probe(N: int) -> SingletProbe:
    """(|psi_sym> + |chi>|s>)/sqrt(2) with chi the extra ancilla level."""
    if N % 2:
        raise OddN(f"singlet augmentation needs even N, got N={N}")
    if (N + 2) * 2 ** N > SINGLET_GUARD:
        raise DimensionGuard(f"singlet-augmented probe dimension exceeds {SINGLET_GUARD}")
    w = dicke_isometry(N)
    sym = np.zeros((N + 2, 2 ** N), dtype=complex)
    sym[:N + 1] = w.T / np.sqrt(N + 1)
    sing = np.zeros_like(sym)
    sing[N + 1] = singlet(N)
    vec = (sym + sing).reshape(-1) / np.sqrt(2)
    return SingletProbe(N, vec, sym.reshape(-1), sing.reshape(-1))


def singlet_annihilation_residual(N: int) -> float:
    """max ||G |s>|| over G in {S_x, S_y, S_z, S_+, S_-, S^2}.

    Every T_q^(k) is a polynomial in these, so this bounds them all.
    """
    s = singlet(N)
    res = [np.linalg.norm(apply_collective(p, s, N)) for p in (SX, SY, SZ, 2 * SP, 2 * SM)]
    res.append(np.linalg.norm(apply_s2(s, N)))
    return float(max(res))


@dataclass
class ScalarChannelReport:
    N: int
    s2_sym: float            # <S^2> on the symmetric branch
    s2_singlet: float
    variance: float          # Var(S^2) on the probe = Fisher rate at unit gamma
    max_overlap: float       # |<j_0|j_kq>| over k != 0 jump vectors
    annihilation: float


def scalar_channel(N: int, ranks=(1, 2)) -> ScalarChannelReport:
    probe = singlet_augmented_probe(N)
    psi = probe.vector
    s2psi = apply_s2(psi, N)
    mean = np.vdot(psi, s2psi).real
    var = float(np.vdot(s2psi, s2psi).real - mean ** 2)
    sym = probe.sym_branch / np.linalg.norm(probe.sym_branch)
    sing = probe.singlet_branch / np.linalg.norm(probe.singlet_branch)
    s2_sym = np.vdot(sym, apply_s2(sym, N)).real
    s2_sing = np.vdot(sing, apply_s2(sing, N)).real
    centered = s2psi - mean * psi
    centered /= np.linalg.norm(centered)
    fam = spherical_tensors(N)
    w = dicke_isometry(N)
    m = psi.reshape(N + 2, -1)
    # (I (x) W T W^dagger) psi without forming the 2^N x 2^N lift
    mw = m @ w.conj()
    worst = 0.0
    for k in ranks:
        for t in fam.rank(k):
            jv = ((mw @ t.T) @ w.T).reshape(-1)
            nrm = np.linalg.norm(jv)
            if nrm > 0:
                worst = max(worst, abs(np.vdot(centered, jv)) / nrm)
    return ScalarChannelReport(N, float(s2_sym), float(s2_sing), var, float(worst),
                               singlet_annihilation_residual(N))
