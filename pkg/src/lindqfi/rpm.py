"""Rapid prepare-and-measure: jump vectors, certification, Poisson counting
statistics and maximum-likelihood rate estimates.

In the short-bin limit each canonical channel k clicks as an independent
Poisson process with mean T * gamma_k * mu_k, mu_k = <psi|J_k^dagger J_k|psi>.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DarkChannel, NotDistinguishable, NotShortTime
from .linalg import as_pure_state, dag, projector
from .model import DissipationModel, eigenmodel_at, propagate, sqrt_rate_derivative
from .qfi import QFIMatrix, _rate_only_parts, top_eigvec, rate_operator

DARK_MU = 1e-14
DIST_TOL = 1e-8
CHUNK = 4096


@dataclass
class JumpVectors:
    vectors: np.ndarray   # (R, D), zero rows for dark channels
    weights: np.ndarray   # mu_k
    dark: np.ndarray      # bool mask


def jump_vectors(psi, jumps) -> JumpVectors:
    psi = as_pure_state(psi)
    jumps = np.asarray(jumps, dtype=complex)
    raw = jumps @ psi
    mu = np.real(np.einsum("ka,ka->k", raw.conj(), raw))
    dark = mu < DARK_MU
    vec = np.zeros_like(raw)
    vec[~dark] = raw[~dark] / np.sqrt(mu[~dark])[:, None]
    return JumpVectors(vec, np.where(dark, 0.0, mu), dark)


@dataclass
class RPMDesign:
    probe: np.ndarray
    jump_vectors: np.ndarray   # (R, D)
    weights: np.ndarray
    dark: np.ndarray
    gram: np.ndarray           # (R'+1) x (R'+1) over probe and bright vectors
    certified: bool
    labels: Optional[list] = None

    @property
    def R(self) -> int:
        return self.weights.size

    def perp_projector(self) -> np.ndarray:
        bright = self.jump_vectors[~self.dark]
        d = self.probe.size
        return np.eye(d) - projector(self.probe) - bright.T @ bright.conj()

    def povm(self) -> list:
        """Dense POVM elements; materializes R+2 matrices, fine at desk scale."""
        bright = self.jump_vectors[~self.dark]
        return [projector(self.probe)] + [projector(v) for v in bright] + [self.perp_projector()]


@dataclass
class Certification:
    ok: bool
    gram: np.ndarray
    max_violation: float
    offending: list
    design: RPMDesign


def certify_distinguishable(psi, jumps, tol: float = DIST_TOL, labels=None) -> Certification:
    """Check <j_k|j_l> = delta_kl and <psi|j_k> = 0 for every bright channel."""
    psi = as_pure_state(psi)
    jv = jump_vectors(psi, jumps)
    bright = jv.vectors[~jv.dark]
    stack = np.vstack([psi[None], bright])
    gram = stack.conj() @ stack.T
    dev = np.abs(gram - np.eye(gram.shape[0]))
    idx = np.argwhere(np.triu(dev >= tol))
    names = ["psi"] + [str(i) for i in np.flatnonzero(~jv.dark)]
    offending = [(names[i], names[j], complex(gram[i, j])) for i, j in idx]
    ok = not offending
    design = RPMDesign(psi, jv.vectors, jv.weights, jv.dark, gram, ok, labels)
    if ok:
        w = np.linalg.eigvalsh(design.perp_projector())
        if w[0] < -1e-9:
            ok = False
    return Certification(ok, gram, float(np.max(dev, initial=0.0)), offending, design)


def make_design(psi, jumps, tol: float = DIST_TOL, labels=None) -> RPMDesign:
    cert = certify_distinguishable(psi, jumps, tol, labels)
    if not cert.ok:
        raise NotDistinguishable(
            f"jump basis not distinguishable (max Gram deviation {cert.max_violation:.3e})",
            cert.offending)
    return cert.design


def model_jumps(model: DissipationModel, theta) -> np.ndarray:
    em = eigenmodel_at(model, theta)
    return model.basis.combine(em.frame)


def design_for(model: DissipationModel, theta, psi, tol: float = DIST_TOL) -> RPMDesign:
    return make_design(psi, model_jumps(model, theta), tol, model.basis.labels)


def short_time_probs(design: RPMDesign, model: DissipationModel, theta, dt: float) -> np.ndarray:
    em = eigenmodel_at(model, theta)
    p = dt * em.rates * design.weights
    if p.sum() >= 0.1:
        raise NotShortTime(f"dt * sum(gamma mu) = {p.sum():.3g} is not small")
    return np.concatenate([[1.0 - p.sum()], p])


def exact_probs(design: RPMDesign, model: DissipationModel, theta, dt: float,
                steps: int = 40) -> np.ndarray:
    """Outcome probabilities from the propagated state; last entry is Pi_perp."""
    rho = propagate(design.probe, model, theta, dt, steps).final
    p0 = np.real(design.probe.conj() @ rho @ design.probe)
    pk = np.real(np.einsum("ka,ab,kb->k", design.jump_vectors.conj(), rho, design.jump_vectors))
    pk[design.dark] = 0.0
    return np.concatenate([[p0], pk, [1.0 - p0 - pk.sum()]])


def _dsq(model: DissipationModel, theta) -> np.ndarray:
    em, dls = _rate_only_parts(model, theta)
    return np.array([sqrt_rate_derivative(em.rates, dl) for dl in dls])


def rpm_fisher(design: RPMDesign, model: DissipationModel, theta, T: float) -> QFIMatrix:
    """Multi-Poisson Fisher matrix 4T sum_k (d_a sqrt g_k)(d_b sqrt g_k) mu_k."""
    dsq = _dsq(model, theta)
    f = 4.0 * T * np.einsum("ak,bk,k->ab", dsq, dsq, design.weights)
    return QFIMatrix(f, float(T))


def poisson_means(design: RPMDesign, model: DissipationModel, theta, T: float) -> np.ndarray:
    return T * eigenmodel_at(model, theta).rates * design.weights


@dataclass
class CountRecord:
    counts: np.ndarray
    T: float
    seed: int
    n_bins: Optional[int] = None
    no_jump: Optional[int] = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(self.counts < 0):
            raise ValueError("negative counts")
        if self.n_bins is not None and self.no_jump is not None:
            if self.counts.sum() + self.no_jump > self.n_bins:
                raise ValueError("counts exceed number of bins")

    @property
    def R(self) -> int:
        return self.counts.size

    def to_text(self) -> str:
        out = io.StringIO()
        out.write("# lindqfi count record\n")
        if self.n_bins is None:
            out.write("# R T seed\n")
            out.write(f"{self.R} {self.T!r} {self.seed}\n")
        else:
            out.write("# R T seed n_bins no_jump\n")
            out.write(f"{self.R} {self.T!r} {self.seed} {self.n_bins} {self.no_jump}\n")
        for k, c in enumerate(self.counts, start=1):
            out.write(f"{k} {int(c)}\n")
        return out.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "CountRecord":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        if not lines:
            raise ValueError("empty count record")
        head = lines[0].split()
        if len(head) not in (3, 5):
            raise ValueError(f"bad header line: {lines[0]!r}")
        r, t, seed = int(head[0]), float(head[1]), int(head[2])
        counts = np.zeros(r, dtype=np.int64)
        seen = set()
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 2:
                raise ValueError(f"bad count line: {ln!r}")
            k, c = int(parts[0]), int(parts[1])
            if not 1 <= k <= r or k in seen:
                raise ValueError(f"bad channel index {k}")
            seen.add(k)
            counts[k - 1] = c
        if len(seen) != r:
            raise ValueError("missing channels in count record")
        if len(head) == 5:
            return cls(counts, t, seed, int(head[3]), int(head[4]))
        return cls(counts, t, seed)


def sample_counts(design: RPMDesign, model: DissipationModel, theta, T: float, seed: int) -> CountRecord:
    lam = poisson_means(design, model, theta, T)
    rng = np.random.default_rng(seed)
    return CountRecord(rng.poisson(lam), T, seed)


def sample_count_trials(means: np.ndarray, trials: int, seed: int) -> np.ndarray:
    """(trials, R) Poisson counts; chunk c draws from child c of the master seed."""
    means = np.asarray(means, dtype=float)
    n_chunks = -(-trials // CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    out = np.empty((trials, means.size), dtype=np.int64)
    for c, ss in enumerate(children):
        lo, hi = c * CHUNK, min((c + 1) * CHUNK, trials)
        out[lo:hi] = np.random.default_rng(ss).poisson(means, size=(hi - lo, means.size))
    return out


def sample_bins(design: RPMDesign, model: DissipationModel, theta, T: float, dt: float,
                seed: int) -> CountRecord:
    """Bin-resolved mode: T/dt independent short bins, one outcome each."""
    n = int(round(T / dt))
    p = short_time_probs(design, model, theta, dt)
    draw = np.random.default_rng(seed).multinomial(n, p)
    return CountRecord(draw[1:], T, seed, n, int(draw[0]))


@dataclass
class RatesEstimate:
    gamma_hat: np.ndarray
    covariance: Optional[np.ndarray] = None
    fisher_pred: Optional[QFIMatrix] = None
    boundary: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


def mle_rates(counts, mu: Sequence[float], T: float, fisher_pred: Optional[QFIMatrix] = None) -> RatesEstimate:
    """gamma_k = N_k / (T mu_k); a 2-D ``counts`` array is treated as replicated trials."""
    if isinstance(counts, CountRecord):
        T = counts.T
        counts = counts.counts
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= DARK_MU):
        raise DarkChannel(f"dark channels requested: {np.flatnonzero(mu <= DARK_MU).tolist()}")
    n = np.asarray(counts, dtype=float)
    est = n / (T * mu)
    if n.ndim == 1:
        return RatesEstimate(est, None, fisher_pred, n == 0)
    cov = np.cov(est, rowvar=False, ddof=1)
    return RatesEstimate(est.mean(axis=0), np.atleast_2d(cov), fisher_pred, (n == 0).any(axis=0))


@dataclass
class OptimalDesign:
    rate: float
    probe: np.ndarray
    design: RPMDesign
    ancilla_dim: int
    degeneracy: int


def optimal_design(model: DissipationModel, theta, tol: float = DIST_TOL,
                   degeneracy_tol: float = 1e-9) -> OptimalDesign:
    """Top eigenvector of A if it certifies; otherwise an ancilla-entangled probe.

    The fallback maximally entangles a D-dimensional ancilla with the top
    eigenspace of A, so <A> stays at lambda_max while the jump vectors
    inherit the trace orthogonality of the eigenspace projector.
    """
    a = rate_operator(model, theta)
    rate, probe = top_eigvec(a, degeneracy_tol)
    jumps = model_jumps(model, theta)
    cert = certify_distinguishable(probe, jumps, tol)
    w, u = np.linalg.eigh(a)
    top = u[:, w >= w[-1] - degeneracy_tol * max(abs(w[-1]), 1.0)]
    if cert.ok:
        return OptimalDesign(rate, probe, cert.design, 1, top.shape[1])
    d = model.dim
    g = top.shape[1]
    psi = np.zeros((d, d), dtype=complex)  # system x ancilla
    psi[:, :g] = top / np.sqrt(g)
    psi = psi.reshape(-1)
    lifted = np.array([np.kron(j, np.eye(d)) for j in jumps])
    design = make_design(psi, lifted, tol, model.basis.labels)
    return OptimalDesign(rate, psi, design, d, g)
