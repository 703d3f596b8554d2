"""Parametrized dissipators, eigenmodels, Lindblad propagation and correlators.

A model is either given by its dissipation matrix ``gamma(theta)`` (GAMMA
mode) or by an explicit eigen-decomposition ``rates(theta)``/``frame(theta)``
(EIGENMODEL mode).  Derivatives come from user closures when provided and
from central differences otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import (DegenerateSpectrum, GaugeAlignment, ModelEvaluation, NotHermitianJumps,
                     NotPSD, NumericGuard, StepTooLarge, ZeroRate)
from .linalg import HilbertSpace, as_pure_state, dag, hermitian_part, projector

GRAM_TOL = 1e-10
GAP_TOL = 1e-8
THIN_TOL = 1e-10
ALIGN_MIN = 0.9
POSITIVITY_FLOOR = 1e-6


class JumpBasis:
    """Ordered, linearly independent jump operators L_1..L_R on one space."""

    def __init__(self, operators, labels: Optional[Sequence[str]] = None, check: bool = True):
        ops = np.asarray(operators, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2] or ops.shape[0] < 1:
            raise ValueError(f"jump operators must have shape (R, D, D), got {ops.shape}")
        self._ops = ops
        self.labels = list(labels) if labels is not None else [f"L{i}" for i in range(ops.shape[0])]
        if len(self.labels) != ops.shape[0]:
            raise ValueError("one label per operator required")
        if check:
            flat = ops.reshape(ops.shape[0], -1)
            gram = flat.conj() @ flat.T
            w = np.linalg.eigvalsh(hermitian_part(gram))
            if w[0] <= GRAM_TOL * max(w[-1], 1.0):
                raise ValueError("jump operators are linearly dependent")

    @property
    def operators(self) -> np.ndarray:
        return self._ops

    @property
    def R(self) -> int:
        return self._ops.shape[0]

    @property
    def dim(self) -> int:
        return self._ops.shape[1]

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace((self.dim,))

    def __len__(self):
        return self.R

    def combine(self, coeffs: np.ndarray) -> np.ndarray:
        """Operators sum_i coeffs[i, k] L_i for each column k, shape (K, D, D)."""
        coeffs = np.asarray(coeffs)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        return np.einsum("ik,iab->kab", coeffs, self._ops, optimize=True)

    def norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(op, 2) for op in self._ops])

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self._ops - dag(self._ops))) < tol)

    def lift(self, ancilla_dim: int, side: str = "right") -> "JumpBasis":
        """Embed every L_i into system (x) ancilla; ``side`` places the identity."""
        eye = np.eye(ancilla_dim)
        if side == "right":
            ops = [np.kron(op, eye) for op in self._ops]
        elif side == "left":
            ops = [np.kron(eye, op) for op in self._ops]
        else:
            raise ValueError("side must be 'left' or 'right'")
        return JumpBasis(ops, self.labels, check=False)

    def correlator(self, rho: np.ndarray, connected: bool = False) -> np.ndarray:
        ops = self._ops
        d = self.dim
        if connected:
            if not self.is_hermitian():
                raise NotHermitianJumps("connected correlator needs Hermitian jump operators")
            means = np.einsum("iab,ba->i", ops, rho)
            ops = ops - means[:, None, None] * np.eye(d)
        lr = ops @ rho
        c = np.einsum("iab,jab->ij", ops.conj(), lr, optimize=True)
        return hermitian_part(c)


class CreationBasis(JumpBasis):
    """Single-mode creation operators a_u^dagger on vacuum (+) one excitation.

    State index 0 is the vacuum, index u+1 the excitation in mode u.  The
    dense operators are only built on request since R copies of a
    (R+1)-square matrix get large quickly.
    """

    def __init__(self, n_modes: int, labels: Optional[Sequence[str]] = None):
        self._n = int(n_modes)
        self.labels = list(labels) if labels is not None else [f"a{u}" for u in range(self._n)]

    @property
    def operators(self) -> np.ndarray:
        ops = np.zeros((self._n, self._n + 1, self._n + 1), dtype=complex)
        ops[np.arange(self._n), np.arange(1, self._n + 1), 0] = 1.0
        return ops

    @property
    def R(self) -> int:
        return self._n

    @property
    def dim(self) -> int:
        return self._n + 1

    def combine(self, coeffs):
        coeffs = np.asarray(coeffs)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        out = np.zeros((coeffs.shape[1], self.dim, self.dim), dtype=complex)
        out[:, 1:, 0] = coeffs.T
        return out

    def norms(self):
        return np.ones(self._n)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return False

    def lift(self, ancilla_dim, side="right"):
        raise NotImplementedError("creation bases are not lifted")

    def correlator(self, rho, connected=False):
        if connected:
            raise NotHermitianJumps("connected correlator needs Hermitian jump operators")
        # a_u a_v^dagger = delta_uv |vac><vac| inside the truncation
        return np.real(rho[0, 0]) * np.eye(self._n, dtype=complex)


class Eigenmodel(NamedTuple):
    rates: np.ndarray   # ascending in GAMMA mode
    frame: np.ndarray   # columns are eigenvectors (R x r)


@dataclass(frozen=True)
class DissipationModel:
    """theta -> Gamma(theta) over a fixed jump basis.

    Supply either ``gamma`` or both ``rates`` and ``frame``.  Optional
    analytic derivatives: ``dgamma(theta, a)``, ``drates(theta, a)``,
    ``dframe(theta, a)``.  ``control(t)`` is a Hermitian drive.  With
    ``thin=True`` a GAMMA model keeps only the non-null eigenpairs, which is
    how rank-deficient dissipators are handled.
    """

    basis: JumpBasis
    n_params: int
    gamma: Optional[Callable] = None
    rates: Optional[Callable] = None
    frame: Optional[Callable] = None
    dgamma: Optional[Callable] = None
    drates: Optional[Callable] = None
    dframe: Optional[Callable] = None
    fd_step: Optional[float] = None
    control: Optional[Callable] = None
    thin: bool = False
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.gamma is None and (self.rates is None or self.frame is None):
            raise ValueError("need gamma, or rates and frame")
        if self.gamma is not None and self.rates is not None:
            raise ValueError("gamma and rates/frame are mutually exclusive")
        if self.n_params < 1:
            raise ValueError("n_params must be positive")

    @property
    def mode(self) -> str:
        return "GAMMA" if self.gamma is not None else "EIGENMODEL"

    @property
    def derivative_provider(self) -> str:
        if self.mode == "GAMMA":
            return "ANALYTIC" if self.dgamma is not None else "FINITE_DIFFERENCE"
        return "ANALYTIC" if (self.drates is not None and self.dframe is not None) else "FINITE_DIFFERENCE"

    @property
    def R(self) -> int:
        return self.basis.R

    @property
    def dim(self) -> int:
        return self.basis.dim

    def step(self, theta, alpha: int) -> float:
        if self.fd_step is not None:
            return float(self.fd_step)
        return 1e-5 * max(1.0, abs(float(theta[alpha])))


def _theta(model: DissipationModel, theta) -> np.ndarray:
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if th.shape != (model.n_params,):
        raise ValueError(f"expected {model.n_params} parameters, got shape {th.shape}")
    if not np.all(np.isfinite(th)):
        raise ModelEvaluation("non-finite parameter vector")
    return th


def _call(fn, *args):
    try:
        out = fn(*args)
    except NumericGuard:
        raise
    except Exception as exc:  # user closure failed
        raise ModelEvaluation(f"model callable failed: {exc!r}") from exc
    return np.asarray(out)


def _user_eigen(model, th):
    lam = np.real(_call(model.rates, th)).astype(float).ravel()
    v = _call(model.frame, th).astype(complex)
    if v.ndim != 2 or v.shape[0] != model.R or v.shape[1] != lam.size:
        raise ModelEvaluation(f"frame shape {v.shape} inconsistent with {lam.size} rates and R={model.R}")
    if np.any(lam < -THIN_TOL * max(1.0, np.max(np.abs(lam)))):
        raise NotPSD("negative eigenrate")
    if np.max(np.abs(dag(v) @ v - np.eye(v.shape[1]))) > 1e-10:
        raise ModelEvaluation("frame is not unitary (isometric)")
    return np.clip(lam, 0.0, None), v


def gamma_at(model: DissipationModel, theta) -> np.ndarray:
    th = _theta(model, theta)
    if model.mode == "EIGENMODEL":
        lam, v = _user_eigen(model, th)
        return hermitian_part((v * lam) @ dag(v))
    g = _call(model.gamma, th).astype(complex)
    if g.shape != (model.R, model.R):
        raise ModelEvaluation(f"Gamma has shape {g.shape}, expected {(model.R, model.R)}")
    nrm = np.linalg.norm(g)
    if nrm > 0 and np.linalg.norm(g - dag(g)) > 1e-10 * nrm:
        raise ModelEvaluation("Gamma is not Hermitian")
    g = hermitian_part(g)
    w = np.linalg.eigvalsh(g)
    if w[0] < -1e-10 * max(abs(w[-1]), 0.0) - 1e-300:
        raise NotPSD(f"Gamma has eigenvalue {w[0]:.3e}")
    return g


def _gauge_fix(v: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(v), axis=0)
    piv = v[idx, np.arange(v.shape[1])]
    return v * (np.abs(piv) / np.where(piv == 0, 1, piv))


def eigenmodel_at(model: DissipationModel, theta) -> Eigenmodel:
    th = _theta(model, theta)
    if model.mode == "EIGENMODEL":
        lam, v = _user_eigen(model, th)
        return Eigenmodel(lam, v)
    g = gamma_at(model, th)
    w, v = np.linalg.eigh(g)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if model.thin:
        keep = w > THIN_TOL * scale
        if not keep.any():
            return Eigenmodel(np.zeros(0), np.zeros((model.R, 0), dtype=complex))
        first = int(np.argmax(keep))
        gaps = np.diff(w[max(first - 1, 0):]) if first > 0 else np.diff(w[first:])
        w, v = w[keep], v[:, keep]
    else:
        gaps = np.diff(w)
    if gaps.size and np.min(gaps) < GAP_TOL * scale:
        raise DegenerateSpectrum(f"eigen-gap {np.min(gaps):.3e} below {GAP_TOL:.0e}*|Gamma|")
    return Eigenmodel(np.clip(w, 0.0, None), _gauge_fix(v))


def _aligned(model, th, ref: np.ndarray) -> Eigenmodel:
    em = eigenmodel_at(model, th)
    if em.frame.shape != ref.shape:
        raise DegenerateSpectrum("rank of Gamma changes inside the difference stencil")
    ov = np.einsum("ik,ik->k", ref.conj(), em.frame)
    if np.any(np.abs(ov) < ALIGN_MIN):
        raise GaugeAlignment(f"column overlap {np.min(np.abs(ov)):.3f} < {ALIGN_MIN}")
    return Eigenmodel(em.rates, em.frame * (np.abs(ov) / ov).conj())


def eigen_derivatives(model: DissipationModel, theta, alpha: int):
    """(d rates, d frame) along parameter ``alpha`` in the parallel-transport gauge."""
    th = _theta(model, theta)
    em = eigenmodel_at(model, th)
    if model.mode == "EIGENMODEL":
        if model.drates is not None and model.dframe is not None:
            dl = np.real(_call(model.drates, th, alpha)).astype(float).ravel()
            dv = _call(model.dframe, th, alpha).astype(complex)
            return dl, dv
        h = model.step(th, alpha)
        e = np.zeros_like(th)
        e[alpha] = h
        lp, vp = _user_eigen(model, th + e)
        lm, vm = _user_eigen(model, th - e)
        return (lp - lm) / (2 * h), (vp - vm) / (2 * h)
    if model.dgamma is not None and not model.thin:
        dg = dgamma(model, th, alpha)
        lam, v = em
        x = dag(v) @ dg @ v
        diff = lam[None, :] - lam[:, None]
        off = np.zeros_like(x)
        mask = ~np.eye(len(lam), dtype=bool)
        off[mask] = x[mask] / diff[mask]
        return np.real(np.diag(x)).copy(), v @ off
    h = model.step(th, alpha)
    e = np.zeros_like(th)
    e[alpha] = h
    p = _aligned(model, th + e, em.frame)
    m = _aligned(model, th - e, em.frame)
    return (p.rates - m.rates) / (2 * h), (p.frame - m.frame) / (2 * h)


def dgamma(model: DissipationModel, theta, alpha: int) -> np.ndarray:
    th = _theta(model, theta)
    if model.mode == "GAMMA" and model.dgamma is not None:
        return hermitian_part(_call(model.dgamma, th, alpha).astype(complex))
    if model.mode == "EIGENMODEL" and model.drates is not None and model.dframe is not None:
        lam, v = _user_eigen(model, th)
        dl, dv = eigen_derivatives(model, th, alpha)
        t = (dv * lam) @ dag(v)
        return hermitian_part(t + dag(t) + (v * dl) @ dag(v))
    h = model.step(th, alpha)
    e = np.zeros_like(th)
    e[alpha] = h
    return hermitian_part((gamma_at(model, th + e) - gamma_at(model, th - e)) / (2 * h))


def connection(model: DissipationModel, theta, alpha: int) -> np.ndarray:
    """K_alpha = (d_alpha V) V^dagger."""
    em = eigenmodel_at(model, theta)
    _, dv = eigen_derivatives(model, theta, alpha)
    return dv @ dag(em.frame)


def rate_equation_residual(model: DissipationModel, theta, alpha: int) -> float:
    em = eigenmodel_at(model, theta)
    dl, dv = eigen_derivatives(model, theta, alpha)
    k = dv @ dag(em.frame)
    g = gamma_at(model, theta)
    res = dgamma(model, theta, alpha) - (em.frame * dl) @ dag(em.frame) - (k @ g - g @ k)
    return float(np.linalg.norm(res))


def amplitude(model: DissipationModel, theta) -> np.ndarray:
    """zeta = V Lambda^(1/2)."""
    lam, v = eigenmodel_at(model, theta)
    return v * np.sqrt(lam)


def amplitude_derivative(model: DissipationModel, theta, alpha: int) -> np.ndarray:
    lam, v = eigenmodel_at(model, theta)
    dl, dv = eigen_derivatives(model, theta, alpha)
    return dv * np.sqrt(lam) + v * sqrt_rate_derivative(lam, dl)


def sqrt_rate_derivative(lam, dlam, zero: float = 1e-14) -> np.ndarray:
    """d sqrt(gamma) = d gamma / (2 sqrt(gamma)), refusing zero rates that move."""
    lam = np.asarray(lam, dtype=float)
    dlam = np.asarray(dlam, dtype=float)
    out = np.zeros_like(lam)
    live = lam > zero
    bad = (~live) & (np.abs(dlam) > 0)
    if bad.any():
        raise ZeroRate(f"rate <= {zero:g} with nonzero derivative in channels {np.flatnonzero(bad).tolist()}")
    out[live] = dlam[live] / (2.0 * np.sqrt(lam[live]))
    return out


def _factor(g: np.ndarray) -> np.ndarray:
    # any square root of Gamma works for the generator; no gauge needed
    w, v = np.linalg.eigh(g)
    keep = w > THIN_TOL * max(float(np.max(np.abs(w))), 1e-300)
    return v[:, keep] * np.sqrt(w[keep])


class Generator:
    """Lindbladian at fixed theta, cached for repeated evaluation."""

    def __init__(self, model: DissipationModel, theta, frame: str = "canonical"):
        self.model = model
        self.frame = frame
        g = gamma_at(model, theta)
        self.gamma = g
        if frame == "canonical":
            self.ops = model.basis.combine(_factor(g))
            self.ops_right = self.ops
        elif frame == "physical":
            self.ops = model.basis.operators
            # sum_ij G_ij L_i rho L_j^dagger = sum_i L_i rho B_i^dagger
            self.ops_right = np.einsum("ij,jab->iab", g.conj(), self.ops, optimize=True)
        else:
            raise ValueError("frame must be 'canonical' or 'physical'")
        self.decay = np.einsum("iba,ibc->ac", self.ops_right.conj(), self.ops, optimize=True)

    def __call__(self, rho: np.ndarray, t: float = 0.0) -> np.ndarray:
        out = np.einsum("iab,bc,idc->ad", self.ops, rho, self.ops_right.conj(), optimize=True)
        out -= 0.5 * (self.decay @ rho + rho @ self.decay)
        if self.model.control is not None:
            h = np.asarray(self.model.control(t), dtype=complex)
            out += -1j * (h @ rho - rho @ h)
        return out


def lindblad_rhs(rho: np.ndarray, model: DissipationModel, theta, t: float = 0.0,
                 frame: str = "physical") -> np.ndarray:
    return Generator(model, theta, frame)(np.asarray(rho, dtype=complex), t)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n+1, D, D)
    theta: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def initial_state(psi0) -> np.ndarray:
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.ndim == 1:
        return projector(as_pure_state(psi0))
    return psi0


def propagate(psi0, model: DissipationModel, theta, t_final: float, steps: int = 200,
              check_every: int = 1) -> Trajectory:
    """Fixed-step RK4 from a pure state (or density matrix) over [0, t_final]."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if t_final < 0:
        raise ValueError("t_final must be nonnegative")
    th = _theta(model, theta)
    rho = initial_state(psi0)
    if rho.shape != (model.dim, model.dim):
        raise ValueError(f"state dimension {rho.shape[0]} does not match model dimension {model.dim}")
    if t_final == 0:
        return Trajectory(np.zeros(1), rho[None].copy(), th)
    gen = Generator(model, th)
    dt = t_final / steps
    times = np.linspace(0.0, t_final, steps + 1)
    states = np.empty((steps + 1,) + rho.shape, dtype=complex)
    states[0] = rho
    for n in range(steps):
        t = times[n]
        k1 = gen(rho, t)
        k2 = gen(rho + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = gen(rho + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = gen(rho + dt * k3, t + dt)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = hermitian_part(rho)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-10:
            raise StepTooLarge(f"trace drift {tr - 1.0:.3e} in step {n}")
        rho = rho / tr
        if (n + 1) % check_every == 0 or n == steps - 1:
            wmin = np.linalg.eigvalsh(rho)[0]
            if wmin < -POSITIVITY_FLOOR:
                raise StepTooLarge(f"state lost positivity ({wmin:.3e}) at t={times[n + 1]:.4g}; raise steps")
        states[n + 1] = rho
    return Trajectory(times, states, th)


def correlator(rho: np.ndarray, basis: JumpBasis, connected: bool = False) -> np.ndarray:
    """C_ij = Tr(L_i^dagger L_j rho), optionally with means removed."""
    return basis.correlator(np.asarray(rho, dtype=complex), connected)


def is_rate_only(model: DissipationModel, theta, tol: float = 1e-8) -> bool:
    return all(np.linalg.norm(connection(model, theta, a)) <= tol for a in range(model.n_params))
