"""Two incoherent point sources under a Gaussian point-spread function.

Each grid point u carries one photon mode; a time bin adds at most one
photon, so the jump basis is the set of creation operators on
vacuum (+) single photon.  The amplitude PSF is
phi(u) = (2 pi sigma^2)^(-1/4) exp(-u^2 / 4 sigma^2), sources sit at
xbar -+ d/2, and Gamma = (eps/2)(phi_1 phi_1^dagger + phi_2 phi_2^dagger).
Time is measured in bins: eps is the mean photon number per bin.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import GridTooCoarse
from ..model import CreationBasis, DissipationModel
from ..qfi import QFIMatrix, kernel_from_amplitudes, qfi_flow

OVERLAP_TOL = 1e-4
NORM_TOL = 1e-8


@dataclass(frozen=True)
class ImagingGrid:
    u_min: float = -8.0
    u_max: float = 8.0
    n_points: int = 257
    sigma: float = 1.0
    eps: float = 0.1
    xbar: float = 0.0
    d: float = 0.01

    def __post_init__(self):
        if self.n_points < 3 or not self.u_max > self.u_min:
            raise ValueError("grid needs n_points >= 3 and u_max > u_min")
        if self.sigma <= 0 or self.eps <= 0 or self.d < 0:
            raise ValueError("sigma and eps must be positive, d nonnegative")
        lo, hi = self.xbar - self.d / 2, self.xbar + self.d / 2
        if lo - 6 * self.sigma < self.u_min or hi + 6 * self.sigma > self.u_max:
            raise ValueError("grid must cover +-6 sigma around both sources")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.u_min, self.u_max, self.n_points)

    @property
    def spacing(self) -> float:
        return (self.u_max - self.u_min) / (self.n_points - 1)

    def refined(self) -> "ImagingGrid":
        return replace(self, n_points=2 * self.n_points - 1)

    def at(self, xbar: float, d: float) -> "ImagingGrid":
        return replace(self, xbar=float(xbar), d=float(d))


def psf_mode(grid: ImagingGrid, center: float) -> np.ndarray:
    """Discretized mode sqrt(du) phi(u - center)."""
    u = grid.points - center
    s = grid.sigma
    return np.sqrt(grid.spacing) * (2 * np.pi * s * s) ** -0.25 * np.exp(-u * u / (4 * s * s))


def overlap(d: float, sigma: float) -> float:
    return float(np.exp(-d * d / (8 * sigma * sigma)))


def source_modes(grid: ImagingGrid, xbar=None, d=None):
    xbar = grid.xbar if xbar is None else xbar
    d = grid.d if d is None else d
    return psf_mode(grid, xbar - d / 2), psf_mode(grid, xbar + d / 2)


def check_grid(grid: ImagingGrid) -> None:
    p1, p2 = source_modes(grid)
    for p in (p1, p2):
        if abs(np.linalg.norm(p) - 1.0) > NORM_TOL:
            raise GridTooCoarse(f"discretized mode norm {np.linalg.norm(p):.10f}")
    dev = abs(float(p1 @ p2) - overlap(grid.d, grid.sigma))
    if dev > OVERLAP_TOL:
        raise GridTooCoarse(f"discretized overlap off by {dev:.2e}")


def derivative_matrix(n: int, du: float) -> np.ndarray:
    """Central-difference d/du; real antisymmetric, so p = -i D is Hermitian."""
    return (np.eye(n, k=1) - np.eye(n, k=-1)) / (2 * du)


def imaging_gamma(grid: ImagingGrid, xbar: float, d: float) -> np.ndarray:
    p1, p2 = source_modes(grid, xbar, d)
    return 0.5 * grid.eps * (np.outer(p1, p1) + np.outer(p2, p2)).astype(complex)


def imaging_model(grid: ImagingGrid = ImagingGrid()) -> DissipationModel:
    """GAMMA-mode model over theta = (xbar, d) with a thin (rank <= 2) frame."""
    check_grid(grid)
    dmat = derivative_matrix(grid.n_points, grid.spacing)

    def gamma(th):
        return imaging_gamma(grid, th[0], th[1])

    def dgamma(th, a):
        p1, p2 = source_modes(grid, th[0], th[1])
        # d/dc phi(u - c) = -D phi
        s1, s2 = (-1.0, 1.0) if a == 0 else (0.5, -0.5)
        d1, d2 = s1 * dmat @ p1, s2 * dmat @ p2
        t = np.outer(d1, p1) + np.outer(d2, p2)
        return 0.5 * grid.eps * (t + t.T).astype(complex)

    labels = [f"u{i}" for i in range(grid.n_points)]
    return DissipationModel(CreationBasis(grid.n_points, labels), 2, gamma=gamma, dgamma=dgamma,
                            thin=True, name="imaging",
                            meta={"theta": np.array([grid.xbar, grid.d]), "grid": grid})


def imaging_eigenvalues(grid: ImagingGrid) -> tuple[np.ndarray, np.ndarray]:
    """(numerical top two eigenvalues ascending, analytic eps/2 (1 -+ S(d)))."""
    w = np.linalg.eigvalsh(imaging_gamma(grid, grid.xbar, grid.d))[-2:]
    s = overlap(grid.d, grid.sigma)
    return w, 0.5 * grid.eps * np.array([1 - s, 1 + s])


def imaging_amplitudes(grid: ImagingGrid):
    """(zeta, [d_xbar zeta, d_d zeta]) with zeta = (sqrt(eps)/2)[phi1 - phi2, phi1 + phi2].

    The columns are V Lambda^(1/2) in ascending-rate order; this form stays
    smooth as d -> 0 where the frame itself does not.  Centroid motion is a
    translation, so d_xbar zeta = -D zeta, i.e. the connection is -D = -i p.
    """
    p1, p2 = source_modes(grid)
    dmat = derivative_matrix(grid.n_points, grid.spacing)
    c = 0.5 * np.sqrt(grid.eps)
    zeta = c * np.stack([p1 - p2, p1 + p2], axis=1)
    dx = -dmat @ zeta
    dp1, dp2 = 0.5 * dmat @ p1, -0.5 * dmat @ p2
    dd = c * np.stack([dp1 - dp2, dp1 + dp2], axis=1)
    return zeta.astype(complex), np.array([dx, dd], dtype=complex)


def imaging_qfi(grid: ImagingGrid = ImagingGrid(), nu: float = 1.0) -> QFIMatrix:
    """nu times the QFI flow at C = I over (xbar, d).  ``horizon`` holds nu."""
    check_grid(grid)
    _, dz = imaging_amplitudes(grid)
    ks = kernel_from_amplitudes(dz, [grid.xbar, grid.d])
    f = nu * qfi_flow(ks, np.eye(grid.n_points, dtype=complex))
    return QFIMatrix(f, float(nu))


def imaging_limit(grid: ImagingGrid, nu: float = 1.0) -> np.ndarray:
    return nu * grid.eps / grid.sigma ** 2 * np.diag([1.0, 0.25])


def p2_trace(grid: ImagingGrid) -> float:
    """4 Tr(p^2 Gamma) with p taken spectrally (FFT), independent of D."""
    p1, p2 = source_modes(grid)
    k = 2 * np.pi * np.fft.fftfreq(grid.n_points, d=grid.spacing)
    total = 0.0
    for p in (p1, p2):
        ph = np.fft.fft(p)
        total += np.sum(k * k * np.abs(ph) ** 2) / np.sum(np.abs(ph) ** 2)
    return float(4 * 0.5 * grid.eps * total)
