"""Shared helpers for the scenario constructors."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..model import DissipationModel, JumpBasis


def rate_only_model(basis: JumpBasis, n_rates: Optional[int] = None, name: str = "",
                    meta: Optional[dict] = None) -> DissipationModel:
    """Eigenmodel with Gamma = diag(theta) in the given jump basis.

    Parameters are the rates themselves, so d_a gamma_k = delta_ak and the
    frame never moves.
    """
    r = basis.R if n_rates is None else n_rates
    eye = np.eye(r)

    def rates(th):
        return np.asarray(th, dtype=float)

    def frame(th):
        return eye

    def drates(th, a):
        return eye[a]

    def dframe(th, a):
        return np.zeros((r, r))

    return DissipationModel(basis, r, rates=rates, frame=frame, drates=drates, dframe=dframe,
                            name=name, meta=dict(meta or {}))


def check_rates(rates: Sequence[float], strict: bool = False) -> np.ndarray:
    g = np.asarray(rates, dtype=float).ravel()
    if not np.all(np.isfinite(g)):
        raise ValueError("rates must be finite")
    if strict and np.any(g <= 0):
        raise ValueError("rates must be positive")
    if np.any(g < 0):
        raise ValueError("rates must be nonnegative")
    return g
