"""Log-log scaling fits over system size."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import FitDegenerate


@dataclass
class ScalingReport:
    sizes: list
    values: list
    fitted_exponent: float
    fit_residual: float
    label: str = ""
    meta: dict = field(default_factory=dict)

    def check(self, reference: float, tolerance: float) -> dict:
        ok = abs(self.fitted_exponent - reference) <= tolerance
        return {"name": self.label or "exponent", "value": self.fitted_exponent,
                "reference": reference, "tolerance": tolerance, "pass": bool(ok),
                "residual": self.fit_residual}

    def rows(self):
        return list(zip(self.sizes, self.values))


def fit_exponent(sizes: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of log(values) on log(sizes), plus the RMS residual."""
    x = np.asarray(sizes, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise FitDegenerate("need at least two (size, value) pairs")
    if np.any(y <= 0) or np.any(x <= 0) or not np.all(np.isfinite(y)):
        raise FitDegenerate("log-log fit needs positive finite sizes and values")
    if np.unique(x).size < 2:
        raise FitDegenerate("sizes must not all coincide")
    coef, res, *_ = np.polyfit(np.log(x), np.log(y), 1, full=True)
    rms = float(np.sqrt(res[0] / x.size)) if res.size else 0.0
    return float(coef[0]), rms


def scaling_study(family: Callable, sizes: Sequence[int], figure_of_merit: Optional[Callable] = None,
                  label: str = "", workers: Optional[int] = None) -> ScalingReport:
    """Evaluate figure_of_merit(family(n)) for every size and fit the exponent.

    Sizes run on a thread pool; numpy releases the GIL in the heavy parts
    and results are collected in size order, so the report does not depend
    on scheduling.
    """
    sizes = [int(n) for n in sizes]
    if len(sizes) < 4:
        raise ValueError("scaling_study needs at least 4 sizes")
    fom = figure_of_merit if figure_of_merit is not None else (lambda x: x)

    def one(n):
        return float(fom(family(n)))

    workers = workers or min(len(sizes), os.cpu_count() or 1)
    if workers <= 1:
        values = [one(n) for n in sizes]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, sizes))
    slope, rms = fit_exponent(sizes, values)
    return ScalingReport(sizes, values, slope, rms, label)


def channel_count(N: int, q: Sequence[int]) -> int:
    """sum_k q_k binom(N, k), k = 0..K: the K-body channel budget."""
    return int(sum(int(qk) * comb(N, k) for k, qk in enumerate(q)))


def local_slope(sizes: Sequence[float], values: Sequence[float]) -> float:
    """Slope between the last two points, a cheap proxy for the asymptotic exponent."""
    x = np.log(np.asarray(sizes[-2:], dtype=float))
    y = np.log(np.asarray(values[-2:], dtype=float))
    return float((y[1] - y[0]) / (x[1] - x[0]))
