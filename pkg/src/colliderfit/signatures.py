"""Judgment-level reasoning diagnostics.

Explaining away and Markov violations are read off the raw judgment means,
never off fitted predictions: the fitted model is Markov by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .observations import TaskObservations
from .tasks import TASK_IDS, TaskId

DEFAULT_EPSILON = 0.05
DEFAULT_BOOTSTRAP = 1000


class ConstantVectorError(ValueError):
    """Raised when a rank correlation is requested for a constant vector."""


@dataclass
class SignatureReport:
    ea: float
    mv_magnitude: float
    mv_flag: bool
    loocv_r2: Optional[float]
    ci: dict[TaskId, tuple[float, float]] = field(default_factory=dict)
    spearman_vs_reference: Optional[float] = None
    epsilon: float = DEFAULT_EPSILON


def explaining_away(observations: TaskObservations) -> float:
    """Mean judgment of VIII minus VI; positive means explaining away."""
    observations.require((TaskId.VI, TaskId.VIII), "explaining away")
    return observations.mean(TaskId.VIII) - observations.mean(TaskId.VI)


def markov_violation(observations: TaskObservations, epsilon: float = DEFAULT_EPSILON):
    """Return ``(|IV - V|, |IV - V| > epsilon)``."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon={epsilon!r} lies outside [0, 1]")
    observations.require((TaskId.IV, TaskId.V), "Markov violation")
    magnitude = abs(observations.mean(TaskId.IV) - observations.mean(TaskId.V))
    return magnitude, magnitude > epsilon


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """Spearman rank correlation, ties receiving their average rank."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("spearman needs two vectors of equal length")
    ra = rankdata(a) - (len(a) + 1) / 2.0
    rb = rankdata(b) - (len(b) + 1) / 2.0
    sa, sb = np.sum(ra * ra), np.sum(rb * rb)
    if sa == 0.0 or sb == 0.0:
        raise ConstantVectorError("rank correlation is undefined for a constant vector")
    rho = float(np.sum(ra * rb) / np.sqrt(sa * sb))
    return max(-1.0, min(1.0, rho))


def bootstrap_ci(
    responses: Mapping[TaskId, Sequence[float]],
    B: int = DEFAULT_BOOTSTRAP,
    level: float = 0.95,
    seed: int = 0,
) -> dict[TaskId, tuple[float, float]]:
    """Percentile bootstrap interval of each task's mean response.

    Tasks are resampled in I..XI order from a single generator, so the
    result is fixed by ``seed``.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    tail = 100.0 * (1.0 - level) / 2.0
    out = {}
    for task in sorted(responses, key=TaskId):
        values = np.asarray(responses[task], dtype=float)
        idx = rng.integers(0, len(values), size=(B, len(values)))
        means = values[idx].mean(axis=1)
        lo, hi = np.percentile(means, [tail, 100.0 - tail])
        # percentiles of identical floats can drift by an ulp around the mean
        m = values.mean()
        out[TaskId(task)] = (float(min(lo, m)), float(max(hi, m)))
    return out


def signature_report(
    observations: TaskObservations,
    loocv_r2: Optional[float] = None,
    reference: Optional[TaskObservations] = None,
    epsilon: float = DEFAULT_EPSILON,
    B: int = DEFAULT_BOOTSTRAP,
    seed: int = 0,
) -> SignatureReport:
    magnitude, flag = markov_violation(observations, epsilon)
    rho = None
    if reference is not None:
        rho = spearman(observations.means(), reference.means())
    return SignatureReport(
        ea=explaining_away(observations),
        mv_magnitude=magnitude,
        mv_flag=flag,
        loocv_r2=loocv_r2,
        ci=bootstrap_ci(observations.responses, B=B, seed=seed),
        spearman_vs_reference=rho,
        epsilon=epsilon,
    )


