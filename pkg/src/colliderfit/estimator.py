"""Least-squares fits of the noisy-OR collider to task means.

Two nested variants are fitted: ``symmetric`` (b, m, pC) with one shared
causal strength and ``asymmetric`` (b, m1, m2, pC).  Fits are selected by
AIC and scored by leave-one-task-out cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .collider import ColliderParams
from .observations import TaskObservations
from .tasks import N_TASKS, TASK_IDS, predict_all, predict_batch

SYMMETRIC = "symmetric"
ASYMMETRIC = "asymmetric"
VARIANTS = (SYMMETRIC, ASYMMETRIC)
N_PARAMS = {SYMMETRIC: 3, ASYMMETRIC: 4}

LATTICE_STEP = 0.1
N_LATTICE_STARTS = 4
N_RANDOM_STARTS = 2
RSS_FLOOR = 1e-12
# keeps the local search strictly inside the box, away from impossible evidence
_EDGE = 1e-9


class DegenerateVarianceError(ValueError):
    """Raised when all observed task means are identical."""


@dataclass(frozen=True)
class FitResult:
    variant: str
    params: ColliderParams
    rss: float
    aic: float
    predictions: tuple[float, ...]

    @property
    def k(self) -> int:
        return N_PARAMS[self.variant]


@dataclass(frozen=True)
class ConsistencyScore:
    loocv_r2: float
    per_task_heldout_prediction: tuple[float, ...]
    variant: str


def aic(rss: float, n: int, k: int) -> float:
    """Gaussian-residual AIC, n ln(RSS/n) + 2k, constants dropped."""
    return n * math.log(max(rss / n, RSS_FLOOR)) + 2 * k


def _to_full(x: np.ndarray, variant: str) -> np.ndarray:
    """Map free parameters to (b, m1, m2, pC) along the last axis."""
    if variant == SYMMETRIC:
        return np.stack([x[..., 0], x[..., 1], x[..., 1], x[..., 2]], axis=-1)
    return x


def _to_params(x, variant: str) -> ColliderParams:
    b, m1, m2, pC = (float(v) for v in _to_full(np.clip(np.asarray(x, float), 0.0, 1.0), variant))
    return ColliderParams(b, m1, m2, pC)


def _lattice(variant: str) -> np.ndarray:
    axis = np.linspace(0.0, 1.0, int(round(1 / LATTICE_STEP)) + 1)
    grids = np.meshgrid(*([axis] * N_PARAMS[variant]), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


_LATTICES = {v: _lattice(v) for v in VARIANTS}


def _objective(x: np.ndarray, y: np.ndarray, mask: np.ndarray, variant: str) -> np.ndarray:
    """RSS over masked tasks; +inf where some evidence is impossible."""
    full = _to_full(x, variant)
    pred = predict_batch(full[..., 0], full[..., 1], full[..., 2], full[..., 3])
    rss = np.sum((pred[..., mask] - y[mask]) ** 2, axis=-1)
    return np.where(np.isfinite(rss), rss, np.inf)


def _refine(x0, y, mask, variant):
    k = N_PARAMS[variant]
    lo, hi = _EDGE, 1.0 - _EDGE

    def predict(x):
        full = _to_full(x, variant)
        return predict_batch(full[..., 0], full[..., 1], full[..., 2], full[..., 3])[..., mask]

    def residuals(x):
        r = predict(x) - y[mask]
        return np.where(np.isfinite(r), r, 1e3)

    def jacobian(x):
        # forward differences in one batched call; step flips sign at the upper bound
        h = 1e-7 * np.where(x + 1e-7 > hi, -1.0, 1.0)
        points = np.vstack([x, x + np.diag(h)])
        pred = predict(points)
        jac = (pred[1:] - pred[0]) / h[:, None]
        return np.where(np.isfinite(jac), jac, 0.0).T

    x0 = np.clip(x0, lo, hi)
    sol = least_squares(
        residuals, x0, jac=jacobian, bounds=(np.full(k, lo), np.full(k, hi)),
        method="trf", xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=400,
    )
    x = np.clip(sol.x, lo, hi)
    return x, float(_objective(x, y, mask, variant))


def _fit_vector(y, mask, variant, seed=0, extra_starts=()):
    """Multi-start fit on the tasks selected by ``mask``; returns (x, rss)."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    lattice = _LATTICES[variant]
    values = _objective(lattice, y, mask, variant)
    order = np.argsort(values, kind="stable")[:N_LATTICE_STARTS]
    rng = np.random.default_rng(seed)
    starts = [lattice[i] for i in order]
    starts += [np.asarray(s, float) for s in extra_starts]
    starts += list(rng.uniform(0.05, 0.95, size=(N_RANDOM_STARTS, N_PARAMS[variant])))

    best_x, best_rss = None, np.inf
    for x0 in starts:
        x, rss = _refine(x0, y, mask, variant)
        if rss < best_rss:
            best_x, best_rss = x, rss
    return best_x, best_rss


def _result(x, y, variant) -> FitResult:
    params = _to_params(x, variant)
    pred = predict_all(params)
    rss = float(np.sum((pred - y) ** 2))
    return FitResult(variant, params, rss, aic(rss, N_TASKS, N_PARAMS[variant]), tuple(pred))


def _embed_symmetric(fit: FitResult) -> np.ndarray:
    return np.array(fit.params.as_tuple())


def fit(observations: TaskObservations, variant: str = ASYMMETRIC, seed: int = 0,
        _symmetric: Optional[FitResult] = None) -> FitResult:
    """Fit one model variant to the eleven task means.

    The asymmetric fit is also started from the symmetric optimum, so its
    RSS never exceeds the symmetric one.
    """
    y = observations.means()
    mask = np.ones(N_TASKS, bool)
    extra = ()
    if variant == ASYMMETRIC:
        sym = _symmetric or fit(observations, SYMMETRIC, seed)
        extra = (_embed_symmetric(sym),)
    x, _ = _fit_vector(y, mask, variant, seed, extra)
    result = _result(x, y, variant)
    if variant == ASYMMETRIC and sym.rss < result.rss:
        # symmetric optimum is a point of the asymmetric family
        result = FitResult(ASYMMETRIC, sym.params, sym.rss,
                           aic(sym.rss, N_TASKS, 4), sym.predictions)
    return result


def select_by_aic(observations: TaskObservations, seed: int = 0) -> FitResult:
    """Fit both variants and return the lower-AIC one (ties go to symmetric)."""
    fits = select_both(observations, seed)
    return fits[0] if fits[0].aic <= fits[1].aic else fits[1]


def select_both(observations: TaskObservations, seed: int = 0) -> tuple[FitResult, FitResult]:
    sym = fit(observations, SYMMETRIC, seed)
    asym = fit(observations, ASYMMETRIC, seed, _symmetric=sym)
    return sym, asym


def loocv_r2(observations: TaskObservations, variant: str, seed: int = 0) -> ConsistencyScore:
    """Leave-one-task-out R^2 with the model variant held fixed.

    Raises:
        DegenerateVarianceError: if all eleven means are equal.
    """
    y = observations.means()
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateVarianceError("all task means are identical; R^2 is undefined")
    heldout = np.empty(N_TASKS)
    for i in range(N_TASKS):
        mask = np.ones(N_TASKS, bool)
        mask[i] = False
        extra = ()
        if variant == ASYMMETRIC:
            xs, _ = _fit_vector(y, mask, SYMMETRIC, seed)
            extra = (_to_full(xs, SYMMETRIC),)
        x, _ = _fit_vector(y, mask, variant, seed, extra)
        heldout[i] = predict_all(_to_params(x, variant))[i]
    ss_res = float(np.sum((y - heldout) ** 2))
    return ConsistencyScore(1.0 - ss_res / ss_tot, tuple(heldout), variant)


