"""Per-group analysis: model selection, consistency and signatures."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .estimator import loocv_r2, select_both
from .observations import TaskObservations
from .reports import ComparisonReport, GroupReport
from .signatures import DEFAULT_BOOTSTRAP, DEFAULT_EPSILON, signature_report, spearman
from .tasks import TASK_IDS


def analyze_group(
    key: tuple[str, str, str],
    observations: TaskObservations,
    seed: int = 0,
    diagnose: bool = False,
    epsilon: float = DEFAULT_EPSILON,
    bootstrap: int = DEFAULT_BOOTSTRAP,
    reference: Optional[tuple[str, TaskObservations]] = None,
) -> GroupReport:
    """Fit both variants, keep the AIC winner and score it by LOOCV.

    With ``diagnose`` the judgment-level signatures are attached as well.
    """
    label = "/".join(key)
    observations.require(context=label)
    sym, asym = select_both(observations, seed)
    best = sym if sym.aic <= asym.aic else asym
    consistency = loocv_r2(observations, best.variant, seed)
    signature = None
    if diagnose:
        signature = signature_report(
            observations,
            loocv_r2=consistency.loocv_r2,
            reference=reference[1] if reference else None,
            epsilon=epsilon,
            B=bootstrap,
            seed=seed,
        )
    return GroupReport(
        agent_id=key[0],
        prompt_style=key[1],
        content_domain=key[2],
        fit=best,
        aic_by_variant={sym.variant: sym.aic, asym.variant: asym.aic},
        observed_means=tuple(observations.means()),
        n_responses=tuple(observations.n_responses(t) for t in TASK_IDS),
        consistency=consistency,
        signature=signature,
        reference=reference[0] if reference else None,
        seed=seed,
    )


def compare_groups(a: GroupReport, b: GroupReport) -> ComparisonReport:
    rho = spearman(a.observed_means, b.observed_means)
    deltas = tuple(np.subtract(a.observed_means, b.observed_means))
    return ComparisonReport(a, b, rho, deltas)
