"""Leaky noisy-OR collider models of causal probability judgments."""

__version__ = "0.1.0"

from .collider import (ColliderParams, ImpossibleEvidenceError, NodeAssignment, QueryResult,
                       conditional, effect_cpd, joint_probability)
from .estimator import (ASYMMETRIC, SYMMETRIC, ConsistencyScore, DegenerateVarianceError,
                        FitResult, fit, loocv_r2, select_by_aic)
from .observations import MissingTaskError, TaskObservations
from .signatures import (ConstantVectorError, SignatureReport, bootstrap_ci, explaining_away,
                         markov_violation, spearman)
from .tasks import TASK_IDS, TaskDefinition, TaskId, predict_all, predict_batch, task_query
