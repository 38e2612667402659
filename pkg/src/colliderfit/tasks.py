"""The eleven collider inference tasks, numbered I through XI.

C1 is always the query cause.  Tasks I-III predict the effect, IV/V probe
independence of the causes (Markov pair), and VI-XI are diagnostic
inferences from the effect, with VI/VIII forming the explaining-away pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .collider import ColliderParams, NodeAssignment, conditional


class TaskId(IntEnum):
    I = 1
    II = 2
    III = 3
    IV = 4
    V = 5
    VI = 6
    VII = 7
    VIII = 8
    IX = 9
    X = 10
    XI = 11

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, text: str) -> "TaskId":
        try:
            return cls[str(text).strip().upper()]
        except KeyError:
            raise ValueError(f"unknown task numeral {text!r}") from None


TASK_IDS = tuple(TaskId)
N_TASKS = len(TASK_IDS)


@dataclass(frozen=True)
class TaskDefinition:
    id: TaskId
    target: tuple[str, int]
    evidence: NodeAssignment

    def describe(self) -> str:
        node, value = self.target
        given = ", ".join(f"{k}={v}" for k, v in self.evidence.observed().items())
        return f"Pr({node}={value} | {given})"


_BANK = {
    TaskId.I: (("E", 1), NodeAssignment(c1=1, c2=1)),
    TaskId.II: (("E", 1), NodeAssignment(c1=1)),
    TaskId.III: (("E", 1), NodeAssignment(c1=1, c2=0)),
    TaskId.IV: (("C1", 1), NodeAssignment(c2=1)),
    TaskId.V: (("C1", 1), NodeAssignment(c2=0)),
    TaskId.VI: (("C1", 1), NodeAssignment(e=1, c2=1)),
    TaskId.VII: (("C1", 1), NodeAssignment(e=1)),
    TaskId.VIII: (("C1", 1), NodeAssignment(e=1, c2=0)),
    TaskId.IX: (("C1", 1), NodeAssignment(e=0, c2=1)),
    TaskId.X: (("C1", 1), NodeAssignment(e=0)),
    TaskId.XI: (("C1", 1), NodeAssignment(e=0, c2=0)),
}

TASKS = {tid: TaskDefinition(tid, *_BANK[tid]) for tid in TASK_IDS}


def task_query(task_id: TaskId) -> TaskDefinition:
    return TASKS[TaskId(task_id)]


def predict_all(params: ColliderParams) -> np.ndarray:
    """Model predictions for all eleven tasks, ordered I..XI."""
    return np.array(
        [conditional(params, TASKS[t].target, TASKS[t].evidence).probability for t in TASK_IDS]
    )


def predict_batch(b, m1, m2, pC) -> np.ndarray:
    """Vectorized closed-form predictions, shape ``(..., 11)``.

    Entries whose evidence has probability zero are NaN.  This is the path
    the estimator uses; ``predict_all`` is the reference path.
    """
    b, m1, m2, p = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (b, m1, m2, pC)))
    q = 1.0 - p
    nb = 1.0 - b
    f00 = b
    f10 = b + nb * (1.0 - (1.0 - m1))
    f01 = b + nb * (1.0 - (1.0 - m2))
    f11 = b + nb * (1.0 - (1.0 - m1) * (1.0 - m2))

    # diagnostic inference: joint weights of (C1, C2, E) states
    a11, a01 = p * p * f11, q * p * f01
    a10, a00 = p * q * f10, q * q * f00
    z11, z01 = p * p * (1.0 - f11), q * p * (1.0 - f01)
    z10, z00 = p * q * (1.0 - f10), q * q * (1.0 - f00)
    # effect prediction keeps the evidence weights so impossible evidence shows up
    num = np.stack([
        p * p * f11, p * (p * f11 + q * f10), p * q * f10, p, p,
        a11, a11 + a10, a10, z11, z11 + z10, z10,
    ], axis=-1)
    den = np.stack([
        p * p, p, p * q, np.ones_like(p), np.ones_like(p),
        a11 + a01, a11 + a10 + a01 + a00, a10 + a00,
        z11 + z01, z11 + z10 + z01 + z00, z10 + z00,
    ], axis=-1)
    # the Markov pair is the prior itself; only its evidence can be impossible
    den[..., 3] = np.where(p > 0.0, 1.0, 0.0)
    den[..., 4] = np.where(q > 0.0, 1.0, 0.0)
    ok = den > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ok, num / np.where(ok, den, 1.0), np.nan)
