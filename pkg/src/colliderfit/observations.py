"""Per-task judgments for one agent under one prompt style."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .tasks import TASK_IDS, TaskId


class MissingTaskError(ValueError):
    """Raised when an operation needs a task the observations lack."""

    def __init__(self, missing, context: str = ""):
        self.missing = tuple(TaskId(t) for t in missing)
        names = ", ".join(str(t) for t in self.missing)
        prefix = f"{context}: " if context else ""
        super().__init__(f"{prefix}missing task(s) {names}")


@dataclass
class TaskObservations:
    """Normalized responses in [0, 1], keyed by task.

    Raw responses are kept (not just means) so they can be bootstrapped.
    """

    responses: dict[TaskId, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for tid, values in self.responses.items():
            values = tuple(float(v) for v in values)
            if not values:
                raise ValueError(f"task {TaskId(tid)} has no responses")
            if any(not 0.0 <= v <= 1.0 for v in values):
                raise ValueError(f"task {TaskId(tid)} has a response outside [0, 1]")
            clean[TaskId(tid)] = values
        self.responses = dict(sorted(clean.items()))

    @classmethod
    def from_means(cls, means: Sequence[float] | Mapping) -> "TaskObservations":
        """One pseudo-response per task; a sequence is read in I..XI order."""
        if isinstance(means, Mapping):
            items = {TaskId.parse(k) if isinstance(k, str) else TaskId(k): v for k, v in means.items()}
        else:
            means = list(means)
            if len(means) != len(TASK_IDS):
                raise ValueError(f"expected {len(TASK_IDS)} means, got {len(means)}")
            items = dict(zip(TASK_IDS, means))
        return cls({t: (float(v),) for t, v in items.items()})

    @property
    def tasks(self) -> tuple[TaskId, ...]:
        return tuple(self.responses)

    def require(self, tasks=TASK_IDS, context: str = "") -> None:
        missing = [t for t in tasks if t not in self.responses]
        if missing:
            raise MissingTaskError(missing, context)

    @property
    def is_complete(self) -> bool:
        return all(t in self.responses for t in TASK_IDS)

    def mean(self, task: TaskId) -> float:
        task = TaskId(task)
        if task not in self.responses:
            raise MissingTaskError([task])
        return float(np.mean(self.responses[task]))

    def n_responses(self, task: TaskId) -> int:
        return len(self.responses[TaskId(task)])

    def means(self) -> np.ndarray:
        """Mean judgments for all eleven tasks, ordered I..XI."""
        self.require()
        return np.array([self.mean(t) for t in TASK_IDS])
