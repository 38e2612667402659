"""Canonical JSON reports.

Reports are written with sorted keys and every float rounded to six
significant digits, so saving the same report twice gives identical bytes
and reloading a saved report reproduces it exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from .collider import ColliderParams
from .data_io import atomic_write
from .estimator import ConsistencyScore, FitResult
from .signatures import SignatureReport
from .tasks import TASK_IDS, TaskId

SIG_DIGITS = 6


def round_sig(value: float) -> float:
    if not math.isfinite(value):
        raise ValueError(f"cannot serialize non-finite value {value!r}")
    return float(f"{value:.{SIG_DIGITS}g}")


def canonicalize(obj: Any) -> Any:
    """Round floats recursively; tuples become lists."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return round_sig(obj)
    if isinstance(obj, dict):
        return {str(k): canonicalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonicalize(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(canonicalize(obj), sort_keys=True, indent=2) + "\n"


def _by_task(values) -> dict[str, Any]:
    if isinstance(values, dict):
        return {str(TaskId(t)): v for t, v in values.items()}
    return {str(t): v for t, v in zip(TASK_IDS, values)}


def _from_task_map(mapping) -> dict[TaskId, Any]:
    return {TaskId.parse(k): v for k, v in mapping.items()}


def _task_vector(mapping) -> tuple[float, ...]:
    m = _from_task_map(mapping)
    return tuple(float(m[t]) for t in TASK_IDS)


def fit_to_dict(fit: FitResult) -> dict:
    p = fit.params
    return {
        "variant": fit.variant,
        "params": {"b": p.b, "m1": p.m1, "m2": p.m2, "pC": p.pC},
        "rss": fit.rss,
        "aic": fit.aic,
        "predictions": _by_task(fit.predictions),
    }


def fit_from_dict(d: dict) -> FitResult:
    p = d["params"]
    return FitResult(
        d["variant"], ColliderParams(p["b"], p["m1"], p["m2"], p["pC"]),
        float(d["rss"]), float(d["aic"]), _task_vector(d["predictions"]),
    )


def signature_to_dict(sig: SignatureReport) -> dict:
    d = {
        "ea": sig.ea,
        "mv_magnitude": sig.mv_magnitude,
        "mv_flag": sig.mv_flag,
        "epsilon": sig.epsilon,
        "ci": {str(t): list(ci) for t, ci in sig.ci.items()},
    }
    if sig.loocv_r2 is not None:
        d["loocv_r2"] = sig.loocv_r2
    if sig.spearman_vs_reference is not None:
        d["spearman_vs_reference"] = sig.spearman_vs_reference
    return d


def signature_from_dict(d: dict) -> SignatureReport:
    return SignatureReport(
        ea=float(d["ea"]),
        mv_magnitude=float(d["mv_magnitude"]),
        mv_flag=bool(d["mv_flag"]),
        loocv_r2=d.get("loocv_r2"),
        ci={t: (float(lo), float(hi)) for t, (lo, hi) in _from_task_map(d["ci"]).items()},
        spearman_vs_reference=d.get("spearman_vs_reference"),
        epsilon=float(d["epsilon"]),
    )


@dataclass
class GroupReport:
    """Everything computed for one (agent, prompt style, domain) group."""

    agent_id: str
    prompt_style: str
    content_domain: str
    fit: FitResult
    aic_by_variant: dict[str, float]
    observed_means: tuple[float, ...]
    n_responses: tuple[int, ...]
    consistency: Optional[ConsistencyScore] = None
    signature: Optional[SignatureReport] = None
    reference: Optional[str] = None
    seed: int = 0

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.agent_id, self.prompt_style, self.content_domain)

    @property
    def label(self) -> str:
        return "/".join(self.key)

    def to_dict(self) -> dict:
        d = {
            "kind": "group",
            "agent_id": self.agent_id,
            "prompt_style": self.prompt_style,
            "content_domain": self.content_domain,
            "fit": fit_to_dict(self.fit),
            "aic_by_variant": dict(self.aic_by_variant),
            "observed": {
                "mean": _by_task(self.observed_means),
                "n_responses": _by_task(self.n_responses),
            },
            "seed": self.seed,
        }
        if self.consistency is not None:
            d["consistency"] = {
                "loocv_r2": self.consistency.loocv_r2,
                "variant": self.consistency.variant,
                "heldout_predictions": _by_task(self.consistency.per_task_heldout_prediction),
            }
        if self.signature is not None:
            d["signature"] = signature_to_dict(self.signature)
        if self.reference is not None:
            d["reference"] = self.reference
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GroupReport":
        consistency = None
        if "consistency" in d:
            c = d["consistency"]
            consistency = ConsistencyScore(
                float(c["loocv_r2"]), _task_vector(c["heldout_predictions"]), c["variant"])
        return cls(
            agent_id=d["agent_id"],
            prompt_style=d["prompt_style"],
            content_domain=d["content_domain"],
            fit=fit_from_dict(d["fit"]),
            aic_by_variant={k: float(v) for k, v in d["aic_by_variant"].items()},
            observed_means=_task_vector(d["observed"]["mean"]),
            n_responses=tuple(int(v) for v in _task_vector(d["observed"]["n_responses"])),
            consistency=consistency,
            signature=signature_from_dict(d["signature"]) if "signature" in d else None,
            reference=d.get("reference"),
            seed=int(d.get("seed", 0)),
        )


@dataclass
class ComparisonReport:
    a: GroupReport
    b: GroupReport
    spearman: float
    deltas: tuple[float, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "kind": "comparison",
            "spearman": self.spearman,
            "deltas": _by_task(self.deltas),
            "a": self.a.to_dict(),
            "b": self.b.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ComparisonReport":
        return cls(GroupReport.from_dict(d["a"]), GroupReport.from_dict(d["b"]),
                   float(d["spearman"]), _task_vector(d["deltas"]))


def canonical(report):
    """The value ``load_report`` returns after ``save_report(report)``."""
    return _from_dict(json.loads(dumps(report.to_dict())))


def _from_dict(d: dict):
    if d.get("kind") == "comparison":
        return ComparisonReport.from_dict(d)
    return GroupReport.from_dict(d)


def save_report(report, path) -> None:
    atomic_write(path, dumps(report.to_dict()))


def load_report(path):
    with open(path) as fh:
        return _from_dict(json.load(fh))


def save_reports(reports, path) -> None:
    """Several group reports in one canonical JSON document."""
    atomic_write(path, dumps({"kind": "collection", "reports": [r.to_dict() for r in reports]}))


def load_reports(path) -> list:
    with open(path) as fh:
        d = json.load(fh)
    if d.get("kind") == "collection":
        return [_from_dict(r) for r in d["reports"]]
    return [_from_dict(d)]
