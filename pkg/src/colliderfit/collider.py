"""Exact inference on the two-cause collider C1 -> E <- C2.

The effect node uses a leaky noisy-OR conditional distribution and both
causes share one prior probability.  With only eight joint states there is
no need for log-space arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Optional

NODES = ("C1", "C2", "E")
_INDEX = {n: i for i, n in enumerate(NODES)}
_ASSIGNMENTS = {k: tuple(product((0, 1), repeat=k)) for k in range(3)}


class ImpossibleEvidenceError(ValueError):
    """Raised when conditioning on evidence with zero probability."""


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name}={value!r} lies outside [0, 1]")


def _check_binary(name: str, value: int) -> None:
    if value not in (0, 1):
        raise ValueError(f"{name}={value!r} is not binary")


@dataclass(frozen=True)
class ColliderParams:
    """Parameter vector (b, m1, m2, pC) of the leaky noisy-OR collider.

    Attributes:
        b: leak, the probability of the effect with no cause present.
        m1: causal strength of C1.
        m2: causal strength of C2.
        pC: prior probability shared by both causes.
    """

    b: float
    m1: float
    m2: float
    pC: float

    def __post_init__(self):
        for name in ("b", "m1", "m2", "pC"):
            value = float(getattr(self, name))
            _check_unit(name, value)
            object.__setattr__(self, name, value)

    @classmethod
    def symmetric(cls, b: float, m: float, pC: float) -> "ColliderParams":
        return cls(b, m, m, pC)

    @property
    def is_symmetric(self) -> bool:
        return self.m1 == self.m2

    def swapped(self) -> "ColliderParams":
        """Relabel the causes (m1 <-> m2)."""
        return ColliderParams(self.b, self.m2, self.m1, self.pC)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.b, self.m1, self.m2, self.pC)


@dataclass(frozen=True)
class NodeAssignment:
    """Partial assignment of the three nodes; ``None`` means unobserved."""

    c1: Optional[int] = None
    c2: Optional[int] = None
    e: Optional[int] = None
    _observed: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("c1", "c2", "e"):
            value = getattr(self, name)
            if value is not None:
                _check_binary(name, value)
        pairs = tuple((n, getattr(self, n.lower())) for n in NODES)
        object.__setattr__(self, "_observed", tuple(p for p in pairs if p[1] is not None))

    def get(self, node: str) -> Optional[int]:
        return getattr(self, node.lower())

    def observed(self) -> dict[str, int]:
        return dict(self._observed)


@dataclass(frozen=True)
class QueryResult:
    probability: float

    def __post_init__(self):
        _check_unit("probability", self.probability)

    def __float__(self) -> float:
        return self.probability


def _effect(params: ColliderParams, c1: int, c2: int) -> float:
    # b + (1-b)(1 - survival) avoids cancellation when b is tiny
    survive = 1.0
    if c1:
        survive *= 1.0 - params.m1
    if c2:
        survive *= 1.0 - params.m2
    return params.b + (1.0 - params.b) * (1.0 - survive)


def _prior(params: ColliderParams, c: int) -> float:
    return params.pC if c else 1.0 - params.pC


def _joint(params: ColliderParams, c1: int, c2: int, e: int) -> float:
    p_e = _effect(params, c1, c2)
    return _prior(params, c1) * _prior(params, c2) * (p_e if e else 1.0 - p_e)


def effect_cpd(params: ColliderParams, c1: int, c2: int) -> float:
    """Pr(E=1 | c1, c2) = 1 - (1-b)(1-m1)^c1 (1-m2)^c2."""
    _check_binary("c1", c1)
    _check_binary("c2", c2)
    return _effect(params, c1, c2)


def joint_probability(params: ColliderParams, c1: int, c2: int, e: int) -> float:
    for name, value in (("c1", c1), ("c2", c2), ("e", e)):
        _check_binary(name, value)
    return _joint(params, c1, c2, e)


def conditional(
    params: ColliderParams, target: tuple[str, int], evidence: NodeAssignment
) -> QueryResult:
    """Exact posterior Pr(target | evidence).

    The effect is a barren node when unobserved, so a query on one cause
    given the other reduces to the shared prior.  Otherwise the unobserved
    nodes are summed out of the joint.

    Args:
        params: model parameters.
        target: ``(node, value)`` with node one of ``"C1"``, ``"C2"``, ``"E"``.
        evidence: observed nodes; must not include the target node.

    Raises:
        ImpossibleEvidenceError: if Pr(evidence) is zero.
    """
    node, value = target
    if node not in NODES:
        raise ValueError(f"unknown node {node!r}")
    _check_binary("target value", value)
    observed = evidence.observed()
    if node in observed:
        raise ValueError(f"target node {node} is also in the evidence")

    if node != "E" and "E" not in observed:
        other = "C2" if node == "C1" else "C1"
        if other in observed and _prior(params, observed[other]) == 0.0:
            raise ImpossibleEvidenceError(f"conditioning on impossible evidence {observed}")
        return QueryResult(_prior(params, value))

    num = 0.0
    den = 0.0
    index = _INDEX[node]
    free = [_INDEX[n] for n in NODES if n != node and n not in observed]
    state = [0, 0, 0]
    for n, v in observed.items():
        state[_INDEX[n]] = v
    for values in _ASSIGNMENTS[len(free)]:
        for i, v in zip(free, values):
            state[i] = v
        for v in (0, 1):
            state[index] = v
            p = _joint(params, *state)
            den += p
            if v == value:
                num += p
    if den == 0.0:
        raise ImpossibleEvidenceError(f"conditioning on impossible evidence {observed}")
    return QueryResult(min(1.0, num / den))
