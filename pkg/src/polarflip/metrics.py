"""Flip metrics for list-flip decoding.

``E`` scores how confidently the list selection at one bit separated the
kept and discarded candidates; ``M`` extends it to a set of flip indices by
adding a penalty term for every earlier bit.  The penalty is either the
smooth ``f_beta`` or its threshold replacement ``f_star``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logsumexp


class MetricKind(str, Enum):
    ORIGINAL = "original"  # smooth f_beta penalty
    SIMPLIFIED = "simplified"  # threshold f_star penalty


@dataclass(frozen=True)
class MetricParams:
    alpha: float = 1.0
    beta: float = 0.4
    z: int = 5
    kind: MetricKind = MetricKind.SIMPLIFIED

    def __post_init__(self):
        object.__setattr__(self, "kind", MetricKind(self.kind))
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.z < 1:
            raise ValueError("z must be at least 1")

    def penalty(self, x):
        if self.kind is MetricKind.SIMPLIFIED:
            return f_star(x, self.z)
        return f_beta(x, self.beta)


@dataclass(frozen=True)
class FlipSet:
    """Strictly increasing flip indices (0-based) and their metric."""

    indices: tuple[int, ...]
    metric: float

    @property
    def order(self) -> int:
        return len(self.indices)

    @property
    def last(self) -> int:
        return self.indices[-1]

    def sort_key(self):
        return (self.metric, self.last, self.indices)


def e_metric(pms_kept, pms_discarded, alpha: float = 1.0) -> float:
    """ln(sum exp(-PM_kept)) - alpha * ln(sum exp(-PM_discarded))."""
    kept = -np.asarray(pms_kept, dtype=np.float64)
    disc = -np.asarray(pms_discarded, dtype=np.float64)
    return float(logsumexp(kept) - alpha * logsumexp(disc))


def f_beta(x, beta: float = 0.4):
    """(1/beta) ln(1 + exp(-beta x)), stable for large |x|."""
    return np.logaddexp(0.0, -beta * np.asarray(x, dtype=np.float64)) / beta


def f_star(x, z: int = 5):
    """1 where |x| <= z, else 0."""
    return (np.abs(np.asarray(x, dtype=np.float64)) <= z).astype(np.float64)


def penalty_prefix(e_values: np.ndarray, domain: np.ndarray, params: MetricParams) -> np.ndarray:
    """Running sum of the penalty over ``domain`` indices k <= j, for every j.

    Entries outside ``domain`` and undefined (NaN) entries are skipped, so
    only the prefix up to the last defined domain entry is meaningful.
    """
    use = domain & ~np.isnan(e_values)
    terms = np.zeros(e_values.size)
    terms[use] = params.penalty(e_values[use])
    return np.cumsum(terms)


def m_metric(flip_set, e_values, spec, params: MetricParams) -> float:
    """Flip-set metric: sum of E over the set plus penalties up to its last index.

    ``e_values`` is indexed by bit position (0-based) and must be defined on
    every index of A \\ A' up to the set's maximum.
    """
    indices = sorted(int(k) for k in flip_set)
    if not indices:
        raise ValueError("flip set must not be empty")
    e_values = np.asarray(e_values, dtype=np.float64)
    domain = spec.metric_domain
    last = indices[-1]
    needed = np.flatnonzero(domain[: last + 1])
    if not domain[indices].all():
        raise ValueError("flip set contains indices outside A \\ A'")
    if np.isnan(e_values[needed]).any():
        raise ValueError("missing E value for an index required by the metric")
    return float(e_values[indices].sum() + params.penalty(e_values[needed]).sum())
