"""Decode-attempt orchestration for CA-SCL, D-SCLF and PC-DSCLF.

A frame is decoded once without flips.  On failure (CRC failure, or a PC
early termination) the flip list is rebuilt from the E values of that
attempt and the next flip set is tried, up to ``T`` additional attempts.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .construction import CodeSpec
from .metrics import FlipSet, MetricKind, MetricParams, penalty_prefix
from .scl import DecodeOutcome, Status, scl_decode


class DecoderKind(str, Enum):
    CA_SCL = "ca-scl"
    DSCLF = "dsclf"
    PC_DSCLF = "pc-dsclf"


@dataclass(frozen=True)
class DecoderConfig:
    kind: DecoderKind = DecoderKind.PC_DSCLF
    L: int = 4
    T: int = 15
    omega: int = 2
    metric: MetricParams = field(default_factory=MetricParams)
    pc_policy: str = "retain"
    flip_scope: str = "all"  # "all": A \ A'; "payload": no PC/CRC positions

    def __post_init__(self):
        object.__setattr__(self, "kind", DecoderKind(self.kind))
        if self.T < 0:
            raise ValueError("T must be non-negative")
        if self.omega < 1:
            raise ValueError("omega must be at least 1")
        if self.pc_policy not in ("retain", "penalize"):
            raise ValueError(f"unknown pc_policy {self.pc_policy!r}")
        if self.flip_scope not in ("all", "payload"):
            raise ValueError(f"unknown flip_scope {self.flip_scope!r}")

    @property
    def extra_attempts(self) -> int:
        return 0 if self.kind is DecoderKind.CA_SCL else self.T

    @property
    def uses_pc(self) -> bool:
        return self.kind is DecoderKind.PC_DSCLF


@dataclass
class FlipList:
    """Flip sets in ascending metric order, at most ``capacity`` of them."""

    capacity: int
    sets: list[FlipSet] = field(default_factory=list)

    @property
    def metrics(self) -> list[float]:
        return [s.metric for s in self.sets]

    def __len__(self) -> int:
        return len(self.sets)


def update_flip_list(
    breakpoint: int,
    flip_list: FlipList,
    e_values: np.ndarray,
    t: int,
    config: DecoderConfig,
    spec: CodeSpec,
) -> FlipList:
    """Rebuild the flip list after failed attempt ``t``.

    After the initial attempt the list is the ``T`` best single-index sets.
    After attempt ``t >= 1`` the executed set ``S_t`` is extended by every
    later candidate index whose metric beats the current worst entry.
    Only indices up to ``breakpoint`` (0-based, inclusive) are considered,
    drawn from A \\ A' or, with ``flip_scope="payload"``, from its payload
    positions only.
    """
    T = config.T
    params = config.metric
    last = min(int(breakpoint), spec.N - 1)
    domain = spec.metric_domain
    allowed = domain if config.flip_scope == "all" else spec.flip_candidates
    eligible = np.flatnonzero(allowed[: last + 1])
    prefix = penalty_prefix(np.asarray(e_values, dtype=np.float64), domain, params)
    key = FlipSet.sort_key

    if t == 0:
        metrics = e_values[eligible] + prefix[eligible]
        sets = sorted(
            (FlipSet((int(j),), float(m)) for j, m in zip(eligible, metrics)), key=key
        )
        return FlipList(T, sets[:T])

    if not 0 < t < T or t > len(flip_list.sets):
        return flip_list
    current = flip_list.sets[t - 1]
    if current.order >= config.omega:
        return flip_list
    base = float(e_values[list(current.indices)].sum())
    head = list(flip_list.sets[:t])
    tail = list(flip_list.sets[t:])
    for j in eligible[eligible > current.last]:
        cand = FlipSet(current.indices + (int(j),), base + float(e_values[j] + prefix[j]))
        if len(head) + len(tail) < T or key(cand) < key(tail[-1]):
            bisect.insort(tail, cand, key=key)
            del tail[T - len(head) :]
    return FlipList(T, head + tail)


@dataclass(frozen=True)
class AttemptRecord:
    attempt: int
    flip_set: tuple[int, ...]
    metric: float
    status: Status
    stop_index: int
    cnp: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "attempt": self.attempt,
                "flip_set": [k + 1 for k in self.flip_set],
                "metric": round(self.metric, 6),
                "stop_reason": self.status.value,
                "stop_index": self.stop_index + 1,
                "cnp": self.cnp,
            }
        )


@dataclass
class FrameResult:
    u_hat: np.ndarray
    passed: bool
    attempts: int
    cnp: int
    early_terminations: int
    records: list[AttemptRecord]
    outcomes: list[DecodeOutcome] | None = None

    def payload(self, spec: CodeSpec) -> np.ndarray:
        return self.u_hat[spec.payload_positions]


def decode_frame(llr_channel, spec: CodeSpec, config: DecoderConfig, keep_outcomes=False) -> FrameResult:
    """Decode one frame; returns the chosen estimate and complexity counters.

    The estimate is the smallest-metric CRC-passing path of the first
    successful attempt, otherwise the smallest-metric path of the last
    attempt that reached the end of the block (or of the last attempt, if
    every attempt stopped early).
    """
    if config.L != spec.L:
        raise ValueError(f"decoder list size {config.L} does not match code spec L={spec.L}")
    flips = FlipList(config.T)
    records: list[AttemptRecord] = []
    outcomes: list[DecodeOutcome] = []
    cnp = 0
    early = 0
    final = None
    last = None
    for t in range(config.extra_attempts + 1):
        if t == 0:
            current = FlipSet((), 0.0)
        elif t <= len(flips):
            current = flips.sets[t - 1]
        else:
            break
        out = scl_decode(
            llr_channel,
            spec,
            flip_set=current.indices,
            check_pc=config.uses_pc,
            pc_policy=config.pc_policy,
        )
        cnp += out.cnp
        last = out
        if keep_outcomes:
            outcomes.append(out)
        records.append(
            AttemptRecord(t, current.indices, current.metric, out.status, out.breakpoint, out.cnp)
        )
        if out.status is Status.CRC_PASS:
            final = out
            break
        if out.status is Status.CRC_FAIL:
            final = out
        else:
            early += 1
        if t < config.extra_attempts:
            flips = update_flip_list(out.breakpoint, flips, out.e_values, t, config, spec)
    chosen = final if final is not None else last
    return FrameResult(
        u_hat=chosen.u_hat,
        passed=chosen.status is Status.CRC_PASS,
        attempts=len(records),
        cnp=cnp,
        early_terminations=early,
        records=records,
        outcomes=outcomes if keep_outcomes else None,
    )


__all__ = [
    "AttemptRecord",
    "DecoderConfig",
    "DecoderKind",
    "FlipList",
    "FrameResult",
    "MetricKind",
    "decode_frame",
    "update_flip_list",
]
