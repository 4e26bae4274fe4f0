"""
Polar code construction.

Reliability ordering by Gaussian approximation, the frozen/non-frozen
partition, the rate-1 critical set and the placement of parity-check (PC)
bits inside it.

All arrays held by :class:`CodeSpec` use 0-based bit indices.  The JSON
document produced by :meth:`CodeSpec.to_dict` uses 1-based indices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

# Two-branch approximation of phi(x) = 1 - E[tanh(u/2)], u ~ N(x, 2x).
_A, _B, _C = -0.4527, 0.86, 0.0218
_X_SPLIT = 10.0
_LOG_PHI_SPLIT_LOW = _A * _X_SPLIT**_B + _C


class Allocation(str, Enum):
    """PC-bit allocation variant."""

    ORIGINAL = "original"
    IMPROVED = "improved"


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def log_phi(x: float) -> float:
    """Natural log of the GA function phi at mean ``x`` (x > 0)."""
    if x < _X_SPLIT:
        return _A * x**_B + _C
    return 0.5 * math.log(math.pi / x) - x / 4.0 + math.log1p(-10.0 / (7.0 * x))


def phi_inverse(log_y: float) -> float:
    """Inverse of :func:`log_phi`.

    The two branches overlap slightly around x = 10; values at or above the
    lower branch's endpoint are inverted in closed form, the rest
    numerically on the asymptotic branch.
    """
    if log_y >= _LOG_PHI_SPLIT_LOW:
        if log_y >= _C:
            return 0.0
        return ((log_y - _C) / _A) ** (1.0 / _B)
    hi = 2.0 * _X_SPLIT
    while log_phi(hi) > log_y:
        hi *= 2.0
    return brentq(lambda x: log_phi(x) - log_y, _X_SPLIT, hi, xtol=1e-12, rtol=1e-14)


def _check_node_mean(m: float) -> float:
    # mean of the "minus" channel: phi^-1(1 - (1 - phi(m))^2)
    lp = log_phi(m)
    p = math.exp(lp)
    return phi_inverse(lp + math.log(2.0 - p))


def ga_means(N: int, design_snr_db: float, rate: float = 1.0) -> np.ndarray:
    """Mean LLR of every synthetic channel under the Gaussian approximation.

    ``design_snr_db`` is Eb/N0 at code rate ``rate``, so the channel LLR mean
    is ``4 * rate * 10**(design_snr_db / 10)``.  With ``rate=1`` it is Es/N0.
    """
    if not is_power_of_two(N) or N < 2:
        raise ValueError(f"N must be a power of 2 (>= 2), got {N}")
    if not math.isfinite(design_snr_db):
        raise ValueError("design SNR must be finite")
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    means = np.array([4.0 * rate * 10.0 ** (design_snr_db / 10.0)])
    for _ in range(int(math.log2(N))):
        nxt = np.empty(2 * means.size)
        nxt[0::2] = [_check_node_mean(m) for m in means]
        nxt[1::2] = 2.0 * means
        means = nxt
    return means


def build_reliability_order(N: int, design_snr_db: float, rate: float = 1.0) -> np.ndarray:
    """Bit indices sorted from most to least reliable (ties: lower index first)."""
    means = ga_means(N, design_snr_db, rate)
    return np.argsort(-means, kind="stable")


def build_critical_set(frozen_mask: np.ndarray) -> np.ndarray:
    """First leaf of every maximal rate-1 subtree of the decoding tree.

    The result is strictly increasing and only holds non-frozen indices.
    """
    info = ~np.asarray(frozen_mask, dtype=bool)
    N = info.size
    n = int(math.log2(N))
    # rate1[s][b]: block b of size 2**s is entirely non-frozen
    rate1 = [info]
    for _ in range(n):
        prev = rate1[-1]
        rate1.append(prev[0::2] & prev[1::2])
    heads = []
    for s in range(n, -1, -1):
        blocks = rate1[s]
        if s == n:
            maximal = blocks
        else:
            maximal = blocks & ~np.repeat(rate1[s + 1], 2)
        heads.extend((np.flatnonzero(maximal) << s).tolist())
    return np.array(sorted(heads), dtype=np.int64)


@dataclass(frozen=True)
class SegmentPlan:
    """Segment sizes for dividing a critical set of ``n_ps`` elements."""

    variant: Allocation
    n_ps: int
    n_pc: int
    q_up: int
    q_down: int
    c1: int
    c2: int

    @property
    def n_segments(self) -> int:
        return self.c1 + self.c2

    def lengths(self) -> list[int]:
        return [self.q_up] * self.c1 + [self.q_down] * self.c2


def segment_plan(n_ps: int, n_pc: int, variant: Allocation | str) -> SegmentPlan:
    variant = Allocation(variant)
    if n_pc < 0:
        raise ValueError("n_pc must be non-negative")
    n_seg = n_pc + 1 if variant is Allocation.IMPROVED else n_pc
    if n_seg == 0:
        return SegmentPlan(variant, n_ps, n_pc, 0, 0, 0, 0)
    q_up = -(-n_ps // n_seg)
    q_down = n_ps // n_seg
    if q_down == 0:
        raise ValueError(
            f"empty segment: {n_ps} critical positions cannot hold {n_pc} PC bits"
        )
    c1 = n_ps - q_down * n_seg
    c2 = n_seg - c1
    return SegmentPlan(variant, n_ps, n_pc, q_up, q_down, c1, c2)


@dataclass(frozen=True)
class PcBit:
    position: int
    protected: tuple[int, ...]


def allocate_pc_bits(
    critical_set, n_pc: int, variant: Allocation | str = Allocation.IMPROVED
) -> tuple[PcBit, ...]:
    """Place ``n_pc`` PC bits on an ordered critical set.

    The set is cut into contiguous segments (longer ones first).  Each
    protected segment carries a PC bit on its last element, equal to the XOR
    of the segment's other elements.  The improved variant uses
    ``n_pc + 1`` segments and leaves the last one unprotected; the original
    variant uses ``n_pc`` segments covering the whole set.
    """
    locs = [int(v) for v in critical_set]
    plan = segment_plan(len(locs), n_pc, variant)
    bits = []
    start = 0
    for length in plan.lengths()[:n_pc]:
        seg = locs[start : start + length]
        bits.append(PcBit(position=seg[-1], protected=tuple(seg[:-1])))
        start += length
    return tuple(bits)


_DEFAULT_CRC = {
    0: 0b1,
    4: 0b10011,
    8: 0x107,
    11: 0xE21,
    16: (1 << 16) | (1 << 15) | (1 << 2) | 1,
    24: (1 << 24) | (1 << 23) | (1 << 6) | (1 << 5) | (1 << 1) | 1,
}


def crc_poly_from_int(value: int, n_crc: int) -> tuple[int, ...]:
    """Coefficient vector (highest degree first) of a generator polynomial.

    ``value`` may include the leading x**n_crc term or omit it.
    """
    if value < 0:
        raise ValueError("CRC polynomial must be non-negative")
    if value.bit_length() <= n_crc:
        value |= 1 << n_crc
    if value.bit_length() != n_crc + 1:
        raise ValueError(f"CRC polynomial 0x{value:x} does not have degree {n_crc}")
    return tuple((value >> k) & 1 for k in range(n_crc, -1, -1))


def default_crc_poly(n_crc: int) -> tuple[int, ...]:
    try:
        return crc_poly_from_int(_DEFAULT_CRC[n_crc], n_crc)
    except KeyError:
        raise ValueError(f"no default CRC polynomial of length {n_crc}") from None


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """Static description of one polar code instance."""

    N: int
    K: int
    n_crc: int
    n_pc: int
    L: int
    design_snr_db: float
    allocation: Allocation
    crc_poly: tuple[int, ...]
    frozen_mask: np.ndarray
    nonfrozen: np.ndarray
    a_prime: np.ndarray
    critical_set: np.ndarray
    pc_bits: tuple[PcBit, ...]
    crc_positions: np.ndarray
    payload_positions: np.ndarray

    @property
    def rate(self) -> float:
        return self.K / self.N

    @property
    def pc_positions(self) -> np.ndarray:
        return np.array([b.position for b in self.pc_bits], dtype=np.int64)

    @property
    def metric_domain(self) -> np.ndarray:
        """Boolean mask of A \\ A' (where flip metrics are defined)."""
        mask = ~self.frozen_mask.copy()
        mask[self.a_prime] = False
        return mask

    @property
    def flip_candidates(self) -> np.ndarray:
        """Boolean mask of indices allowed in a flip set (payload bits only)."""
        mask = self.metric_domain
        mask[self.pc_positions] = False
        mask[self.crc_positions] = False
        return mask

    def to_dict(self) -> dict:
        one = lambda arr: [int(v) + 1 for v in arr]  # noqa: E731
        return {
            "N": self.N,
            "K": self.K,
            "n_crc": self.n_crc,
            "n_pc": self.n_pc,
            "L": self.L,
            "design_snr_db": self.design_snr_db,
            "allocation": self.allocation.value,
            "crc_poly": list(self.crc_poly),
            "frozen_set": one(np.flatnonzero(self.frozen_mask)),
            "nonfrozen_set": one(self.nonfrozen),
            "a_prime": one(self.a_prime),
            "critical_set": one(self.critical_set),
            "pc_map": [
                {"position": b.position + 1, "protected": one(b.protected)}
                for b in self.pc_bits
            ],
            "crc_positions": one(self.crc_positions),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def build_code_spec(
    N: int,
    K: int,
    n_crc: int,
    n_pc: int,
    L: int,
    scheme: Allocation | str = Allocation.IMPROVED,
    crc_poly=None,
    design_snr_db: float = 4.0,
) -> CodeSpec:
    """Build a :class:`CodeSpec`.

    The ``K + n_crc + n_pc`` most reliable indices are non-frozen.  CRC bits
    take the last ``n_crc`` of them; PC bits are allocated on the critical
    set with the CRC positions removed.  ``design_snr_db`` is Eb/N0 at the
    payload rate K/N.
    """
    scheme = Allocation(scheme)
    if not is_power_of_two(L):
        raise ValueError(f"list size must be a power of 2, got {L}")
    if K < 1 or min(n_crc, n_pc) < 0:
        raise ValueError("K must be positive and n_crc, n_pc non-negative")
    n_info = K + n_crc + n_pc
    if n_info > N:
        raise ValueError(f"rate too high: {n_info} non-frozen bits for N={N}")
    if crc_poly is None:
        poly = default_crc_poly(n_crc)
    elif isinstance(crc_poly, int):
        poly = crc_poly_from_int(crc_poly, n_crc)
    else:
        poly = tuple(int(c) for c in crc_poly)
    if len(poly) != n_crc + 1 or poly[0] != 1:
        raise ValueError("CRC polynomial degree does not match n_crc")

    order = build_reliability_order(N, design_snr_db, rate=K / N)
    frozen = np.ones(N, dtype=bool)
    frozen[order[:n_info]] = False
    nonfrozen = np.flatnonzero(~frozen)
    a_prime = nonfrozen[: int(math.log2(L))]
    crc_positions = nonfrozen[n_info - n_crc :] if n_crc else nonfrozen[:0]

    critical = build_critical_set(frozen)
    candidates = critical[~np.isin(critical, crc_positions)]
    if n_pc and n_pc >= candidates.size:
        raise ValueError(
            f"n_pc={n_pc} exceeds critical-set capacity ({candidates.size} positions)"
        )
    pc_bits = allocate_pc_bits(candidates, n_pc, scheme)
    pc_pos = np.array([b.position for b in pc_bits], dtype=np.int64)
    if np.isin(pc_pos, a_prime).any():
        raise ValueError("a PC position falls inside A' (first log2(L) non-frozen bits)")

    payload = nonfrozen[: n_info - n_crc]
    payload = payload[~np.isin(payload, pc_pos)]
    for arr in (frozen, nonfrozen, a_prime, critical, crc_positions, payload):
        arr.setflags(write=False)
    return CodeSpec(
        N=N,
        K=K,
        n_crc=n_crc,
        n_pc=n_pc,
        L=L,
        design_snr_db=float(design_snr_db),
        allocation=scheme,
        crc_poly=poly,
        frozen_mask=frozen,
        nonfrozen=nonfrozen,
        a_prime=a_prime,
        critical_set=critical,
        pc_bits=pc_bits,
        crc_positions=crc_positions,
        payload_positions=payload,
    )
