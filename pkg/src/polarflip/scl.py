"""LLR-based successive cancellation list decoding.

One call of :func:`scl_decode` is one decoding attempt: standard SCL with
path-metric selection, optional flipping of the selection at given indices,
per-bit PC checks with early termination and a final CRC check.

Paths in a list are kept in lexicographic order of their decision vectors;
candidate ties in path metric are resolved in that order (parent first,
then bit 0 before 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numba as nb
import numpy as np

from .construction import CodeSpec
from .encoder import bit_reversal, crc_syndrome

RETAIN, PENALIZE = 0, 1
PC_PENALTY = 1e4


class Status(str, Enum):
    CRC_PASS = "crc_pass"
    CRC_FAIL = "crc_fail"
    PC_EARLY_TERMINATION = "pc_early_termination"


def pm_update(pm_prev: float, llr: float, decision: int) -> float:
    """Path metric after deciding ``decision`` on a bit with LLR ``llr``."""
    hard = 0.5 * (1.0 - np.sign(llr))
    return pm_prev if decision == hard else pm_prev + abs(llr)


def count_cnp(visited, L: int) -> int:
    """Candidate paths processed over the visited non-frozen bits.

    ``visited`` is the number of non-frozen bits reached in one attempt, or a
    sequence of such counts (one per attempt).  The b-th non-frozen bit
    contributes min(2**b, L).
    """
    if np.ndim(visited):
        return sum(count_cnp(v, L) for v in visited)
    v = int(visited)
    m = L.bit_length() - 1
    if v <= m:
        return 2 ** (v + 1) - 2
    return 2 ** (m + 1) - 2 + (v - m) * L


@nb.njit(cache=True, inline="always")
def _f(a, b):
    m = min(abs(a), abs(b))
    return -m if (a < 0) != (b < 0) else m


@nb.njit(cache=True)
def _scl_kernel(llr_z, frozen, pc_of, prot_of, n_pc, L, flip, use_pc, pc_policy, alpha):
    N = llr_z.shape[0]
    n = 0
    while (1 << n) < N:
        n += 1
    # stage s of storage row r lives at [r, 2**s - 1 : 2**(s+1) - 1]
    amem = np.zeros((L, N))
    bmem = np.zeros((L, N), np.uint8)
    aptr = np.zeros((L, n), np.int64)
    bptr = np.zeros((L, n), np.int64)
    arefc = np.zeros((n, L), np.int64)
    brefc = np.zeros((n, L), np.int64)
    arefc[:, 0] = 1
    brefc[:, 0] = 1
    new_aptr = np.zeros((L, n), np.int64)
    new_bptr = np.zeros((L, n), np.int64)
    cur = np.zeros(N, np.uint8)
    tmp = np.zeros(N, np.uint8)
    pm = np.zeros(L)
    npc = max(n_pc, 1)
    acc = np.zeros((L, npc), np.uint8)
    ok = np.ones(L, np.bool_)
    dec = np.zeros((N, L), np.uint8)
    par = np.zeros((N, L), np.int64)
    e_vals = np.full(N, np.nan)
    pm_trace = np.full((N, L), np.nan)
    lam = np.zeros(L)
    cpm = np.zeros(2 * L)
    order = np.zeros(2 * L, np.int64)
    kept = np.zeros(L, np.int64)
    new_pm = np.zeros(L)
    new_acc = np.zeros((L, npc), np.uint8)
    new_ok = np.ones(L, np.bool_)
    n_paths = 1
    visited = 0
    stop = N - 1
    terminated = False

    for i in range(N):
        # LLR of leaf i for every active path
        if i == 0:
            top = n - 1
        else:
            b = 0
            while ((i >> b) & 1) == 0:
                b += 1
            size = 1 << b
            off = size - 1
            poff = 2 * size - 1
            for l in range(n_paths):
                rb = bptr[l, b]
                rp = aptr[l, b + 1] if b + 1 < n else 0
                ra = aptr[l, b]
                if arefc[b, ra] > 1:
                    arefc[b, ra] -= 1
                    ra = 0
                    while arefc[b, ra] != 0:
                        ra += 1
                    aptr[l, b] = ra
                    arefc[b, ra] = 1
                for j in range(size):
                    if b + 1 == n:
                        p0 = llr_z[j]
                        p1 = llr_z[j + size]
                    else:
                        p0 = amem[rp, poff + j]
                        p1 = amem[rp, poff + j + size]
                    if bmem[rb, off + j]:
                        amem[ra, off + j] = p1 - p0
                    else:
                        amem[ra, off + j] = p1 + p0
            top = b - 1
        for s in range(top, -1, -1):
            size = 1 << s
            off = size - 1
            poff = 2 * size - 1
            for l in range(n_paths):
                ra = aptr[l, s]
                if arefc[s, ra] > 1:
                    arefc[s, ra] -= 1
                    ra = 0
                    while arefc[s, ra] != 0:
                        ra += 1
                    aptr[l, s] = ra
                    arefc[s, ra] = 1
                if s + 1 == n:
                    for j in range(size):
                        amem[ra, off + j] = _f(llr_z[j], llr_z[j + size])
                else:
                    rp = aptr[l, s + 1]
                    for j in range(size):
                        amem[ra, off + j] = _f(amem[rp, poff + j], amem[rp, poff + j + size])
        for l in range(n_paths):
            lam[l] = amem[aptr[l, 0], 0]

        if frozen[i]:
            for l in range(n_paths):
                if lam[l] < 0:
                    pm[l] += -lam[l]
                dec[i, l] = 0
                par[i, l] = l
        else:
            visited += 1
            nc = 2 * n_paths
            for l in range(n_paths):
                a = abs(lam[l])
                cpm[2 * l] = pm[l] + (a if lam[l] < 0 else 0.0)
                cpm[2 * l + 1] = pm[l] + (a if lam[l] > 0 else 0.0)
            if nc <= L:
                n_keep = nc
                for c in range(nc):
                    kept[c] = c
            else:
                n_keep = L
                # stable insertion sort of candidate indices by metric
                for c in range(nc):
                    order[c] = c
                for c in range(1, nc):
                    key = order[c]
                    k = c - 1
                    while k >= 0 and cpm[order[k]] > cpm[key]:
                        order[k + 1] = order[k]
                        k -= 1
                    order[k + 1] = key
                # order is ascending, so each half's minimum is its first entry
                m0 = cpm[order[0]]
                m1 = cpm[order[L]]
                s0 = 0.0
                s1 = 0.0
                for k in range(L):
                    s0 += math.exp(m0 - cpm[order[k]])
                    s1 += math.exp(m1 - cpm[order[L + k]])
                e_vals[i] = (-m0 + math.log(s0)) - alpha * (-m1 + math.log(s1))
                base = L if flip[i] else 0
                for k in range(L):
                    key = order[base + k]
                    q = k - 1
                    while q >= 0 and kept[q] > key:
                        kept[q + 1] = kept[q]
                        q -= 1
                    kept[q + 1] = key
            any_ok = False
            for k in range(n_keep):
                c = kept[k]
                p = c // 2
                bit = c & 1
                for s in range(n):
                    new_aptr[k, s] = aptr[p, s]
                    new_bptr[k, s] = bptr[p, s]
                new_pm[k] = cpm[c]
                for q in range(n_pc):
                    new_acc[k, q] = acc[p, q]
                new_ok[k] = ok[p]
                if prot_of[i] >= 0:
                    new_acc[k, prot_of[i]] ^= bit
                if pc_of[i] >= 0 and bit != acc[p, pc_of[i]]:
                    new_ok[k] = False
                    if use_pc and pc_policy == 1 and ok[p]:
                        new_pm[k] += PC_PENALTY
                if new_ok[k]:
                    any_ok = True
                dec[i, k] = bit
                par[i, k] = p
            for s in range(n):
                for r in range(L):
                    arefc[s, r] = 0
                    brefc[s, r] = 0
            for k in range(n_keep):
                for s in range(n):
                    aptr[k, s] = new_aptr[k, s]
                    bptr[k, s] = new_bptr[k, s]
                    arefc[s, aptr[k, s]] += 1
                    brefc[s, bptr[k, s]] += 1
                pm[k] = new_pm[k]
                ok[k] = new_ok[k]
                for q in range(n_pc):
                    acc[k, q] = new_acc[k, q]
            n_paths = n_keep
            if use_pc and pc_of[i] >= 0 and not any_ok:
                for l in range(n_paths):
                    pm_trace[i, l] = pm[l]
                stop = i
                terminated = True
                break

        for l in range(n_paths):
            pm_trace[i, l] = pm[l]
        # propagate the decision into the stored left partial sums
        for l in range(n_paths):
            cur[0] = dec[i, l]
            s = 0
            while s < n and ((i >> s) & 1) == 1:
                size = 1 << s
                off = size - 1
                rb = bptr[l, s]
                for j in range(size):
                    tmp[j] = bmem[rb, off + j] ^ cur[j]
                    tmp[size + j] = cur[j]
                for j in range(2 * size):
                    cur[j] = tmp[j]
                s += 1
            if s < n:
                size = 1 << s
                off = size - 1
                rb = bptr[l, s]
                if brefc[s, rb] > 1:
                    brefc[s, rb] -= 1
                    rb = 0
                    while brefc[s, rb] != 0:
                        rb += 1
                    bptr[l, s] = rb
                    brefc[s, rb] = 1
                for j in range(size):
                    bmem[rb, off + j] = cur[j]

    u = np.zeros((n_paths, N), np.uint8)
    for k in range(n_paths):
        pos = k
        for i in range(stop, -1, -1):
            u[k, i] = dec[i, pos]
            pos = par[i, pos]
    return u, pm[:n_paths].copy(), ok[:n_paths].copy(), e_vals, pm_trace, stop, terminated, visited


@dataclass
class DecodeOutcome:
    """Result of one SCL attempt.

    ``decisions`` holds one row per surviving path (bits past ``breakpoint``
    are zero), in lexicographic order.  ``breakpoint`` is the 0-based index
    where decoding stopped (N - 1 on completion).  ``e_values`` is NaN where
    no list selection took place.
    """

    status: Status
    breakpoint: int
    decisions: np.ndarray
    pms: np.ndarray
    crc_ok: np.ndarray
    e_values: np.ndarray
    pm_trace: np.ndarray
    visited: int
    cnp: int
    best: int
    flip_set: tuple[int, ...] = field(default=())

    @property
    def u_hat(self) -> np.ndarray:
        return self.decisions[self.best]

    def trace_lines(self, spec: CodeSpec):
        """Line-delimited JSON, one record per visited non-frozen bit (1-based)."""
        for i in range(self.breakpoint + 1):
            if spec.frozen_mask[i]:
                continue
            row = self.pm_trace[i]
            e = self.e_values[i]
            yield json.dumps(
                {
                    "bit": i + 1,
                    "pms": [round(float(v), 6) for v in row[~np.isnan(row)]],
                    "e": None if np.isnan(e) else round(float(e), 6),
                }
            )


@dataclass(frozen=True)
class _KernelTables:
    frozen: np.ndarray
    pc_of: np.ndarray
    prot_of: np.ndarray
    perm: np.ndarray


_TABLES: dict[int, _KernelTables] = {}


def _tables(spec: CodeSpec) -> _KernelTables:
    key = id(spec)
    tab = _TABLES.get(key)
    if tab is None or tab.frozen is not spec.frozen_mask:
        pc_of = np.full(spec.N, -1, dtype=np.int64)
        prot_of = np.full(spec.N, -1, dtype=np.int64)
        for q, pc in enumerate(spec.pc_bits):
            pc_of[pc.position] = q
            prot_of[list(pc.protected)] = q
        tab = _KernelTables(spec.frozen_mask, pc_of, prot_of, bit_reversal(spec.N))
        # kept small: specs are long-lived and few per process
        if len(_TABLES) > 32:
            _TABLES.clear()
        _TABLES[key] = tab
    return tab


def validate_flip_set(flip_set, spec: CodeSpec, L: int) -> tuple[int, ...]:
    idx = tuple(int(k) for k in flip_set)
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError(f"flip set must be strictly increasing: {idx}")
    if idx and (min(idx) < 0 or max(idx) >= spec.N):
        raise ValueError(f"flip index out of range: {idx}")
    a_prime = spec.nonfrozen[: int(math.log2(L))]
    for k in idx:
        if spec.frozen_mask[k]:
            raise ValueError(f"flip index {k} is frozen")
        if k in a_prime:
            raise ValueError(f"flip index {k} lies in A'")
    return idx


def pc_check(decisions, i: int, spec: CodeSpec) -> bool:
    """List-level PC check after bit ``i``.

    Passes iff at least one path satisfies every PC constraint whose PC bit
    lies at or before ``i``.
    """
    u = np.atleast_2d(decisions)
    ok = np.ones(u.shape[0], dtype=bool)
    for pc in spec.pc_bits:
        if pc.position > i:
            continue
        parity = np.bitwise_xor.reduce(u[:, list(pc.protected)], axis=1) if pc.protected else 0
        ok &= u[:, pc.position] == parity
    return bool(ok.any())


def crc_check(decisions, spec: CodeSpec) -> tuple[bool, np.ndarray]:
    """CRC check on every path; returns (any path passes, per-path mask)."""
    u = np.atleast_2d(decisions)
    if spec.n_crc == 0:
        mask = np.ones(u.shape[0], dtype=bool)
    else:
        syn = crc_syndrome(u[:, spec.payload_positions], u[:, spec.crc_positions], spec.crc_poly)
        mask = ~syn.any(axis=1)
    return bool(mask.any()), mask


def scl_decode(
    llr_channel,
    spec: CodeSpec,
    L: int | None = None,
    flip_set=(),
    check_pc: bool = True,
    pc_policy: str = "retain",
    alpha: float = 1.0,
) -> DecodeOutcome:
    """One SCL attempt on channel LLRs (natural order, as produced by the channel).

    At every index of ``flip_set`` the list keeps the L candidates with the
    larger path metrics.  With ``check_pc`` the attempt stops at the first PC
    bit where no path satisfies all PC constraints so far.
    ``pc_policy="penalize"`` adds a large metric penalty to paths that violate
    a PC constraint while others pass; the default keeps them unchanged.
    """
    L = spec.L if L is None else L
    if L & (L - 1) or L < 1:
        raise ValueError(f"list size must be a power of 2, got {L}")
    idx = validate_flip_set(flip_set, spec, L)
    policy = {"retain": RETAIN, "penalize": PENALIZE}[pc_policy]
    tab = _tables(spec)
    flip = np.zeros(spec.N, dtype=np.bool_)
    flip[list(idx)] = True
    llr_z = np.ascontiguousarray(np.asarray(llr_channel, dtype=np.float64)[tab.perm])
    u, pms, _, e_vals, pm_trace, stop, terminated, visited = _scl_kernel(
        llr_z,
        tab.frozen,
        tab.pc_of,
        tab.prot_of,
        spec.n_pc,
        L,
        flip,
        bool(check_pc and spec.n_pc),
        policy,
        float(alpha),
    )
    if terminated:
        status = Status.PC_EARLY_TERMINATION
        crc_ok = np.zeros(pms.size, dtype=bool)
        best = int(np.argmin(pms))
    else:
        passed, crc_ok = crc_check(u, spec)
        status = Status.CRC_PASS if passed else Status.CRC_FAIL
        pool = np.flatnonzero(crc_ok) if passed else np.arange(pms.size)
        best = int(pool[np.argmin(pms[pool])])
    return DecodeOutcome(
        status=status,
        breakpoint=int(stop),
        decisions=u,
        pms=pms,
        crc_ok=crc_ok,
        e_values=e_vals,
        pm_trace=pm_trace,
        visited=int(visited),
        cnp=count_cnp(visited, L),
        best=best,
        flip_set=idx,
    )
