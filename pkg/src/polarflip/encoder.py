"""Polar encoding: CRC attachment, PC bits, frozen insertion and the transform."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .construction import CodeSpec


def compute_crc(bits, crc_poly) -> np.ndarray:
    """CRC remainder of ``bits`` (zero initial state, no reflection).

    ``crc_poly`` is the generator coefficient vector, highest degree first.
    Appending the result to ``bits`` gives a word divisible by g(x).
    """
    poly = np.asarray(crc_poly, dtype=np.uint8)
    n_crc = poly.size - 1
    reg = np.concatenate([np.asarray(bits, dtype=np.uint8) & 1, np.zeros(n_crc, np.uint8)])
    for k in range(reg.size - n_crc):
        if reg[k]:
            reg[k : k + n_crc + 1] ^= poly
    return reg[reg.size - n_crc :].copy()


@lru_cache(maxsize=64)
def crc_matrix(K: int, crc_poly: tuple[int, ...]) -> np.ndarray:
    """``K x n_crc`` matrix G with ``compute_crc(p) == p @ G mod 2``."""
    n_crc = len(crc_poly) - 1
    G = np.zeros((K, n_crc), dtype=np.uint8)
    unit = np.zeros(K, dtype=np.uint8)
    for k in range(K):
        unit[k] = 1
        G[k] = compute_crc(unit, crc_poly)
        unit[k] = 0
    G.setflags(write=False)
    return G


def crc_syndrome(payload: np.ndarray, crc_bits: np.ndarray, crc_poly) -> np.ndarray:
    """Per-row CRC syndrome of a batch of (payload, CRC) words; zero rows pass."""
    payload = np.atleast_2d(payload).astype(np.uint8)
    G = crc_matrix(payload.shape[1], tuple(int(c) for c in crc_poly))
    # uint8 sums wrap modulo 256, which preserves parity
    return ((payload @ G) ^ np.atleast_2d(crc_bits)) & 1


def assemble_u(payload, spec: CodeSpec) -> np.ndarray:
    """Encoding vector u: payload, PC and CRC bits on the non-frozen positions."""
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.shape != (spec.K,):
        raise ValueError(f"payload must have length K={spec.K}, got {payload.shape}")
    u = np.zeros(spec.N, dtype=np.uint8)
    u[spec.payload_positions] = payload
    for pc in spec.pc_bits:
        u[pc.position] = np.bitwise_xor.reduce(u[list(pc.protected)]) if pc.protected else 0
    if spec.n_crc:
        u[spec.crc_positions] = (payload @ crc_matrix(spec.K, spec.crc_poly)) & 1
    return u


@lru_cache(maxsize=16)
def bit_reversal(N: int) -> np.ndarray:
    n = N.bit_length() - 1
    idx = np.arange(N)
    rev = np.zeros(N, dtype=np.int64)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    rev.setflags(write=False)
    return rev


def polar_transform(u) -> np.ndarray:
    """x = u B_N F^{(x)n} over GF(2), with F = [[1, 0], [1, 1]].

    Accepts a single vector or a batch of row vectors.
    """
    u = np.asarray(u, dtype=np.uint8)
    N = u.shape[-1]
    if N & (N - 1):
        raise ValueError(f"length must be a power of 2, got {N}")
    x = u[..., bit_reversal(N)].copy()
    lead = x.shape[:-1]
    h = N // 2
    while h >= 1:
        blocks = x.reshape(lead + (N // (2 * h), 2, h))
        blocks[..., 0, :] ^= blocks[..., 1, :]
        h //= 2
    return x


def encode(payload, spec: CodeSpec) -> np.ndarray:
    return polar_transform(assemble_u(payload, spec))
