"""BPSK over AWGN and channel LLRs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# magnitude used in place of 2y/sigma^2 when sigma^2 == 0
NOISELESS_LLR = 1e3


@dataclass(frozen=True)
class ChannelConfig:
    """Eb/N0 operating point.

    ``rate`` is the information rate K/N used to convert Eb/N0 into the noise
    variance of unit-energy BPSK.
    """

    ebno_db: float
    rate: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.rate <= 1.0:
            raise ValueError(f"rate must lie in (0, 1], got {self.rate}")

    @property
    def sigma2(self) -> float:
        return 1.0 / (2.0 * self.rate * 10.0 ** (self.ebno_db / 10.0))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def frame_rng(seed: int, frame: int, stream: int = 0) -> np.random.Generator:
    """Private generator for one frame, reproducible from (seed, frame) alone."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(frame, stream)))


def modulate(x) -> np.ndarray:
    """Bit 0 -> +1, bit 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(x, dtype=np.float64)


def add_noise(symbols, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    symbols = np.asarray(symbols, dtype=np.float64)
    if sigma2 == 0:
        return symbols.copy()
    return symbols + math.sqrt(sigma2) * rng.standard_normal(symbols.shape)


def llr(y, sigma2: float) -> np.ndarray:
    """Channel LLR 2 y / sigma^2 (positive favours bit 0)."""
    if sigma2 <= 0:
        raise ValueError("sigma^2 must be positive; use noiseless_llr for zero noise")
    return 2.0 * np.asarray(y, dtype=np.float64) / sigma2


def noiseless_llr(x, magnitude: float = NOISELESS_LLR) -> np.ndarray:
    return magnitude * modulate(x)
