"""Counter-based random streams shared by the compiled and Python kernels.

Draw k of stream `base` is splitmix64(base + k): a stateless, splittable
generator, so independent trajectories simply use independent bases and the
pure-Python kernel can reproduce the compiled kernel's stream bit for bit.
"""
from __future__ import annotations

import numpy as np

MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def splitmix64(z: int) -> int:
    z = (z + _GAMMA) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * _M1) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * _M2) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def splitmix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 over a uint64 array (wrapping arithmetic)."""
    z = (z + np.uint64(_GAMMA)) & MASK64
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(_M1)) & MASK64
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(_M2)) & MASK64
    return z ^ (z >> np.uint64(31))


def stream_base(seed: int, trajectory: int = 0) -> int:
    """Per-trajectory stream key: double-mixed seed XOR trajectory index."""
    return splitmix64(splitmix64(seed & 0xFFFFFFFFFFFFFFFF) ^ trajectory)


def derived_generator(base: int, *labels: int) -> np.random.Generator:
    """A numpy Generator keyed deterministically off a stream base."""
    return np.random.default_rng(np.random.SeedSequence([base, *labels]))


def displacement_thresholds(rates: dict[int, float]) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative 32-bit thresholds for picking a displacement.

    The event kernel draws one uint64 per event; its low 32 bits choose the
    displacement by scanning these thresholds.  The last threshold is 2^32 so
    the scan always terminates.
    """
    vs = sorted(rates)
    probs = np.array([rates[v] for v in vs], dtype=np.float64)
    probs = probs / probs.sum()
    cum = np.cumsum(probs)
    thr = np.floor(cum * 2.0 ** 32).astype(np.uint64)
    thr[-1] = np.uint64(2 ** 32)
    return np.array(vs, dtype=np.int64), thr
