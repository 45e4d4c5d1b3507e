"""Reproducible block-wise sampling of the position outcomes ``(x_a, x_b)``."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

BLOCK = 1 << 20

T = TypeVar("T")


def block_sizes(n: int, block: int = BLOCK) -> list[int]:
    if n < 0:
        raise ValueError("sample count must be non-negative")
    full, rest = divmod(n, block)
    return [block] * full + ([rest] if rest else [])


def block_generators(seed: int, n_blocks: int) -> list[np.random.Generator]:
    """One Philox stream per block, spawned from ``seed``.

    Block ``k`` always gets the same stream regardless of how blocks are
    scheduled, so results do not depend on the worker count.
    """
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def xx_cholesky(lam: float, cx: float) -> np.ndarray:
    if not lam > abs(cx):
        raise ValueError("requires lambda > |cx|")
    return np.linalg.cholesky(np.array([[lam, cx], [cx, lam]]) / 2)


def draw_block(rng: np.random.Generator, chol: np.ndarray, size: int) -> np.ndarray:
    return rng.standard_normal((size, 2)) @ chol.T


def map_blocks(
    lam: float,
    cx: float,
    n: int,
    seed: int,
    func: Callable[[np.ndarray], T],
    workers: int = 1,
    block: int = BLOCK,
) -> list[T]:
    """Apply ``func`` to each sampled block of ``(x_a, x_b)`` pairs, in block order."""
    chol = xx_cholesky(lam, cx)
    sizes = block_sizes(n, block)
    gens = block_generators(seed, len(sizes))

    def run(k: int) -> T:
        return func(draw_block(gens[k], chol, sizes[k]))

    if workers <= 1 or len(sizes) <= 1:
        return [run(k) for k in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(sizes))))


def sample_xx(lam: float, cx: float, n: int, seed: int, workers: int = 1) -> np.ndarray:
    """``n`` draws from the zero-mean normal with covariance ``[[lam, cx], [cx, lam]] / 2``."""
    parts = map_blocks(lam, cx, n, seed, lambda x: x, workers=workers)
    return np.concatenate(parts) if parts else np.empty((0, 2))


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n else math.nan
