"""Branching random walk maximum by direct simulation."""
from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError, ResourceError
from .core import TAG_BRW, McConfig, OffspringLaw, SampleSummary, blocks, run_ordered, substream

DEFAULT_POP_CAP = 10 ** 7
PARTICLES_PER_BLOCK = 1 << 21


def brw_block_size(offspring: OffspringLaw, n: int) -> int:
    """Replicas per block; depends on the law and ``n`` only, never on ``workers``."""
    expected = offspring.mean ** max(n - 1, 0)
    return int(max(1, min(1 << 16, PARTICLES_PER_BLOCK // max(1, math.ceil(expected)))))


def _brw_block(offspring, step_law, n, rng, first, size, pop_cap):
    pos = np.zeros(size)
    rep = np.arange(size)
    for t in range(n):
        pos = pos + step_law.sample(rng, pos.size)
        if t < n - 1:
            k = offspring.sample(rng, pos.size)
            pos = np.repeat(pos, k)
            rep = np.repeat(rep, k)
            if pos.size <= pop_cap:
                continue
            counts = np.bincount(rep, minlength=size)
            if counts.max() > pop_cap:
                bad = first + int(np.argmax(counts))
                raise ResourceError(f"replica {bad}: population exceeds cap {pop_cap} at step {t + 1}")
    counts = np.bincount(rep, minlength=size)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return np.maximum.reduceat(pos, starts)


def simulate_brw_max(offspring: OffspringLaw, step_law, n: int, cfg: McConfig,
                     pop_cap: int = DEFAULT_POP_CAP) -> SampleSummary:
    """Samples of ``M_n``: the particle moves, then branches, ``n`` moves in total.

    ``step_law`` is a translation-invariant kernel (its level shift is added
    to every step).
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    if not getattr(step_law, "translation_invariant", False):
        raise DomainError("the BRW simulator needs a translation-invariant step law")
    if n == 0:
        return SampleSummary(np.zeros(cfg.reps), meta={"n": 0, "reps": cfg.reps})
    bsize = brw_block_size(offspring, n)
    parts = blocks(cfg.reps, bsize)

    def work(i):
        s, e = parts[i]
        return _brw_block(offspring, step_law, n, substream(cfg.master_seed, TAG_BRW, i), s, e - s, pop_cap)

    vals = np.concatenate(run_ordered(work, len(parts), cfg.workers))
    return SampleSummary(vals, meta={"n": n, "reps": cfg.reps, "block_size": bsize,
                                     "seed": cfg.master_seed})
