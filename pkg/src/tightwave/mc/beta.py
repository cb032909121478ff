"""The square-root Gamma-Poisson kernel sampler and the beta tournament chain."""
from __future__ import annotations

import numpy as np

from ..errors import DomainError, ResourceError
from .core import TAG_BETA, McConfig, SampleSummary, blocks, run_ordered, substream

MAX_BETA_DEPTH = 22
LEAVES_PER_BLOCK = 1 << 22


def gamma_poisson_sample(y, rng: np.random.Generator, size=None):
    """Draw from ``k(y, .)``: ``P ~ Poisson(y^2)``, ``G ~ Gamma(1 + P)``, return ``sqrt(G)``.

    ``y`` may be an array, in which case one draw per entry is returned.
    """
    ya = np.asarray(y, dtype=float)
    if np.any(ya < 0) or not np.all(np.isfinite(ya)):
        raise DomainError("gamma_poisson_sample needs finite y >= 0")
    shape = ya.shape if size is None else size
    lam = np.broadcast_to(ya * ya, shape)
    p = rng.poisson(lam)
    g = rng.gamma(1.0 + p)
    out = np.sqrt(g)
    return float(out) if np.ndim(out) == 0 else out


def beta_block_size(n: int) -> int:
    return max(1, LEAVES_PER_BLOCK >> n)


def simulate_beta_chain(n: int, cfg: McConfig) -> SampleSummary:
    """Samples of ``beta_n`` by a full tournament over ``2^n`` leaves set to 0."""
    if n < 0:
        raise DomainError("n must be >= 0")
    if n > MAX_BETA_DEPTH:
        raise ResourceError(f"beta tournament depth {n} exceeds the cap {MAX_BETA_DEPTH}")
    if n == 0:
        return SampleSummary(np.zeros(cfg.reps), meta={"n": 0, "reps": cfg.reps})
    bsize = beta_block_size(n)
    parts = blocks(cfg.reps, bsize)

    def work(i):
        s, e = parts[i]
        rng = substream(cfg.master_seed, TAG_BETA, i)
        vals = np.zeros((e - s, 1 << n))
        while vals.shape[1] > 1:
            vals = gamma_poisson_sample(np.maximum(vals[:, 0::2], vals[:, 1::2]), rng)
        return vals[:, 0]

    out = np.concatenate(run_ordered(work, len(parts), cfg.workers))
    return SampleSummary(out, meta={"n": n, "reps": cfg.reps, "block_size": bsize,
                                    "seed": cfg.master_seed})
