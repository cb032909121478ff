"""Random-walk cover times on regular trees and the 2-d torus.

Trees are stored in heap order: the root is 0, the children of ``v`` are
``k v + 1, ..., k v + k``.  On the extended tree the extra vertex ``oo`` has
index ``#vertices`` and is adjacent only to the root.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import DomainError, NumericError, ResourceError
from .core import (TAG_COVER, TAG_EPOCHS, TAG_TORUS, McConfig, SampleSummary, blocks,
                   run_ordered, substream)

DEFAULT_STEP_BUDGET = 10 ** 10


@dataclass(frozen=True)
class KAryTree:
    depth: int
    arity: int = 2
    extended: bool = False

    def __post_init__(self):
        if self.arity < 2:
            raise DomainError("arity must be >= 2")
        if self.depth < 1:
            raise DomainError("tree depth must be >= 1")

    @property
    def n_vertices(self) -> int:
        return (self.arity ** (self.depth + 1) - 1) // (self.arity - 1) + int(self.extended)


@dataclass(frozen=True)
class Torus2D:
    side: int

    def __post_init__(self):
        if self.side < 2:
            raise DomainError("torus side must be >= 2")


@njit(nogil=True, cache=True)
def _tree_walk(rng, arity, depth, extended, budget):
    """Returns (cover time, R, epoch lengths, status); status 1 = budget exhausted."""
    nv = (arity ** (depth + 1) - 1) // (arity - 1)
    first_leaf = (arity ** depth - 1) // (arity - 1)
    total = nv + 1 if extended else nv
    oo = nv
    visited = np.zeros(total, dtype=np.bool_)
    v = oo if extended else 0
    visited[v] = True
    seen = 1
    steps = 0
    cover = -1
    R = 0
    taus = np.empty(16, dtype=np.int64)
    n_ep = 0
    ep_start = 0
    while True:
        if cover < 0 and seen == total:
            cover = steps
            if not extended:
                break
        if cover >= 0 and v == oo:
            break
        if steps >= budget:
            return cover, R, taus[:n_ep], 1
        if extended and v == oo:
            w = 0
        elif v == 0:
            deg = arity + 1 if extended else arity
            r = int(rng.random() * deg)
            w = oo if r == arity else 1 + r
        elif v >= first_leaf:
            w = (v - 1) // arity
        else:
            r = int(rng.random() * (arity + 1))
            w = (v - 1) // arity if r == arity else arity * v + 1 + r
        steps += 1
        if extended and w == oo:
            if cover < 0:
                R += 1
            if n_ep == taus.size:
                grown = np.empty(2 * taus.size, dtype=np.int64)
                grown[:n_ep] = taus[:n_ep]
                taus = grown
            taus[n_ep] = steps - ep_start
            n_ep += 1
            ep_start = steps
        v = w
        if not visited[v]:
            visited[v] = True
            seen += 1
    return cover, R, taus[:n_ep], 0


@njit(nogil=True, cache=True)
def _return_epochs(rng, arity, depth, count):
    """``count`` successive return times to ``oo`` on the extended tree."""
    nv = (arity ** (depth + 1) - 1) // (arity - 1)
    first_leaf = (arity ** depth - 1) // (arity - 1)
    oo = nv
    out = np.empty(count, dtype=np.int64)
    v = oo
    steps = 0
    for i in range(count):
        steps = 0
        while True:
            if v == oo:
                w = 0
            elif v == 0:
                r = int(rng.random() * (arity + 1))
                w = oo if r == arity else 1 + r
            elif v >= first_leaf:
                w = (v - 1) // arity
            else:
                r = int(rng.random() * (arity + 1))
                w = (v - 1) // arity if r == arity else arity * v + 1 + r
            steps += 1
            v = w
            if v == oo:
                break
        out[i] = steps
    return out


@njit(nogil=True, cache=True)
def _torus_walk(rng, side, budget):
    total = side * side
    visited = np.zeros(total, dtype=np.bool_)
    x = 0
    y = 0
    visited[0] = True
    seen = 1
    steps = 0
    while seen < total:
        if steps >= budget:
            return -1
        r = int(rng.random() * 4)
        if r == 0:
            x = (x + 1) % side
        elif r == 1:
            x = (x - 1) % side
        elif r == 2:
            y = (y + 1) % side
        else:
            y = (y - 1) % side
        steps += 1
        c = x * side + y
        if not visited[c]:
            visited[c] = True
            seen += 1
    return steps


def check_sandwich(cover: int, R: int, taus: np.ndarray) -> bool:
    """``sum_{i<=R} tau_i <= C <= sum_{i<=R+1} tau_i``."""
    return int(taus[:R].sum()) <= cover <= int(taus[:R + 1].sum()) and taus.size == R + 1


def simulate_cover_time(tree, cfg: McConfig, budget: int = DEFAULT_STEP_BUDGET) -> SampleSummary:
    """Cover times; trees start at the root, extended trees at ``oo``, the torus at the origin."""
    if isinstance(tree, Torus2D):
        return simulate_torus_cover(tree.side, cfg, budget)

    def work(i):
        rng = substream(cfg.master_seed, TAG_COVER, i)
        c, R, taus, status = _tree_walk(rng, tree.arity, tree.depth, tree.extended, budget)
        if status:
            raise ResourceError(f"replica {i}: step budget {budget} exhausted")
        if tree.extended and not check_sandwich(c, R, taus):
            raise NumericError(f"replica {i}: epoch sandwich violated")
        return c, R, taus

    out = run_ordered(work, cfg.reps, cfg.workers)
    C = np.array([o[0] for o in out], dtype=float)
    n, k = tree.depth, tree.arity
    extras = {"E_n": SampleSummary(np.sqrt(C / float(k) ** n))}
    if k == 2:
        extras["lln_ratio"] = SampleSummary(C / (4.0 * math.log(2.0) * n * n * 2.0 ** n))
    if tree.extended:
        extras["R_n"] = SampleSummary(np.array([o[1] for o in out], dtype=float))
        extras["tau_epochs"] = SampleSummary(np.concatenate([o[2] for o in out]).astype(float))
    return SampleSummary(C, extras, {"tree": {"arity": k, "depth": n, "extended": tree.extended},
                                     "reps": cfg.reps, "seed": cfg.master_seed})


def simulate_return_epochs(depth: int, n_epochs: int, cfg: McConfig, arity: int = 2,
                           block: int = 1000) -> SampleSummary:
    """I.i.d. return times to ``oo`` on the extended tree (one walk per block of epochs)."""
    KAryTree(depth, arity, True)
    if n_epochs < 1:
        raise DomainError("n_epochs must be >= 1")
    parts = blocks(n_epochs, block)

    def work(i):
        s, e = parts[i]
        return _return_epochs(substream(cfg.master_seed, TAG_EPOCHS, i), arity, depth, e - s)

    vals = np.concatenate(run_ordered(work, len(parts), cfg.workers)).astype(float)
    return SampleSummary(vals, meta={"depth": depth, "arity": arity, "epochs": n_epochs})


def simulate_torus_cover(side: int, cfg: McConfig, budget: int = DEFAULT_STEP_BUDGET) -> SampleSummary:
    Torus2D(side)

    def work(i):
        c = _torus_walk(substream(cfg.master_seed, TAG_TORUS, i), side, budget)
        if c < 0:
            raise ResourceError(f"replica {i}: step budget {budget} exhausted")
        return c

    C = np.array(run_ordered(work, cfg.reps, cfg.workers), dtype=float)
    extras = {}
    if side > 2:
        extras["lln_ratio"] = SampleSummary(math.pi * C / (4.0 * side ** 2 * math.log(side) ** 2))
    root = np.sqrt(C / side ** 2)
    extras["centered_root"] = SampleSummary(root - np.median(root))
    return SampleSummary(C, extras, {"torus_side": side, "reps": cfg.reps, "seed": cfg.master_seed})


def return_time_moments(n: int) -> dict:
    """Exact mean and variance of the return time to level 0 of the level chain.

    The chain lives on ``{0, ..., n+1}``; from level 0 it moves to 1, from
    levels ``1..n`` up with probability 2/3 and down with 1/3, from ``n+1``
    down.  The first-step equations for the one-level descent times
    ``X_i`` (level ``i`` to ``i-1``) are solved from the top level down; all
    terms are positive so no cancellation occurs.  The hitting times of 0
    are partial sums of the ``E X_i``; their first-step system is re-checked.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    up, down = 2.0 / 3.0, 1.0 / 3.0
    top = n + 1
    a = np.empty(top + 2)
    q = np.empty(top + 2)
    a[top], q[top] = 1.0, 1.0
    for i in range(top - 1, 0, -1):
        a1, q1 = a[i + 1], q[i + 1]
        a[i] = (1.0 + up * a1) / down
        q[i] = (down + up * (1.0 + q1 + 2.0 * a1 + 2.0 * a[i] + 2.0 * a1 * a[i])) / down
    # residual of the hitting-time system m_i = 1 + up m_{i+1} + down m_{i-1}
    m = np.concatenate([[0.0], np.cumsum(a[1:top + 1])])
    res = np.empty(top)
    res[:-1] = m[1:top] - (1.0 + up * m[2:top + 1] + down * m[0:top - 1])
    res[-1] = m[top] - (1.0 + m[top - 1])
    rel = float(np.max(np.abs(res)) / np.max(m))
    if rel > 1e-9:
        raise NumericError(f"first-step system residual {rel:.2e}")
    mean = 1.0 + a[1]
    var = q[1] - a[1] * a[1]
    return {"mean": float(mean), "variance": float(var),
            "normalized_mean": float(mean / 2.0 ** (n + 1)),
            "normalized_variance": float(var / 4.0 ** (n + 1)),
            "residual": rel}
