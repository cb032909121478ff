"""Configuration, seeding and sample summaries shared by the simulators."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import DegenerateOffspringError, DomainError

SUMMARY_LEVELS = (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)

# stream tags keep simulators on disjoint substreams for the same master seed
TAG_BRW, TAG_COVER, TAG_EPOCHS, TAG_BETA, TAG_TORUS, TAG_MISC = range(1, 7)


@dataclass(frozen=True)
class McConfig:
    reps: int = 1000
    master_seed: int = 0
    workers: int = 1
    dump: bool = False

    def __post_init__(self):
        if int(self.reps) < 1:
            raise DomainError("reps must be >= 1")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise DomainError("master_seed must be an unsigned 64-bit value")
        if int(self.workers) < 1:
            raise DomainError("workers must be >= 1")


def substream(master_seed: int, tag: int, index: int) -> np.random.Generator:
    """Independent generator for ``(tag, index)``; a pure function of its arguments."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(tag), int(index)))
    return np.random.Generator(np.random.PCG64(ss))


def run_ordered(fn: Callable[[int], object], n_tasks: int, workers: int) -> list:
    """``[fn(0), ..., fn(n_tasks - 1)]``, optionally on a thread pool; order is preserved."""
    if workers <= 1 or n_tasks <= 1:
        return [fn(i) for i in range(n_tasks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_tasks)))


def blocks(total: int, size: int) -> list[tuple[int, int]]:
    """Fixed partition of ``range(total)`` into ``[start, stop)`` blocks."""
    return [(s, min(s + size, total)) for s in range(0, total, size)]


class OffspringLaw:
    """Offspring distribution ``p[k]`` (``p[0] = 0``) with an inverse-CDF sampler."""

    def __init__(self, p: Sequence[float]):
        arr = np.asarray(p, dtype=float)
        if arr.ndim != 1 or arr.size < 2 or np.any(arr < 0):
            raise DomainError("offspring law must be a nonnegative vector indexed by k")
        if abs(arr.sum() - 1.0) > 1e-12:
            raise DomainError("offspring probabilities must sum to 1")
        if arr[0] != 0.0:
            raise DegenerateOffspringError("p_0 must be zero")
        if arr[1] >= 1.0:
            raise DegenerateOffspringError("p_1 = 1 gives a degenerate branching law")
        self.p = arr
        self.cdf = np.cumsum(arr)
        self.cdf[-1] = 1.0
        self.mean = float(np.dot(np.arange(arr.size), arr))

    @classmethod
    def binary(cls) -> "OffspringLaw":
        return cls([0.0, 0.0, 1.0])

    @classmethod
    def from_q(cls, q) -> "OffspringLaw":
        return cls.binary() if q.probs is None else cls(q.probs)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if np.count_nonzero(self.p) == 1:
            return np.full(size, int(np.argmax(self.p)), dtype=np.int64)
        return np.searchsorted(self.cdf, rng.random(size), side="right").astype(np.int64)


@dataclass
class SampleSummary:
    """Summary of a sample kept in full (reps up to ~10^7 fit in memory)."""

    values: np.ndarray
    extras: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()

    @property
    def count(self) -> int:
        return int(self.values.size)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values)) if self.count else math.nan

    @property
    def variance(self) -> float:
        if self.count < 2:
            return 0.0
        return float(np.var(self.values, ddof=1))

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(max(self.count, 1))

    def quantiles(self, levels: Sequence[float] = SUMMARY_LEVELS) -> dict:
        qs = np.quantile(self.values, np.asarray(levels, dtype=float))
        return {float(p): float(q) for p, q in zip(levels, np.maximum.accumulate(qs))}

    def iqr(self) -> float:
        q = np.quantile(self.values, [0.25, 0.75])
        return float(q[1] - q[0])

    def histogram(self, bins: int = 50) -> dict:
        lo, hi = float(self.values.min()), float(self.values.max())
        if hi == lo:
            return {"lo": lo, "width": 0.0, "counts": [self.count]}
        counts, edges = np.histogram(self.values, bins=bins, range=(lo, hi))
        return {"lo": lo, "width": float(edges[1] - edges[0]), "counts": counts.tolist()}

    def merge(self, other: "SampleSummary") -> "SampleSummary":
        extras = {}
        for k in list(self.extras) + [k for k in other.extras if k not in self.extras]:
            a, b = self.extras.get(k), other.extras.get(k)
            extras[k] = a.merge(b) if (a is not None and b is not None) else (a or b)
        return SampleSummary(np.concatenate([self.values, other.values]), extras, dict(self.meta))

    def to_dict(self, with_extras: bool = True) -> dict:
        d = {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "quantiles": {str(k): v for k, v in self.quantiles().items()},
            "histogram": self.histogram(),
            "meta": self.meta,
        }
        if with_extras:
            d["extras"] = {k: v.to_dict() for k, v in self.extras.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def dump_csv(self, extra: str | None = None) -> str:
        """Per-sample CSV ``replica,value[,extra]``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        col = None
        if extra is not None:
            col = self.extras[extra].values
            if col.size != self.count:
                raise DomainError(f"extra {extra!r} is not per-replica")
        w.writerow(["replica", "value"] + ([extra] if extra else []))
        for i, v in enumerate(self.values):
            row = [i, repr(float(v))]
            if col is not None:
                row.append(repr(float(col[i])))
            w.writerow(row)
        return buf.getvalue()
