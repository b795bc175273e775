"""Random generation of simple d-regular graphs.

Three models are provided: the pairing (configuration) model conditioned
on simplicity, which realizes the uniform distribution over simple
d-regular graphs exactly; the permutation model (d even); and the
matching model (n even).  The latter two are multigraph models conditioned
on simplicity by rejection.

Randomness comes from counter-based Philox streams keyed by
(seed, *path), so Monte-Carlo batches reproduce bit-for-bit under any
parallel schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import RegularGraph

MODELS = ("uniform_pairing", "permutation", "matching")


class RejectionLimitError(RuntimeError):
    """Simplicity rejection did not terminate within the configured number
    of attempts (d too large relative to n)."""


def stream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the given (seed, *path) key."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seed=ss))


@dataclass(frozen=True)
class SamplerConfig:
    n: int
    d: int
    model: str = "uniform_pairing"
    seed: int = 0
    max_rejections: int = 10_000

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}, expected one of {MODELS}")
        if self.d < 3 or self.d > self.n - 1:
            raise ValueError(f"need 3 <= d <= n-1, got d={self.d}, n={self.n}")
        if (self.n * self.d) % 2 != 0:
            raise ValueError("n*d must be even")
        if self.model == "permutation" and self.d % 2 != 0:
            raise ValueError("permutation model requires even d")
        if self.model == "matching" and self.n % 2 != 0:
            raise ValueError("matching model requires even n")
        if self.max_rejections < 1:
            raise ValueError("max_rejections must be positive")


def _simple_edge_set(pairs: np.ndarray, n: int):
    """Canonical edge set if the pairing is simple, else None."""
    lo = pairs.min(axis=1)
    hi = pairs.max(axis=1)
    if (lo == hi).any():
        return None
    keys = lo.astype(np.int64) * n + hi
    if np.unique(keys).size != keys.size:
        return None
    return list(zip(lo.tolist(), hi.tolist()))


def _try_pairing(n: int, d: int, rng) -> list | None:
    stubs = np.repeat(np.arange(n), d)
    rng.shuffle(stubs)
    return _simple_edge_set(stubs.reshape(-1, 2), n)


def _try_permutation(n: int, d: int, rng) -> list | None:
    idx = np.arange(n)
    stacked = []
    for _ in range(d // 2):
        sigma = rng.permutation(n)
        stacked.append(np.column_stack([idx, sigma]))
    return _simple_edge_set(np.concatenate(stacked), n)


def _try_matching(n: int, d: int, rng) -> list | None:
    stacked = []
    for _ in range(d):
        perm = rng.permutation(n)
        stacked.append(perm.reshape(-1, 2))
    return _simple_edge_set(np.concatenate(stacked), n)


_TRIALS = {
    "uniform_pairing": _try_pairing,
    "permutation": _try_permutation,
    "matching": _try_matching,
}


def sample(cfg: SamplerConfig, rng: np.random.Generator) -> RegularGraph:
    """Draw one simple d-regular graph from the configured model."""
    attempt = _TRIALS[cfg.model]
    for _ in range(cfg.max_rejections):
        edges = attempt(cfg.n, cfg.d, rng)
        if edges is not None:
            return RegularGraph.from_edges(cfg.n, cfg.d, edges)
    raise RejectionLimitError(
        f"no simple graph found in {cfg.max_rejections} attempts "
        f"(model={cfg.model}, n={cfg.n}, d={cfg.d})"
    )


def sample_many(cfg: SamplerConfig, count: int):
    """Deterministic batch: sample index m uses the stream (seed, m)."""
    return [sample(cfg, stream(cfg.seed, m)) for m in range(count)]


def acceptance_fraction(cfg: SamplerConfig, attempts: int, rng) -> float:
    """Fraction of raw multigraph draws that are simple (sanity probe for
    the rejection rate)."""
    attempt = _TRIALS[cfg.model]
    hits = sum(1 for _ in range(attempts) if attempt(cfg.n, cfg.d, rng) is not None)
    return hits / attempts


def directed_edges(g: RegularGraph):
    """All n*d oriented edges (u, v), (v, u), sorted."""
    out = []
    for u, v in g.edges():
        out.append((u, v))
        out.append((v, u))
    out.sort()
    return out
