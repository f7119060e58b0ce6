"""Monte Carlo simulation of the walk and its local time at chosen states.

The local time N_n(y) counts visits to y during times 0..n inclusive.
The k=0 term is counted: the start state begins with one visit before
any step is taken.  Everything downstream (moments, limit-law checks)
shifts if this off-by-one is introduced, so it is asserted in tests.

Reproducibility contract: replica r draws from its own Philox stream
keyed (seed, r).  Streams never interact, so results are bit-identical
for any thread count and any batching of the replicas, and the scalar
reference path in `simulate_replica` reproduces the vectorized engine
replica for replica.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .errors import StateCapError
from .gegenbauer import HypergroupIndex
from .hypergroup import DEFAULT_STATE_CAP, GegenbauerKernel, SparseMeasure, kernel_row

_BLOCK = 4096   # replicas advanced together by the vectorized engine
_CHUNK = 4096   # uniforms buffered per replica between refills
_ROW_CACHE = 4096


@dataclass(frozen=True)
class WalkConfig:
    """Full description of one simulation run.

    Fixing every field, including the seed, pins the output exactly.
    """

    idx: HypergroupIndex
    mu: SparseMeasure
    start: int
    horizon: int
    replicas: int
    target_states: tuple[int, ...]
    seed: int

    def __post_init__(self) -> None:
        if self.mu.is_signed:
            raise ValueError("WalkConfig: step measure must be a probability")
        if self.start < 0:
            raise ValueError("WalkConfig: start state must be >= 0")
        if self.horizon < 0:
            raise ValueError("WalkConfig: horizon must be >= 0")
        if self.replicas < 1:
            raise ValueError("WalkConfig: need at least one replica")
        targets = tuple(int(y) for y in self.target_states)
        if not targets or any(y < 0 for y in targets):
            raise ValueError("WalkConfig: target states must be a nonempty list of states")
        object.__setattr__(self, "target_states", targets)
        if not 0 <= self.seed < 2**64:
            raise ValueError("WalkConfig: seed must fit in 64 bits")

    @property
    def kernel(self) -> GegenbauerKernel:
        return GegenbauerKernel(self.idx, self.mu)


class PathSummary(NamedTuple):
    replica: int
    terminal: int
    max_state: int


@dataclass
class LocalTimeSamples:
    """Per-replica visit counts at the target states, plus terminal states.

    counts[r, j] = N_horizon(targets[j]) for replica r, as 64-bit ints;
    statistics are formed in double precision only at readout.
    """

    targets: tuple[int, ...]
    counts: np.ndarray
    terminal: np.ndarray
    horizon: int
    seed: int

    @property
    def replicas(self) -> int:
        return self.counts.shape[0]

    def counts_for(self, y: int) -> np.ndarray:
        return self.counts[:, self.targets.index(y)]

    def to_csv(self) -> str:
        """Rows ``replica,y,count``, replica-major, targets in given order."""
        lines = ["replica,y,count"]
        for r in range(self.replicas):
            for j, y in enumerate(self.targets):
                lines.append(f"{r},{y},{self.counts[r, j]}")
        return "\n".join(lines) + "\n"

    def summary(self, scale: float = 1.0) -> dict:
        """Moments and a unit-width histogram of count/scale per target."""
        if scale <= 0:
            raise ValueError("scale must be positive")
        out: dict = {
            "replicas": self.replicas,
            "horizon": self.horizon,
            "seed": self.seed,
            "scale": scale,
            "targets": {},
        }
        for j, y in enumerate(self.targets):
            x = self.counts[:, j].astype(float) / scale
            bins = np.floor(x).astype(np.int64)
            uniq, freq = np.unique(bins, return_counts=True)
            out["targets"][str(y)] = {
                "mean_count": float(self.counts[:, j].mean()),
                "scaled_moments": {
                    "m1": float(x.mean()),
                    "m2": float(np.mean(x**2)),
                    "m3": float(np.mean(x**3)),
                },
                "histogram": {str(int(b)): int(c) for b, c in zip(uniq, freq)},
            }
        return out

    def summary_json(self, scale: float = 1.0) -> str:
        return json.dumps(self.summary(scale), indent=2, sort_keys=True)


def _replica_rng(seed: int, r: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, r]))


@lru_cache(maxsize=_ROW_CACHE)
def _row_cdf(alpha: float, mu_items: tuple, x: int) -> tuple:
    """Sampling CDF of the kernel row at x over offsets -smax..+smax.

    Entry j is the cumulative mass of states x - smax + j; the final
    entry is forced to 1.0 so a uniform draw always lands.  Offsets that
    fall outside the row (negative states, parity gaps) carry no new
    mass and can never be selected.
    """
    idx = HypergroupIndex(alpha)
    mu = SparseMeasure(dict(mu_items))
    row = kernel_row(GegenbauerKernel(idx, mu), x)
    smax = mu.max_state
    run = 0.0
    cdf = []
    for d in range(-smax, smax + 1):
        if x + d >= 0:
            run += row[x + d]
        cdf.append(run)
    cdf[-1] = 1.0
    return tuple(cdf)


def _is_unit_step(mu: SparseMeasure) -> bool:
    return mu.support == (1,)


def simulate_replica(config: WalkConfig, replica: int) -> tuple[PathSummary, dict]:
    """Scalar reference simulation of one replica.

    Walks step by step, sampling each transition by inverse CDF on the
    kernel row of the current state (rows held in a bounded read-through
    cache).  The unit-step measure takes a closed-form two-point path
    with no cache.  One uniform is consumed per step on every route,
    including forced moves, so the stream position is route-independent.
    """
    if not 0 <= replica < config.replicas:
        raise ValueError("replica index out of range")
    rng = _replica_rng(config.seed, replica)
    a = config.idx.alpha
    mu_items = tuple(config.mu.items())
    smax = config.mu.max_state
    fast = _is_unit_step(config.mu)
    targets = config.target_states

    s = config.start
    smax_seen = s
    counts = {y: 0 for y in targets}
    if s in counts:
        counts[s] += 1  # the k = 0 visit
    c2 = 2.0 * a + 1.0
    for _ in range(config.horizon):
        u = rng.random()
        if fast:
            if s > 0 and u < s / (2.0 * s + c2):
                s -= 1
            else:
                s += 1
        else:
            cdf = _row_cdf(a, mu_items, s)
            s += bisect_right(cdf, u) - smax
        if s > smax_seen:
            smax_seen = s
        if s in counts:
            counts[s] += 1
    return PathSummary(replica, s, smax_seen), counts


class _RowTable:
    """Dense sampling-CDF table over states 0..nrows-1, grown on demand.

    The vectorized engine's version of the row cache: rows come from the
    same `_row_cdf` entries the scalar path uses, so both routes compare
    a uniform against identical doubles.
    """

    def __init__(self, alpha: float, mu: SparseMeasure, start: int):
        self.alpha = alpha
        self.mu_items = tuple(mu.items())
        self.smax = mu.max_state
        self.width = 2 * self.smax + 1
        self.cdf = np.empty((0, self.width))
        self.grow(start + 64 * self.smax)

    def grow(self, needed: int) -> None:
        if needed + 1 > DEFAULT_STATE_CAP:
            raise StateCapError(
                f"sampling-row table would need {needed + 1} states",
                required=needed + 1,
            )
        old = self.cdf.shape[0]
        new = np.empty((needed + 1, self.width))
        new[:old] = self.cdf
        for x in range(old, needed + 1):
            new[x] = _row_cdf(self.alpha, self.mu_items, x)
        self.cdf = new

    def ensure(self, max_state: int) -> None:
        if max_state + self.smax >= self.cdf.shape[0]:
            self.grow(max_state + 64 * self.smax)


def _run_block(
    config: WalkConfig,
    r0: int,
    r1: int,
    horizon: int,
    snap_steps: Sequence[int],
) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Advance replicas r0..r1-1 in lockstep to `horizon`.

    Returns per-replica counts (B x K int64), terminal states, and the
    per-target count sums at each requested snapshot step.
    """
    B = r1 - r0
    a = config.idx.alpha
    targets = config.target_states
    K = len(targets)
    fast = _is_unit_step(config.mu)
    gens = [_replica_rng(config.seed, r) for r in range(r0, r1)]

    S = np.full(B, config.start, dtype=np.int64)
    counts = np.zeros((B, K), dtype=np.int64)
    for j, y in enumerate(targets):
        counts[:, j] += S == y  # the k = 0 visit
    snaps: list[np.ndarray] = []
    snap_iter = iter(snap_steps)
    next_snap = next(snap_iter, None)
    if next_snap == 0:
        snaps.append(counts.sum(axis=0))
        next_snap = next(snap_iter, None)

    table = None if fast else _RowTable(a, config.mu, config.start)
    smax = config.mu.max_state
    c2 = 2.0 * a + 1.0
    d = np.empty(B)
    p = np.empty(B)

    chunk = min(_CHUNK, horizon) if horizon else 0
    U = np.empty((B, chunk)) if chunk else None
    done = 0
    while done < horizon:
        T = min(chunk, horizon - done)
        for i, g in enumerate(gens):
            g.random(out=U[i, :T])
        Ut = np.ascontiguousarray(U[:, :T].T)
        for t in range(T):
            u = Ut[t]
            if fast:
                np.multiply(S, 2.0, out=d)
                d += c2
                p.fill(0.0)
                np.divide(S, d, out=p, where=d > 0)
                S += 1
                S -= 2 * (u < p)
            else:
                table.ensure(int(S.max()))
                rows = table.cdf[S]
                S += (rows <= u[:, None]).sum(axis=1) - smax
            for j, y in enumerate(targets):
                counts[:, j] += S == y
            if done + t + 1 == next_snap:
                snaps.append(counts.sum(axis=0))
                next_snap = next(snap_iter, None)
        done += T
    return counts, S.copy(), snaps


def _block_ranges(replicas: int) -> list[tuple[int, int]]:
    return [(r0, min(r0 + _BLOCK, replicas)) for r0 in range(0, replicas, _BLOCK)]


def local_time_counts(
    config: WalkConfig,
    *,
    threads: int = 1,
    debug_full_histogram: bool = False,
) -> LocalTimeSamples:
    """Visit counts at the target states for every replica.

    Replicas run in fixed blocks of 4096; blocks may run on a thread
    pool but write disjoint slices of the result, so the output is
    bit-identical for any `threads`.  With `debug_full_histogram` the
    target list is replaced by every reachable state and the per-replica
    count total is asserted to be horizon + 1.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    cfg = config
    if debug_full_histogram:
        top = config.start + config.horizon * config.mu.max_state
        if top + 1 > 100_000:
            raise ValueError("full-histogram mode is for small desk-scale runs")
        cfg = WalkConfig(
            config.idx,
            config.mu,
            config.start,
            config.horizon,
            config.replicas,
            tuple(range(top + 1)),
            config.seed,
        )
    R = cfg.replicas
    K = len(cfg.target_states)
    counts = np.empty((R, K), dtype=np.int64)
    terminal = np.empty(R, dtype=np.int64)
    blocks = _block_ranges(R)

    def run(span: tuple[int, int]) -> None:
        r0, r1 = span
        c, term, _ = _run_block(cfg, r0, r1, cfg.horizon, ())
        counts[r0:r1] = c
        terminal[r0:r1] = term

    if threads == 1 or len(blocks) == 1:
        for span in blocks:
            run(span)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, blocks))

    out = LocalTimeSamples(cfg.target_states, counts, terminal, cfg.horizon, cfg.seed)
    if debug_full_histogram:
        totals = counts.sum(axis=1)
        assert (totals == cfg.horizon + 1).all(), "visit counts must cover every step"
    return out


def mean_visits_curve(
    config: WalkConfig,
    checkpoints: Sequence[int],
    *,
    threads: int = 1,
) -> list[tuple[int, dict[int, float]]]:
    """Empirical mean of N_n(y) at several horizons n, one pass per replica.

    Checkpoints must be ascending and within the configured horizon.
    Returns rows (n, {y: mean over replicas}).
    """
    cps = [int(n) for n in checkpoints]
    if not cps:
        raise ValueError("need at least one checkpoint")
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must be strictly ascending")
    if cps[0] < 0 or cps[-1] > config.horizon:
        raise ValueError("checkpoints must lie in [0, horizon]")
    if threads < 1:
        raise ValueError("threads must be >= 1")

    K = len(config.target_states)
    sums = np.zeros((len(cps), K), dtype=np.int64)
    blocks = _block_ranges(config.replicas)

    def run(span: tuple[int, int]) -> np.ndarray:
        r0, r1 = span
        _, _, snaps = _run_block(config, r0, r1, cps[-1], cps)
        return np.stack(snaps)

    if threads == 1 or len(blocks) == 1:
        for span in blocks:
            sums += run(span)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(run, blocks):
                sums += part

    R = config.replicas
    return [
        (n, {y: sums[i, j] / R for j, y in enumerate(config.target_states)})
        for i, n in enumerate(cps)
    ]
