"""Randomized recursive similarity self-join with adaptive brute-force stops.

Each repetition recursively splits the record set: a node samples signature
coordinates independently with probability min(1, 1/(threshold * sig_len)) and
partitions its records by signature value on each sampled coordinate,
recursing on non-singleton children. Similar records agree on sampled
coordinates often enough to meet in a node with probability bounded below, so
a fixed number of repetitions gives per-pair recall; every reported pair is
exactly verified, so precision is 1.

Before splitting, a node removes records that look similar to the whole
bucket: a pooled sketch summarizes the bucket, every record whose estimated
average similarity exceeds (1 - eps) * threshold is compared against the full
bucket directly, and buckets at or below `limit` are compared pairwise and not
split at all. Comparisons are filtered by record sizes and by 1-bit sketches
at a cutoff that keeps threshold-similar pairs except with probability delta.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .datasets import Dataset
from .exact import verify_pairs
from .prep import Prepared, preprocess
from .sketch import estimate_rows, filter_threshold, pooled_sketch
from .stats import JoinStats, decode_pairs, encode_pairs, unique_pairs
from .tabulation import derive_seed, splitmix64, splitmix64_array

_EPS = 1e-9
_REP_TAG = 0x726570
_POOL_TAG = 1
_MASK_TAG = 2
_CHILD_TAG_BASE = 3
_PAIR_BLOCK = 2 ** 20  # pair-estimate cells per block in the all-pairs step


@dataclass(frozen=True)
class CpsConfig:
    threshold: float
    sig_len: int = 128
    sketch_words: int = 8
    delta: float = 0.05
    eps: float = 0.1
    limit: int = 250
    reps: int = 10
    seed: int = 0x5E770

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("threshold must be in (0, 1]")
        if self.sig_len < 1:
            raise ValueError("sig_len must be >= 1")
        if self.sketch_words < 1:
            raise ValueError("sketch_words must be >= 1")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must be in (0, 1]")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must be in [0, 1]")
        if self.limit < 2:
            raise ValueError("limit must be >= 2")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")


class _Ctx:
    __slots__ = ("data", "sig", "sk", "sizes", "threshold", "eps", "limit",
                 "filter_cut", "sig_len", "stats", "codes", "depth_cap")

    def __init__(self, prep: Prepared, cfg: CpsConfig, stats: JoinStats):
        self.data = prep.data
        self.sig = prep.sig
        self.sk = prep.sketches
        self.sizes = prep.data.sizes.astype(np.int64)
        self.threshold = cfg.threshold
        self.eps = cfg.eps
        self.limit = cfg.limit
        self.filter_cut = filter_threshold(cfg.threshold, prep.sketch_bits, cfg.delta)
        self.sig_len = cfg.sig_len
        self.stats = stats
        self.codes = []
        # Engineering guard far above the expected O(log n / eps) depth; a
        # stuck bucket gets brute-forced instead of recursing forever.
        self.depth_cap = 64 + int(10 * math.log2(prep.data.n + 1))


def coordinate_mask(seed: int, sig_len: int, threshold: float) -> np.ndarray:
    """Per-node coordinate sample: Bernoulli(min(1, 1/(threshold*sig_len)))."""
    p = min(1.0, 1.0 / (threshold * sig_len))
    u = _uniforms(seed, sig_len)
    return u < p


def _uniforms(seed: int, count: int) -> np.ndarray:
    vals = splitmix64_array(seed, np.arange(count, dtype=np.uint64))
    return (vals >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def _size_ok(sizes_a, size_or_sizes_b, threshold: float) -> np.ndarray:
    smin = np.minimum(sizes_a, size_or_sizes_b)
    smax = np.maximum(sizes_a, size_or_sizes_b)
    return threshold * smax <= smin + _EPS


def _verify_and_emit(ctx: _Ctx, a_ids: np.ndarray, b_ids: np.ndarray):
    ok = verify_pairs(ctx.data, a_ids, b_ids, ctx.threshold)
    if ok.any():
        ctx.codes.append(encode_pairs(a_ids[ok], b_ids[ok]))


def _brute_force_pairs(ids: np.ndarray, ctx: _Ctx):
    m = ids.size
    if m < 2:
        return
    ctx.stats.pre_candidates += m * (m - 1) // 2
    sk = ctx.sk[ids]
    sizes = ctx.sizes[ids]
    block = max(1, _PAIR_BLOCK // m)
    for i0 in range(0, m, block):
        i1 = min(m, i0 + block)
        est = estimate_rows(sk[i0:i1, None, :], sk[None, :, :])
        upper = np.arange(m)[None, :] > np.arange(i0, i1)[:, None]
        mask = upper & _size_ok(sizes[i0:i1, None], sizes[None, :], ctx.threshold) \
            & (est >= ctx.filter_cut)
        ri, ci = np.nonzero(mask)
        ctx.stats.candidates += ri.size
        if ri.size:
            _verify_and_emit(ctx, ids[ri + i0], ids[ci])


def _brute_force_point(bucket: np.ndarray, x: int, ctx: _Ctx):
    others = bucket[bucket != x]
    ctx.stats.pre_candidates += others.size
    est = estimate_rows(ctx.sk[others], ctx.sk[x])
    mask = _size_ok(ctx.sizes[others], ctx.sizes[x], ctx.threshold) \
        & (est >= ctx.filter_cut)
    ctx.stats.candidates += int(np.count_nonzero(mask))
    cand = others[mask]
    if cand.size:
        _verify_and_emit(ctx, np.full(cand.size, x, dtype=np.int64), cand)


def brute_force_step(ids: np.ndarray, node_seed: int, ctx: _Ctx) -> np.ndarray:
    """Handle a bucket's brute-force work; return the records that recurse on.

    Buckets at or below the limit are compared pairwise and consumed. Larger
    buckets are summarized by one pooled sketch; records whose estimated
    average similarity to the bucket exceeds (1 - eps) * threshold are
    compared against the full bucket and removed, all in a single pass.
    """
    if ids.size == 0:
        return ids
    if ids.size <= ctx.limit:
        _brute_force_pairs(ids, ctx)
        return ids[:0]
    sk_rows = ctx.sk[ids]
    pooled = pooled_sketch(sk_rows, derive_seed(node_seed, _POOL_TAG))
    est = estimate_rows(sk_rows, pooled)
    removed = est > (1.0 - ctx.eps) * ctx.threshold
    if removed.any():
        for x in ids[removed]:
            _brute_force_point(ids, int(x), ctx)
        ids = ids[~removed]
    return ids


def _recurse(ids: np.ndarray, node_seed: int, depth: int, ctx: _Ctx):
    if depth > ctx.stats.max_depth:
        ctx.stats.max_depth = depth
    ids = brute_force_step(ids, node_seed, ctx)
    if ids.size < 2:
        return
    if depth >= ctx.depth_cap:
        _brute_force_pairs(ids, ctx)
        return
    mask = coordinate_mask(derive_seed(node_seed, _MASK_TAG), ctx.sig_len, ctx.threshold)
    for coord in np.flatnonzero(mask):
        vals = ctx.sig[ids, coord]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        cuts = np.flatnonzero(sv[1:] != sv[:-1]) + 1
        bounds = np.concatenate([[0], cuts, [sv.size]])
        for a, b in zip(bounds[:-1], bounds[1:]):
            if b - a >= 2:
                child_seed = splitmix64(
                    splitmix64(node_seed, _CHILD_TAG_BASE + int(coord)), int(sv[a]))
                _recurse(ids[order[a:b]], child_seed, depth + 1, ctx)


def repetition_codes(prep: Prepared, cfg: CpsConfig, rep: int, stats: JoinStats) -> np.ndarray:
    """Run one repetition; returns raw (possibly duplicated) pair codes."""
    ctx = _Ctx(prep, cfg, stats)
    rep_seed = splitmix64(derive_seed(cfg.seed, _REP_TAG), rep)
    ids = np.arange(prep.data.n, dtype=np.int64)
    _recurse(ids, rep_seed, 0, ctx)
    return np.concatenate(ctx.codes) if ctx.codes else np.zeros(0, dtype=np.uint64)


def cps_join_prepared(prep: Prepared, cfg: CpsConfig):
    """Join an already-embedded dataset; returns ((m, 2) pairs, JoinStats)."""
    _check_compatible(prep, cfg)
    stats = JoinStats(preprocess_s=prep.elapsed_s)
    t0 = time.perf_counter()
    chunks = [repetition_codes(prep, cfg, rep, stats) for rep in range(cfg.reps)]
    merged = unique_pairs(chunks)
    stats.results = merged.size
    stats.join_s = time.perf_counter() - t0
    return decode_pairs(merged), stats


def cps_join(data: Dataset, cfg: CpsConfig):
    """Embed, sketch, and join a dataset; returns ((m, 2) pairs, JoinStats)."""
    prep = preprocess(data, cfg.sig_len, cfg.sketch_words, cfg.seed)
    return cps_join_prepared(prep, cfg)


def _check_compatible(prep: Prepared, cfg: CpsConfig):
    if prep.sig_len != cfg.sig_len or prep.sketch_words != cfg.sketch_words:
        raise ValueError("prepared embedding does not match the config dimensions")


def co_bucket_frequency(sig_a, sig_b, threshold: float, depth: int,
                        trials: int, seed: int = 0) -> float:
    """Empirical probability that two signatures stay together to `depth`.

    Simulates the recursive split on a pair with fresh coordinate samples per
    node (the production sampling rule), counting trials where some depth-k
    node still contains both records. Mirrors the branching-process view: a
    node's offspring are the sampled coordinates on which the signatures
    agree, since equal values land in the same child and unequal values make
    both children singletons.
    """
    sig_a = np.asarray(sig_a)
    sig_b = np.asarray(sig_b)
    if sig_a.shape != sig_b.shape:
        raise ValueError("signature shapes differ")
    sig_len = sig_a.size
    agree_idx = np.flatnonzero(sig_a == sig_b)
    p = min(1.0, 1.0 / (threshold * sig_len))
    cap = 64  # survival is near certain long before a frontier this wide dies
    chunk = 2 ** 16
    alive = np.ones(trials, dtype=np.int64)
    level_seed = seed
    for level in range(depth):
        level_seed = splitmix64(level_seed, 0xD0 + level)
        total = int(alive.sum())
        if total == 0:
            break
        # One production-style coordinate mask per live node; offspring are
        # the sampled coordinates on which the signatures agree.
        offspring = np.empty(total, dtype=np.int64)
        for c0 in range(0, total, chunk):
            c1 = min(total, c0 + chunk)
            node_seeds = splitmix64_array(level_seed, np.arange(c0, c1, dtype=np.uint64))
            u = (splitmix64_array(node_seeds[:, None],
                                  np.arange(sig_len, dtype=np.uint64)[None, :])
                 >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
            offspring[c0:c1] = (u[:, agree_idx] < p).sum(axis=1)
        trial_of_node = np.repeat(np.arange(trials), alive)
        sums = np.bincount(trial_of_node, weights=offspring, minlength=trials)
        alive = np.minimum(sums.astype(np.int64), cap)
    return float(np.count_nonzero(alive)) / trials
