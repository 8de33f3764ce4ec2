"""Experiment runner: joins with recall accounting and CSV reports.

The protocol for approximate algorithms mirrors how the join quality is
reported: the exact result is computed once per (dataset, threshold) with the
inverted-index join, repetitions run cumulatively, and the run stops once the
union of reported pairs reaches the recall target (or the repetition budget).
Reported join time covers the repetitions only; embedding/sketching time is
its own column and the oracle is never timed into either.
"""

from __future__ import annotations

import csv
import hashlib
import io
import time
from dataclasses import dataclass, replace

import numpy as np

from . import cpsjoin as cps
from . import lsh as mlsh
from .datasets import Dataset
from .exact import allpairs_join, brute_force_join
from .stats import JoinStats, decode_pairs, encode_pairs
from .prep import preprocess
from .tabulation import derive_seed

ALGORITHMS = ("cpsjoin", "lsh", "allpairs", "bruteforce")

SWEEP_PARAMS = ("limit", "eps", "sketch_words")
_SWEEP_RECALL_FLOOR = 0.8

_TIMING_COLUMNS = ("join_time_s", "preprocess_time_s", "relative_join_time")
COLUMNS = ("dataset", "algorithm", "threshold", "join_time_s", "preprocess_time_s",
           "recall", "reps_used", "pre_candidates", "candidates", "results",
           "relative_join_time", "params")


@dataclass(frozen=True)
class ExperimentSpec:
    dataset: str
    data: Dataset
    algorithm: str
    thresholds: tuple
    recall_target: float = 0.9
    max_reps: int | None = None  # None: 10 for cpsjoin, formula for lsh
    limit: int = 250
    eps: float = 0.1
    sig_len: int = 128
    sketch_words: int = 8
    delta: float = 0.05
    k: int | None = None
    use_oracle: bool = True
    trials: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if not self.thresholds:
            raise ValueError("need at least one threshold")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass
class ReportRow:
    dataset: str
    algorithm: str
    threshold: float
    join_time_s: float
    preprocess_time_s: float
    recall: float | None
    reps_used: int
    pre_candidates: int
    candidates: int
    results: int
    relative_join_time: float | None = None
    params: str = ""


def _stable_seed(*parts) -> int:
    digest = hashlib.blake2b("|".join(map(str, parts)).encode(), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


def _oracle_codes(data: Dataset, threshold: float) -> np.ndarray:
    cache = getattr(data, "_oracle_cache", None)
    if cache is None:
        cache = {}
        data._oracle_cache = cache
    if threshold not in cache:
        pairs, _ = allpairs_join(data, threshold)
        cache[threshold] = encode_pairs(pairs[:, 0], pairs[:, 1])
    return cache[threshold]


def _params_echo(spec: ExperimentSpec, extra: dict) -> str:
    base = {"sig_len": spec.sig_len, "sketch_words": spec.sketch_words,
            "delta": spec.delta, "seed": spec.seed, "trials": spec.trials}
    base.update(extra)
    return ";".join(f"{k}={v}" for k, v in base.items())


def run(spec: ExperimentSpec) -> list[ReportRow]:
    """One report row per threshold for the spec's algorithm."""
    if spec.algorithm in ("allpairs", "bruteforce"):
        return _run_exact(spec)
    return _run_approximate(spec)


def _run_exact(spec: ExperimentSpec) -> list[ReportRow]:
    join = allpairs_join if spec.algorithm == "allpairs" else brute_force_join
    rows = []
    for lam in spec.thresholds:
        times = []
        for _ in range(spec.trials):
            pairs, stats = join(spec.data, lam)
            times.append(stats.join_s)
        rows.append(ReportRow(
            dataset=spec.dataset, algorithm=spec.algorithm, threshold=lam,
            join_time_s=float(np.mean(times)), preprocess_time_s=0.0,
            recall=1.0 if spec.use_oracle else None, reps_used=1,
            pre_candidates=stats.pre_candidates, candidates=stats.candidates,
            results=stats.results,
            params=_params_echo(spec, {}),
        ))
    return rows


def _run_approximate(spec: ExperimentSpec) -> list[ReportRow]:
    rows = []
    base_seed = _stable_seed(spec.seed, spec.dataset, spec.algorithm)
    for lam in spec.thresholds:
        exact = _oracle_codes(spec.data, lam) if spec.use_oracle else None
        trial_times = []
        for trial in range(spec.trials):
            trial_seed = derive_seed(base_seed, trial)
            prep = preprocess(spec.data, spec.sig_len, spec.sketch_words, trial_seed)
            stats = JoinStats(preprocess_s=prep.elapsed_s)
            if spec.algorithm == "cpsjoin":
                cfg = cps.CpsConfig(
                    threshold=lam, sig_len=spec.sig_len, sketch_words=spec.sketch_words,
                    delta=spec.delta, eps=spec.eps, limit=spec.limit,
                    reps=spec.max_reps or 10, seed=trial_seed)
                max_reps = cfg.reps
                rep_codes = lambda r: cps.repetition_codes(prep, cfg, r, stats)
                extra = {"limit": spec.limit, "eps": spec.eps, "reps": max_reps}
            else:
                cfg = mlsh.LshConfig(
                    threshold=lam, recall_target=spec.recall_target, k=spec.k,
                    reps=spec.max_reps, sig_len=spec.sig_len,
                    sketch_words=spec.sketch_words, delta=spec.delta, seed=trial_seed)
                k, max_reps = mlsh.resolve_params(prep, cfg)
                rep_codes = lambda r: mlsh.repetition_codes(prep, cfg, k, r, stats)
                extra = {"k": k, "reps": max_reps}

            found = np.zeros(0, dtype=np.uint64)
            recall = None
            reps_used = 0
            join_t = 0.0
            for rep in range(max_reps):
                t0 = time.perf_counter()
                codes = rep_codes(rep)
                join_t += time.perf_counter() - t0
                reps_used += 1
                if codes.size:
                    found = np.union1d(found, codes)
                if exact is not None:
                    recall = _recall(found, exact)
                    if recall >= spec.recall_target:
                        break
            trial_times.append(join_t)
        stats.results = found.size
        rows.append(ReportRow(
            dataset=spec.dataset, algorithm=spec.algorithm, threshold=lam,
            join_time_s=float(np.mean(trial_times)),
            preprocess_time_s=prep.elapsed_s,
            recall=recall, reps_used=reps_used,
            pre_candidates=stats.pre_candidates, candidates=stats.candidates,
            results=stats.results,
            params=_params_echo(spec, extra),
        ))
    return rows


def _recall(found: np.ndarray, exact: np.ndarray) -> float:
    if exact.size == 0:
        return 1.0
    return np.intersect1d(found, exact).size / exact.size


def join_pairs(spec: ExperimentSpec, threshold: float):
    """The pair array an approximate run reports (all repetitions, no early
    stop); convenience for tests and the CLI's pair dump."""
    one = replace(spec, thresholds=(threshold,), use_oracle=False, trials=1)
    base_seed = _stable_seed(one.seed, one.dataset, one.algorithm)
    trial_seed = derive_seed(base_seed, 0)
    prep = preprocess(one.data, one.sig_len, one.sketch_words, trial_seed)
    if one.algorithm == "cpsjoin":
        cfg = cps.CpsConfig(threshold=threshold, sig_len=one.sig_len,
                            sketch_words=one.sketch_words, delta=one.delta,
                            eps=one.eps, limit=one.limit, reps=one.max_reps or 10,
                            seed=trial_seed)
        return cps.cps_join_prepared(prep, cfg)
    if one.algorithm == "lsh":
        cfg = mlsh.LshConfig(threshold=threshold, recall_target=one.recall_target,
                             k=one.k, reps=one.max_reps, sig_len=one.sig_len,
                             sketch_words=one.sketch_words, delta=one.delta,
                             seed=trial_seed)
        return mlsh.lsh_join_prepared(prep, cfg)
    join = allpairs_join if one.algorithm == "allpairs" else brute_force_join
    return join(one.data, threshold)


def sweep(spec: ExperimentSpec, param: str, values) -> list[ReportRow]:
    """Parameter sweep at the first threshold, recall floor 0.8.

    One run per value at a fixed seed; every row carries its join time divided
    by the join time of the run at the parameter's default value.
    """
    if spec.algorithm != "cpsjoin":
        raise ValueError("sweeps cover the recursive join's parameters")
    if param not in SWEEP_PARAMS:
        raise ValueError(f"sweep parameter must be one of {SWEEP_PARAMS}")
    values = list(values)
    if not values:
        raise ValueError("need at least one sweep value")
    lam = spec.thresholds[0]
    base = replace(spec, thresholds=(lam,),
                   recall_target=max(spec.recall_target, _SWEEP_RECALL_FLOOR))
    defaults = {"limit": 250, "eps": 0.1, "sketch_words": 8}
    default_row = run(replace(base, **{param: defaults[param]}))[0]
    rows = []
    for value in values:
        if value == defaults[param]:
            row = ReportRow(**vars(default_row))
        else:
            row = run(replace(base, **{param: value}))[0]
        row.relative_join_time = (row.join_time_s / default_row.join_time_s
                                  if default_row.join_time_s > 0 else 1.0)
        row.params += f";sweep={param}:{value}"
        rows.append(row)
    return rows


def write_csv(rows, out) -> None:
    """Write report rows; `out` is a path or a text file object."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    own = isinstance(out, (str, bytes)) or hasattr(out, "__fspath__")
    fh = open(out, "w", newline="", encoding="utf-8") if own else out
    try:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([
                row.dataset, row.algorithm, _fmt(row.threshold),
                f"{row.join_time_s:.6f}", f"{row.preprocess_time_s:.6f}",
                "" if row.recall is None else f"{row.recall:.6f}",
                row.reps_used, row.pre_candidates, row.candidates, row.results,
                "" if row.relative_join_time is None else f"{row.relative_join_time:.4f}",
                row.params,
            ])
    finally:
        if own:
            fh.close()


def csv_text(rows) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def _fmt(value: float) -> str:
    return f"{value:g}"
