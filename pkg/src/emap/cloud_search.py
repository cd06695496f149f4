"""Correlation search over the slice database (cloud side).

The production scan slides through each 1000-sample slice with a step
that shrinks exponentially as correlation rises, so promising regions
are combed at single-sample resolution while dissimilar ones are crossed
in jumps of up to 250 samples. The exhaustive scan at step 1 is kept as
the oracle the fast path is tested against.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import dsp
from .mdb import SLICE_LEN, MdbStore

LAST_OFFSET = SLICE_LEN - dsp.WINDOW_LEN  # 744, scanned inclusively


@dataclass(frozen=True)
class Candidate:
    set_id: int
    omega: float
    beta: int


@dataclass
class SearchConfig:
    alpha: float = 0.004
    delta: float = 0.8
    top_k: int = 100
    max_comparisons: int | None = None
    workers: int = 1

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if not (-1.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (-1, 1)")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class SearchResult:
    candidates: list
    comparisons_made: int = 0
    slices_scanned: int = 0
    elapsed: float = 0.0
    degenerate_skipped: int = 0
    trace: list | None = None


def _step_for(alpha: float, omega_clamped: float) -> int:
    return max(1, round(alpha ** (omega_clamped - 1.0)))


def _scan_slice_sliding(q, q_energy, samples, set_id, alpha, delta, trace):
    """One slice of the exponential scan.

    Returns (candidates, comparisons, degenerate_skips). omega is clamped
    only after the threshold test, so a negative correlation still
    produces the maximum step.
    """
    hits = []
    comparisons = 0
    degenerate = 0
    max_step = _step_for(alpha, 0.0)
    beta = 0
    while beta <= LAST_OFFSET:
        seg = samples[beta:beta + dsp.WINDOW_LEN]
        energy = float(np.dot(seg, seg))
        if energy == 0.0:
            # a flat segment carries no information; treat it like
            # maximum dissimilarity and move on
            degenerate += 1
            beta += max_step
            continue
        # sqrt of the product keeps an identical segment at exactly 1.0
        omega = float(np.dot(q, seg)) / math.sqrt(q_energy * energy)
        comparisons += 1
        if omega > delta:
            hits.append((omega, beta))
        clamped = omega if omega > 0.0 else 0.0
        step = _step_for(alpha, clamped)
        if trace is not None:
            trace.append((set_id, beta, omega, clamped, step))
        beta += step
    return hits, comparisons, degenerate


def _scan_slice_exhaustive(q, q_energy, samples, set_id, alpha, delta, trace):
    """Step-1 reference scan over every offset of one slice."""
    hits = []
    comparisons = 0
    degenerate = 0
    for beta in range(LAST_OFFSET + 1):
        seg = samples[beta:beta + dsp.WINDOW_LEN]
        energy = float(np.dot(seg, seg))
        if energy == 0.0:
            degenerate += 1
            continue
        # sqrt of the product keeps an identical segment at exactly 1.0
        omega = float(np.dot(q, seg)) / math.sqrt(q_energy * energy)
        comparisons += 1
        if omega > delta:
            hits.append((omega, beta))
        if trace is not None:
            clamped = omega if omega > 0.0 else 0.0
            trace.append((set_id, beta, omega, clamped, 1))
    return hits, comparisons, degenerate


def _best_per_slice(set_id, hits):
    # ties on omega resolve to the lower beta
    omega, beta = min(hits, key=lambda h: (-h[0], h[1]))
    return Candidate(set_id=set_id, omega=omega, beta=beta)


def _run_search(window, store: MdbStore, cfg: SearchConfig, scan_fn,
                record_trace: bool):
    q = dsp.window_samples(window)
    q_energy = float(np.dot(q, q))
    if q_energy == 0.0:
        raise dsp.DegenerateSignalError("query window has zero energy")

    t0 = time.perf_counter()
    n = store.num_slices
    trace = [] if record_trace else None

    def scan(set_id):
        sl_trace = [] if record_trace else None
        sl = store.get_slice(set_id)
        hits, comps, degen = scan_fn(q, q_energy, sl.samples, set_id,
                                     cfg.alpha, cfg.delta, sl_trace)
        return set_id, hits, comps, degen, sl_trace

    # Slices are independent; any worker count must produce the same
    # result, so partial results are always folded in slice order and
    # the comparison guard cuts at a slice boundary of that order.
    per_slice = []
    if cfg.workers == 1 or n == 0:
        budget = cfg.max_comparisons
        used = 0
        for set_id in range(n):
            if budget is not None and used >= budget:
                break
            row = scan(set_id)
            per_slice.append(row)
            used += row[2]
    else:
        chunk = 64
        used = 0
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            for start in range(0, n, chunk):
                if cfg.max_comparisons is not None and used >= cfg.max_comparisons:
                    break
                rows = list(pool.map(scan, range(start, min(start + chunk, n))))
                per_slice.extend(rows)
                used += sum(r[2] for r in rows)

    pool_cands = []
    comparisons = 0
    degenerate = 0
    scanned = 0
    for set_id, hits, comps, degen, sl_trace in per_slice:
        if cfg.max_comparisons is not None and comparisons >= cfg.max_comparisons:
            break
        scanned += 1
        comparisons += comps
        degenerate += degen
        if hits:
            pool_cands.append(_best_per_slice(set_id, hits))
        if trace is not None and sl_trace:
            trace.extend(sl_trace)

    pool_cands.sort(key=lambda c: (-c.omega, c.set_id, c.beta))
    return SearchResult(
        candidates=pool_cands[:cfg.top_k],
        comparisons_made=comparisons,
        slices_scanned=scanned,
        elapsed=time.perf_counter() - t0,
        degenerate_skipped=degenerate,
        trace=trace,
    )


def sliding_search(window, store: MdbStore, cfg: SearchConfig,
                   record_trace: bool = False) -> SearchResult:
    """Exponential sliding-window correlation search for the top-K
    slices matching one second of live signal.

    With record_trace=True the result carries every visited offset as
    (set_id, beta, omega, omega_clamped, step) for scan audits.
    """
    return _run_search(window, store, cfg, _scan_slice_sliding, record_trace)


def exhaustive_search(window, store: MdbStore, cfg: SearchConfig,
                      record_trace: bool = False) -> SearchResult:
    """Brute-force oracle: correlate at all 745 offsets of every slice,
    with identical thresholding, deduplication and ordering."""
    return _run_search(window, store, cfg, _scan_slice_exhaustive,
                       record_trace)


@dataclass
class SweepRow:
    alpha: float
    mean_comparisons: float
    mean_matches: float
    mean_top100_omega: float


def alpha_sweep(windows, store: MdbStore, alphas,
                base_cfg: SearchConfig | None = None):
    """Sliding-search statistics per alpha over a set of query windows.

    mean_top100_omega pools every returned candidate's omega across the
    inputs (0.0 when nothing matched anywhere).
    """
    if not windows or not alphas:
        raise ValueError("need at least one window and one alpha")
    base = base_cfg or SearchConfig()
    rows = []
    for alpha in alphas:
        cfg = SearchConfig(alpha=alpha, delta=base.delta, top_k=base.top_k,
                           max_comparisons=base.max_comparisons,
                           workers=base.workers)
        comps = []
        matches = []
        omegas = []
        for w in windows:
            res = sliding_search(w, store, cfg)
            comps.append(res.comparisons_made)
            matches.append(len(res.candidates))
            omegas.extend(c.omega for c in res.candidates)
        rows.append(SweepRow(
            alpha=float(alpha),
            mean_comparisons=float(np.mean(comps)),
            mean_matches=float(np.mean(matches)),
            mean_top100_omega=float(np.mean(omegas)) if omegas else 0.0,
        ))
    return rows
