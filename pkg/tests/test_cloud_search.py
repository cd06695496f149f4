"""Correlation search against the exhaustive oracle and its own contract."""

import numpy as np
import pytest

from emap.cloud_search import (
    LAST_OFFSET,
    SearchConfig,
    _step_for,
    alpha_sweep,
    exhaustive_search,
    sliding_search,
)
from emap.dsp import DegenerateSignalError, SignalWindow, WINDOW_LEN, xcorr
from emap.mdb import SLICE_LEN, SourceSignal, build_store


def single_slice_store(tmp_path, seed=0, n=SLICE_LEN):
    rng = np.random.default_rng(seed)
    sig = SourceSignal(id=0, samples=rng.normal(0, 15, n),
                       anomaly_spans=[], dataset_tag="unit")
    return build_store([sig], tmp_path / "store")


def window_of(store, set_id, offset=0):
    s = store.get_slice(set_id).samples[offset:offset + WINDOW_LEN]
    return SignalWindow(samples=s, timestep_index=0)


def test_scan_covers_all_745_offsets(tmp_path):
    store = single_slice_store(tmp_path)
    res = exhaustive_search(window_of(store, 0), store, SearchConfig())
    assert LAST_OFFSET == 744
    assert res.comparisons_made == 745
    assert res.slices_scanned == 1


def test_empty_store_gives_empty_result(tmp_path):
    store = build_store([], tmp_path / "store")
    q = SignalWindow(samples=np.random.default_rng(0).normal(0, 15, WINDOW_LEN),
                     timestep_index=0)
    for search in (sliding_search, exhaustive_search):
        res = search(q, store, SearchConfig())
        assert res.candidates == []
        assert res.comparisons_made == 0
        assert res.slices_scanned == 0


def test_planted_window_scores_exactly_one(parity_world):
    corpus, store = parity_world
    q = window_of(store, 5)
    for search in (sliding_search, exhaustive_search):
        res = search(q, store, SearchConfig())
        top = res.candidates[0]
        assert top.set_id == 5
        assert top.omega == 1.0
        assert top.beta == 0


def test_step_schedule_endpoints():
    # alpha 0.004: total dissimilarity jumps 250 samples, a perfect
    # match crawls at 1
    assert _step_for(0.004, 0.0) == 250
    assert _step_for(0.004, 1.0) == 1
    assert _step_for(0.5, 0.0) == 2
    for w in np.linspace(0.0, 1.0, 21):
        s = _step_for(0.004, float(w))
        assert 1 <= s <= 250


def test_trace_matches_step_formula(parity_world):
    corpus, store = parity_world
    res = sliding_search(corpus.queries[0], store, SearchConfig(),
                         record_trace=True)
    assert res.trace, "trace recording requested but empty"
    zeros = ones = 0
    for set_id, beta, omega, clamped, step in res.trace:
        assert clamped == (omega if omega > 0.0 else 0.0)
        assert step == _step_for(0.004, clamped)
        if clamped == 0.0:
            zeros += 1
            assert step == 250
        if omega >= 0.999:
            ones += 1
            assert step == 1
    assert zeros > 0 and ones > 0


def test_candidates_sorted_and_unique_per_slice(parity_world):
    corpus, store = parity_world
    for q in corpus.queries[:5]:
        res = sliding_search(q, store, SearchConfig())
        omegas = [c.omega for c in res.candidates]
        assert omegas == sorted(omegas, reverse=True)
        ids = [c.set_id for c in res.candidates]
        assert len(ids) == len(set(ids)), "one candidate per slice at most"
        assert len(res.candidates) <= 100
        for c in res.candidates:
            assert c.omega > 0.8
            assert 0 <= c.beta <= LAST_OFFSET


def test_tie_break_prefers_lower_set_id(tmp_path):
    rng = np.random.default_rng(21)
    base = rng.normal(0, 15, SLICE_LEN)
    # two byte-identical parents: identical omegas at every offset
    signals = [SourceSignal(id=i, samples=base.copy(), anomaly_spans=[],
                            dataset_tag="twins") for i in range(2)]
    store = build_store(signals, tmp_path / "store")
    res = sliding_search(window_of(store, 0), store, SearchConfig(top_k=100))
    assert [c.set_id for c in res.candidates[:2]] == [0, 1]
    assert res.candidates[0].omega == res.candidates[1].omega == 1.0


def test_top_k_truncation(parity_world):
    corpus, store = parity_world
    res = sliding_search(corpus.queries[0], store, SearchConfig(top_k=3))
    assert len(res.candidates) == 3
    full = sliding_search(corpus.queries[0], store, SearchConfig(top_k=100))
    assert [c.set_id for c in res.candidates] == \
        [c.set_id for c in full.candidates[:3]]


def test_soundness_reevaluation(parity_world):
    corpus, store = parity_world
    for q in corpus.queries[:5]:
        for search in (sliding_search, exhaustive_search):
            res = search(q, store, SearchConfig())
            for c in res.candidates:
                seg = store.get_slice(c.set_id).samples[c.beta:c.beta + WINDOW_LEN]
                assert abs(xcorr(q.samples, seg) - c.omega) < 1e-9


def test_exhaustive_dominates_and_agrees_on_shared_offsets(parity_world):
    corpus, store = parity_world
    for q in corpus.queries[:5]:
        fast = sliding_search(q, store, SearchConfig())
        oracle = exhaustive_search(q, store, SearchConfig(), record_trace=True)
        assert oracle.candidates[0].omega >= fast.candidates[0].omega
        seen = {(t[0], t[1]): t[2] for t in oracle.trace}
        for c in fast.candidates:
            # the sliding scan saw a subset of the oracle's offsets and
            # computed the very same correlation values there
            assert seen[(c.set_id, c.beta)] == c.omega


def test_raising_delta_never_adds_candidates(parity_world):
    corpus, store = parity_world
    q = corpus.queries[1]
    loose = sliding_search(q, store, SearchConfig(delta=0.8))
    tight = sliding_search(q, store, SearchConfig(delta=0.95))
    loose_ids = {c.set_id for c in loose.candidates}
    tight_ids = {c.set_id for c in tight.candidates}
    assert tight_ids <= loose_ids
    assert len(tight.candidates) <= len(loose.candidates)


def test_worker_count_does_not_change_results(parity_world):
    corpus, store = parity_world
    q = corpus.queries[2]
    ref = sliding_search(q, store, SearchConfig(workers=1))
    for workers in (2, 4):
        got = sliding_search(q, store, SearchConfig(workers=workers))
        assert got.candidates == ref.candidates
        assert got.comparisons_made == ref.comparisons_made
        assert got.slices_scanned == ref.slices_scanned
        assert got.degenerate_skipped == ref.degenerate_skipped


def test_comparison_budget_guard(parity_world):
    corpus, store = parity_world
    q = corpus.queries[3]
    capped = sliding_search(q, store, SearchConfig(max_comparisons=50))
    free = sliding_search(q, store, SearchConfig())
    assert capped.comparisons_made < free.comparisons_made
    # the guard cuts at a slice boundary, so it may finish the slice
    # in flight but never start another one past the budget
    assert capped.comparisons_made <= 50 + 745
    assert capped.slices_scanned < free.slices_scanned
    for workers in (2, 4):
        again = sliding_search(q, store,
                               SearchConfig(max_comparisons=50, workers=workers))
        assert again.candidates == capped.candidates
        assert again.comparisons_made == capped.comparisons_made


def test_degenerate_slices_are_skipped_not_fatal(tmp_path):
    rng = np.random.default_rng(22)
    sig_ok = SourceSignal(id=0, samples=rng.normal(0, 15, SLICE_LEN),
                          anomaly_spans=[], dataset_tag="unit")
    sig_flat = SourceSignal(id=1, samples=np.zeros(SLICE_LEN),
                            anomaly_spans=[], dataset_tag="unit")
    store = build_store([sig_ok, sig_flat], tmp_path / "store")
    res = sliding_search(window_of(store, 0), store, SearchConfig())
    assert res.degenerate_skipped > 0
    assert all(c.set_id != 1 for c in res.candidates)


def test_zero_energy_query_raises(tmp_path):
    store = single_slice_store(tmp_path)
    q = SignalWindow(samples=np.zeros(WINDOW_LEN), timestep_index=0)
    with pytest.raises(DegenerateSignalError):
        sliding_search(q, store, SearchConfig())


def test_search_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(alpha=0.0)
    with pytest.raises(ValueError):
        SearchConfig(alpha=1.0)
    with pytest.raises(ValueError):
        SearchConfig(delta=1.0)
    with pytest.raises(ValueError):
        SearchConfig(top_k=0)
    with pytest.raises(ValueError):
        SearchConfig(workers=0)


def test_alpha_sweep_report(parity_world):
    corpus, store = parity_world
    alphas = [0.001, 0.004, 0.1]
    rows = alpha_sweep(corpus.queries[:4], store, alphas)
    assert [r.alpha for r in rows] == alphas
    comps = [r.mean_comparisons for r in rows]
    # a larger alpha shrinks the skip at fixed dissimilarity, costing
    # more comparisons
    assert comps == sorted(comps)
    for r in rows:
        assert r.mean_matches > 0
        assert 0.8 < r.mean_top100_omega <= 1.0
