"""Real-time candidate tracking on the edge.

The edge never recomputes correlations. Each second it compares the new
live window against the next 256-sample stretch of every tracked
candidate's parent recording using the cheap area metric, drops the ones
that drifted away or ran out of recording, and re-estimates the anomaly
probability from the labels of whatever is still standing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import dsp
from .mdb import MdbStore, get_parent_segment

ANOMALY_PREDICTED = "anomaly_predicted"
NORMAL = "normal"
UNDECIDED = "undecided"


@dataclass
class TrackerConfig:
    area_threshold: float = 900.0
    tracking_threshold: int = 10       # H: refresh T when alive count falls this low
    trend_window: int = 2
    pa_floor: float = 0.5
    max_iterations_per_set: int = 5    # cloud cadence when tracking is healthy

    def __post_init__(self):
        if self.area_threshold <= 0:
            raise ValueError("area_threshold must be positive")
        if not (1 <= self.tracking_threshold < 100):
            raise ValueError("tracking_threshold must be in [1, 100)")
        if self.trend_window < 1:
            raise ValueError("trend_window must be >= 1")
        if self.max_iterations_per_set < 1:
            raise ValueError("max_iterations_per_set must be >= 1")


@dataclass
class TrackedCandidate:
    set_id: int
    label: int
    anomaly_kind: str | None
    cursor: int              # absolute parent position of the next segment
    parent_offset: int
    omega_at_match: float
    alive: bool = True
    removal_reason: str | None = None
    removed_iteration: int | None = None


@dataclass
class Removal:
    set_id: int
    reason: str              # "dissimilar" or "exhausted"
    cursor: int              # where the failed comparison looked
    area: float | None = None


@dataclass
class IterationReport:
    iteration: int
    alive: int
    removed_dissimilar: list
    removed_exhausted: list
    p_anomaly: float
    classification: str
    cloud_call: str | None
    step_micros: int
    area_computations: int
    timestep_index: int | None = None


@dataclass
class TrackerState:
    tracked: list
    pa_history: list
    config: TrackerConfig
    iteration: int = 0          # total completed tracking iterations
    iteration_in_set: int = 0   # resets whenever a cloud response is applied
    degraded: bool = False
    initial_removed_exhausted: int = 0
    reports: list = field(default_factory=list)

    def alive_candidates(self):
        return [c for c in self.tracked if c.alive]

    def p_anomaly(self) -> float:
        alive = self.alive_candidates()
        if not alive:
            return self.pa_history[-1] if self.pa_history else 0.0
        return sum(1 for c in alive if c.label == 1) / len(alive)


def _seed_candidates(result, store: MdbStore, steps_ahead: int):
    """Turn search candidates into tracked ones.

    The cursor points at the parent segment the *next* live window will
    be compared against: steps_ahead windows past the matched one.
    Candidates whose parent cannot supply that segment are dead on
    arrival (reason "exhausted").
    """
    tracked = []
    n_exhausted = 0
    for cand in result.candidates:
        _sid, parent_id, parent_offset, label, kind = store.slice_meta(
            cand.set_id)
        rel = cand.beta + dsp.WINDOW_LEN * steps_ahead
        seg = get_parent_segment(store, cand.set_id, rel, dsp.WINDOW_LEN)
        alive = seg is not None
        if not alive:
            n_exhausted += 1
        tracked.append(TrackedCandidate(
            set_id=cand.set_id, label=label, anomaly_kind=kind,
            cursor=parent_offset + rel, parent_offset=parent_offset,
            omega_at_match=cand.omega, alive=alive,
            removal_reason=None if alive else "exhausted",
            removed_iteration=None if alive else 0))
    return tracked, n_exhausted


def init_tracker(result, store: MdbStore, cfg: TrackerConfig,
                 steps_ahead: int = 1) -> TrackerState:
    """Adopt a search result as the tracked set F.

    steps_ahead is how many windows the live stream has advanced past
    the searched window by the time tracking picks up (1 when the next
    window is compared immediately; larger under cloud latency).
    """
    if not result.candidates:
        raise ValueError("cannot start tracking from an empty search result")
    if steps_ahead < 1:
        raise ValueError("steps_ahead must be >= 1")
    tracked, n_exhausted = _seed_candidates(result, store, steps_ahead)
    state = TrackerState(tracked=tracked, pa_history=[], config=cfg,
                         initial_removed_exhausted=n_exhausted)
    state.degraded = not state.alive_candidates()
    state.pa_history.append(state.p_anomaly())
    return state


def tracker_step(state: TrackerState, window, store: MdbStore) -> IterationReport:
    """One tracking iteration against the next contiguous live window."""
    t0 = time.perf_counter()
    x = dsp.window_samples(window)
    timestep = getattr(window, "timestep_index", None)

    removed_dissimilar = []
    removed_exhausted = []
    areas = 0
    # apply decisions in set_id order for deterministic reports
    for cand in sorted(state.alive_candidates(), key=lambda c: c.set_id):
        rel = cand.cursor - cand.parent_offset
        seg = get_parent_segment(store, cand.set_id, rel, dsp.WINDOW_LEN)
        if seg is None:
            cand.alive = False
            cand.removal_reason = "exhausted"
            cand.removed_iteration = state.iteration + 1
            removed_exhausted.append(Removal(
                set_id=cand.set_id, reason="exhausted", cursor=cand.cursor))
            continue
        area = dsp.area_between(x, seg)
        areas += 1
        if area > state.config.area_threshold:
            cand.alive = False
            cand.removal_reason = "dissimilar"
            cand.removed_iteration = state.iteration + 1
            removed_dissimilar.append(Removal(
                set_id=cand.set_id, reason="dissimilar", cursor=cand.cursor,
                area=area))
        else:
            cand.cursor += dsp.WINDOW_LEN

    state.iteration += 1
    state.iteration_in_set += 1
    alive = len(state.alive_candidates())
    if alive == 0:
        state.degraded = True
    pa = state.p_anomaly()
    state.pa_history.append(pa)

    wants, reason = needs_cloud_call(state)
    report = IterationReport(
        iteration=state.iteration,
        alive=alive,
        removed_dissimilar=removed_dissimilar,
        removed_exhausted=removed_exhausted,
        p_anomaly=pa,
        classification=classify(state),
        cloud_call=reason if wants else None,
        step_micros=int(round((time.perf_counter() - t0) * 1e6)),
        area_computations=areas,
        timestep_index=timestep,
    )
    state.reports.append(report)
    return report


def needs_cloud_call(state: TrackerState):
    """(wants, reason): "threshold" once too few candidates remain,
    else "cadence" once the set has been tracked for the configured
    number of iterations. Threshold takes precedence."""
    alive = len(state.alive_candidates())
    if alive <= state.config.tracking_threshold:
        return True, "threshold"
    if state.iteration_in_set >= state.config.max_iterations_per_set:
        return True, "cadence"
    return False, None


def classify(state: TrackerState) -> str:
    """Trend call on the anomaly probability.

    Strictly increasing over the last trend_window iterations and at or
    above the floor -> anomaly_predicted; non-increasing over the same
    stretch -> normal; anything else (or not enough history) -> undecided.
    """
    pa = state.pa_history
    w = state.config.trend_window
    if len(pa) < w + 1:
        return UNDECIDED
    tail = pa[-(w + 1):]
    if all(tail[i] < tail[i + 1] for i in range(w)):
        if tail[-1] >= state.config.pa_floor:
            return ANOMALY_PREDICTED
        return UNDECIDED
    if all(tail[i] >= tail[i + 1] for i in range(w)):
        return NORMAL
    return UNDECIDED


def swap_in(state: TrackerState, fresh, store: MdbStore,
            steps_ahead: int = 1) -> TrackerState:
    """Apply a cloud response at an iteration boundary.

    A non-empty result replaces the tracked set (probability history is
    retained for prediction continuity); an empty one keeps the old set
    and flags degraded mode. Either way the per-set iteration counter
    restarts, since the cadence clock measures time since the last
    applied cloud response.
    """
    if fresh is not None and fresh.candidates:
        tracked, n_exhausted = _seed_candidates(fresh, store, steps_ahead)
        state.tracked = tracked
        state.initial_removed_exhausted += n_exhausted
        state.degraded = not state.alive_candidates()
    else:
        state.degraded = True
    state.iteration_in_set = 0
    return state


def report_json_record(report: IterationReport,
                       step_micros: int | None = None) -> dict:
    """External form of an iteration report (counts, not detail lists).

    Pass step_micros to overwrite the measured duration with a
    deterministic value for byte-stable simulation output.
    """
    return {
        "iteration": report.iteration,
        "alive": report.alive,
        "removed_dissimilar": len(report.removed_dissimilar),
        "removed_exhausted": len(report.removed_exhausted),
        "p_anomaly": report.p_anomaly,
        "classification": report.classification,
        "cloud_call": report.cloud_call,
        "step_micros": report.step_micros if step_micros is None else step_micros,
    }
