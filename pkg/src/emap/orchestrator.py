"""Discrete-event simulation of the cloud-edge loop.

Time is integer microseconds on a simulated clock. Each second a window
completes; cloud calls (uplink, search, downlink) are scheduled as
future events while the edge keeps stepping the old candidate set, and a
delivered correlation set is swapped in at the next whole-second
boundary. Everything is deterministic for fixed configs: the background
search is an event, not a thread.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import dsp
from .cloud_search import SearchConfig, sliding_search
from .edge_tracker import (
    ANOMALY_PREDICTED,
    TrackerConfig,
    init_tracker,
    swap_in,
    tracker_step,
)
from .mdb import MdbStore, SourceSignal

US_PER_S = 1_000_000


@dataclass
class LinkModel:
    """Affine latency model per direction, in integer microseconds.

    Defaults keep a 256-sample uplink under 1 ms and a 100-signal
    downlink within 200 ms.
    """
    uplink_fixed_us: int = 400
    uplink_per_sample_us: int = 2
    downlink_fixed_us: int = 50_000
    downlink_per_signal_us: int = 1_500

    def __post_init__(self):
        for name in ("uplink_fixed_us", "uplink_per_sample_us",
                     "downlink_fixed_us", "downlink_per_signal_us"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def uplink_latency(self, n_samples: int) -> int:
        return self.uplink_fixed_us + self.uplink_per_sample_us * n_samples

    def downlink_latency(self, n_signals: int) -> int:
        return self.downlink_fixed_us + self.downlink_per_signal_us * n_signals


@dataclass
class SimConfig:
    cloud_search_time_mode: str = "configured"  # "configured" | "measured"
    cloud_search_s: float = 2.8
    eval_after_cloud_calls: int = 2   # transmissions before predictions count
    batch_size: int = 20
    report_step_micros: int = 0       # value serialized into report files

    def __post_init__(self):
        if self.cloud_search_time_mode not in ("configured", "measured"):
            raise ValueError("cloud_search_time_mode must be "
                             "'configured' or 'measured'")
        if self.cloud_search_s < 0:
            raise ValueError("cloud_search_s must be non-negative")
        if self.eval_after_cloud_calls < 1:
            raise ValueError("eval_after_cloud_calls must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class RunConfig:
    """Everything one experiment needs, serializable to one JSON file."""
    seed: int = 7
    sample_rate_hz: int = dsp.SAMPLE_RATE_HZ
    window_len: int = dsp.WINDOW_LEN
    slice_len: int = 1000
    search: SearchConfig = field(default_factory=SearchConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    link: LinkModel = field(default_factory=LinkModel)
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        if self.sample_rate_hz != dsp.SAMPLE_RATE_HZ:
            raise ValueError("sample_rate_hz is fixed at 256")
        if self.window_len != dsp.WINDOW_LEN:
            raise ValueError("window_len is fixed at 256")
        if self.slice_len != 1000:
            raise ValueError("slice_len is fixed at 1000")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        for key, typ in (("search", SearchConfig), ("tracker", TrackerConfig),
                         ("link", LinkModel), ("sim", SimConfig)):
            if key in d and isinstance(d[key], dict):
                d[key] = typ(**d[key])
        return cls(**d)


@dataclass
class TimelineEvent:
    t_sim_us: int
    kind: str
    detail: dict

    def to_json_dict(self) -> dict:
        return {"t_sim_ms": self.t_sim_us / 1000.0, "kind": self.kind,
                "detail": self.detail}


@dataclass
class TimingReport:
    """Latency accounting for the initial cloud call plus per-iteration
    step durations (measured wall time, informational)."""
    delta_ec_us: int
    delta_cs_us: int
    delta_ce_us: int
    delta_initial_us: int
    step_micros: list = field(default_factory=list)

    def __post_init__(self):
        expected = self.delta_ec_us + self.delta_cs_us + self.delta_ce_us
        if self.delta_initial_us != expected:
            raise ValueError("delta_initial must equal the sum of its parts")


@dataclass
class RunOutcome:
    signal_id: int
    dataset_tag: str
    truth_label: int
    onset_sample: int | None
    final_classification: str
    reports: list
    timeline: list
    timing: TimingReport | None
    transmissions_before_report: list
    degraded: bool

    def first_prediction(self, min_transmissions: int = 1):
        """(iteration, sim seconds) of the first anomaly call made once
        at least min_transmissions cloud responses had been applied, or
        None if the stream never qualifies."""
        for rep, sent in zip(self.reports, self.transmissions_before_report):
            if (rep.classification == ANOMALY_PREDICTED
                    and sent >= min_transmissions):
                t_s = float(rep.timestep_index + 1)
                return rep.iteration, t_s
        return None

    def lead_time_s(self, min_transmissions: int = 1):
        """Seconds between the prediction and the true onset; None when
        there is no onset or the prediction did not precede it."""
        if self.onset_sample is None:
            return None
        hit = self.first_prediction(min_transmissions)
        if hit is None:
            return None
        onset_s = self.onset_sample / dsp.SAMPLE_RATE_HZ
        if hit[1] >= onset_s:
            return None
        return onset_s - hit[1]


@dataclass
class _PendingCall:
    delivery_us: int
    result: object
    matched_timestep: int
    initial: bool


def _windows_of(live: SourceSignal):
    n = live.samples.size // dsp.WINDOW_LEN
    return n


def run_stream(live: SourceSignal, store: MdbStore,
               search_cfg: SearchConfig, tracker_cfg: TrackerConfig,
               link: LinkModel, sim: SimConfig | None = None) -> RunOutcome:
    """Simulate the full loop over one live stream.

    Window w covers [w, w+1) seconds and completes at (w+1) s; the
    boundary at k seconds processes window k-1. A delivered search
    result is applied at the first boundary at or after its delivery
    time, before that boundary's tracking step.
    """
    sim = sim or SimConfig()
    n_windows = _windows_of(live)
    if n_windows < 2:
        raise ValueError("live signal must span at least 2 seconds")
    if store.num_slices == 0:
        raise ValueError("store has no slices to search")

    def window(w: int) -> dsp.SignalWindow:
        seg = live.samples[w * dsp.WINDOW_LEN:(w + 1) * dsp.WINDOW_LEN]
        return dsp.SignalWindow(samples=seg, timestep_index=w)

    events: list[TimelineEvent] = []
    reports = []
    transmissions_before = []

    def emit(t_us, kind, **detail):
        events.append(TimelineEvent(t_sim_us=t_us, kind=kind, detail=detail))

    def schedule_call(w: int, t_request_us: int, initial: bool):
        up = link.uplink_latency(dsp.WINDOW_LEN)
        emit(t_request_us, "uplink", n_samples=dsp.WINDOW_LEN, duration_us=up)
        t_start = t_request_us + up
        emit(t_start, "search_start", window=w)
        result = sliding_search(window(w), store, search_cfg)
        if sim.cloud_search_time_mode == "measured":
            cs = int(round(result.elapsed * US_PER_S))
        else:
            cs = int(round(sim.cloud_search_s * US_PER_S))
        t_done = t_start + cs
        emit(t_done, "search_done", window=w,
             comparisons=result.comparisons_made,
             candidates=len(result.candidates))
        down = link.downlink_latency(len(result.candidates))
        emit(t_done, "downlink", n_signals=len(result.candidates),
             duration_us=down)
        return _PendingCall(delivery_us=t_done + down, result=result,
                            matched_timestep=w, initial=initial), (up, cs, down)

    tracker = None
    first_tracked = None
    pending: _PendingCall | None = None
    timing: TimingReport | None = None
    transmissions_applied = 0

    for k in range(1, n_windows + 1):
        t_b = k * US_PER_S
        w_b = k - 1
        emit(t_b, "sample", window=w_b)

        if k == 1:
            pending, (up, cs, down) = schedule_call(0, t_b, initial=True)
            timing = TimingReport(delta_ec_us=up, delta_cs_us=cs,
                                  delta_ce_us=down,
                                  delta_initial_us=up + cs + down)
            continue

        if pending is not None and pending.delivery_us <= t_b:
            if tracker is None:
                if not pending.result.candidates:
                    raise ValueError(
                        "initial search found no candidates; nothing to track")
                first_tracked = max(pending.matched_timestep + 1, w_b)
                tracker = init_tracker(
                    pending.result, store, tracker_cfg,
                    steps_ahead=first_tracked - pending.matched_timestep)
                emit(t_b, "swap_in", initial=True,
                     fresh_candidates=len(pending.result.candidates),
                     degraded=tracker.degraded)
            else:
                swap_in(tracker, pending.result, store,
                        steps_ahead=w_b - pending.matched_timestep)
                emit(t_b, "swap_in", initial=False,
                     fresh_candidates=len(pending.result.candidates),
                     degraded=tracker.degraded)
            transmissions_applied += 1
            pending = None

        if tracker is not None and w_b >= first_tracked:
            report = tracker_step(tracker, window(w_b), store)
            emit(t_b, "track_step", iteration=report.iteration,
                 alive=report.alive, p_anomaly=report.p_anomaly,
                 classification=report.classification)
            reports.append(report)
            transmissions_before.append(transmissions_applied)
            if timing is not None:
                timing.step_micros.append(report.step_micros)
            if report.cloud_call is not None and pending is None:
                emit(t_b, "cloud_call_request", reason=report.cloud_call,
                     window=w_b)
                pending, _deltas = schedule_call(w_b, t_b, initial=False)

    final = reports[-1].classification if reports else "undecided"
    # delivery events are emitted when scheduled, i.e. dated in the
    # future; stable sort puts the log in simulated-time order without
    # reordering same-instant events
    events.sort(key=lambda e: e.t_sim_us)
    return RunOutcome(
        signal_id=live.id,
        dataset_tag=live.dataset_tag,
        truth_label=1 if live.anomaly_spans else 0,
        onset_sample=live.onset_sample,
        final_classification=final,
        reports=reports,
        timeline=events,
        timing=timing,
        transmissions_before_report=transmissions_before,
        degraded=tracker.degraded if tracker is not None else True,
    )


@dataclass
class BatchRow:
    batch: str
    anomaly_kind: str
    n: int
    accuracy: float
    false_positive_rate: float
    mean_lead_time_s: float | None


@dataclass
class EvaluationTable:
    rows: list
    outcomes: list

    @property
    def mean_row(self) -> BatchRow:
        return self.rows[-1]


def _assert_disjoint(corpus, store: MdbStore):
    for live in corpus:
        # compare in stored precision, otherwise quantization masks a leak
        quantized = live.samples.astype("<f4").astype(np.float64)
        for sig in store.manifest["signals"]:
            parent = store.parent_samples(sig["id"])
            if parent.size == quantized.size and np.array_equal(
                    parent, quantized):
                raise ValueError(
                    f"evaluation stream {live.id} also exists in the store "
                    f"(signal {sig['id']}); corpus and store must be disjoint")


def evaluate_batch(corpus, store: MdbStore, search_cfg: SearchConfig,
                   tracker_cfg: TrackerConfig, link: LinkModel,
                   sim: SimConfig | None = None) -> EvaluationTable:
    """Run every stream, score predictions per batch, and append a mean
    row. A stream counts as predicted-anomalous only once the configured
    number of cloud transmissions has been applied."""
    sim = sim or SimConfig()
    if not corpus:
        raise ValueError("empty evaluation corpus")
    _assert_disjoint(corpus, store)

    outcomes = [run_stream(live, store, search_cfg, tracker_cfg, link, sim)
                for live in corpus]

    def score(outs, batch_name):
        n = len(outs)
        tp = fp = tn = fn = 0
        leads = []
        kinds = set()
        for live, out in outs:
            predicted = out.first_prediction(sim.eval_after_cloud_calls) is not None
            if live.anomaly_spans:
                kinds.update(k for _s, _e, k in live.anomaly_spans if k)
                if predicted:
                    tp += 1
                    lead = out.lead_time_s(sim.eval_after_cloud_calls)
                    if lead is not None:
                        leads.append(lead)
                else:
                    fn += 1
            else:
                if predicted:
                    fp += 1
                else:
                    tn += 1
        n_normal = fp + tn
        kind = kinds.pop() if len(kinds) == 1 else ("mixed" if kinds else "none")
        return BatchRow(
            batch=batch_name,
            anomaly_kind=kind,
            n=n,
            accuracy=(tp + tn) / n,
            false_positive_rate=(fp / n_normal) if n_normal else 0.0,
            mean_lead_time_s=float(np.mean(leads)) if leads else None,
        )

    paired = list(zip(corpus, outcomes))
    rows = []
    for b in range(0, len(paired), sim.batch_size):
        chunk = paired[b:b + sim.batch_size]
        rows.append(score(chunk, batch_name=str(b // sim.batch_size)))
    rows.append(score(paired, batch_name="mean"))
    return EvaluationTable(rows=rows, outcomes=outcomes)


def predict_at_offsets(live: SourceSignal, offsets_before_onset_s,
                       store: MdbStore, search_cfg: SearchConfig,
                       tracker_cfg: TrackerConfig, link: LinkModel,
                       sim: SimConfig | None = None):
    """Truncate the stream at onset minus each offset and report whether
    the anomaly had been predicted by then."""
    sim = sim or SimConfig()
    if live.onset_sample is None:
        raise ValueError("stream has no ground-truth onset")
    results = []
    for off_s in offsets_before_onset_s:
        cut = live.onset_sample - int(round(off_s * dsp.SAMPLE_RATE_HZ))
        if cut < 2 * dsp.WINDOW_LEN:
            raise ValueError(
                f"offset {off_s}s leaves less than 2 s of stream")
        truncated = SourceSignal(
            id=live.id, samples=live.samples[:cut].copy(),
            anomaly_spans=[(s, min(e, cut), k)
                           for s, e, k in live.anomaly_spans if s < cut],
            dataset_tag=live.dataset_tag, onset_sample=live.onset_sample)
        out = run_stream(truncated, store, search_cfg, tracker_cfg, link, sim)
        hit = out.first_prediction(sim.eval_after_cloud_calls)
        results.append({
            "offset_s": float(off_s),
            "predicted": hit is not None,
            "prediction_t_s": hit[1] if hit else None,
        })
    return results
