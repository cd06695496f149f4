"""The mega-database of labeled 1000-sample signal slices.

A store is a plain directory: a JSON manifest describing each source
signal, one little-endian float32 payload file per signal, and a flat
JSON index mapping every slice to (parent, offset, label). Everything is
immutable after build, so concurrent readers need no coordination.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import dsp

SLICE_LEN = 1000

FORMAT_VERSION = 1


class CsvFormatError(ValueError):
    """Raised when a sample file has a row that does not parse."""


@dataclass
class SourceSignal:
    """A filtered 256 Hz recording with its anomaly annotations.

    onset_sample is optional ground-truth metadata (the clinically
    confirmed event time) used only for lead-time scoring; matching and
    labeling use anomaly_spans alone.
    """
    id: int
    samples: np.ndarray
    anomaly_spans: list = field(default_factory=list)
    dataset_tag: str = ""
    onset_sample: int | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.anomaly_spans = [_norm_span(s, self.samples.size)
                              for s in self.anomaly_spans]
        _check_spans(self.anomaly_spans, self.samples.size)


@dataclass
class SignalSet:
    set_id: int
    parent_id: int
    parent_offset: int
    samples: np.ndarray
    label: int
    anomaly_kind: str | None = None


def _norm_span(span, length):
    if len(span) == 2:
        start, end = span
        kind = None
    else:
        start, end, kind = span
    return (int(start), int(end), kind)


def _check_spans(spans, length):
    prev_end = None
    for start, end, _kind in sorted(spans):
        if not (0 <= start < end <= length):
            raise ValueError(
                f"anomaly span ({start}, {end}) outside signal of "
                f"length {length}")
        if prev_end is not None and start < prev_end:
            raise ValueError("anomaly spans overlap")
        prev_end = end


def ingest_csv(path, sample_rate_hz: int, anomaly_spans=(),
               dataset_tag: str = "", signal_id: int = 0,
               band=(11.0, 40.0), num_taps: int = 100) -> SourceSignal:
    """Load one recording from a text file of amplitudes.

    Format: one sample per line; blank lines and `#` comments are
    skipped; a single non-numeric first row is tolerated as a header.
    The signal is resampled to 256 Hz, bandpass filtered, and its
    anomaly spans are rescaled by the resampling ratio.
    """
    values = []
    header_allowed = True
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(float(line))
            except ValueError:
                if header_allowed and not values:
                    header_allowed = False
                    continue
                raise CsvFormatError(
                    f"{path}: non-numeric value {line!r} on line {lineno}"
                ) from None
            header_allowed = False
    if not values:
        raise CsvFormatError(f"{path}: no samples found")
    x = np.asarray(values, dtype=np.float64)
    if sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")

    ratio = dsp.SAMPLE_RATE_HZ / float(sample_rate_hz)
    x = dsp.resample(x, sample_rate_hz, dsp.SAMPLE_RATE_HZ)
    spans = [(int(round(s * ratio)), int(round(e * ratio)), k)
             for s, e, k in (_norm_span(sp, None) for sp in anomaly_spans)]
    taps = dsp.design_bandpass(band[0], band[1], dsp.SAMPLE_RATE_HZ, num_taps)
    filtered = dsp.apply_filter(x, taps)
    return SourceSignal(id=signal_id, samples=filtered,
                        anomaly_spans=spans, dataset_tag=dataset_tag)


def _slice_label(spans, offset):
    """Any overlap between [offset, offset+SLICE_LEN) and a span marks it anomalous."""
    for start, end, kind in spans:
        if start < offset + SLICE_LEN and end > offset:
            return 1, kind
    return 0, None


def slice_signal(signal: SourceSignal, start_set_id: int = 0):
    """Cut a source signal into consecutive non-overlapping 1000-sample
    slices; the trailing remainder is discarded."""
    n = signal.samples.size
    if n < SLICE_LEN:
        raise ValueError(
            f"signal {signal.id} has {n} samples; at least {SLICE_LEN} "
            "are required to form a slice")
    out = []
    for k, offset in enumerate(range(0, n - SLICE_LEN + 1, SLICE_LEN)):
        label, kind = _slice_label(signal.anomaly_spans, offset)
        out.append(SignalSet(
            set_id=start_set_id + k,
            parent_id=signal.id,
            parent_offset=offset,
            samples=signal.samples[offset:offset + SLICE_LEN],
            label=label,
            anomaly_kind=kind,
        ))
    return out


class MdbStore:
    """Immutable directory-backed slice database.

    Parent signals are held as float64 arrays converted from the
    float32 payload, so a build/reopen round trip is bit-exact.
    """

    def __init__(self, manifest: dict, parents: dict, index: list,
                 root=None):
        self.manifest = manifest
        self.root = root
        self._parents = parents
        self._index = index
        self._sig_meta = {s["id"]: s for s in manifest["signals"]}

    # -- construction -------------------------------------------------

    @classmethod
    def load(cls, root) -> "MdbStore":
        with open(os.path.join(root, "manifest.json"), encoding="utf-8") as fh:
            manifest = json.load(fh)
        if manifest.get("format_version") != FORMAT_VERSION:
            raise ValueError(
                f"unsupported store format {manifest.get('format_version')}")
        parents = {}
        for sig in manifest["signals"]:
            payload = np.fromfile(
                os.path.join(root, sig["file"]), dtype="<f4")
            if payload.size != sig["length"]:
                raise ValueError(
                    f"payload {sig['file']} has {payload.size} samples, "
                    f"manifest says {sig['length']}")
            parents[sig["id"]] = payload.astype(np.float64)
        with open(os.path.join(root, "index.json"), encoding="utf-8") as fh:
            index = [tuple(row) for row in json.load(fh)]
        return cls(manifest, parents, index, root=root)

    # -- queries ------------------------------------------------------

    @property
    def num_slices(self) -> int:
        return len(self._index)

    def slice_meta(self, set_id: int):
        """(set_id, parent_id, parent_offset, label, kind) for one slice."""
        row = self._index[set_id]
        if row[0] != set_id:
            raise ValueError(f"index corrupt at set_id {set_id}")
        return row

    def get_slice(self, set_id: int) -> SignalSet:
        _sid, parent_id, offset, label, kind = self.slice_meta(set_id)
        parent = self._parents[parent_id]
        return SignalSet(set_id=set_id, parent_id=parent_id,
                         parent_offset=offset,
                         samples=parent[offset:offset + SLICE_LEN],
                         label=label, anomaly_kind=kind)

    def slices(self):
        for set_id in range(len(self._index)):
            yield self.get_slice(set_id)

    def parent_samples(self, parent_id: int) -> np.ndarray:
        return self._parents[parent_id]

    def parent_length_for(self, set_id: int) -> int:
        _sid, parent_id, _off, _label, _kind = self.slice_meta(set_id)
        return int(self._parents[parent_id].size)

    def signal_meta(self, parent_id: int) -> dict:
        return self._sig_meta[parent_id]


def build_store(signals, out_dir) -> MdbStore:
    """Slice a corpus, quantize payloads to float32, and write the store.

    Returns the reopened store, so the arrays in hand are exactly what
    any later reader will see.
    """
    ids = [s.id for s in signals]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate signal ids in corpus")
    os.makedirs(out_dir, exist_ok=True)

    sig_entries = []
    index = []
    set_id = 0
    for sig in signals:
        payload = sig.samples.astype("<f4")
        fname = f"signal_{sig.id:05d}.f32"
        payload.tofile(os.path.join(out_dir, fname))
        sig_entries.append({
            "id": sig.id,
            "file": fname,
            "length": int(payload.size),
            "dataset_tag": sig.dataset_tag,
            "spans": [[s, e, k] for s, e, k in sig.anomaly_spans],
            "onset_sample": sig.onset_sample,
        })
        # labels must reflect the stored (quantized) signal, so slice the
        # float32-rounded samples rather than the originals
        quantized = SourceSignal(id=sig.id,
                                 samples=payload.astype(np.float64),
                                 anomaly_spans=sig.anomaly_spans,
                                 dataset_tag=sig.dataset_tag,
                                 onset_sample=sig.onset_sample)
        for sl in slice_signal(quantized, start_set_id=set_id):
            index.append([sl.set_id, sl.parent_id, sl.parent_offset,
                          sl.label, sl.anomaly_kind])
            set_id += 1

    manifest = {
        "format_version": FORMAT_VERSION,
        "sample_rate_hz": dsp.SAMPLE_RATE_HZ,
        "slice_len": SLICE_LEN,
        "signals": sig_entries,
        "num_slices": len(index),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w",
              encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "index.json"), "w",
              encoding="utf-8") as fh:
        json.dump(index, fh, separators=(",", ":"))
        fh.write("\n")
    return MdbStore.load(out_dir)


def get_parent_segment(store: MdbStore, set_id: int, offset: int,
                       length: int):
    """Samples of the slice's parent starting `offset` past the slice
    origin, or None once the parent is exhausted (the tracked recording
    simply ended; not an error)."""
    if offset < 0 or length <= 0:
        raise ValueError("offset must be >= 0 and length positive")
    _sid, parent_id, parent_offset, _label, _kind = store.slice_meta(set_id)
    parent = store.parent_samples(parent_id)
    start = parent_offset + offset
    if start + length > parent.size:
        return None
    return parent[start:start + length]


# -- synthetic corpus ---------------------------------------------------

def _colored_noise(rng, n, rms=15.0, n_components=40,
                   band=(11.0, 40.0)):
    """Sum of random-phase in-band sinusoids, scaled to the target RMS.

    The band matches the preprocessing filter's passband, so these
    signals behave like recordings that have already been filtered.
    """
    t = np.arange(n, dtype=np.float64) / dsp.SAMPLE_RATE_HZ
    freqs = rng.uniform(band[0], band[1], size=n_components)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_components)
    amps = rng.uniform(0.7, 1.3, size=n_components)
    x = np.zeros(n, dtype=np.float64)
    for f, p, a in zip(freqs, phases, amps):
        x += a * np.sin(2.0 * np.pi * f * t + p)
    scale = rms / max(np.sqrt(np.mean(x * x)), 1e-12)
    return x * scale


def _seizure_signature(rng, n_span, amplitude):
    """Growing rhythmic burst: an in-band carrier, amplitude-modulated
    at 3-5 Hz, ramping linearly from zero to full amplitude."""
    t = np.arange(n_span, dtype=np.float64) / dsp.SAMPLE_RATE_HZ
    f_carrier = rng.uniform(16.0, 24.0)
    f_mod = rng.uniform(3.0, 5.0)
    phase_c = rng.uniform(0.0, 2.0 * np.pi)
    phase_m = rng.uniform(0.0, 2.0 * np.pi)
    ramp = np.linspace(0.0, 1.0, n_span)
    mod = 1.0 + 0.8 * np.sin(2.0 * np.pi * f_mod * t + phase_m)
    return amplitude * ramp * mod * np.sin(2.0 * np.pi * f_carrier * t + phase_c)


def synth_corpus(seed: int, n_normal: int, n_anomalous: int,
                 anomaly_kind: str = "seizure", length_s: float = 20.0,
                 start_id: int = 0):
    """Deterministic labeled corpus: colored-noise normals plus
    anomalous signals carrying an injected growing signature over a
    marked span."""
    if n_normal < 0 or n_anomalous < 0:
        raise ValueError("signal counts must be >= 0")
    rng = np.random.default_rng(seed)
    n = int(round(length_s * dsp.SAMPLE_RATE_HZ))
    rms = 15.0
    out = []
    next_id = start_id
    for _ in range(n_normal):
        out.append(SourceSignal(
            id=next_id, samples=_colored_noise(rng, n, rms=rms),
            anomaly_spans=[], dataset_tag="synthetic"))
        next_id += 1
    for _ in range(n_anomalous):
        x = _colored_noise(rng, n, rms=rms)
        span_len = int(rng.uniform(4.0, 8.0) * dsp.SAMPLE_RATE_HZ)
        span_len = min(span_len, n - dsp.SAMPLE_RATE_HZ)
        start = int(rng.uniform(0.2, 0.7) * (n - span_len))
        # amplitude 3.2x background keeps in-span RMS comfortably above
        # the 1.5x contract after modulation averaging
        x[start:start + span_len] += _seizure_signature(
            rng, span_len, amplitude=3.2 * rms)
        out.append(SourceSignal(
            id=next_id, samples=x,
            anomaly_spans=[(start, start + span_len, anomaly_kind)],
            dataset_tag="synthetic", onset_sample=start))
        next_id += 1
    return out
