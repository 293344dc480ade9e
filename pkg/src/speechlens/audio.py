"""Audio data model, WAV and alignment ingestion, dataset manifests.

Everything is mono and immutable. Loaders are pure functions of file
content: same bytes in, same samples out. No implicit resampling happens
anywhere; a classifier declares its expected rate and mismatches are
rejected downstream.
"""

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import AlignmentError, AudioIOError, ManifestError, ValidationError

__all__ = [
    "Waveform",
    "WordSegment",
    "Utterance",
    "ManifestEntry",
    "DatasetManifest",
    "load_waveform",
    "save_waveform",
    "load_alignment",
    "uniform_alignment",
    "build_utterance",
    "load_manifest",
    "load_dataset",
]

LABEL_PREFIX = "label."


class Waveform:
    """Mono sample buffer in [-1, 1] with its sample rate.

    Samples are stored as a read-only float64 array; instances can be
    shared freely between threads.
    """

    __slots__ = ("_samples", "_sample_rate")

    def __init__(self, samples, sample_rate):
        arr = np.asarray(samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ValidationError(f"samples must be 1-D, got shape {arr.shape}")
        if arr.size == 0:
            raise ValidationError("samples must be non-empty")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("samples must all be finite")
        if arr.min() < -1.0 or arr.max() > 1.0:
            raise ValidationError("samples must lie within [-1, 1]")
        if not isinstance(sample_rate, int) or isinstance(sample_rate, bool) or sample_rate <= 0:
            raise ValidationError(f"sample_rate must be a positive integer, got {sample_rate!r}")
        arr = arr.copy()
        arr.flags.writeable = False
        self._samples = arr
        self._sample_rate = sample_rate

    @property
    def samples(self) -> np.ndarray:
        return self._samples

    @property
    def sample_rate(self) -> int:
        return self._sample_rate

    def __len__(self):
        return self._samples.size

    @property
    def duration_s(self) -> float:
        return self._samples.size / self._sample_rate

    def replace_samples(self, samples) -> "Waveform":
        return Waveform(samples, self._sample_rate)

    def __eq__(self, other):
        if not isinstance(other, Waveform):
            return NotImplemented
        return self._sample_rate == other._sample_rate and np.array_equal(
            self._samples, other._samples
        )

    def __hash__(self):
        return hash((self._sample_rate, self._samples.size, self._samples.tobytes()[:64]))

    def __repr__(self):
        return f"Waveform(n={self._samples.size}, sample_rate={self._sample_rate})"


@dataclass(frozen=True)
class WordSegment:
    """One word with its time span, in seconds from utterance start."""

    text: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if not isinstance(self.text, str):
            raise ValidationError(f"segment text must be a string, got {self.text!r}")
        start = float(self.start_s)
        end = float(self.end_s)
        if not (np.isfinite(start) and np.isfinite(end)):
            raise ValidationError("segment times must be finite")
        if start < 0:
            raise ValidationError(f"segment start must be >= 0, got {start}")
        if end <= start:
            raise ValidationError(f"segment end must exceed start, got [{start}, {end}]")
        object.__setattr__(self, "start_s", start)
        object.__setattr__(self, "end_s", end)


@dataclass(frozen=True)
class Utterance:
    """A waveform plus its word segments and free-form string metadata.

    Gold labels ride in metadata under "label.<head>" keys. Segments must
    already be normalized (sorted, non-overlapping, inside the audio);
    build_utterance does that from raw segments.
    """

    id: str
    waveform: Waveform
    segments: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        duration = self.waveform.duration_s
        prev_end = 0.0
        for seg in self.segments:
            if not isinstance(seg, WordSegment):
                raise ValidationError(f"segments must be WordSegment, got {seg!r}")
            if seg.start_s < prev_end - 1e-12:
                raise ValidationError(
                    f"utterance {self.id!r}: segments overlap or are unsorted at {seg.start_s}"
                )
            if seg.end_s > duration + 1e-9:
                raise ValidationError(
                    f"utterance {self.id!r}: segment ends at {seg.end_s}s, audio is {duration}s"
                )
            prev_end = seg.end_s

    def label(self, head: str):
        return self.metadata.get(LABEL_PREFIX + head)

    @property
    def labels(self) -> dict:
        return {
            k[len(LABEL_PREFIX):]: v
            for k, v in self.metadata.items()
            if k.startswith(LABEL_PREFIX)
        }


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    audio: str
    alignment: str | None
    words: tuple | None
    labels: dict


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple


def load_waveform(path) -> Waveform:
    """Read a RIFF/WAVE file as a mono Waveform.

    PCM16 is scaled by 1/32768; IEEE float is taken as-is (clipped to
    [-1, 1]); multichannel is averaged down to mono.
    """
    path = Path(path)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # chunk warnings on odd but readable files
            rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise AudioIOError(f"audio file not found: {path}") from None
    except Exception as exc:
        raise AudioIOError(f"cannot read WAV file {path}: {exc}") from exc
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = np.clip(data.astype(np.float64), -1.0, 1.0)
    else:
        raise AudioIOError(
            f"unsupported WAV encoding {data.dtype} in {path}; expected PCM16 or IEEE float"
        )
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    elif samples.ndim != 1:
        raise AudioIOError(f"unsupported WAV shape {data.shape} in {path}")
    if samples.size == 0:
        raise AudioIOError(f"zero-length audio in {path}")
    return Waveform(samples, int(rate))


def save_waveform(path, waveform: Waveform) -> None:
    """Write as IEEE float32 WAV. Reloading reproduces samples exactly."""
    path = Path(path)
    try:
        wavfile.write(path, waveform.sample_rate, waveform.samples.astype("<f4"))
    except OSError as exc:
        raise AudioIOError(f"cannot write WAV file {path}: {exc}") from exc


def _parse_segment(obj, where):
    if not isinstance(obj, dict):
        raise AlignmentError(f"{where}: alignment entries must be objects, got {obj!r}")
    try:
        word = obj["word"]
        start = float(obj["start"])
        end = float(obj["end"])
    except (KeyError, TypeError, ValueError) as exc:
        raise AlignmentError(f"{where}: bad alignment entry {obj!r}: {exc}") from None
    if start < 0 or end < 0:
        raise AlignmentError(f"{where}: negative time in entry {obj!r}")
    if end <= start:
        raise AlignmentError(f"{where}: end <= start in entry {obj!r}")
    return word, start, end


def _truncate_overlaps(triples, where):
    """Sort by start and cut each segment back to its successor's start.

    The earlier segment yields so later-word onsets stay intact. A segment
    squeezed to nothing is an error here; duration clamping (which may
    drop) only happens when attaching to an utterance.
    """
    triples = sorted(triples, key=lambda t: (t[1], t[2]))
    out = []
    for i, (word, start, end) in enumerate(triples):
        if i + 1 < len(triples):
            end = min(end, triples[i + 1][1])
        if end <= start:
            raise AlignmentError(
                f"{where}: segment {word!r} [{start}, {end}] vanished after overlap removal"
            )
        out.append(WordSegment(word, start, end))
    return out


def load_alignment(path) -> list:
    """Read a word-alignment JSON array into sorted, non-overlapping segments."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise AlignmentError(f"alignment file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise AlignmentError(f"cannot parse alignment {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise AlignmentError(f"{path}: alignment must be a JSON array")
    triples = [_parse_segment(obj, str(path)) for obj in raw]
    return _truncate_overlaps(triples, str(path))


def uniform_alignment(waveform: Waveform, words) -> list:
    """Split the duration into equal contiguous spans, one per word."""
    words = list(words)
    if not words:
        raise ValidationError("word list must be non-empty")
    duration = waveform.duration_s
    n = len(words)
    segs = []
    for i, word in enumerate(words):
        start = duration * i / n
        end = duration * (i + 1) / n
        segs.append(WordSegment(str(word), start, end))
    return segs


def build_utterance(utterance_id, waveform, segments, metadata=None) -> Utterance:
    """Normalize raw segments against the audio and construct the Utterance.

    Sorts, truncates overlapping neighbors, clamps ends to the audio
    duration, and drops segments left empty by clamping (with a warning).
    """
    duration = waveform.duration_s
    triples = [(s.text, s.start_s, s.end_s) for s in segments]
    triples = sorted(triples, key=lambda t: (t[1], t[2]))
    kept = []
    for i, (word, start, end) in enumerate(triples):
        if i + 1 < len(triples):
            end = min(end, triples[i + 1][1])
        end = min(end, duration)
        if end <= start:
            warnings.warn(
                f"utterance {utterance_id!r}: dropping empty segment {word!r} "
                f"[{start}, {end}] after normalization",
                stacklevel=2,
            )
            continue
        kept.append(WordSegment(word, start, end))
    return Utterance(utterance_id, waveform, tuple(kept), dict(metadata or {}))


def load_manifest(path) -> DatasetManifest:
    """Parse a dataset manifest JSON array. Paths are kept as written."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot parse manifest {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise ManifestError(f"{path}: manifest must be a JSON array")
    entries = []
    for i, obj in enumerate(raw):
        if not isinstance(obj, dict) or "id" not in obj or "audio" not in obj:
            raise ManifestError(f"{path}: entry {i} must be an object with id and audio")
        words = obj.get("words")
        entries.append(
            ManifestEntry(
                id=str(obj["id"]),
                audio=str(obj["audio"]),
                alignment=obj.get("alignment"),
                words=tuple(words) if words is not None else None,
                labels=dict(obj.get("labels") or {}),
            )
        )
    return DatasetManifest(tuple(entries))


def load_dataset(manifest_path):
    """Load every manifest entry, returning (utterances, rejected).

    rejected is a list of (id, reason) for entries whose files are missing
    or unreadable; good entries are unaffected. Relative paths resolve
    against the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    base = manifest_path.parent
    utterances = []
    rejected = []
    for entry in manifest.entries:
        try:
            wave = load_waveform(base / entry.audio)
            if entry.alignment is not None:
                segs = load_alignment(base / entry.alignment)
            elif entry.words is not None:
                segs = uniform_alignment(wave, entry.words)
            else:
                segs = []
            meta = {LABEL_PREFIX + head: cls for head, cls in entry.labels.items()}
            utterances.append(build_utterance(entry.id, wave, segs, meta))
        except (AudioIOError, AlignmentError, ValidationError) as exc:
            rejected.append((entry.id, str(exc)))
    return utterances, rejected
