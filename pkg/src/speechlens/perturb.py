"""Time-domain masking and the paralinguistic transforms.

All transforms are pure and deterministic given (input, parameters, seed),
stay within [-1, 1], and return the input untouched at their identity
parameter (pitch 0, stretch 1.0, reverb 0, noise SNR +inf).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from ._rng import uniform_signed
from .audio import Waveform, WordSegment
from .errors import ValidationError
from .validation import check_monotone, check_scalar

__all__ = [
    "ParalinguisticFeature",
    "PerturbationSpec",
    "PerturbationGrid",
    "GridSet",
    "default_grid_set",
    "grid_set_from_config",
    "mask_segment",
    "mask_segments",
    "keep_segments",
    "pitch_shift",
    "time_stretch",
    "add_white_noise",
    "reverb",
    "apply",
]

FRAME = 2048
HOP = 512

PITCH_MAX_SEMITONES = 12.0
STRETCH_MIN, STRETCH_MAX = 0.25, 4.0
ROOM_MIN, ROOM_MAX = 0.0, 100.0

# reverb impulse response shape, fixed so room_scale alone controls the tail
IR_SECONDS = 0.5
IR_NOISE_SEED = 0x5EED1217
_T60_FLOOR = 0.05
_T60_SPAN = 0.55

FEATURE_KINDS = ("pitch", "stretch", "noise", "reverb")
DIRECTIONS = ("down", "up", "n/a")


@dataclass(frozen=True)
class ParalinguisticFeature:
    """What is being perturbed, plus a display direction tag."""

    kind: str
    direction: str = "n/a"

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValidationError(f"feature kind must be one of {FEATURE_KINDS}, got {self.kind!r}")
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")

    @property
    def label(self) -> str:
        if self.direction == "n/a":
            return self.kind
        return f"{self.kind}_{self.direction}"


def _identity_parameter(kind: str) -> float:
    return {"pitch": 0.0, "stretch": 1.0, "noise": math.inf, "reverb": 0.0}[kind]


def _check_parameter(kind: str, parameter) -> float:
    if kind == "pitch":
        return check_scalar("semitones", parameter, minimum=-PITCH_MAX_SEMITONES,
                            maximum=PITCH_MAX_SEMITONES)
    if kind == "stretch":
        return check_scalar("rate", parameter, minimum=STRETCH_MIN, maximum=STRETCH_MAX)
    if kind == "reverb":
        return check_scalar("room_scale", parameter, minimum=ROOM_MIN, maximum=ROOM_MAX)
    # noise: any finite SNR, or +inf as the representable identity
    snr = check_scalar("snr_db", parameter, allow_inf=True)
    if snr == -math.inf:
        raise ValidationError("snr_db must be finite or +inf")
    return snr


@dataclass(frozen=True)
class PerturbationSpec:
    """One concrete transform: a feature, its parameter, and a seed for noise."""

    feature: ParalinguisticFeature
    parameter: float
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "parameter", _check_parameter(self.feature.kind, self.parameter))
        if self.feature.kind == "noise":
            if self.seed is None and not self.is_identity:
                raise ValidationError("noise perturbation needs a seed")
        elif self.seed is not None:
            raise ValidationError(f"seed only applies to noise, not {self.feature.kind}")

    @property
    def is_identity(self) -> bool:
        return self.parameter == _identity_parameter(self.feature.kind)


@dataclass(frozen=True)
class PerturbationGrid:
    """An ordered parameter sweep for one feature, identity value excluded."""

    feature: ParalinguisticFeature
    parameters: tuple

    def __post_init__(self):
        params = tuple(check_monotone(f"{self.feature.label} grid", self.parameters))
        if not params:
            raise ValidationError(f"{self.feature.label} grid must be non-empty")
        ident = _identity_parameter(self.feature.kind)
        for p in params:
            _check_parameter(self.feature.kind, p)
            if p == ident:
                raise ValidationError(
                    f"{self.feature.label} grid must not contain the identity value {ident}"
                )
        object.__setattr__(self, "parameters", params)

    def specs(self, noise_seed=None):
        seed = noise_seed if self.feature.kind == "noise" else None
        return [PerturbationSpec(self.feature, p, seed) for p in self.parameters]


DEFAULT_PITCH = (-4.0, -2.0, 2.0, 4.0)
DEFAULT_STRETCH = (0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95,
                   1.05, 1.10, 1.15, 1.20, 1.25, 1.30)
DEFAULT_REVERB = (20.0, 40.0, 60.0, 80.0, 100.0)
DEFAULT_NOISE_SNR_DB = (20.0, 10.0, 5.0, 0.0)


@dataclass(frozen=True)
class GridSet:
    """The full sweep configuration for one explanation run.

    pitch and stretch lists mix both sides of the identity; directions()
    splits them into down/up sub-grids for reporting, so "pitch_down" and
    "stretch_up" each average over their own side only.
    """

    pitch: tuple = DEFAULT_PITCH
    stretch: tuple = DEFAULT_STRETCH
    reverb: tuple = DEFAULT_REVERB
    noise_snr_db: tuple = DEFAULT_NOISE_SNR_DB
    noise_seed: int = 0

    def __post_init__(self):
        for name, values, kind in (
            ("pitch", self.pitch, "pitch"),
            ("stretch", self.stretch, "stretch"),
            ("reverb", self.reverb, "reverb"),
            ("noise_snr_db", self.noise_snr_db, "noise"),
        ):
            vals = tuple(check_monotone(name, values))
            ident = _identity_parameter(kind)
            for v in vals:
                _check_parameter(kind, v)
                if v == ident:
                    raise ValidationError(f"{name} must not contain the identity value {ident}")
            object.__setattr__(self, name, vals)
        if isinstance(self.noise_seed, bool) or not isinstance(self.noise_seed, int):
            raise ValidationError(f"noise_seed must be an integer, got {self.noise_seed!r}")

    def directions(self):
        """Ordered (label, [PerturbationSpec]) pairs; empty sides are skipped."""
        out = []

        def side(kind, values, pred, direction):
            chosen = tuple(v for v in values if pred(v))
            if chosen:
                grid = PerturbationGrid(ParalinguisticFeature(kind, direction), chosen)
                out.append((grid.feature.label, grid.specs(self.noise_seed)))

        side("pitch", self.pitch, lambda v: v < 0, "down")
        side("pitch", self.pitch, lambda v: v > 0, "up")
        side("stretch", self.stretch, lambda v: v < 1, "down")
        side("stretch", self.stretch, lambda v: v > 1, "up")
        if self.noise_snr_db:
            grid = PerturbationGrid(ParalinguisticFeature("noise"), tuple(self.noise_snr_db))
            out.append((grid.feature.label, grid.specs(self.noise_seed)))
        if self.reverb:
            grid = PerturbationGrid(ParalinguisticFeature("reverb"), tuple(self.reverb))
            out.append((grid.feature.label, grid.specs(self.noise_seed)))
        return out


def default_grid_set(noise_seed: int = 0) -> GridSet:
    return GridSet(noise_seed=noise_seed)


def grid_set_from_config(config: dict) -> GridSet:
    """Build a GridSet from a parsed grid-configuration JSON object."""
    if not isinstance(config, dict):
        raise ValidationError("grid configuration must be a JSON object")
    known = {"pitch", "stretch", "reverb", "noise_snr_db", "noise_seed"}
    unknown = set(config) - known
    if unknown:
        raise ValidationError(f"unknown grid configuration keys: {sorted(unknown)}")
    kwargs = {}
    for key in ("pitch", "stretch", "reverb", "noise_snr_db"):
        if key in config:
            kwargs[key] = tuple(config[key])
    if "noise_seed" in config:
        kwargs["noise_seed"] = config["noise_seed"]
    return GridSet(**kwargs)


def _sample_index(seconds: float, sample_rate: int) -> int:
    # round-half-up keeps boundaries bit-stable and monotone in t
    return int(math.floor(seconds * sample_rate + 0.5))


def _segment_bounds(w: Waveform, seg: WordSegment):
    start = _sample_index(seg.start_s, w.sample_rate)
    end = _sample_index(seg.end_s, w.sample_rate)
    if start < 0 or end > len(w):
        raise ValidationError(
            f"segment [{seg.start_s}, {seg.end_s}] falls outside the waveform "
            f"({w.duration_s:.6f} s)"
        )
    return start, end


def mask_segment(w: Waveform, seg: WordSegment) -> Waveform:
    """Zero the segment's samples in the time domain; everything else is untouched."""
    return mask_segments(w, [seg])


def mask_segments(w: Waveform, segs) -> Waveform:
    """Zero several segments at once (used for top-k deletion)."""
    out = w.samples.copy()
    for seg in segs:
        start, end = _segment_bounds(w, seg)
        out[start:end] = 0.0
    return Waveform(out, w.sample_rate)


def keep_segments(w: Waveform, segs) -> Waveform:
    """Keep only the given segments; all other samples, gaps included, go to zero."""
    out = np.zeros(len(w))
    src = w.samples
    for seg in segs:
        start, end = _segment_bounds(w, seg)
        out[start:end] = src[start:end]
    return Waveform(out, w.sample_rate)


def _stft(x: np.ndarray) -> np.ndarray:
    win = np.hanning(FRAME)
    n_frames = 1 + int(np.ceil(max(len(x) - FRAME, 0) / HOP))
    pad = (n_frames - 1) * HOP + FRAME - len(x)
    xp = np.concatenate([x, np.zeros(pad)])
    idx = np.arange(FRAME)[None, :] + HOP * np.arange(n_frames)[:, None]
    return np.fft.rfft(xp[idx] * win, axis=1)


def _istft(frames: np.ndarray) -> np.ndarray:
    win = np.hanning(FRAME)
    n_frames = frames.shape[0]
    out = np.zeros((n_frames - 1) * HOP + FRAME)
    wsum = np.zeros_like(out)
    chunks = np.fft.irfft(frames, FRAME, axis=1) * win
    for i in range(n_frames):
        out[i * HOP:i * HOP + FRAME] += chunks[i]
        wsum[i * HOP:i * HOP + FRAME] += win ** 2
    wsum[wsum < 1e-8] = 1.0
    return out / wsum


def _phase_vocoder(x: np.ndarray, rate: float) -> np.ndarray:
    """Resample the STFT frame sequence by `rate`, accumulating phase.

    Output length is trimmed or zero-padded to exactly round(len(x)/rate).
    """
    spec = _stft(x)
    n_frames = spec.shape[0]
    steps = np.arange(0, n_frames, rate)
    # float accumulation in arange can land exactly on n_frames; drop it
    steps = steps[steps < n_frames]
    omega = 2 * np.pi * np.arange(spec.shape[1]) * HOP / FRAME
    mags = np.abs(spec)
    phases = np.angle(spec)
    out = np.zeros((len(steps), spec.shape[1]), dtype=complex)
    acc = phases[0].copy()
    for j, step in enumerate(steps):
        i = int(step)
        frac = step - i
        if i + 1 < n_frames:
            mag = (1 - frac) * mags[i] + frac * mags[i + 1]
            dphi = phases[i + 1] - phases[i] - omega
        else:
            mag = mags[i]
            dphi = np.zeros_like(omega)
        dphi -= 2 * np.pi * np.round(dphi / (2 * np.pi))  # principal value
        out[j] = mag * np.exp(1j * acc)
        acc = acc + omega + dphi
    y = _istft(out)
    target = int(round(len(x) / rate))
    if len(y) >= target:
        return y[:target]
    return np.concatenate([y, np.zeros(target - len(y))])


def time_stretch(w: Waveform, rate) -> Waveform:
    """Change duration by 1/rate without moving pitch. rate 1.0 is the identity."""
    rate = check_scalar("rate", rate, minimum=STRETCH_MIN, maximum=STRETCH_MAX)
    if rate == 1.0:
        return w
    y = _phase_vocoder(w.samples, rate)
    return Waveform(np.clip(y, -1.0, 1.0), w.sample_rate)


def pitch_shift(w: Waveform, semitones) -> Waveform:
    """Move pitch by 2^(semitones/12) at (almost) constant duration.

    Implemented as a stretch followed by linear-interpolation resampling
    back to the original length; STFT framing can leave the length off by
    up to one hop before that final resample.
    """
    semitones = check_scalar("semitones", semitones, minimum=-PITCH_MAX_SEMITONES,
                             maximum=PITCH_MAX_SEMITONES)
    if semitones == 0.0:
        return w
    factor = 2.0 ** (semitones / 12.0)
    y = _phase_vocoder(w.samples, 1.0 / factor)
    pos = np.linspace(0, len(y) - 1, len(w))
    y = np.interp(pos, np.arange(len(y)), y)
    return Waveform(np.clip(y, -1.0, 1.0), w.sample_rate)


def add_white_noise(w: Waveform, snr_db, seed: int) -> Waveform:
    """Mix in seeded uniform white noise at the requested SNR.

    snr_db=+inf is the identity. The mixed result is clipped to [-1, 1],
    so at very hot levels the realized SNR can come out slightly above the
    request; the gain itself is exact.
    """
    snr_db = check_scalar("snr_db", snr_db, allow_inf=True)
    if snr_db == math.inf:
        return w
    if snr_db == -math.inf:
        raise ValidationError("snr_db must be finite or +inf")
    signal_power = float(np.mean(w.samples ** 2))
    if signal_power == 0.0:
        raise ValidationError("cannot set an SNR against an all-zero signal")
    noise = uniform_signed(seed, len(w))
    noise_power = float(np.mean(noise ** 2))
    gain = math.sqrt(signal_power / (noise_power * 10.0 ** (snr_db / 10.0)))
    return Waveform(np.clip(w.samples + gain * noise, -1.0, 1.0), w.sample_rate)


def _impulse_response(room_scale: float, sample_rate: int) -> np.ndarray:
    """Unit direct tap followed by an exponentially decaying noise tail.

    T60 grows linearly with room_scale; the tail noise comes from a fixed
    internal seed so tail energy is a function of room_scale alone.
    """
    n = max(int(round(IR_SECONDS * sample_rate)), 2)
    t60 = _T60_FLOOR + _T60_SPAN * (room_scale / 100.0)
    tau = t60 / math.log(1e6)  # time for exp decay to reach -60 dB
    k = np.arange(1, n)
    tail = uniform_signed(IR_NOISE_SEED, n - 1) * np.exp(-k / (tau * sample_rate))
    ir = np.concatenate([[1.0], tail])
    return ir / np.linalg.norm(ir)


def reverb(w: Waveform, room_scale) -> Waveform:
    """Convolve with a synthetic impulse response; bigger rooms ring longer.

    Output is a 50/50 wet/dry mix truncated to the input length.
    room_scale 0 is the identity.
    """
    room_scale = check_scalar("room_scale", room_scale, minimum=ROOM_MIN, maximum=ROOM_MAX)
    if room_scale == 0.0:
        return w
    ir = _impulse_response(room_scale, w.sample_rate)
    wet = fftconvolve(w.samples, ir)[: len(w)]
    y = 0.5 * w.samples + 0.5 * wet
    return Waveform(np.clip(y, -1.0, 1.0), w.sample_rate)


def apply(spec: PerturbationSpec, w: Waveform) -> Waveform:
    """Dispatch a PerturbationSpec to its transform."""
    kind = spec.feature.kind
    if kind == "pitch":
        return pitch_shift(w, spec.parameter)
    if kind == "stretch":
        return time_stretch(w, spec.parameter)
    if kind == "noise":
        if spec.parameter == math.inf:
            return w
        return add_white_noise(w, spec.parameter, spec.seed)
    return reverb(w, spec.parameter)
