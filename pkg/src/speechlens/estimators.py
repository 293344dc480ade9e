"""Estimator-style wrappers around the perturbation functions.

Each transformer maps a list of Waveforms to a list of Waveforms and
plays by the usual rules: parameters land on same-named attributes in
__init__ untouched, validation happens at fit/transform time, fit returns
self, get_params/set_params/clone all work. The transforms themselves are
stateless, so fit only validates.
"""

from sklearn.base import BaseEstimator, TransformerMixin

from . import perturb
from .audio import Waveform
from .errors import ValidationError


class _WaveformTransformer(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        self._check_params()
        return self

    def transform(self, X):
        self._check_params()
        out = []
        for w in X:
            if not isinstance(w, Waveform):
                raise ValidationError(f"transform expects Waveform items, got {type(w).__name__}")
            out.append(self._apply(w))
        return out

    def _check_params(self):
        pass

    def _apply(self, w):
        raise NotImplementedError


class PitchShift(_WaveformTransformer):
    def __init__(self, semitones=0.0):
        self.semitones = semitones

    def _apply(self, w):
        return perturb.pitch_shift(w, self.semitones)


class TimeStretch(_WaveformTransformer):
    def __init__(self, rate=1.0):
        self.rate = rate

    def _apply(self, w):
        return perturb.time_stretch(w, self.rate)


class WhiteNoise(_WaveformTransformer):
    def __init__(self, snr_db=10.0, seed=0):
        self.snr_db = snr_db
        self.seed = seed

    def _apply(self, w):
        return perturb.add_white_noise(w, self.snr_db, self.seed)


class Reverb(_WaveformTransformer):
    def __init__(self, room_scale=0.0):
        self.room_scale = room_scale

    def _apply(self, w):
        return perturb.reverb(w, self.room_scale)


class SegmentMask(_WaveformTransformer):
    """Zeroes the configured segments in every waveform."""

    def __init__(self, segments=()):
        self.segments = segments

    def _check_params(self):
        for seg in self.segments:
            if not hasattr(seg, "start_s") or not hasattr(seg, "end_s"):
                raise ValidationError(f"segments must be WordSegment-like, got {seg!r}")

    def _apply(self, w):
        return perturb.mask_segments(w, list(self.segments))
