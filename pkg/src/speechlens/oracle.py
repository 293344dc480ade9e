"""The classifier abstraction and its implementations.

An oracle declares a sample rate and a head schema, and maps waveforms to
per-head probability distributions. Downstream code always reads the
schema from the oracle, never from configuration. Two toy oracles make
the whole pipeline verifiable without any model weights; RemoteOracle
talks to a model server over HTTP.
"""

import base64
import math
import threading
from dataclasses import dataclass

import numpy as np
import requests
from sklearn.base import BaseEstimator

from .audio import Waveform
from .errors import OracleError, ValidationError
from .validation import check_int, check_rate_match, check_scalar

__all__ = [
    "HeadSchema",
    "Prediction",
    "TargetSpec",
    "Oracle",
    "ConstantOracle",
    "ToneKeywordOracle",
    "AmplitudeBandOracle",
    "RemoteOracle",
    "make_tone_keyword_oracle",
    "oracle_from_config",
]

PROB_SUM_TOLERANCE = 1e-4


@dataclass(frozen=True)
class HeadSchema:
    """Ordered classification heads, each with its ordered class names."""

    heads: tuple

    def __post_init__(self):
        heads = tuple((str(name), tuple(str(c) for c in classes)) for name, classes in self.heads)
        names = [name for name, _ in heads]
        if len(names) != len(set(names)):
            raise ValidationError(f"head names must be unique, got {names}")
        if not heads:
            raise ValidationError("schema needs at least one head")
        for name, classes in heads:
            if not classes:
                raise ValidationError(f"head {name!r} needs at least one class")
            if len(classes) != len(set(classes)):
                raise ValidationError(f"head {name!r} has duplicate classes")
        object.__setattr__(self, "heads", heads)

    @classmethod
    def from_mapping(cls, mapping) -> "HeadSchema":
        return cls(tuple((name, tuple(classes)) for name, classes in mapping.items()))

    def to_mapping(self) -> dict:
        return {name: list(classes) for name, classes in self.heads}

    @property
    def head_names(self) -> tuple:
        return tuple(name for name, _ in self.heads)

    def classes(self, head: str) -> tuple:
        for name, classes in self.heads:
            if name == head:
                return classes
        raise ValidationError(f"unknown head {head!r}; schema has {self.head_names}")

    def check_target(self, target: "TargetSpec") -> "TargetSpec":
        if target.class_name not in self.classes(target.head):
            raise ValidationError(
                f"class {target.class_name!r} not in head {target.head!r}"
            )
        return target

    @property
    def all_classes(self) -> tuple:
        return tuple(c for _, classes in self.heads for c in classes)


@dataclass(frozen=True)
class TargetSpec:
    """Which (head, class) probability an explanation tracks."""

    head: str
    class_name: str


class Prediction:
    """Per-head probability vectors; each sums to 1 within 1e-4."""

    __slots__ = ("_heads",)

    def __init__(self, heads):
        stored = {}
        for head, vector in heads.items():
            vec = {str(c): float(p) for c, p in vector.items()}
            if not vec:
                raise ValidationError(f"head {head!r} has an empty probability vector")
            for c, p in vec.items():
                if not (0.0 <= p <= 1.0):
                    raise ValidationError(
                        f"probability for {head!r}/{c!r} out of [0, 1]: {p}"
                    )
            total = sum(vec.values())
            if abs(total - 1.0) > PROB_SUM_TOLERANCE:
                raise ValidationError(
                    f"probabilities for head {head!r} sum to {total}, expected 1"
                )
            stored[str(head)] = vec
        if not stored:
            raise ValidationError("prediction needs at least one head")
        self._heads = stored

    @property
    def head_names(self) -> tuple:
        return tuple(self._heads)

    def __getitem__(self, head: str) -> dict:
        try:
            return dict(self._heads[head])
        except KeyError:
            raise ValidationError(f"prediction has no head {head!r}") from None

    def prob(self, target: TargetSpec) -> float:
        vec = self._heads.get(target.head)
        if vec is None or target.class_name not in vec:
            raise ValidationError(
                f"prediction has no probability for {target.head!r}/{target.class_name!r}"
            )
        return vec[target.class_name]

    def argmax(self, head: str) -> str:
        """Most probable class; ties go to the earlier class in head order."""
        vec = self._heads.get(head)
        if vec is None:
            raise ValidationError(f"prediction has no head {head!r}")
        best_class, best_p = None, -1.0
        for c, p in vec.items():
            if p > best_p:
                best_class, best_p = c, p
        return best_class

    def to_nested(self) -> dict:
        return {h: dict(v) for h, v in self._heads.items()}

    def __eq__(self, other):
        if not isinstance(other, Prediction):
            return NotImplemented
        return self._heads == other._heads

    def __repr__(self):
        return f"Prediction({self._heads!r})"


class Oracle:
    """Interface: sample_rate, schema, predict, predict_batch."""

    sample_rate: int
    schema: HeadSchema

    def predict(self, w: Waveform) -> Prediction:
        raise NotImplementedError

    def predict_batch(self, ws) -> list:
        return [self.predict(w) for w in ws]


def _softmax(scores):
    m = max(scores)
    exps = [math.exp(s - m) for s in scores]
    z = sum(exps)
    return [e / z for e in exps]


class ConstantOracle(Oracle, BaseEstimator):
    """Returns one fixed distribution regardless of input."""

    def __init__(self, distribution, sample_rate=16000):
        self.distribution = distribution
        self.sample_rate = check_int("sample_rate", sample_rate, minimum=1)
        self.schema = HeadSchema.from_mapping(
            {head: list(vec) for head, vec in distribution.items()}
        )
        self._prediction = Prediction(distribution)

    def predict(self, w: Waveform) -> Prediction:
        check_rate_match(self.sample_rate, w)
        return self._prediction


class ToneKeywordOracle(Oracle, BaseEstimator):
    """Classifies by how much energy the signal has at each class's tone.

    Per class c with frequency f_c, the score is the squared magnitude of
    the mean complex projection (1/n)|sum_k x_k e^{-2pi i f_c k / sr}|^2,
    turned into per-head probabilities by softmax(score/temperature).
    Pure and deterministic; an all-zero signal scores uniformly.
    """

    def __init__(self, schema, class_freqs, temperature=1e-4, sample_rate=16000):
        self.schema = schema
        self.class_freqs = dict(class_freqs)
        self.temperature = check_scalar("temperature", temperature)
        self.sample_rate = check_int("sample_rate", sample_rate, minimum=1)
        if self.temperature <= 0:
            raise ValidationError("temperature must be > 0")
        missing = [c for c in schema.all_classes if c not in self.class_freqs]
        if missing:
            raise ValidationError(f"no frequency bound for classes {missing}")
        extra = [c for c in self.class_freqs if c not in set(schema.all_classes)]
        if extra:
            raise ValidationError(f"frequencies bound to unknown classes {extra}")
        freqs = [float(f) for f in self.class_freqs.values()]
        if len(freqs) != len(set(freqs)):
            raise ValidationError("class frequencies must be distinct")

    def _energies(self, x: np.ndarray) -> dict:
        n = len(x)
        t = np.arange(n) / self.sample_rate
        out = {}
        for cls, freq in self.class_freqs.items():
            proj = np.mean(x * np.exp(-2j * np.pi * float(freq) * t))
            out[cls] = float(abs(proj) ** 2)
        return out

    def predict(self, w: Waveform) -> Prediction:
        check_rate_match(self.sample_rate, w)
        energies = self._energies(w.samples)
        heads = {}
        for head, classes in self.schema.heads:
            probs = _softmax([energies[c] / self.temperature for c in classes])
            heads[head] = dict(zip(classes, probs))
        return Prediction(heads)


class AmplitudeBandOracle(Oracle, BaseEstimator):
    """Classifies by overall level: each class owns an RMS band in dBFS.

    Exists so that channel-type perturbations (noise, reverb) measurably
    move some oracle's prediction in tests; the tone oracle barely reacts
    to them by construction.
    """

    def __init__(self, schema, band_centers_db=None, width_db=6.0, sample_rate=16000):
        self.schema = schema
        self.band_centers_db = band_centers_db
        self.width_db = check_scalar("width_db", width_db, minimum=1e-6)
        self.sample_rate = check_int("sample_rate", sample_rate, minimum=1)
        if band_centers_db is None:
            centers = {}
            for head, classes in schema.heads:
                spread = np.linspace(-45.0, -9.0, len(classes))
                centers.update(dict(zip(classes, (float(v) for v in spread))))
        else:
            centers = {str(c): float(v) for c, v in band_centers_db.items()}
            missing = [c for c in schema.all_classes if c not in centers]
            if missing:
                raise ValidationError(f"no band center for classes {missing}")
        self._centers = centers

    def predict(self, w: Waveform) -> Prediction:
        check_rate_match(self.sample_rate, w)
        rms = float(np.sqrt(np.mean(w.samples ** 2)))
        level_db = 20.0 * math.log10(max(rms, 1e-12))
        heads = {}
        for head, classes in self.schema.heads:
            scores = [-(((level_db - self._centers[c]) / self.width_db) ** 2) for c in classes]
            heads[head] = dict(zip(classes, _softmax(scores)))
        return Prediction(heads)


def make_tone_keyword_oracle(schema, class_freqs, temperature=1e-4,
                             sample_rate=16000) -> ToneKeywordOracle:
    return ToneKeywordOracle(schema, class_freqs, temperature, sample_rate)


class RemoteOracle(Oracle):
    """HTTP client for a model server speaking the prediction wire protocol.

    Handshakes GET /schema once at construction. Concurrent in-flight
    requests are capped by a semaphore; each HTTP exchange pairs its own
    request and response, so no cross-request ordering is assumed.
    """

    def __init__(self, url, timeout=30.0, max_in_flight=4):
        self.url = str(url).rstrip("/")
        self.timeout = check_scalar("timeout", timeout, minimum=1e-3)
        self._gate = threading.Semaphore(check_int("max_in_flight", max_in_flight, minimum=1))
        try:
            resp = requests.get(self.url + "/schema", timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
        except requests.RequestException as exc:
            raise OracleError(f"schema handshake with {self.url} failed: {exc}") from exc
        except ValueError as exc:
            raise OracleError(f"schema from {self.url} is not JSON: {exc}") from exc
        try:
            self.sample_rate = int(payload["sample_rate"])
            self.schema = HeadSchema.from_mapping(payload["heads"])
        except (KeyError, TypeError, AttributeError, ValidationError) as exc:
            raise OracleError(f"malformed schema from {self.url}: {exc}") from exc

    def _encode(self, w: Waveform) -> dict:
        check_rate_match(self.sample_rate, w)
        raw = w.samples.astype("<f4").tobytes()
        return {
            "sample_rate": w.sample_rate,
            "samples_b64": base64.b64encode(raw).decode("ascii"),
        }

    def _post(self, endpoint: str, payload: dict) -> dict:
        with self._gate:
            try:
                resp = requests.post(self.url + endpoint, json=payload, timeout=self.timeout)
                resp.raise_for_status()
                return resp.json()
            except requests.RequestException as exc:
                raise OracleError(f"request to {self.url}{endpoint} failed: {exc}") from exc
            except ValueError as exc:
                raise OracleError(f"non-JSON response from {self.url}{endpoint}: {exc}") from exc

    def _coerce(self, heads_payload) -> Prediction:
        """Validate and renormalize a server response into a Prediction.

        Sums within 1e-4 of 1 are renormalized (float32 serialization
        drift); anything further off is a real bug and rejected.
        """
        if not isinstance(heads_payload, dict):
            raise OracleError(f"prediction payload must be an object, got {heads_payload!r}")
        heads = {}
        for head, classes in self.schema.heads:
            vec = heads_payload.get(head)
            if not isinstance(vec, dict):
                raise OracleError(f"response is missing head {head!r}")
            probs = []
            for c in classes:
                if c not in vec:
                    raise OracleError(f"response head {head!r} is missing class {c!r}")
                p = float(vec[c])
                if not math.isfinite(p) or p < 0.0:
                    raise OracleError(f"bad probability {p} for {head!r}/{c!r}")
                probs.append(p)
            total = sum(probs)
            if abs(total - 1.0) > PROB_SUM_TOLERANCE:
                raise OracleError(
                    f"probabilities for head {head!r} sum to {total}, not normalized"
                )
            heads[head] = {c: p / total for c, p in zip(classes, probs)}
        return Prediction(heads)

    def predict(self, w: Waveform) -> Prediction:
        data = self._post("/predict", self._encode(w))
        if "heads" not in data:
            raise OracleError(f"response from {self.url}/predict has no heads")
        return self._coerce(data["heads"])

    def predict_batch(self, ws) -> list:
        ws = list(ws)
        if not ws:
            return []
        data = self._post("/predict_batch", {"items": [self._encode(w) for w in ws]})
        results = data.get("results")
        if not isinstance(results, list) or len(results) != len(ws):
            raise OracleError(
                f"batch response has {len(results) if isinstance(results, list) else 'no'} "
                f"results for {len(ws)} items"
            )
        return [self._coerce(item.get("heads")) for item in results]


def oracle_from_config(config: dict) -> Oracle:
    """Build a toy oracle from a parsed oracle-definition JSON object."""
    if not isinstance(config, dict) or "kind" not in config:
        raise ValidationError("oracle configuration must be an object with a 'kind'")
    kind = config["kind"]
    try:
        schema = HeadSchema.from_mapping(config["heads"])
        sample_rate = int(config.get("sample_rate", 16000))
        if kind == "tone-keyword":
            return make_tone_keyword_oracle(
                schema,
                {str(c): float(f) for c, f in config["class_freqs"].items()},
                float(config.get("temperature", 1e-4)),
                sample_rate,
            )
        if kind == "amplitude-band":
            centers = config.get("band_centers_db")
            return AmplitudeBandOracle(
                schema,
                centers,
                float(config.get("width_db", 6.0)),
                sample_rate,
            )
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValidationError(f"malformed oracle configuration: {exc}") from exc
    raise ValidationError(f"unknown oracle kind {kind!r}")
