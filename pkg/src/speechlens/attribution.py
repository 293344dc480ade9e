"""Word-level and paralinguistic attribution.

The word score of segment i is the leave-one-out probability drop:
r_i = f(y=k|x) - f(y=k|x with segment i zeroed). The paralinguistic score
of a feature direction is the mean drop over its parameter sweep, with
each sweep point's individual drop kept for heatmap rendering. Positive
scores mean the ablation lowered the target-class probability, i.e. the
removed content supported the prediction.

Every stored score is the plain float difference of its two cached
probabilities, so recomputing from the same predictions is bit-exact.
"""

from dataclasses import dataclass

from .audio import Utterance, WordSegment
from .errors import ValidationError
from .oracle import Oracle, TargetSpec
from .perturb import GridSet, apply, default_grid_set, mask_segment

__all__ = [
    "WordAttribution",
    "DirectionAttribution",
    "ParalinguisticAttribution",
    "TargetExplanation",
    "AttributionReport",
    "word_attribution",
    "paralinguistic_attribution",
    "explain",
    "report_to_jsonable",
    "report_from_jsonable",
]

MEAN_TOLERANCE = 1e-9


@dataclass(frozen=True)
class WordAttribution:
    """Leave-one-out scores, one per segment, for one target."""

    utterance_id: str
    target: TargetSpec
    base_prob: float
    scores: tuple  # ((WordSegment, r), ...)

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple((seg, float(r)) for seg, r in self.scores))
        for seg, r in self.scores:
            if not -1.0 <= r <= 1.0:
                raise ValidationError(f"word score out of [-1, 1]: {r}")


@dataclass(frozen=True)
class DirectionAttribution:
    """One feature direction: its mean relevance and the per-parameter drops."""

    label: str
    relevance: float
    grid: tuple  # ((parameter, delta), ...)

    def __post_init__(self):
        grid = tuple((float(p), float(d)) for p, d in self.grid)
        if not grid:
            raise ValidationError(f"direction {self.label!r} has an empty grid")
        object.__setattr__(self, "grid", grid)
        mean = sum(d for _, d in grid) / len(grid)
        if abs(mean - self.relevance) > MEAN_TOLERANCE:
            raise ValidationError(
                f"direction {self.label!r}: relevance {self.relevance} is not the "
                f"mean of its grid deltas ({mean})"
            )


@dataclass(frozen=True)
class ParalinguisticAttribution:
    utterance_id: str
    target: TargetSpec
    directions: tuple  # (DirectionAttribution, ...)


@dataclass(frozen=True)
class TargetExplanation:
    target: TargetSpec
    base_prob: float
    words: WordAttribution
    paralinguistic: ParalinguisticAttribution


@dataclass(frozen=True)
class AttributionReport:
    utterance_id: str
    targets: tuple  # (TargetExplanation, ...)


def _word_scores(utt, target, base_prob, masked_preds):
    scores = []
    for seg, pred in zip(utt.segments, masked_preds):
        scores.append((seg, base_prob - pred.prob(target)))
    return WordAttribution(utt.id, target, base_prob, tuple(scores))


def _direction_attributions(utt, target, base_prob, directions, preds_by_label):
    out = []
    for label, specs in directions:
        deltas = []
        for spec, pred in zip(specs, preds_by_label[label]):
            deltas.append((spec.parameter, base_prob - pred.prob(target)))
        relevance = sum(d for _, d in deltas) / len(deltas)
        out.append(DirectionAttribution(label, relevance, tuple(deltas)))
    return ParalinguisticAttribution(utt.id, target, tuple(out))


def word_attribution(oracle: Oracle, utt: Utterance, target: TargetSpec) -> WordAttribution:
    """Score every segment by masking it and re-querying, n+1 calls in one batch."""
    if not utt.segments:
        raise ValidationError(f"utterance {utt.id!r} has no segments to attribute")
    oracle.schema.check_target(target)
    signals = [utt.waveform] + [mask_segment(utt.waveform, seg) for seg in utt.segments]
    preds = oracle.predict_batch(signals)
    base_prob = preds[0].prob(target)
    return _word_scores(utt, target, base_prob, preds[1:])


def paralinguistic_attribution(oracle: Oracle, utt: Utterance, target: TargetSpec,
                               grids: GridSet) -> ParalinguisticAttribution:
    """Score each feature direction by its mean probability drop over the sweep."""
    oracle.schema.check_target(target)
    directions = grids.directions()
    if not directions:
        raise ValidationError("grid set produced no perturbation directions")
    signals = [utt.waveform]
    for _, specs in directions:
        signals.extend(apply(spec, utt.waveform) for spec in specs)
    preds = oracle.predict_batch(signals)
    base_prob = preds[0].prob(target)
    preds_by_label = {}
    cursor = 1
    for label, specs in directions:
        preds_by_label[label] = preds[cursor:cursor + len(specs)]
        cursor += len(specs)
    return _direction_attributions(utt, target, base_prob, directions, preds_by_label)


def explain(oracle: Oracle, utt: Utterance, targets=None,
            grids: GridSet | None = None) -> AttributionReport:
    """Full per-utterance explanation: word scores plus paralinguistic sweeps.

    All masked and perturbed signals go to the oracle in a single batch and
    the resulting predictions are shared across targets. With no explicit
    targets, each head's argmax class on the unperturbed input is explained
    (schema class order breaks ties).
    """
    if grids is None:
        grids = default_grid_set()
    directions = grids.directions()

    signals = [utt.waveform]
    signals += [mask_segment(utt.waveform, seg) for seg in utt.segments]
    for _, specs in directions:
        signals.extend(apply(spec, utt.waveform) for spec in specs)
    preds = oracle.predict_batch(signals)

    base = preds[0]
    n = len(utt.segments)
    masked_preds = preds[1:1 + n]
    preds_by_label = {}
    cursor = 1 + n
    for label, specs in directions:
        preds_by_label[label] = preds[cursor:cursor + len(specs)]
        cursor += len(specs)

    if targets is None:
        targets = [TargetSpec(head, base.argmax(head)) for head in oracle.schema.head_names]
    else:
        targets = [oracle.schema.check_target(t) for t in targets]
        if not targets:
            raise ValidationError("explicit target list must be non-empty")

    explained = []
    for target in targets:
        base_prob = base.prob(target)
        words = _word_scores(utt, target, base_prob, masked_preds)
        para = _direction_attributions(utt, target, base_prob, directions, preds_by_label)
        explained.append(TargetExplanation(target, base_prob, words, para))
    return AttributionReport(utt.id, tuple(explained))


def report_to_jsonable(report: AttributionReport) -> dict:
    targets = []
    for te in report.targets:
        words = [
            {"word": seg.text, "start": seg.start_s, "end": seg.end_s, "r": r}
            for seg, r in te.words.scores
        ]
        para = {
            d.label: {"r": d.relevance, "grid": [[p, delta] for p, delta in d.grid]}
            for d in te.paralinguistic.directions
        }
        targets.append(
            {
                "head": te.target.head,
                "class": te.target.class_name,
                "base_prob": te.base_prob,
                "words": words,
                "paralinguistic": para,
            }
        )
    return {"id": report.utterance_id, "targets": targets}


def report_from_jsonable(obj: dict) -> AttributionReport:
    try:
        utterance_id = obj["id"]
        targets = []
        for t in obj["targets"]:
            target = TargetSpec(t["head"], t["class"])
            base_prob = float(t["base_prob"])
            scores = tuple(
                (WordSegment(wd["word"], wd["start"], wd["end"]), float(wd["r"]))
                for wd in t["words"]
            )
            words = WordAttribution(utterance_id, target, base_prob, scores)
            directions = tuple(
                DirectionAttribution(
                    label, float(d["r"]), tuple((float(p), float(x)) for p, x in d["grid"])
                )
                for label, d in t["paralinguistic"].items()
            )
            para = ParalinguisticAttribution(utterance_id, target, directions)
            targets.append(TargetExplanation(target, base_prob, words, para))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed attribution report: {exc}") from exc
    return AttributionReport(utterance_id, tuple(targets))
