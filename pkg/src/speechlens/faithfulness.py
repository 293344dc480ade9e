"""Faithfulness evaluation: comprehensiveness, sufficiency, random baseline.

Both metrics rank segments by their explanation scores and average a
probability difference over the top-k sets for k = 1..n (a percentage-bin
mode is available as a protocol knob). Comprehensiveness masks the top-k
and wants a large drop; sufficiency keeps only the top-k, zeroing
everything else including inter-word gaps, and wants a small change.
Protocol choices that the underlying method leaves open are recorded in
the report's protocol block.
"""

import math
from dataclasses import dataclass

from ._rng import derive_seed, uniform_signed
from .attribution import word_attribution
from .errors import ValidationError
from .oracle import Oracle, TargetSpec
from .perturb import keep_segments, mask_segments
from .validation import check_int

__all__ = [
    "LeaveOneOutExplainer",
    "RandomExplainer",
    "random_explainer",
    "comprehensiveness",
    "sufficiency",
    "evaluate",
    "HeadFaithfulness",
    "FaithfulnessReport",
    "faithfulness_to_jsonable",
    "faithfulness_from_jsonable",
]

DEFAULT_ROUNDS = 5
PERCENT_BINS = (0.10, 0.20, 0.50, 1.00)


class LeaveOneOutExplainer:
    """Scores segments by their leave-one-out probability drop."""

    name = "l1o"
    is_stochastic = False

    def __call__(self, oracle, utt, target):
        return [r for _, r in word_attribution(oracle, utt, target).scores]


class RandomExplainer:
    """Uniform scores in [-1, 1], keyed by (seed, utterance id, segment index).

    Deterministic per seed and independent of evaluation order; the same
    utterance gets the same scores no matter which head asks.
    """

    name = "random"
    is_stochastic = True

    def __init__(self, seed: int):
        self.seed = check_int("seed", seed)

    def __call__(self, oracle, utt, target):
        return list(uniform_signed(derive_seed(self.seed, "utterance", utt.id),
                                   len(utt.segments)))

    def for_round(self, round_index: int) -> "RandomExplainer":
        return RandomExplainer(derive_seed(self.seed, "round", round_index))


def random_explainer(seed: int) -> RandomExplainer:
    return RandomExplainer(seed)


def _ranked_indices(scores):
    # descending score, ties broken by original segment index
    return sorted(range(len(scores)), key=lambda i: (-scores[i], i))


def _k_values(n: int, bins) -> list:
    if bins is None:
        return list(range(1, n + 1))
    ks = []
    for fraction in bins:
        k = min(max(int(math.ceil(fraction * n)), 1), n)
        if k not in ks:
            ks.append(k)
    return ks


def _check_scores(utt, scores):
    scores = [float(s) for s in scores]
    if len(scores) != len(utt.segments):
        raise ValidationError(
            f"got {len(scores)} scores for {len(utt.segments)} segments"
        )
    if not scores:
        raise ValidationError(f"utterance {utt.id!r} has no segments")
    return scores


def comprehensiveness(oracle: Oracle, utt, target: TargetSpec, scores, *, bins=None) -> float:
    """Mean probability drop from masking the top-k scored segments, k over the bins."""
    scores = _check_scores(utt, scores)
    order = _ranked_indices(scores)
    ks = _k_values(len(scores), bins)
    signals = [utt.waveform]
    for k in ks:
        top = [utt.segments[i] for i in order[:k]]
        signals.append(mask_segments(utt.waveform, top))
    preds = oracle.predict_batch(signals)
    base_prob = preds[0].prob(target)
    return sum(base_prob - p.prob(target) for p in preds[1:]) / len(ks)


def sufficiency(oracle: Oracle, utt, target: TargetSpec, scores, *, bins=None) -> float:
    """Mean probability change from keeping only the top-k scored segments."""
    scores = _check_scores(utt, scores)
    order = _ranked_indices(scores)
    ks = _k_values(len(scores), bins)
    signals = [utt.waveform]
    for k in ks:
        top = [utt.segments[i] for i in order[:k]]
        signals.append(keep_segments(utt.waveform, top))
    preds = oracle.predict_batch(signals)
    base_prob = preds[0].prob(target)
    return sum(base_prob - p.prob(target) for p in preds[1:]) / len(ks)


@dataclass(frozen=True)
class HeadFaithfulness:
    head: str
    comprehensiveness_mean: float
    comprehensiveness_std: float | None
    sufficiency_mean: float
    sufficiency_std: float | None
    n_utterances: int
    n_skipped: int
    per_utterance: tuple  # ((utterance_id, comp, suff), ...) averaged over rounds


@dataclass(frozen=True)
class FaithfulnessReport:
    explainer: str
    rounds: int
    protocol: tuple  # ((key, value), ...)
    heads: tuple  # (HeadFaithfulness, ...)


def _mean(values):
    return sum(values) / len(values)


def _sample_std(values):
    if len(values) < 2:
        return None
    m = _mean(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / (len(values) - 1))


def evaluate(oracle: Oracle, utterances, explainer, rounds: int = DEFAULT_ROUNDS,
             *, bins=None, jobs: int = 1) -> FaithfulnessReport:
    """Run an explainer over a dataset and report per-head faithfulness.

    Targets are each head's argmax class on the unperturbed input.
    Stochastic explainers run `rounds` times with derived per-round seeds
    and report mean and sample standard deviation over the round means;
    deterministic explainers collapse to one round with a null std.
    Utterances without segments are skipped and counted.
    """
    utterances = list(utterances)
    if not utterances:
        raise ValidationError("dataset must be non-empty")
    check_int("rounds", rounds, minimum=1)
    check_int("jobs", jobs, minimum=1)

    usable = [u for u in utterances if u.segments]
    n_skipped = len(utterances) - len(usable)
    if not usable:
        raise ValidationError("every utterance was skipped (no segments)")

    stochastic = bool(getattr(explainer, "is_stochastic", False))
    eff_rounds = rounds if stochastic else 1

    base_preds = oracle.predict_batch([u.waveform for u in usable])
    head_names = oracle.schema.head_names
    targets = {
        u.id: {h: TargetSpec(h, p.argmax(h)) for h in head_names}
        for u, p in zip(usable, base_preds)
    }

    def one_utterance(round_explainer, utt):
        out = {}
        for head in head_names:
            target = targets[utt.id][head]
            scores = round_explainer(oracle, utt, target)
            out[head] = (
                comprehensiveness(oracle, utt, target, scores, bins=bins),
                sufficiency(oracle, utt, target, scores, bins=bins),
            )
        return out

    # per_round[r][head] -> list over utterances of (comp, suff)
    per_round = []
    for r in range(eff_rounds):
        round_explainer = explainer.for_round(r) if stochastic else explainer
        if jobs > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(lambda u: one_utterance(round_explainer, u), usable))
        else:
            rows = [one_utterance(round_explainer, u) for u in usable]
        per_round.append(rows)

    heads = []
    for head in head_names:
        round_comp_means = [_mean([row[head][0] for row in rows]) for rows in per_round]
        round_suff_means = [_mean([row[head][1] for row in rows]) for rows in per_round]
        per_utt = tuple(
            (
                utt.id,
                _mean([per_round[r][i][head][0] for r in range(eff_rounds)]),
                _mean([per_round[r][i][head][1] for r in range(eff_rounds)]),
            )
            for i, utt in enumerate(usable)
        )
        heads.append(
            HeadFaithfulness(
                head=head,
                comprehensiveness_mean=_mean(round_comp_means),
                comprehensiveness_std=_sample_std(round_comp_means),
                sufficiency_mean=_mean(round_suff_means),
                sufficiency_std=_sample_std(round_suff_means),
                n_utterances=len(usable),
                n_skipped=n_skipped,
                per_utterance=per_utt,
            )
        )

    protocol = (
        ("k_sets", "top-k for k=1..n" if bins is None
         else "top-k at fractions " + ",".join(str(b) for b in bins)),
        ("sufficiency_gaps", "zeroed"),
        ("targets", "predicted argmax per head, ties to earlier class"),
        ("round_seeds", "derived from explainer seed per round index"),
    )
    return FaithfulnessReport(
        explainer=getattr(explainer, "name", type(explainer).__name__),
        rounds=eff_rounds,
        protocol=protocol,
        heads=tuple(heads),
    )


def faithfulness_to_jsonable(report: FaithfulnessReport) -> dict:
    heads = {}
    for h in report.heads:
        heads[h.head] = {
            "comprehensiveness": {"mean": h.comprehensiveness_mean,
                                  "std": h.comprehensiveness_std},
            "sufficiency": {"mean": h.sufficiency_mean, "std": h.sufficiency_std},
            "n_utterances": h.n_utterances,
            "n_skipped": h.n_skipped,
            "per_utterance": {
                uid: {"comprehensiveness": c, "sufficiency": s}
                for uid, c, s in h.per_utterance
            },
        }
    return {
        "explainer": report.explainer,
        "rounds": report.rounds,
        "protocol": dict(report.protocol),
        "heads": heads,
    }


def faithfulness_from_jsonable(obj: dict) -> FaithfulnessReport:
    try:
        heads = tuple(
            HeadFaithfulness(
                head=name,
                comprehensiveness_mean=float(h["comprehensiveness"]["mean"]),
                comprehensiveness_std=(None if h["comprehensiveness"]["std"] is None
                                       else float(h["comprehensiveness"]["std"])),
                sufficiency_mean=float(h["sufficiency"]["mean"]),
                sufficiency_std=(None if h["sufficiency"]["std"] is None
                                 else float(h["sufficiency"]["std"])),
                n_utterances=int(h["n_utterances"]),
                n_skipped=int(h["n_skipped"]),
                per_utterance=tuple(
                    (uid, float(v["comprehensiveness"]), float(v["sufficiency"]))
                    for uid, v in h["per_utterance"].items()
                ),
            )
            for name, h in obj["heads"].items()
        )
        return FaithfulnessReport(
            explainer=str(obj["explainer"]),
            rounds=int(obj["rounds"]),
            protocol=tuple((str(k), str(v)) for k, v in obj["protocol"].items()),
            heads=heads,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed faithfulness report: {exc}") from exc
