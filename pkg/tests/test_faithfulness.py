import numpy as np
import pytest

from speechlens._rng import derive_seed
from speechlens.attribution import word_attribution
from speechlens.audio import Waveform, WordSegment, build_utterance
from speechlens.errors import ValidationError
from speechlens.faithfulness import (
    PERCENT_BINS,
    LeaveOneOutExplainer,
    RandomExplainer,
    comprehensiveness,
    evaluate,
    faithfulness_from_jsonable,
    faithfulness_to_jsonable,
    random_explainer,
    sufficiency,
)
from speechlens.oracle import ConstantOracle, HeadSchema, TargetSpec, ToneKeywordOracle

SR = 16000


def tone_utterance(utt_id="u0", first_amp=0.3, second_amp=0.05):
    t = np.arange(SR // 2) / SR
    x = np.where(t < 0.25,
                 first_amp * np.sin(2 * np.pi * 500 * t),
                 second_amp * np.sin(2 * np.pi * 900 * t))
    segs = [WordSegment("first", 0.0, 0.25), WordSegment("second", 0.25, 0.5)]
    return build_utterance(utt_id, Waveform(x, SR), segs)


def tone_oracle():
    schema = HeadSchema.from_mapping({"keyword": ["five", "nine"]})
    return ToneKeywordOracle(schema, {"five": 500.0, "nine": 900.0}, temperature=1e-4)


def test_leave_one_out_explainer_scores():
    utt = tone_utterance()
    oracle = tone_oracle()
    target = TargetSpec("keyword", "five")
    scores = LeaveOneOutExplainer()(oracle, utt, target)
    wa = word_attribution(oracle, utt, target)
    assert scores == [r for _, r in wa.scores]
    assert LeaveOneOutExplainer.name == "l1o"
    assert LeaveOneOutExplainer.is_stochastic is False


def test_random_explainer_is_deterministic_and_per_utterance():
    a = tone_utterance("utt-a")
    b = tone_utterance("utt-b")
    oracle = tone_oracle()
    target = TargetSpec("keyword", "five")
    ex = random_explainer(99)
    assert ex(oracle, a, target) == ex(oracle, a, target)
    assert ex(oracle, a, target) != ex(oracle, b, target)
    assert all(-1.0 <= s < 1.0 for s in ex(oracle, a, target))
    # the same utterance scores identically no matter which target asks
    assert ex(oracle, a, target) == ex(oracle, a, TargetSpec("keyword", "nine"))


def test_random_explainer_round_derivation():
    ex = RandomExplainer(5)
    r0 = ex.for_round(0)
    r1 = ex.for_round(1)
    assert r0.seed == derive_seed(5, "round", 0)
    assert r1.seed == derive_seed(5, "round", 1)
    assert r0.seed != r1.seed
    assert ex.for_round(1).seed == r1.seed


def test_comprehensiveness_separates_good_from_wrong_ranking():
    utt = tone_utterance()
    oracle = tone_oracle()
    target = TargetSpec("keyword", "five")
    good = comprehensiveness(oracle, utt, target, [0.9, 0.0])
    bad = comprehensiveness(oracle, utt, target, [0.0, 0.9])
    # ranking the true evidence first masks it at every k
    assert good > bad
    assert good > 0.4


def test_sufficiency_prefers_keeping_the_evidence():
    utt = tone_utterance()
    oracle = tone_oracle()
    target = TargetSpec("keyword", "five")
    good = sufficiency(oracle, utt, target, [0.9, 0.0])
    bad = sufficiency(oracle, utt, target, [0.0, 0.9])
    assert good < bad


def test_metrics_zero_for_constant_oracle():
    utt = tone_utterance()
    oracle = ConstantOracle({"keyword": {"five": 0.6, "nine": 0.4}})
    target = TargetSpec("keyword", "five")
    scores = [0.3, -0.2]
    assert comprehensiveness(oracle, utt, target, scores) == 0.0
    assert sufficiency(oracle, utt, target, scores) == 0.0


def test_single_segment_metrics_are_exact():
    # one segment covering the whole signal: comprehensiveness reduces to
    # the leave-one-out score through the identical float path, and
    # sufficiency keeps everything so the change is exactly zero
    t = np.arange(SR // 4) / SR
    w = Waveform(0.3 * np.sin(2 * np.pi * 500 * t), SR)
    utt = build_utterance("solo", w, [WordSegment("word", 0.0, 0.25)])
    oracle = tone_oracle()
    target = TargetSpec("keyword", "five")
    wa = word_attribution(oracle, utt, target)
    r = wa.scores[0][1]
    assert comprehensiveness(oracle, utt, target, [r]) == r
    assert sufficiency(oracle, utt, target, [r]) == 0.0


def test_tied_scores_rank_by_segment_index():
    utt = tone_utterance()
    oracle = tone_oracle()
    target = TargetSpec("keyword", "five")
    # ties keep index order, so [0.5, 0.5] masks "first" at k=1
    tied = comprehensiveness(oracle, utt, target, [0.5, 0.5])
    explicit = comprehensiveness(oracle, utt, target, [0.6, 0.5])
    assert tied == explicit


def test_percent_bins_deduplicate(wrap_counting):
    utt = tone_utterance()
    oracle = wrap_counting(tone_oracle())
    target = TargetSpec("keyword", "five")
    # n=2: ceil(.1*2)=1, ceil(.2*2)=1 (dup), ceil(.5*2)=1 (dup), ceil(1*2)=2
    comprehensiveness(oracle, utt, target, [0.9, 0.1], bins=PERCENT_BINS)
    assert oracle.n_predictions == 1 + 2  # base plus k in {1, 2}
    assert PERCENT_BINS == (0.10, 0.20, 0.50, 1.00)


def test_metrics_validate_scores():
    utt = tone_utterance()
    oracle = tone_oracle()
    target = TargetSpec("keyword", "five")
    with pytest.raises(ValidationError):
        comprehensiveness(oracle, utt, target, [0.5])
    with pytest.raises(ValidationError):
        sufficiency(oracle, utt, target, [0.5, 0.5, 0.5])


def test_evaluate_l1o_collapses_to_one_round():
    utts = [tone_utterance(f"u{i}") for i in range(3)]
    report = evaluate(tone_oracle(), utts, LeaveOneOutExplainer(), rounds=5)
    assert report.explainer == "l1o"
    assert report.rounds == 1
    head = report.heads[0]
    assert head.head == "keyword"
    assert head.comprehensiveness_std is None
    assert head.sufficiency_std is None
    assert head.n_utterances == 3 and head.n_skipped == 0
    assert [uid for uid, _, _ in head.per_utterance] == ["u0", "u1", "u2"]


def test_evaluate_random_reports_spread():
    utts = [tone_utterance(f"u{i}", first_amp=0.3 - 0.02 * i) for i in range(4)]
    report = evaluate(tone_oracle(), utts, RandomExplainer(7), rounds=3)
    assert report.rounds == 3
    head = report.heads[0]
    assert head.comprehensiveness_std is not None
    assert head.comprehensiveness_std >= 0.0
    assert head.sufficiency_std is not None


def test_evaluate_is_reproducible():
    utts = [tone_utterance(f"u{i}") for i in range(3)]
    a = evaluate(tone_oracle(), utts, RandomExplainer(7), rounds=2)
    b = evaluate(tone_oracle(), utts, RandomExplainer(7), rounds=2)
    assert faithfulness_to_jsonable(a) == faithfulness_to_jsonable(b)


def test_evaluate_parallel_matches_serial():
    utts = [tone_utterance(f"u{i}") for i in range(4)]
    serial = evaluate(tone_oracle(), utts, RandomExplainer(3), rounds=2, jobs=1)
    parallel = evaluate(tone_oracle(), utts, RandomExplainer(3), rounds=2, jobs=3)
    assert faithfulness_to_jsonable(serial) == faithfulness_to_jsonable(parallel)


def test_evaluate_skips_segmentless_utterances():
    w = Waveform(np.zeros(SR // 4) + 0.01, SR)
    empty = build_utterance("empty", w, [])
    utts = [tone_utterance("ok"), empty]
    report = evaluate(tone_oracle(), utts, LeaveOneOutExplainer())
    head = report.heads[0]
    assert head.n_utterances == 1
    assert head.n_skipped == 1
    with pytest.raises(ValidationError):
        evaluate(tone_oracle(), [empty], LeaveOneOutExplainer())
    with pytest.raises(ValidationError):
        evaluate(tone_oracle(), [], LeaveOneOutExplainer())


def test_evaluate_rejects_bad_arguments():
    utts = [tone_utterance()]
    with pytest.raises(ValidationError):
        evaluate(tone_oracle(), utts, LeaveOneOutExplainer(), rounds=0)
    with pytest.raises(ValidationError):
        evaluate(tone_oracle(), utts, LeaveOneOutExplainer(), jobs=0)


def test_faithfulness_json_round_trip():
    utts = [tone_utterance(f"u{i}") for i in range(2)]
    report = evaluate(tone_oracle(), utts, RandomExplainer(1), rounds=2)
    obj = faithfulness_to_jsonable(report)
    head = obj["heads"]["keyword"]
    assert set(head) == {"comprehensiveness", "sufficiency", "n_utterances",
                         "n_skipped", "per_utterance"}
    assert set(head["comprehensiveness"]) == {"mean", "std"}
    back = faithfulness_from_jsonable(obj)
    assert faithfulness_to_jsonable(back) == obj

    solo = evaluate(tone_oracle(), utts, LeaveOneOutExplainer())
    solo_obj = faithfulness_to_jsonable(solo)
    assert solo_obj["heads"]["keyword"]["comprehensiveness"]["std"] is None
    assert faithfulness_to_jsonable(faithfulness_from_jsonable(solo_obj)) == solo_obj


def test_faithfulness_from_jsonable_rejects_malformed():
    with pytest.raises(ValidationError):
        faithfulness_from_jsonable({"explainer": "x"})
