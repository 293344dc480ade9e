import numpy as np
import pytest

from speechlens.attribution import (
    DirectionAttribution,
    WordAttribution,
    explain,
    paralinguistic_attribution,
    report_from_jsonable,
    report_to_jsonable,
    word_attribution,
)
from speechlens.audio import Waveform, WordSegment, build_utterance
from speechlens.errors import ValidationError
from speechlens.oracle import ConstantOracle, HeadSchema, TargetSpec, ToneKeywordOracle
from speechlens.perturb import GridSet
from speechlens.render import dump_json, load_json

SR = 16000

SMALL_GRIDS = GridSet(pitch=(-2.0, 2.0), stretch=(0.9, 1.1),
                      reverb=(40.0,), noise_snr_db=(10.0,), noise_seed=0)


def two_tone_utterance():
    """0.5 s: a 500 Hz burst then a 900 Hz burst, labels on each half."""
    t = np.arange(SR // 2) / SR
    x = np.where(t < 0.25,
                 0.3 * np.sin(2 * np.pi * 500 * t),
                 0.05 * np.sin(2 * np.pi * 900 * t))
    w = Waveform(x, SR)
    segs = [WordSegment("first", 0.0, 0.25), WordSegment("second", 0.25, 0.5)]
    return build_utterance("u0", w, segs)


def tone_oracle():
    schema = HeadSchema.from_mapping({"keyword": ["five", "nine"]})
    return ToneKeywordOracle(schema, {"five": 500.0, "nine": 900.0}, temperature=1e-4)


def test_word_attribution_blames_the_segment_that_carries_the_tone():
    utt = two_tone_utterance()
    oracle = tone_oracle()
    target = TargetSpec("keyword", "five")
    wa = word_attribution(oracle, utt, target)
    assert wa.utterance_id == "u0"
    scores = dict((seg.text, r) for seg, r in wa.scores)
    # masking the 500 Hz burst destroys the "five" evidence
    assert scores["first"] > 0.4
    assert abs(scores["second"]) < 0.05
    assert wa.base_prob > 0.9


def test_word_attribution_batches_all_queries(wrap_counting):
    utt = two_tone_utterance()
    oracle = wrap_counting(tone_oracle())
    word_attribution(oracle, utt, TargetSpec("keyword", "five"))
    assert oracle.n_batches == 1
    assert oracle.n_predictions == len(utt.segments) + 1


def test_word_attribution_rejects_empty_utterance():
    w = Waveform(np.zeros(SR // 4), SR)
    utt = build_utterance("empty", w, [])
    with pytest.raises(ValidationError):
        word_attribution(tone_oracle(), utt, TargetSpec("keyword", "five"))
    with pytest.raises(ValidationError):
        word_attribution(tone_oracle(), two_tone_utterance(), TargetSpec("keyword", "zz"))


def test_constant_oracle_yields_zero_relevance_everywhere():
    utt = two_tone_utterance()
    oracle = ConstantOracle({"keyword": {"five": 0.5, "nine": 0.5}})
    report = explain(oracle, utt, grids=SMALL_GRIDS)
    for te in report.targets:
        for _, r in te.words.scores:
            assert r == 0.0
        for d in te.paralinguistic.directions:
            assert d.relevance == 0.0
            for _, delta in d.grid:
                assert delta == 0.0


def test_paralinguistic_relevance_is_mean_of_grid():
    utt = two_tone_utterance()
    pa = paralinguistic_attribution(tone_oracle(), utt,
                                    TargetSpec("keyword", "five"), SMALL_GRIDS)
    labels = [d.label for d in pa.directions]
    assert labels == ["pitch_down", "pitch_up", "stretch_down", "stretch_up",
                      "noise", "reverb"]
    for d in pa.directions:
        assert d.relevance == pytest.approx(
            sum(delta for _, delta in d.grid) / len(d.grid), abs=1e-12)
    by_label = {d.label: d for d in pa.directions}
    # shifting pitch by two semitones moves 500 Hz off the detector
    assert by_label["pitch_down"].relevance > 0.4
    assert by_label["pitch_up"].relevance > 0.4


def test_explain_defaults_to_per_head_argmax():
    utt = two_tone_utterance()
    report = explain(tone_oracle(), utt, grids=SMALL_GRIDS)
    assert report.utterance_id == "u0"
    assert [te.target for te in report.targets] == [TargetSpec("keyword", "five")]


def test_explain_explicit_targets_share_one_batch(wrap_counting):
    utt = two_tone_utterance()
    oracle = wrap_counting(tone_oracle())
    targets = [TargetSpec("keyword", "five"), TargetSpec("keyword", "nine")]
    report = explain(oracle, utt, targets=targets, grids=SMALL_GRIDS)
    assert oracle.n_batches == 1
    n_grid = sum(len(specs) for _, specs in SMALL_GRIDS.directions())
    assert oracle.n_predictions == 1 + len(utt.segments) + n_grid
    assert [te.target for te in report.targets] == targets
    # complementary targets: masking "first" hurts five and helps nine
    five = dict((s.text, r) for s, r in report.targets[0].words.scores)
    nine = dict((s.text, r) for s, r in report.targets[1].words.scores)
    assert five["first"] > 0.4
    assert nine["first"] < -0.4


def test_explain_rejects_empty_target_list():
    with pytest.raises(ValidationError):
        explain(tone_oracle(), two_tone_utterance(), targets=[], grids=SMALL_GRIDS)


def test_word_attribution_score_bounds_enforced():
    seg = WordSegment("w", 0.0, 0.1)
    with pytest.raises(ValidationError):
        WordAttribution("u", TargetSpec("h", "a"), 0.5, ((seg, 1.5),))


def test_direction_attribution_checks_mean():
    DirectionAttribution("noise", 0.25, ((10.0, 0.2), (5.0, 0.3)))
    with pytest.raises(ValidationError):
        DirectionAttribution("noise", 0.4, ((10.0, 0.2), (5.0, 0.3)))
    with pytest.raises(ValidationError):
        DirectionAttribution("noise", 0.0, ())


def test_report_json_round_trip():
    utt = two_tone_utterance()
    report = explain(tone_oracle(), utt, grids=SMALL_GRIDS)
    obj = report_to_jsonable(report)

    assert set(obj) == {"id", "targets"}
    t = obj["targets"][0]
    assert set(t) == {"head", "class", "base_prob", "words", "paralinguistic"}
    assert set(t["words"][0]) == {"word", "start", "end", "r"}
    assert set(t["paralinguistic"]["noise"]) == {"r", "grid"}
    assert t["paralinguistic"]["noise"]["grid"][0][0] == 10.0

    back = report_from_jsonable(load_json(dump_json(obj)))
    assert back == report
    assert report_to_jsonable(back) == obj


def test_report_from_jsonable_rejects_malformed():
    with pytest.raises(ValidationError):
        report_from_jsonable({"targets": []})
    with pytest.raises(ValidationError):
        report_from_jsonable({"id": "u", "targets": [{"head": "h"}]})
