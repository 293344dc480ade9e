import json

import pytest

from speechlens.attribution import report_from_jsonable
from speechlens.errors import ValidationError
from speechlens.render import FORMATS, dump_json, load_json, render_attribution

REPORT_OBJ = {
    "id": "utt-0001",
    "targets": [{
        "head": "keyword",
        "class": "alpha",
        "base_prob": 0.875,
        "words": [
            {"word": "turn", "start": 0.0, "end": 0.25, "r": 0.5},
            {"word": "<lamp>", "start": 0.25, "end": 0.5, "r": -0.25},
        ],
        "paralinguistic": {
            "pitch_down": {"r": 0.15, "grid": [[-4.0, 0.2], [-2.0, 0.1]]},
            "noise": {"r": 0.0, "grid": [[10.0, 0.0]]},
        },
    }],
}


@pytest.fixture
def report():
    return report_from_jsonable(REPORT_OBJ)


def test_dump_json_is_canonical():
    text = dump_json({"b": 1, "a": [1.5, 0.1]})
    assert text.endswith("\n")
    assert text == json.dumps({"b": 1, "a": [1.5, 0.1]}, indent=2, ensure_ascii=False) + "\n"
    # insertion order, not sorted
    assert text.index('"b"') < text.index('"a"')
    assert load_json(text) == {"b": 1, "a": [1.5, 0.1]}


def test_dump_json_keeps_floats_exact():
    value = 0.749999999958336
    assert load_json(dump_json({"r": value}))["r"] == value
    assert dump_json({"x": "naïve"}).count("naïve") == 1  # no \u escapes


def test_json_format_round_trips_report(report):
    text = render_attribution(report, "json")
    assert load_json(text) == REPORT_OBJ
    assert report_from_jsonable(load_json(text)) == report


def test_json_is_the_default_format(report):
    assert render_attribution(report) == render_attribution(report, "json")


def test_html_contains_words_and_scores(report):
    text = render_attribution(report, "html")
    assert text.startswith("<!doctype html>")
    assert "turn" in text
    assert "&lt;lamp&gt;" in text  # markup-ish words get escaped
    assert "+0.500" in text and "-0.250" in text
    assert "pitch_down" in text
    # the word-table max |r| is the positive 0.5, so that cell is pure red
    assert "#B2182B" in text


def test_svg_is_well_formed(report):
    text = render_attribution(report, "svg")
    assert text.startswith("<svg")
    assert text.rstrip().endswith("</svg>")
    assert "viewBox" in text
    assert "+0.500" in text
    assert "pitch_down" in text
    import xml.etree.ElementTree as ET
    ET.fromstring(text)  # parses cleanly


def test_ansi_uses_truecolor_cells(report):
    text = render_attribution(report, "ansi")
    assert "\x1b[48;2;" in text
    assert "\x1b[0m" in text
    assert "utt-0001" in text
    assert "+0.500" in text


def test_unknown_format_rejected(report):
    with pytest.raises(ValidationError):
        render_attribution(report, "pdf")
    assert FORMATS == ("json", "html", "svg", "ansi")


def test_most_negative_cell_is_pure_blue():
    obj = {
        "id": "neg",
        "targets": [{
            "head": "h", "class": "a", "base_prob": 0.5,
            "words": [
                {"word": "helps", "start": 0.0, "end": 0.1, "r": -0.4},
                {"word": "meh", "start": 0.1, "end": 0.2, "r": 0.1},
            ],
            "paralinguistic": {"noise": {"r": 0.0, "grid": [[10.0, 0.0]]}},
        }],
    }
    text = render_attribution(report_from_jsonable(obj), "html")
    assert "#2166AC" in text  # |-0.4| is this table's vmax, pure negative end


def test_all_zero_scores_render_neutral():
    obj = {
        "id": "flat",
        "targets": [{
            "head": "h", "class": "a", "base_prob": 0.5,
            "words": [{"word": "x", "start": 0.0, "end": 0.1, "r": 0.0}],
            "paralinguistic": {"noise": {"r": 0.0, "grid": [[10.0, 0.0]]}},
        }],
    }
    text = render_attribution(report_from_jsonable(obj), "html")
    assert "#F7F7F7" in text  # the neutral midpoint
