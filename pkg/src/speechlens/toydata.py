"""Synthetic benchmark generator.

Each utterance is a row of fixed-width word slots. Exactly one slot
carries its class's keyword: a pure tone at that class's frequency, with
the class name as the transcript word. The rest are silence or faint
distractor tones at frequencies no class listens to, labelled with filler
words. Class frequencies are multiples of 4 Hz so every tone completes an
integer number of cycles inside its 0.25 s slot: slot masking then removes
a tone's projection energy exactly, and the tone-keyword oracle's per
class energies separate cleanly.

Everything derives from one seed, so identical arguments produce
byte-identical files.
"""

import json
import random
from pathlib import Path

import numpy as np

from ._rng import derive_seed
from .audio import Waveform, save_waveform
from .errors import ValidationError
from .oracle import HeadSchema, ToneKeywordOracle, make_tone_keyword_oracle

__all__ = [
    "CLASS_NAMES",
    "SLOT_SECONDS",
    "SAMPLE_RATE",
    "class_frequency",
    "default_tone_oracle",
    "generate_toy_dataset",
]

SAMPLE_RATE = 16000
SLOT_SECONDS = 0.25
HEAD = "keyword"

KEYWORD_AMP = 0.3
DISTRACTOR_AMP = 0.05
TEMPERATURE = 1e-4

CLASS_NAMES = ("alfa", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel")
FILLER_WORDS = ("the", "please", "kindly", "now", "so", "then", "okay", "well")
# off-class tones; chosen to be multiples of 4 Hz and never an even hundred,
# so they cannot collide with any class frequency
DISTRACTOR_FREQS = (1480.0, 1720.0, 1960.0, 2200.0)

SILENCE_PROB = 0.4
MIN_WORDS, MAX_WORDS = 3, 6


def class_frequency(index: int) -> float:
    return 400.0 + 200.0 * index


def _schema(n_classes: int) -> HeadSchema:
    return HeadSchema(((HEAD, CLASS_NAMES[:n_classes]),))


def _class_freqs(n_classes: int) -> dict:
    return {CLASS_NAMES[i]: class_frequency(i) for i in range(n_classes)}


def default_tone_oracle(n_classes: int = 4) -> ToneKeywordOracle:
    """The oracle matching a generated dataset's default construction."""
    return make_tone_keyword_oracle(_schema(n_classes), _class_freqs(n_classes),
                                    TEMPERATURE, SAMPLE_RATE)


def _tone(freq: float, amp: float, n: int) -> np.ndarray:
    # slot-local phase so every occurrence of a tone is identical
    t = np.arange(n) / SAMPLE_RATE
    return amp * np.sin(2 * np.pi * freq * t)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def generate_toy_dataset(out_dir, n_utterances: int, n_classes: int = 4, seed: int = 0):
    """Write WAVs, alignments, manifest.json, and oracle.json under out_dir.

    Returns the manifest path. Labels rotate through the classes so every
    class appears; all other structure comes from the seeded stream.
    """
    if not isinstance(n_utterances, int) or n_utterances < 1:
        raise ValidationError(f"n_utterances must be a positive integer, got {n_utterances!r}")
    if not (2 <= n_classes <= len(CLASS_NAMES)):
        raise ValidationError(f"n_classes must be in [2, {len(CLASS_NAMES)}], got {n_classes}")

    out_dir = Path(out_dir)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)
    (out_dir / "alignments").mkdir(parents=True, exist_ok=True)

    rng = random.Random(derive_seed(seed, "toy-structure"))
    slot_n = int(round(SLOT_SECONDS * SAMPLE_RATE))
    freqs = _class_freqs(n_classes)

    entries = []
    for idx in range(n_utterances):
        utt_id = f"utt-{idx:04d}"
        label = CLASS_NAMES[idx % n_classes]
        n_words = rng.randint(MIN_WORDS, MAX_WORDS)
        keyword_slot = rng.randrange(n_words)

        slots = []
        words = []
        for s in range(n_words):
            if s == keyword_slot:
                slots.append(_tone(freqs[label], KEYWORD_AMP, slot_n))
                words.append(label)
            elif rng.random() < SILENCE_PROB:
                slots.append(np.zeros(slot_n))
                words.append(rng.choice(FILLER_WORDS))
            else:
                freq = rng.choice(DISTRACTOR_FREQS)
                slots.append(_tone(freq, DISTRACTOR_AMP, slot_n))
                words.append(rng.choice(FILLER_WORDS))

        samples = np.concatenate(slots)
        save_waveform(out_dir / "audio" / f"{utt_id}.wav", Waveform(samples, SAMPLE_RATE))

        alignment = [
            {"word": words[s], "start": s * SLOT_SECONDS, "end": (s + 1) * SLOT_SECONDS}
            for s in range(n_words)
        ]
        _write_json(out_dir / "alignments" / f"{utt_id}.json", alignment)

        entries.append(
            {
                "id": utt_id,
                "audio": f"audio/{utt_id}.wav",
                "alignment": f"alignments/{utt_id}.json",
                "words": None,
                "labels": {HEAD: label},
            }
        )

    manifest_path = out_dir / "manifest.json"
    _write_json(manifest_path, entries)
    _write_json(
        out_dir / "oracle.json",
        {
            "kind": "tone-keyword",
            "sample_rate": SAMPLE_RATE,
            "temperature": TEMPERATURE,
            "heads": {HEAD: list(CLASS_NAMES[:n_classes])},
            "class_freqs": freqs,
        },
    )
    return manifest_path
