"""Command-line entry points.

Exit codes: 0 success, 1 usage, 2 file or data problem, 3 oracle failure.
All randomness flows from --seed: the noise sweep seed and the random
explainer's seed are derived from it with labelled hash derivations, so a
whole pipeline run is reproducible from that one number.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from ._rng import derive_seed
from .aggregate import (
    paralinguistic_summary_to_csv,
    paralinguistic_summary_to_jsonable,
    summarize_paralinguistic,
    summarize_words,
    word_summary_to_csv,
    word_summary_to_jsonable,
)
from .attribution import explain, report_from_jsonable
from .audio import build_utterance, load_alignment, load_dataset, load_waveform, uniform_alignment
from .errors import (
    AlignmentError,
    AudioIOError,
    ManifestError,
    OracleError,
    SpeechLensError,
    UsageError,
    ValidationError,
)
from .faithfulness import LeaveOneOutExplainer, RandomExplainer, evaluate, faithfulness_to_jsonable
from .oracle import RemoteOracle, TargetSpec, oracle_from_config
from .perturb import default_grid_set, grid_set_from_config
from .render import FORMATS, dump_json, render_attribution
from .toydata import default_tone_oracle, generate_toy_dataset

ENV_ORACLE_URL = "SXAI_ORACLE_URL"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_ORACLE = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; we reserve 2 for I/O
    def error(self, message):
        raise UsageError(message)


def _read_json_file(path, what):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"{what} file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot parse {what} file {path}: {exc}") from exc


def _make_oracle(spec: str):
    kind, _, rest = spec.partition(":")
    if kind == "toy":
        flavor, _, config_path = rest.partition(":")
        config = _read_json_file(config_path, "oracle configuration") if config_path else None
        if flavor == "tone":
            if config is None:
                return default_tone_oracle()
            return oracle_from_config(config)
        if flavor == "amplitude":
            if config is None:
                from .oracle import AmplitudeBandOracle
                from .toydata import CLASS_NAMES, HEAD, SAMPLE_RATE
                from .oracle import HeadSchema
                schema = HeadSchema(((HEAD, CLASS_NAMES[:4]),))
                return AmplitudeBandOracle(schema, sample_rate=SAMPLE_RATE)
            return oracle_from_config(config)
        raise UsageError(f"unknown toy oracle {flavor!r}; expected tone or amplitude")
    if kind == "remote":
        url = rest or os.environ.get(ENV_ORACLE_URL, "")
        if not url:
            raise UsageError(
                f"remote oracle needs a URL: use remote:URL or set {ENV_ORACLE_URL}"
            )
        return RemoteOracle(url)
    raise UsageError(f"unknown oracle {spec!r}; expected toy:tone, toy:amplitude, or remote:URL")


def _parse_targets(values):
    if not values:
        return None
    targets = []
    for v in values:
        head, sep, cls = v.partition("=")
        if not sep or not head or not cls:
            raise UsageError(f"bad target {v!r}; expected head=class")
        targets.append(TargetSpec(head, cls))
    return targets


def _write_output(text, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(text, encoding="utf-8")


def cmd_explain(args) -> int:
    if (args.alignment is None) == (args.words is None):
        raise UsageError("provide exactly one of --alignment or --words")
    wave = load_waveform(args.audio)
    if args.alignment is not None:
        segments = load_alignment(args.alignment)
    else:
        words = [w for w in args.words.replace(",", " ").split() if w]
        segments = uniform_alignment(wave, words)
    utt = build_utterance(Path(args.audio).stem, wave, segments)

    oracle = _make_oracle(args.oracle)
    if args.grids is not None:
        grids = grid_set_from_config(_read_json_file(args.grids, "grid configuration"))
    else:
        grids = default_grid_set(noise_seed=derive_seed(args.seed, "noise"))

    report = explain(oracle, utt, _parse_targets(args.targets), grids)
    _write_output(render_attribution(report, args.format), args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    utterances, rejected = load_dataset(args.manifest)
    for utt_id, reason in rejected:
        print(f"rejected {utt_id}: {reason}", file=sys.stderr)
    if not utterances:
        raise ManifestError(f"manifest {args.manifest} yielded no usable utterances")

    oracle = _make_oracle(args.oracle)
    if args.explainer == "l1o":
        explainer = LeaveOneOutExplainer()
    else:
        explainer = RandomExplainer(derive_seed(args.seed, "random-explainer"))
    report = evaluate(oracle, utterances, explainer, rounds=args.rounds, jobs=args.jobs)
    _write_output(dump_json(faithfulness_to_jsonable(report)), args.out)
    return EXIT_OK


def cmd_aggregate(args) -> int:
    reports_dir = Path(args.reports)
    if not reports_dir.is_dir():
        raise ManifestError(f"report directory not found: {reports_dir}")
    paths = sorted(reports_dir.glob("*.json"))
    if not paths:
        raise ManifestError(f"no .json reports in {reports_dir}")
    reports = []
    for path in paths:
        reports.append(report_from_jsonable(_read_json_file(path, "attribution report")))

    words = summarize_words(reports, top_m=args.top)
    para = summarize_paralinguistic(reports)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(
        dump_json({"words": word_summary_to_jsonable(words),
                   "paralinguistic": paralinguistic_summary_to_jsonable(para)}),
        encoding="utf-8",
    )
    (out_dir / "words.csv").write_text(word_summary_to_csv(words), encoding="utf-8")
    (out_dir / "paralinguistic.csv").write_text(paralinguistic_summary_to_csv(para),
                                                encoding="utf-8")
    return EXIT_OK


def cmd_gen_toy(args) -> int:
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    manifest = generate_toy_dataset(args.out, args.n, n_classes=args.classes, seed=args.seed)
    print(manifest)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="speechlens",
                     description="Perturbation-based explanations for speech classifiers")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("explain", help="explain one utterance", parents=[])
    p.add_argument("--audio", required=True, help="WAV file to explain")
    p.add_argument("--alignment", help="word alignment JSON")
    p.add_argument("--words", help="transcript words for a uniform split, comma separated")
    p.add_argument("--oracle", required=True,
                   help="toy:tone[:CONFIG] | toy:amplitude[:CONFIG] | remote[:URL]")
    p.add_argument("--grids", help="perturbation grid configuration JSON")
    p.add_argument("--targets", action="append",
                   help="head=class to explain; repeatable; default: predicted classes")
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--out", help="output path; default stdout")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", help="faithfulness metrics over a dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--oracle", required=True)
    p.add_argument("--explainer", choices=("l1o", "random"), default="l1o")
    p.add_argument("--rounds", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="output path; default stdout")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("aggregate", help="summarize a directory of attribution reports")
    p.add_argument("--reports", required=True, help="directory of attribution report JSON files")
    p.add_argument("--top", type=int, default=15)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("gen-toy", help="generate the synthetic benchmark dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, required=True, help="number of utterances")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_toy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (AudioIOError, AlignmentError, ManifestError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SpeechLensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
