"""Perturbation-based explanations for speech classifiers.

Word-level leave-one-out attribution over aligned segments,
paralinguistic attribution via pitch/stretch/noise/reverb sweeps, and a
comprehensiveness/sufficiency faithfulness harness with a random
baseline, all against a pluggable classifier oracle.
"""

from .aggregate import (
    GlobalParalinguisticSummary,
    GlobalWordSummary,
    normalize_word,
    summarize_paralinguistic,
    summarize_words,
)
from .attribution import (
    AttributionReport,
    DirectionAttribution,
    ParalinguisticAttribution,
    TargetExplanation,
    WordAttribution,
    explain,
    paralinguistic_attribution,
    word_attribution,
)
from .audio import (
    DatasetManifest,
    Utterance,
    Waveform,
    WordSegment,
    build_utterance,
    load_alignment,
    load_dataset,
    load_manifest,
    load_waveform,
    save_waveform,
    uniform_alignment,
)
from .errors import (
    AlignmentError,
    AudioIOError,
    ManifestError,
    OracleError,
    SpeechLensError,
    UsageError,
    ValidationError,
)
from .estimators import PitchShift, Reverb, SegmentMask, TimeStretch, WhiteNoise
from .faithfulness import (
    FaithfulnessReport,
    LeaveOneOutExplainer,
    RandomExplainer,
    comprehensiveness,
    evaluate,
    random_explainer,
    sufficiency,
)
from .oracle import (
    AmplitudeBandOracle,
    ConstantOracle,
    HeadSchema,
    Oracle,
    Prediction,
    RemoteOracle,
    TargetSpec,
    ToneKeywordOracle,
    make_tone_keyword_oracle,
)
from .perturb import (
    GridSet,
    ParalinguisticFeature,
    PerturbationGrid,
    PerturbationSpec,
    add_white_noise,
    apply,
    default_grid_set,
    grid_set_from_config,
    keep_segments,
    mask_segment,
    mask_segments,
    pitch_shift,
    reverb,
    time_stretch,
)
from .render import render_attribution
from .toydata import default_tone_oracle, generate_toy_dataset

__version__ = "0.1.0"
