"""tonelab: pitch-based tone representations and cross-dialect tone analysis.

Tone transcriptions on the five-level scale (2-3 digits in 1..5) map to
simulated pitch curves; the area between two curves is a fine-grained tone
distance. On top of that sit automatic transcription from audio (F0
extraction, a quadratic-fit baseline, and a small trainable regressor),
tone-category discovery by density clustering, and dialect-level clustering
and variance analysis.
"""

__version__ = "0.1.0"

from .cluster import (
    ClusterAssignment,
    Dendrogram,
    LINKAGES,
    NOISE,
    classical_mds,
    cut_tree,
    dbscan,
    hierarchical_cluster,
    two_cluster_accuracy,
)
from .dialect import (
    DialectCorpus,
    Embedding1D,
    RegionLexicon,
    ToneClusteringResult,
    dialect_cluster_pipeline,
    dialect_variance_map,
    load_corpus,
    region_distance,
    region_distance_matrix,
    tone_clustering_pipeline,
)
from .errors import (
    AudioError,
    ConvergenceError,
    CorpusError,
    InputError,
    ToneLabError,
    TranscriptionError,
    VoicingError,
)
from .learn import (
    LinearToneModel,
    decode_transcription,
    embed,
    linearity_margin,
    pitch_distance,
    pitch_distance_subgradient,
    pitch_loss,
    train_tone_model,
)
from .pitch import (
    AudioClip,
    ContourFeature,
    F0Track,
    contour_feature,
    extract_f0,
    f0_baseline_transcribe,
    f0_baseline_triple,
    read_wav,
)
from .tones import (
    DistanceMatrix,
    NormalizedContour,
    PitchCurve,
    Transcription,
    build_distance_matrix,
    canonical_transcriptions,
    categorical_distance,
    curve_of,
    normalize_contour,
    parse_transcription,
    relative_pitch,
    tone_distance,
    tone_distance_database,
    variance_metric,
)

__all__ = [
    "AudioClip",
    "AudioError",
    "ClusterAssignment",
    "ContourFeature",
    "ConvergenceError",
    "CorpusError",
    "Dendrogram",
    "DialectCorpus",
    "DistanceMatrix",
    "Embedding1D",
    "F0Track",
    "InputError",
    "LINKAGES",
    "LinearToneModel",
    "NOISE",
    "NormalizedContour",
    "PitchCurve",
    "RegionLexicon",
    "ToneClusteringResult",
    "ToneLabError",
    "Transcription",
    "TranscriptionError",
    "VoicingError",
    "build_distance_matrix",
    "canonical_transcriptions",
    "categorical_distance",
    "classical_mds",
    "contour_feature",
    "curve_of",
    "cut_tree",
    "dbscan",
    "decode_transcription",
    "dialect_cluster_pipeline",
    "dialect_variance_map",
    "embed",
    "extract_f0",
    "f0_baseline_transcribe",
    "f0_baseline_triple",
    "hierarchical_cluster",
    "linearity_margin",
    "load_corpus",
    "normalize_contour",
    "parse_transcription",
    "pitch_distance",
    "pitch_distance_subgradient",
    "pitch_loss",
    "read_wav",
    "region_distance",
    "region_distance_matrix",
    "relative_pitch",
    "tone_clustering_pipeline",
    "tone_distance",
    "tone_distance_database",
    "train_tone_model",
    "two_cluster_accuracy",
    "variance_metric",
]
