"""Auto-labeled entity corpora and a two-stage averaged-perceptron tagger
for security-style text."""

from .autolabel import (
    EMPTY_GAZETTEER,
    Gazetteer,
    MatchSpan,
    StructuredRecord,
    apply_heuristics,
    autolabel_corpus,
    build_gazetteer,
    match_gazetteer,
    match_record,
    read_gazetteer,
    read_records,
    resolve_and_tag,
    write_gazetteer,
    write_records,
)
from .corpus import (
    AnnotatedDescription,
    AnnotatedToken,
    Corpus,
    EntityLabel,
    IOBTag,
    Token,
    build_description,
    read_corpus,
    repair_iob,
    tokenize,
    unlabeled_description,
    write_corpus,
)
from .errors import (
    CorpusFormatError,
    InvalidInputError,
    InvalidParameterError,
    ModelFormatError,
    ModelVersionError,
    RecordFormatError,
    VulntagError,
)
from .evaluate import ConfusionCounts, EvalReport, compute_metrics, cross_validate
from .features import (
    DEFAULT_CONFIG,
    DescriptionContext,
    FeatureConfig,
    TrainGazetteers,
    WordShape,
    collect_train_gazetteers,
    context_for_description,
    domain_features,
    iob_features,
    pos_tag,
    word_shape,
)
from .synth import generate_synthetic, synthetic_gazetteer
from .tagger import (
    TaggerModel,
    WeightVector,
    greedy_decode,
    load_model,
    save_model,
    score_features,
    tag_pipeline,
    tag_probability,
    train_averaged_perceptron,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedDescription",
    "AnnotatedToken",
    "ConfusionCounts",
    "Corpus",
    "CorpusFormatError",
    "DEFAULT_CONFIG",
    "DescriptionContext",
    "EMPTY_GAZETTEER",
    "EntityLabel",
    "EvalReport",
    "FeatureConfig",
    "Gazetteer",
    "IOBTag",
    "InvalidInputError",
    "InvalidParameterError",
    "MatchSpan",
    "ModelFormatError",
    "ModelVersionError",
    "RecordFormatError",
    "StructuredRecord",
    "TaggerModel",
    "Token",
    "TrainGazetteers",
    "VulntagError",
    "WeightVector",
    "WordShape",
    "apply_heuristics",
    "autolabel_corpus",
    "build_description",
    "build_gazetteer",
    "collect_train_gazetteers",
    "compute_metrics",
    "context_for_description",
    "cross_validate",
    "domain_features",
    "generate_synthetic",
    "greedy_decode",
    "iob_features",
    "load_model",
    "match_gazetteer",
    "match_record",
    "pos_tag",
    "read_corpus",
    "read_gazetteer",
    "read_records",
    "repair_iob",
    "resolve_and_tag",
    "save_model",
    "score_features",
    "synthetic_gazetteer",
    "tag_pipeline",
    "tag_probability",
    "tokenize",
    "train_averaged_perceptron",
    "unlabeled_description",
    "word_shape",
    "write_corpus",
    "write_gazetteer",
    "write_records",
]
