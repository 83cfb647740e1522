"""simlangid: toolkit for discriminating similar languages and language varieties.

Character/word n-gram classifiers (flat and two-stage), ensemble fusion
analysis (plurality, majority, Oracle, Accuracy@N), learning-curve
experiments with balanced subsampling, and human-annotation statistics.
"""

__version__ = "0.1.0"

from .classifiers import (
    HierarchicalModel,
    LinearModel,
    NBModel,
    apply_model,
    load_model,
    predict,
    predict_hierarchical,
    predict_ranked,
    save_model,
    train_hierarchical,
    train_linear,
    train_nb,
)
from .corpus import (
    Dataset,
    Instance,
    LabelSpace,
    filter_groups,
    gen_synthetic,
    load_dataset,
    load_label_space,
    normalize_placeholders,
    parse_dslcc,
    save_dataset,
    save_label_space,
    serialize_dslcc,
    subsample_balanced,
)
from .ensemble import (
    OracleResult,
    PredictionMatrix,
    accuracy_at_n,
    ensemble_report,
    error_breakdown,
    load_predictions,
    majority_vote,
    oracle,
    plurality_vote,
)
from .errors import (
    AlignmentError,
    ConfigError,
    InsufficientDataError,
    LabelSpaceError,
    ParseError,
    SimlangError,
)
from .evaluation import (
    AnnotationTable,
    AnnotatorStats,
    EvalReport,
    LearningCurveResult,
    TrainerSpec,
    annotator_stats,
    evaluate,
    group_stage_accuracy,
    learning_curve,
    load_annotation_table,
    progress_eval,
    render_report,
)
from .features import (
    FeatureConfig,
    FeatureVector,
    Vocabulary,
    build_vocabulary,
    extract_char_ngrams,
    extract_word_ngrams,
    vectorize,
)
from .rng import derived_seed
