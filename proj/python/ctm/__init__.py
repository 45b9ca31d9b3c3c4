"""Correlated topic model training and coherence evaluation."""

from ._ctm import (
    BagOfWords,
    CoherenceConfig,
    CoherenceMeasure,
    CoherenceReport,
    CtmError,
    DocVariational,
    InferenceConfig,
    ModelBundle,
    ModelParams,
    PreprocessConfig,
    PreprocessResult,
    TermCount,
    TopicScore,
    TraceEntry,
    TrainConfig,
    TrainTrace,
    Vocabulary,
    __version__,
    doc_bound,
    infer_document,
    init_model,
    load_corpus,
    load_model,
    logistic_normal,
    make_model,
    model_coherence_uci,
    model_coherence_umass,
    preprocess_dir,
    save_corpus,
    save_model,
    tokenize,
    top_words,
    train,
)

__all__ = [
    "BagOfWords",
    "CoherenceConfig",
    "CoherenceMeasure",
    "CoherenceReport",
    "CtmError",
    "DocVariational",
    "InferenceConfig",
    "ModelBundle",
    "ModelParams",
    "PreprocessConfig",
    "PreprocessResult",
    "TermCount",
    "TopicScore",
    "TraceEntry",
    "TrainConfig",
    "TrainTrace",
    "Vocabulary",
    "__version__",
    "doc_bound",
    "infer_document",
    "init_model",
    "load_corpus",
    "load_model",
    "logistic_normal",
    "make_model",
    "model_coherence_uci",
    "model_coherence_umass",
    "preprocess_dir",
    "save_corpus",
    "save_model",
    "tokenize",
    "top_words",
    "train",
]
