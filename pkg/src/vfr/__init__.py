"""Vocabulary-free fine-grained recognition engine.

Discovers class vocabularies from unlabeled images through VQA and chat
providers, grounds each class name in generated context sentences, refines
the vocabulary against the image pool, couples text and visual prototypes
into a classifier, and evaluates with clustering and semantic accuracy.
All model inference goes through pluggable providers; deterministic mocks
make every run reproducible offline.
"""

from .classifier import (
    ClassifierSettings,
    CoupledClassifier,
    Prediction,
    augmentation_plan,
    build_few_shot,
    build_vocabulary_free,
    build_zero_shot,
    classify,
    couple,
    pseudo_label,
    visual_prototype,
)
from .config import ProviderSettings, RunConfig, load_config
from .discovery import (
    AttributePair,
    CandidateNameSet,
    MetaCategory,
    extract_attributes,
    infer_meta_category,
    parse_name_list,
    propose_candidate_names,
)
from .evaluation import (
    ContingencyTable,
    MetricsReport,
    clustering_accuracy,
    compute_metrics,
    filtration_sensitivity,
    hungarian_assignment,
    semantic_accuracy,
)
from .grounding import (
    ContextSet,
    GroundedClass,
    contextual_text_embedding,
    generate_contexts,
    ground_with_plain_prompt,
)
from .images import ImageRef
from .manifest import DatasetManifest, ManifestEntry, load_manifest, sample_train_entries
from .pipeline import ProviderSet, build_providers, run_all, run_single
from .prompts import PromptPack, build_context_prompt, build_plain_prompt, load_prompt_pack
from .refinement import (
    RefinementConfig,
    ScoredCandidate,
    filter_top_k,
    relevance_score,
    score_candidates,
)
from .vectors import EmbeddingVector, UnitVector, cosine, mean_of_normalized, normalize

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "EmbeddingVector",
    "UnitVector",
    "normalize",
    "cosine",
    "mean_of_normalized",
    "ImageRef",
    "MetaCategory",
    "AttributePair",
    "CandidateNameSet",
    "infer_meta_category",
    "extract_attributes",
    "propose_candidate_names",
    "parse_name_list",
    "PromptPack",
    "load_prompt_pack",
    "build_context_prompt",
    "build_plain_prompt",
    "ContextSet",
    "GroundedClass",
    "generate_contexts",
    "contextual_text_embedding",
    "ground_with_plain_prompt",
    "RefinementConfig",
    "ScoredCandidate",
    "relevance_score",
    "score_candidates",
    "filter_top_k",
    "ClassifierSettings",
    "CoupledClassifier",
    "Prediction",
    "augmentation_plan",
    "pseudo_label",
    "visual_prototype",
    "couple",
    "classify",
    "build_vocabulary_free",
    "build_zero_shot",
    "build_few_shot",
    "ContingencyTable",
    "MetricsReport",
    "hungarian_assignment",
    "clustering_accuracy",
    "semantic_accuracy",
    "filtration_sensitivity",
    "compute_metrics",
    "ManifestEntry",
    "DatasetManifest",
    "load_manifest",
    "sample_train_entries",
    "RunConfig",
    "ProviderSettings",
    "load_config",
    "ProviderSet",
    "build_providers",
    "run_all",
    "run_single",
]
