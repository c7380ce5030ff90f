from .analysis import (
    A_BETTER,
    ABOVE,
    B_BETTER,
    BELOW,
    SIMILAR,
    SIMILAR_BAND,
    ClassifierEvaluation,
    StratificationError,
    attribute_correlations,
    confusion_matrix,
    evaluate_classifier,
    fit_skill_regressor,
    median_impute,
    micro_scores,
    skill_labels,
    stratified_folds,
    which_model_labels,
    which_model_where,
)
from .forest import SchemaError, SkillForestClassifier, SkillForestRegressor, load_forest, schema_hash
from .tree import Tree, grow_tree

__all__ = [
    "A_BETTER",
    "ABOVE",
    "B_BETTER",
    "BELOW",
    "SIMILAR",
    "SIMILAR_BAND",
    "ClassifierEvaluation",
    "SchemaError",
    "SkillForestClassifier",
    "SkillForestRegressor",
    "StratificationError",
    "Tree",
    "attribute_correlations",
    "confusion_matrix",
    "evaluate_classifier",
    "fit_skill_regressor",
    "grow_tree",
    "load_forest",
    "median_impute",
    "micro_scores",
    "schema_hash",
    "skill_labels",
    "stratified_folds",
    "which_model_labels",
    "which_model_where",
]
