"""Can catchment attributes predict where a model is skilful?"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .forest import SkillForestClassifier, SkillForestRegressor

SIMILAR_BAND = 0.05
ABOVE, BELOW = "above", "below"
A_BETTER, SIMILAR, B_BETTER = "A better", "similar", "B better"


class StratificationError(ValueError):
    pass


def stratified_folds(y, k=5, seed=0):
    """Test-index arrays of ``k`` folds with each class dealt round-robin after shuffling."""
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise StratificationError("stratification needs at least two classes")
    if counts.min() < k:
        raise StratificationError(
            f"class {classes[np.argmin(counts)]!r} has {counts.min()} members, fewer than k={k}"
        )
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    offset = 0
    for c in classes:
        members = rng.permutation(np.flatnonzero(y == c))
        for j, i in enumerate(members):
            folds[(j + offset) % k].append(i)
        offset += len(members)
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]


@dataclass
class ClassifierEvaluation:
    labels: list
    confusion: pd.DataFrame  # rows true, columns predicted
    micro_precision: float
    micro_recall: float
    accuracy: float
    predictions: np.ndarray


def confusion_matrix(y_true, y_pred, labels):
    index = {lab: i for i, lab in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        cm[index[t], index[p]] += 1
    return cm


def micro_scores(cm):
    """Micro-averaged precision and recall from a confusion matrix (rows true)."""
    tp = np.diag(cm).sum()
    fp = cm.sum(axis=0) - np.diag(cm)
    fn = cm.sum(axis=1) - np.diag(cm)
    precision = tp / (tp + fp.sum())
    recall = tp / (tp + fn.sum())
    return float(precision), float(recall)


def evaluate_classifier(X, y, k=5, seed=0, labels=None, **forest_params) -> ClassifierEvaluation:
    """Pooled out-of-fold confusion matrix of a balanced forest over stratified folds.

    For single-label predictions micro precision and micro recall both equal
    accuracy; that identity is checked, not assumed.
    """
    y = np.asarray(y)
    X_df = X if isinstance(X, pd.DataFrame) else pd.DataFrame(np.asarray(X, dtype=float))
    folds = stratified_folds(y, k, seed)
    pred = np.empty(len(y), dtype=object)
    for fi, test in enumerate(folds):
        train = np.setdiff1d(np.arange(len(y)), test)
        if len(np.unique(y[train])) < 2:
            raise StratificationError(f"fold {fi} training split has a single class")
        params = {"random_state": seed + fi, **forest_params}
        clf = SkillForestClassifier(**params).fit(X_df.iloc[train], y[train])
        pred[test] = clf.predict(X_df.iloc[test])
    labels = list(labels) if labels is not None else sorted(np.unique(y).tolist())
    cm = confusion_matrix(y, pred, labels)
    precision, recall = micro_scores(cm)
    accuracy = float(np.trace(cm) / cm.sum())
    if not (np.isclose(precision, accuracy, rtol=0, atol=1e-12) and np.isclose(recall, accuracy, rtol=0, atol=1e-12)):
        raise AssertionError("micro precision/recall differ from accuracy for single-label predictions")
    return ClassifierEvaluation(
        labels=labels,
        confusion=pd.DataFrame(cm, index=pd.Index(labels, name="true"), columns=pd.Index(labels, name="predicted")),
        micro_precision=precision,
        micro_recall=recall,
        accuracy=accuracy,
        predictions=pred,
    )


def skill_labels(f1):
    """``"above"``/``"below"`` the mean of defined scores."""
    f1 = pd.Series(f1, dtype=float)
    mean = f1.mean()
    return np.where(f1 > mean, ABOVE, BELOW)


def which_model_labels(f1_a, f1_b, band=SIMILAR_BAND):
    diff = np.asarray(f1_a, dtype=float) - np.asarray(f1_b, dtype=float)
    return np.where(diff > band, A_BETTER, np.where(diff < -band, B_BETTER, SIMILAR))


def which_model_where(X, f1_a, f1_b, band=SIMILAR_BAND, k=5, seed=0, **forest_params):
    """3-class forest predicting whether model A or B scores better (or similar)."""
    y = which_model_labels(f1_a, f1_b, band)
    present = [lab for lab in (A_BETTER, SIMILAR, B_BETTER) if lab in set(y)]
    return evaluate_classifier(X, y, k=k, seed=seed, labels=present, **forest_params)


def fit_skill_regressor(X, f1, seed=0, **forest_params) -> SkillForestRegressor:
    return SkillForestRegressor(random_state=seed, **forest_params).fit(X, f1)


def attribute_correlations(X: pd.DataFrame, f1) -> pd.Series:
    """Pearson correlation of each attribute with the skill score."""
    f1 = np.asarray(f1, dtype=float)
    out = {}
    for col in X.columns:
        x = X[col].to_numpy(dtype=float)
        ok = np.isfinite(x) & np.isfinite(f1)
        if ok.sum() < 2 or np.std(x[ok]) == 0 or np.std(f1[ok]) == 0:
            out[col] = np.nan
        else:
            out[col] = float(np.corrcoef(x[ok], f1[ok])[0, 1])
    return pd.Series(out, name="pearson_r")


def median_impute(X: pd.DataFrame) -> pd.DataFrame:
    return X.fillna(X.median(numeric_only=True))
