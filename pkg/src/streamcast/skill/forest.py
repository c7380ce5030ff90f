"""Random forests over catchment attributes."""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .tree import Tree, grow_tree

FORMAT = "streamcast-forest"


class SchemaError(ValueError):
    pass


def schema_hash(names) -> str:
    return hashlib.sha256("\x1f".join(map(str, names)).encode()).hexdigest()[:16]


def _resolve_max_features(rule, p):
    if rule is None:
        return p
    if rule == "sqrt":
        return max(1, int(math.sqrt(p)))
    if rule == "third":
        return max(1, p // 3)
    if isinstance(rule, float):
        return max(1, int(rule * p))
    return int(rule)


class _BaseForest(BaseEstimator):
    _estimator_type_tag = None

    def __init__(self, n_estimators=500, max_depth=None, min_samples_leaf=1, max_features=None,
                 random_state=0, n_jobs=1):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _validate_X(self, X, fitting=False):
        if isinstance(X, pd.DataFrame):
            names = [str(c) for c in X.columns]
            arr = X.to_numpy(dtype=float)
        else:
            arr = np.asarray(X, dtype=float)
            if arr.ndim != 2:
                raise ValueError(f"expected a 2-D attribute matrix, got shape {arr.shape}")
            names = [f"x{i}" for i in range(arr.shape[1])]
        if np.any(~np.isfinite(arr)):
            raise ValueError("attribute matrix contains missing values; impute upstream")
        if fitting:
            self.feature_names_in_ = np.asarray(names, dtype=object)
            self.n_features_in_ = arr.shape[1]
            self.schema_hash_ = schema_hash(names)
            return arr
        if arr.shape[1] != self.n_features_in_:
            raise SchemaError(f"expected {self.n_features_in_} attributes, got {arr.shape[1]}")
        if isinstance(X, pd.DataFrame) and list(names) != list(self.feature_names_in_):
            missing = set(self.feature_names_in_) - set(names)
            if missing:
                raise SchemaError(f"attributes missing: {sorted(missing)}")
            arr = X[list(self.feature_names_in_)].to_numpy(dtype=float)
        return arr

    def _tree_rngs(self):
        ss = np.random.SeedSequence(self.random_state)
        return [np.random.default_rng(s) for s in ss.spawn(self.n_estimators)]

    def _grow_all(self, X, y, sampler, n_classes):
        p = X.shape[1]
        mf = _resolve_max_features(self.max_features, p)

        def one(rng):
            idx = sampler(rng)
            imp = np.zeros(p)
            tree = grow_tree(X[idx], y[idx], n_classes=n_classes, max_features=mf,
                             max_depth=self.max_depth, min_samples_leaf=self.min_samples_leaf,
                             rng=rng, importances=imp)
            total = imp.sum()
            return tree, (imp / total if total > 0 else imp)

        rngs = self._tree_rngs()
        if self.n_jobs == 1:
            results = [one(r) for r in rngs]
        else:
            from joblib import Parallel, delayed

            results = Parallel(n_jobs=self.n_jobs)(delayed(one)(r) for r in rngs)
        self.trees_ = [t for t, _ in results]
        imp = np.mean([i for _, i in results], axis=0)
        total = imp.sum()
        self.feature_importances_ = imp / total if total > 0 else imp

    def importances(self) -> pd.Series:
        check_is_fitted(self, "trees_")
        return pd.Series(self.feature_importances_, index=list(self.feature_names_in_)).sort_values(ascending=False)

    def to_dict(self):
        check_is_fitted(self, "trees_")
        d = {
            "format": FORMAT,
            "kind": self._estimator_type_tag,
            "params": self.get_params(),
            "feature_names": list(self.feature_names_in_),
            "schema_hash": self.schema_hash_,
            "feature_importances": self.feature_importances_.tolist(),
            "trees": [t.to_dict() for t in self.trees_],
        }
        if hasattr(self, "classes_"):
            d["classes"] = [c.item() if isinstance(c, np.generic) else c for c in self.classes_]
        return d

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)


def load_forest(source):
    d = source
    if not isinstance(source, dict):
        with open(source) as fh:
            d = json.load(fh)
    if d.get("format") != FORMAT:
        raise ValueError("not a serialized streamcast forest")
    cls = {"classifier": SkillForestClassifier, "regressor": SkillForestRegressor}[d["kind"]]
    est = cls(**d["params"])
    est.feature_names_in_ = np.asarray(d["feature_names"], dtype=object)
    est.n_features_in_ = len(d["feature_names"])
    est.schema_hash_ = d["schema_hash"]
    est.feature_importances_ = np.asarray(d["feature_importances"])
    est.trees_ = [Tree.from_dict(t) for t in d["trees"]]
    if "classes" in d:
        est.classes_ = np.asarray(d["classes"])
    return est


class SkillForestClassifier(ClassifierMixin, _BaseForest):
    """Random forest classifier with class-balanced bootstrap samples.

    Each tree sees a bootstrap of ``n`` rows drawn with probability inversely
    proportional to class frequency, so every class has the same expected
    count. Predictions are majority votes; ``predict_proba`` returns vote
    fractions.
    """

    _estimator_type_tag = "classifier"

    def __init__(self, n_estimators=500, max_depth=None, min_samples_leaf=1, max_features="sqrt",
                 balanced=True, random_state=0, n_jobs=1):
        super().__init__(n_estimators, max_depth, min_samples_leaf, max_features, random_state, n_jobs)
        self.balanced = balanced

    def fit(self, X, y):
        X = self._validate_X(X, fitting=True)
        y = np.asarray(y)
        if len(y) != len(X):
            raise ValueError("X and y differ in length")
        self.classes_, codes = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("classifier needs at least two classes in y")
        n = len(y)
        counts = np.bincount(codes)
        weights = (1.0 / counts[codes]) if self.balanced else np.ones(n)
        weights /= weights.sum()

        def sampler(rng):
            return rng.choice(n, size=n, replace=True, p=weights)

        self._grow_all(X, codes, sampler, len(self.classes_))
        return self

    def votes(self, X):
        check_is_fitted(self, "trees_")
        X = self._validate_X(X)
        votes = np.zeros((len(X), len(self.classes_)))
        rows = np.arange(len(X))
        for t in self.trees_:
            votes[rows, np.argmax(t.predict_value(X), axis=1)] += 1
        return votes

    def predict_proba(self, X):
        return self.votes(X) / len(self.trees_)

    def predict(self, X):
        return self.classes_[np.argmax(self.votes(X), axis=1)]


class SkillForestRegressor(RegressorMixin, _BaseForest):
    """Random forest regressor (ordinary bootstrap, variance-reduction splits)."""

    _estimator_type_tag = "regressor"

    def __init__(self, n_estimators=500, max_depth=None, min_samples_leaf=1, max_features="third",
                 random_state=0, n_jobs=1):
        super().__init__(n_estimators, max_depth, min_samples_leaf, max_features, random_state, n_jobs)

    def fit(self, X, y):
        X = self._validate_X(X, fitting=True)
        y = np.asarray(y, dtype=float)
        if len(y) != len(X):
            raise ValueError("X and y differ in length")
        if np.any(~np.isfinite(y)):
            raise ValueError("regression targets must be finite")
        n = len(y)

        def sampler(rng):
            return rng.integers(0, n, size=n)

        self._grow_all(X, y, sampler, None)
        return self

    def predict(self, X):
        check_is_fitted(self, "trees_")
        X = self._validate_X(X)
        return np.mean([t.predict_value(X)[:, 0] for t in self.trees_], axis=0)
