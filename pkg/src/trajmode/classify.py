"""Self-contained classifiers: CART decision tree, random forest, Gaussian NB.

All three train on a dense float matrix plus string labels and are fully
deterministic given (config, data): the tree breaks equal-gain splits by
lowest column index then lowest threshold, the forest derives each tree's
random stream from (rng_seed, tree_index) so parallel and sequential
training build identical models, and prediction ties fall back to class
vocabulary order (sorted label strings).  Models serialize to versioned
JSON documents and predict identically after a round trip.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrainConfig:
    """Shared training knobs; classifier-specific fields are ignored by others."""

    max_depth: int = 5
    n_trees: int = 50
    rng_seed: int = 0
    min_samples_split: int = 2
    features_per_split: int | str = "sqrt"
    gnb_var_smoothing: float = 1e-9
    bootstrap: bool = True


MODEL_FORMAT_VERSION = 1


def _prepare(X, y) -> tuple[np.ndarray, np.ndarray, list[str]]:
    X = np.ascontiguousarray(np.asarray(X, dtype=float))
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training matrix must be 2-D and non-empty")
    if not np.all(np.isfinite(X)):
        raise ValueError("training matrix contains non-finite values")
    labels = [str(v) for v in y]
    if len(labels) != X.shape[0]:
        raise ValueError(f"{X.shape[0]} rows but {len(labels)} labels")
    classes = sorted(set(labels))
    index = {c: i for i, c in enumerate(classes)}
    codes = np.fromiter((index[v] for v in labels), dtype=np.intp, count=len(labels))
    return X, codes, classes


def _check_columns(X, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ValueError(
            f"model expects {n_features} columns, got matrix of shape {X.shape}"
        )
    return X


def _gini(counts: np.ndarray, total: float) -> float:
    return 1.0 - float(((counts / total) ** 2).sum())


def _best_split(X: np.ndarray, y: np.ndarray, n_classes: int, columns) -> tuple[int, float] | None:
    """Best (column, threshold) by Gini decrease over midpoint candidates.

    Columns are scanned in the given (ascending) order and only a strictly
    larger decrease replaces the incumbent, so exact ties keep the lowest
    column and, within a column, the lowest threshold.
    """
    n = y.size
    counts = np.bincount(y, minlength=n_classes).astype(float)
    parent = _gini(counts, n)
    best_dec = -math.inf
    best: tuple[int, float] | None = None
    for col in columns:
        order = np.argsort(X[:, col], kind="stable")
        xs = X[order, col]
        if xs[0] == xs[-1]:
            continue
        boundaries = np.flatnonzero(xs[1:] != xs[:-1])
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y[order]] = 1.0
        left_counts = np.cumsum(onehot, axis=0)[boundaries]
        left_n = (boundaries + 1).astype(float)
        right_n = n - left_n
        right_counts = counts - left_counts
        gini_left = 1.0 - np.sum((left_counts / left_n[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right_counts / right_n[:, None]) ** 2, axis=1)
        decrease = parent - (left_n * gini_left + right_n * gini_right) / n
        j = int(np.argmax(decrease))
        if decrease[j] > best_dec:
            best_dec = float(decrease[j])
            b = boundaries[j]
            best = (int(col), float((xs[b] + xs[b + 1]) / 2.0))
    return best


def _grow(X, y, n_classes: int, depth: int, cfg: TrainConfig, rng, m: int) -> dict:
    counts = np.bincount(y, minlength=n_classes)
    if (
        depth >= cfg.max_depth
        or y.size < cfg.min_samples_split
        or int(counts.max()) == y.size
    ):
        return {"counts": counts.tolist()}
    d = X.shape[1]
    if rng is not None and m < d:
        columns = np.sort(rng.choice(d, size=m, replace=False))
    else:
        columns = range(d)
    split = _best_split(X, y, n_classes, columns)
    if split is None:
        return {"counts": counts.tolist()}
    col, thr = split
    mask = X[:, col] <= thr
    return {
        "column": col,
        "threshold": thr,
        "left": _grow(X[mask], y[mask], n_classes, depth + 1, cfg, rng, m),
        "right": _grow(X[~mask], y[~mask], n_classes, depth + 1, cfg, rng, m),
    }


def _route_to_codes(tree: dict, X: np.ndarray) -> np.ndarray:
    out = np.zeros(X.shape[0], dtype=np.intp)
    stack = [(tree, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if "counts" in node:
            out[idx] = int(np.argmax(node["counts"]))
        else:
            mask = X[idx, node["column"]] <= node["threshold"]
            stack.append((node["left"], idx[mask]))
            stack.append((node["right"], idx[~mask]))
    return out


def tree_depth(tree: dict) -> int:
    """Edges on the longest root-to-leaf path."""
    if "counts" in tree:
        return 0
    return 1 + max(tree_depth(tree["left"]), tree_depth(tree["right"]))


@dataclass
class DecisionTreeModel:
    classes: list[str]
    n_features: int
    tree: dict
    max_depth: int

    variant = "decision_tree"

    def predict(self, X) -> list[str]:
        X = _check_columns(X, self.n_features)
        return [self.classes[c] for c in _route_to_codes(self.tree, X)]

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "variant": self.variant,
            "classes": self.classes,
            "n_features": self.n_features,
            "max_depth": self.max_depth,
            "tree": self.tree,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTreeModel":
        return cls(list(data["classes"]), int(data["n_features"]), data["tree"], int(data["max_depth"]))


@dataclass
class RandomForestModel:
    classes: list[str]
    n_features: int
    trees: list[dict]
    tree_seeds: list[list[int]]
    max_depth: int

    variant = "random_forest"

    def predict(self, X) -> list[str]:
        X = _check_columns(X, self.n_features)
        votes = np.zeros((X.shape[0], len(self.classes)), dtype=np.intp)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            votes[rows, _route_to_codes(tree, X)] += 1
        return [self.classes[c] for c in np.argmax(votes, axis=1)]

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "variant": self.variant,
            "classes": self.classes,
            "n_features": self.n_features,
            "max_depth": self.max_depth,
            "tree_seeds": self.tree_seeds,
            "trees": self.trees,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RandomForestModel":
        return cls(
            list(data["classes"]),
            int(data["n_features"]),
            list(data["trees"]),
            [list(s) for s in data["tree_seeds"]],
            int(data["max_depth"]),
        )


@dataclass
class GaussianNBModel:
    classes: list[str]
    n_features: int
    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    variant = "gaussian_nb"

    def predict(self, X) -> list[str]:
        X = _check_columns(X, self.n_features)
        # log joint: log prior + sum_j log N(x_j; mu, var)
        log_prob = np.log(self.priors)[None, :] - 0.5 * np.sum(
            np.log(2.0 * np.pi * self.variances)[None, :, :]
            + (X[:, None, :] - self.means[None, :, :]) ** 2 / self.variances[None, :, :],
            axis=2,
        )
        return [self.classes[c] for c in np.argmax(log_prob, axis=1)]

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "variant": self.variant,
            "classes": self.classes,
            "n_features": self.n_features,
            "priors": self.priors.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianNBModel":
        return cls(
            list(data["classes"]),
            int(data["n_features"]),
            np.asarray(data["priors"], dtype=float),
            np.asarray(data["means"], dtype=float),
            np.asarray(data["variances"], dtype=float),
        )


ClassifierModel = DecisionTreeModel | RandomForestModel | GaussianNBModel


def _validate_tree_config(cfg: TrainConfig) -> None:
    if cfg.max_depth < 1:
        raise ValueError(f"max_depth must be at least 1, got {cfg.max_depth}")
    if cfg.min_samples_split < 2:
        raise ValueError(f"min_samples_split must be at least 2, got {cfg.min_samples_split}")


def train_decision_tree(X, y, cfg: TrainConfig | None = None) -> DecisionTreeModel:
    """Grow a CART tree on Gini impurity.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values; zero-gain splits are taken when no better one exists so an
    impure node keeps refining until depth or sample limits stop it.
    """
    cfg = cfg or TrainConfig()
    _validate_tree_config(cfg)
    X, codes, classes = _prepare(X, y)
    tree = _grow(X, codes, len(classes), 0, cfg, None, X.shape[1])
    return DecisionTreeModel(classes, X.shape[1], tree, cfg.max_depth)


def _resolve_features_per_split(cfg: TrainConfig, d: int) -> int:
    spec = cfg.features_per_split
    if spec == "sqrt":
        return min(math.ceil(math.sqrt(d)), d)
    if spec == "all":
        return d
    if isinstance(spec, int) and not isinstance(spec, bool):
        if spec < 1:
            raise ValueError(f"features_per_split must be at least 1, got {spec}")
        return min(spec, d)
    raise ValueError(f"bad features_per_split {spec!r}")


def train_random_forest(X, y, cfg: TrainConfig | None = None, jobs: int = 1) -> RandomForestModel:
    """Train a bagged forest of CART trees.

    Each tree gets a same-size bootstrap draw (unless cfg.bootstrap is off)
    and searches a fresh random column subset at every split, both taken
    from a stream seeded by (rng_seed, tree_index).  Results are identical
    for any ``jobs`` value.
    """
    cfg = cfg or TrainConfig()
    _validate_tree_config(cfg)
    if cfg.n_trees < 1:
        raise ValueError(f"n_trees must be at least 1, got {cfg.n_trees}")
    X, codes, classes = _prepare(X, y)
    n, d = X.shape
    m = _resolve_features_per_split(cfg, d)

    def build(t: int) -> dict:
        rng = np.random.default_rng([cfg.rng_seed, t])
        if cfg.bootstrap:
            idx = rng.integers(0, n, size=n)
            Xt, yt = X[idx], codes[idx]
        else:
            Xt, yt = X, codes
        return _grow(Xt, yt, len(classes), 0, cfg, rng, m)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trees = list(pool.map(build, range(cfg.n_trees)))
    else:
        trees = [build(t) for t in range(cfg.n_trees)]
    seeds = [[cfg.rng_seed, t] for t in range(cfg.n_trees)]
    return RandomForestModel(classes, d, trees, seeds, cfg.max_depth)


def train_gaussian_nb(X, y, cfg: TrainConfig | None = None) -> GaussianNBModel:
    """Fit class priors plus per-(class, column) Gaussians.

    Variances are population form with an additive smoothing floor of
    cfg.gnb_var_smoothing times the largest overall column variance (the
    raw smoothing value if every column is constant), so a class seen once
    still yields a usable density.
    """
    cfg = cfg or TrainConfig()
    if cfg.gnb_var_smoothing <= 0.0:
        raise ValueError(f"gnb_var_smoothing must be positive, got {cfg.gnb_var_smoothing}")
    X, codes, classes = _prepare(X, y)
    n, d = X.shape
    k = len(classes)
    priors = np.bincount(codes, minlength=k) / n
    means = np.empty((k, d))
    variances = np.empty((k, d))
    for ci in range(k):
        rows = X[codes == ci]
        means[ci] = rows.mean(axis=0)
        variances[ci] = rows.var(axis=0)
    eps = cfg.gnb_var_smoothing * float(X.var(axis=0).max())
    if eps <= 0.0:
        eps = cfg.gnb_var_smoothing
    variances += eps
    return GaussianNBModel(classes, d, priors, means, variances)


def predict(model: ClassifierModel, X) -> list[str]:
    """Predict labels with any trained model."""
    return model.predict(X)


_VARIANTS = {
    DecisionTreeModel.variant: DecisionTreeModel,
    RandomForestModel.variant: RandomForestModel,
    GaussianNBModel.variant: GaussianNBModel,
}


def model_to_dict(model: ClassifierModel) -> dict:
    return model.to_dict()


def model_from_dict(data: dict) -> ClassifierModel:
    version = data.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    variant = data.get("variant")
    if variant not in _VARIANTS:
        raise ValueError(f"unknown model variant {variant!r}")
    return _VARIANTS[variant].from_dict(data)


def save_model(model: ClassifierModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> ClassifierModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
