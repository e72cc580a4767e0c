"""Cross-validated evaluation: class subsets, folds, metrics, comparison runs.

The headline experiment trains each classifier under stratified k-fold
cross validation twice, once on the raw feature matrix and once after the
median-deviation mask, pairing folds by index under a shared seed, and
tests the per-fold metric differences with a paired t statistic.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from .classify import (
    TrainConfig,
    train_decision_tree,
    train_gaussian_nb,
    train_random_forest,
)
from .denoise import DEFAULT_THRESHOLD, apply_mask, noise_mask_for
from .ingest import MODES, TrajectorySample
from .normalize import fit_minmax, transform
from .trajfeat import FeatureMatrix, SampleRef, featurize_samples

WITH_NOISE = "with_noise"
CLEAN = "clean"

# two-sided Student t cutoff at alpha = 0.05 for df = 9, printed for reference
REFERENCE_CRITICAL_VALUE = {"df": 9, "alpha": 0.05, "two_sided": 2.262}

DEFAULT_CLASSIFIER_NAMES = ("dt", "rf", "gnb")

TrainerFn = Callable[[np.ndarray, list[str]], object]


class DegenerateVarianceError(ValueError):
    """Paired differences have zero variance; the t statistic is undefined."""


class TTestResult(NamedTuple):
    t: float
    df: int


@dataclass(frozen=True)
class ClassSubsetConfig:
    """Label merging and filtering applied before an experiment.

    ``merges`` renames source modes to target classes, ``keep`` lists the
    class vocabulary of the experiment, and ``drop_others`` discards samples
    whose (mapped) label is not kept.
    """

    name: str
    merges: Mapping[str, str]
    keep: tuple[str, ...]
    drop_others: bool = True

    def __post_init__(self):
        object.__setattr__(self, "merges", dict(self.merges))
        object.__setattr__(self, "keep", tuple(self.keep))
        if not self.keep:
            raise ValueError(f"subset {self.name!r} keeps no classes")
        if len(set(self.keep)) != len(self.keep):
            raise ValueError(f"subset {self.name!r} has duplicate kept classes")
        unknown = sorted(set(self.merges) - MODES)
        if unknown:
            raise ValueError(f"subset {self.name!r} merges unknown modes: {unknown}")
        for target in self.keep:
            if not any(self.merges.get(m, m) == target for m in MODES):
                raise ValueError(
                    f"subset {self.name!r}: kept class {target!r} receives no source mode"
                )

    def map_label(self, label: str) -> str | None:
        """Mapped class for a label, or None when the sample is dropped."""
        target = self.merges.get(label, label)
        if target in self.keep or not self.drop_others:
            return target
        return None


SUBSET_PRESETS: dict[str, ClassSubsetConfig] = {
    "dabiri": ClassSubsetConfig(
        "dabiri",
        merges={"car": "driving", "taxi": "driving"},
        keep=("walk", "bike", "bus", "driving", "train"),
    ),
    "jiang": ClassSubsetConfig("jiang", merges={}, keep=("bike", "car", "walk", "bus")),
    "xiao": ClassSubsetConfig(
        "xiao",
        merges={"bus": "bus&taxi", "taxi": "bus&taxi"},
        keep=("walk", "bus&taxi", "bike", "car", "subway", "train"),
    ),
    "zheng": ClassSubsetConfig(
        "zheng",
        merges={"car": "driving", "taxi": "driving"},
        keep=("walk", "driving", "bus", "bike"),
    ),
    "endo": ClassSubsetConfig(
        "endo", merges={}, keep=("walk", "car", "taxi", "bike", "subway", "bus", "train")
    ),
    "all11": ClassSubsetConfig("all11", merges={}, keep=tuple(sorted(MODES))),
}


def get_subset(name: str) -> ClassSubsetConfig:
    try:
        return SUBSET_PRESETS[name]
    except KeyError:
        available = ", ".join(sorted(SUBSET_PRESETS))
        raise ValueError(f"unknown subset {name!r}; available: {available}") from None


def map_classes(
    samples: Sequence[TrajectorySample], cfg: ClassSubsetConfig
) -> list[TrajectorySample]:
    """Relabel and filter samples per the subset config (order preserved)."""
    out = []
    for s in samples:
        target = cfg.map_label(s.mode)
        if target is None:
            continue
        out.append(s if target == s.mode else dataclasses.replace(s, mode=target))
    return out


def map_matrix(matrix: FeatureMatrix, cfg: ClassSubsetConfig) -> FeatureMatrix:
    """Relabel and filter feature rows per the subset config."""
    keep_idx = []
    labels = []
    for i, label in enumerate(matrix.labels):
        target = cfg.map_label(label)
        if target is None:
            continue
        keep_idx.append(i)
        labels.append(target)
    sub = matrix.select(keep_idx)
    sub.labels = labels
    return sub


def stratified_kfold(labels: Sequence[str], k: int = 10, seed: int = 0) -> list[np.ndarray]:
    """Deterministic stratified fold assignment.

    Every class is shuffled independently and dealt across folds so
    per-class counts differ by at most one between folds; the dealing
    offset rotates with the class index to balance total fold sizes.
    """
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    labels_arr = np.asarray(list(labels))
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for ci, cls in enumerate(sorted(set(labels_arr.tolist()))):
        idx = np.flatnonzero(labels_arr == cls)
        if idx.size < k:
            raise ValueError(
                f"class {cls!r} has {idx.size} samples, fewer than k={k}"
            )
        perm = rng.permutation(idx)
        for j in range(k):
            folds[(j + ci) % k].extend(perm[j::k].tolist())
    return [np.array(sorted(f), dtype=int) for f in folds]


def plain_kfold(n: int, k: int = 10, seed: int = 0) -> list[np.ndarray]:
    """Unstratified shuffled folds, for sensitivity experiments."""
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if n < k:
        raise ValueError(f"{n} rows cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    return [np.array(sorted(chunk), dtype=int) for chunk in np.array_split(perm, k)]


def accuracy(y_true: Sequence[str], y_pred: Sequence[str]) -> float:
    """Fraction of exact label matches."""
    if len(y_true) != len(y_pred):
        raise ValueError("label sequences differ in length")
    if len(y_true) == 0:
        raise ValueError("empty label sequences")
    return sum(t == p for t, p in zip(y_true, y_pred)) / len(y_true)


def f1(y_true: Sequence[str], y_pred: Sequence[str], average: str = "macro") -> float:
    """F1 averaged over the classes present in y_true.

    Per class, F1 = 2PR / (P + R) with precision or recall taken as 0 when
    undefined; a class with P + R = 0 contributes 0.  ``macro`` averages
    uniformly, ``weighted`` by class support in y_true.
    """
    if len(y_true) != len(y_pred):
        raise ValueError("label sequences differ in length")
    if len(y_true) == 0:
        raise ValueError("empty label sequences")
    if average not in ("macro", "weighted"):
        raise ValueError(f"unknown average {average!r}")
    classes = sorted(set(y_true))
    scores = []
    supports = []
    for cls in classes:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p == cls)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != cls and p == cls)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p != cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        scores.append(
            2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
        )
        supports.append(tp + fn)
    if average == "macro":
        return float(np.mean(scores))
    return float(np.average(scores, weights=supports))


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Paired Student t statistic over matched measurements.

    t = mean(d) / (sd(d) / sqrt(k)) with the sample standard deviation
    (divide by k - 1) of the differences d = a - b, on k - 1 degrees of
    freedom.  Raises DegenerateVarianceError when the differences have zero
    variance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-D and equally long")
    k = a.size
    if k < 2:
        raise ValueError(f"need at least 2 pairs, got {k}")
    d = a - b
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise DegenerateVarianceError("paired differences have zero variance")
    t = float(d.mean() / (sd / math.sqrt(k)))
    return TTestResult(t, k - 1)


@dataclass
class RunResult:
    """One cross-validated pass (either raw rows or masked rows)."""

    denoised: bool
    rows_before: int
    rows_after: int
    removed: list[SampleRef]
    mask: dict | None
    folds: dict[str, dict[str, list[float]]]

    def means(self) -> dict[str, dict[str, float]]:
        return {
            clf: {metric: float(np.mean(vals)) for metric, vals in metrics.items()}
            for clf, metrics in self.folds.items()
        }

    def to_dict(self) -> dict:
        return {
            "denoised": self.denoised,
            "rows_before": self.rows_before,
            "rows_after": self.rows_after,
            "removed": [list(ref) for ref in self.removed],
            "mask": self.mask,
            "folds": self.folds,
            "means": self.means(),
        }


@dataclass
class EvalReport:
    """Everything one evaluate invocation produced, JSON-ready via to_dict."""

    subset: str
    seed: int
    k: int
    threshold: float
    classifiers: tuple[str, ...]
    runs: dict[str, RunResult]
    ttests: dict[str, dict[str, dict]]
    stratified: bool = True
    fit_on_all: bool = False
    per_mode_mask: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "subset": self.subset,
            "seed": self.seed,
            "k": self.k,
            "threshold": self.threshold,
            "classifiers": list(self.classifiers),
            "stratified": self.stratified,
            "fit_on_all": self.fit_on_all,
            "per_mode_mask": self.per_mode_mask,
            "runs": {key: run.to_dict() for key, run in self.runs.items()},
            "ttests": self.ttests,
            "reference_critical_value": REFERENCE_CRITICAL_VALUE,
            "notes": self.notes,
        }


def default_trainers(names: Sequence[str], cfg: TrainConfig) -> dict[str, TrainerFn]:
    """Built-in trainer registry keyed by short classifier names."""
    trainers: dict[str, TrainerFn] = {}
    for name in names:
        if name == "dt":
            trainers[name] = lambda X, y, c=cfg: train_decision_tree(X, y, c)
        elif name == "rf":
            trainers[name] = lambda X, y, c=cfg: train_random_forest(X, y, c)
        elif name == "gnb":
            trainers[name] = lambda X, y, c=cfg: train_gaussian_nb(X, y, c)
        else:
            available = ", ".join(DEFAULT_CLASSIFIER_NAMES)
            raise ValueError(f"unknown classifier {name!r}; available: {available}")
    return trainers


def _fold_cell(
    work: FeatureMatrix,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    trainers: Mapping[str, TrainerFn],
    fit_on_all: bool,
) -> dict[str, tuple[float, float, float]]:
    """Train and score every classifier on one train/test split."""
    train = work.select(train_idx)
    test = work.select(test_idx)
    params = fit_minmax(work) if fit_on_all else fit_minmax(train)
    X_train = transform(params, train).values
    X_test = transform(params, test).values
    out = {}
    for name, trainer in trainers.items():
        model = trainer(X_train, train.labels)
        pred = model.predict(X_test)
        out[name] = (
            accuracy(test.labels, pred),
            f1(test.labels, pred, "macro"),
            f1(test.labels, pred, "weighted"),
        )
    return out


def _fold_cell_named(args) -> dict[str, tuple[float, float, float]]:
    work, train_idx, test_idx, names, cfg, fit_on_all = args
    return _fold_cell(work, train_idx, test_idx, default_trainers(names, cfg), fit_on_all)


def run_experiment(
    matrix: FeatureMatrix,
    classifiers: Sequence[str] | Mapping[str, TrainerFn] = DEFAULT_CLASSIFIER_NAMES,
    *,
    denoise: bool,
    seed: int,
    k: int = 10,
    threshold: float = DEFAULT_THRESHOLD,
    stratify: bool = True,
    fit_on_all: bool = False,
    per_mode_mask: bool = False,
    jobs: int = 1,
) -> RunResult:
    """One cross-validated pass over an already class-mapped feature matrix.

    With ``denoise`` the median-deviation mask is fitted on the full matrix
    and flagged rows are dropped before folding.  Scaling is fitted per fold
    on the training rows (or once on everything with ``fit_on_all``).
    Plug-in classifiers may be passed as a name-to-trainer mapping; parallel
    fold execution (``jobs`` > 1) is only available for built-in names.
    """
    if len(matrix) == 0:
        raise ValueError("empty feature matrix")
    rows_before = len(matrix)
    if denoise:
        mask = noise_mask_for(matrix, threshold=threshold, per_mode=per_mode_mask)
        work, removed = apply_mask(matrix, mask)
        mask_summary = {
            "threshold": mask.threshold,
            "median": None if math.isnan(mask.median) else mask.median,
            "median_difference": (
                None if math.isnan(mask.median_difference) else mask.median_difference
            ),
            "per_mode": mask.per_mode,
        }
        if len(work) == 0:
            raise ValueError("noise mask removed every row")
    else:
        work, removed, mask_summary = matrix, [], None

    if stratify:
        folds = stratified_kfold(work.labels, k=k, seed=seed)
    else:
        folds = plain_kfold(len(work), k=k, seed=seed)
    all_idx = np.arange(len(work))
    splits = [(np.setdiff1d(all_idx, test_idx), test_idx) for test_idx in folds]

    if isinstance(classifiers, Mapping):
        names = tuple(classifiers)
        trainers: Mapping[str, TrainerFn] = classifiers
        parallel_ok = False
    else:
        names = tuple(classifiers)
        trainers = default_trainers(names, TrainConfig(rng_seed=seed))
        parallel_ok = True

    if jobs > 1 and parallel_ok:
        from concurrent.futures import ProcessPoolExecutor

        cfg = TrainConfig(rng_seed=seed)
        tasks = [(work, tr, te, names, cfg, fit_on_all) for tr, te in splits]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_fold_cell_named, tasks))
    else:
        cells = [_fold_cell(work, tr, te, trainers, fit_on_all) for tr, te in splits]

    fold_metrics: dict[str, dict[str, list[float]]] = {
        name: {"accuracy": [], "f1_macro": [], "f1_weighted": []} for name in names
    }
    for cell in cells:
        for name in names:
            acc, f1m, f1w = cell[name]
            fold_metrics[name]["accuracy"].append(acc)
            fold_metrics[name]["f1_macro"].append(f1m)
            fold_metrics[name]["f1_weighted"].append(f1w)

    return RunResult(
        denoised=denoise,
        rows_before=rows_before,
        rows_after=len(work),
        removed=removed,
        mask=mask_summary,
        folds=fold_metrics,
    )


LEAKAGE_NOTE = (
    "the noise mask is fitted on the full dataset before cross-validation, "
    "so test rows influence which rows are removed"
)
PAIRING_NOTE = (
    "clean and with-noise runs share the fold seed and are paired by fold "
    "index; masking changes the row set, so paired folds are approximations"
)


def _ttest_entry(clean_vals: list[float], noisy_vals: list[float], k: int) -> dict:
    try:
        t, df = paired_t_test(clean_vals, noisy_vals)
        return {"t": t, "df": df, "degenerate": False}
    except DegenerateVarianceError:
        return {"t": None, "df": k - 1, "degenerate": True}


def evaluate_matrix(
    matrix: FeatureMatrix,
    subset: ClassSubsetConfig | str | None = None,
    classifiers: Sequence[str] | Mapping[str, TrainerFn] = DEFAULT_CLASSIFIER_NAMES,
    *,
    mode: str = "both",
    seed: int,
    k: int = 10,
    threshold: float = DEFAULT_THRESHOLD,
    stratify: bool = True,
    fit_on_all: bool = False,
    per_mode_mask: bool = False,
    jobs: int = 1,
) -> EvalReport:
    """Run the requested pass(es) and assemble the report.

    ``mode`` is one of "with_noise", "clean", or "both"; "both" adds a
    paired t statistic per classifier comparing clean to with-noise folds
    for accuracy and macro F1.
    """
    if isinstance(subset, str):
        subset = get_subset(subset)
    if subset is not None:
        matrix = map_matrix(matrix, subset)
        if len(matrix) == 0:
            raise ValueError(f"no rows left after applying subset {subset.name!r}")
    if mode not in (WITH_NOISE, CLEAN, "both"):
        raise ValueError(f"mode must be with_noise, clean or both, got {mode!r}")

    kwargs = dict(
        seed=seed,
        k=k,
        threshold=threshold,
        stratify=stratify,
        fit_on_all=fit_on_all,
        per_mode_mask=per_mode_mask,
        jobs=jobs,
    )
    runs: dict[str, RunResult] = {}
    notes: list[str] = []
    if mode in (WITH_NOISE, "both"):
        runs[WITH_NOISE] = run_experiment(matrix, classifiers, denoise=False, **kwargs)
    if mode in (CLEAN, "both"):
        runs[CLEAN] = run_experiment(matrix, classifiers, denoise=True, **kwargs)
        notes.append(LEAKAGE_NOTE)

    names = tuple(next(iter(runs.values())).folds.keys())
    ttests: dict[str, dict[str, dict]] = {}
    if mode == "both":
        notes.append(PAIRING_NOTE)
        for name in names:
            ttests[name] = {
                metric: _ttest_entry(
                    runs[CLEAN].folds[name][metric],
                    runs[WITH_NOISE].folds[name][metric],
                    k,
                )
                for metric in ("accuracy", "f1_macro")
            }
        if runs[CLEAN].rows_after == runs[CLEAN].rows_before:
            notes.append("the mask removed no rows; clean metrics mirror with-noise metrics")

    return EvalReport(
        subset=subset.name if subset is not None else "none",
        seed=seed,
        k=k,
        threshold=threshold,
        classifiers=names,
        runs=runs,
        ttests=ttests,
        stratified=stratify,
        fit_on_all=fit_on_all,
        per_mode_mask=per_mode_mask,
        notes=notes,
    )


def evaluate_samples(
    samples: Sequence[TrajectorySample],
    subset: ClassSubsetConfig | str | None = None,
    classifiers: Sequence[str] | Mapping[str, TrainerFn] = DEFAULT_CLASSIFIER_NAMES,
    **kwargs,
) -> EvalReport:
    """Featurize samples and evaluate; see evaluate_matrix for options."""
    if isinstance(subset, str):
        subset = get_subset(subset)
    if subset is not None:
        samples = map_classes(samples, subset)
    matrix = featurize_samples(samples)
    # labels are already mapped, so evaluate_matrix only needs the name
    report = evaluate_matrix(matrix, None, classifiers, **kwargs)
    report.subset = subset.name if subset is not None else "none"
    return report


def report_table_rows(report: EvalReport) -> list[dict[str, str]]:
    """Flat per-classifier rows mirroring the printed table."""
    rows = []
    run_keys = [key for key in (WITH_NOISE, CLEAN) if key in report.runs]
    for clf in report.classifiers:
        row: dict[str, str] = {"classifier": clf}
        for key in run_keys:
            means = report.runs[key].means()[clf]
            row[f"accuracy_{key}"] = f"{means['accuracy']:.4f}"
            row[f"f1_macro_{key}"] = f"{means['f1_macro']:.4f}"
            row[f"f1_weighted_{key}"] = f"{means['f1_weighted']:.4f}"
        if report.ttests:
            for metric in ("accuracy", "f1_macro"):
                entry = report.ttests[clf][metric]
                row[f"t_{metric}"] = (
                    "zero-variance" if entry["degenerate"] else f"{entry['t']:.3f}"
                )
        rows.append(row)
    return rows


def format_report(report: EvalReport) -> str:
    """Human-readable summary table."""
    rows = report_table_rows(report)
    if not rows:
        return "(no results)"
    columns = list(rows[0].keys())
    widths = {c: max(len(c), *(len(r[c]) for r in rows)) for c in columns}
    lines = ["  ".join(c.ljust(widths[c]) for c in columns)]
    lines.append("  ".join("-" * widths[c] for c in columns))
    for r in rows:
        lines.append("  ".join(r[c].ljust(widths[c]) for c in columns))
    for key in (WITH_NOISE, CLEAN):
        if key in report.runs:
            run = report.runs[key]
            lines.append(
                f"{key}: {run.rows_after} of {run.rows_before} rows used"
                + (f" ({len(run.removed)} removed by mask)" if run.denoised else "")
            )
    if report.ttests:
        crit = REFERENCE_CRITICAL_VALUE
        lines.append(
            f"two-sided critical value for |t| at df={crit['df']}, "
            f"alpha={crit['alpha']}: {crit['two_sided']}"
        )
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)
