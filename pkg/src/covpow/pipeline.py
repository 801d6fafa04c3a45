"""Supervised selection of the covariance power.

A deterministic full-batch logistic model is trained on vectorized window
covariance powers; the power (and optionally the window) is chosen to
maximize a product-over-sum score of train and validation specificity and
sensitivity, which zeroes out any candidate that cannot demonstrate both
classes. Split bookkeeping tokens make test-set leakage detectable.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, NumericalError
from .features import (
    FeatureMatrix,
    LabeledSeries,
    WindowSpec,
    empirical_covariance,
    power_features,
    sliding_windows,
)
from .spd import SpdMatrix

__all__ = [
    "SplitSpec",
    "Metrics",
    "LinearClassifier",
    "FeatureSplit",
    "SelectionResult",
    "s3_score",
    "s3_from_metrics",
    "classification_metrics",
    "vectorize_feature",
    "train_linear_classifier",
    "split_dataset",
    "default_beta_grid",
    "select_beta",
    "evaluate",
    "metrics_to_dict",
    "selection_to_dict",
    "selection_to_json",
    "classifier_to_dict",
    "classifier_from_dict",
    "write_selection_csv",
]


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float
    val_frac: float
    test_frac: float
    seed: int = 0
    stratified: bool = True

    def __post_init__(self) -> None:
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(not f > 0 for f in fracs):
            raise DomainError(f"every split fraction must be positive, got {fracs}")
        if abs(sum(fracs) - 1) > 1e-9:
            raise DomainError(f"split fractions must sum to 1, got {sum(fracs)}")


@dataclass(frozen=True)
class Metrics:
    """Confusion counts plus derived rates; undefined rates stay None."""

    tp: int
    fp: int
    tn: int
    fn: int
    sensitivity: float | None
    specificity: float | None
    accuracy: float
    recall: float | None
    precision: float | None

    @classmethod
    def from_counts(cls, tp: int, fp: int, tn: int, fn: int) -> "Metrics":
        total = tp + fp + tn + fn
        if total < 1:
            raise DomainError("metrics need at least one example")
        sen = tp / (tp + fn) if tp + fn > 0 else None
        spec = tn / (tn + fp) if tn + fp > 0 else None
        prec = tp / (tp + fp) if tp + fp > 0 else None
        return cls(
            tp=tp,
            fp=fp,
            tn=tn,
            fn=fn,
            sensitivity=sen,
            specificity=spec,
            accuracy=(tp + tn) / total,
            recall=sen,
            precision=prec,
        )


def classification_metrics(predictions, labels) -> Metrics:
    pred = np.asarray(predictions, dtype=int)
    lab = np.asarray(labels, dtype=int)
    if pred.shape != lab.shape or pred.ndim != 1 or pred.size < 1:
        raise DomainError(
            f"predictions and labels must be equal-length nonempty, got {pred.shape} vs {lab.shape}"
        )
    if not (np.isin(pred, (0, 1)).all() and np.isin(lab, (0, 1)).all()):
        raise DomainError("predictions and labels must be 0/1")
    tp = int(np.sum((pred == 1) & (lab == 1)))
    fp = int(np.sum((pred == 1) & (lab == 0)))
    tn = int(np.sum((pred == 0) & (lab == 0)))
    fn = int(np.sum((pred == 0) & (lab == 1)))
    return Metrics.from_counts(tp, fp, tn, fn)


def s3_score(spec_t: float, spec_v: float, sen_t: float, sen_v: float) -> float:
    """4 * product / sum of the four rates; zero-sum input scores 0.

    The arguments are sorted before folding so the result is exactly
    invariant under permutation, not just up to rounding.
    """
    vals = sorted((spec_t, spec_v, sen_t, sen_v))
    for v in vals:
        if not 0 <= v <= 1:
            raise DomainError(f"scores must lie in [0,1], got {v}")
    total = ((vals[0] + vals[1]) + vals[2]) + vals[3]
    if total == 0:
        return 0.0
    prod = ((vals[0] * vals[1]) * vals[2]) * vals[3]
    return 4 * prod / total


def s3_from_metrics(train: Metrics, val: Metrics) -> float:
    """Selection score from two metric sets; undefined rates zero it out."""
    parts = (train.specificity, val.specificity, train.sensitivity, val.sensitivity)
    if any(p is None for p in parts):
        return 0.0
    return s3_score(*parts)


def vectorize_feature(matrix) -> np.ndarray:
    """Upper-triangle vectorization with sqrt(2) off-diagonal scaling.

    Makes the Euclidean inner product of vectors equal the Frobenius inner
    product of the matrices.
    """
    a = np.asarray(getattr(matrix, "values", matrix), dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    iu = np.triu_indices(a.shape[0], k=1)
    return np.concatenate([np.diag(a), np.sqrt(2.0) * a[iu]])


@dataclass(frozen=True)
class LinearClassifier:
    """Logistic model over standardized feature vectors; bias is last."""

    weights: np.ndarray
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    dim: int
    seen_tokens: tuple[str, ...] = field(default=())

    def _design(self, features: list[FeatureMatrix]) -> np.ndarray:
        if not features:
            raise DomainError("no features to score")
        x = np.array([vectorize_feature(f.matrix) for f in features])
        if x.shape[1] != self.dim:
            raise DomainError(
                f"feature dim {x.shape[1]} does not match trained dim {self.dim}"
            )
        z = (x - self.feature_mean) / self.feature_scale
        return np.column_stack([z, np.ones(len(features))])

    def decision_function(self, features: list[FeatureMatrix]) -> np.ndarray:
        return self._design(features) @ self.weights

    def predict(self, features: list[FeatureMatrix]) -> np.ndarray:
        return (self.decision_function(features) >= 0).astype(int)


def _labels_from(features: list[FeatureMatrix], labels) -> np.ndarray:
    if labels is not None:
        lab = np.asarray(labels, dtype=int)
    else:
        if any(f.label is None for f in features):
            raise DomainError("features carry no labels; pass labels explicitly")
        lab = np.array([int(f.label) for f in features])
    if lab.shape != (len(features),):
        raise DomainError("labels must match the number of features")
    if not np.isin(lab, (0, 1)).all():
        raise DomainError("labels must be 0/1")
    return lab


def train_linear_classifier(
    features: list[FeatureMatrix],
    labels=None,
    l2: float = 1e-3,
    max_iter: int = 100,
    tol: float = 1e-8,
    seen_tokens: tuple[str, ...] = (),
) -> LinearClassifier:
    """Damped-Newton logistic regression with inverse-frequency class weights.

    The loss is a weighted mean, so duplicating every example leaves the fit
    unchanged; weights n/(2 n_c) rebalance classes without resampling.
    Deterministic: zero init, full batch, fixed backtracking schedule.
    """
    if len(features) < 2:
        raise DomainError("need at least 2 training examples")
    if l2 < 0:
        raise DomainError("l2 must be nonnegative")
    lab = _labels_from(features, labels)
    n1 = int(lab.sum())
    n0 = len(lab) - n1
    if n0 == 0 or n1 == 0:
        raise DomainError("training data must contain both classes")

    x = np.array([vectorize_feature(f.matrix) for f in features])
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale = np.where(scale < 1e-12, 1.0, scale)
    z = np.column_stack([(x - mean) / scale, np.ones(len(features))])
    y = 2.0 * lab - 1.0
    n = len(lab)
    sample_w = np.where(lab == 1, n / (2 * n1), n / (2 * n0))

    d = z.shape[1]
    reg = np.full(d, l2)
    reg[-1] = 0.0  # bias is not penalized
    w = np.zeros(d)

    def loss_grad_hess(w):
        margins = y * (z @ w)
        # log(1+exp(-m)) via logaddexp for overflow safety
        loss = float(np.mean(sample_w * np.logaddexp(0.0, -margins)))
        loss += 0.5 * float(reg @ (w * w))
        p = 1.0 / (1.0 + np.exp(np.clip(margins, -500, 500)))
        grad = -(z.T @ (sample_w * p * y)) / n + reg * w
        curv = sample_w * p * (1.0 - p)
        hess = (z.T * curv) @ z / n + np.diag(reg)
        return loss, grad, hess

    loss, grad, hess = loss_grad_hess(w)
    for _ in range(max_iter):
        if np.linalg.norm(grad) <= tol:
            break
        try:
            step = np.linalg.solve(hess + 1e-12 * np.eye(d), grad)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"newton step failed: {exc}") from exc
        t = 1.0
        for _ in range(40):
            cand = w - t * step
            new_loss, new_grad, new_hess = loss_grad_hess(cand)
            if new_loss <= loss - 1e-4 * t * float(grad @ step):
                w, loss, grad, hess = cand, new_loss, new_grad, new_hess
                break
            t /= 2
        else:
            break  # no descent direction left; accept current point

    return LinearClassifier(
        weights=w,
        feature_mean=mean,
        feature_scale=scale,
        dim=x.shape[1],
        seen_tokens=tuple(seen_tokens),
    )


@dataclass(frozen=True)
class FeatureSplit:
    train: list
    val: list
    test: list
    train_token: str
    val_token: str
    test_token: str
    train_idx: tuple[int, ...]
    val_idx: tuple[int, ...]
    test_idx: tuple[int, ...]


def _token(seed: int, role: str, indices) -> str:
    core = f"{seed}|{role}|{','.join(str(i) for i in indices)}"
    return hashlib.sha1(core.encode()).hexdigest()


def split_dataset(items: list, labels, split: SplitSpec) -> FeatureSplit:
    """Deterministic (optionally stratified) three-way split with tokens."""
    lab = np.asarray(labels, dtype=int)
    if lab.shape != (len(items),):
        raise DomainError("labels must match items")
    rng = np.random.default_rng(split.seed)
    groups = [np.flatnonzero(lab == c) for c in (0, 1)] if split.stratified else [np.arange(len(items))]
    train_idx, val_idx, test_idx = [], [], []
    for idx in groups:
        if idx.size == 0:
            continue
        perm = rng.permutation(idx)
        n = perm.size
        n_train = int(round(split.train_frac * n))
        n_val = int(round(split.val_frac * n))
        n_train = min(n_train, n)
        n_val = min(n_val, n - n_train)
        train_idx.extend(perm[:n_train])
        val_idx.extend(perm[n_train : n_train + n_val])
        test_idx.extend(perm[n_train + n_val :])
    train_idx = tuple(sorted(int(i) for i in train_idx))
    val_idx = tuple(sorted(int(i) for i in val_idx))
    test_idx = tuple(sorted(int(i) for i in test_idx))
    return FeatureSplit(
        train=[items[i] for i in train_idx],
        val=[items[i] for i in val_idx],
        test=[items[i] for i in test_idx],
        train_token=_token(split.seed, "train", train_idx),
        val_token=_token(split.seed, "val", val_idx),
        test_token=_token(split.seed, "test", test_idx),
        train_idx=train_idx,
        val_idx=val_idx,
        test_idx=test_idx,
    )


def default_beta_grid() -> list[float]:
    """33 uniform points on [-4, 4] with the zero power dropped."""
    grid = np.linspace(-4.0, 4.0, 33)
    return [float(b) for b in grid if b != 0.0]


@dataclass(frozen=True)
class SelectionResult:
    beta_star: float
    s3: float
    per_beta_table: list[dict]
    window_spec_star: WindowSpec | None
    classifier: LinearClassifier
    seen_tokens: tuple[str, ...]


def select_beta(
    dataset: LabeledSeries,
    beta_grid=None,
    window_grid=None,
    split: SplitSpec | None = None,
    l2: float = 1e-3,
    max_iter: int = 100,
    tol: float = 1e-8,
    ridge: float | None = None,
) -> SelectionResult:
    """Grid-search the covariance power (and window) on a train/val split.

    Window covariances are estimated once per window spec; each power reuses
    their cached factorizations. The test portion of the split is never
    touched here; its token is withheld from the result on purpose.
    """
    if beta_grid is None:
        beta_grid = default_beta_grid()
    beta_grid = [float(b) for b in beta_grid]
    if not beta_grid:
        raise DomainError("beta grid is empty")
    if any(b == 0 or not np.isfinite(b) for b in beta_grid):
        raise DomainError("beta grid must contain finite nonzero values")
    if window_grid is None:
        window_grid = [WindowSpec(length=64, overlap=0.75)]
    if not window_grid:
        raise DomainError("window grid is empty")
    if split is None:
        split = SplitSpec(train_frac=0.6, val_frac=0.2, test_frac=0.2, seed=0)

    table: list[dict] = []
    best = None  # (s3, |beta|, order index, row, classifier, window, tokens)
    order = 0
    for wspec in window_grid:
        windows = sliding_windows(dataset, wspec)
        covs = [empirical_covariance(w.samples, ridge=ridge) for w in windows]
        labels = np.array([w.label for w in windows])
        if labels.min() == labels.max():
            raise DomainError("windowed dataset contains a single class")
        parts = split_dataset(list(range(len(windows))), labels, split)
        if not parts.train or not parts.val:
            raise DomainError("degenerate split: empty train or validation part")
        for beta in beta_grid:
            feats = [
                power_features(covs[i], beta, label=int(labels[i]))
                for i in range(len(windows))
            ]
            train_feats = [feats[i] for i in parts.train_idx]
            val_feats = [feats[i] for i in parts.val_idx]
            clf = train_linear_classifier(
                train_feats,
                l2=l2,
                max_iter=max_iter,
                tol=tol,
                seen_tokens=(parts.train_token, parts.val_token),
            )
            m_train = classification_metrics(
                clf.predict(train_feats), [f.label for f in train_feats]
            )
            m_val = classification_metrics(
                clf.predict(val_feats), [f.label for f in val_feats]
            )
            s3 = s3_from_metrics(m_train, m_val)
            row = {
                "beta": beta,
                "window_length": wspec.length,
                "window_overlap": wspec.overlap,
                "s3": s3,
                "train": metrics_to_dict(m_train),
                "val": metrics_to_dict(m_val),
            }
            table.append(row)
            key = (-s3, abs(beta), order)
            if best is None or key < best[0]:
                best = (key, row, clf, wspec)
            order += 1

    _, row, clf, wspec = best
    return SelectionResult(
        beta_star=row["beta"],
        s3=row["s3"],
        per_beta_table=table,
        window_spec_star=wspec,
        classifier=clf,
        seen_tokens=clf.seen_tokens,
    )


def evaluate(classifier: LinearClassifier, features: list[FeatureMatrix], token: str | None = None) -> Metrics:
    """Held-out metrics; refuses data whose token was visible in training."""
    if token is not None and token in classifier.seen_tokens:
        raise ConfigError(
            "split leak: this data split was visible during training/selection"
        )
    if not features:
        raise DomainError("test set is empty")
    labels = _labels_from(features, None)
    return classification_metrics(classifier.predict(features), labels)


# ---------------------------------------------------------------------------
# serialization


def metrics_to_dict(m: Metrics) -> dict:
    return {
        "tp": m.tp,
        "fp": m.fp,
        "tn": m.tn,
        "fn": m.fn,
        "sensitivity": m.sensitivity,
        "specificity": m.specificity,
        "accuracy": m.accuracy,
        "recall": m.recall,
        "precision": m.precision,
    }


def selection_to_dict(result: SelectionResult) -> dict:
    wspec = result.window_spec_star
    return {
        "beta_star": result.beta_star,
        "s3": result.s3,
        "window_length": wspec.length if wspec else None,
        "window_overlap": wspec.overlap if wspec else None,
        "per_beta_table": result.per_beta_table,
        "classifier": classifier_to_dict(result.classifier),
    }


def selection_to_json(result: SelectionResult) -> str:
    return json.dumps(selection_to_dict(result), sort_keys=True)


def classifier_to_dict(clf: LinearClassifier) -> dict:
    return {
        "weights": [float(v) for v in clf.weights],
        "feature_mean": [float(v) for v in clf.feature_mean],
        "feature_scale": [float(v) for v in clf.feature_scale],
        "dim": clf.dim,
        "seen_tokens": list(clf.seen_tokens),
    }


def classifier_from_dict(rec: dict) -> LinearClassifier:
    return LinearClassifier(
        weights=np.asarray(rec["weights"], dtype=float),
        feature_mean=np.asarray(rec["feature_mean"], dtype=float),
        feature_scale=np.asarray(rec["feature_scale"], dtype=float),
        dim=int(rec["dim"]),
        seen_tokens=tuple(rec["seen_tokens"]),
    )


def write_selection_csv(result: SelectionResult, path) -> None:
    cols = [
        "beta",
        "window_length",
        "window_overlap",
        "s3",
        "train_sensitivity",
        "train_specificity",
        "train_accuracy",
        "val_sensitivity",
        "val_specificity",
        "val_accuracy",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in result.per_beta_table:
            flat = [
                repr(row["beta"]),
                row["window_length"],
                repr(row["window_overlap"]),
                repr(row["s3"]),
            ]
            for part in ("train", "val"):
                for key in ("sensitivity", "specificity", "accuracy"):
                    v = row[part][key]
                    flat.append("" if v is None else repr(v))
            writer.writerow(flat)
