"""Windowed covariance-power features from labeled multichannel series.

The path from raw data to classifier input: slide fixed-length windows over
the series, label each window by majority vote, estimate a (ridge-regularized)
covariance per window, and raise it to a chosen power. Channel selection by
histogram mutual information against the labels trims wide recordings first.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .spd import SpdMatrix, read_matrix_csv, spd_power_eig, write_matrix_csv

__all__ = [
    "LabeledSeries",
    "WindowSpec",
    "Window",
    "FeatureMatrix",
    "sliding_windows",
    "majority_vote_label",
    "empirical_covariance",
    "rank_one_covariance",
    "power_features",
    "mutual_info_select",
    "extract_features",
    "write_series_csv",
    "read_series_csv",
    "write_feature_archive",
    "read_feature_archive",
]


@dataclass(frozen=True)
class LabeledSeries:
    """T x channels sample matrix with one binary label per time step."""

    samples: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if samples.ndim != 2 or samples.shape[0] < 1:
            raise DomainError(f"samples must be a nonempty 2-d array, got {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise DomainError("samples contain non-finite values")
        if labels.shape != (samples.shape[0],):
            raise DomainError(
                f"labels length {labels.shape} does not match T={samples.shape[0]}"
            )
        if not np.isin(labels, (0, 1)).all():
            raise DomainError("labels must be 0 or 1")
        samples = np.ascontiguousarray(samples)
        samples.flags.writeable = False
        labels = np.ascontiguousarray(labels)
        labels.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "labels", labels)

    @property
    def length(self) -> int:
        return self.samples.shape[0]

    @property
    def channels(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class WindowSpec:
    """Window length in samples plus fractional overlap between neighbors."""

    length: int
    overlap: float = 0.0

    def __post_init__(self) -> None:
        if int(self.length) != self.length or self.length < 1:
            raise DomainError(f"window length must be a positive integer, got {self.length}")
        if not 0 <= self.overlap < 1:
            raise DomainError(f"overlap must lie in [0,1), got {self.overlap}")
        if self.stride < 1:
            raise DomainError(
                f"length {self.length} with overlap {self.overlap} rounds to stride 0"
            )

    @property
    def stride(self) -> int:
        return int(round(self.length * (1 - self.overlap)))


@dataclass(frozen=True)
class Window:
    """One window: the index range, its samples, and the voted label."""

    start: int
    stop: int
    samples: np.ndarray
    label: int


@dataclass(frozen=True)
class FeatureMatrix:
    """Power-transformed window covariance plus provenance."""

    matrix: SpdMatrix
    label: int | None
    beta: float
    source_window: tuple[int, int] | None


def sliding_windows(series: LabeledSeries, spec: WindowSpec) -> list[Window]:
    """Windows starting at 0, spec.stride apart, fully inside the series."""
    t = series.length
    if spec.length > t:
        raise DomainError(f"window length {spec.length} exceeds series length {t}")
    count = (t - spec.length) // spec.stride + 1
    out = []
    for i in range(count):
        start = i * spec.stride
        stop = start + spec.length
        out.append(
            Window(
                start=start,
                stop=stop,
                samples=series.samples[start:stop],
                label=majority_vote_label(series.labels[start:stop]),
            )
        )
    return out


def majority_vote_label(window_labels) -> int:
    """Majority class of a window; exact ties go to the event class 1."""
    labels = np.asarray(window_labels, dtype=int)
    if labels.size == 0:
        raise DomainError("cannot vote on an empty label window")
    return int(2 * labels.sum() >= labels.size)


def default_ridge(window: np.ndarray) -> float:
    """1e-6 times the mean channel variance of the window."""
    w = np.asarray(window, dtype=float)
    centered = w - w.mean(axis=0, keepdims=True)
    trace = float(np.sum(centered * centered) / w.shape[0])
    return 1e-6 * trace / w.shape[1]


def empirical_covariance(window, ridge: float | None = None) -> SpdMatrix:
    """Mean-centered sample covariance (1/n normalization) plus ridge*I.

    ridge=None picks 1e-6 * trace/k; an explicit 0 is allowed and fails SPD
    validation whenever the window is rank deficient.
    """
    w = np.asarray(window, dtype=float)
    if w.ndim != 2 or w.shape[0] < 1:
        raise DomainError(f"window must be a nonempty 2-d block, got shape {w.shape}")
    if ridge is None:
        ridge = default_ridge(w)
    if ridge < 0:
        raise DomainError("ridge must be nonnegative")
    centered = w - w.mean(axis=0, keepdims=True)
    cov = centered.T @ centered / w.shape[0]
    return SpdMatrix(cov + ridge * np.eye(w.shape[1]))


def rank_one_covariance(x, ridge: float) -> SpdMatrix:
    """Outer product of a single observation plus ridge*I."""
    v = np.asarray(x, dtype=float).ravel()
    if v.size < 1:
        raise DomainError("need at least one channel")
    if not ridge > 0:
        raise DomainError("rank-one covariance needs ridge > 0")
    return SpdMatrix(np.outer(v, v) + ridge * np.eye(v.size))


def power_features(
    cov: SpdMatrix,
    beta: float,
    label: int | None = None,
    source_window: tuple[int, int] | None = None,
) -> FeatureMatrix:
    """Raise a window covariance to the beta power and tag it."""
    powered = spd_power_eig(cov, beta)
    return FeatureMatrix(
        matrix=powered, label=label, beta=float(beta), source_window=source_window
    )


def _histogram_mi(channel: np.ndarray, labels: np.ndarray, bins: int) -> float:
    lo, hi = float(channel.min()), float(channel.max())
    if hi <= lo:
        return 0.0  # constant channel carries no information
    idx = np.minimum(((channel - lo) / (hi - lo) * bins).astype(int), bins - 1)
    mi = 0.0
    n = channel.size
    for y in (0, 1):
        mask = labels == y
        p_y = mask.sum() / n
        if p_y == 0:
            continue
        counts = np.bincount(idx[mask], minlength=bins)
        p_xy = counts / n
        p_x = np.bincount(idx, minlength=bins) / n
        pos = p_xy > 0
        mi += float(np.sum(p_xy[pos] * np.log(p_xy[pos] / (p_x[pos] * p_y))))
    return mi


def mutual_info_select(series: LabeledSeries, k_keep: int, bins: int = 16) -> list[int]:
    """Top channels by histogram mutual information with the labels.

    Equal-width bins per channel; ties rank the lower channel index first.
    """
    if not 1 <= k_keep <= series.channels:
        raise DomainError(f"k_keep must lie in [1, {series.channels}], got {k_keep}")
    if bins < 2:
        raise DomainError("need at least 2 bins")
    scores = np.array(
        [_histogram_mi(series.samples[:, j], series.labels, bins) for j in range(series.channels)]
    )
    order = np.argsort(-scores, kind="stable")
    return [int(j) for j in order[:k_keep]]


def extract_features(
    series: LabeledSeries,
    spec: WindowSpec,
    beta: float,
    ridge: float | None = None,
    channels: list[int] | None = None,
) -> list[FeatureMatrix]:
    """Window the series and emit one powered covariance per window."""
    if channels is not None:
        samples = series.samples[:, channels]
        series = LabeledSeries(samples=samples, labels=series.labels)
    out = []
    for win in sliding_windows(series, spec):
        cov = empirical_covariance(win.samples, ridge=ridge)
        out.append(
            power_features(cov, beta, label=win.label, source_window=(win.start, win.stop))
        )
    return out


# ---------------------------------------------------------------------------
# serialization


def write_series_csv(series: LabeledSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"ch{j}" for j in range(series.channels)] + ["label"])
        for t in range(series.length):
            row = [t] + [repr(float(v)) for v in series.samples[t]] + [int(series.labels[t])]
            writer.writerow(row)


def read_series_csv(path) -> LabeledSeries:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) < 3 or header[0] != "t" or header[-1] != "label":
            raise DomainError("series CSV must have columns t, ch0.., label")
        samples, labels = [], []
        for row in reader:
            samples.append([float(v) for v in row[1:-1]])
            labels.append(int(row[-1]))
    return LabeledSeries(samples=np.asarray(samples), labels=np.asarray(labels))


def write_feature_archive(features: list[FeatureMatrix], dirpath, meta: dict | None = None) -> None:
    """Directory of matrix CSVs plus a JSON manifest with provenance."""
    os.makedirs(dirpath, exist_ok=True)
    manifest = {
        "count": len(features),
        "entries": [],
        "meta": meta or {},
    }
    for i, feat in enumerate(features):
        name = f"feature_{i:05d}.csv"
        write_matrix_csv(feat.matrix.values, os.path.join(dirpath, name))
        manifest["entries"].append(
            {
                "file": name,
                "label": feat.label,
                "beta": feat.beta,
                "source_window": list(feat.source_window) if feat.source_window else None,
            }
        )
    with open(os.path.join(dirpath, "manifest.json"), "w") as fh:
        fh.write(json.dumps(manifest, sort_keys=True, indent=1) + "\n")


def read_feature_archive(dirpath) -> list[FeatureMatrix]:
    with open(os.path.join(dirpath, "manifest.json")) as fh:
        manifest = json.load(fh)
    out = []
    for entry in manifest["entries"]:
        matrix = SpdMatrix(read_matrix_csv(os.path.join(dirpath, entry["file"])))
        source = tuple(entry["source_window"]) if entry["source_window"] else None
        out.append(
            FeatureMatrix(
                matrix=matrix,
                label=entry["label"],
                beta=entry["beta"],
                source_window=source,
            )
        )
    return out
