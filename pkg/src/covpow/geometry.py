"""Affine-invariant Riemannian distance on SPD matrices.

Used to ask whether feature matrices from different classes live far apart
on the SPD manifold: the report compares within-class and between-class
pairwise distances. Distance is d(X, Y) = ||log(X^{-1/2} Y X^{-1/2})||_F,
the standard affine-invariant form.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError
from .features import FeatureMatrix
from .spd import SpdMatrix

__all__ = [
    "IdentifiabilityReport",
    "air_distance",
    "pairwise_distance_matrix",
    "class_distance_stats",
    "report_to_dict",
    "report_to_json",
    "write_pairwise_csv",
]


@dataclass(frozen=True)
class IdentifiabilityReport:
    """Pairwise-distance summary; intra stats are None for singleton classes."""

    intra_mean: tuple[float | None, float | None]
    intra_variance: tuple[float | None, float | None]
    inter_mean: float
    inter_variance: float
    n_pairs: dict[str, int]
    separated: bool


def air_distance(x: SpdMatrix, y: SpdMatrix) -> float:
    if not isinstance(x, SpdMatrix) or not isinstance(y, SpdMatrix):
        raise DomainError("air_distance needs SPD matrices")
    if x.dim != y.dim:
        raise DomainError(f"dimension mismatch: {x.dim} vs {y.dim}")
    w, q = x.eigenvalues, x.eigenvectors
    inv_root = (q * w ** -0.5) @ q.T
    inner = inv_root @ y.values @ inv_root
    asym = np.max(np.abs(inner - inner.T))
    if asym > 1e-10 * max(1.0, np.max(np.abs(inner))):
        raise NumericalError(f"congruence result asymmetric by {asym}")
    eig = np.linalg.eigvalsh((inner + inner.T) / 2)
    if eig[0] <= 0:
        raise NumericalError(f"congruence result lost definiteness: {eig[0]}")
    return float(np.sqrt(np.sum(np.log(eig) ** 2)))


def _matrices_labels(features: list[FeatureMatrix]):
    if any(f.label is None for f in features):
        raise DomainError("every feature needs a class label")
    mats = [f.matrix for f in features]
    labels = np.array([int(f.label) for f in features])
    if not np.isin(labels, (0, 1)).all():
        raise DomainError("labels must be 0/1")
    return mats, labels


def pairwise_distance_matrix(features: list[FeatureMatrix]) -> np.ndarray:
    """Full symmetric distance matrix in input order."""
    mats = [f.matrix for f in features]
    n = len(mats)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = air_distance(mats[i], mats[j])
    return out


def _bucket_stats(values: list[float]):
    if not values:
        return None, None
    arr = np.asarray(values)
    return float(arr.mean()), float(arr.var())


def class_distance_stats(features: list[FeatureMatrix]) -> IdentifiabilityReport:
    """Exhaustive pairwise distances bucketed by class membership.

    Pairs are visited in fixed index order so accumulation is deterministic.
    """
    mats, labels = _matrices_labels(features)
    idx0 = [i for i, c in enumerate(labels) if c == 0]
    idx1 = [i for i, c in enumerate(labels) if c == 1]
    if not idx0 or not idx1:
        raise DomainError("both classes must be present")

    intra = ([], [])
    for cls, idx in ((0, idx0), (1, idx1)):
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                intra[cls].append(air_distance(mats[idx[a]], mats[idx[b]]))
    inter = [air_distance(mats[i], mats[j]) for i in idx0 for j in idx1]

    mean0, var0 = _bucket_stats(intra[0])
    mean1, var1 = _bucket_stats(intra[1])
    inter_mean, inter_var = _bucket_stats(inter)
    defined = [m for m in (mean0, mean1) if m is not None]
    return IdentifiabilityReport(
        intra_mean=(mean0, mean1),
        intra_variance=(var0, var1),
        inter_mean=inter_mean,
        inter_variance=inter_var,
        n_pairs={
            "intra_0": len(intra[0]),
            "intra_1": len(intra[1]),
            "inter": len(inter),
        },
        separated=bool(defined) and all(inter_mean > m for m in defined),
    )


def report_to_dict(report: IdentifiabilityReport) -> dict:
    return {
        "intra_mean": list(report.intra_mean),
        "intra_variance": list(report.intra_variance),
        "inter_mean": report.inter_mean,
        "inter_variance": report.inter_variance,
        "n_pairs": dict(report.n_pairs),
        "separated": report.separated,
    }


def report_to_json(report: IdentifiabilityReport) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True)


def write_pairwise_csv(distances: np.ndarray, path) -> None:
    d = np.asarray(distances)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"m{j}" for j in range(d.shape[1])])
        for row in d:
            writer.writerow([repr(float(v)) for v in row])
