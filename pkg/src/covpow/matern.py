"""Gaussian Matern-type fields on weighted graphs.

A model is (graph, kappa, alpha, sigma); its population covariance is
sigma^2 * (kappa^2 D + L)^{-alpha}. Sampling pushes i.i.d. Gaussians through
the symmetric root of that covariance. The eigendecomposition of the
interaction operator is computed once at model construction and reused for
covariances, roots, and sampling.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .graphs import (
    NodePartition,
    WeightedGraph,
    graph_from_json,
    graph_to_json,
    interaction_operator,
)
from .spd import SpdMatrix, SymMatrix, sym_eigen

__all__ = [
    "MaternModel",
    "population_covariance",
    "sample_field",
    "observed_covariance",
    "model_to_dict",
    "model_from_dict",
    "write_samples_csv",
    "read_samples_csv",
    "write_model_json",
    "read_model_json",
]

_PD_TOL = 1e-12


@dataclass(frozen=True)
class MaternModel:
    """Field model on a graph: covariance sigma^2 * (kappa^2 D + L)^(-alpha).

    Negative alpha is the analytic extension (covariance is a positive power
    of the operator); alpha = 0 would make every graph look white and is
    rejected.
    """

    graph: WeightedGraph
    kappa: float
    alpha: float
    sigma: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if not (np.isfinite(self.alpha) and self.alpha != 0):
            raise DomainError(f"alpha must be a nonzero real, got {self.alpha}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        op = interaction_operator(self.graph, self.kappa)
        w, q = sym_eigen(SymMatrix(op))
        if w[0] <= _PD_TOL:
            raise DomainError(
                f"interaction operator is not positive definite: lambda_min = {w[0]:.3e}"
            )
        w.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "_op_eigenvalues", w)
        object.__setattr__(self, "_op_eigenvectors", q)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def op_eigenvalues(self) -> np.ndarray:
        return self._op_eigenvalues

    @property
    def op_eigenvectors(self) -> np.ndarray:
        return self._op_eigenvectors


def population_covariance(m: MaternModel) -> SpdMatrix:
    """Exact covariance sigma^2 * operator^(-alpha) from the cached spectrum."""
    w = m.sigma**2 * m.op_eigenvalues ** (-m.alpha)
    return SpdMatrix._from_eigh(w, m.op_eigenvectors)


def sample_field(m: MaternModel, n_samples: int, seed: int) -> np.ndarray:
    """Draw n_samples field realizations, one per row.

    Each row is root @ x with x ~ N(0, sigma^2 I) and root the symmetric
    operator^(-alpha/2). Draws come from numpy's default_rng (PCG64 with the
    ziggurat gaussian), so a seed pins the output across platforms.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    root = (m.op_eigenvectors * m.op_eigenvalues ** (-m.alpha / 2)) @ m.op_eigenvectors.T
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_samples, m.n))
    return m.sigma * x @ root  # root is symmetric, so right-multiplying is fine


def observed_covariance(c: SpdMatrix, p: NodePartition) -> SpdMatrix:
    """Principal submatrix of the covariance on the observed node set."""
    if c.dim != p.n:
        raise DomainError(f"covariance dim {c.dim} does not match partition n={p.n}")
    s = list(p.observed)
    return SpdMatrix(c.values[np.ix_(s, s)])


# ---------------------------------------------------------------------------
# serialization


def model_to_dict(m: MaternModel) -> dict:
    return {
        "graph": json.loads(graph_to_json(m.graph)),
        "kappa": float(m.kappa),
        "alpha": float(m.alpha),
        "sigma": float(m.sigma),
    }


def model_from_dict(rec: dict) -> MaternModel:
    graph = graph_from_json(json.dumps(rec["graph"]))
    return MaternModel(
        graph=graph,
        kappa=float(rec["kappa"]),
        alpha=float(rec["alpha"]),
        sigma=float(rec["sigma"]),
    )


def write_model_json(m: MaternModel, path, seed: int | None = None) -> None:
    rec = model_to_dict(m)
    if seed is not None:
        rec["seed"] = int(seed)
    with open(path, "w") as fh:
        fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_model_json(path) -> tuple[MaternModel, int | None]:
    with open(path) as fh:
        rec = json.load(fh)
    seed = int(rec["seed"]) if "seed" in rec else None
    return model_from_dict(rec), seed


def write_samples_csv(samples: np.ndarray, path) -> None:
    """One realization per row; repr floats so reads are bitwise."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise DomainError("samples must be a 2-d array")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"node{i}" for i in range(samples.shape[1])])
        for row in samples:
            writer.writerow([repr(float(v)) for v in row])


def read_samples_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    out = np.asarray(rows, dtype=float)
    if out.size and out.shape[1] != len(header):
        raise DomainError("sample CSV rows do not match header width")
    return out
