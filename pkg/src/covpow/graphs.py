"""Weighted interaction graphs, node partitions, and derived operators.

The adjacency A is dense, exactly symmetric, nonnegative, with a zero
diagonal. From it we build the Laplacian L = D - A, the interaction operator
kappa^2*D + L, and the shifted operator I - kappa^2*D - L whose spectral
radius decides model validity.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "WeightedGraph",
    "NodePartition",
    "laplacian",
    "interaction_operator",
    "abar",
    "sample_inhomogeneous_er",
    "partition_blocks",
    "observed_a_min",
    "scale_cross_block",
    "graph_to_json",
    "graph_from_json",
    "write_graph_json",
    "read_graph_json",
    "write_edge_csv",
    "read_edge_csv",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted graph held as a dense adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"adjacency must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("adjacency has non-finite entries")
        if not np.array_equal(a, a.T):
            raise DomainError("adjacency must be exactly symmetric")
        if np.any(a < 0):
            raise DomainError("adjacency entries must be nonnegative")
        if np.any(np.diagonal(a) != 0):
            raise DomainError("adjacency diagonal must be zero")
        object.__setattr__(self, "adjacency", _frozen(a))

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def edges(self) -> list[tuple[int, int, float]]:
        """Upper-triangle edge list, (i, j, weight) with i < j."""
        i, j = np.nonzero(np.triu(self.adjacency, k=1))
        return [(int(a), int(b), float(self.adjacency[a, b])) for a, b in zip(i, j)]

    @classmethod
    def from_edges(cls, n: int, edges) -> "WeightedGraph":
        a = np.zeros((n, n))
        for i, j, w in edges:
            i, j = int(i), int(j)
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise DomainError(f"edge ({i},{j}) out of range for n={n}")
            a[i, j] = a[j, i] = float(w)
        return cls(a)


@dataclass(frozen=True)
class NodePartition:
    """Observed node set S and its latent complement, both kept sorted."""

    observed: tuple[int, ...]
    latent: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        obs = tuple(int(i) for i in self.observed)
        lat = tuple(int(i) for i in self.latent)
        if not obs:
            raise DomainError("observed set must be non-empty")
        if obs != tuple(sorted(set(obs))) or lat != tuple(sorted(set(lat))):
            raise DomainError("partition index lists must be sorted and duplicate-free")
        if set(obs) & set(lat):
            raise DomainError("observed and latent sets must be disjoint")
        union = sorted(set(obs) | set(lat))
        if union != list(range(len(union))):
            raise DomainError("partition must cover 0..n-1 without gaps")
        object.__setattr__(self, "observed", obs)
        object.__setattr__(self, "latent", lat)

    @classmethod
    def from_observed(cls, n: int, observed) -> "NodePartition":
        obs = sorted(set(int(i) for i in observed))
        if obs and (obs[0] < 0 or obs[-1] >= n):
            raise DomainError(f"observed indices out of range for n={n}")
        lat = tuple(i for i in range(n) if i not in set(obs))
        return cls(tuple(obs), lat)

    @property
    def n(self) -> int:
        return len(self.observed) + len(self.latent)


def laplacian(g: WeightedGraph) -> np.ndarray:
    """Graph Laplacian L = D - A with D = diag(A 1)."""
    return np.diag(g.degrees()) - g.adjacency


def interaction_operator(g: WeightedGraph, kappa: float) -> np.ndarray:
    """kappa^2*D + L; positive definite when every degree is positive."""
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    return kappa**2 * np.diag(g.degrees()) + laplacian(g)


def abar(g: WeightedGraph, kappa: float) -> tuple[np.ndarray, bool]:
    """Shifted operator I - kappa^2*D - L plus a validity flag.

    The flag is True when the spectral radius is strictly below 1; an invalid
    graph is reported, never rejected.
    """
    op = interaction_operator(g, kappa)
    a = np.eye(g.n) - op
    a = (a + a.T) / 2  # the subtraction is already symmetric; keep it bitwise so
    rho = float(np.max(np.abs(np.linalg.eigvalsh(a))))
    return a, rho < 1.0


def sample_inhomogeneous_er(
    n_obs: int,
    n_lat: int,
    p_obs: float,
    p_lat: float,
    p_cross: float,
    weight_low: float = 0.5,
    weight_high: float = 1.5,
    target_rho: float = 0.95,
    seed: int = 0,
) -> tuple[WeightedGraph, NodePartition]:
    """Inhomogeneous Erdos-Renyi graph with an observed/latent block structure.

    Edges inside the observed block, inside the latent block, and across the
    two are drawn independently with their own probabilities; weights are
    uniform on [weight_low, weight_high]. The adjacency is then rescaled by a
    single global factor, when one exists, so that the shifted operator at
    kappa=1 has spectral radius <= target_rho. Degenerate draws for which no
    global factor can achieve that (empty graph, isolated node, spectral
    spread too wide) are returned unscaled; downstream validity flags catch
    them.
    """
    if n_obs < 1:
        raise DomainError("n_obs must be >= 1")
    if n_lat < 0 or n_obs + n_lat < 2:
        raise DomainError("need at least 2 nodes in total")
    for name, p in (("p_obs", p_obs), ("p_lat", p_lat), ("p_cross", p_cross)):
        if not 0 <= p <= 1:
            raise DomainError(f"{name} must lie in [0,1], got {p}")
    if not 0 < weight_low <= weight_high:
        raise DomainError("need 0 < weight_low <= weight_high")
    if not 0 < target_rho < 1:
        raise DomainError("target_rho must lie in (0,1)")

    n = n_obs + n_lat
    rng = np.random.default_rng(seed)
    prob = np.empty((n, n))
    prob[:n_obs, :n_obs] = p_obs
    prob[n_obs:, n_obs:] = p_lat
    prob[:n_obs, n_obs:] = p_cross
    prob[n_obs:, :n_obs] = p_cross

    u = rng.random((n, n))
    w = rng.uniform(weight_low, weight_high, (n, n))
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    a = np.where(upper & (u < prob), w, 0.0)
    a = a + a.T

    a = _rescale_for_target_rho(a, target_rho)
    part = NodePartition.from_observed(n, range(n_obs))
    return WeightedGraph(a), part


def _rescale_for_target_rho(a: np.ndarray, target_rho: float) -> np.ndarray:
    """Globally scale A so rho(I - D - L) <= target_rho when feasible.

    Scaling A by gamma scales the kappa=1 interaction operator linearly, so
    its eigenvalues mu become gamma*mu and the constraint is a gamma interval
    [(1-t)/mu_min, (1+t)/mu_max]. We take the feasible gamma closest to 1.
    """
    deg = a.sum(axis=1)
    op = np.diag(2 * deg) - a  # kappa=1: D + (D - A)
    mu = np.linalg.eigvalsh((op + op.T) / 2)
    mu_min, mu_max = float(mu[0]), float(mu[-1])
    rho_now = max(abs(1 - mu_min), abs(1 - mu_max))
    if rho_now <= target_rho:
        return a
    if mu_min <= 0:
        return a  # isolated node or empty graph: no global factor can help
    lo = (1 - target_rho) / mu_min * (1 + 1e-9)
    hi = (1 + target_rho) / mu_max * (1 - 1e-9)
    if lo > hi:
        return a
    gamma = min(max(1.0, lo), hi)
    return a * gamma


def partition_blocks(
    m: np.ndarray, p: NodePartition
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The four blocks of a square matrix under the (S, S') ordering."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] != p.n:
        raise DomainError(f"matrix dim {m.shape[0]} does not match partition n={p.n}")
    s = list(p.observed)
    sp = list(p.latent)
    return (
        m[np.ix_(s, s)],
        m[np.ix_(s, sp)],
        m[np.ix_(sp, s)],
        m[np.ix_(sp, sp)],
    )


def observed_a_min(g: WeightedGraph, p: NodePartition) -> float | None:
    """Smallest positive off-diagonal weight inside the observed block.

    None when the observed block has no edges; gates that need this value
    report a not-applicable status in that case.
    """
    a_s = partition_blocks(g.adjacency, p)[0]
    vals = a_s[np.triu_indices_from(a_s, k=1)]
    pos = vals[vals > 0]
    return float(pos.min()) if pos.size else None


def scale_cross_block(g: WeightedGraph, p: NodePartition, factor: float) -> WeightedGraph:
    """Rescale only the observed/latent cross block of the adjacency.

    Verification plumbing: gated batches need cross weights far below the
    within-block scale, which a single weight range cannot express.
    """
    if factor < 0:
        raise DomainError("cross-block scale factor must be nonnegative")
    s = list(p.observed)
    sp = list(p.latent)
    a = np.array(g.adjacency)
    a[np.ix_(s, sp)] *= factor
    a[np.ix_(sp, s)] *= factor
    return WeightedGraph(a)


# ---------------------------------------------------------------------------
# serialization


def graph_to_json(g: WeightedGraph) -> str:
    rec = {"n": g.n, "edges": [[i, j, w] for i, j, w in g.edges()]}
    return json.dumps(rec, sort_keys=True)


def graph_from_json(text: str) -> WeightedGraph:
    rec = json.loads(text)
    return WeightedGraph.from_edges(int(rec["n"]), rec["edges"])


def write_graph_json(g: WeightedGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(graph_to_json(g) + "\n")


def read_graph_json(path) -> WeightedGraph:
    with open(path) as fh:
        return graph_from_json(fh.read())


def write_edge_csv(g: WeightedGraph, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst", "weight"])
        for i, j, w in g.edges():
            writer.writerow([i, j, repr(w)])


def read_edge_csv(path, n: int | None = None) -> WeightedGraph:
    edges = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            edges.append((int(row["src"]), int(row["dst"]), float(row["weight"])))
    if n is None:
        n = 1 + max((max(i, j) for i, j, _ in edges), default=-1)
        if n < 1:
            raise DomainError("cannot infer node count from an empty edge list")
    return WeightedGraph.from_edges(n, edges)
