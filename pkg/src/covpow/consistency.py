"""Structural consistency of powered covariance blocks.

Powering the observed covariance block and observing the powered covariance
do not commute; their gap is the commutation error. Whenever the off-diagonal
oscillation of that error stays below half the smallest observed interaction
weight, one threshold still separates connected from disconnected node pairs,
so the observed block's fractional inverse power remains structurally
faithful. Two sufficient gates certify this a priori from the shifted
operator alone: a fractional-power form (power in (0,1) matched to the field
smoothness) and a contour form (any nonzero power, positive smoothness).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .graphs import NodePartition, WeightedGraph, abar, partition_blocks
from .matern import MaternModel, population_covariance
from .spd import (
    SpdMatrix,
    SymMatrix,
    circular_contour,
    lambda_min,
    operator_norm,
    spd_power_contour,
    spd_power_eig,
    spd_power_stieltjes,
    spectral_norm,
    spectral_radius,
)

__all__ = [
    "SpectralInterval",
    "FractionalGate",
    "ContourGate",
    "StructureCheck",
    "ConsistencyReport",
    "osc",
    "commutation_error",
    "is_structurally_consistent",
    "consistency_threshold",
    "beta_integral_constant",
    "fractional_bound_h",
    "fractional_gate",
    "delta_norm_bound_fractional",
    "spectral_interval",
    "amplification_factor",
    "contour_gate",
    "default_epsilon_grid",
    "best_contour_gate",
    "verify_instance",
    "report_to_dict",
    "report_to_json",
]


@dataclass(frozen=True)
class SpectralInterval:
    """Certified enclosure [low, high] of the covariance spectrum."""

    low: float
    high: float

    def __post_init__(self) -> None:
        if not 0 < self.low <= self.high:
            raise DomainError(
                f"need 0 < low <= high, got [{self.low}, {self.high}]"
            )


@dataclass(frozen=True)
class FractionalGate:
    """Sufficient condition on the cross-block norm, fractional-power form.

    stability bounds the Neumann interaction term away from 1, control folds
    in the oscillation threshold, and the gate is their minimum. theta_bound
    is the certified upper bound on the interaction term at the given
    cross-block norm.
    """

    prefactor: float
    stability: float
    control: float
    gate: float
    theta_bound: float
    satisfied: bool


@dataclass(frozen=True)
class ContourGate:
    """Sufficient condition on the cross-block norm, contour form."""

    epsilon: float
    spectrum_low: float
    spectrum_high: float
    radius: float
    magnitude: float
    contour_constant: float
    amplification: float
    stability: float
    control: float
    gate: float
    theta_bound: float
    satisfied: bool


@dataclass(frozen=True)
class StructureCheck:
    """Outcome of comparing estimator entries against the true support."""

    status: str  # consistent | inconsistent | not_applicable
    consistent: bool | None
    margin: float | None


@dataclass(frozen=True)
class ConsistencyReport:
    beta: float
    delta_spectral_norm: float
    delta_osc: float | None
    threshold: float | None
    cross_norm: float
    empirically_consistent: bool | None
    margin: float | None
    gate_fractional: FractionalGate | None
    gate_contour: ContourGate | None
    bound_fractional: float | None
    notes: str


def osc(m) -> float:
    """Spread of the off-diagonal entries: max minus min, ignoring the diagonal."""
    a = np.asarray(getattr(m, "values", m), dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 2:
        raise DomainError("oscillation needs at least a 2x2 matrix")
    mask = ~np.eye(a.shape[0], dtype=bool)
    vals = a[mask]
    return float(vals.max() - vals.min())


def commutation_error(
    c: SpdMatrix,
    p: NodePartition,
    beta: float,
    method: str = "eig",
    n_quad: int = 400,
    contour_nodes: int = 256,
    contour_margin: float = 0.5,
) -> SymMatrix:
    """Power-then-observe minus observe-then-power, on the observed block.

    method selects how both matrix powers are computed: "eig" (default),
    "stieltjes" (power in (0,1) only), or "contour". The integral methods are
    cross-checks; they share no factorization with the eigen path.
    """
    if beta == 0 or not np.isfinite(beta):
        raise DomainError("commutation error needs a finite beta != 0")
    if c.dim != p.n:
        raise DomainError(f"covariance dim {c.dim} does not match partition n={p.n}")
    s = list(p.observed)
    # reuse the same object (and factorization) when everything is observed,
    # so the two terms cancel bitwise
    c_s = c if len(s) == c.dim else SpdMatrix(c.values[np.ix_(s, s)])

    def minus_power(x: SpdMatrix) -> np.ndarray:
        if method == "eig":
            return spd_power_eig(x, -beta).values
        if method == "stieltjes":
            return spd_power_stieltjes(x, beta, n_quad=n_quad).values
        if method == "contour":
            lo, hi = float(x.eigenvalues[0]), float(x.eigenvalues[-1])
            spec = circular_contour(lo, hi, contour_margin * lo, nodes=contour_nodes)
            return spd_power_contour(x, beta, spec).values
        raise DomainError(f"unknown power method {method!r}")

    full = minus_power(c)
    observed = minus_power(c_s)
    return SymMatrix(observed - full[np.ix_(s, s)])


def is_structurally_consistent(est, truth_s: WeightedGraph, beta: float) -> StructureCheck:
    """Does one threshold on the estimator split connected from disconnected pairs?

    For positive powers the structural entries appear negated (the operator
    off-diagonal is minus the adjacency), so the comparison flips sign there;
    negative powers are read raw. Needs at least one pair of each kind.
    """
    a = np.asarray(getattr(est, "values", est), dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"estimator must be square, got shape {a.shape}")
    if a.shape[0] != truth_s.n:
        raise DomainError(
            f"estimator dim {a.shape[0]} does not match observed graph n={truth_s.n}"
        )
    n = a.shape[0]
    off = ~np.eye(n, dtype=bool)
    connected = off & (truth_s.adjacency > 0)
    disconnected = off & (truth_s.adjacency == 0)
    if not connected.any() or not disconnected.any():
        return StructureCheck(status="not_applicable", consistent=None, margin=None)
    vals = -a if beta > 0 else a
    margin = float(vals[connected].min() - vals[disconnected].max())
    ok = margin > 0
    return StructureCheck(
        status="consistent" if ok else "inconsistent", consistent=ok, margin=margin
    )


def consistency_threshold(a_min: float, sigma: float, beta: float) -> float:
    """Oscillation budget below which structure survives: a_min/(2 sigma^(2 beta))."""
    if a_min is None or not a_min > 0:
        raise DomainError("a_min must be a positive weight (observed block has edges)")
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    return a_min / (2 * sigma ** (2 * beta))


def beta_integral_constant(beta: float) -> float:
    """Value of int_0^inf t^(-beta) (1+t)^(-3) dt for beta in (0,1).

    Closed form Gamma(1-beta) Gamma(2+beta) / 2; the fractional bound's
    scalar core.
    """
    if not 0 < beta < 1:
        raise DomainError(f"constant defined for beta in (0,1), got {beta}")
    return math.gamma(1 - beta) * math.gamma(2 + beta) / 2


def _shift_spectrum(abar_m) -> tuple[float, float]:
    a = np.asarray(getattr(abar_m, "values", abar_m), dtype=float)
    rho = spectral_radius(a)
    lam = lambda_min(a)
    return rho, lam


def fractional_bound_h(abar_m, beta: float) -> float:
    """Prefactor of the commutation-error norm bound, fractional form."""
    if not 0 < beta < 1:
        raise DomainError(f"fractional bound needs beta in (0,1), got {beta}")
    rho, lam = _shift_spectrum(abar_m)
    if not rho < 1:
        raise DomainError(f"shifted operator spectral radius must be < 1, got {rho}")
    core = 2 * beta_integral_constant(beta)  # Gamma(1-b) Gamma(2+b)
    return (
        math.sin(math.pi * beta)
        / math.pi
        * core
        * (1 - lam) ** (2 / beta + 1)
        / (2 * beta**2 * (1 - rho) ** (2 / beta + 2))
    )


def fractional_gate(abar_m, beta: float, a_min: float, cross_norm: float) -> FractionalGate:
    """Evaluate the fractional-form gate at a given cross-block norm."""
    if a_min is None or not a_min > 0:
        raise DomainError("gate needs a positive a_min")
    if cross_norm < 0:
        raise DomainError("cross_norm must be nonnegative")
    rho, lam = _shift_spectrum(abar_m)
    if not rho < 1:
        raise DomainError(f"shifted operator spectral radius must be < 1, got {rho}")
    if not 0 < beta < 1:
        raise DomainError(f"fractional gate needs beta in (0,1), got {beta}")
    h = fractional_bound_h(abar_m, beta)
    s = beta * (1 - rho) ** (1 + 1 / beta) / (1 - lam) ** (1 / beta)
    c = s * math.sqrt(a_min / (4 * s**2 * h + a_min))
    g = min(s, c)
    return FractionalGate(
        prefactor=h,
        stability=s,
        control=c,
        gate=g,
        theta_bound=(cross_norm / s) ** 2,
        satisfied=bool(cross_norm < g),
    )


def delta_norm_bound_fractional(abar_m, beta: float, sigma: float, cross_norm: float) -> float:
    """Certified upper bound on the commutation-error spectral norm.

    Valid only under the stability condition cross_norm < s; outside it the
    Neumann argument breaks down and the bound is vacuous.
    """
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if cross_norm < 0:
        raise DomainError("cross_norm must be nonnegative")
    rho, lam = _shift_spectrum(abar_m)
    if not rho < 1:
        raise DomainError(f"shifted operator spectral radius must be < 1, got {rho}")
    if not 0 < beta < 1:
        raise DomainError(f"fractional bound needs beta in (0,1), got {beta}")
    h = fractional_bound_h(abar_m, beta)
    s = beta * (1 - rho) ** (1 + 1 / beta) / (1 - lam) ** (1 / beta)
    if cross_norm >= s:
        raise DomainError(
            f"cross_norm {cross_norm:.6g} >= stability {s:.6g}: bound is vacuous"
        )
    theta = (cross_norm / s) ** 2
    return h / (sigma ** (2 * beta) * (1 - theta)) * cross_norm**2


def spectral_interval(abar_m, alpha: float, sigma: float) -> SpectralInterval:
    """Enclosure of the covariance spectrum from the shifted operator.

    The lower end is exact (the covariance eigenvalue map is monotone); the
    upper end uses the spectral radius, which is an envelope.
    """
    if not alpha > 0:
        raise DomainError("spectral interval is defined for alpha > 0")
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    rho, lam = _shift_spectrum(abar_m)
    if not rho < 1:
        raise DomainError(f"shifted operator spectral radius must be < 1, got {rho}")
    return SpectralInterval(
        low=sigma**2 * (1 - lam) ** (-alpha),
        high=sigma**2 * (1 - rho) ** (-alpha),
    )


def amplification_factor(abar_m, alpha: float, sigma: float) -> float:
    """Factor turning an adjacency cross norm into a covariance cross norm.

    Only meaningful for alpha > 0, where the covariance cross block is
    controlled by the adjacency cross block.
    """
    if not alpha > 0:
        raise DomainError("amplification factor is defined for alpha > 0")
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    rho, _ = _shift_spectrum(abar_m)
    if not rho < 1:
        raise DomainError(f"shifted operator spectral radius must be < 1, got {rho}")
    return sigma**2 * alpha * (1 - rho) ** (-alpha - 1)


def contour_gate(
    abar_m,
    alpha: float,
    beta: float,
    sigma: float,
    epsilon: float,
    a_min: float,
    cross_norm: float,
) -> ContourGate:
    """Evaluate the contour-form gate at a given clearance epsilon."""
    if beta == 0 or not np.isfinite(beta):
        raise DomainError("contour gate needs a finite beta != 0")
    if a_min is None or not a_min > 0:
        raise DomainError("gate needs a positive a_min")
    if cross_norm < 0:
        raise DomainError("cross_norm must be nonnegative")
    interval = spectral_interval(abar_m, alpha, sigma)
    m, m_up = interval.low, interval.high
    if not 0 < epsilon < m:
        raise DomainError(f"epsilon must lie in (0, {m:.6g}), got {epsilon}")
    radius = (m_up - m) / 2 + epsilon
    magnitude = (m - epsilon) ** (-beta) if beta >= 0 else (m_up + epsilon) ** (-beta)
    k_const = radius * epsilon**-3 * magnitude
    amp = amplification_factor(abar_m, alpha, sigma)
    s_eps = epsilon / amp
    c_eps = s_eps * math.sqrt(a_min / (4 * epsilon**2 * sigma ** (2 * beta) * k_const + a_min))
    g_eps = min(s_eps, c_eps)
    return ContourGate(
        epsilon=epsilon,
        spectrum_low=m,
        spectrum_high=m_up,
        radius=radius,
        magnitude=magnitude,
        contour_constant=k_const,
        amplification=amp,
        stability=s_eps,
        control=c_eps,
        gate=g_eps,
        theta_bound=(amp * cross_norm / epsilon) ** 2,
        satisfied=bool(cross_norm < g_eps),
    )


def default_epsilon_grid(m: float, n_points: int = 20) -> np.ndarray:
    """Log-spaced clearance candidates inside (0, m)."""
    if not m > 0:
        raise DomainError("spectrum lower bound must be positive")
    return np.geomspace(0.01 * m, 0.99 * m, n_points)


def best_contour_gate(
    abar_m,
    alpha: float,
    beta: float,
    sigma: float,
    a_min: float,
    cross_norm: float,
    epsilon_grid=None,
) -> ContourGate:
    """Contour gate maximized over a clearance grid; ties keep the first."""
    if epsilon_grid is None:
        interval = spectral_interval(abar_m, alpha, sigma)
        epsilon_grid = default_epsilon_grid(interval.low)
    gates = [
        contour_gate(abar_m, alpha, beta, sigma, float(eps), a_min, cross_norm)
        for eps in epsilon_grid
    ]
    if not gates:
        raise DomainError("epsilon grid is empty")
    return max(gates, key=lambda gate: gate.gate)


def verify_instance(
    model: MaternModel,
    p: NodePartition,
    beta: float | None = None,
    epsilon_grid=None,
    method: str = "eig",
) -> ConsistencyReport:
    """Full empirical-versus-certified consistency check on one instance.

    Computes the exact commutation error from the population covariance,
    checks structural consistency of the powered observed block against the
    true observed subgraph, and evaluates whichever gates apply. The
    fractional gate requires the power to match the field smoothness
    (beta = 1/alpha in (0,1)); the contour gate requires alpha > 0.
    """
    notes: list[str] = []
    if beta is None:
        beta = 1 / model.alpha
        notes.append("beta defaulted to 1/alpha")
    if beta == 0 or not np.isfinite(beta):
        raise DomainError("beta must be a finite nonzero real")

    c = population_covariance(model)
    delta = commutation_error(c, p, beta, method=method)
    delta_norm = spectral_norm(delta)
    n_obs = len(p.observed)
    delta_osc = osc(delta) if n_obs >= 2 else None
    if n_obs < 2:
        notes.append("observed block has one node; oscillation undefined")

    adj_s, cross, _, _ = partition_blocks(model.graph.adjacency, p)
    cross_norm = operator_norm(cross)
    truth_s = WeightedGraph(adj_s)
    pos = adj_s[~np.eye(n_obs, dtype=bool)]
    a_min = float(pos[pos > 0].min()) if (pos > 0).any() else None

    threshold = None
    if a_min is not None:
        threshold = consistency_threshold(a_min, model.sigma, beta)
    else:
        notes.append("observed block has no edges; threshold and gates not applicable")

    s_idx = list(p.observed)
    c_s = SpdMatrix(c.values[np.ix_(s_idx, s_idx)])
    est = spd_power_eig(c_s, -beta).values
    check = is_structurally_consistent(est, truth_s, beta)
    if check.status == "not_applicable":
        notes.append("structure check not applicable: need both pair kinds in the observed block")

    shift, valid = abar(model.graph, model.kappa)
    gate_frac = None
    gate_cont = None
    bound_frac = None
    if not valid:
        notes.append("shifted operator spectral radius >= 1; gates not applicable")
    elif a_min is not None:
        matched = abs(beta * model.alpha - 1) <= 1e-9
        if 0 < beta < 1 and matched:
            gate_frac = fractional_gate(shift, beta, a_min, cross_norm)
            if cross_norm < gate_frac.stability:
                bound_frac = delta_norm_bound_fractional(
                    shift, beta, model.sigma, cross_norm
                )
        else:
            notes.append("fractional gate needs beta = 1/alpha in (0,1)")
        if model.alpha > 0:
            gate_cont = best_contour_gate(
                shift, model.alpha, beta, model.sigma, a_min, cross_norm, epsilon_grid
            )
        else:
            notes.append("contour gate needs alpha > 0")

    return ConsistencyReport(
        beta=float(beta),
        delta_spectral_norm=delta_norm,
        delta_osc=delta_osc,
        threshold=threshold,
        cross_norm=cross_norm,
        empirically_consistent=check.consistent,
        margin=check.margin,
        gate_fractional=gate_frac,
        gate_contour=gate_cont,
        bound_fractional=bound_frac,
        notes="; ".join(notes),
    )


def report_to_dict(report: ConsistencyReport) -> dict:
    rec = asdict(report)
    return rec


def report_to_json(report: ConsistencyReport) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True)
