import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.integrate import quad
from scipy.linalg import fractional_matrix_power
from scipy.special import gammaln

from covpow.consistency import (
    ConsistencyReport,
    SpectralInterval,
    amplification_factor,
    best_contour_gate,
    beta_integral_constant,
    commutation_error,
    consistency_threshold,
    contour_gate,
    default_epsilon_grid,
    delta_norm_bound_fractional,
    fractional_bound_h,
    fractional_gate,
    is_structurally_consistent,
    osc,
    report_to_json,
    spectral_interval,
    verify_instance,
)
from covpow.errors import DomainError
from covpow.graphs import (
    NodePartition,
    WeightedGraph,
    abar,
    partition_blocks,
    sample_inhomogeneous_er,
    scale_cross_block,
)
from covpow.matern import MaternModel, population_covariance
from covpow.spd import SpdMatrix, operator_norm, spectral_norm


def er_instance(
    seed, n_obs=7, n_lat=5, alpha=2.0, sigma=1.0, kappa=1.0, p_cross=0.3, target_rho=0.95
):
    g, p = sample_inhomogeneous_er(
        n_obs, n_lat, 0.6, 0.6, p_cross, seed=seed, target_rho=target_rho
    )
    if not np.all(g.degrees() > 0):
        return None
    return MaternModel(graph=g, kappa=kappa, alpha=alpha, sigma=sigma), p


def gated_instance(seed, alpha=2.0, sigma=1.0, target_frac=0.6):
    """Shrink the cross block until the fractional gate is satisfied."""
    inst = er_instance(seed, alpha=alpha, sigma=sigma)
    if inst is None:
        return None
    model, p = inst
    beta = 1 / alpha
    adj_s = partition_blocks(model.graph.adjacency, p)[0]
    off = adj_s[~np.eye(adj_s.shape[0], dtype=bool)]
    if not (off > 0).any() or (off == 0).sum() == 0:
        return None
    graph = model.graph
    for _ in range(60):
        shift, valid = abar(graph, model.kappa)
        cross = operator_norm(partition_blocks(graph.adjacency, p)[1])
        if not valid or cross == 0:
            return None
        a_min = float(off[off > 0].min())
        gate = fractional_gate(shift, beta, a_min, cross)
        if cross < target_frac * gate.gate:
            return MaternModel(graph=graph, kappa=model.kappa, alpha=alpha, sigma=sigma), p
        graph = scale_cross_block(graph, p, min(0.5, 0.5 * target_frac * gate.gate / cross))
    return None


class TestOsc:
    def test_three_by_three_example(self):
        m = np.array([[1.0, 2.0, 5.0], [3.0, 4.0, 6.0], [7.0, 8.0, 9.0]])
        assert osc(m) == 6.0

    def test_flat_shift_and_diagonal_invariance_exact(self):
        m = np.array([[1.0, 2.0, 5.0], [3.0, 4.0, 6.0], [7.0, 8.0, 9.0]])
        shifted = m + 10.0 * np.ones((3, 3)) + np.diag([3.0, -8.0, 100.0])
        assert osc(shifted) == 6.0

    def test_flat_shift_invariance_randomized(self):
        # dyadic entries (multiples of 1/64) make every sum exact in binary64,
        # so the invariance can be asserted with == rather than a tolerance
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(2, 9))
            m = rng.integers(-640, 640, (n, n)) / 64
            b = float(rng.integers(-3200, 3200)) / 64
            d = rng.integers(-640, 640, n) / 64
            assert osc(m + b * np.ones((n, n)) + np.diag(d)) == osc(m)

    def test_identity_is_zero(self):
        assert osc(np.eye(4)) == 0.0

    def test_needs_two_nodes(self):
        with pytest.raises(DomainError):
            osc(np.array([[3.0]]))

    def test_osc_below_twice_norm(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(2, 10))
            m = rng.standard_normal((n, n))
            m = (m + m.T) / 2
            assert osc(m) <= 2 * spectral_norm(m) + 1e-12

    def test_offdiag_entries_below_norm(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            n = int(rng.integers(2, 10))
            m = rng.standard_normal((n, n))
            m = (m + m.T) / 2
            off = np.abs(m[~np.eye(n, dtype=bool)]).max()
            assert off <= spectral_norm(m) + 1e-12


class TestCommutationError:
    def test_full_observation_exactly_zero(self):
        model, _ = er_instance(3, p_cross=0.4)
        c = population_covariance(model)
        p_all = NodePartition.from_observed(model.n, range(model.n))
        delta = commutation_error(c, p_all, 0.5)
        assert_array_equal(delta.values, np.zeros((model.n, model.n)))

    def test_block_diagonal_is_zero(self):
        inst = er_instance(5, p_cross=0.0)
        model, p = inst
        c = population_covariance(model)
        delta = commutation_error(c, p, 1 / model.alpha)
        assert spectral_norm(delta) <= 1e-10

    def test_matches_independent_implementation(self):
        model, p = er_instance(7, n_obs=3, n_lat=1, alpha=2.0)
        beta = 1 / model.alpha
        c = population_covariance(model)
        delta = commutation_error(c, p, beta).values
        s = list(p.observed)
        c_s = c.values[np.ix_(s, s)]
        oracle = fractional_matrix_power(c_s, -beta) - fractional_matrix_power(
            c.values, -beta
        )[np.ix_(s, s)]
        assert np.max(np.abs(delta - np.real(oracle))) <= 1e-9

    def test_integral_methods_agree_with_eig(self):
        # keep the covariance well conditioned so default node counts converge
        model, p = er_instance(9, target_rho=0.6)
        c = population_covariance(model)
        d_eig = commutation_error(c, p, 0.5, method="eig").values
        d_sti = commutation_error(c, p, 0.5, method="stieltjes").values
        d_con = commutation_error(c, p, 0.5, method="contour", contour_nodes=1024).values
        assert np.max(np.abs(d_sti - d_eig)) <= 1e-8
        assert np.max(np.abs(d_con - d_eig)) <= 1e-8

    def test_contour_method_negative_beta(self):
        model, p = er_instance(11, target_rho=0.6)
        c = population_covariance(model)
        d_eig = commutation_error(c, p, -1.5, method="eig").values
        d_con = commutation_error(c, p, -1.5, method="contour", contour_nodes=1024).values
        assert np.max(np.abs(d_con - d_eig)) <= 1e-8

    def test_rejects_zero_beta_and_bad_method(self):
        model, p = er_instance(3)
        c = population_covariance(model)
        with pytest.raises(DomainError):
            commutation_error(c, p, 0.0)
        with pytest.raises(DomainError):
            commutation_error(c, p, 0.5, method="pade")
        with pytest.raises(DomainError):
            commutation_error(c, p, 1.5, method="stieltjes")


class TestStructureCheck:
    def test_exact_recovery_full_observability(self):
        model, _ = er_instance(13)
        op = (
            model.kappa**2 * np.diag(model.graph.degrees())
            + np.diag(model.graph.degrees())
            - model.graph.adjacency
        )
        est = model.sigma ** (-2 / model.alpha) * op
        check = is_structurally_consistent(est, model.graph, beta=1 / model.alpha)
        assert check.status == "consistent"
        assert check.margin > 0

    def test_not_applicable_when_observed_block_empty(self):
        truth = WeightedGraph(np.zeros((3, 3)))
        check = is_structurally_consistent(np.eye(3), truth, beta=0.5)
        assert check.status == "not_applicable"
        assert check.consistent is None

    def test_not_applicable_when_complete(self):
        truth = WeightedGraph(np.ones((3, 3)) - np.eye(3))
        check = is_structurally_consistent(np.eye(3), truth, beta=0.5)
        assert check.status == "not_applicable"

    def test_noise_below_half_margin_keeps_structure(self):
        truth = WeightedGraph.from_edges(4, [(0, 1, 1.0), (1, 2, 1.0)])
        est = -truth.adjacency
        rng = np.random.default_rng(3)
        noise = rng.uniform(-0.4, 0.4, (4, 4))
        noise = (noise + noise.T) / 2
        check = is_structurally_consistent(est + noise, truth, beta=0.5)
        assert check.status == "consistent"

    def test_violation_detected(self):
        truth = WeightedGraph.from_edges(4, [(0, 1, 1.0)])
        est = -np.asarray(truth.adjacency)
        est = est.copy()
        est[2, 3] = est[3, 2] = -1.0  # disconnected pair as strong as a real edge
        check = is_structurally_consistent(est, truth, beta=0.5)
        assert check.status == "inconsistent"
        assert check.margin <= 0

    def test_matches_brute_force_enumeration(self):
        rng = np.random.default_rng(4)
        for seed in range(50):
            n = int(rng.integers(3, 8))
            adj = np.where(rng.random((n, n)) < 0.4, rng.uniform(0.5, 1.5, (n, n)), 0.0)
            adj = np.triu(adj, 1)
            adj = adj + adj.T
            truth = WeightedGraph(adj)
            est = rng.standard_normal((n, n))
            beta = float(rng.choice([-1.0, 0.5, 2.0]))
            check = is_structurally_consistent(est, truth, beta)
            conn, disc = [], []
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    v = -est[i, j] if beta > 0 else est[i, j]
                    (conn if adj[i, j] > 0 else disc).append(v)
            if not conn or not disc:
                assert check.status == "not_applicable"
            else:
                margin = min(conn) - max(disc)
                assert check.margin == pytest.approx(margin, abs=1e-15)
                assert check.consistent == (margin > 0)

    def test_negative_beta_reads_raw_entries(self):
        truth = WeightedGraph.from_edges(3, [(0, 1, 1.0)])
        est = np.array([[0.0, 5.0, 0.1], [5.0, 0.0, 0.2], [0.1, 0.2, 0.0]])
        check = is_structurally_consistent(est, truth, beta=-1.0)
        assert check.status == "consistent"


class TestThreshold:
    def test_examples(self):
        assert consistency_threshold(1.0, 1.0, 0.5) == 0.5
        assert consistency_threshold(1.0, 1.0, -3.0) == 0.5
        assert consistency_threshold(0.4, 1.0, 0.5) == pytest.approx(0.2)
        assert consistency_threshold(1.0, 2.0, 1.0) == pytest.approx(1 / 8)

    def test_rejects_missing_a_min(self):
        with pytest.raises(DomainError):
            consistency_threshold(0.0, 1.0, 0.5)
        with pytest.raises(DomainError):
            consistency_threshold(None, 1.0, 0.5)


class TestBetaIntegralConstant:
    def test_half_matches_quadrature(self):
        want, _ = quad(lambda t: t**-0.5 * (1 + t) ** -3, 0, np.inf)
        got = beta_integral_constant(0.5)
        assert abs(got - want) <= 1e-8 * abs(want)
        assert abs(got - 3 * np.pi / 8) <= 1e-12

    def test_random_betas_match_quadrature(self):
        rng = np.random.default_rng(5)
        for beta in rng.uniform(0.05, 0.95, 10):
            want, _ = quad(lambda t: t**-beta * (1 + t) ** -3, 0, np.inf)
            assert abs(beta_integral_constant(beta) - want) <= 1e-8 * abs(want)

    def test_domain(self):
        for beta in (0.0, 1.0, -0.5):
            with pytest.raises(DomainError):
                beta_integral_constant(beta)


class TestFractionalBound:
    def test_zero_shift_closed_form(self):
        for beta in (0.25, 0.5, 0.75):
            want = (
                math.sin(math.pi * beta)
                * math.gamma(1 - beta)
                * math.gamma(2 + beta)
                / (2 * math.pi * beta**2)
            )
            assert fractional_bound_h(np.zeros((3, 3)), beta) == pytest.approx(
                want, rel=1e-12
            )

    def test_grows_as_radius_approaches_one(self):
        vals = [
            fractional_bound_h(np.diag([r, -0.1]), 0.5) for r in np.linspace(0.2, 0.95, 12)
        ]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_rejects_unstable_shift(self):
        with pytest.raises(DomainError):
            fractional_bound_h(np.diag([1.2, 0.0]), 0.5)


class TestFractionalGate:
    def test_zero_cross_always_satisfied(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            d = rng.uniform(-0.8, 0.8, 4)
            gate = fractional_gate(np.diag(d), 0.5, a_min=0.7, cross_norm=0.0)
            assert gate.satisfied
            assert gate.gate > 0
            assert gate.theta_bound == 0.0

    def test_control_below_stability(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            d = rng.uniform(-0.9, 0.9, 5)
            beta = float(rng.uniform(0.1, 0.9))
            a_min = float(rng.uniform(0.1, 2.0))
            gate = fractional_gate(np.diag(d), beta, a_min, 0.0)
            assert gate.control <= gate.stability + 1e-15

    def test_dual_implementation_agreement(self):
        # same formulas, independently coded via logs and a rearranged root
        rng = np.random.default_rng(8)
        for _ in range(30):
            d = rng.uniform(-0.9, 0.9, 6)
            beta = float(rng.uniform(0.1, 0.9))
            a_min = float(rng.uniform(0.1, 2.0))
            cross = float(rng.uniform(0.0, 0.5))
            gate = fractional_gate(np.diag(d), beta, a_min, cross)
            rho = np.max(np.abs(d))
            lam = np.min(d)
            h2 = (
                np.sin(np.pi * beta)
                / np.pi
                * np.exp(gammaln(1 - beta) + gammaln(2 + beta))
                * np.exp(
                    (2 / beta + 1) * np.log1p(-lam)
                    - (2 / beta + 2) * np.log1p(-rho)
                )
                / (2 * beta**2)
            )
            s2 = np.exp(
                np.log(beta)
                + (1 + 1 / beta) * np.log1p(-rho)
                - (1 / beta) * np.log1p(-lam)
            )
            c2 = s2 / np.sqrt(1 + 4 * s2**2 * h2 / a_min)
            assert gate.prefactor == pytest.approx(h2, rel=1e-12)
            assert gate.stability == pytest.approx(s2, rel=1e-12)
            assert gate.control == pytest.approx(c2, rel=1e-12)
            assert gate.gate == pytest.approx(min(s2, c2), rel=1e-12)
            assert gate.theta_bound == pytest.approx((cross / s2) ** 2, rel=1e-12)


class TestDeltaNormBound:
    def test_zero_cross_is_zero(self):
        assert delta_norm_bound_fractional(np.diag([0.3, -0.2]), 0.5, 1.0, 0.0) == 0.0

    def test_monotone_in_cross(self):
        shift = np.diag([0.3, -0.2])
        s = fractional_gate(shift, 0.5, 1.0, 0.0).stability
        vals = [
            delta_norm_bound_fractional(shift, 0.5, 1.0, x)
            for x in np.linspace(0, 0.95 * s, 10)
        ]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_vacuous_above_stability(self):
        shift = np.diag([0.3, -0.2])
        s = fractional_gate(shift, 0.5, 1.0, 0.0).stability
        with pytest.raises(DomainError):
            delta_norm_bound_fractional(shift, 0.5, 1.0, 1.1 * s)

    def test_bound_holds_on_gated_instances(self):
        checked = 0
        seed = 0
        while checked < 60 and seed < 400:
            seed += 1
            inst = gated_instance(seed)
            if inst is None:
                continue
            model, p = inst
            beta = 1 / model.alpha
            shift, _ = abar(model.graph, model.kappa)
            cross = operator_norm(partition_blocks(model.graph.adjacency, p)[1])
            bound = delta_norm_bound_fractional(shift, beta, model.sigma, cross)
            c = population_covariance(model)
            empirical = spectral_norm(commutation_error(c, p, beta))
            assert empirical <= bound
            checked += 1
        assert checked == 60


class TestSpectralInterval:
    def test_invariants(self):
        with pytest.raises(DomainError):
            SpectralInterval(low=2.0, high=1.0)
        with pytest.raises(DomainError):
            SpectralInterval(low=0.0, high=1.0)

    def test_encloses_covariance_spectrum(self):
        for seed in range(20):
            inst = er_instance(seed, alpha=1.5, sigma=1.2)
            if inst is None:
                continue
            model, _ = inst
            shift, valid = abar(model.graph, model.kappa)
            if not valid:
                continue
            interval = spectral_interval(shift, model.alpha, model.sigma)
            eigs = population_covariance(model).eigenvalues
            assert eigs[0] >= interval.low - 1e-12
            assert eigs[-1] <= interval.high + 1e-12
            # lower end is exact, not just an envelope
            assert eigs[0] == pytest.approx(interval.low, rel=1e-9)

    def test_requires_positive_alpha(self):
        with pytest.raises(DomainError):
            spectral_interval(np.zeros((2, 2)), -1.0, 1.0)


class TestAmplification:
    def test_covariance_cross_block_controlled(self):
        hits = 0
        for seed in range(40):
            inst = er_instance(seed, alpha=2.5, sigma=0.8)
            if inst is None:
                continue
            model, p = inst
            shift, valid = abar(model.graph, model.kappa)
            if not valid:
                continue
            amp = amplification_factor(shift, model.alpha, model.sigma)
            c = population_covariance(model).values
            c_cross = operator_norm(partition_blocks(c, p)[1])
            a_cross = operator_norm(partition_blocks(model.graph.adjacency, p)[1])
            assert c_cross <= amp * a_cross + 1e-12
            hits += 1
        assert hits >= 20

    def test_requires_positive_alpha(self):
        with pytest.raises(DomainError):
            amplification_factor(np.zeros((2, 2)), 0.0, 1.0)


class TestResolventBound:
    def test_schur_bound_holds(self):
        rng = np.random.default_rng(9)
        checked = 0
        for _ in range(60):
            n = int(rng.integers(4, 10))
            k = int(rng.integers(2, n - 1))
            q, _ = np.linalg.qr(rng.standard_normal((n, n)))
            c = (q * rng.uniform(0.5, 3.0, n)) @ q.T
            s, sp = list(range(k)), list(range(k, n))
            # shrink the cross block to keep the interaction term below 1
            tau = 0.2
            c[np.ix_(s, sp)] *= tau
            c[np.ix_(sp, s)] *= tau
            eigs = np.linalg.eigvalsh(c)
            if eigs[0] <= 1e-10:
                continue
            c_s = c[np.ix_(s, s)]
            c_sp = c[np.ix_(sp, sp)]
            cross = np.linalg.norm(c[np.ix_(s, sp)], 2)
            theta = cross**2 / (
                np.linalg.eigvalsh(c_s)[0] * np.linalg.eigvalsh(c_sp)[0]
            )
            if theta >= 1:
                continue
            for lam in (0.1, 1.0, 10.0):
                full_inv = np.linalg.inv(c + lam * np.eye(n))
                r = np.linalg.inv(c_s + lam * np.eye(k)) - full_inv[np.ix_(s, s)]
                got = np.linalg.norm(r, 2)
                bound = cross**2 / ((1 - theta) * (eigs[0] + lam) ** 3)
                assert got <= bound + 1e-12
            checked += 1
        assert checked >= 30


class TestCrossBlockPowerBound:
    def test_power_bound(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            n = int(rng.integers(4, 10))
            k = int(rng.integers(1, n))
            m = rng.standard_normal((n, n))
            m = (m + m.T) / 2
            s, sp = list(range(k)), list(range(k, n))
            norm_m = np.linalg.norm(m, 2)
            cross_norm = np.linalg.norm(m[np.ix_(s, sp)], 2) if sp else 0.0
            mk = np.eye(n)
            for kk in range(1, 9):
                mk = mk @ m
                if not sp:
                    continue
                got = np.linalg.norm(mk[np.ix_(s, sp)], 2)
                assert got <= kk * norm_m ** (kk - 1) * cross_norm + 1e-9

    def test_equality_witness_at_k_one(self):
        # pure cross-block matrix: within-blocks are zero
        b = np.array([[1.0, 2.0], [0.5, -1.0]])
        m = np.zeros((4, 4))
        m[:2, 2:] = b
        m[2:, :2] = b.T
        got = np.linalg.norm(m[:2, 2:], 2)
        assert got == pytest.approx(1 * np.linalg.norm(b, 2), abs=1e-15)


class TestContourGate:
    def test_zero_cross_satisfied_and_theta_zero(self):
        shift = np.diag([0.4, -0.3])
        gate = contour_gate(shift, 2.0, 0.5, 1.0, epsilon=0.2, a_min=0.7, cross_norm=0.0)
        assert gate.satisfied
        assert gate.theta_bound == 0.0
        assert gate.gate > 0

    def test_epsilon_domain(self):
        shift = np.diag([0.4, -0.3])
        m = spectral_interval(shift, 2.0, 1.0).low
        for eps in (0.0, m, 2 * m):
            with pytest.raises(DomainError):
                contour_gate(shift, 2.0, 0.5, 1.0, eps, 0.7, 0.0)

    def test_requires_positive_alpha_and_nonzero_beta(self):
        shift = np.diag([0.4, -0.3])
        with pytest.raises(DomainError):
            contour_gate(shift, -2.0, 0.5, 1.0, 0.1, 0.7, 0.0)
        with pytest.raises(DomainError):
            contour_gate(shift, 2.0, 0.0, 1.0, 0.1, 0.7, 0.0)

    def test_negative_beta_uses_upper_end(self):
        shift = np.diag([0.4, -0.3])
        interval = spectral_interval(shift, 2.0, 1.0)
        gate = contour_gate(shift, 2.0, -1.0, 1.0, 0.1, 0.7, 0.0)
        assert gate.magnitude == pytest.approx(interval.high + 0.1, rel=1e-12)

    def test_dual_implementation_agreement(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            d = rng.uniform(-0.8, 0.8, 5)
            alpha = float(rng.uniform(0.5, 3.0))
            beta = float(rng.choice([-1.5, 0.5, 2.0]))
            sigma = float(rng.uniform(0.5, 2.0))
            a_min = float(rng.uniform(0.2, 1.5))
            cross = float(rng.uniform(0.0, 0.3))
            rho, lam = np.max(np.abs(d)), np.min(d)
            m = sigma**2 * (1 - lam) ** -alpha
            m_up = sigma**2 * (1 - rho) ** -alpha
            eps = float(rng.uniform(0.05, 0.95)) * m
            gate = contour_gate(np.diag(d), alpha, beta, sigma, eps, a_min, cross)
            radius = (m_up - m) / 2 + eps
            z = (m - eps) ** -beta if beta >= 0 else (m_up + eps) ** -beta
            k = radius * z / eps**3
            amp = sigma**2 * alpha * (1 - rho) ** (-alpha - 1)
            s_eps = eps / amp
            c_eps = s_eps / np.sqrt(1 + 4 * eps**2 * sigma ** (2 * beta) * k / a_min)
            assert gate.spectrum_low == pytest.approx(m, rel=1e-12)
            assert gate.spectrum_high == pytest.approx(m_up, rel=1e-12)
            assert gate.contour_constant == pytest.approx(k, rel=1e-12)
            assert gate.stability == pytest.approx(s_eps, rel=1e-12)
            assert gate.control == pytest.approx(c_eps, rel=1e-12)
            assert gate.gate == pytest.approx(min(s_eps, c_eps), rel=1e-12)
            assert gate.theta_bound == pytest.approx((amp * cross / eps) ** 2, rel=1e-12)

    def test_grid_maximization_reproducible(self):
        shift = np.diag([0.5, -0.4, 0.1])
        alpha, beta, sigma, a_min, cross = 2.0, 0.5, 1.0, 0.7, 0.01
        best = best_contour_gate(shift, alpha, beta, sigma, a_min, cross)
        m = spectral_interval(shift, alpha, sigma).low
        grid = default_epsilon_grid(m)
        gates = [
            contour_gate(shift, alpha, beta, sigma, float(e), a_min, cross) for e in grid
        ]
        by_hand = max(gates, key=lambda g: g.gate)
        assert best == by_hand
        assert all(np.isfinite(g.gate) and g.gate > 0 for g in gates)


class TestVerifyInstance:
    def test_full_observability(self):
        model, _ = er_instance(15)
        p_all = NodePartition.from_observed(model.n, range(model.n))
        report = verify_instance(model, p_all)
        assert report.delta_spectral_norm == 0.0
        assert report.empirically_consistent is True
        assert report.beta == pytest.approx(1 / model.alpha)

    def test_block_diagonal_delta_vanishes(self):
        model, p = er_instance(17, p_cross=0.0)
        report = verify_instance(model, p)
        assert report.delta_spectral_norm <= 1e-10
        assert report.cross_norm == 0.0

    def test_gated_instance_is_consistent(self):
        inst = gated_instance(23)
        assert inst is not None
        model, p = inst
        report = verify_instance(model, p)
        assert report.gate_fractional is not None
        assert report.gate_fractional.satisfied
        assert report.empirically_consistent is True
        assert report.bound_fractional is not None
        assert report.delta_spectral_norm <= report.bound_fractional

    def test_osc_norm_invariant(self):
        for seed in (19, 21, 25):
            inst = er_instance(seed)
            if inst is None:
                continue
            model, p = inst
            report = verify_instance(model, p)
            assert report.delta_osc <= 2 * report.delta_spectral_norm + 1e-12

    def test_mismatched_beta_skips_fractional_gate(self):
        model, p = er_instance(27)
        report = verify_instance(model, p, beta=0.9)  # alpha = 2, so 1/alpha = 0.5
        assert report.gate_fractional is None
        assert "fractional gate needs beta = 1/alpha" in report.notes
        assert report.gate_contour is not None

    def test_report_serializes(self):
        model, p = er_instance(29)
        report = verify_instance(model, p)
        rec = json.loads(report_to_json(report))
        assert rec["beta"] == report.beta
        assert rec["gate_contour"]["satisfied"] == report.gate_contour.satisfied

    def test_single_observed_node_osc_undefined(self):
        g, _ = sample_inhomogeneous_er(2, 4, 1.0, 0.7, 0.5, seed=31)
        model = MaternModel(graph=g, kappa=1.0, alpha=2.0, sigma=1.0)
        p = NodePartition.from_observed(6, [0])
        report = verify_instance(model, p)
        assert report.delta_osc is None
        assert "oscillation undefined" in report.notes
