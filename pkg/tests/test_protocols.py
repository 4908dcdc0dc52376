"""Protocols: extraction, pumping, counterexample family, catalysts, schedules."""

from fractions import Fraction

import numpy as np
import pytest

from coherence_lab import (
    ZERO_ENERGY,
    DensityMatrix,
    MarginalCatalystProtocol,
    apply,
    average_single_copy_marginal,
    build_correlated_catalyst,
    build_counterexample,
    build_hamiltonian,
    coherence_magnitude,
    counterexample_distance_formula,
    counterexample_row,
    energy,
    extract_weak_qubit,
    identity_channel,
    is_incoherent,
    marginal_catalytic_contract,
    min_k_for_rate,
    partial_trace,
    plus_state,
    pump_qubits,
    random_covariant,
    rate_certificate,
    recombination_schedule,
    schedule_conversions,
    schedule_is_fresh,
    tensor,
    tensor_power,
    tensor_power_hamiltonian,
    trace_distance,
    unitary_channel,
    verify_covariance,
    weak_qubit_channel,
)

from oracles import loop_partial_trace, nuclear_distance

VAL = {"u": 1.0, "v": np.sqrt(2.0)}


def qubit_h():
    return build_hamiltonian([ZERO_ENERGY, energy(u=1)], symbols=("u", "v"))


class TestWeakQubitExtraction:
    def qutrit(self):
        return build_hamiltonian(
            [ZERO_ENERGY, energy(u=1), energy(u=5)], symbols=("u", "v")
        )

    def state(self):
        mat = np.array(
            [
                [0.5, 0.1, 0.05],
                [0.1, 0.3, 0.02],
                [0.05, 0.02, 0.2],
            ],
            dtype=complex,
        )
        return DensityMatrix(mat, self.qutrit())

    def test_incoherent_stays_incoherent(self):
        state = DensityMatrix.diagonal([0.5, 0.3, 0.2], self.qutrit())
        out = extract_weak_qubit(state, (0, 1))
        assert is_incoherent(out)

    def test_adjacent_pair_against_kraus_oracle(self):
        state = self.state()
        out = extract_weak_qubit(state, (0, 1))
        assert out.hamiltonian.energies[1] == energy(u=1)
        # Oracle: apply A = |0><0| + |1><1| and B = |0><2| by hand.
        a = np.array([[1, 0, 0], [0, 1, 0]], dtype=complex)
        b = np.array([[0, 0, 1], [0, 0, 0]], dtype=complex)
        want = a @ state.matrix @ a.conj().T + b @ state.matrix @ b.conj().T
        assert np.allclose(out.matrix, want, atol=1e-14)
        assert out.matrix[0, 1] == pytest.approx(0.1)

    def test_skip_pair_keeps_its_coherence(self):
        out = extract_weak_qubit(self.state(), (0, 2))
        assert out.hamiltonian.energies[1] == energy(u=5)
        assert out.matrix[0, 1] == pytest.approx(0.05)
        assert out.matrix[0, 0] == pytest.approx(0.8)

    def test_channel_is_covariant(self):
        channel = weak_qubit_channel(self.qutrit(), 0, 2)
        assert verify_covariance(channel, VAL) <= 1e-12

    def test_degenerate_pair_rejected(self):
        h = build_hamiltonian(
            [ZERO_ENERGY, energy(u=1), energy(u=1)], symbols=("u", "v")
        )
        with pytest.raises(ValueError, match="degenerate"):
            weak_qubit_channel(h, 1, 2)


class TestPumpQubits:
    def sigma(self, p, c):
        return DensityMatrix(np.array([[p, c], [np.conj(c), 1 - p]]), qubit_h())

    def test_zero_angle_identity(self):
        state = self.sigma(0.8, 0.1)
        out = pump_qubits(state, 0.0)
        assert out.matrix[0, 1] == pytest.approx(0.1, abs=1e-14)

    def test_balanced_population_never_gains(self):
        state = self.sigma(0.5, 0.2)
        for theta in np.linspace(0.0, 2 * np.pi, 37):
            out = pump_qubits(state, theta)
            assert abs(out.matrix[0, 1]) <= 0.2 + 1e-12
        assert pump_qubits(state, 0.0).matrix[0, 1] == pytest.approx(0.2)

    def test_optimal_angle_gain(self):
        p, c = 0.9, 0.05
        theta = np.arctan(2 * p - 1)
        out = pump_qubits(self.sigma(p, c), theta)
        assert abs(out.matrix[0, 1]) == pytest.approx(0.05 * np.sqrt(1.64), abs=1e-12)

    def test_closed_form_over_grid(self):
        rng = np.random.default_rng(14)
        for _ in range(6):
            p = rng.uniform(0.05, 0.95)
            c_max = np.sqrt(p * (1 - p))
            c = rng.uniform(0.0, 0.9) * c_max * np.exp(1j * rng.uniform(0, 2 * np.pi))
            state = self.sigma(p, c)
            for theta in np.linspace(0.0, 2 * np.pi, 25):
                out = pump_qubits(state, theta)
                want = c * (np.cos(theta) + (2 * p - 1) * np.sin(theta))
                assert abs(out.matrix[0, 1] - want) <= 1e-12

    def test_rejects_non_qubit(self):
        h3 = build_hamiltonian(
            [ZERO_ENERGY, energy(u=1), energy(u=2)], symbols=("u", "v")
        )
        with pytest.raises(ValueError, match="qubit"):
            pump_qubits(DensityMatrix.maximally_mixed(h3), 0.3)


class TestCounterexampleFamily:
    def test_single_copy_limit(self):
        tau = build_counterexample(1, 1e-6, 1e-6)
        assert trace_distance(tau, plus_state()) <= 5e-6

    def test_printed_value_m2(self):
        row = counterexample_row(2, 0.2, 0.01)
        assert row.f_formula == pytest.approx(0.3862, abs=1e-12)
        assert row.global_dist == pytest.approx(row.f_formula, abs=1e-9)

    def test_formula_matches_computed_distance(self):
        for m in range(1, 7):
            row = counterexample_row(m, 0.1, 0.02)
            assert row.global_dist == pytest.approx(row.f_formula, abs=1e-9)

    def test_large_m_trend(self):
        eps, delta = 0.2, 0.01
        limit = 2.0 * (1.0 - delta / 2.0)
        previous = -1.0
        for m in range(1, 12):
            f = counterexample_distance_formula(m, eps, delta)
            gap = limit - f
            assert gap == pytest.approx(
                2.0 * (1.0 - delta) * (1.0 - eps / 2.0) ** m, abs=1e-12
            )
            assert f > previous
            previous = f

    def test_good_local_small_correlation(self):
        for m in (2, 4):
            for eps in (0.05, 0.2):
                delta = 0.01
                row = counterexample_row(m, eps, delta)
                assert row.marginal_dist <= eps
                assert row.correlation <= 4.0 * delta

    def test_correlation_vanishes_without_mixing(self):
        row = counterexample_row(3, 0.2, 1e-9)
        assert row.correlation <= 5e-9

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            build_counterexample(0, 0.1, 0.1)
        with pytest.raises(ValueError):
            build_counterexample(2, 0.0, 0.1)
        with pytest.raises(ValueError):
            build_counterexample(2, 0.1, 1.0)


class TestCorrelatedCatalyst:
    def rho(self):
        return DensityMatrix(np.array([[0.7, 0.1], [0.1, 0.3]]), qubit_h())

    def contract_deviations(self, rho, bundle, channel):
        """Oracle-side contract check with loop partial traces."""
        n = bundle.register_dim
        final = apply(channel, tensor(rho, bundle.state))
        dims = [rho.dim] * n + [n]
        catalyst_back = loop_partial_trace(final.matrix, dims, list(range(1, n + 1)))
        cat_dev = np.max(np.abs(catalyst_back - bundle.state.matrix))
        system = loop_partial_trace(final.matrix, dims, [0])
        return final, cat_dev, system

    def test_identity_channel_returns_state_and_catalyst(self):
        rho = self.rho()
        for n in (2, 3):
            h_n = tensor_power_hamiltonian(rho.hamiltonian, n)
            bundle, channel = build_correlated_catalyst(rho, identity_channel(h_n))
            final, cat_dev, system = self.contract_deviations(rho, bundle, channel)
            assert cat_dev <= 1e-12
            assert np.max(np.abs(system - rho.matrix)) <= 1e-12
            assert verify_covariance(channel, VAL) <= 1e-12

    def test_swap_matches_identity_case(self):
        rho = self.rho()
        h2 = tensor_power_hamiltonian(rho.hamiltonian, 2)
        swap = np.zeros((4, 4), dtype=complex)
        for s in range(2):
            for a in range(2):
                swap[a * 2 + s, s * 2 + a] = 1.0
        bundle_swap, channel_swap = build_correlated_catalyst(
            rho, unitary_channel(swap, h2)
        )
        bundle_id, _ = build_correlated_catalyst(rho, identity_channel(h2))
        assert np.allclose(bundle_swap.state.matrix, bundle_id.state.matrix, atol=1e-14)
        _, cat_dev, system = self.contract_deviations(rho, bundle_swap, channel_swap)
        assert cat_dev <= 1e-12
        assert np.max(np.abs(system - rho.matrix)) <= 1e-12

    def test_random_three_copy_contracts(self):
        rho = self.rho()
        h3 = tensor_power_hamiltonian(rho.hamiltonian, 3)
        for seed in range(5):
            lam = random_covariant(h3, 2, seed=seed)
            bundle, channel = build_correlated_catalyst(rho, lam)
            final, cat_dev, system = self.contract_deviations(rho, bundle, channel)
            assert cat_dev <= 1e-12
            tau = apply(lam, tensor_power(rho, 3)).rebind(h3)
            dims = [2, 2, 2]
            expected = sum(
                loop_partial_trace(tau.matrix, dims, [i]) for i in range(3)
            ) / 3.0
            assert np.max(np.abs(system - expected)) <= 1e-12
            assert verify_covariance(channel, VAL) <= 1e-10

    def test_no_broadcasting_from_incoherent_input(self):
        h = qubit_h()
        rho = DensityMatrix.diagonal([0.6, 0.4], h)
        h2 = tensor_power_hamiltonian(h, 2)
        for seed in range(5):
            lam = random_covariant(h2, 2, seed=seed)
            bundle, channel = build_correlated_catalyst(rho, lam)
            final = apply(channel, tensor(rho, bundle.state))
            system = partial_trace(final, keep=(0,))
            assert coherence_magnitude(system) <= 1e-10

    def test_average_marginal_helper(self):
        rho = self.rho()
        tau = tensor_power(rho, 3)
        avg = average_single_copy_marginal(tau)
        assert np.allclose(avg.matrix, rho.matrix, atol=1e-14)

    def test_rejects_non_power_channel(self):
        h3 = build_hamiltonian(
            [ZERO_ENERGY, energy(u=1), energy(u=2)], symbols=("u", "v")
        )
        with pytest.raises(ValueError, match="tensor power"):
            build_correlated_catalyst(self.rho(), identity_channel(h3))

    def test_dimension_cap(self):
        rho = self.rho()
        h4 = tensor_power_hamiltonian(rho.hamiltonian, 4)
        with pytest.raises(ValueError, match="cap"):
            build_correlated_catalyst(rho, identity_channel(h4), dim_cap=60)


class TestRecombinationSchedule:
    def test_minimal_case(self):
        rounds = recombination_schedule(2, 0)
        assert len(rounds) == 1
        assert len(rounds[0].groups) == 1
        assert schedule_conversions(rounds) == 1

    def test_two_by_one(self):
        rounds = recombination_schedule(2, 1)
        assert len(rounds) == 2
        assert all(len(r.groups) == 2 for r in rounds)
        assert schedule_conversions(rounds) == 4
        assert schedule_is_fresh(rounds)

    def test_three_by_two(self):
        rounds = recombination_schedule(3, 2)
        assert len(rounds) == 3
        assert all(len(r.groups) == 9 for r in rounds)
        assert schedule_conversions(rounds) == 27
        assert schedule_is_fresh(rounds)

    def test_groups_partition_instances(self):
        for n_roles, k in ((2, 2), (3, 1), (4, 2)):
            rounds = recombination_schedule(n_roles, k)
            labels = set()
            for label_group in rounds[0].groups:
                labels.update(label_group)
            for rnd in rounds:
                for role in range(n_roles):
                    seen = [group[role] for group in rnd.groups]
                    assert sorted(seen) == sorted(labels)

    def test_offset_rule_in_later_rounds(self):
        rounds = recombination_schedule(3, 2)
        for rnd in rounds[1:]:
            pos = rnd.index - 2
            for group in rnd.groups:
                context = group[0][:pos] + group[0][pos + 1 :]
                values = []
                for j, label in enumerate(group, start=1):
                    assert label[:pos] + label[pos + 1 :] == context
                    values.append((label[pos] - j) % 3)
                assert len(set(values)) == 1

    def test_freshness_exhaustive_small_grid(self):
        for n_roles in (2, 3, 4):
            for k in range(0, 4):
                assert schedule_is_fresh(recombination_schedule(n_roles, k))

    def test_validation(self):
        with pytest.raises(ValueError):
            recombination_schedule(1, 2)
        with pytest.raises(ValueError):
            recombination_schedule(2, -1)


class TestRateCertificate:
    def test_unit_ratio(self):
        cert = rate_certificate(4, 2, 3)
        assert cert.achieved_ratio == Fraction(1)
        assert cert.copies_in == 4 * 2**3
        assert cert.copies_out == 4 * 2**3

    def test_double_ratio(self):
        assert rate_certificate(4, 2, 7).achieved_ratio == Fraction(2)

    def test_ratio_is_exact_quotient(self):
        for mu, n_roles, k in ((3, 2, 5), (5, 3, 2), (1, 4, 0)):
            cert = rate_certificate(mu, n_roles, k)
            assert cert.achieved_ratio == Fraction(cert.copies_out, cert.copies_in)

    def test_monotone_in_k(self):
        ratios = [rate_certificate(4, 2, k).achieved_ratio for k in range(6)]
        assert ratios == sorted(ratios)

    def test_min_k_for_target(self):
        assert min_k_for_rate(4, 10) == 39
        assert rate_certificate(4, 2, 39).achieved_ratio == Fraction(10)
        assert rate_certificate(4, 2, 38).achieved_ratio < 10
        assert min_k_for_rate(3, 2.5) == 7
        assert min_k_for_rate(5, Fraction(1, 10)) == 0


class TestMarginalCatalyticContract:
    def test_identity_protocol(self):
        h = qubit_h()
        xi = DensityMatrix(np.array([[0.6, 0.2], [0.2, 0.4]]), h)
        protocol = MarginalCatalystProtocol(
            channel=identity_channel(h),
            input_state=xi,
            catalysts=(),
            target=xi,
            epsilon=0.0,
        )
        report = marginal_catalytic_contract(protocol)
        assert report.catalyst_deviations == ()
        assert report.target_deviation == 0.0
        assert report.passed

    def test_perturbed_catalyst_flagged(self):
        h = qubit_h()
        flat_h = build_hamiltonian([ZERO_ENERGY, ZERO_ENERGY], symbols=("u", "v"))
        xi = DensityMatrix.diagonal([1.0, 0.0], h)
        cat = DensityMatrix.diagonal([0.7, 0.3], flat_h)
        phi = 0.2
        rot = np.array(
            [[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]], dtype=complex
        )
        u = np.kron(np.eye(2, dtype=complex), rot)
        pair_h = tensor(xi, cat).hamiltonian
        protocol = MarginalCatalystProtocol(
            channel=unitary_channel(u, pair_h),
            input_state=xi,
            catalysts=(cat,),
            target=xi,
            epsilon=0.0,
        )
        report = marginal_catalytic_contract(protocol)
        injected = nuclear_distance(rot @ cat.matrix @ rot.conj().T, cat.matrix)
        assert report.catalyst_deviations[0] == pytest.approx(injected, abs=1e-12)
        assert not report.passed

    def test_weak_qubit_as_zero_catalyst_protocol(self):
        h3 = build_hamiltonian(
            [ZERO_ENERGY, energy(u=1), energy(u=5)], symbols=("u", "v")
        )
        mat = np.array(
            [[0.5, 0.1, 0.0], [0.1, 0.3, 0.0], [0.0, 0.0, 0.2]], dtype=complex
        )
        xi = DensityMatrix(mat, h3)
        channel = weak_qubit_channel(h3, 0, 1)
        target = DensityMatrix(
            np.array([[0.7, 0.1], [0.1, 0.3]], dtype=complex), channel.out_h
        )
        protocol = MarginalCatalystProtocol(
            channel=channel, input_state=xi, catalysts=(), target=target, epsilon=0.0
        )
        report = marginal_catalytic_contract(protocol)
        assert report.target_deviation <= 1e-12
        assert report.passed

    def test_malformed_bundle_rejected(self):
        h = qubit_h()
        xi = DensityMatrix.maximally_mixed(h)
        protocol = MarginalCatalystProtocol(
            channel=identity_channel(h),
            input_state=xi,
            catalysts=(xi,),
            target=xi,
            epsilon=0.0,
        )
        with pytest.raises(ValueError, match="bundle"):
            marginal_catalytic_contract(protocol)
