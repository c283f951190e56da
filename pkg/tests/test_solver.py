"""Price-based solver: partitioning, residual, solve, verification."""

import dataclasses

import numpy as np
import pytest

import loadbal as lb

from conftest import make_network, random_network

ALPHA_ASYM = 4.0 / 3.25**2  # common sink price of the two-equal-server instance


class TestPartitionForPrices:
    def test_asymmetric_at_optimum(self, asymmetric_pair):
        partition, beta = lb.partition_for_prices(asymmetric_pair, ALPHA_ASYM, 0.0)
        assert partition.roles == (lb.NodeRole.ACTIVE_SOURCE, lb.NodeRole.SINK)
        assert beta == pytest.approx([0.75, 0.75], abs=1e-12)

    def test_wide_band_all_neutral(self, symmetric_pair):
        f_at_phi = symmetric_pair.nodes[0].delay.marginal_delay(0.5)
        partition, beta = lb.partition_for_prices(symmetric_pair, f_at_phi * 0.999, 10.0)
        assert set(partition.roles) == {lb.NodeRole.NEUTRAL}
        assert beta == pytest.approx([0.5, 0.5])

    def test_idle_source(self):
        # marginal delay at zero load is 10, far above the price band
        net = make_network([0.05, 1.0], [0.1, 4.0])
        partition, beta = lb.partition_for_prices(net, 0.4, 0.1)
        assert partition.roles[0] is lb.NodeRole.IDLE_SOURCE
        assert beta[0] == 0.0

    def test_tie_goes_neutral(self, symmetric_pair):
        f_at_phi = symmetric_pair.nodes[0].delay.marginal_delay(0.5)
        partition, _ = lb.partition_for_prices(symmetric_pair, f_at_phi, 0.0)
        assert set(partition.roles) == {lb.NodeRole.NEUTRAL}

    def test_unloaded_node_never_source(self):
        # the second node has nothing to ship, so a high zero-load marginal
        # delay parks it at neutral rather than idle source
        net = make_network([1.0, 0.0], [4.0, 0.2])
        partition, beta = lb.partition_for_prices(net, 0.3, 0.5)
        assert partition.roles[1] is lb.NodeRole.NEUTRAL
        assert beta[1] == 0.0


class TestFlowResidual:
    def test_root_at_known_alpha(self, asymmetric_pair):
        assert abs(lb.flow_residual(asymmetric_pair, ALPHA_ASYM, 0.0)) < 1e-9

    def test_bracket_ends(self, asymmetric_pair):
        f0 = min(n.delay.min_marginal_delay for n in asymmetric_pair.nodes)
        assert lb.flow_residual(asymmetric_pair, f0 * 1.0001, 0.0) <= 0.0
        assert lb.flow_residual(asymmetric_pair, 1e6, 0.0) > 0.0

    def test_strictly_increasing_above_min_marginal(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            net = random_network(rng, int(rng.integers(2, 5)))
            comm_price = float(rng.uniform(0.0, 0.5))
            floor = min(
                n.delay.marginal_delay(n.arrival_rate)
                for n in net.nodes
                if n.arrival_rate < n.delay.service_rate
            )
            pairs = np.sort(rng.uniform(floor * 1.0001, floor * 4 + 1.0, (100, 2)), axis=1)
            for a1, a2 in pairs:
                if a1 == a2:
                    continue
                r1 = lb.flow_residual(net, float(a1), comm_price)
                r2 = lb.flow_residual(net, float(a2), comm_price)
                assert r1 < r2

    def test_nondecreasing_globally(self):
        rng = np.random.default_rng(22)
        net = random_network(rng, 4)
        comm_price = 0.2
        alphas = np.sort(rng.uniform(0.0, 3.0, 200))
        values = [lb.flow_residual(net, float(a), comm_price) for a in alphas]
        assert all(v2 >= v1 for v1, v2 in zip(values, values[1:]))


class TestSolve:
    def test_symmetric_stays_local(self, symmetric_pair):
        solution = lb.solve(symmetric_pair)
        assert solution.allocation.transfer_rate == 0.0
        assert solution.allocation.rates == (0.5, 0.5)
        assert set(solution.partition.roles) == {lb.NodeRole.NEUTRAL}
        assert not solution.no_transfer_override

    def test_asymmetric_balances(self, asymmetric_pair):
        solution = lb.solve(asymmetric_pair)
        assert solution.allocation.rates == pytest.approx([0.75, 0.75], abs=1e-8)
        assert solution.allocation.transfer_rate == pytest.approx(0.75, abs=1e-8)
        assert solution.alpha == pytest.approx(0.37870, abs=1e-5)
        assert solution.partition.roles == (lb.NodeRole.ACTIVE_SOURCE, lb.NodeRole.SINK)
        assert solution.objective / 1.5 == pytest.approx(0.35769, abs=1e-5)
        assert solution.objective / 1.5 < 0.4  # beats keeping everything local

    def test_expensive_transfer_stays_local(self):
        net = make_network([1.5, 0.0], [4.0, 4.0], lb.ConstantCommDelay(0.2))
        solution = lb.solve(net)
        assert solution.allocation.rates == (1.5, 0.0)
        assert solution.allocation.transfer_rate == 0.0
        assert solution.no_transfer_override
        assert solution.interior_objective is not None
        assert solution.objective <= solution.interior_objective
        assert solution.objective == pytest.approx(0.6)  # 0.4 mean * 1.5 jobs/s

    def test_crossover_location(self):
        # no-transfer wins exactly when the flat transfer cost exceeds
        # 0.4 - 1/3.25; check both sides of the boundary
        t_star = 0.4 - 1 / 3.25
        below = lb.solve(make_network([1.5, 0.0], [4.0, 4.0], lb.ConstantCommDelay(t_star - 0.005)))
        above = lb.solve(make_network([1.5, 0.0], [4.0, 4.0], lb.ConstantCommDelay(t_star + 0.005)))
        assert below.allocation.transfer_rate > 0
        assert above.allocation.transfer_rate == 0.0

    def test_zero_comm_cost(self):
        net = make_network([1.5, 0.0], [4.0, 4.0], lb.ConstantCommDelay(0.0))
        solution = lb.solve(net)
        assert solution.allocation.rates == pytest.approx([0.75, 0.75], abs=1e-8)

    def test_load_dependent_channel(self):
        net = make_network([1.5, 0.0], [4.0, 4.0], lb.MM1ChannelCommDelay(0.02, 2.0))
        solution = lb.solve(net)
        report = lb.verify_optimality(net, solution)
        assert report.worst() < 1e-8
        assert 0.0 < solution.allocation.transfer_rate < 0.75
        assert solution.comm_price > 0.0

    def test_unloaded_slow_node_stays_idle(self):
        net = make_network([1.0, 0.0], [4.0, 0.05], lb.ConstantCommDelay(0.01))
        solution = lb.solve(net)
        assert solution.allocation.rates[1] == 0.0
        assert solution.partition.roles[1] is lb.NodeRole.NEUTRAL
        assert lb.verify_optimality(net, solution).worst() < 1e-8

    def test_overloaded_node_must_shed(self):
        net = make_network([3.0, 0.0], [2.0, 4.0], lb.ConstantCommDelay(0.05))
        solution = lb.solve(net)
        assert solution.allocation.transfer_rate > 1.0
        assert solution.allocation.rates[0] < 2.0  # below its own capacity now
        assert solution.allocation.rates[1] < 4.0
        assert lb.verify_optimality(net, solution).worst() < 1e-8

    def test_non_convergence_carries_best(self):
        net = make_network([1.5, 0.0], [4.0, 4.0], lb.MM1ChannelCommDelay(0.02, 2.0))
        with pytest.raises(lb.ConvergenceError) as info:
            lb.solve(net, lb.SolverConfig(max_outer=2))
        assert info.value.best is not None
        assert info.value.best.allocation.transfer_rate >= 0.0

    def test_determinism(self, asymmetric_pair):
        a = lb.solve(asymmetric_pair)
        b = lb.solve(asymmetric_pair)
        assert dataclasses.asdict(a) == dataclasses.asdict(b)

    def test_comm_cost_monotonicity(self):
        transfers = []
        for t in np.linspace(0.0, 0.18, 10):
            net = make_network([1.5, 0.0], [4.0, 4.0], lb.ConstantCommDelay(float(t)))
            transfers.append(lb.solve(net).allocation.transfer_rate)
        assert all(b <= a + 1e-12 for a, b in zip(transfers, transfers[1:]))

    def test_conservation_and_price_ordering(self):
        rng = np.random.default_rng(23)
        for _ in range(150):
            net = random_network(rng, int(rng.integers(2, 6)))
            solution = lb.solve(net)
            beta = np.asarray(solution.allocation.rates)
            phi = net.arrival_rates
            phi_total = net.total_arrival_rate
            lam = solution.allocation.transfer_rate
            sinks = solution.partition.sinks
            sources = solution.partition.sources
            assert abs(beta.sum() - phi_total) <= 1e-8 * max(phi_total, 1.0)
            assert abs(lam - sum(beta[i] - phi[i] for i in sinks)) <= 1e-8 * max(phi_total, 1.0)
            assert abs(lam - sum(phi[i] - beta[i] for i in sources)) <= 1e-8 * max(phi_total, 1.0)
            if lam > 0 and sinks:
                sink_top = max(net.nodes[i].delay.marginal_delay(beta[i]) for i in sinks)
                rest = [
                    net.nodes[i].delay.marginal_delay(min(beta[i], net.nodes[i].delay.service_rate * (1 - 1e-12)))
                    for i in range(len(net)) if i not in sinks
                ]
                if rest:
                    assert sink_top <= min(rest) * (1 + 1e-8) + 1e-12


class TestVerifyOptimality:
    def test_solution_passes(self, asymmetric_pair):
        solution = lb.solve(asymmetric_pair)
        report = lb.verify_optimality(asymmetric_pair, solution)
        assert report.worst() < 1e-8
        assert report.passed()

    def test_perturbed_sink_fails(self, asymmetric_pair):
        solution = lb.solve(asymmetric_pair)
        sink_rate = solution.allocation.rates[1] * 1.01
        perturbed = dataclasses.replace(
            solution,
            allocation=lb.Allocation(rates=(1.5 - sink_rate, sink_rate), transfer_rate=sink_rate),
        )
        report = lb.verify_optimality(asymmetric_pair, perturbed)
        assert report.sink_price > 1e-4
        assert not report.passed()

    def test_all_neutral_band(self, symmetric_pair):
        solution = lb.solve(symmetric_pair)
        f_at_phi = symmetric_pair.nodes[0].delay.marginal_delay(0.5)
        assert solution.alpha == pytest.approx(f_at_phi)
        assert lb.verify_optimality(symmetric_pair, solution).worst() < 1e-8

    def test_override_certificate(self):
        net = make_network([1.5, 0.0], [4.0, 4.0], lb.ConstantCommDelay(0.2))
        solution = lb.solve(net)
        report = lb.verify_optimality(net, solution)
        assert solution.no_transfer_override
        assert report.override_margin is not None
        assert report.override_margin >= 0.0
        assert report.worst() < 1e-8
