"""Shared instance builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

import loadbal as lb


def mm1_node(name: str, arrival: float, service: float) -> lb.Node:
    return lb.Node(id=name, arrival_rate=arrival, delay=lb.MM1NodeDelay(service_rate=service))


def make_network(arrivals, services, comm=None) -> lb.Network:
    comm = comm if comm is not None else lb.ConstantCommDelay(0.05)
    nodes = [mm1_node(f"n{i}", float(a), float(s)) for i, (a, s) in enumerate(zip(arrivals, services))]
    return lb.Network(nodes, comm)


@pytest.fixture
def asymmetric_pair() -> lb.Network:
    """Two equal servers, all load arriving at the first; cheap interconnect."""
    return make_network([1.5, 0.0], [4.0, 4.0], lb.ConstantCommDelay(0.05))


@pytest.fixture
def symmetric_pair() -> lb.Network:
    return make_network([0.5, 0.5], [2.0, 2.0], lb.ConstantCommDelay(0.05))


def random_comm(rng: np.random.Generator, total_arrival: float):
    kind = int(rng.integers(0, 3))
    if kind == 0:
        return lb.ConstantCommDelay(float(rng.uniform(0.0, 0.3)))
    if kind == 1:
        capacity = float(rng.uniform(0.5, 3.0) * max(total_arrival, 0.5))
        return lb.MM1ChannelCommDelay(float(rng.uniform(0.01, 0.1)), capacity)
    head = float(rng.uniform(0.0, 0.05)) if rng.random() < 0.3 else 0.0
    return lb.PolynomialCommDelay((head, float(rng.uniform(0.0, 0.2)), float(rng.uniform(0.0, 0.05))))


def random_network(rng: np.random.Generator, n: int) -> lb.Network:
    """Stable instance: service rates in [0.5, 10], arrivals capped at 80% of capacity."""
    services = rng.uniform(0.5, 10.0, n)
    arrivals = rng.uniform(0.0, services)
    if arrivals.sum() > 0.8 * services.sum():
        arrivals *= 0.8 * services.sum() / arrivals.sum()
    comm = random_comm(rng, float(arrivals.sum()))
    return make_network(arrivals, services, comm)


def headroom_network(rng: np.random.Generator, n: int, comm=None) -> lb.Network:
    """Instance where any flow from :func:`random_feasible_flow` stays feasible.

    Service rates exceed each node's arrivals plus more than half the total,
    which bounds any implied processing rate away from saturation.
    """
    arrivals = rng.uniform(0.0, 2.0, n)
    services = arrivals + arrivals.sum() * rng.uniform(0.6, 1.5, n) + 0.1
    comm = comm if comm is not None else random_comm(rng, float(arrivals.sum()))
    return make_network(arrivals, services, comm)


def random_feasible_flow(rng: np.random.Generator, network: lb.Network) -> lb.FlowMatrix:
    """Random flow keeping every implied processing rate strictly stable.

    Row sums stay below half the node's arrivals, so implied rates are
    positive; relays happen naturally whenever a receiving node also sends.
    """
    n = len(network)
    phi = network.arrival_rates
    x = np.zeros((n, n))
    for i in range(n):
        if phi[i] == 0:
            continue
        weights = rng.uniform(0.0, 1.0, n) * (rng.uniform(0.0, 1.0, n) < 0.5)
        weights[i] = 0.0
        total = weights.sum()
        if total > 0:
            x[i] = weights / total * phi[i] * rng.uniform(0.0, 0.5)
    return lb.FlowMatrix(x)
