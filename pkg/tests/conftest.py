import pytest

from routepool import (
    DemandScheme,
    DepotScheme,
    DistributionSpec,
    DistributionTag,
    Instance,
    Node,
    Problem,
    build_base,
)


def tsp_instance(coords):
    nodes = tuple(Node(i, x, y) for i, (x, y) in enumerate(coords))
    return Instance(Problem.TSP, nodes)


def cvrp_instance(depot, customers, capacity):
    """customers: iterable of (x, y, demand)."""
    nodes = [Node(0, depot[0], depot[1], 0)]
    nodes += [Node(i + 1, x, y, q) for i, (x, y, q) in enumerate(customers)]
    return Instance(Problem.CVRP, tuple(nodes), capacity=capacity)


UNIFORM_TSP = DistributionSpec(DistributionTag.UNIFORM)
UNIFORM_CVRP = DistributionSpec(
    DistributionTag.UNIFORM, DemandScheme.UNIFORM_1_9, DepotScheme.RANDOM
)
X_RC_CVRP = DistributionSpec(
    DistributionTag.X_RANDOM_CLUSTERED, DemandScheme.UNITARY, DepotScheme.RANDOM
)


@pytest.fixture(scope="session")
def tsp_pool():
    return build_base(UNIFORM_TSP, 60, master_seed=1234)


@pytest.fixture(scope="session")
def cvrp_pool():
    return build_base(UNIFORM_CVRP, 60, master_seed=4321)
