import math

import numpy as np
import pytest

import chasescape as cs


def make_graph(positions, marks, radius, dim=None, side=20.0,
               topology=cs.Topology.BOUNDED):
    """Hand-built Gilbert graph; origin must be listed first at the zero vector."""
    positions = np.asarray(positions, dtype=np.float64)
    dim = positions.shape[1] if dim is None else dim
    box = cs.BoxSpec(dim=dim, side=side, topology=topology)
    config = cs.configuration_from_points(box, positions, marks)
    return cs.build_gilbert(config, radius)


def wis_path(radius=1.1):
    """w(W) - o(I) - b(S): knight at -1, origin, susceptible at +1 (d=1)."""
    return make_graph([[0.0], [-1.0], [1.0]],
                      [cs.Mark.SUSCEPTIBLE, cs.Mark.WHITE_KNIGHT, cs.Mark.SUSCEPTIBLE],
                      radius, side=10.0)


def outcomes_equal(a, b):
    """SimOutcome equality with None-safe extinction times."""
    return (a.outcome is b.outcome and a.total_ever_infected == b.total_ever_infected
            and a.extinction_time == b.extinction_time
            and a.max_displacement == b.max_displacement
            and a.events == b.events and a.stop_reason is b.stop_reason)


@pytest.fixture
def rng():
    return np.random.default_rng(20240904)
