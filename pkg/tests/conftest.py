"""Shared helpers and independent oracles for the test suite."""

from __future__ import annotations

import random

import pytest

from flo.core import bottom
from flo.graph import node, out_types, run_to_stuck, set_inputs


def bfs_closure(edges, root, depth):
    """Oracle: nodes reachable from root within `depth` hops, by relaxation."""
    reached = {root}
    for _ in range(depth):
        reached = reached | {d for (s, d) in edges if s in reached}
    return frozenset(reached)


def batch_zset_join(a: dict, b: dict) -> dict:
    """Oracle: single-shot keywise cardinality product."""
    out = {}
    for k in set(a) & set(b):
        v = a[k] * b[k]
        if v != 0:
            out[k] = v
    return out


def run_graph(graph, inputs_tuple=None, budget=10_000):
    """Run a graph to stuck from bottoms; returns the final outputs."""
    if inputs_tuple is not None:
        graph = set_inputs(graph, inputs_tuple)
    outs = tuple(bottom(st.collection) for st in out_types(graph))
    _, outs, _ = run_to_stuck(graph, outs, budget=budget)
    return outs


def run_op(op, *buffers, budget=10_000):
    """Run a single operator to stuck; returns the final outputs."""
    return run_graph(node(op), tuple(buffers), budget=budget)


@pytest.fixture
def rng():
    return random.Random(20240811)
