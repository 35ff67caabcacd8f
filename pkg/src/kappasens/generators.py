"""Seeded graph generators for the experiments."""

from __future__ import annotations

import numpy as np

from .exceptions import GraphError
from .graph import DirectedWeightedGraph, is_strongly_connected

#: 1-based layers of the 10-node layered test graph (top to bottom)
LAYERS = ((1,), (2, 3), (4, 5, 6), (7, 8, 9, 10))

#: inter-layer backward edges (lower layer -> upper layer), 1-based
LAYERED_BACKWARD = (
    (2, 1), (3, 1),
    (4, 2), (5, 2), (5, 3), (6, 3),
    (7, 4), (8, 4), (8, 5), (9, 5), (9, 6), (10, 6),
)

LAYERED_BACKWARD_WEIGHT = 0.3


def generate_layered_example(backward_weight=LAYERED_BACKWARD_WEIGHT) -> DirectedWeightedGraph:
    """Ten-node layered digraph with weak backward (upward) edges.

    Each backward edge ``u -> w`` has a unit-weight forward twin ``w -> u``;
    vertices inside a layer are joined left to right by unit-weight
    directed edges.  Vertex ``k`` of the 1-based drawing is index ``k - 1``.
    """
    A = np.zeros((10, 10))
    for src, dst in LAYERED_BACKWARD:
        A[dst - 1, src - 1] = backward_weight
        A[src - 1, dst - 1] = 1.0
    for layer in LAYERS:
        for a, b in zip(layer, layer[1:]):
            A[b - 1, a - 1] = 1.0
    return DirectedWeightedGraph(A)


def _retry(build, n, p, seed, max_tries):
    # retries continue one seeded stream so nearby seeds give distinct graphs
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        A = build(rng)
        if is_strongly_connected(A):
            return DirectedWeightedGraph(A)
    raise GraphError(
        f"no strongly connected graph with n={n}, p={p} after {max_tries} tries")


def generate_er(n, p, w_low=0.6, w_high=1.4, seed=0, max_tries=1000) -> DirectedWeightedGraph:
    """Directed Erdos-Renyi graph, redrawn from the seeded stream until strongly connected."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if w_low > w_high:
        raise ValueError("w_low must not exceed w_high")
    if n < 2:
        raise GraphError("n must be at least 2")

    def build(rng):
        mask = rng.random((n, n)) < p
        np.fill_diagonal(mask, False)
        return np.where(mask, rng.uniform(w_low, w_high, size=(n, n)), 0.0)

    return _retry(build, n, p, seed, max_tries)


def small_world_lattice(n):
    """Base out-neighbour lists: ``i -> i+1, i-1, i+2, i+3`` (mod n)."""
    return [[(i + d) % n for d in (1, -1, 2, 3)] for i in range(n)]


def generate_small_world(n, rewire_p=0.2, w_low=0.6, w_high=1.4, seed=0,
                         max_tries=1000) -> DirectedWeightedGraph:
    """Directed ring lattice (both nearest neighbours, forward 2nd/3rd) with rewiring.

    Every base edge keeps its source; with probability ``rewire_p`` its
    destination is redrawn uniformly among vertices that are neither the
    source nor already one of its out-neighbours.
    """
    if n < 8:
        raise GraphError("small-world generator needs n >= 8")
    if not 0 <= rewire_p < 1:
        raise ValueError(f"rewire_p must lie in [0, 1), got {rewire_p}")
    if w_low > w_high:
        raise ValueError("w_low must not exceed w_high")

    def build(rng):
        out = small_world_lattice(n)
        for i in range(n):
            for slot in range(len(out[i])):
                if rng.random() < rewire_p:
                    taken = set(out[i]) | {i}
                    choices = [v for v in range(n) if v not in taken]
                    if choices:
                        out[i][slot] = choices[rng.integers(len(choices))]
        A = np.zeros((n, n))
        for i in range(n):
            for j in out[i]:
                A[j, i] = 1.0
        W = rng.uniform(w_low, w_high, size=(n, n))
        return np.where(A != 0.0, W, 0.0)

    return _retry(build, n, rewire_p, seed, max_tries)


def complete_graph(n, weight=1.0) -> DirectedWeightedGraph:
    A = np.full((n, n), float(weight))
    np.fill_diagonal(A, 0.0)
    return DirectedWeightedGraph(A)


def directed_cycle(n, weight=1.0) -> DirectedWeightedGraph:
    """``i -> i+1 (mod n)``."""
    A = np.zeros((n, n))
    for i in range(n):
        A[(i + 1) % n, i] = weight
    return DirectedWeightedGraph(A)


def random_undirected(n, p, w_low=0.6, w_high=1.4, seed=0, max_tries=1000) -> DirectedWeightedGraph:
    """Symmetric weighted graph (connected) for undirected checks."""

    def build(rng):
        upper = np.triu(rng.random((n, n)) < p, 1)
        W = np.triu(rng.uniform(w_low, w_high, size=(n, n)), 1) * upper
        return W + W.T

    return _retry(build, n, p, seed, max_tries)
