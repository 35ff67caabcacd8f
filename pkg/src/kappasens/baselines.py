"""Structural baselines for budget-constrained strengthening."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Literal

import networkx as nx
import numpy as np

from .exceptions import ConfigError, GraphError
from .graph import DirectedEdge, DirectedWeightedGraph
from .modify import (
    EdgeChange,
    ModificationTrace,
    Step,
    _assumption_warning,
    _check_positive_weights,
    _existing,
    _require_state,
    _trial,
)

STRATEGIES = ("dir_ebc", "dir_dac", "random", "uniform")


def dir_ebc_scores(g: DirectedWeightedGraph) -> dict:
    """Directed edge betweenness with edge length ``1 / weight``.

    Sums ``sigma_st(e) / sigma_st`` over ordered pairs ``s != t``; unreachable
    pairs contribute nothing.
    """
    A = g.adjacency
    off = A[~np.eye(g.n, dtype=bool)]
    if np.any(off < 0):
        raise GraphError("edge betweenness requires non-negative weights")
    G = nx.DiGraph()
    G.add_nodes_from(range(g.n))
    for s, d, w in g.weighted_edges():
        G.add_edge(s, d, length=1.0 / w)
    ebc = nx.edge_betweenness_centrality(G, normalized=False, weight="length")
    return {DirectedEdge(s, d): float(ebc[(s, d)]) for s, d, _ in g.weighted_edges()}


def dir_dac_scores(g: DirectedWeightedGraph) -> dict:
    """``(d_out(j) - mean d_out) * (d_in(i) - mean d_in)`` for every edge ``j -> i``."""
    d_in = g.in_degrees()
    d_out = g.out_degrees()
    dev_in = d_in - d_in.mean()
    dev_out = d_out - d_out.mean()
    return {e: float(dev_out[e.src] * dev_in[e.dst]) for e in g.edges()}


@dataclass(frozen=True)
class BaselineConfig:
    budget: float = 10.0
    step: float = 0.1
    batch: int = 10
    tol: float = 1e-12
    seed: int = 0
    max_iter: int = 100000

    def __post_init__(self):
        if not (self.budget > 0 and self.step > 0 and self.tol > 0):
            raise ConfigError("budget, step and tol must be > 0")
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")


def _scores(strategy, g, rng):
    if strategy == "dir_ebc":
        return dir_ebc_scores(g)
    if strategy == "dir_dac":
        return dir_dac_scores(g)
    edges = g.edges()
    return dict(zip(edges, rng.random(len(edges)).tolist()))


def baseline_modify(g: DirectedWeightedGraph,
                    strategy: Literal["dir_ebc", "dir_dac", "random", "uniform"],
                    cfg: BaselineConfig = BaselineConfig()) -> ModificationTrace:
    """Run a structural baseline under the same budget as the guided methods.

    Scored strategies take the top-``batch`` edges by score, shuffle them and
    add ``alpha = min(step, budget_left)`` to the first edge that strictly
    raises kappa; if none does, ``alpha`` is halved.  ``uniform`` adds
    ``budget / |E|`` to every edge in a single unconditional pass.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown baseline {strategy!r}")
    _check_positive_weights(g)
    trace = ModificationTrace(g, f"baseline:{strategy}", config=asdict(cfg))
    state = _require_state(g)
    kappa = state.kappa
    B = np.array(g.adjacency)

    if strategy == "uniform":
        edges = g.edges()
        delta = cfg.budget / len(edges)
        changes = []
        for e in edges:
            old = float(B[e.dst, e.src])
            B[e.dst, e.src] = old + delta
            changes.append(EdgeChange(e.src, e.dst, old, float(B[e.dst, e.src])))
        k_new, report = _trial(B, g)
        trace.steps.append(Step(1, changes, kappa, k_new, delta, cfg.budget, 0.0,
                                _assumption_warning(report, 1)))
        trace.termination_reason = "single_pass"
        trace.final_graph = g.with_adjacency(B)
        return trace

    rng = np.random.default_rng(cfg.seed)
    left = cfg.budget
    for t in range(1, cfg.max_iter + 1):
        if left <= cfg.tol:
            trace.termination_reason = "budget_exhausted"
            break
        current = g.with_adjacency(B)
        scores = _scores(strategy, current, rng)
        ranked = sorted(scores, key=lambda e: (-scores[e], e.src, e.dst))[:cfg.batch]
        order = [ranked[p] for p in rng.permutation(len(ranked))]
        alpha, accepted = min(cfg.step, left), False
        while alpha > cfg.tol and not accepted:
            for e in order:
                Bt = B.copy()
                old = float(Bt[e.dst, e.src])
                Bt[e.dst, e.src] = old + alpha
                k_new, report = _trial(Bt, g)
                if k_new > kappa:
                    change = EdgeChange(e.src, e.dst, old, float(Bt[e.dst, e.src]))
                    left -= change.new - change.old
                    trace.steps.append(Step(t, [change], kappa, k_new, alpha,
                                            change.new - change.old, left,
                                            _assumption_warning(report, t)))
                    B, kappa, accepted = Bt, k_new, True
                    break
            if not accepted:
                alpha *= 0.5
        if not accepted:
            trace.termination_reason = "backtracking_failed"
            break
    else:
        trace.termination_reason = "exhausted_iterations"
    trace.final_graph = g.with_adjacency(B)
    return trace
