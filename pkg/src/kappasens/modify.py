"""Sensitivity-guided edge modification: weakening, delete / negative insert,
and budget-constrained strengthening.

Every algorithm works on a private copy of the adjacency and records each
accepted step in a :class:`ModificationTrace`.  Candidate ties are broken by
``(src, dst)`` so runs are deterministic functions of (graph, config, seed).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from .exceptions import ConfigError, GraphError
from .graph import DirectedEdge, DirectedWeightedGraph, EdgeSet
from .sensitivity import sensitivities
from .spectral import analyze, spectral_state

logger = logging.getLogger(__name__)

TERMINATIONS = ("exhausted_iterations", "empty_candidates", "backtracking_failed",
                "budget_exhausted", "single_pass")


# -- configuration -----------------------------------------------------------------

@dataclass(frozen=True)
class WeakenConfig:
    step: float = 0.2
    derivative_fraction: float = 0.1
    batch: int = 10
    choose_mode: Literal["topk", "randomk", "all"] = "topk"
    tau_w: float = 1e-4
    tol: float = 1e-12
    t_max: int = 40
    seed: int = 0
    fixed_step: bool = False
    threads: int = 1

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError("step must be > 0")
        if not self.derivative_fraction >= 0:
            raise ConfigError("derivative_fraction must be >= 0")
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")
        if self.choose_mode not in ("topk", "randomk", "all"):
            raise ConfigError(f"unknown choose_mode {self.choose_mode!r}")
        if not (self.tau_w > 0 and self.tol > 0):
            raise ConfigError("tau_w and tol must be > 0")
        if self.t_max < 0:
            raise ConfigError("t_max must be >= 0")


@dataclass(frozen=True)
class DiscreteConfig:
    op: Literal["delete", "addneg"] = "delete"
    choose_mode: Literal["sortrandomk", "randomk", "all"] = "sortrandomk"
    batch: int = 10
    tau_w: float = 1e-4
    tol: float = 1e-12
    t_max: int = 10
    omega_neg: float | None = None
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.op not in ("delete", "addneg"):
            raise ConfigError(f"unknown op {self.op!r}")
        if self.choose_mode not in ("sortrandomk", "randomk", "all"):
            raise ConfigError(f"unknown choose_mode {self.choose_mode!r}")
        if self.op == "addneg":
            if self.omega_neg is None or not self.omega_neg < 0:
                raise ConfigError("addneg requires omega_neg < 0")
        elif self.omega_neg is not None:
            raise ConfigError("omega_neg is only meaningful for op='addneg'")
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")
        if not (self.tau_w > 0 and self.tol > 0):
            raise ConfigError("tau_w and tol must be > 0")


@dataclass(frozen=True)
class BudgetConfig:
    budget: float = 10.0
    step: float = 0.1
    batch: int = 10
    choose_mode: Literal["topk", "randomk", "all"] = "topk"
    tol: float = 1e-12
    alloc: Literal["fixed", "guided"] = "guided"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not self.budget > 0:
            raise ConfigError("budget must be > 0")
        if not self.step > 0:
            raise ConfigError("step must be > 0")
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")
        if self.choose_mode not in ("topk", "randomk", "all"):
            raise ConfigError(f"unknown choose_mode {self.choose_mode!r}")
        if self.alloc not in ("fixed", "guided"):
            raise ConfigError(f"unknown alloc {self.alloc!r}")
        if not self.tol > 0:
            raise ConfigError("tol must be > 0")


def config_to_text(cfg) -> str:
    """Flat ``key = value`` text (values JSON-encoded) for any config dataclass."""
    return "".join(f"{k} = {json.dumps(v)}\n" for k, v in asdict(cfg).items())


def config_from_text(cls, text: str):
    """Inverse of :func:`config_to_text`; unknown keys are an error."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        raw = raw.strip()
        try:
            values[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            values[key.strip()] = raw
    unknown = set(values) - set(cls.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return cls(**values)


# -- trace --------------------------------------------------------------------------

@dataclass
class EdgeChange:
    src: int
    dst: int
    old: float
    new: float


@dataclass
class Step:
    iteration: int
    changes: list
    kappa_before: float
    kappa_after: float
    step_scale: float
    budget_spent: float | None = None
    budget_left: float | None = None
    warning: str | None = None


@dataclass
class ModificationTrace:
    initial_graph: DirectedWeightedGraph
    algorithm: str
    steps: list = field(default_factory=list)
    final_graph: DirectedWeightedGraph | None = None
    termination_reason: str = "exhausted_iterations"
    config: dict = field(default_factory=dict)

    @property
    def initial_kappa(self):
        return spectral_state(self.initial_graph, require=False).kappa if not self.steps \
            else self.steps[0].kappa_before

    def kappas(self):
        if not self.steps:
            return [self.initial_kappa]
        return [self.steps[0].kappa_before] + [s.kappa_after for s in self.steps]

    @property
    def final_kappa(self):
        return self.kappas()[-1]

    def edges_touched(self):
        return sorted({(c.src, c.dst) for s in self.steps for c in s.changes})

    def graphs(self):
        """The initial graph followed by the graph after each accepted step."""
        A = np.array(self.initial_graph.adjacency)
        yield self.initial_graph
        for s in self.steps:
            for c in s.changes:
                A[c.dst, c.src] = c.new
            yield self.initial_graph.with_adjacency(A)

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "config": self.config,
            "termination_reason": self.termination_reason,
            "initial_graph": self.initial_graph.to_dict(),
            "final_graph": (self.final_graph or self.initial_graph).to_dict(),
            "steps": [asdict(s) for s in self.steps],
        }

    @classmethod
    def from_dict(cls, data):
        steps = [Step(**{**s, "changes": [EdgeChange(**c) for c in s["changes"]]})
                 for s in data["steps"]]
        return cls(initial_graph=DirectedWeightedGraph.from_dict(data["initial_graph"]),
                   algorithm=data["algorithm"], steps=steps,
                   final_graph=DirectedWeightedGraph.from_dict(data["final_graph"]),
                   termination_reason=data["termination_reason"],
                   config=data.get("config", {}))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "kappa_before", "kappa_after", "n_edges_modified",
                    "step_scale", "budget_left"])
        for s in self.steps:
            w.writerow([s.iteration, repr(s.kappa_before), repr(s.kappa_after),
                        len(s.changes), repr(s.step_scale),
                        "" if s.budget_left is None else repr(s.budget_left)])
        return buf.getvalue()


# -- helpers ------------------------------------------------------------------------

def _trial(A, g0):
    """kappa and assumption verdict of a trial adjacency."""
    report, parts = analyze(g0.with_adjacency(A))
    kappa = float(parts["w"][1]) if parts is not None else -math.inf
    return kappa, report


def _existing(A, threshold, strict_positive=True):
    mask = A > threshold if strict_positive else np.abs(A) <= threshold
    np.fill_diagonal(mask, False)
    dst, src = np.nonzero(mask)
    order = np.lexsort((dst, src))
    return EdgeSet(zip(src[order].tolist(), dst[order].tolist()))


def _top_k(idx, magnitude, edges, k):
    """Indices of the ``k`` largest magnitudes, ties by ``(src, dst)``."""
    keyed = sorted(idx, key=lambda q: (-magnitude[q], edges[q].src, edges[q].dst))
    return keyed[:k]


def _select(idx, magnitude, edges, mode, k, rng):
    idx = list(idx)
    if mode == "all":
        return idx
    if mode in ("topk", "sortrandomk"):
        return _top_k(idx, magnitude, edges, k)
    if mode == "randomk":
        if len(idx) <= k:
            return idx
        pick = rng.choice(len(idx), size=k, replace=False)
        return [idx[p] for p in sorted(pick)]
    raise ConfigError(f"unknown choose_mode {mode!r}")


def _require_state(g):
    return spectral_state(g, require=True)


# -- Algorithm: iterative weakening ----------------------------------------------

def iterative_weakening(g: DirectedWeightedGraph, cfg: WeakenConfig = WeakenConfig()) -> ModificationTrace:
    """Weaken negatively sensitive edges with bisection backtracking.

    The guided decrement for a selected edge is
    ``min(sigma * (w + d_f * |d kappa| / d_max), w)``; with
    ``cfg.fixed_step`` every selected edge gets ``min(sigma, w)`` instead.
    """
    name = "weaken-fixed" if cfg.fixed_step else "weaken"
    trace = ModificationTrace(g, name, config=asdict(cfg))
    state = _require_state(g)
    rng = np.random.default_rng(cfg.seed)
    B = np.array(g.adjacency)
    kappa = state.kappa
    for t in range(1, cfg.t_max + 1):
        edges = _existing(B, cfg.tau_w)
        sens = sensitivities(state, edges, threads=cfg.threads)
        cand = [q for q in range(len(edges)) if sens.total[q] < 0]
        if not cand:
            trace.termination_reason = "empty_candidates"
            break
        mag = np.abs(sens.total)
        chosen = _select(cand, mag, edges, cfg.choose_mode, cfg.batch, rng)
        d_max = max(mag[q] for q in chosen)
        sigma, accepted = cfg.step, False
        while sigma > cfg.tol and not accepted:
            Bt = B.copy()
            changes = []
            for q in chosen:
                e = edges[q]
                w = B[e.dst, e.src]
                if w <= 0:
                    continue
                if cfg.fixed_step:
                    delta = min(sigma, w)
                else:
                    delta = min(sigma * (w + cfg.derivative_fraction * mag[q] / d_max), w)
                Bt[e.dst, e.src] = max(0.0, w - delta)
                changes.append(EdgeChange(e.src, e.dst, float(w), float(Bt[e.dst, e.src])))
            k_new, report = _trial(Bt, g)
            if report.passed and k_new > kappa:
                trace.steps.append(Step(t, changes, kappa, k_new, sigma))
                B, kappa, accepted = Bt, k_new, True
            else:
                sigma *= 0.5
        if not accepted:
            trace.termination_reason = "backtracking_failed"
            break
        state = _require_state(g.with_adjacency(B))
    else:
        trace.termination_reason = "exhausted_iterations"
    trace.final_graph = g.with_adjacency(B)
    return trace


# -- Algorithm: discrete delete / negative insertion ---------------------------------

def discrete_modify(g: DirectedWeightedGraph, cfg: DiscreteConfig) -> ModificationTrace:
    """At most one edge per iteration is deleted (set to 0) or inserted at ``omega_neg``."""
    trace = ModificationTrace(g, cfg.op, config=asdict(cfg))
    state = _require_state(g)
    rng = np.random.default_rng(cfg.seed)
    B = np.array(g.adjacency)
    kappa = state.kappa
    for t in range(1, cfg.t_max + 1):
        if cfg.op == "delete":
            edges = _existing(B, cfg.tau_w)
        else:
            edges = _existing(B, cfg.tau_w, strict_positive=False)
        sens = sensitivities(state, edges, threads=cfg.threads)
        cand = [q for q in range(len(edges)) if sens.total[q] < -cfg.tol]
        if not cand:
            trace.termination_reason = "empty_candidates"
            break
        chosen = _select(cand, np.abs(sens.total), edges, cfg.choose_mode, cfg.batch, rng)
        # shuffle from (src, dst) order so the same set always gets the same permutation
        chosen = sorted(chosen)
        chosen = [chosen[p] for p in rng.permutation(len(chosen))]
        accepted = False
        new_w = 0.0 if cfg.op == "delete" else float(cfg.omega_neg)
        for q in chosen:
            e = edges[q]
            Bt = B.copy()
            old = float(Bt[e.dst, e.src])
            Bt[e.dst, e.src] = new_w
            k_new, report = _trial(Bt, g)
            if k_new > kappa + cfg.tol and report.passed:
                trace.steps.append(Step(t, [EdgeChange(e.src, e.dst, old, new_w)],
                                        kappa, k_new, 1.0))
                B, kappa, accepted = Bt, k_new, True
                break
        if not accepted:
            trace.termination_reason = "backtracking_failed"
            break
        state = _require_state(g.with_adjacency(B))
    else:
        trace.termination_reason = "exhausted_iterations"
    trace.final_graph = g.with_adjacency(B)
    return trace


# -- Algorithm: budget-constrained strengthening -------------------------------------

def _check_positive_weights(g):
    A = g.adjacency
    off = A[~np.eye(g.n, dtype=bool)]
    if np.any(off < 0):
        raise GraphError("budget strengthening requires a positively weighted graph")


def _assumption_warning(report, t):
    if report.passed:
        return None
    msg = f"iteration {t}: accepted graph violates {', '.join(report.failures())}"
    logger.warning(msg)
    return msg


def _state_or_none(B, g):
    report, parts = analyze(g.with_adjacency(B))
    if parts is None:
        return None
    return spectral_state(g.with_adjacency(B), require=False)


def budget_strengthening(g: DirectedWeightedGraph, cfg: BudgetConfig = BudgetConfig()) -> ModificationTrace:
    """Spend ``cfg.budget`` on positively sensitive existing edges.

    ``alloc='fixed'`` splits each trial increment evenly over the selected
    edges, ``'guided'`` in proportion to their sensitivities.  Acceptance
    needs only a kappa increase; assumption violations are logged on the
    step as warnings.
    """
    _check_positive_weights(g)
    trace = ModificationTrace(g, f"strengthen-{cfg.alloc}", config=asdict(cfg))
    state = _require_state(g)
    rng = np.random.default_rng(cfg.seed)
    B = np.array(g.adjacency)
    kappa = state.kappa
    left = cfg.budget
    t = 0
    while True:
        if left <= cfg.tol:
            trace.termination_reason = "budget_exhausted"
            break
        t += 1
        edges = _existing(B, 0.0)
        sens = sensitivities(state, edges, threads=cfg.threads)
        cand = [q for q in range(len(edges)) if sens.total[q] > 0]
        if not cand:
            trace.termination_reason = "empty_candidates"
            break
        chosen = _select(cand, sens.total, edges, cfg.choose_mode, cfg.batch, rng)
        total_sens = float(sum(sens.total[q] for q in chosen))
        alpha, accepted = min(cfg.step, left), False
        while alpha > cfg.tol and not accepted:
            Bt = B.copy()
            changes = []
            for q in chosen:
                e = edges[q]
                if cfg.alloc == "fixed":
                    delta = alpha / len(chosen)
                else:
                    delta = alpha * sens.total[q] / total_sens
                old = float(B[e.dst, e.src])
                Bt[e.dst, e.src] = old + delta
                changes.append(EdgeChange(e.src, e.dst, old, float(Bt[e.dst, e.src])))
            k_new, report = _trial(Bt, g)
            if k_new > kappa:
                spent = float(sum(c.new - c.old for c in changes))
                left -= spent
                trace.steps.append(Step(t, changes, kappa, k_new, alpha, spent, left,
                                        _assumption_warning(report, t)))
                B, kappa, accepted = Bt, k_new, True
            else:
                alpha *= 0.5
        if not accepted:
            trace.termination_reason = "backtracking_failed"
            break
        state = _state_or_none(B, g)
        if state is None:
            trace.termination_reason = "backtracking_failed"
            break
    trace.final_graph = g.with_adjacency(B)
    return trace
