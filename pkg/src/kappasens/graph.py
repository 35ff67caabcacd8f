"""Directed weighted graphs, edge-list I/O and strongly connected components.

Convention used everywhere in the package: the directed edge ``j -> i`` has
weight ``adjacency[i, j]`` (row = destination, column = source).  An edge
exists iff its weight is nonzero; weights may be negative.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._validation import check_adjacency, check_edge
from .exceptions import EdgeListParseError, GraphError

logger = logging.getLogger(__name__)


class DirectedEdge(NamedTuple):
    """Directed edge ``src -> dst``; its weight is ``adjacency[dst, src]``."""

    src: int
    dst: int

    def __str__(self):
        return f"{self.src}->{self.dst}"


class EdgeSet(tuple):
    """Ordered, duplicate-free tuple of :class:`DirectedEdge`."""

    def __new__(cls, edges: Iterable = ()):
        out, seen = [], set()
        for e in edges:
            e = DirectedEdge(int(e[0]), int(e[1]))
            if e.src == e.dst:
                raise GraphError(f"self-loop edge {e}")
            if e in seen:
                raise GraphError(f"duplicate edge {e} in edge set")
            seen.add(e)
            out.append(e)
        return super().__new__(cls, out)

    def validate(self, n):
        for e in self:
            check_edge(e, n)
        return self


@dataclass(frozen=True, eq=False)
class DirectedWeightedGraph:
    """Immutable dense signed digraph."""

    adjacency: np.ndarray
    labels: tuple | None = field(default=None)

    def __post_init__(self):
        A = check_adjacency(self.adjacency, copy=True)
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)
        if self.labels is not None and len(self.labels) != A.shape[0]:
            raise GraphError("labels length does not match vertex count")

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def weight(self, edge) -> float:
        src, dst = check_edge(edge, self.n)
        return float(self.adjacency[dst, src])

    def has_edge(self, edge) -> bool:
        return self.weight(edge) != 0.0

    def edges(self) -> EdgeSet:
        """Existing edges sorted by ``(src, dst)``."""
        dst, src = np.nonzero(self.adjacency)
        order = np.lexsort((dst, src))
        return EdgeSet(zip(src[order].tolist(), dst[order].tolist()))

    def weighted_edges(self):
        return [(e.src, e.dst, float(self.adjacency[e.dst, e.src])) for e in self.edges()]

    def in_degrees(self):
        return self.adjacency.sum(axis=1)

    def out_degrees(self):
        return self.adjacency.sum(axis=0)

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.adjacency, self.adjacency.T))

    def with_adjacency(self, A) -> "DirectedWeightedGraph":
        return DirectedWeightedGraph(A, labels=self.labels)

    def sha256(self) -> str:
        """Content hash of the adjacency (shape + raw float64 bytes)."""
        h = hashlib.sha256()
        h.update(np.asarray(self.adjacency.shape, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.adjacency, dtype="<f8").tobytes())
        return h.hexdigest()

    def to_dict(self):
        return {"n": self.n,
                "edges": [[s, d, w] for s, d, w in self.weighted_edges()]}

    @classmethod
    def from_dict(cls, data):
        n = int(data["n"])
        A = np.zeros((n, n))
        for s, d, w in data["edges"]:
            check_edge((s, d), n)
            A[int(d), int(s)] = float(w)
        return cls(A)

    @classmethod
    def from_edges(cls, n, weighted_edges):
        A = np.zeros((n, n))
        for item in weighted_edges:
            s, d = check_edge(item[:2], n)
            A[d, s] = float(item[2]) if len(item) > 2 else 1.0
        return cls(A)

    def __eq__(self, other):
        if not isinstance(other, DirectedWeightedGraph):
            return NotImplemented
        return np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash(self.sha256())

    def __repr__(self):
        m = int(np.count_nonzero(self.adjacency))
        return f"DirectedWeightedGraph(n={self.n}, edges={m})"


def apply_perturbation(g: DirectedWeightedGraph, F, eps: float) -> DirectedWeightedGraph:
    """Return the graph with ``eps`` added to the weight of every edge in ``F``.

    Edges in ``F`` need not exist in ``g``; absent edges are created.
    """
    F = EdgeSet(F).validate(g.n)
    A = np.array(g.adjacency)
    for e in F:
        A[e.dst, e.src] += eps
    return g.with_adjacency(A)


# -- edge-list I/O -------------------------------------------------------------

_SPLIT = re.compile(r"[,\s]+")
_N_DIRECTIVE = re.compile(r"^#\s*n\s*=\s*(\d+)\s*$")


@dataclass
class EdgeListInfo:
    labels: list
    dropped_self_loops: int = 0
    header: bool = False


def _is_number(tok):
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _label(tok):
    try:
        return int(tok)
    except ValueError:
        return tok


def load_edge_list(path, format=None, return_info=False):
    """Read ``src dst [weight]`` rows into a graph with labels relabelled 0..n-1.

    Fields may be separated by whitespace or commas (``format`` is accepted
    for symmetry with :func:`save_edge_list` but both separators are always
    understood).  ``#`` lines are comments; a ``# n=<k>`` comment declares
    the vertex count for integer-labelled files so isolated vertices
    survive a round trip.  Self-loop rows are dropped with a warning.
    """
    if format not in (None, "tsv", "csv"):
        raise ValueError(f"unknown edge-list format {format!r}")
    path = Path(path)
    rows, declared_n, header = [], None, False
    first_data = True
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = _N_DIRECTIVE.match(line)
                if m:
                    declared_n = int(m.group(1))
                continue
            toks = [t for t in _SPLIT.split(line) if t]
            if first_data:
                first_data = False
                if not _is_number(toks[0]):
                    header = True
                    continue
            if len(toks) not in (2, 3):
                raise EdgeListParseError(f"expected 'src dst [weight]', got {line!r}", lineno)
            if len(toks) == 3:
                try:
                    w = float(toks[2])
                except ValueError:
                    raise EdgeListParseError(f"bad weight {toks[2]!r}", lineno) from None
            else:
                w = 1.0
            rows.append((lineno, _label(toks[0]), _label(toks[1]), w))

    dropped = 0
    seen = {}
    kept = []
    for lineno, s, d, w in rows:
        if s == d:
            dropped += 1
            continue
        if (s, d) in seen:
            raise EdgeListParseError(
                f"duplicate edge {s}->{d} (first seen on line {seen[(s, d)]})", lineno)
        seen[(s, d)] = lineno
        kept.append((s, d, w))
    if dropped:
        msg = f"{path}: dropped {dropped} self-loop row(s)"
        logger.warning(msg)
        warnings.warn(msg, stacklevel=2)

    all_labels = {x for s, d, _ in kept for x in (s, d)}
    all_labels |= {x for _, s, d, _ in rows for x in (s, d)}
    if declared_n is not None and all(isinstance(x, int) and 0 <= x < declared_n for x in all_labels):
        labels = list(range(declared_n))
    else:
        try:
            labels = sorted(all_labels)
        except TypeError:
            labels = sorted(all_labels, key=str)
    if len(labels) < 2:
        raise EdgeListParseError(f"graph needs at least 2 vertices, found {len(labels)}")
    index = {lab: k for k, lab in enumerate(labels)}
    A = np.zeros((len(labels), len(labels)))
    for s, d, w in kept:
        A[index[d], index[s]] = w
    g = DirectedWeightedGraph(A, labels=tuple(labels))
    if return_info:
        return g, EdgeListInfo(labels=labels, dropped_self_loops=dropped, header=header)
    return g


def save_edge_list(g: DirectedWeightedGraph, path, format="tsv"):
    """Write existing edges sorted by ``(src, dst)``; weights use shortest repr."""
    sep = {"tsv": "\t", "csv": ","}[format]
    lines = [f"# n={g.n}"]
    lines += [f"{s}{sep}{d}{sep}{w!r}" for s, d, w in g.weighted_edges()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_graph_json(g: DirectedWeightedGraph, path):
    Path(path).write_text(json.dumps(g.to_dict()) + "\n", encoding="utf-8")


def load_graph_json(path) -> DirectedWeightedGraph:
    return DirectedWeightedGraph.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def load_graph(path) -> DirectedWeightedGraph:
    """Load a graph from ``.json`` or any edge-list file."""
    if str(path).endswith(".json"):
        return load_graph_json(path)
    fmt = "csv" if str(path).endswith(".csv") else None
    return load_edge_list(path, format=fmt)


# -- structure -------------------------------------------------------------------

def scc_labels(A):
    """Strong-component label per vertex (edge presence = nonzero weight)."""
    pattern = csr_matrix((np.asarray(A) != 0.0).astype(np.int8))
    return connected_components(pattern, directed=True, connection="strong")


def is_strongly_connected(A) -> bool:
    return scc_labels(A)[0] == 1


def induced_subgraph(g: DirectedWeightedGraph, nodes) -> DirectedWeightedGraph:
    nodes = [int(v) for v in nodes]
    if len(set(nodes)) != len(nodes):
        raise GraphError("duplicate vertices in node list")
    A = g.adjacency[np.ix_(nodes, nodes)]
    labels = tuple(g.labels[v] for v in nodes) if g.labels is not None else tuple(nodes)
    return DirectedWeightedGraph(A, labels=labels)


def largest_scc(g: DirectedWeightedGraph):
    """Induced subgraph on the largest strongly connected component.

    Ties are broken by the smallest vertex index in the component.  Returns
    ``(subgraph, mapping)`` where ``mapping`` maps old index to new index.
    """
    ncomp, lab = scc_labels(g.adjacency)
    best = None
    for c in range(ncomp):
        members = np.flatnonzero(lab == c)
        key = (-members.size, members.min())
        if best is None or key < best[0]:
            best = (key, members)
    members = best[1]
    if members.size < 2:
        raise GraphError("largest strongly connected component has fewer than 2 vertices")
    mapping = {int(old): new for new, old in enumerate(members)}
    return induced_subgraph(g, members), mapping
