"""First-order edge sensitivities of kappa and gamma.

For an edge ``e = j -> i`` the Laplacian moves by ``e_i (e_i - e_j)^T`` and

    d_e kappa = xi_i y_i (y_i - y_j)  +  y^T diag(d_e xi) (L - kappa I) y
                 (directed cut energy)   (stationary redistribution)

with ``d_e xi`` the solution of ``L^T d = -xi_i (e_i - e_j)``, ``1^T d = 0``
obtained from the bordered factorization stored on the spectral state.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import AssumptionError, BranchAmbiguityError, ConfigError
from .graph import DirectedEdge, DirectedWeightedGraph, EdgeSet, apply_perturbation
from .spectral import (
    GammaState,
    SpectralState,
    build_laplacian,
    check_assumptions,
    gamma,
    gamma_value,
    kappa_of,
)

# columns per worker task
CHUNK = 64


@dataclass(frozen=True, eq=False)
class EdgeSensitivity:
    edge: DirectedEdge
    total: float
    cut_energy: float
    redistribution: float
    d_xi: np.ndarray

    def to_dict(self):
        return {"src": self.edge.src, "dst": self.edge.dst, "total": self.total,
                "cut_energy": self.cut_energy, "redistribution": self.redistribution}


@dataclass(frozen=True, eq=False)
class SetSensitivity:
    edge_set: EdgeSet
    total: float
    per_edge: tuple

    def to_dict(self):
        rows = sorted((s.to_dict() for s in self.per_edge),
                      key=lambda r: (r["total"], r["src"], r["dst"]))
        return {"total": self.total, "edges": rows}


class SensitivityArrays:
    """Vectorized sensitivities for many edges (no per-edge objects)."""

    def __init__(self, edges, total, cut_energy, redistribution, d_xi):
        self.edges = edges
        self.total = total
        self.cut_energy = cut_energy
        self.redistribution = redistribution
        self.d_xi = d_xi            # shape (n, q)

    def __len__(self):
        return len(self.edges)

    def items(self):
        for k, e in enumerate(self.edges):
            yield EdgeSensitivity(e, float(self.total[k]), float(self.cut_energy[k]),
                                  float(self.redistribution[k]), self.d_xi[:, k].copy())


def _gather(G, src, dst, scale, threads):
    # column k is scale[k] * (G[:, src[k]] - G[:, dst[k]]); elementwise, so the
    # result does not depend on how columns are split across threads
    q = src.size
    out = np.empty((G.shape[0], q))

    def fill(b):
        a, z = b
        out[:, a:z] = (G[:, src[a:z]] - G[:, dst[a:z]]) * scale[a:z]

    bounds = [(a, min(a + CHUNK, q)) for a in range(0, q, CHUNK)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, bounds))
    else:
        for b in bounds:
            fill(b)
    return out


def sensitivities(state: SpectralState, edges, factorization=None, threads=1):
    """Sensitivities of kappa for every edge in ``edges`` (order preserved)."""
    fac = factorization if factorization is not None else state.factorization
    fac.check(state.graph_hash)
    edges = EdgeSet(edges).validate(state.n)
    n, q = state.n, len(edges)
    if q == 0:
        z = np.zeros(0)
        return SensitivityArrays(edges, z, z, z, np.zeros((n, 0)))
    src = np.fromiter((e.src for e in edges), dtype=np.intp, count=q)
    dst = np.fromiter((e.dst for e in edges), dtype=np.intp, count=q)
    xi, y = state.xi, state.y
    # the right-hand side for j -> i is xi_i (e_j - e_i), so every d_xi is a
    # difference of two columns of the bordered inverse
    G = fac.inverse_block()
    d_xi = _gather(G, src, dst, xi[dst], max(1, int(threads)))
    cut = xi[dst] * y[dst] * (y[dst] - y[src])
    w = y * (state.laplacian @ y - state.kappa * y)
    u = w @ G
    redist = xi[dst] * (u[src] - u[dst])
    return SensitivityArrays(edges, cut + redist, cut, redist, d_xi)


def kappa_sensitivity_edge(state: SpectralState, edge, factorization=None) -> EdgeSensitivity:
    arr = sensitivities(state, [edge], factorization=factorization)
    return next(arr.items())


def kappa_sensitivity_set(state: SpectralState, F, factorization=None, threads=1) -> SetSensitivity:
    """Per-edge sensitivities and their sum over the edge set ``F``."""
    arr = sensitivities(state, F, factorization=factorization, threads=threads)
    per_edge = tuple(arr.items())
    return SetSensitivity(arr.edges, float(sum(s.total for s in per_edge)), per_edge)


def skew_matrix(state: SpectralState) -> np.ndarray:
    """``C = Xi L - L^T Xi`` (zero iff detailed balance holds)."""
    XL = state.xi[:, None] * state.laplacian
    return XL - XL.T


def redistribution_via_cd(state: SpectralState, d_xi) -> float:
    """Redistribution term written as ``0.5 * y^T D C y`` with ``D = diag(d_xi / xi)``."""
    d_xi = np.asarray(d_xi, dtype=float)
    Cy = skew_matrix(state) @ state.y
    return float(0.5 * np.sum((d_xi / state.xi) * state.y * Cy))


def sensitivity_matrix(state: SpectralState, threads=1) -> np.ndarray:
    """``S[i, j] = d kappa / d a_ij`` for every ordered pair (diagonal zero)."""
    n = state.n
    edges = [(j, i) for j in range(n) for i in range(n) if i != j]
    arr = sensitivities(state, edges, threads=threads)
    S = np.zeros((n, n))
    for k, (j, i) in enumerate(edges):
        S[i, j] = arr.total[k]
    return S


def gamma_sensitivity(gamma_state: GammaState, F) -> float:
    """``sum over j->i in F of Re(conj(p_i) (x_i - x_j))``."""
    x, p = gamma_state.x, gamma_state.p
    if not gamma_state.margin > gamma_state.tol:
        raise BranchAmbiguityError(
            f"gamma branch is not locally unique (margin {gamma_state.margin:.3e})",
            margin=gamma_state.margin)
    F = EdgeSet(F).validate(x.size)
    total = 0.0
    for e in F:
        i, j = e.dst, e.src
        total += float(np.real(np.conj(p[i]) * (x[i] - x[j])))
    return total


# -- finite-difference oracle ---------------------------------------------------------

@dataclass(frozen=True)
class FDResult:
    analytic: float
    numeric: float
    rel_err: float


def _kappa_checked(g, side):
    report = check_assumptions(g)
    fails = report.failures()
    if fails:
        raise AssumptionError(f"{side} perturbation violates {fails[0]}", assumption=fails[0],
                              report=report)
    return kappa_of(g)


def _gamma_checked(g, side):
    L = build_laplacian(g)
    try:
        return gamma(L).gamma
    except (AssumptionError, BranchAmbiguityError) as exc:
        raise type(exc)(f"{side} perturbation: {exc}") from exc


def finite_difference_check(g: DirectedWeightedGraph, F, h=1e-5, quantity="kappa",
                            state: SpectralState | None = None) -> FDResult:
    """Compare the analytic derivative along ``F`` with a central difference."""
    if not h > 0:
        raise ConfigError(f"finite-difference step must be positive, got {h!r}")
    F = EdgeSet(F).validate(g.n)
    if quantity == "kappa":
        from .spectral import spectral_state
        st = state if state is not None else spectral_state(g)
        analytic = kappa_sensitivity_set(st, F).total
        q_plus = _kappa_checked(apply_perturbation(g, F, h), "+h")
        q_minus = _kappa_checked(apply_perturbation(g, F, -h), "-h")
    elif quantity == "gamma":
        analytic = gamma_sensitivity(gamma(build_laplacian(g)), F)
        q_plus = _gamma_checked(apply_perturbation(g, F, h), "+h")
        q_minus = _gamma_checked(apply_perturbation(g, F, -h), "-h")
    else:
        raise ConfigError(f"unknown quantity {quantity!r}")
    numeric = (q_plus - q_minus) / (2 * h)
    rel = abs(numeric - analytic) / max(abs(analytic), 1e-12)
    return FDResult(float(analytic), float(numeric), float(rel))


def kappa_sweep(g: DirectedWeightedGraph, F, eps_values):
    """kappa(eps) along the perturbation direction ``F`` (NaN where M is undefined)."""
    F = EdgeSet(F).validate(g.n)
    return np.array([kappa_of(apply_perturbation(g, F, float(e))) for e in eps_values])


__all__ = [
    "EdgeSensitivity", "SetSensitivity", "SensitivityArrays", "FDResult",
    "sensitivities", "kappa_sensitivity_edge", "kappa_sensitivity_set",
    "redistribution_via_cd", "skew_matrix", "sensitivity_matrix",
    "gamma_sensitivity", "finite_difference_check", "kappa_sweep", "gamma_value",
]
