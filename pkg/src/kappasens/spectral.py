"""Stationary vector, generalized algebraic connectivity and assumption checks.

For a Laplacian ``L = D_in - A`` with positive normalized left null vector
``xi`` the symmetrized matrix

    M = Xi^{-1/2} (Xi L + L^T Xi) / 2 Xi^{-1/2},     Xi = diag(xi)

is real symmetric; ``kappa = lambda_2(M)``.  ``y = Xi^{-1/2} v`` for the unit
eigenvector ``v`` solves the generalized problem ``sym(Xi L) y = kappa Xi y``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .exceptions import AssumptionError, BranchAmbiguityError, StaleFactorizationError
from .graph import DirectedWeightedGraph

#: relative tolerance for "zero" and "simple" eigenvalue decisions
EIG_RTOL = 1e-8


def build_laplacian(g) -> np.ndarray:
    """``L = diag(in-degree) - A`` with exactly vanishing row sums."""
    A = g.adjacency if isinstance(g, DirectedWeightedGraph) else np.asarray(g, dtype=float)
    L = -A.astype(float, copy=True)
    # off-diagonal row sum of -A, so L @ 1 is zero in the stored weights
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=1))
    return L


def _scale(mat):
    return max(1.0, float(np.linalg.norm(mat)))


def _fix_sign(v):
    k = int(np.argmax(np.abs(v)))  # argmax returns lowest index on ties
    return -v if v[k] < 0 else v


class BorderedFactorization:
    """LU factorization of ``H = [[L^T, 1], [1^T, 0]]`` reused for many solves.

    Solving ``H (u; mu) = (b; c)`` gives the unique ``u`` with
    ``L^T u = b`` (for ``1^T b = 0``) and ``1^T u = c``.
    """

    def __init__(self, L, graph_hash=None):
        L = np.asarray(L, dtype=float)
        n = L.shape[0]
        H = np.zeros((n + 1, n + 1))
        H[:n, :n] = L.T
        H[:n, n] = 1.0
        H[n, :n] = 1.0
        self.n = n
        self.graph_hash = graph_hash
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            try:
                self._lu = sla.lu_factor(H, check_finite=True)
            except (sla.LinAlgWarning, np.linalg.LinAlgError, ValueError) as exc:
                raise AssumptionError(
                    f"bordered stationary system is singular ({exc}); "
                    "A1 violated or graph disconnected", assumption="A1") from None
        diag = np.abs(np.diag(self._lu[0]))
        if diag.min() <= np.finfo(float).eps * diag.max() * (n + 1):
            raise AssumptionError(
                "bordered stationary system is numerically singular; "
                "A1 violated or graph disconnected", assumption="A1")

    def check(self, graph_hash):
        if self.graph_hash is not None and graph_hash != self.graph_hash:
            raise StaleFactorizationError(
                "factorization was built for a different graph; recompute the spectral state")

    def solve(self, rhs, constraint=0.0):
        """Solve for one or many right-hand sides (columns of ``rhs``)."""
        rhs = np.asarray(rhs, dtype=float)
        one_d = rhs.ndim == 1
        if one_d:
            rhs = rhs[:, None]
        full = np.empty((self.n + 1, rhs.shape[1]))
        full[:self.n] = rhs
        full[self.n] = constraint
        out = sla.lu_solve(self._lu, full, check_finite=False)[:self.n]
        return out[:, 0] if one_d else out

    def inverse_block(self):
        """Leading ``n x n`` block of ``H^{-1}`` (cached)."""
        if getattr(self, "_inv", None) is None:
            self._inv = self.solve(np.eye(self.n))
        return self._inv


def stationary_vector(L, factorization=None) -> np.ndarray:
    """Normalized left null vector of ``L`` from the bordered system.

    Raises :class:`AssumptionError` when the bordered system is singular (A1)
    or when some entry is not strictly positive (A2).
    """
    L = np.asarray(L, dtype=float)
    fac = factorization or BorderedFactorization(L)
    xi = fac.solve(np.zeros(L.shape[0]), constraint=1.0)
    if not np.all(np.isfinite(xi)):
        raise AssumptionError("stationary solve produced non-finite values; A1 violated",
                              assumption="A1")
    resid = np.linalg.norm(L.T @ xi)
    if resid > 1e-10 * _scale(L):
        raise AssumptionError(f"stationary residual {resid:.3e} too large; A1 violated",
                              assumption="A1")
    if np.any(xi <= 0):
        raise AssumptionError(
            f"stationary vector has non-positive entry (min {xi.min():.3e}); A2 violated",
            assumption="A2")
    return xi


def symmetrized_matrix(L, xi) -> np.ndarray:
    """``M = Xi^{-1/2} (Xi L + L^T Xi)/2 Xi^{-1/2}``, exactly symmetric."""
    L = np.asarray(L, dtype=float)
    XL = xi[:, None] * L
    P = 0.5 * (XL + XL.T)
    s = 1.0 / np.sqrt(xi)
    M = s[:, None] * P * s[None, :]
    return 0.5 * (M + M.T)


def generalized_connectivity(L, xi, check=True):
    """Return ``(kappa, v, y)``; with ``check`` raise on an A3 violation."""
    M = symmetrized_matrix(L, xi)
    w, V = np.linalg.eigh(M)
    if check:
        a3 = _a3_report(w, M)
        if not a3.passed:
            raise AssumptionError(f"A3 violated: {a3.reason}", assumption="A3")
    v = _fix_sign(V[:, 1])
    return float(w[1]), v, v / np.sqrt(xi)


# -- assumption report -------------------------------------------------------------

@dataclass(frozen=True)
class A1Report:
    passed: bool
    zero_abs: float          # |lambda| of the eigenvalue treated as zero
    zero_gap: float          # second-smallest |lambda|
    min_real_part: float     # min Re(lambda) over the nonzero eigenvalues
    reason: str = ""


@dataclass(frozen=True)
class A2Report:
    passed: bool
    min_xi: float
    reason: str = ""


@dataclass(frozen=True)
class A3Report:
    passed: bool
    lambda1: float
    kappa: float
    gap: float               # lambda_3(M) - lambda_2(M); inf for n = 2
    reason: str = ""


@dataclass(frozen=True)
class AssumptionReport:
    a1: A1Report
    a2: A2Report
    a3: A3Report

    @property
    def passed(self) -> bool:
        return self.a1.passed and self.a2.passed and self.a3.passed

    def failures(self):
        return [name for name, r in (("A1", self.a1), ("A2", self.a2), ("A3", self.a3))
                if not r.passed]

    def raise_if_failed(self):
        fails = self.failures()
        if fails:
            r = getattr(self, fails[0].lower())
            raise AssumptionError(f"{fails[0]} violated: {r.reason}", assumption=fails[0],
                                  report=self)

    def to_dict(self):
        out = {}
        for name in ("a1", "a2", "a3"):
            r = getattr(self, name)
            out[name] = {k: getattr(r, k) for k in r.__dataclass_fields__}
        return out


def _a1_report(L) -> A1Report:
    try:
        lam = sla.eigvals(L, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise AssumptionError(f"eigensolver failed on L: {exc}", assumption="A1") from exc
    tol = EIG_RTOL * _scale(L)
    order = np.argsort(np.abs(lam), kind="stable")
    lam = lam[order]
    zero_abs = float(abs(lam[0]))
    zero_gap = float(abs(lam[1]))
    min_re = float(lam[1:].real.min())
    if zero_abs > tol:
        return A1Report(False, zero_abs, zero_gap, min_re, "no eigenvalue at zero")
    if zero_gap <= tol:
        return A1Report(False, zero_abs, zero_gap, min_re, "zero eigenvalue is not simple")
    if min_re <= tol:
        return A1Report(False, zero_abs, zero_gap, min_re,
                        "a nonzero eigenvalue has non-positive real part")
    return A1Report(True, zero_abs, zero_gap, min_re)


def _a3_report(w, M) -> A3Report:
    tol = EIG_RTOL * _scale(M)
    lam1, kappa = float(w[0]), float(w[1])
    gap = float(w[2] - w[1]) if w.size > 2 else float("inf")
    if abs(lam1) > tol:
        reason = "M is not positive semidefinite" if lam1 < 0 else "lambda_1(M) is not zero"
        return A3Report(False, lam1, kappa, gap, reason)
    if kappa <= tol:
        return A3Report(False, lam1, kappa, gap, "kappa is not positive")
    if gap <= tol:
        return A3Report(False, lam1, kappa, gap, "kappa is not a simple eigenvalue")
    return A3Report(True, lam1, kappa, gap)


# -- spectral state -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralState:
    """Everything the sensitivity formulas need for one graph."""

    graph: DirectedWeightedGraph
    laplacian: np.ndarray
    xi: np.ndarray
    kappa: float
    v: np.ndarray
    y: np.ndarray
    m_eigenvalues: np.ndarray
    report: AssumptionReport
    factorization: BorderedFactorization = field(repr=False)
    graph_hash: str = ""
    gamma: float | None = None

    @property
    def n(self):
        return self.graph.n

    def to_dict(self):
        return {
            "n": self.n,
            "kappa": self.kappa,
            "gamma": self.gamma,
            "xi": self.xi.tolist(),
            "y": self.y.tolist(),
            "assumptions": self.report.to_dict(),
        }


def analyze(g: DirectedWeightedGraph):
    """Compute the assumption report and, where possible, the spectral quantities.

    Returns ``(report, parts)`` where ``parts`` is ``None`` if A1/A2 fail,
    otherwise a dict with ``L, xi, w, V, factorization``.
    """
    L = build_laplacian(g)
    a1 = _a1_report(L)
    nan = float("nan")
    try:
        fac = BorderedFactorization(L, graph_hash=None)
        xi = fac.solve(np.zeros(g.n), constraint=1.0)
        ok = np.all(np.isfinite(xi))
    except AssumptionError:
        fac, xi, ok = None, None, False
    if not ok:
        a2 = A2Report(False, nan, "stationary vector undefined (bordered system singular)")
    elif xi.min() <= 0:
        a2 = A2Report(False, float(xi.min()), "stationary vector has non-positive entries")
    else:
        a2 = A2Report(True, float(xi.min()))
    if not a2.passed:
        a3 = A3Report(False, nan, nan, nan, "M undefined without a positive stationary vector")
        return AssumptionReport(a1, a2, a3), None
    M = symmetrized_matrix(L, xi)
    w, V = np.linalg.eigh(M)
    a3 = _a3_report(w, M)
    return AssumptionReport(a1, a2, a3), dict(L=L, xi=xi, w=w, V=V, factorization=fac)


def check_assumptions(g: DirectedWeightedGraph) -> AssumptionReport:
    return analyze(g)[0]


def spectral_state(g: DirectedWeightedGraph, require=True, with_gamma=False) -> SpectralState:
    """Build the :class:`SpectralState` of ``g``.

    With ``require`` (default) any failed assumption raises
    :class:`AssumptionError`.  Without it only A2 is needed (``M`` must exist);
    the state then carries a failing report.
    """
    report, parts = analyze(g)
    if require:
        report.raise_if_failed()
    elif parts is None:
        report.raise_if_failed()
    gh = g.sha256()
    fac = parts["factorization"]
    fac.graph_hash = gh
    w, V, xi = parts["w"], parts["V"], parts["xi"]
    v = _fix_sign(V[:, 1])
    gam = None
    if with_gamma:
        gam = gamma_value(parts["L"])
    return SpectralState(graph=g, laplacian=parts["L"], xi=xi, kappa=float(w[1]), v=v,
                         y=v / np.sqrt(xi), m_eigenvalues=w, report=report,
                         factorization=fac, graph_hash=gh, gamma=gam)


def kappa_of(g: DirectedWeightedGraph) -> float:
    """kappa without assumption enforcement (NaN if M is undefined)."""
    report, parts = analyze(g)
    return float(parts["w"][1]) if parts is not None else float("nan")


def trace_bound(g: DirectedWeightedGraph) -> float:
    """Upper bound ``sum(a_ij) / (n - 1)`` on kappa (valid under A1-A3)."""
    return float(g.adjacency.sum()) / (g.n - 1)


# -- gamma ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaState:
    gamma: float
    eigenvalue: complex
    x: np.ndarray            # right eigenvector
    p: np.ndarray            # left eigenvector, p^* x = 1
    margin: float            # next distinct real part minus gamma
    tol: float = 0.0

    def __iter__(self):
        return iter((self.gamma, self.eigenvalue, self.x, self.p))


def _gamma_parts(L):
    L = np.asarray(L, dtype=float)
    lam, vl, vr = sla.eig(L, left=True, right=True)
    zero = int(np.argmin(np.abs(lam)))
    idx = np.array([k for k in range(lam.size) if k != zero])
    return lam, vl, vr, idx


def gamma_value(L) -> float:
    """min Re(lambda) over the nonzero spectrum (no branch checks)."""
    lam, _, _, idx = _gamma_parts(L)
    return float(lam[idx].real.min())


def gamma(L, check_branch=True):
    """Return ``(gamma, lambda_star, x, p)`` for the branch attaining gamma.

    A complex-conjugate pair counts as one branch.  Raises
    :class:`BranchAmbiguityError` if a second branch has real part within
    tolerance of gamma.
    """
    L = np.asarray(L, dtype=float)
    tol = EIG_RTOL * _scale(L)
    lam, vl, vr, idx = _gamma_parts(L)
    if abs(lam[np.setdiff1d(np.arange(lam.size), idx)][0]) > tol:
        raise AssumptionError("L has no zero eigenvalue; A1 violated", assumption="A1")
    re = lam[idx].real
    # prefer the member of a conjugate pair with nonnegative imaginary part
    order = np.lexsort((-lam[idx].imag, re))
    k = int(idx[order[0]])
    lam_star = lam[k]
    g = float(lam_star.real)
    if g <= tol:
        raise AssumptionError("a nonzero eigenvalue has non-positive real part; A1 violated",
                              assumption="A1")
    others = [int(j) for j in idx if j != k]
    if abs(lam_star.imag) > tol and others:
        partner = min(others, key=lambda j: abs(lam[j] - np.conj(lam_star)))
        others.remove(partner)
    margin = float(min(lam[j].real for j in others) - g) if others else float("inf")
    if check_branch and margin <= tol:
        raise BranchAmbiguityError(
            f"gamma={g:.6g} is attained by more than one eigenvalue branch "
            f"(margin {margin:.3e})", margin=margin)
    x = vr[:, k]
    p = vl[:, k]
    p = p / np.conj(np.vdot(p, x))
    # two-sided Rayleigh quotient: error quadratic in the eigenvector errors
    lam_star = complex(np.vdot(p, L @ x))
    g = float(lam_star.real)
    return GammaState(gamma=g, eigenvalue=complex(lam_star), x=x, p=p, margin=margin, tol=tol)
