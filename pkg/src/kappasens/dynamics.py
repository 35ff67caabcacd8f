"""Nonlinear consensus dynamics and synchronization error metrics.

First order:   x' = a_f sin(x) - c L x
Second order:  x' = v,  v' = a_f (tanh(x) + tanh(v)) - alpha L x - beta L v

Integration uses the Dormand-Prince 5(4) pair with a PI step-size
controller and the pair's continuous extension for output on a fixed grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, IntegrationError
from .graph import DirectedWeightedGraph

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between 5th and embedded 4th order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension: y(t + th) = y + h * K^T P [th, th^2, th^3, th^4]
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

# PI controller constants (Hairer & Wanner's DOPRI5 defaults)
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_SAFE = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0


def _combine(coeffs, K):
    # elementwise (not BLAS) so equal components stay bitwise equal
    acc = np.zeros(K.shape[1])
    for c, k in zip(coeffs, K):
        if c != 0.0:
            acc += c * k
    return acc


def _rms(x):
    return math.sqrt(float(np.mean(x * x)))


def _initial_step(f, t0, y0, f0, rtol, atol):
    sc = atol + rtol * np.abs(y0)
    d0, d1 = _rms(y0 / sc), _rms(f0 / sc)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    d2 = _rms((f(t0 + h0, y1) - f0) / sc) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def dopri5(f, y0, t_eval, rtol=1e-8, atol=1e-10, max_steps=10_000_000):
    """Integrate ``y' = f(t, y)`` and return the solution at ``t_eval``.

    ``t_eval`` must be increasing with ``t_eval[0]`` the initial time.
    Returns ``(Y, stats)`` where ``Y`` has shape ``(len(t_eval), dim)``.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    y = np.array(y0, dtype=float)
    t, t_end = float(t_eval[0]), float(t_eval[-1])
    out = np.empty((t_eval.size, y.size))
    out[0] = y
    nxt = 1
    K = np.empty((7, y.size))
    K[0] = f(t, y)
    h = _initial_step(f, t, y, K[0], rtol, atol) if t_end > t else 0.0
    err_old = 1e-4
    n_acc = n_rej = 0
    while nxt < t_eval.size:
        if n_acc + n_rej >= max_steps:
            raise IntegrationError(f"step budget exhausted at t={t}", t_last=t)
        h = min(h, t_end - t)
        if h <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
            raise IntegrationError(f"step size underflow at t={t}", t_last=t)
        for s in range(1, 7):
            ys = y + h * _combine(_A[s], K[:s])
            K[s] = f(t + _C[s] * h, ys)
        y_new = ys  # stage 7 is evaluated at the 5th-order solution (FSAL)
        err_vec = h * _combine(_E, K)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / sc)
        if not np.isfinite(err):
            raise IntegrationError(f"non-finite state at t={t}", t_last=t)
        fac11 = err ** _EXPO
        if err <= 1.0:
            fac = fac11 / err_old ** _BETA
            fac = min(1 / _FAC_MIN, max(1 / _FAC_MAX, fac / _SAFE))
            t_new = t + h
            while nxt < t_eval.size and t_eval[nxt] <= t_new:
                th = (t_eval[nxt] - t) / h
                b = _P @ np.array([th, th * th, th ** 3, th ** 4])
                out[nxt] = y + h * _combine(b, K)
                nxt += 1
            err_old = max(err, 1e-4)
            t, y = t_new, y_new
            K[0] = K[6]
            h = h / fac
            n_acc += 1
        else:
            h = h / min(1 / _FAC_MIN, fac11 / _SAFE)
            n_rej += 1
    return out, {"accepted": n_acc, "rejected": n_rej}


# -- systems ------------------------------------------------------------------------

def _coupling(A):
    """``x -> L x`` computed as ``sum_j a_ij (x_i - x_j)`` (exactly 0 on consensus)."""
    A = np.asarray(A, dtype=float)

    def Lx(x):
        return (A * (x[:, None] - x[None, :])).sum(axis=1)

    return Lx


@dataclass(frozen=True, eq=False)
class FirstOrderSystem:
    graph: DirectedWeightedGraph
    c: float = 1.65e-3
    drift: float = 0.1

    def __post_init__(self):
        if self.c < 0:
            raise ConfigError("coupling c must be >= 0")

    order = 1

    def rhs(self):
        Lx, c, a = _coupling(self.graph.adjacency), self.c, self.drift
        return lambda t, x: a * np.sin(x) - c * Lx(x)


@dataclass(frozen=True, eq=False)
class SecondOrderSystem:
    graph: DirectedWeightedGraph
    alpha: float = 40.0
    beta: float = 0.0158
    drift: float = 0.1

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be >= 0")

    order = 2

    def rhs(self):
        Lx, a, al, be = _coupling(self.graph.adjacency), self.drift, self.alpha, self.beta
        n = self.graph.n

        def f(t, z):
            x, v = z[:n], z[n:]
            dv = a * (np.tanh(x) + np.tanh(v)) - al * Lx(x) - be * Lx(v)
            return np.concatenate([v, dv])

        return f


@dataclass(frozen=True)
class SimConfig:
    t_end: float = 300.0
    dt_sample: float = 0.05
    rtol: float = 1e-8
    atol: float = 1e-10
    initial_scale: float = 0.02
    seed: int = 0
    window: tuple = (240.0, 60.0)

    def __post_init__(self):
        if not 0 < self.dt_sample < self.t_end:
            raise ConfigError("need 0 < dt_sample < t_end")
        if not (self.rtol > 0 and self.atol > 0):
            raise ConfigError("rtol and atol must be > 0")

    @classmethod
    def second_order(cls, **kw):
        kw.setdefault("t_end", 500.0)
        kw.setdefault("window", (400.0, 100.0))
        return cls(**kw)

    def grid(self):
        m = int(math.floor(self.t_end / self.dt_sample + 1e-9))
        t = self.dt_sample * np.arange(m + 1)
        if self.t_end - t[-1] > 1e-9 * self.t_end:
            t = np.append(t, self.t_end)
        else:
            t[-1] = self.t_end
        return t


@dataclass(frozen=True, eq=False)
class TrajectoryResult:
    times: np.ndarray
    states: np.ndarray
    velocities: np.ndarray | None
    e_series: np.ndarray
    E_window: float | None
    stats: dict


def initial_condition(n, cfg: SimConfig, order=1):
    """Seeded Gaussian draws scaled by ``cfg.initial_scale`` (x, and v for order 2)."""
    rng = np.random.default_rng(cfg.seed)
    x0 = cfg.initial_scale * rng.standard_normal(n)
    if order == 1:
        return x0, None
    return x0, cfg.initial_scale * rng.standard_normal(n)


def error_series(states, velocities=None):
    """Mean-square deviation from the network average, per sample (rows)."""
    def msd(z):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        z = z - z[:, :1]  # shift first: equal states give exactly zero
        return np.mean((z - z.mean(axis=1, keepdims=True)) ** 2, axis=1)

    e = msd(states)
    if velocities is not None:
        e = e + msd(velocities)
    return e


def windowed_error(e_series, times, T, T_w):
    """Trapezoidal mean of ``e`` over ``[T, T + T_w]`` (endpoints interpolated)."""
    e = np.asarray(e_series, dtype=float)
    t = np.asarray(times, dtype=float)
    if not T_w > 0:
        raise ConfigError("window width must be positive")
    t1 = T + T_w
    slack = 1e-9 * max(1.0, abs(t1))
    if T < t[0] - slack or t1 > t[-1] + slack:
        raise ConfigError(f"window [{T}, {t1}] exceeds trajectory [{t[0]}, {t[-1]}]")
    t1 = min(t1, t[-1])
    inner = (t > T) & (t < t1)
    ts = np.concatenate([[T], t[inner], [t1]])
    es = np.concatenate([[np.interp(T, t, e)], e[inner], [np.interp(t1, t, e)]])
    return float(np.trapezoid(es, ts) / (t1 - T))


def integrate(system, cfg: SimConfig, x0=None, v0=None) -> TrajectoryResult:
    """Simulate ``system`` on the sample grid of ``cfg``.

    Missing initial states are drawn with :func:`initial_condition`.
    """
    n = system.graph.n
    if x0 is None:
        x0, v_draw = initial_condition(n, cfg, system.order)
        v0 = v_draw if v0 is None else v0
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ConfigError(f"x0 must have shape ({n},)")
    if system.order == 2:
        v0 = np.zeros(n) if v0 is None else np.asarray(v0, dtype=float)
        if v0.shape != (n,):
            raise ConfigError(f"v0 must have shape ({n},)")
        z0 = np.concatenate([x0, v0])
    else:
        z0 = x0
    times = cfg.grid()
    with np.errstate(over="ignore", invalid="ignore"):
        Z, stats = dopri5(system.rhs(), z0, times, rtol=cfg.rtol, atol=cfg.atol)
    states = Z[:, :n]
    vel = Z[:, n:] if system.order == 2 else None
    e = error_series(states, vel)
    E = None
    if cfg.window is not None and cfg.window[0] + cfg.window[1] <= times[-1] + 1e-9:
        E = windowed_error(e, times, *cfg.window)
    return TrajectoryResult(times, states, vel, e, E, stats)


def run_experiment(graphs, make_system, cfg: SimConfig, x0=None, v0=None, on_result=None):
    """kappa and windowed error for each graph under one shared initial condition.

    ``make_system(graph)`` builds the system; rows are dicts with
    ``step, kappa, E_window, log10_E``.  ``on_result(step, result)`` is called
    after every integration if given.
    """
    from .spectral import spectral_state

    graphs = list(graphs)
    order = make_system(graphs[0]).order
    if x0 is None:
        x0, v_draw = initial_condition(graphs[0].n, cfg, order)
        v0 = v_draw if v0 is None else v0
    rows = []
    for step, g in enumerate(graphs):
        kappa = spectral_state(g).kappa
        res = integrate(make_system(g), cfg, x0, v0)
        if on_result is not None:
            on_result(step, res)
        E = res.E_window
        rows.append({"step": step, "kappa": kappa, "E_window": E,
                     "log10_E": math.log10(E) if E and E > 0 else float("-inf")})
    return rows
