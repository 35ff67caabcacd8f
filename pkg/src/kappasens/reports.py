"""Plot-ready JSON / CSV writers.

Floats in JSON are written with 17 significant digits (``%.17g``) so values
round-trip exactly; non-finite values become ``null``.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np


def _encode(obj):
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return "%.17g" % x if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    return _encode(obj) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def spectral_report(state, gamma=None):
    out = state.to_dict()
    if gamma is not None:
        out["gamma"] = gamma
    return out


def sensitivity_report(set_sensitivity):
    """``{"total": ..., "edges": [...]}`` with edges sorted by total ascending."""
    return set_sensitivity.to_dict()


def _fmt(x):
    return repr(float(x))


def trajectory_csv(result) -> str:
    n = result.states.shape[1]
    header = ["t"] + [f"x_{i}" for i in range(n)]
    if result.velocities is not None:
        header += [f"v_{i}" for i in range(n)]
    header.append("e")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for k, t in enumerate(result.times):
        row = [_fmt(t)] + [_fmt(x) for x in result.states[k]]
        if result.velocities is not None:
            row += [_fmt(v) for v in result.velocities[k]]
        row.append(_fmt(result.e_series[k]))
        w.writerow(row)
    return buf.getvalue()


def experiment_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "kappa", "E_window", "log10_E"])
    for r in rows:
        w.writerow([r["step"], _fmt(r["kappa"]), _fmt(r["E_window"]), _fmt(r["log10_E"])])
    return buf.getvalue()


def fd_table_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["src", "dst", "analytic", "numeric", "rel_err"])
    for (s, d), r in rows:
        w.writerow([s, d, _fmt(r.analytic), _fmt(r.numeric), _fmt(r.rel_err)])
    return buf.getvalue()


def sweep_csv(eps, kappas) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eps", "kappa"])
    for e, k in zip(eps, kappas):
        w.writerow([_fmt(e), _fmt(k)])
    return buf.getvalue()
