"""Command-line interface: ``kappasens <command> ...``.

Exit status: 0 success, 2 configuration / usage error, 3 input parse error,
4 assumption failure, 5 integration failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .baselines import STRATEGIES, BaselineConfig, baseline_modify
from .dynamics import (
    FirstOrderSystem,
    SecondOrderSystem,
    SimConfig,
    initial_condition,
    integrate,
    run_experiment,
)
from .exceptions import (
    AssumptionError,
    BranchAmbiguityError,
    ConfigError,
    GraphError,
    IntegrationError,
    KappaSensError,
)
from .generators import (
    complete_graph,
    directed_cycle,
    generate_er,
    generate_layered_example,
    generate_small_world,
)
from .graph import (
    DirectedWeightedGraph,
    induced_subgraph,
    largest_scc,
    load_graph,
    save_edge_list,
    save_graph_json,
)
from .modify import (
    BudgetConfig,
    DiscreteConfig,
    ModificationTrace,
    WeakenConfig,
    budget_strengthening,
    discrete_modify,
    iterative_weakening,
)
from .reports import (
    dumps,
    experiment_csv,
    fd_table_csv,
    sensitivity_report,
    sweep_csv,
    trajectory_csv,
)
from .sensitivity import finite_difference_check, kappa_sensitivity_set, kappa_sweep
from .spectral import build_laplacian, check_assumptions, gamma, spectral_state

logger = logging.getLogger("kappasens")

EXIT_OK, EXIT_CONFIG, EXIT_PARSE, EXIT_ASSUMPTION, EXIT_INTEGRATION = 0, 2, 3, 4, 5

ALGORITHMS = ("weaken", "weaken-fixed", "delete", "addneg", "strengthen") + tuple(
    f"baseline:{s}" for s in STRATEGIES)

# per-algorithm defaults for flags shared across algorithms
_OPT_DEFAULTS = {
    "weaken": dict(step=0.2, mode="topk", tmax=40),
    "weaken-fixed": dict(step=0.2, mode="topk", tmax=40),
    "delete": dict(mode="sortrandomk", tmax=10),
    "addneg": dict(mode="sortrandomk", tmax=10),
    "strengthen": dict(step=0.1, mode="topk"),
    "baseline": dict(step=0.1),
}


class UsageError(KappaSensError):
    pass


# -- graph sources ------------------------------------------------------------------

def _num(tok):
    try:
        return int(tok)
    except ValueError:
        return float(tok)


def parse_generator_spec(spec: str) -> DirectedWeightedGraph:
    """``layered``, ``er:n=24,p=0.14,seed=3``, ``sw:n=20,rewire_p=0.2,seed=0``,
    ``complete:n=4``, ``cycle:n=3``."""
    name, _, rest = spec.partition(":")
    kw = {}
    for part in filter(None, rest.split(",")):
        key, sep, val = part.partition("=")
        if not sep:
            raise UsageError(f"bad generator parameter {part!r} in {spec!r}")
        kw[key.strip()] = _num(val.strip())
    builders = {
        "layered": generate_layered_example,
        "er": generate_er,
        "sw": generate_small_world,
        "complete": complete_graph,
        "cycle": directed_cycle,
    }
    if name not in builders:
        raise UsageError(f"unknown generator {name!r}; choose from {sorted(builders)}")
    try:
        return builders[name](**kw)
    except TypeError as exc:
        raise UsageError(f"bad parameters for generator {name!r}: {exc}") from exc


def _load_source(args):
    if bool(args.input) == bool(args.generate):
        raise UsageError("give exactly one of --input or --generate")
    g = load_graph(args.input) if args.input else parse_generator_spec(args.generate)
    if args.nodes:
        g = induced_subgraph(g, [int(t) for t in args.nodes.split(",")])
    if args.scc:
        g, _ = largest_scc(g)
    return g


# -- config / manifest --------------------------------------------------------------

def _coerce(action, raw):
    if isinstance(raw, str) and action.nargs not in (None, "?"):
        items = raw.replace(",", " ").split()
        return [action.type(t) if action.type else t for t in items]
    if isinstance(raw, str) and action.type is not None:
        return action.type(raw)
    if isinstance(raw, str) and isinstance(action, (argparse._StoreTrueAction,
                                                     argparse._StoreFalseAction)):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return raw


def read_config(path, command):
    """Flat ``key = value`` file, or a run manifest JSON (its ``config`` block)."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        if "config" in data:
            if data.get("command") not in (None, command):
                raise UsageError(f"manifest is for command {data['command']!r}, not {command!r}")
            data = data["config"]
        return dict(data)
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


_NOT_CONFIG = {"command", "config", "func", "verbose"}


def _apply_config(parser, args, argv):
    if not getattr(args, "config", None):
        return args
    values = read_config(args.config, args.command)
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, raw in values.items():
        if key in _NOT_CONFIG:
            continue
        if key not in actions:
            raise UsageError(f"unknown config key {key!r}")
        defaults[key] = _coerce(actions[key], raw)
    parser.set_defaults(**defaults)
    # explicit flags still win over the config file
    return parser.parse_args(argv)


class Run:
    """Collects outputs and writes the manifest next to them."""

    def __init__(self, args):
        self.args = args
        self.out = args.out
        os.makedirs(self.out, exist_ok=True)
        self.outputs = []
        self.graph_sha256 = None
        self.seeds = []

    def path(self, name):
        return os.path.join(self.out, args_prefix(self.args) + name)

    def write_text(self, name, text):
        p = self.path(name)
        with open(p, "w") as fh:
            fh.write(text)
        self.outputs.append(os.path.basename(p))
        return p

    def write_json(self, name, obj):
        return self.write_text(name, dumps(obj))

    def write_graph(self, name, g):
        p = self.path(name)
        if name.endswith(".json"):
            save_graph_json(g, p)
        else:
            save_edge_list(g, p)
        self.outputs.append(os.path.basename(p))

    def finish(self):
        config = {k: v for k, v in sorted(vars(self.args).items()) if k not in _NOT_CONFIG}
        manifest = {
            "command": self.args.command,
            "config": config,
            "graph_sha256": self.graph_sha256,
            "seeds": self.seeds,
            "version": __version__,
            "outputs": self.outputs,
        }
        with open(self.path("manifest.json"), "w") as fh:
            fh.write(json.dumps(manifest, indent=1, sort_keys=False) + "\n")


def args_prefix(args):
    return f"{args.prefix}_" if args.prefix else ""


# -- commands -----------------------------------------------------------------------

def cmd_spectrum(args, run):
    g = _load_source(args)
    run.graph_sha256 = g.sha256()
    report = check_assumptions(g)
    st = spectral_state(g, require=False) if report.a2.passed else None
    out = st.to_dict() if st is not None else {"n": g.n, "kappa": None, "gamma": None,
                                               "xi": None, "y": None,
                                               "assumptions": report.to_dict()}
    if report.a1.passed:
        gs = gamma(build_laplacian(g), check_branch=False)
        out["gamma"] = gs.gamma
        out["gamma_branch_margin"] = gs.margin
    run.write_json("spectrum.json", out)
    print(f"n      = {g.n}")
    print(f"kappa  = {out['kappa']!r}")
    print(f"gamma  = {out.get('gamma')!r}")
    for name in ("a1", "a2", "a3"):
        r = getattr(report, name)
        status = "ok" if r.passed else f"FAILED ({r.reason})"
        print(f"{name.upper()}     {status}")
    if not report.passed:
        first = report.failures()[0]
        raise AssumptionError(f"assumption {first} failed", assumption=first, report=report)


def _parse_edges(spec, g):
    if spec in ("existing", "all"):
        return list(g.edges())
    if spec == "pairs":
        return [(j, i) for j in range(g.n) for i in range(g.n) if i != j]
    edges = []
    with open(spec) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.replace(",", " ").split()
            if len(toks) < 2:
                raise GraphError(f"{spec}:{lineno}: expected 'src dst'")
            edges.append((int(toks[0]), int(toks[1])))
    return edges


def cmd_sensitivity(args, run):
    g = _load_source(args)
    run.graph_sha256 = g.sha256()
    st = spectral_state(g)
    F = _parse_edges(args.edges, g)
    ss = kappa_sensitivity_set(st, F, threads=args.threads)
    run.write_json("sensitivity.json", sensitivity_report(ss))
    print(f"kappa = {st.kappa!r}")
    print(f"d_F kappa over {len(F)} edges = {ss.total!r}")
    if args.fd_check is not None:
        rows = [((s.edge.src, s.edge.dst),
                 finite_difference_check(g, [s.edge], h=args.fd_check, state=st))
                for s in ss.per_edge]
        run.write_text("fd_check.csv", fd_table_csv(rows))
        worst = max((r.rel_err for _, r in rows), default=0.0)
        print(f"finite-difference check (h={args.fd_check:g}): max rel_err = {worst:.3e}")
    if args.sweep is not None:
        lo, hi, num = args.sweep
        eps = np.linspace(lo, hi, int(num))
        run.write_text("sweep.csv", sweep_csv(eps, kappa_sweep(g, F, eps)))


def _opt_value(args, key, algo_key):
    val = getattr(args, key)
    return _OPT_DEFAULTS[algo_key].get(key) if val is None else val


def cmd_optimize(args, run):
    algo = args.algorithm
    if algo not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")
    g = _load_source(args)
    run.graph_sha256 = g.sha256()
    run.seeds = [args.seed]
    key = "baseline" if algo.startswith("baseline:") else algo
    # materialize per-algorithm defaults so the manifest is complete
    for name in ("step", "mode", "tmax"):
        if getattr(args, name) is None and name in _OPT_DEFAULTS[key]:
            setattr(args, name, _OPT_DEFAULTS[key][name])
    if algo != "addneg" and args.omega_neg is not None:
        raise UsageError("--omega-neg is only valid with addneg")
    if algo in ("weaken", "weaken-fixed"):
        cfg = WeakenConfig(step=args.step, derivative_fraction=args.df, batch=args.batch,
                           choose_mode=args.mode, tau_w=args.tau_w, tol=args.tol,
                           t_max=args.tmax, seed=args.seed,
                           fixed_step=algo == "weaken-fixed", threads=args.threads)
        trace = iterative_weakening(g, cfg)
    elif algo in ("delete", "addneg"):
        if algo == "addneg" and args.omega_neg is None:
            raise UsageError("addneg requires --omega-neg (e.g. -1.0)")
        cfg = DiscreteConfig(op=algo, choose_mode=args.mode, batch=args.batch,
                             tau_w=args.tau_w, tol=args.tol, t_max=args.tmax,
                             omega_neg=args.omega_neg, seed=args.seed, threads=args.threads)
        trace = discrete_modify(g, cfg)
    elif algo == "strengthen":
        cfg = BudgetConfig(budget=args.budget, step=args.step, batch=args.batch,
                           choose_mode=args.mode, tol=args.tol, alloc=args.alloc,
                           seed=args.seed, threads=args.threads)
        trace = budget_strengthening(g, cfg)
    else:
        cfg = BaselineConfig(budget=args.budget, step=args.step, batch=args.batch,
                             tol=args.tol, seed=args.seed)
        trace = baseline_modify(g, algo.split(":", 1)[1], cfg)
    run.write_text("trace.csv", trace.to_csv())
    run.write_text("trace.json", trace.to_json())
    run.write_graph("final_graph.json", trace.final_graph)
    ks = trace.kappas()
    print(f"{algo}: {len(trace.steps)} accepted steps, kappa {ks[0]!r} -> {ks[-1]!r} "
          f"({trace.termination_reason})")


def _sim_config(args):
    second = args.system == "second"
    t_end = args.t_end if args.t_end is not None else (500.0 if second else 300.0)
    window = args.window if args.window is not None else ((400.0, 100.0) if second else (240.0, 60.0))
    args.t_end, args.window = t_end, list(window)
    return SimConfig(t_end=t_end, dt_sample=args.dt, rtol=args.rtol, atol=args.atol,
                     initial_scale=args.initial_scale, seed=args.seed, window=tuple(window))


def cmd_simulate(args, run):
    cfg = _sim_config(args)
    run.seeds = [args.seed]
    if args.trace:
        with open(args.trace) as fh:
            trace = ModificationTrace.from_dict(json.load(fh))
        graphs = list(trace.graphs())
    else:
        graphs = [_load_source(args)]
    run.graph_sha256 = graphs[0].sha256()

    if args.system == "first":
        def make(g):
            return FirstOrderSystem(g, c=args.c, drift=args.drift)
    else:
        def make(g):
            return SecondOrderSystem(g, alpha=args.alpha, beta=args.beta, drift=args.drift)

    order = 1 if args.system == "first" else 2
    x0, v0 = initial_condition(graphs[0].n, cfg, order)
    if args.identical:
        x0 = np.full_like(x0, x0[0])
        v0 = None if v0 is None else np.full_like(v0, v0[0])

    if len(graphs) == 1:
        res = integrate(make(graphs[0]), cfg, x0, v0)
        run.write_text("trajectory.csv", trajectory_csv(res))
        kappa = spectral_state(graphs[0], require=False).kappa
        rows = [{"step": 0, "kappa": kappa, "E_window": res.E_window,
                 "log10_E": np.log10(res.E_window) if res.E_window and res.E_window > 0
                 else float("-inf")}]
    else:
        rows = run_experiment(graphs, make, cfg, x0=x0, v0=v0,
                              on_result=(lambda k, r: run.write_text(
                                  f"trajectory_step{k}.csv", trajectory_csv(r)))
                              if args.save_trajectories else None)
    run.write_text("experiment.csv", experiment_csv(rows))
    for r in rows:
        print(f"step {r['step']:3d}  kappa {r['kappa']:.6g}  E {r['E_window']:.6e}")


def cmd_generate(args, run):
    g = parse_generator_spec(args.spec)
    run.graph_sha256 = g.sha256()
    run.write_graph("graph.tsv", g)
    run.write_graph("graph.json", g)
    print(f"n = {g.n}, |E| = {len(g.edges())}, sha256 = {run.graph_sha256}")


def cmd_scc(args, run):
    args.scc = False
    g = _load_source(args)
    sub, mapping = largest_scc(g)
    run.graph_sha256 = g.sha256()
    run.write_graph("scc.tsv", sub)
    run.write_graph("scc.json", sub)
    run.write_text("scc_mapping.csv", "old,new\n" + "".join(
        f"{o},{n}\n" for o, n in sorted(mapping.items())))
    print(f"largest SCC: {sub.n} of {g.n} vertices")


# -- parser -------------------------------------------------------------------------

def _common(p, source=True):
    if source:
        src = p.add_argument_group("graph source")
        src.add_argument("--input", metavar="PATH",
                         help="edge list (.tsv/.csv) or graph JSON")
        src.add_argument("--generate", metavar="SPEC",
                         help="generator spec, e.g. layered, er:n=24,p=0.14,seed=3, sw:n=20,seed=0")
        src.add_argument("--scc", action="store_true",
                         help="restrict to the largest strongly connected component")
        src.add_argument("--nodes", metavar="I,J,...", help="restrict to an induced subgraph")
    p.add_argument("--out", default=".", help="output directory (default: %(default)s)")
    p.add_argument("--prefix", default="", help="prefix for output file names")
    p.add_argument("--config", metavar="FILE",
                   help="key = value file or run manifest; explicit flags override it")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for sensitivity solves (default: %(default)s)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kappasens",
        description="Spectral sensitivity of directed weighted networks.",
        epilog="exit status: 0 ok, 2 config/usage, 3 parse error, 4 assumption failure, "
               "5 integration failure")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("spectrum", help="kappa, gamma and the assumption report",
                       formatter_class=fmt)
    _common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sensitivity", help="edge sensitivities of kappa", formatter_class=fmt)
    _common(p)
    p.add_argument("--edges", default="all",
                   help="'all' or 'existing' (edges with nonzero weight), 'pairs' "
                        "(every ordered pair), or a file of 'src dst' lines")
    p.add_argument("--fd-check", type=float, default=None, metavar="H",
                   help="also compare with a central difference of step H, e.g. 1e-5")
    p.add_argument("--sweep", type=float, nargs=3, default=None,
                   metavar=("EPS_MIN", "EPS_MAX", "N"),
                   help="write kappa(eps) along the whole edge set")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("optimize", help="edge modification algorithms and baselines",
                       formatter_class=fmt)
    p.add_argument("algorithm", metavar="ALGORITHM", help=" | ".join(ALGORITHMS))
    _common(p)
    p.add_argument("-s", "--step", type=float, default=None,
                   help="step size s (default 0.2 for weaken, 0.1 for strengthen/baselines)")
    p.add_argument("--df", type=float, default=0.1, help="derivative fraction d_f")
    p.add_argument("-k", "--batch", type=int, default=10, help="batch size k")
    p.add_argument("--mode", default=None,
                   help="choose mode (default topk for weaken/strengthen, "
                        "sortrandomk for delete/addneg)")
    p.add_argument("--tau-w", type=float, default=1e-4, help="weight threshold tau_w")
    p.add_argument("--tol", type=float, default=1e-12, help="numerical tolerance")
    p.add_argument("--tmax", type=int, default=None,
                   help="maximum iterations (default 40 weaken, 10 delete/addneg)")
    p.add_argument("--omega-neg", type=float, default=None,
                   help="weight of inserted negative edges; required for addneg, typically -1.0")
    p.add_argument("-B", "--budget", type=float, default=10.0, help="strengthening budget B")
    p.add_argument("--alloc", choices=("guided", "fixed"), default="guided",
                   help="budget allocation for strengthen")
    p.add_argument("--seed", type=int, default=0, help="seed for random selection orders")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="nonlinear consensus dynamics", formatter_class=fmt)
    p.add_argument("system", choices=("first", "second"))
    _common(p)
    p.add_argument("--trace", metavar="TRACE_JSON",
                   help="simulate every graph along an optimize trace instead of one graph")
    p.add_argument("--c", type=float, default=1.65e-3, help="first-order coupling c")
    p.add_argument("--alpha", type=float, default=40.0, help="second-order position coupling")
    p.add_argument("--beta", type=float, default=0.0158, help="second-order velocity coupling")
    p.add_argument("--drift", type=float, default=0.1, help="drift amplitude a_f")
    p.add_argument("--t-end", type=float, default=None,
                   help="horizon (default 300 first order, 500 second order)")
    p.add_argument("--dt", type=float, default=0.05, help="output sampling step")
    p.add_argument("--rtol", type=float, default=1e-8, help="relative tolerance")
    p.add_argument("--atol", type=float, default=1e-10, help="absolute tolerance")
    p.add_argument("--initial-scale", type=float, default=0.02,
                   help="scale of the Gaussian initial condition")
    p.add_argument("--seed", type=int, default=0, help="initial-condition seed")
    p.add_argument("--window", type=float, nargs=2, default=None, metavar=("T", "T_W"),
                   help="error window (default 240 60 first order, 400 100 second order)")
    p.add_argument("--identical", action="store_true",
                   help="start every node from the same state")
    p.add_argument("--save-trajectories", action="store_true",
                   help="with --trace, also write one trajectory CSV per step")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("generate", help="write a generated graph", formatter_class=fmt)
    p.add_argument("spec", help="generator spec, e.g. er:n=24,p=0.14,seed=3")
    _common(p, source=False)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("scc", help="extract the largest strongly connected component",
                       formatter_class=fmt)
    _common(p)
    p.set_defaults(func=cmd_scc)
    return parser


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    run = None
    try:
        if getattr(args, "config", None):
            sp = _subparser(parser, args.command)
            rest = argv[argv.index(args.command) + 1:]
            args = _apply_config(sp, args, rest)
            args.command = _command_name(args)
        run = Run(args)
        args.func(args, run)
        return EXIT_OK
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AssumptionError, BranchAmbiguityError) as exc:
        print(f"assumption failure: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except IntegrationError as exc:
        print(f"integration failure: {exc} (last valid t = {exc.t_last})", file=sys.stderr)
        return EXIT_INTEGRATION
    except (GraphError, OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    finally:
        if run is not None:
            run.finish()


def _command_name(args):
    return {cmd_spectrum: "spectrum", cmd_sensitivity: "sensitivity", cmd_optimize: "optimize",
            cmd_simulate: "simulate", cmd_generate: "generate", cmd_scc: "scc"}[args.func]


if __name__ == "__main__":
    sys.exit(main())
