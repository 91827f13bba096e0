"""Command line interface.

Each subcommand resolves a :class:`RunConfig`, echoes it as one JSON line on
stderr, runs and writes its outputs atomically.  Exit codes: 0 success,
1 computation error, 2 usage error, 3 a non-vacuous verification failure.

Examples
--------
::

    freeineq functional --measure semicircle:r=2 --functional sigma
    freeineq equilibrium --potential quartic:rho=1,coef=0.1 --domain real --out eq/
    freeineq verify --suite all --seed 7 --out reports/
    freeineq report --dir reports/ --out plots/
"""

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from . import functionals as fn
from . import harness
from .equilibrium import solve_equilibrium
from .measures import (
    _atomic_write_text,
    make_free_poisson,
    make_nu_lambda,
    make_power_density,
    make_semicircle,
    make_spike_measure,
    make_uniform,
    make_uniform_circle,
    measure_csv_text,
    read_measure_csv,
    write_measure_csv,
)
from .potentials import parse_potential
from .quadrature import LogPotential, hilbert_halfline, hilbert_R, hilbert_T, log_energy
from .sampler import KINDS, EnsembleSpec, gue_direct, sample
from .transport import wasserstein_R, wasserstein_T_chord, wasserstein_T_geodesic

__all__ = ["RunConfig", "parse_measure", "export_plot_data", "run", "main"]

log = logging.getLogger("freeineq")

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE, EXIT_FAILED = 0, 1, 2, 3


class UsageError(ValueError):
    """Bad flags or configuration; reported with exit code 2."""


@dataclass
class RunConfig:
    """Resolved settings of one command line run.

    Serialized into every sidecar.  ``out`` is left out of the echo so that
    identical runs into different directories produce identical files.
    """

    subcommand: str
    measure: str = None
    nu: str = None
    potential: str = None
    domain: str = None
    functional: str = None
    B: str = None
    metric: str = None
    ensemble: str = None
    n: int = None
    radius: float = None
    orthogonal: bool = False
    sweeps: int = None
    burn_in: int = None
    chains: int = None
    thin: int = None
    draws: int = None
    suite: str = None
    n_random: int = None
    report_dir: str = None
    cells: int = None
    seed: int = 0
    out: str = None
    tolerances: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**data)

    def echo(self):
        data = {k: v for k, v in asdict(self).items() if v is not None and k != "out"}
        return json.dumps(data, sort_keys=True)


# ----------------------------------------------------------------- parsing


def _parse_params(text):
    params = {}
    for item in filter(None, text.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"malformed parameter {item!r}")
        params[key.strip()] = float(val)
    return params


_MEASURES = {
    "semicircle": lambda p, c: make_semicircle(p.pop("r", 2.0), c, center=p.pop("center", 0.0)),
    "uniform": lambda p, c: make_uniform(p.pop("a", -1.0), p.pop("b", 1.0), c),
    "uniform-circle": lambda p, c: make_uniform_circle(c),
    "nu": lambda p, c: make_nu_lambda(p.pop("lambda"), c, phase=p.pop("phase", 0.0)),
    "power": lambda p, c: make_power_density(p.pop("alpha"), c, b=p.pop("b", 1.0)),
    "free-poisson": lambda p, c: make_free_poisson(p.pop("rho", 1.0), c),
    "spike": lambda p, c: make_spike_measure(int(p.pop("k")), int(p.pop("n")), c),
}


def parse_measure(spec, cells=2000):
    """Build a grid measure from a spec or a measure CSV path.

    Specs: ``semicircle:r=2[,center=0]``, ``uniform:a=-1,b=1``,
    ``uniform-circle``, ``nu:lambda=8[,phase=0]``, ``power:alpha=1[,b=1]``,
    ``free-poisson:rho=1`` and ``spike:k=2,n=8``.  Anything containing a path
    separator or ending in ``.csv`` is read with :func:`read_measure_csv`.
    """
    if spec.endswith(".csv") or os.sep in spec:
        return read_measure_csv(spec)
    name, _, rest = spec.partition(":")
    if name not in _MEASURES:
        raise UsageError(f"unknown measure {name!r}; choose from {sorted(_MEASURES)}")
    params = _parse_params(rest)
    try:
        mu = _MEASURES[name](params, cells)
    except KeyError as exc:
        raise UsageError(f"measure {name!r} needs parameter {exc}") from None
    if params:
        raise UsageError(f"unknown parameters {sorted(params)} for measure {name!r}")
    return mu


def _potential(spec):
    try:
        return parse_potential(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _build_parser():
    parser = argparse.ArgumentParser(prog="freeineq", description="Numerical free-probability toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file with RunConfig keys; flags override it")
        p.add_argument("--cells", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        return p

    p = add("functional", "evaluate a free functional of a measure")
    p.add_argument("--measure")
    p.add_argument("--functional")
    p.add_argument("--potential")
    p.add_argument("--B", help="a number, or 'auto' for the equilibrium constant")

    p = add("equilibrium", "solve for the equilibrium measure of a potential")
    p.add_argument("--potential")
    p.add_argument("--domain", choices=("real", "circle", "halfline"))

    p = add("sample", "sample eigenvalues of a Coulomb gas ensemble")
    p.add_argument("--ensemble", choices=KINDS + ("gue-direct",))
    p.add_argument("--potential")
    p.add_argument("--n", type=int)
    p.add_argument("--radius", type=float)
    p.add_argument("--orthogonal", action="store_true", default=None)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--draws", type=int, help="number of matrices for gue-direct")

    p = add("hilbert", "Hilbert transform of a measure")
    p.add_argument("--measure")

    p = add("energy", "logarithmic energy and potential of a measure")
    p.add_argument("--measure")
    p.add_argument("--nu", help="second measure for the mixed energy")

    p = add("transport", "quadratic Wasserstein distance between two measures")
    p.add_argument("--mu", dest="measure")
    p.add_argument("--nu")
    p.add_argument("--metric", choices=("line", "geodesic", "chord"))

    p = add("verify", "run inequality verification suites")
    p.add_argument("--suite", choices=harness.SUITES + ("all",))
    p.add_argument("--n-random", dest="n_random", type=int)

    p = add("report", "export plot data from a verification report directory")
    p.add_argument("--dir", dest="report_dir")
    return parser


def _resolve(args):
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise UsageError("the configuration file must hold a JSON object")
        if data.setdefault("subcommand", args.subcommand) != args.subcommand:
            raise UsageError("configuration file is for another subcommand")
    flags = {k: v for k, v in vars(args).items() if k != "config" and v is not None}
    data.update(flags)
    return RunConfig.from_dict(data)


def _require(cfg, *names):
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"{cfg.subcommand} needs {flags}")


# -------------------------------------------------------------- subcommands


def _out_path(cfg, name):
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, name)


def _sidecar(cfg, name, payload):
    payload = dict(payload, config=json.loads(cfg.echo()))
    _atomic_write_text(_out_path(cfg, name), json.dumps(harness._jsonable(payload), sort_keys=True, indent=2) + "\n")


def _cmd_functional(cfg, stdout):
    _require(cfg, "measure", "functional")
    mu = parse_measure(cfg.measure, cfg.cells or 2000)
    pot = _potential(cfg.potential) if cfg.potential else None
    B = cfg.B
    if B is not None:
        if B == "auto":
            if pot is None:
                raise UsageError("--B auto needs --potential")
            B = harness.equilibrium_for(pot, cfg.cells or 2000).B
        else:
            try:
                B = float(B)
            except ValueError:
                raise UsageError(f"--B must be a number or 'auto', got {B!r}") from None
    try:
        result = fn.evaluate(cfg.functional, mu, pot, B)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    line = json.dumps(result.to_dict(), sort_keys=True)
    stdout.write(line + "\n")
    if cfg.out:
        _atomic_write_text(_out_path(cfg, "functional.jsonl"), line + "\n")
    return EXIT_OK


def _cmd_equilibrium(cfg, stdout):
    _require(cfg, "potential")
    pot = _potential(cfg.potential)
    if cfg.domain is not None and cfg.domain != pot.domain:
        raise UsageError(f"potential lives on {pot.domain!r}, not {cfg.domain!r}")
    result = solve_equilibrium(pot, cells=cfg.cells or 2000)
    summary = {
        "B": result.B,
        "residual": result.residual,
        "iterations": result.iterations,
        "converged": result.converged,
    }
    stdout.write(json.dumps(harness._jsonable(summary), sort_keys=True) + "\n")
    if cfg.out:
        write_measure_csv(result.measure, _out_path(cfg, "equilibrium.csv"))
        _sidecar(cfg, "equilibrium.json", summary)
    return EXIT_OK


def _cmd_sample(cfg, stdout):
    _require(cfg, "ensemble", "n", "out")
    if cfg.ensemble == "gue-direct":
        rho = 1.0
        if cfg.potential:
            pot = _potential(cfg.potential)
            if pot.family != "quadratic" or pot.params.get("center", 0.0) != 0.0:
                raise UsageError("gue-direct needs a centred quadratic potential")
            rho = pot.params["rho"]
        rng = np.random.default_rng(cfg.seed)
        draws = [gue_direct(cfg.n, rho, rng=rng).atoms for _ in range(cfg.draws or 1)]
        diagnostics = {"draws": len(draws), "seed": cfg.seed}
    else:
        _require(cfg, "potential")
        spec = EnsembleSpec(
            cfg.ensemble, _potential(cfg.potential), cfg.n, cfg.radius, bool(cfg.orthogonal)
        )
        result = sample(
            spec, cfg.sweeps or 1000, cfg.burn_in or 0, seed=cfg.seed,
            chains=cfg.chains or 1, thin=cfg.thin or 1,
        )
        draws = list(result.atoms())
        diagnostics = result.diagnostics
    width = max(5, len(str(len(draws) - 1)))
    for k, atoms in enumerate(draws):
        text = "eigenvalue\n" + "".join(f"{float(v)!r}\n" for v in np.sort(atoms))
        _atomic_write_text(_out_path(cfg, f"sample_{k:0{width}d}.csv"), text)
    _sidecar(cfg, "diagnostics.json", diagnostics)
    stdout.write(json.dumps(harness._jsonable(diagnostics), sort_keys=True) + "\n")
    return EXIT_OK


def _emit_measure(cfg, stdout, mu, extra, name):
    text = measure_csv_text(mu, extra)
    if cfg.out:
        _atomic_write_text(_out_path(cfg, name), text)
    else:
        stdout.write(text)


def _cmd_hilbert(cfg, stdout):
    _require(cfg, "measure")
    mu = parse_measure(cfg.measure, cfg.cells or 2000)
    if mu.domain == "circle":
        result = hilbert_T(mu)
    elif mu.domain == "halfline":
        result = hilbert_halfline(mu)
    else:
        result = hilbert_R(mu)
    extra = {"transform": result.values}
    if np.any(result.flagged):
        extra["flagged"] = result.flagged.astype(float)
    _emit_measure(cfg, stdout, mu, extra, "hilbert.csv")
    return EXIT_OK


def _cmd_energy(cfg, stdout):
    _require(cfg, "measure")
    mu = parse_measure(cfg.measure, cfg.cells or 2000)
    nu = parse_measure(cfg.nu, cfg.cells or 2000) if cfg.nu else None
    value = log_energy(mu, nu)
    payload = {"name": "log_energy", "value": value, "inputs": {"measure": mu.digest()}}
    if nu is not None:
        payload["inputs"]["nu"] = nu.digest()
    line = json.dumps(harness._jsonable(payload), sort_keys=True)
    if cfg.out:
        _emit_measure(cfg, stdout, mu, {"transform": LogPotential(mu).on_grid()}, "energy.csv")
        _atomic_write_text(_out_path(cfg, "energy.jsonl"), line + "\n")
    stdout.write(line + "\n")
    return EXIT_OK


def _cmd_transport(cfg, stdout):
    _require(cfg, "measure", "nu")
    mu = parse_measure(cfg.measure, cfg.cells or 2000)
    nu = parse_measure(cfg.nu, cfg.cells or 2000)
    metric = cfg.metric or ("geodesic" if mu.domain == "circle" else "line")
    if metric == "line":
        plan = wasserstein_R(mu, nu, return_plan=True)
    elif metric == "geodesic":
        plan = wasserstein_T_geodesic(mu, nu, return_plan=True)
    else:
        plan = wasserstein_T_chord(mu, nu, return_plan=True)
    payload = {"W": plan.distance, "metric": metric, "plan": plan.to_dict()}
    line = json.dumps(harness._jsonable(payload), sort_keys=True)
    stdout.write(line + "\n")
    if cfg.out:
        _atomic_write_text(_out_path(cfg, "transport.jsonl"), line + "\n")
    return EXIT_OK


def _cmd_verify(cfg, stdout):
    suite = cfg.suite or "all"
    reports = harness.run_suite(
        suite, seed=cfg.seed, cells=cfg.cells or 1000,
        n_random=50 if cfg.n_random is None else cfg.n_random,
    )
    if cfg.out:
        harness.write_reports(reports, cfg.out, config=json.loads(cfg.echo()))
    stdout.write(harness.summary_table(reports))
    summary = harness.summarize(reports)
    for name in summary["failures"]:
        log.error("verification failed: %s", name)
    return EXIT_FAILED if summary["failed"] else EXIT_OK


PLOT_COLUMNS = ("id", "case", "lhs", "rhs", "slack", "tol", "pass", "vacuous")


def export_plot_data(report_dir, out_dir=None):
    """Write one tidy CSV per ``<inequality>.jsonl`` of a report directory.

    Columns are :data:`PLOT_COLUMNS`; one row per report.

    Returns
    -------
    list of str
        Paths written, sorted.

    Raises
    ------
    FileNotFoundError
        If ``report_dir`` does not exist or holds no reports.
    """
    if not os.path.isdir(report_dir):
        raise FileNotFoundError(f"report directory {report_dir!r} does not exist")
    names = sorted(f for f in os.listdir(report_dir) if f.endswith(".jsonl"))
    if not names:
        raise FileNotFoundError(f"no .jsonl reports in {report_dir!r}")
    out_dir = report_dir if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name in names:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(PLOT_COLUMNS)
        with open(os.path.join(report_dir, name)) as fh:
            for line in fh:
                rec = json.loads(line)
                writer.writerow([rec[c] for c in PLOT_COLUMNS])
        path = os.path.join(out_dir, name[: -len(".jsonl")] + ".csv")
        _atomic_write_text(path, buf.getvalue())
        paths.append(path)
    return paths


def _cmd_report(cfg, stdout):
    _require(cfg, "report_dir")
    for path in export_plot_data(cfg.report_dir, cfg.out):
        stdout.write(path + "\n")
    return EXIT_OK


_COMMANDS = {
    "functional": _cmd_functional,
    "equilibrium": _cmd_equilibrium,
    "sample": _cmd_sample,
    "hilbert": _cmd_hilbert,
    "energy": _cmd_energy,
    "transport": _cmd_transport,
    "verify": _cmd_verify,
    "report": _cmd_report,
}


def run(argv=None, stdout=None, stderr=None):
    """Run the command line with ``argv`` and return the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = _resolve(args)
        stderr.write("config " + cfg.echo() + "\n")
        return _COMMANDS[cfg.subcommand](cfg, stdout)
    except UsageError as exc:
        parser.print_usage(stderr)
        stderr.write(f"freeineq: error: {exc}\n")
        return EXIT_USAGE
    except (OSError, ValueError, ArithmeticError, RuntimeError) as exc:
        stderr.write(f"freeineq: computation failed: {exc}\n")
        return EXIT_COMPUTE


def main():
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    sys.exit(run())
