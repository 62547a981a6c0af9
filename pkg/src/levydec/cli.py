"""Command-line interface: reproducible experiments emitting CSV/JSON files.

Subcommands: exponent | evolve | transition | montecarlo | visibility.
Shared flags: --grid lo:hi:n, --out PATH, --format csv|json, --seed N,
--config PATH (flat key=value file; command-line flags take precedence).
Every run is deterministic given its configuration; re-running overwrites an
identical file byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .core import SeparationGrid, cf_at_time, gaussian_exponent
from .errors import LevydecError
from .evolution import (
    JumpConfig,
    OffDiagonalState,
    PathSeparationWeights,
    gaussian_weights,
    jump_expansion_evolve,
    poisson_weights,
    transition_scan,
)
from .models import (
    GasKernel,
    MandelParams,
    MomentumPD,
    StableParams,
    compound_poisson_exponent,
    default_mandel_grid,
    mandel_pd,
    normalize_gas_kernel,
    stable_exponent,
)
from .sampling import (
    CompoundPoissonProcess,
    SamplerConfig,
    StableProcess,
    empirical_cf,
    sample_total_transfer,
)


def _fmt(x):
    return f"{float(x):.17g}"


def _parse_kv(text, what):
    out = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ValueError(f"{what}: expected key=value, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = float(val.strip())
    return out


def _parse_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("--grid expects lo:hi:n")
    return SeparationGrid.linspace(float(parts[0]), float(parts[1]),
                                   int(parts[2]))


def _write_csv(path, meta, columns, rows):
    lines = [f"# levydec {__version__}"]
    for key in sorted(meta):
        lines.append(f"# {key}={meta[key]}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path, meta, columns, rows):
    payload = {
        "meta": {"version": __version__,
                 **{k: str(v) for k, v in meta.items()}},
        "columns": list(columns),
        "rows": [[float(x) for x in row] for row in rows],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def _emit(args, meta, columns, rows):
    writer = _write_json if args.format == "json" else _write_csv
    writer(args.out, meta, columns, rows)


def _load_pd(args):
    if getattr(args, "pd_file", None):
        return MomentumPD.from_file(args.pd_file, hbar=args.hbar)
    spec = getattr(args, "pd", None)
    if not spec:
        return None
    name, _, rest = spec.partition(",")
    kv = _parse_kv(rest, "--pd")
    name = name.strip()
    if name == "mandel":
        return MomentumPD.mandel(kv.get("k0", 1.0), hbar=args.hbar)
    if name == "gaussian":
        return MomentumPD.gaussian(kv.get("mu", 0.0), kv.get("sigma", 1.0),
                                   hbar=args.hbar)
    if name == "uniform":
        return MomentumPD.uniform(kv.get("lo", 0.0), kv.get("hi", 1.0),
                                  hbar=args.hbar)
    raise ValueError(f"unknown pd {name!r} (use mandel | gaussian | uniform)")


def _build_process(args, parser):
    """(exponent, meta, compound (rate, pd) or None) from the process flags."""
    meta = {"hbar": args.hbar}
    if getattr(args, "gaussian", None):
        kv = _parse_kv(args.gaussian, "--gaussian")
        a, d = kv.get("a", 0.0), kv.get("D", 0.0)
        meta.update(process="gaussian", a=a, D=d)
        return gaussian_exponent(a, d), meta, None
    if getattr(args, "stable", None):
        kv = _parse_kv(args.stable, "--stable")
        p = StableParams(alpha=kv.get("alpha", 1.0), K=kv.get("K", 1.0),
                         x0=kv.get("x0", 1.0))
        meta.update(process="stable", alpha=p.alpha, K=p.K, x0=p.x0)
        return stable_exponent(p, hbar=args.hbar), meta, None
    if getattr(args, "gas_file", None):
        if not getattr(args, "gas", None):
            parser.error("--gas-file needs --gas n=..,M=..,p0=..")
        kv = _parse_kv(args.gas, "--gas")
        kernel = GasKernel.from_file(args.gas_file, density_n=kv["n"],
                                     mass_M=kv["M"], p0=kv["p0"])
        rate, pd = normalize_gas_kernel(kernel, hbar=args.hbar)
        meta.update(process="gas_compound_poisson", rate=rate,
                    gas_n=kv["n"], gas_M=kv["M"], gas_p0=kv["p0"])
        return compound_poisson_exponent(rate, pd), meta, (rate, pd)
    if getattr(args, "compound", None):
        kv = _parse_kv(args.compound, "--compound")
        pd = _load_pd(args)
        if pd is None:
            parser.error("--compound needs --pd or --pd-file")
        rate = kv.get("rate", 1.0)
        meta.update(process="compound_poisson", rate=rate, pd=pd.kind)
        return compound_poisson_exponent(rate, pd), meta, (rate, pd)
    parser.error("specify a process: --gaussian, --stable, --compound or "
                 "--gas-file")


def _add_process_flags(sp):
    sp.add_argument("--gaussian", help="a=..,D=..")
    sp.add_argument("--stable", help="alpha=..,K=..,x0=..")
    sp.add_argument("--compound", help="rate=.. (with --pd or --pd-file)")
    sp.add_argument("--pd", help="mandel,k0=.. | gaussian,mu=..,sigma=.. | "
                                 "uniform,lo=..,hi=..")
    sp.add_argument("--pd-file", help="two-column tabulated density")
    sp.add_argument("--gas-file", help="two-column tabulated collision kernel")
    sp.add_argument("--gas", help="n=..,M=..,p0=.. (with --gas-file)")
    sp.add_argument("--hbar", type=float, default=1.0)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", help="separation grid lo:hi:n")
    common.add_argument("--out", help="output data file (required)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", help="flat key=value config file")

    parser = argparse.ArgumentParser(
        prog="levydec",
        description="decoherence curves as Levy-process characteristic "
                    "functions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("exponent", parents=[common],
                        help="evaluate Psi(s) on a grid")
    _add_process_flags(sp)

    sp = sub.add_parser("evolve", parents=[common],
                        help="decoherence factor Phi(t, s), closed form and "
                             "jump expansion")
    _add_process_flags(sp)
    sp.add_argument("--time", type=float, required=True)
    sp.add_argument("--truncation", type=int)
    sp.add_argument("--tail-tol", type=float, default=1e-10)
    sp.add_argument("--weights", choices=("poisson", "gaussian"),
                    default="poisson")

    sp = sub.add_parser("transition", parents=[common],
                        help="compound-Poisson vs Gaussian transition scan")
    _add_process_flags(sp)
    sp.add_argument("--nbar", required=True,
                    help="comma list of mean kick numbers")

    sp = sub.add_parser("montecarlo", parents=[common],
                        help="empirical vs analytic CF comparison")
    _add_process_flags(sp)
    sp.add_argument("--samples", type=int, default=10 ** 6)
    sp.add_argument("--time", type=float, default=1.0)
    sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("visibility", parents=[common],
                        help="fringe visibility over time")
    _add_process_flags(sp)
    sp.add_argument("--times", required=True, help="comma list of times")
    sp.add_argument("--weights-file", help="two-column (s, weight) table")
    sp.add_argument("--weights", help="point:s | uniform:lo,hi,n")
    return parser


def _require(args, parser, attr, flag):
    value = getattr(args, attr, None)
    if value is None:
        parser.error(f"{flag} is required")
    return value


def _require_grid(args, parser):
    return _parse_grid(_require(args, parser, "grid", "--grid lo:hi:n"))


def _cmd_exponent(args, parser):
    psi, meta, _ = _build_process(args, parser)
    grid = _require_grid(args, parser)
    values = psi(grid.points)
    meta.update(command="exponent", grid=args.grid,
                units="separations and momenta in conjugate natural units, "
                      "hbar as configured")
    _emit(args, meta, ("s", "re_psi", "im_psi"),
          zip(grid.points, values.real, values.imag))
    return 0


def _cmd_evolve(args, parser):
    psi, meta, compound = _build_process(args, parser)
    grid = _require_grid(args, parser)
    factor = cf_at_time(psi, args.time, grid)
    meta.update(command="evolve", grid=args.grid, time=args.time,
                weights=args.weights, markovian=(args.weights == "poisson"))
    columns = ["s", "re_cf_closed", "im_cf_closed"]
    cols = [grid.points, factor.values.real, factor.values.imag]
    if compound is not None:
        rate, pd = compound
        cfg = JumpConfig(rate=rate, horizon=args.time,
                         truncation=args.truncation, tail_tol=args.tail_tol)
        gen = poisson_weights if args.weights == "poisson" else gaussian_weights
        state = jump_expansion_evolve(
            OffDiagonalState(grid=grid), pd.cf_evaluator(), cfg,
            weights=gen(cfg),
        )
        agree = np.abs(state.values - factor.values)
        columns += ["re_cf_jump", "im_cf_jump", "jump_vs_closed_abs"]
        cols += [state.values.real, state.values.imag, agree]
        meta.update(truncation=cfg.effective_truncation, nbar=cfg.nbar)
    _emit(args, meta, columns, zip(*cols))
    return 0


def _cmd_transition(args, parser):
    pd = _load_pd(args)
    if pd is None:
        parser.error("transition needs --pd or --pd-file")
    grid = _require_grid(args, parser)
    nbars = [float(x) for x in args.nbar.split(",") if x.strip()]
    if not nbars:
        parser.error("--nbar list is empty")
    report = transition_scan(pd, nbars, grid)
    meta = {"command": "transition", "grid": args.grid, "pd": pd.kind,
            "nbar": args.nbar, "hbar": args.hbar}
    _emit(args, meta, report._COLUMNS, report.rows())
    return 0


def _cmd_montecarlo(args, parser):
    meta = {"command": "montecarlo", "hbar": args.hbar, "seed": args.seed,
            "samples": args.samples, "time": args.time}
    psi, pmeta, compound = _build_process(args, parser)
    meta.update(pmeta)
    if compound is not None:
        rate, pd = compound
        if pd.kind == "mandel":
            params = MandelParams(k0=pd.k0, hbar=pd.hbar)
            pd = mandel_pd(params, default_mandel_grid(params))
        process = CompoundPoissonProcess(rate=rate, pd=pd)
    elif meta["process"] == "stable":
        kv = _parse_kv(args.stable, "--stable")
        process = StableProcess(
            params=StableParams(alpha=kv.get("alpha", 1.0),
                                K=kv.get("K", 1.0), x0=kv.get("x0", 1.0)),
            hbar=args.hbar,
        )
    else:
        parser.error("montecarlo needs --stable, --compound or --gas-file")
    grid = _require_grid(args, parser)
    cfg = SamplerConfig(seed=args.seed, sample_count=args.samples,
                        process=process, horizon=args.time)
    totals = sample_total_transfer(cfg, workers=args.workers)
    ecf = empirical_cf(totals, grid, hbar=args.hbar)
    analytic = np.exp(args.time * psi(grid.points))
    dev = np.abs(ecf.values - analytic)
    three_se = 3.0 * ecf.se_total
    passed = dev <= three_se
    rate = float(np.mean(passed))
    meta.update(grid=args.grid, pass_rate=rate)
    rows = zip(grid.points, ecf.values.real, ecf.values.imag, ecf.se_real,
               ecf.se_imag, analytic.real, analytic.imag, dev,
               passed.astype(float), np.full(grid.n, rate))
    _emit(args, meta, ("s", "re_cf_emp", "im_cf_emp", "se_real", "se_imag",
                       "re_cf_analytic", "im_cf_analytic", "abs_dev",
                       "three_se_pass", "pass_rate"), rows)
    return 0


def _cmd_visibility(args, parser):
    psi, meta, _ = _build_process(args, parser)
    if args.weights_file:
        w = PathSeparationWeights.from_file(args.weights_file)
    elif args.weights:
        name, _, rest = args.weights.partition(":")
        if name == "point":
            w = PathSeparationWeights.point_mass(float(rest))
        elif name == "uniform":
            lo, hi, n = rest.split(",")
            w = PathSeparationWeights.uniform(
                np.linspace(float(lo), float(hi), int(n))
            )
        else:
            parser.error("--weights expects point:s or uniform:lo,hi,n")
    else:
        parser.error("visibility needs --weights or --weights-file")
    times = [float(x) for x in args.times.split(",") if x.strip()]
    if not times:
        parser.error("--times list is empty")
    if any(t < 0 for t in times):
        parser.error("times must be >= 0")
    meta.update(command="visibility", times=args.times)
    rows = [
        (t, float(np.abs(np.sum(w.weights * np.exp(t * psi(w.points))))))
        for t in times
    ]
    _emit(args, meta, ("t", "visibility"), rows)
    return 0


_COMMANDS = {
    "exponent": _cmd_exponent,
    "evolve": _cmd_evolve,
    "transition": _cmd_transition,
    "montecarlo": _cmd_montecarlo,
    "visibility": _cmd_visibility,
}


_VALUE_FLAGS = {
    "--grid", "--out", "--format", "--seed", "--config", "--gaussian",
    "--stable", "--compound", "--pd", "--pd-file", "--gas-file", "--gas",
    "--hbar", "--time", "--truncation", "--tail-tol", "--weights", "--nbar",
    "--samples", "--workers", "--times", "--weights-file",
}


def _fuse_flag_values(argv):
    """Rewrite ['--flag', value] as ['--flag=value'].

    Keeps argparse from mistaking values with a leading '-' (negative grid
    bounds, key=value strings) for option names.
    """
    out = []
    i = 0
    while i < len(argv):
        if argv[i] in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(argv[i] + "=" + argv[i + 1])
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def _apply_config(parser, argv):
    """Load --config key=value pairs as subparser defaults (flags still win)."""
    paths = [a.split("=", 1)[1] for a in argv if a.startswith("--config=")]
    if not paths:
        return
    defaults = {}
    with open(paths[0]) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line without '=': {line!r}")
            key, val = line.split("=", 1)
            defaults[key.strip().replace("-", "_")] = val.strip()
    actions = parser._subparsers._group_actions[0].choices.values()
    for action in actions:
        cast = {}
        for sub_action in action._actions:
            if sub_action.dest in defaults:
                val = defaults[sub_action.dest]
                if sub_action.type is not None:
                    val = sub_action.type(val)
                cast[sub_action.dest] = val
        action.set_defaults(**cast)


def main(argv=None):
    argv = _fuse_flag_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        _require(args, parser, "out", "--out")
        return _COMMANDS[args.command](args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (LevydecError, OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2


def entry():
    sys.exit(main())
