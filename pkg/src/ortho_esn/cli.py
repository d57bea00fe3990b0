"""Command-line interface: ``ortho-esn <subcommand>``.

Exit status is 0 on success, 1 when a check fails and 2 for usage or
configuration errors. ``ORTHO_ESN_SEED`` overrides the master seed of a
config file; an explicit ``--seed`` overrides both.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from . import automaton as am
from .errors import InvalidSpecError, OrthoEsnError
from .experiment import (MARGINAL_MODES, Cell, ProtocolConfig, cell_inputs, default_jobs,
                         run_trial, sweep)
from .figures import (FIGURES, SCALES, capacity_table, manifest, quartic_by_size,
                      jsonable, reproduce, sigmoid_fits, write_capacity_csv)
from .fitting import DELTA_MAX, SigmoidFit, capacity
from .matrixgen import ConnectivitySpec, Kind, describe, generate
from .reservoir import init_reservoir
from .results import fmt, read_results_csv, write_results_csv

logger = logging.getLogger("ortho_esn")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SEED_ENV = "ORTHO_ESN_SEED"


class UsageError(Exception):
    pass


def _env_seed():
    value = os.environ.get(SEED_ENV)
    if value in (None, ""):
        return None
    try:
        return int(value, 0)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={value!r} is not an integer") from None


def _seed(args_seed, default=0):
    if args_seed is not None:
        return args_seed
    env = _env_seed()
    return default if env is None else env


def _print_json(obj):
    print(json.dumps(jsonable(obj), indent=2))


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


# -- matrices and sequences -------------------------------------------------

def cmd_gen_matrix(args):
    matrix = generate(ConnectivitySpec(kind=args.kind, size=args.size, seed=_seed(args.seed)))
    meta = dict(describe(matrix), seed=_seed(args.seed))
    fh, close = _open_out(args.out)
    try:
        for row in matrix.entries:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")
    finally:
        if close:
            fh.close()
    sidecar = json.dumps(meta, indent=2) + "\n"
    if args.out in (None, "-"):
        sys.stderr.write(sidecar)
    else:
        Path(args.out).with_suffix(".json").write_text(sidecar)
    return EXIT_OK


def cmd_gen_sequence(args):
    seq = am.generate(am.AutomatonConfig(delta=args.delta, seed=_seed(args.seed),
                                         length=args.length))
    onehot = am.encode_sequence(seq).astype(int)
    fh, close = _open_out(args.out)
    try:
        fh.write("t,state," + ",".join(f"u{i}" for i in range(am.N_STATES)) + "\n")
        for t, (s, u) in enumerate(zip(seq, onehot)):
            fh.write(f"{t},{am.STATES[s]}," + ",".join(map(str, u)) + "\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


# -- single cells -----------------------------------------------------------

def _cell_proto(args):
    return ProtocolConfig(
        transient_steps=args.transient, train_steps=args.train, test_steps=args.test,
        ridge=args.ridge, delta_list=(args.delta,), samples_per_cell=args.samples,
        beta_list=(args.beta,), k_list=(args.k,), gamma=args.gamma, kinds=(args.kind,),
        master_seed=_seed(args.seed), marginal_mode=args.marginal_mode,
    )


def _dump_trace(path, W, esn, auto, proto):
    """Write the reservoir state trajectory of one trial as CSV."""
    res = init_reservoir(esn, W)
    seq = am.generate(auto)[:proto.total_steps]
    states = res.run(am.encode_sequence(seq))
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(f"x{i + 1}" for i in range(esn.k)) + "\n")
        for t, x in enumerate(states):
            fh.write(f"{t}," + ",".join(format(v, ".17g") for v in x) + "\n")


def _run_cell(args, metric):
    proto = _cell_proto(args)
    kind = proto.kinds[0].value
    per_sample = []
    for sample in range(proto.samples_per_cell):
        cell = Cell(kind=kind, k=args.k, beta_index=0, delta=args.delta, sample=sample,
                    beta=args.beta)
        W, esn, auto = cell_inputs(cell, proto)
        if args.trace and sample == 0:
            _dump_trace(args.trace, W, esn, auto, proto)
        result = run_trial(esn, W, auto, proto)
        entry = {"sample": sample, "mse": result.mse_at_d, "mi_bits": result.mi_bits,
                 "d_count": int(result.sigma.size)}
        if metric == "mi":
            entry["joint"] = result.joint.tolist()
        per_sample.append(entry)
    key = "mse" if metric == "mse" else "mi_bits"
    vals = np.array([e[key] for e in per_sample])
    out = {"kind": kind, "k": args.k, "beta": args.beta, "gamma": args.gamma,
           "delta": args.delta, "samples": proto.samples_per_cell,
           "master_seed": proto.master_seed, "backend": kernels.BACKEND,
           f"{metric}_mean": float(vals.mean()), f"{metric}_std": float(vals.std()),
           "per_sample": per_sample}
    if metric == "mi":
        out["marginal_mode"] = proto.marginal_mode
    _print_json(out)
    return EXIT_OK


def cmd_run_mse(args):
    return _run_cell(args, "mse")


def cmd_run_mi(args):
    return _run_cell(args, "mi")


# -- sweeps -----------------------------------------------------------------

def load_config(path):
    """Read a protocol config or a run manifest (which embeds one)."""
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}: expected a JSON object")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return data


def _progress(enabled):
    if not enabled:
        return None

    def report(done, total):
        if done == total or done % max(1, total // 20) == 0:
            sys.stderr.write(f"\r{done}/{total} trials")
            if done == total:
                sys.stderr.write("\n")
            sys.stderr.flush()
    return report


def cmd_sweep(args):
    data = load_config(args.config)
    env = _env_seed()
    if env is not None:
        data["master_seed"] = env
    if args.seed is not None:
        data["master_seed"] = args.seed
    if args.samples is not None:
        data["samples_per_cell"] = args.samples
    if args.gamma is not None:
        data["gamma"] = args.gamma
    proto = ProtocolConfig.from_dict(data)
    result = sweep(proto, jobs=args.jobs, progress=_progress(args.progress))
    write_results_csv(args.out, result.rows)
    if args.manifest:
        Path(args.manifest).write_text(json.dumps(manifest(result), indent=2) + "\n")
    return EXIT_OK


def _filtered_rows(args):
    try:
        rows = read_results_csv(args.input)
    except FileNotFoundError:
        raise UsageError(f"results file not found: {args.input}") from None
    if args.kind is not None:
        kind = Kind.parse(args.kind).value
        rows = [r for r in rows if r.kind == kind]
    if args.k is not None:
        rows = [r for r in rows if r.k == args.k]
    if args.beta is not None:
        rows = [r for r in rows if r.beta == args.beta]
    if args.gamma is not None:
        rows = [r for r in rows if r.gamma == args.gamma]
    if not rows:
        raise UsageError("no result rows match the filters")
    return rows


def cmd_fit(args):
    fits = sigmoid_fits(_filtered_rows(args), args.metric)
    if len(fits) == 1:
        f = fits[0]
        out = {key: f[key] for key in ("a", "b", "points_used", "points_dropped")}
        if "error" in f:
            out["error"] = f["error"]
        _print_json(out)
        return EXIT_FAIL if f["a"] is None else EXIT_OK
    _print_json(fits)
    return EXIT_OK


def cmd_capacity(args):
    fit = SigmoidFit(args.a, args.b, "mi_form", 0, 0)
    _print_json({"i_hat": capacity(fit, args.delta_max).i_hat})
    return EXIT_OK


def cmd_capacity_curve(args):
    table = capacity_table(_filtered_rows(args), args.delta_max)
    if args.out in (None, "-"):
        sys.stdout.write("kind,k,gamma,beta,i_hat\n")
        for e in table:
            sys.stdout.write(f"{e['kind']},{e['k']},{fmt(e['gamma'])},{fmt(e['beta'])},"
                             f"{fmt(e['i_hat'])}\n")
    else:
        write_capacity_csv(args.out, table)
    quartic = json.dumps(jsonable({"quartic": quartic_by_size(table)}), indent=2) + "\n"
    if args.coef_out:
        Path(args.coef_out).write_text(quartic)
    else:
        sys.stderr.write(quartic)
    return EXIT_OK


def cmd_reproduce_figure(args):
    paths = reproduce(args.figure, Path(args.out_dir), seed=_seed(args.seed),
                      scale=args.scale, jobs=args.jobs, progress=_progress(args.progress))
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_validate(args):
    from .checks import run_checks

    if args.config is not None:
        load_config(args.config)
    report = run_checks(fault=args.inject_fault)
    width = max(len(name) for name, _, _ in report)
    for name, ok, detail in report:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    failed = sum(not ok for _, ok, _ in report)
    print(f"{len(report) - failed}/{len(report)} checks passed (backend: {kernels.BACKEND})")
    return EXIT_FAIL if failed else EXIT_OK


# -- parser -------------------------------------------------------------------

def _kind_arg(value):
    try:
        return Kind.parse(value).value
    except InvalidSpecError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_filters(p):
    p.add_argument("--input", required=True, help="results CSV written by 'sweep'")
    p.add_argument("--kind")
    p.add_argument("--k", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)


def build_parser():
    parser = argparse.ArgumentParser(prog="ortho-esn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    kinds = "/".join(k.value for k in Kind)

    p = sub.add_parser("gen-matrix", help="write a normalized recurrent matrix as CSV")
    p.add_argument("--kind", required=True, type=_kind_arg, help=kinds)
    p.add_argument("--size", required=True, type=int)
    p.add_argument("--seed", type=lambda s: int(s, 0))
    p.add_argument("--out", help="CSV path; a .json sidecar is written next to it")
    p.set_defaults(func=cmd_gen_matrix)

    p = sub.add_parser("gen-sequence", help="write a test-process sequence as CSV")
    p.add_argument("--delta", required=True, type=int)
    p.add_argument("--seed", type=lambda s: int(s, 0))
    p.add_argument("--length", required=True, type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_sequence)

    for name, func in (("run-mse", cmd_run_mse), ("run-mi", cmd_run_mi)):
        p = sub.add_parser(name, help="run one cell and print JSON")
        p.add_argument("--kind", default="orthogonal", type=_kind_arg, help=kinds)
        p.add_argument("--k", type=int, default=80)
        p.add_argument("--beta", type=float, default=0.3)
        p.add_argument("--gamma", type=float, default=0.0)
        p.add_argument("--delta", type=int, default=0)
        p.add_argument("--samples", type=int, default=10)
        p.add_argument("--seed", type=lambda s: int(s, 0))
        p.add_argument("--ridge", type=float, default=0.08)
        p.add_argument("--transient", type=int, default=300)
        p.add_argument("--train", type=int, default=3000)
        p.add_argument("--test", type=int, default=3000)
        p.add_argument("--marginal-mode", choices=MARGINAL_MODES, default="empirical")
        p.add_argument("--trace", help="dump the first sample's state trajectory to this CSV")
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="run a parameter sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="results.csv")
    p.add_argument("--manifest", help="also write a run manifest JSON")
    p.add_argument("--seed", type=lambda s: int(s, 0))
    p.add_argument("--samples", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--jobs", type=int, default=default_jobs())
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit the MSE or MI sigmoid to sweep results")
    _add_filters(p)
    p.add_argument("--metric", required=True, choices=("mse", "mi"))
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("capacity", help="sum a fitted MI sigmoid over delays")
    p.add_argument("--a", required=True, type=float)
    p.add_argument("--b", required=True, type=float)
    p.add_argument("--delta-max", type=int, default=DELTA_MAX)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("capacity-curve", help="capacity per beta plus quartic fits")
    _add_filters(p)
    p.add_argument("--delta-max", type=int, default=DELTA_MAX)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--coef-out", help="JSON path for quartic coefficients (default stderr)")
    p.set_defaults(func=cmd_capacity_curve)

    p = sub.add_parser("reproduce-figure", help="run the sweep and fits behind one figure")
    p.add_argument("--figure", required=True, choices=FIGURES)
    p.add_argument("--scale", default="desk", choices=SCALES)
    p.add_argument("--seed", type=lambda s: int(s, 0))
    p.add_argument("--out-dir", default="figures")
    p.add_argument("--jobs", type=int, default=default_jobs())
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_reproduce_figure)

    p = sub.add_parser("validate", help="run oracle and invariant checks")
    p.add_argument("--config", help="optional config to load (checked for readability)")
    p.add_argument("--inject-fault", action="store_true",
                   help="corrupt matrix normalization to exercise the failure path")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, InvalidSpecError, OSError) as exc:
        print(f"ortho-esn {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OrthoEsnError as exc:
        print(f"ortho-esn {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
