"""Sweep presets and post-processing behind ``reproduce-figure``."""

import json
import math
from collections import OrderedDict

import numpy as np

from . import __version__
from .errors import InsufficientDataError, InvalidSpecError
from .experiment import ProtocolConfig, sweep
from .fitting import (DELTA_MAX, SigmoidFit, capacity, fit_mi_sigmoid, fit_mse_sigmoid,
                      fit_polynomial)
from .matrixgen import Kind
from .results import fmt, write_results_csv

FIGURES = ("fig2_top", "fig2_bottom", "fig3a", "fig3b", "fig4")
SCALES = ("desk", "full")

MSE_BETAS = (0.05, 0.1, 0.3, 1.0)
CAPACITY_BETAS = (0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0)


def figure_config(figure_id, seed=0, scale="desk"):
    """Protocol for one figure and which metric it reports."""
    if figure_id not in FIGURES:
        raise InvalidSpecError(f"unknown figure {figure_id!r}; choose from {', '.join(FIGURES)}")
    if scale not in SCALES:
        raise InvalidSpecError(f"unknown scale {scale!r}; choose from {', '.join(SCALES)}")
    deltas = tuple(range(13)) if scale == "desk" else tuple(range(19))
    common = dict(delta_list=deltas, master_seed=seed)

    if figure_id == "fig2_top":
        return ProtocolConfig(k_list=(80,), beta_list=MSE_BETAS, **common), "mse"
    if figure_id == "fig2_bottom":
        return ProtocolConfig(k_list=(320,), beta_list=MSE_BETAS, **common), "mse"
    ks = (80, 160, 320) if scale == "desk" else (80, 160, 320, 640, 1280)
    if figure_id == "fig3a":
        return ProtocolConfig(k_list=ks, beta_list=CAPACITY_BETAS, **common), "capacity"
    if figure_id == "fig3b":
        return ProtocolConfig(k_list=ks, beta_list=CAPACITY_BETAS, gamma=0.01, **common), "capacity"
    return ProtocolConfig(k_list=(80, 320), beta_list=CAPACITY_BETAS, kinds=tuple(Kind),
                          **common), "capacity"


def group_rows(rows):
    """Group result rows by (kind, k, beta, gamma), delays ascending."""
    groups = OrderedDict()
    for row in rows:
        key = (row.kind, row.k, row.beta, row.gamma)
        groups.setdefault(key, []).append(row)
    for key in groups:
        groups[key].sort(key=lambda r: r.delta)
    return groups


def sigmoid_fits(rows, metric):
    """One sigmoid fit per (kind, k, beta, gamma) group."""
    out = []
    for (kind, k, beta, gamma), grp in group_rows(rows).items():
        entry = {"kind": kind, "k": k, "beta": beta, "gamma": gamma}
        try:
            if metric == "mse":
                fit = fit_mse_sigmoid([(r.delta, r.mse_mean) for r in grp])
            else:
                fit = fit_mi_sigmoid([(r.delta, r.mi_mean) for r in grp])
        except InsufficientDataError as exc:
            entry.update(a=None, b=None, points_used=0, points_dropped=len(grp), error=str(exc))
        else:
            entry.update(a=fit.a, b=fit.b, points_used=fit.points_used,
                         points_dropped=fit.points_dropped)
        out.append(entry)
    return out


def capacity_table(rows, delta_max=DELTA_MAX):
    """Capacity per group from its MI fit; ``nan`` when the fit is impossible."""
    table = []
    for fit in sigmoid_fits(rows, "mi"):
        if fit["a"] is None:
            i_hat = math.nan
        else:
            sf = SigmoidFit(fit["a"], fit["b"], "mi_form", fit["points_used"], fit["points_dropped"])
            i_hat = capacity(sf, delta_max).i_hat
        table.append(dict(fit, i_hat=i_hat))
    return table


def quartic_by_size(table):
    """4th-order fit of capacity against beta for each (kind, k, gamma)."""
    by_size = OrderedDict()
    for entry in table:
        if not math.isnan(entry["i_hat"]):
            by_size.setdefault((entry["kind"], entry["k"], entry["gamma"]), []).append(
                (entry["beta"], entry["i_hat"]))
    out = []
    for (kind, k, gamma), pts in by_size.items():
        entry = {"kind": kind, "k": k, "gamma": gamma}
        try:
            entry["coefficients"] = [float(c) for c in fit_polynomial(pts, 4)]
        except InsufficientDataError as exc:
            entry["coefficients"] = None
            entry["error"] = str(exc)
        out.append(entry)
    return out


def best_capacity(table, kind, k, gamma=None):
    """Largest capacity over beta for one (kind, k[, gamma])."""
    vals = [e["i_hat"] for e in table
            if e["kind"] == Kind.parse(kind).value and e["k"] == k
            and (gamma is None or e["gamma"] == gamma) and not math.isnan(e["i_hat"])]
    if not vals:
        raise InsufficientDataError(f"no capacity estimates for kind={kind} k={k}")
    return max(vals)


def write_capacity_csv(path, table):
    with open(path, "w", newline="") as fh:
        fh.write("kind,k,gamma,beta,i_hat\n")
        for e in table:
            fh.write(f"{e['kind']},{e['k']},{fmt(e['gamma'])},{fmt(e['beta'])},{fmt(e['i_hat'])}\n")


def manifest(result, extra=None):
    data = {
        "tool": "ortho-esn",
        "version": __version__,
        "master_seed": result.config.master_seed,
        "config": result.config.to_dict(),
        "sub_seeds": result.sub_seeds(),
    }
    if extra:
        data.update(extra)
    return data


def reproduce(figure_id, out_dir, seed=0, scale="desk", jobs=1, progress=None):
    """Run a figure's sweep and write its CSV, fit JSON and manifest.

    Returns the paths written.
    """
    proto, metric = figure_config(figure_id, seed, scale)
    result = sweep(proto, jobs=jobs, progress=progress)
    out_dir.mkdir(parents=True, exist_ok=True)
    data_path = out_dir / f"{figure_id}.csv"
    write_results_csv(data_path, result.rows)
    paths = [data_path]

    if metric == "mse":
        fits = {"metric": "mse", "fits": sigmoid_fits(result.rows, "mse")}
    else:
        table = capacity_table(result.rows)
        cap_path = out_dir / f"{figure_id}_capacity.csv"
        write_capacity_csv(cap_path, table)
        paths.append(cap_path)
        fits = {"metric": "mi", "delta_max": DELTA_MAX, "fits": table,
                "quartic": quartic_by_size(table)}
    fit_path = out_dir / f"{figure_id}_fits.json"
    fit_path.write_text(json.dumps(jsonable(fits), indent=2) + "\n")
    man_path = out_dir / f"{figure_id}_manifest.json"
    man_path.write_text(json.dumps(manifest(result, {"figure": figure_id, "scale": scale}),
                                   indent=2) + "\n")
    return paths + [fit_path, man_path]


def jsonable(obj):
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
