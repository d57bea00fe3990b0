"""Acceptance criteria, each checked at its stated tolerance.

Every test records a single PASS/FAIL line, repeated in the pytest terminal
summary. The sweeps are shared between criteria through module fixtures:

* orthogonal and general, k in {80, 320}, beta grid, delays 0..12 (criteria 2 and 4)
* orthogonal k=160 at gamma 0 and 0.01 (criteria 3 and 5)
"""

import math
import time

import numpy as np
import pytest

from ortho_esn import automaton as am
from ortho_esn.checks import capacity_oracle, exact_normal_equations, mi_oracle
from ortho_esn.experiment import ProtocolConfig, mutual_information, sweep
from ortho_esn.figures import best_capacity, capacity_table
from ortho_esn.fitting import DELTA_MAX, SigmoidFit, capacity, fit_mi_sigmoid, fit_mse_sigmoid
from ortho_esn.matrixgen import (ConnectivitySpec, Kind, generate, max_singular_value,
                                 normality_defect, spectral_radius)
from ortho_esn.reservoir import train_ridge

pytestmark = [pytest.mark.acceptance]

BETAS = (0.02, 0.05, 0.1, 0.3, 1.0)
DESK_DELTAS = tuple(range(13))


def _timed_sweep(proto):
    start = time.perf_counter()
    result = sweep(proto)
    return result, time.perf_counter() - start


@pytest.fixture(scope="module")
def size_sweep():
    proto = ProtocolConfig(kinds=("orthogonal", "general"), k_list=(80, 320), beta_list=BETAS,
                           delta_list=DESK_DELTAS, samples_per_cell=10, master_seed=2024)
    return _timed_sweep(proto)


@pytest.fixture(scope="module")
def noise_sweeps():
    out = {}
    for gamma in (0.0, 0.01):
        proto = ProtocolConfig(k_list=(160,), beta_list=BETAS, delta_list=DESK_DELTAS,
                               samples_per_cell=10, gamma=gamma, master_seed=2025)
        out[gamma] = _timed_sweep(proto)
    return out


def _row(result, kind, k, beta, delta):
    return next(r for r in result.rows
                if (r.kind, r.k, r.beta, r.delta) == (kind, k, beta, delta))


@pytest.mark.slow
def test_criterion_1_naive_floor(acceptance_report):
    proto = ProtocolConfig(k_list=(80,), beta_list=(0.3,), delta_list=(50,), samples_per_cell=10,
                           master_seed=2023)
    result, secs = _timed_sweep(proto)
    row = result.rows[0]
    ok = 0.22 <= row.mse_mean <= 0.28 and row.mi_mean <= 0.05 and secs < 60
    acceptance_report(1, ok, f"mse {row.mse_mean:.4f} in [0.22, 0.28], mi {row.mi_mean:.2e} <= 0.05, "
                             f"{secs:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_2_short_delay(size_sweep, acceptance_report):
    result, secs = size_sweep
    per_beta = {}
    for beta in (0.1, 0.3, 1.0):
        rows = [_row(result, "orthogonal", 320, beta, d) for d in (0, 1, 2)]
        per_beta[beta] = (max(r.mse_mean for r in rows), min(r.mi_mean for r in rows))
    # one beta must satisfy both bounds at all three delays
    best = min(per_beta, key=lambda b: (per_beta[b][0], -per_beta[b][1]))
    worst_mse, worst_mi = per_beta[best]
    ok = worst_mse < 0.02 and worst_mi > 0.9
    acceptance_report(2, ok, f"beta={best}: max mse {worst_mse:.2e} < 0.02, "
                             f"min mi {worst_mi:.3f} > 0.9 over delays 0..2")
    assert ok


@pytest.mark.slow
def test_criterion_3_beta_tradeoff(noise_sweeps, acceptance_report):
    result, _ = noise_sweeps[0.0]
    m = {(b, d): _row(result, "orthogonal", 160, b, d).mse_mean for b in (0.05, 1.0) for d in (1, 10)}
    short = m[(1.0, 1)] < m[(0.05, 1)]
    long = m[(1.0, 10)] > m[(0.05, 10)]
    acceptance_report(3, short and long,
                      f"delay 1: mse(1.0)={m[(1.0, 1)]:.2e} < mse(0.05)={m[(0.05, 1)]:.2e}; "
                      f"delay 10: mse(1.0)={m[(1.0, 10)]:.3f} > mse(0.05)={m[(0.05, 10)]:.3f}")
    assert short and long


@pytest.mark.slow
def test_criterion_4_size_scaling(size_sweep, acceptance_report):
    result, secs = size_sweep
    table = capacity_table(result.rows, DELTA_MAX)
    cap = {(kind, k): best_capacity(table, kind, k) for kind in ("orthogonal", "general")
           for k in (80, 320)}
    orth = cap[("orthogonal", 320)] / cap[("orthogonal", 80)]
    gen = cap[("general", 320)] / cap[("general", 80)]
    ok = orth >= 2.0 and gen <= 1.5 and secs < 15 * 60
    acceptance_report(4, ok, f"orthogonal {cap[('orthogonal', 320)]:.1f}/{cap[('orthogonal', 80)]:.1f}"
                             f" = {orth:.2f} >= 2.0; general {cap[('general', 320)]:.2f}/"
                             f"{cap[('general', 80)]:.2f} = {gen:.2f} <= 1.5; sweep {secs:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_5_noise(noise_sweeps, acceptance_report):
    caps = {g: best_capacity(capacity_table(res.rows), "orthogonal", 160)
            for g, (res, _) in noise_sweeps.items()}
    secs = sum(s for _, s in noise_sweeps.values())
    ratio = caps[0.01] / caps[0.0]
    ok = 0.1 <= ratio <= 0.5 and secs < 10 * 60
    acceptance_report(5, ok, f"capacity {caps[0.01]:.1f} / {caps[0.0]:.1f} = {ratio:.3f} "
                             f"in [0.1, 0.5]; sweeps {secs:.0f}s")
    assert ok


@pytest.mark.extended
@pytest.mark.slow
def test_criterion_6_full_scale(acceptance_report):
    proto = ProtocolConfig(k_list=(1280,), beta_list=BETAS, delta_list=tuple(range(19)),
                           samples_per_cell=10, master_seed=2026)
    result, secs = _timed_sweep(proto)
    i_hat = best_capacity(capacity_table(result.rows), "orthogonal", 1280)
    ok = abs(i_hat - 128) <= 32
    acceptance_report(6, ok, f"capacity {i_hat:.1f} within 128 +- 32; {secs / 60:.0f} min")
    assert ok


def test_criterion_7_oracles(acceptance_report):
    rng = np.random.default_rng(7)
    A, B = rng.standard_normal((60, 10)), rng.standard_normal((60, 6))
    exact = exact_normal_equations(A, B, 0.08)
    ridge_err = float(np.max(np.abs(train_ridge(A, B, 0.08) - exact)) / np.max(np.abs(exact)))

    mi_err = 0.0
    for _ in range(50):
        p = rng.random(4)
        joint = (p / p.sum()).reshape(2, 2)
        mi_err = max(mi_err, abs(mutual_information(joint) - mi_oracle(joint)))

    cap_err = max(abs(capacity(SigmoidFit(a, b, "mi_form", 2, 0), DELTA_MAX).i_hat
                      - capacity_oracle(a, b, DELTA_MAX))
                  for a, b in ((0.1, -2.0), (0.02, -4.0), (0.5, 1.0)))

    d = np.arange(13, dtype=float)
    f_mse = fit_mse_sigmoid(np.column_stack([d, 1 / (4 + np.exp(0.45 * d - 2.5))]))
    f_mi = fit_mi_sigmoid(np.column_stack([d, 1 / (1 + np.exp(0.3 * d - 1.8))]))
    fit_err = max(abs(f_mse.a - 0.45), abs(f_mse.b + 2.5), abs(f_mi.a - 0.3), abs(f_mi.b + 1.8))

    trace = am.letters(am.simulate(0, am.Bits.fixed([1, 0], lower=0), 9))

    ok = (ridge_err <= 1e-9 and mi_err <= 1e-12 and cap_err <= 1e-12 and fit_err <= 1e-9
          and trace == "ABDEACDFA")
    acceptance_report(7, ok, f"ridge {ridge_err:.1e}, mi {mi_err:.1e}, capacity {cap_err:.1e}, "
                             f"fits {fit_err:.1e}, trace {trace}")
    assert ok


def test_criterion_8_structure(acceptance_report):
    orth = msv = defect = rho = 0.0
    for k in (10, 80, 320):
        for i, kind in enumerate(Kind):
            W = generate(ConnectivitySpec(kind, k, seed=100 + 7 * k + i)).entries
            msv = max(msv, abs(float(np.linalg.svd(W, compute_uv=False)[0]) - 1),
                      abs(max_singular_value(W) - 1))
            if kind is Kind.ORTHOGONAL:
                orth = max(orth, float(np.max(np.abs(W.T @ W - np.eye(k)))))
            if kind.is_normal:
                defect = max(defect, normality_defect(W))
                rho = max(rho, abs(spectral_radius(W) - 1))
    ok = orth <= 1e-12 and msv <= 1e-10 and defect <= 1e-12 and rho <= 1e-8
    acceptance_report(8, ok, f"|QtQ - I| {orth:.1e}, |msv - 1| {msv:.1e}, defect {defect:.1e}, "
                             f"|rho - 1| {rho:.1e}")
    assert ok
