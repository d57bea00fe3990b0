"""Oracle and invariant checks run by ``ortho-esn validate``.

Each check compares a package routine against an independent computation
(exact rational arithmetic, high-precision summation, dense SVD or a hand
trace) and returns ``(passed, detail)``.
"""

import math
from fractions import Fraction

import mpmath
import numpy as np

from . import automaton as am
from .experiment import ProtocolConfig, joint_distribution, mse_at_d, mutual_information, run_trial
from .fitting import capacity, fit_mi_sigmoid, fit_mse_sigmoid
from .matrixgen import (ConnectivitySpec, Kind, RecurrentMatrix, generate, max_singular_value,
                        normality_defect, spectral_radius)
from .reservoir import EsnParams, train_ridge


def exact_normal_equations(A, B, ridge):
    """Solve ``(A^T A + ridge I) X = A^T B`` in exact rational arithmetic.

    Returns ``X^T`` as floats.
    """
    A = [[Fraction(float(v)) for v in row] for row in np.asarray(A)]
    B = [[Fraction(float(v)) for v in row] for row in np.asarray(B)]
    lam = Fraction(float(ridge))
    k, m, T = len(A[0]), len(B[0]), len(A)
    M = [[sum(A[t][i] * A[t][j] for t in range(T)) + (lam if i == j else 0) for j in range(k)]
         + [sum(A[t][i] * B[t][c] for t in range(T)) for c in range(m)]
         for i in range(k)]
    for col in range(k):
        piv = next(r for r in range(col, k) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(k):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return np.array([[float(M[i][k + c]) for i in range(k)] for c in range(m)])


def mi_oracle(joint, dps=50):
    """Mutual information of a 2x2 table by direct high-precision summation."""
    with mpmath.workdps(dps):
        p = [[mpmath.mpf(float(v)) for v in row] for row in np.asarray(joint)]
        rows = [p[0][0] + p[0][1], p[1][0] + p[1][1]]
        cols = [p[0][0] + p[1][0], p[0][1] + p[1][1]]
        total = mpmath.mpf(0)
        for i in range(2):
            for j in range(2):
                if p[i][j] > 0:
                    total += p[i][j] * mpmath.log(p[i][j] / (rows[i] * cols[j]), 2)
        return float(total)


def capacity_oracle(a, b, delta_max, dps=50):
    """Sum of ``1/(1+exp(a*d+b))`` for ``d = 0..delta_max`` at high precision."""
    with mpmath.workdps(dps):
        a, b = mpmath.mpf(a), mpmath.mpf(b)
        return float(mpmath.fsum(1 / (1 + mpmath.exp(a * d + b)) for d in range(delta_max + 1)))


def _rel(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return float(np.max(np.abs(x - y)) / max(np.max(np.abs(y)), 1e-300))


def _matrix(kind, k, seed, fault=False):
    W = generate(ConnectivitySpec(kind=kind, size=k, seed=seed))
    if fault:
        return RecurrentMatrix(entries=W.entries * 1.001, kind=W.kind, msv=W.msv)
    return W


def check_orthogonality(fault=False):
    worst = 0.0
    for k in (4, 16, 100):
        Q = _matrix(Kind.ORTHOGONAL, k, 11 + k, fault).entries
        worst = max(worst, float(np.max(np.abs(Q.T @ Q - np.eye(k)))))
    return worst <= 1e-12, f"max|Q^T Q - I| = {worst:.2e}"


def check_unit_msv(fault=False):
    worst = 0.0
    for kind in Kind:
        for k in (8, 80):
            W = _matrix(kind, k, 3 + k, fault).entries
            worst = max(worst, abs(float(np.linalg.svd(W, compute_uv=False)[0]) - 1.0),
                        abs(max_singular_value(W) - 1.0))
    return worst <= 1e-10, f"max |msv - 1| = {worst:.2e}"


def check_normal_kinds(fault=False):
    worst_defect, worst_rho = 0.0, 0.0
    for kind in (Kind.ORTHOGONAL, Kind.SYMMETRIC, Kind.SKEW_SYMMETRIC):
        for k in (8, 80):
            W = _matrix(kind, k, 5 + k, fault).entries
            worst_defect = max(worst_defect, normality_defect(W))
            worst_rho = max(worst_rho, abs(spectral_radius(W) - 1.0))
    ok = worst_defect <= 1e-12 and worst_rho <= 1e-8
    return ok, f"defect {worst_defect:.2e}, |rho - 1| {worst_rho:.2e}"


def check_ridge_oracle():
    rng = np.random.default_rng(2024)
    A = rng.standard_normal((50, 8))
    B = rng.standard_normal((50, 2))
    err = _rel(train_ridge(A, B, 0.08), exact_normal_equations(A, B, 0.08))
    return err <= 1e-9, f"relative error {err:.2e}"


def check_mi_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    tables = [np.array([[0.375, 0.125], [0.125, 0.375]]), np.diag([0.5, 0.5])]
    for _ in range(20):
        p = rng.random(4)
        tables.append((p / p.sum()).reshape(2, 2))
    for joint in tables:
        joint = joint / joint.sum()
        worst = max(worst, abs(mutual_information(joint) - mi_oracle(joint)))
    return worst <= 1e-12, f"max abs error {worst:.2e}"


def check_capacity_oracle():
    worst = 0.0
    for a, b in ((0.1, -2.0), (0.03, -1.5), (1.4, -7.0)):
        fit = fit_mi_sigmoid([(0, 1 / (1 + math.exp(b))), (1, 1 / (1 + math.exp(a + b)))])
        worst = max(worst, abs(capacity(fit, 3000).i_hat - capacity_oracle(fit.a, fit.b, 3000)))
    return worst <= 1e-12, f"max abs error {worst:.2e}"


def check_sigmoid_roundtrip():
    d = np.arange(13, dtype=float)
    mse = 1.0 / (4.0 + np.exp(0.5 * d - 3.0))
    mi = 1.0 / (1.0 + np.exp(0.4 * d - 2.0))
    f1 = fit_mse_sigmoid(np.column_stack([d, mse]))
    f2 = fit_mi_sigmoid(np.column_stack([d, mi]))
    err = max(abs(f1.a - 0.5), abs(f1.b + 3.0), abs(f2.a - 0.4), abs(f2.b + 2.0))
    return err <= 1e-9, f"max parameter error {err:.2e}"


def check_automaton_trace():
    v = am.Bits.fixed([1, 0, 1, 1], lower=0)
    stepped = am.letters(am.simulate(0, v, 9))
    vectorized = am.letters(am.sequence_from_bits(0, v, 9))
    ok = stepped == vectorized == "ABDEACDFA"
    return ok, f"stepped {stepped}, vectorized {vectorized}"


def _short_proto():
    return ProtocolConfig(transient_steps=40, train_steps=400, test_steps=800)


def check_naive_floor():
    sigma = np.tile([0, 1], 50)
    mse = mse_at_d(np.full(sigma.size, 0.5), sigma)
    mi = mutual_information(joint_distribution(np.full(sigma.size, 0.5), sigma))
    return mse == 0.25 and mi == 0.0, f"constant-0.5 predictor: mse {mse!r}, mi {mi!r}"


def check_perfect_predictor():
    delta = 3
    proto = _short_proto()
    result = run_trial(
        EsnParams(k=4), np.eye(4), am.AutomatonConfig(delta=delta, seed=99), proto,
        predictor=lambda seq, t: am.perfect_probabilities(seq[:t + 1], delta),
    )
    ok = result.mse_at_d == 0.0 and abs(result.mi_bits - 1.0) <= 0.01
    return ok, f"perfect predictor: mse {result.mse_at_d!r}, mi {result.mi_bits:.4f}"


CHECKS = {
    "orthogonality": check_orthogonality,
    "unit_msv": check_unit_msv,
    "normal_kinds": check_normal_kinds,
    "ridge_oracle": check_ridge_oracle,
    "mi_oracle": check_mi_oracle,
    "capacity_oracle": check_capacity_oracle,
    "sigmoid_roundtrip": check_sigmoid_roundtrip,
    "automaton_trace": check_automaton_trace,
    "naive_floor": check_naive_floor,
    "perfect_predictor": check_perfect_predictor,
}
FAULTABLE = {"orthogonality", "unit_msv", "normal_kinds"}


def run_checks(fault=False):
    """Run every check; returns a list of ``(name, passed, detail)``."""
    report = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn(fault=fault) if name in FAULTABLE else fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        report.append((name, bool(ok), detail))
    return report
