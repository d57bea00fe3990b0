"""Linearized sigmoid fits, summed information capacity, polynomial fits.

Both sigmoid models are linear in ``(a, b)`` after a log transform:

    MSE(delta) = 1 / (4 + exp(a*delta + b))  ->  log(1/MSE - 4) = a*delta + b
    MI(delta)  = 1 / (1 + exp(a*delta + b))  ->  log(1/MI - 1)  = a*delta + b

The MI equations are additionally weighted by ``exp(-(MI - 0.5)^2 / 0.18)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import InsufficientDataError, InvalidSpecError

EPS = 1e-6
DELTA_MAX = 3000
MSE_FLOOR = 0.25
MI_WEIGHT_WIDTH = 0.18


@dataclass(frozen=True)
class SigmoidFit:
    a: float
    b: float
    variant: str
    points_used: int
    points_dropped: int

    def __call__(self, delta):
        z = self.a * np.asarray(delta, dtype=np.float64) + self.b
        if self.variant == "mse_form":
            # 1/(4 + e^z), written to stay finite for large |z|
            return 0.25 * expit(-(z - math.log(4.0)))
        return expit(-z)

    def as_dict(self):
        return {"a": self.a, "b": self.b, "variant": self.variant,
                "points_used": self.points_used, "points_dropped": self.points_dropped}


@dataclass(frozen=True)
class CapacityEstimate:
    i_hat: float
    delta_max: int
    fit: SigmoidFit


def _points(points):
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidSpecError(f"points must be (delta, value) pairs, got shape {arr.shape}")
    if not np.all(np.isfinite(arr[:, 0])):
        raise InvalidSpecError("delays must be finite")
    return arr[:, 0], arr[:, 1]


def _solve_line(x, y, weights=None):
    design = np.column_stack([x, np.ones_like(x)])
    if weights is not None:
        design = design * weights[:, None]
        y = y * weights
    if np.linalg.matrix_rank(design) < 2:
        raise InsufficientDataError("fit points do not determine a line (need two distinct delays)")
    (a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(a), float(b)


def mi_weight(mi):
    """Weight of one MI equation; 1 at MI = 0.5."""
    return np.exp(-(np.asarray(mi, dtype=np.float64) - 0.5) ** 2 / MI_WEIGHT_WIDTH)


def fit_mse_sigmoid(points, eps=EPS):
    """Least-squares fit of ``log(1/E - 4) = a*delta + b``.

    Points with ``E`` within ``eps`` of 0 or 0.25 (or outside that range)
    are dropped.
    """
    delta, e = _points(points)
    ok = np.isfinite(e) & (e > eps) & (e < MSE_FLOOR - eps)
    if ok.sum() < 2:
        raise InsufficientDataError(
            f"need at least 2 MSE points in ({eps}, {MSE_FLOOR - eps}); got {int(ok.sum())}")
    a, b = _solve_line(delta[ok], np.log(1.0 / e[ok] - 4.0))
    return SigmoidFit(a, b, "mse_form", int(ok.sum()), int((~ok).sum()))


def fit_mi_sigmoid(points, eps=EPS, weighted=True):
    """Weighted least-squares fit of ``log(1/I - 1) = a*delta + b``."""
    delta, mi = _points(points)
    ok = np.isfinite(mi) & (mi > eps) & (mi < 1.0 - eps)
    if ok.sum() < 2:
        raise InsufficientDataError(
            f"need at least 2 MI points in ({eps}, {1 - eps}); got {int(ok.sum())}")
    y = np.log(1.0 / mi[ok] - 1.0)
    w = mi_weight(mi[ok]) if weighted else None
    a, b = _solve_line(delta[ok], y, w)
    return SigmoidFit(a, b, "mi_form", int(ok.sum()), int((~ok).sum()))


def capacity(fit, delta_max=DELTA_MAX):
    """Sum the fitted MI sigmoid over ``delta = 0 .. delta_max`` inclusive."""
    if fit.variant != "mi_form":
        raise InvalidSpecError("capacity needs an MI-form fit")
    if int(delta_max) != delta_max or delta_max < 0:
        raise InvalidSpecError(f"delta_max must be a non-negative integer, got {delta_max!r}")
    terms = fit(np.arange(int(delta_max) + 1))
    return CapacityEstimate(i_hat=math.fsum(terms.tolist()), delta_max=int(delta_max), fit=fit)


def fit_polynomial(points, order=4):
    """Least-squares polynomial coefficients, constant term first.

    Solves the normal equations of the column-scaled Vandermonde system.
    """
    x, y = _points(points)
    if order < 0 or int(order) != order:
        raise InvalidSpecError(f"order must be a non-negative integer, got {order!r}")
    if not np.all(np.isfinite(y)):
        raise InvalidSpecError("values must be finite")
    n_coef = int(order) + 1
    if x.size < n_coef:
        raise InsufficientDataError(f"need at least {n_coef} points for order {order}, got {x.size}")
    V = np.vander(x, n_coef, increasing=True)
    scale = np.linalg.norm(V, axis=0)
    scale[scale == 0] = 1.0
    Vs = V / scale
    if np.linalg.matrix_rank(Vs) < n_coef:
        raise InsufficientDataError(f"need at least {n_coef} distinct abscissae for order {order}")
    gram = Vs.T @ Vs
    coef = np.linalg.solve(gram, Vs.T @ y)
    return coef / scale


def polyval(coef, x):
    """Evaluate coefficients from :func:`fit_polynomial` at ``x``."""
    return np.polynomial.polynomial.polyval(x, coef)
