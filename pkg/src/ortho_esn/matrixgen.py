"""Recurrent connectivity matrices normalized to a unit largest singular value.

Four classes are supported: Haar-random orthogonal, general Gaussian,
symmetric and skew-symmetric. All are rescaled so that their largest singular
value equals ``target_msv``; for the three normal classes this also fixes the
spectral radius.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidSpecError, NumericError
from .seeding import make_rng

logger = logging.getLogger(__name__)

#: Above this size the largest singular value is found by power iteration.
SVD_SIZE_LIMIT = 64
POWER_TOL = 1e-12
POWER_MAX_ITER = 10_000


class Kind(str, Enum):
    ORTHOGONAL = "orthogonal"
    GENERAL = "general"
    SYMMETRIC = "symmetric"
    SKEW_SYMMETRIC = "skew_symmetric"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"orth": "orthogonal", "gen": "general", "sym": "symmetric",
                   "skew": "skew_symmetric", "gen_m": "general",
                   "sym_m": "symmetric", "skew_m": "skew_symmetric"}
        key = str(value).strip().lower().replace("-", "_")
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise InvalidSpecError(f"unknown connectivity kind {value!r}") from None

    @property
    def is_normal(self):
        return self is not Kind.GENERAL


@dataclass(frozen=True)
class ConnectivitySpec:
    kind: Kind
    size: int
    seed: int = 0
    target_msv: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind.parse(self.kind))
        if int(self.size) != self.size or self.size < 1:
            raise InvalidSpecError(f"matrix size must be a positive integer, got {self.size!r}")
        if not np.isfinite(self.target_msv) or self.target_msv <= 0:
            raise InvalidSpecError(f"target_msv must be positive, got {self.target_msv!r}")
        if self.kind is Kind.SKEW_SYMMETRIC and self.size == 1:
            raise InvalidSpecError("a 1x1 skew-symmetric matrix is zero and cannot be normalized")


@dataclass(frozen=True, eq=False)
class RecurrentMatrix:
    entries: np.ndarray
    kind: Kind
    msv: float

    @property
    def size(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)


def _check_finite(W):
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise InvalidSpecError(f"expected a 2-d matrix, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise NumericError("matrix has non-finite entries")
    return W


def _check_square(W):
    W = _check_finite(W)
    if W.shape[0] != W.shape[1]:
        raise InvalidSpecError(f"expected a square matrix, got shape {W.shape}")
    return W


def _power_msv(W, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    """Largest singular value by power iteration on ``W.T @ W``.

    Returns ``None`` when the eigen-residual does not drop below ``tol``
    (relative) within ``max_iter`` iterations.
    """
    # fixed start vector; a random one avoids accidental orthogonality
    v = np.random.default_rng(0x5eed).standard_normal(W.shape[1])
    v /= np.linalg.norm(v)
    WT = np.ascontiguousarray(W.T)
    for _ in range(max_iter):
        z = WT @ (W @ v)
        mu = float(v @ z)
        if mu <= 0.0:
            return 0.0
        resid = np.linalg.norm(z - mu * v)
        v = z / np.linalg.norm(z)
        if resid <= tol * mu:
            return float(np.linalg.norm(W @ v))
    return None


def max_singular_value(W):
    """Operator 2-norm of ``W``.

    Dense SVD for matrices up to ``SVD_SIZE_LIMIT``; power iteration on
    ``W^T W`` beyond that, with a dense-SVD fallback when the top singular
    values are too close for the iteration to settle.
    """
    W = _check_finite(W)
    if W.size == 0:
        return 0.0
    if max(W.shape) > SVD_SIZE_LIMIT:
        sigma = _power_msv(W)
        if sigma is not None:
            return sigma
        logger.debug("power iteration did not settle for %s matrix; using SVD", W.shape)
    return float(np.linalg.svd(W, compute_uv=False)[0])


def spectral_radius(W):
    """Largest eigenvalue modulus of a square matrix."""
    W = _check_square(W)
    try:
        eig = np.linalg.eigvals(W)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"eigenvalue iteration failed for {W.shape} matrix "
            f"(max|w|={np.max(np.abs(W)):.3g}, fro={np.linalg.norm(W):.3g}): {exc}"
        ) from exc
    return float(np.max(np.abs(eig)))


def normality_defect(W):
    """Max-abs entry of the commutator ``W W^T - W^T W``."""
    W = _check_square(W)
    return float(np.max(np.abs(W @ W.T - W.T @ W)))


def normalize(W, target_msv=1.0):
    """Rescale ``W`` so that its largest singular value equals ``target_msv``."""
    W = _check_finite(W)
    sigma = max_singular_value(W)
    if sigma == 0.0:
        raise NumericError("cannot normalize a zero matrix")
    return W * (target_msv / sigma)


def haar_orthogonal(k, rng):
    """Orthogonal matrix distributed by Haar measure (QR with sign fix)."""
    Q, R = np.linalg.qr(rng.standard_normal((k, k)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def generate(spec):
    """Build the recurrent matrix described by ``spec``.

    Deterministic for a fixed ``spec.seed``.
    """
    if not isinstance(spec, ConnectivitySpec):
        raise InvalidSpecError(f"expected ConnectivitySpec, got {type(spec).__name__}")
    rng = make_rng(spec.seed, "connectivity")
    k = spec.size

    if spec.kind is Kind.ORTHOGONAL:
        # already unit-norm; dividing by a computed 1 +- eps would only add noise
        W = haar_orthogonal(k, rng) * spec.target_msv
    else:
        M = rng.standard_normal((k, k))
        if spec.kind is Kind.SYMMETRIC:
            M = (M + M.T) / 2.0
        elif spec.kind is Kind.SKEW_SYMMETRIC:
            M = (M - M.T) / 2.0
        W = normalize(M, spec.target_msv)

    return RecurrentMatrix(entries=W, kind=spec.kind, msv=max_singular_value(W))


def describe(matrix):
    """Summary statistics written next to an exported matrix."""
    W = matrix.entries
    return {
        "kind": matrix.kind.value,
        "size": matrix.size,
        "msv": matrix.msv,
        "spectral_radius": spectral_radius(W),
        "normality_defect": normality_defect(W),
    }
