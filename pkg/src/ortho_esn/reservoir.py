"""Echo state network dynamics and ridge-regression readout.

The reservoir follows

    x_lin = W x_prev + beta * w_in u + gamma * nu
    x     = tanh(x_lin)

with no bias input and no output feedback. The readout is linear in ``x``
and is trained by Tikhonov-regularized least squares.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .errors import InvalidSpecError, NumericError, SingularSystemError
from .matrixgen import RecurrentMatrix
from .seeding import make_rng

DEFAULT_RIDGE = 0.08


@dataclass(frozen=True)
class EsnParams:
    """Hyperparameters of one reservoir.

    Attributes:
        k: Number of reservoir neurons.
        n_in: Input dimension.
        n_out: Output dimension.
        beta: Input gain.
        gamma: Standard deviation of the additive state noise.
        ridge: Tikhonov factor used when training the readout.
        seed: Seed for the input matrix and the noise stream.
    """

    k: int
    n_in: int = 6
    n_out: int = 6
    beta: float = 0.3
    gamma: float = 0.0
    ridge: float = DEFAULT_RIDGE
    seed: int = 0

    def __post_init__(self):
        for name in ("k", "n_in", "n_out"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidSpecError(f"{name} must be a positive integer, got {value!r}")
        for name in ("beta", "gamma", "ridge"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise InvalidSpecError(f"{name} must be finite and >= 0, got {value!r}")


class Reservoir:
    """Mutable reservoir state together with its fixed weights.

    Use :func:`init_reservoir` to construct one from parameters.
    """

    def __init__(self, params, W, w_in, noise_rng=None):
        self.params = params
        self.W = np.ascontiguousarray(W, dtype=np.float64)
        self.w_in = np.ascontiguousarray(w_in, dtype=np.float64)
        self.x = np.zeros(params.k)
        self._noise_rng = noise_rng if noise_rng is not None else make_rng(params.seed, "noise")

    @property
    def k(self):
        return self.params.k

    def reset(self, x=None):
        self.x = np.zeros(self.k) if x is None else np.array(x, dtype=np.float64)

    def draw_noise(self, n_steps):
        """Next ``n_steps`` standard-normal draws from the noise stream."""
        return self._noise_rng.standard_normal((n_steps, self.k))

    def step(self, u, noise_draw=None):
        """Advance one time step and return the new state."""
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.params.n_in,):
            raise InvalidSpecError(f"input must have shape ({self.params.n_in},), got {u.shape}")
        if not np.all(np.isfinite(u)):
            raise NumericError("non-finite input")
        x_lin = self.W @ self.x + self.params.beta * (self.w_in @ u)
        if self.params.gamma > 0:
            if noise_draw is None:
                noise_draw = self.draw_noise(1)[0]
            x_lin = x_lin + self.params.gamma * np.asarray(noise_draw, dtype=np.float64)
        self.x = np.tanh(x_lin)
        return self.x

    def run(self, inputs, noise=None):
        """Drive the reservoir with a whole input sequence.

        Args:
            inputs: ``(T, n_in)`` array of inputs.
            noise: Optional ``(T, k)`` standard-normal draws. When
                ``gamma > 0`` and this is omitted, draws come from the
                reservoir's own noise stream.

        Returns:
            ``(T, k)`` array of states; ``self.x`` is left at the last one.
        """
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.ndim != 2 or inputs.shape[1] != self.params.n_in:
            raise InvalidSpecError(f"inputs must have shape (T, {self.params.n_in}), got {inputs.shape}")
        if not np.all(np.isfinite(inputs)):
            raise NumericError("non-finite input")
        drive = self.params.beta * (inputs @ self.w_in.T)
        if self.params.gamma > 0:
            if noise is None:
                noise = self.draw_noise(inputs.shape[0])
            drive += self.params.gamma * noise
        states = kernels.drive_states(self.W, np.ascontiguousarray(drive), self.x)
        if states.shape[0]:
            self.x = states[-1].copy()
        return states


def init_reservoir(params, W):
    """Create a reservoir with uniform input weights in [-0.5, 0.5] and zero state."""
    entries = W.entries if isinstance(W, RecurrentMatrix) else np.asarray(W, dtype=np.float64)
    if entries.shape != (params.k, params.k):
        raise InvalidSpecError(f"W has shape {entries.shape}, expected ({params.k}, {params.k})")
    rng = make_rng(params.seed, "w_in")
    w_in = rng.uniform(-0.5, 0.5, size=(params.k, params.n_in))
    return Reservoir(params, entries, w_in, noise_rng=make_rng(params.seed, "noise"))


def readout(w_out, x):
    """Raw (unclamped) linear readout ``w_out @ x``.

    ``x`` may be a single state or a ``(T, k)`` stack of states.
    """
    w_out = np.asarray(w_out, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if w_out.ndim != 2 or x.shape[-1] != w_out.shape[1]:
        raise InvalidSpecError(f"cannot apply readout {w_out.shape} to state {x.shape}")
    return x @ w_out.T


def train_ridge(states, targets, ridge=DEFAULT_RIDGE):
    """Solve ``(A^T A + ridge I) w^T = A^T B`` for the readout.

    Args:
        states: ``(T, k)`` matrix ``A`` of reservoir states.
        targets: ``(T, n_out)`` matrix ``B`` of training signals.
        ridge: Tikhonov factor; 0 gives ordinary least squares.

    Returns:
        ``(n_out, k)`` readout matrix.

    Raises:
        SingularSystemError: ``A^T A`` is singular and ``ridge`` is 0.
    """
    A = np.asarray(states, dtype=np.float64)
    B = np.asarray(targets, dtype=np.float64)
    if B.ndim == 1:
        B = B[:, None]
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[0] != B.shape[0]:
        raise InvalidSpecError(f"incompatible training data: states {A.shape}, targets {B.shape}")
    if not np.isfinite(ridge) or ridge < 0:
        raise InvalidSpecError(f"ridge must be finite and >= 0, got {ridge!r}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise NumericError("non-finite training data")

    k = A.shape[1]
    if ridge == 0 and np.linalg.matrix_rank(A) < k:
        raise SingularSystemError(
            "A^T A is singular (rank-deficient states); use a ridge factor > 0"
        )
    gram = A.T @ A
    gram[np.diag_indices(k)] += ridge
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            "normal equations are not positive definite; use a ridge factor > 0"
        ) from exc
    return scipy.linalg.cho_solve(factor, A.T @ B, check_finite=False).T


def clamp_probability(o):
    """Clip outputs into [0, 1] so they can be read as probabilities."""
    return np.clip(np.asarray(o, dtype=np.float64), 0.0, 1.0)
