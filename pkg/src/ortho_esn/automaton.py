"""Six-state test process with a tunable inference delay.

The process cycles ``A -> (B|C) -> D -> (E|F) -> A`` with one state per time
step. Leaving ``A`` in cycle ``tau`` reads the hidden bit ``v[tau]``; leaving
``D`` reads ``v[tau - delta]``. The branch taken at ``D`` is therefore fixed
by the ``B``/``C`` choice made ``delta`` cycles (``4 * delta + 1`` steps)
earlier, while the branch at ``A`` cannot be predicted at all.

States are handled as integer codes ``0..5`` for ``A..F``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpecError
from .seeding import make_rng

STATES = "ABCDEF"
A, B, C, D, E, F = range(6)
N_STATES = 6
CYCLE = 4

_BIT_CHUNK = 1024


def state_code(s):
    """Integer code for a state letter or code."""
    if isinstance(s, (int, np.integer)):
        if 0 <= s < N_STATES:
            return int(s)
    elif isinstance(s, str) and len(s) == 1 and s.upper() in STATES:
        return STATES.index(s.upper())
    raise InvalidSpecError(f"not a state: {s!r}")


def letters(seq):
    """Render a sequence of state codes as a string such as ``"ABDEA"``."""
    return "".join(STATES[int(s)] for s in seq)


class Bits:
    """Hidden bit array ``v[i]`` defined for ``i >= lower``.

    Random bits are drawn lazily in fixed-size chunks so that the value at an
    index never depends on access order. ``Bits.fixed`` wraps explicit values.
    """

    def __init__(self, seed=0, lower=0):
        self.lower = int(lower)
        self._rng = make_rng(seed, "automaton_bits")
        self._values = np.empty(0, dtype=np.int8)

    @classmethod
    def fixed(cls, values, lower=0):
        bits = cls.__new__(cls)
        bits.lower = int(lower)
        bits._rng = None
        bits._values = np.asarray(values, dtype=np.int8)
        if np.any((bits._values != 0) & (bits._values != 1)):
            raise InvalidSpecError("bit values must be 0 or 1")
        return bits

    def _ensure(self, n):
        while self._values.size < n:
            if self._rng is None:
                raise IndexError(f"bit index {self.lower + n - 1} beyond fixed values")
            chunk = (self._rng.random(_BIT_CHUNK) < 0.5).astype(np.int8)
            self._values = np.concatenate([self._values, chunk])

    def __getitem__(self, i):
        if i < self.lower:
            raise IndexError(f"bit index {i} below lower bound {self.lower}")
        self._ensure(i - self.lower + 1)
        return int(self._values[i - self.lower])

    def span(self, start, stop):
        """Bits for indices ``start .. stop-1`` as an int8 array."""
        if start < self.lower:
            raise IndexError(f"bit index {start} below lower bound {self.lower}")
        self._ensure(stop - self.lower)
        return self._values[start - self.lower:stop - self.lower].copy()


@dataclass(frozen=True)
class AutomatonConfig:
    delta: int
    seed: int = 0
    length: int = 1

    def __post_init__(self):
        if int(self.delta) != self.delta or self.delta < 0:
            raise InvalidSpecError(f"delta must be a non-negative integer, got {self.delta!r}")
        if int(self.length) != self.length or self.length < 1:
            raise InvalidSpecError(f"length must be a positive integer, got {self.length!r}")

    def bits(self):
        return Bits(self.seed, lower=-self.delta)


@dataclass(frozen=True)
class AutomatonState:
    s: int
    tau: int
    delta: int
    v: Bits

    @classmethod
    def initial(cls, delta, v):
        return cls(s=A, tau=-1, delta=delta, v=v)

    @property
    def letter(self):
        return STATES[self.s]


def next_state(state):
    """Apply one transition rule to ``state``."""
    s, tau = state.s, state.tau
    if s == A:
        tau += 1
        s = B if state.v[tau] else C
    elif s in (B, C):
        s = D
    elif s == D:
        s = E if state.v[tau - state.delta] else F
    else:
        s = A
    return AutomatonState(s=s, tau=tau, delta=state.delta, v=state.v)


def simulate(delta, v, length):
    """Step the rules ``length - 1`` times from ``A`` and return the codes."""
    state = AutomatonState.initial(delta, v)
    out = np.empty(length, dtype=np.int8)
    out[0] = state.s
    for t in range(1, length):
        state = next_state(state)
        out[t] = state.s
    return out


def sequence_from_bits(delta, v, length):
    """Vectorized equivalent of :func:`simulate`."""
    n_cycles = -(-length // CYCLE)
    first = v.span(0, n_cycles)
    second = v.span(-delta, n_cycles - delta)
    seq = np.empty((n_cycles, CYCLE), dtype=np.int8)
    seq[:, 0] = A
    seq[:, 1] = np.where(first == 1, B, C)
    seq[:, 2] = D
    seq[:, 3] = np.where(second == 1, E, F)
    return seq.ravel()[:length]


def generate(config):
    """State codes ``s(0) .. s(length - 1)`` for ``config``."""
    return sequence_from_bits(config.delta, config.bits(), config.length)


def encode(s):
    """One-hot 6-vector for a single state."""
    u = np.zeros(N_STATES)
    u[state_code(s)] = 1.0
    return u


def encode_sequence(seq):
    """``(T, 6)`` one-hot matrix for a sequence of state codes."""
    seq = np.asarray(seq, dtype=np.intp)
    return np.eye(N_STATES)[seq]


_NAIVE = np.zeros((N_STATES, N_STATES))
_NAIVE[A, [B, C]] = 0.5
_NAIVE[[B, C], D] = 1.0
_NAIVE[D, [E, F]] = 0.5
_NAIVE[[E, F], A] = 1.0
_NAIVE.setflags(write=False)


def naive_probabilities(s):
    """Next-state distribution for an observer that only sees ``s``."""
    return _NAIVE[state_code(s)].copy()


def perfect_probabilities(history, delta):
    """Next-state distribution given the full history up to the last entry.

    At ``D`` the outcome is read off the state ``4 * delta + 1`` steps back;
    everywhere else, or when that far back is not in ``history``, this is the
    naive distribution.
    """
    history = np.asarray([state_code(s) for s in history] if not isinstance(history, np.ndarray)
                         else history)
    t = len(history) - 1
    if t < 0:
        raise InvalidSpecError("history is empty")
    s = int(history[t])
    back = t - CYCLE * delta - 1
    if s != D or back < 0:
        return naive_probabilities(s)
    p = np.zeros(N_STATES)
    cue = int(history[back])
    if cue == B:
        p[E] = 1.0
    elif cue == C:
        p[F] = 1.0
    else:
        raise InvalidSpecError(f"history is not a valid trace: state {STATES[cue]} at t={back}")
    return p
