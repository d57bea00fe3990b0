"""Trial protocol, scoring at D-transitions, and parameter sweeps.

A trial drives one reservoir through a single continuous sequence split into
a discarded transient, a training window and a test window. The readout is
fit only on steps where the current state is ``D``; at test time the output
for ``E`` is scored against the true next state.
"""

import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import automaton as am
from .errors import InvalidSpecError, OrthoEsnError, ProtocolError
from .matrixgen import ConnectivitySpec, Kind, generate
from .reservoir import EsnParams, clamp_probability, init_reservoir, readout, train_ridge
from .seeding import derive_seed

logger = logging.getLogger(__name__)

MARGINAL_MODES = ("empirical", "paper_half")
RESULT_COLUMNS = ("kind", "k", "beta", "gamma", "delta", "samples",
                  "mse_mean", "mse_std", "mi_mean", "mi_std")
JOINT_TOL = 1e-9


@dataclass(frozen=True)
class ProtocolConfig:
    transient_steps: int = 300
    train_steps: int = 3000
    test_steps: int = 3000
    ridge: float = 0.08
    delta_list: tuple = tuple(range(19))
    samples_per_cell: int = 10
    beta_list: tuple = (0.3,)
    k_list: tuple = (80,)
    gamma: float = 0.0
    kinds: tuple = (Kind.ORTHOGONAL,)
    master_seed: int = 0
    marginal_mode: str = "empirical"

    def __post_init__(self):
        set_ = lambda name, value: object.__setattr__(self, name, value)  # noqa: E731
        kinds = self.kinds
        if isinstance(kinds, (str, Kind)):
            kinds = (kinds,)
        set_("kinds", tuple(Kind.parse(k) for k in kinds))
        set_("delta_list", tuple(int(d) for d in self.delta_list))
        set_("beta_list", tuple(float(b) for b in self.beta_list))
        set_("k_list", tuple(int(k) for k in self.k_list))
        for name in ("transient_steps", "train_steps", "test_steps", "samples_per_cell"):
            if getattr(self, name) < 1:
                raise InvalidSpecError(f"{name} must be >= 1")
        if not (self.delta_list and self.beta_list and self.k_list and self.kinds):
            raise InvalidSpecError("delta_list, beta_list, k_list and kinds must be non-empty")
        if any(d < 0 for d in self.delta_list):
            raise InvalidSpecError("delays must be >= 0")
        if any(not np.isfinite(b) or b < 0 for b in self.beta_list):
            raise InvalidSpecError("beta values must be finite and >= 0")
        if any(k < 1 for k in self.k_list):
            raise InvalidSpecError("reservoir sizes must be >= 1")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise InvalidSpecError("gamma must be finite and >= 0")
        if not np.isfinite(self.ridge) or self.ridge < 0:
            raise InvalidSpecError("ridge must be finite and >= 0")
        if self.marginal_mode not in MARGINAL_MODES:
            raise InvalidSpecError(f"marginal_mode must be one of {MARGINAL_MODES}")

    @property
    def total_steps(self):
        return self.transient_steps + self.train_steps + self.test_steps

    @classmethod
    def from_dict(cls, data):
        """Build from a JSON-style mapping.

        ``lambda`` is accepted for ``ridge`` and ``kind`` (a name or a list of
        names) for ``kinds``.
        """
        data = dict(data)
        if "lambda" in data:
            data["ridge"] = data.pop("lambda")
        if "kind" in data:
            data["kinds"] = data.pop("kind")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidSpecError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self):
        d = asdict(self)
        d["kinds"] = [k.value for k in self.kinds]
        for name in ("delta_list", "beta_list", "k_list"):
            d[name] = list(d[name])
        return d


@dataclass
class TrialResult:
    """Test-window predictions and scores for one trial.

    ``raw`` and ``clamped`` are ``(n, 6)`` readouts at the test D-steps
    ``times``; ``sigma[i]`` is 1 when the next state was ``E``.
    """

    times: np.ndarray
    raw: np.ndarray
    clamped: np.ndarray
    sigma: np.ndarray
    mse_at_d: float
    joint: np.ndarray
    mi_bits: float
    marginal_mode: str = "empirical"
    extras: dict = field(default_factory=dict)


def _as_pair(predictions, sigma):
    p = np.asarray(predictions, dtype=np.float64).ravel()
    s = np.asarray(sigma, dtype=np.float64).ravel()
    if p.size == 0 or p.size != s.size:
        raise InvalidSpecError(f"need equal, non-zero lengths (got {p.size} and {s.size})")
    return p, s


def mse_at_d(predictions, sigma):
    """Mean of ``(sigma - o_E)^2`` over D-occurrences, ``o_E`` unclamped."""
    p, s = _as_pair(predictions, sigma)
    return float(np.mean((s - p) ** 2))


def joint_distribution(predictions, sigma):
    """2x2 table ``joint[s_hat, s]`` from clamped E-probabilities.

    Row index is the network's guess (1 = E), column index the truth.
    """
    p, s = _as_pair(predictions, sigma)
    p = clamp_probability(p)
    joint = np.empty((2, 2))
    joint[1, 1] = np.mean(p * s)
    joint[0, 1] = np.mean((1 - p) * s)
    joint[1, 0] = np.mean(p * (1 - s))
    joint[0, 0] = np.mean((1 - p) * (1 - s))
    return joint


def mutual_information(joint, marginal_mode="empirical"):
    """Mutual information in bits of a 2x2 joint table.

    ``"empirical"`` takes marginals from row and column sums;
    ``"paper_half"`` fixes both marginals at 0.5. Zero cells contribute 0.
    """
    joint = np.asarray(joint, dtype=np.float64)
    if joint.shape != (2, 2) or np.any(joint < 0) or not np.all(np.isfinite(joint)):
        raise InvalidSpecError("joint must be a non-negative finite 2x2 table")
    if abs(joint.sum() - 1.0) > JOINT_TOL:
        raise InvalidSpecError(f"joint sums to {joint.sum()!r}, expected 1")
    if marginal_mode == "empirical":
        p_hat = joint.sum(axis=1)
        p_s = joint.sum(axis=0)
    elif marginal_mode == "paper_half":
        p_hat = p_s = np.array([0.5, 0.5])
    else:
        raise InvalidSpecError(f"marginal_mode must be one of {MARGINAL_MODES}")
    total = 0.0
    for i in range(2):
        for j in range(2):
            pij = joint[i, j]
            if pij > 0:
                denom = p_hat[i] * p_s[j]
                if denom >= sys.float_info.min:
                    total += pij * math.log2(pij / denom)
                else:  # product underflows for tiny cells
                    total += pij * (math.log2(pij) - math.log2(p_hat[i]) - math.log2(p_s[j]))
    return max(float(total), 0.0) if marginal_mode == "empirical" else float(total)


def score(raw, sigma, marginal_mode="empirical"):
    """MSE, joint table and MI for raw E-outputs at D-steps."""
    raw = np.asarray(raw, dtype=np.float64)
    joint = joint_distribution(raw, sigma)
    return mse_at_d(raw, sigma), joint, mutual_information(joint, marginal_mode)


def run_trial(esn, W, auto, proto, predictor=None):
    """Transient, train and test one reservoir on one sequence.

    Args:
        esn: Reservoir parameters (``n_in`` and ``n_out`` must be 6).
        W: Recurrent matrix.
        auto: Automaton configuration; its length is extended to cover the
            protocol if needed.
        proto: Step counts and scoring options.
        predictor: Optional ``f(seq, t) -> 6-vector`` used in place of the
            trained reservoir during the test window.

    Raises:
        ProtocolError: a window contains no ``D`` state.
    """
    if esn.n_in != am.N_STATES or esn.n_out != am.N_STATES:
        raise InvalidSpecError("the test process needs n_in = n_out = 6")
    n_total = proto.total_steps
    if auto.length < n_total + 1:
        auto = replace(auto, length=n_total + 1)
    seq = am.generate(auto)

    train_start = proto.transient_steps
    test_start = train_start + proto.train_steps
    t_idx = np.arange(n_total)
    at_d = seq[:n_total] == am.D
    train_t = t_idx[at_d & (t_idx >= train_start) & (t_idx < test_start)]
    test_t = t_idx[at_d & (t_idx >= test_start)]
    if train_t.size == 0 or test_t.size == 0:
        raise ProtocolError("no D-transitions in the training or test window; lengthen the windows")

    if predictor is None:
        res = init_reservoir(esn, W)
        states = res.run(am.encode_sequence(seq[:n_total]))
        targets = am.encode_sequence(seq[train_t + 1])
        w_out = train_ridge(states[train_t], targets, esn.ridge)
        raw = readout(w_out, states[test_t])
    else:
        raw = np.array([predictor(seq, int(t)) for t in test_t], dtype=np.float64)

    sigma = (seq[test_t + 1] == am.E).astype(np.int8)
    mse, joint, mi = score(raw[:, am.E], sigma, proto.marginal_mode)
    return TrialResult(times=test_t, raw=raw, clamped=clamp_probability(raw), sigma=sigma,
                       mse_at_d=mse, joint=joint, mi_bits=mi,
                       marginal_mode=proto.marginal_mode)


@dataclass(frozen=True, order=True)
class Cell:
    """Coordinates of one trial in a sweep."""

    kind: str
    k: int
    beta_index: int
    delta: int
    sample: int
    beta: float = field(compare=False)


def cell_seed(master_seed, kind, k, beta_index, delta, sample):
    return derive_seed("cell", int(master_seed), Kind.parse(kind).value, int(k),
                       int(beta_index), int(delta), int(sample))


def cell_inputs(cell, proto):
    """Matrix, reservoir parameters and automaton config for ``cell``."""
    seed = cell_seed(proto.master_seed, cell.kind, cell.k, cell.beta_index, cell.delta, cell.sample)
    W = generate(ConnectivitySpec(kind=cell.kind, size=cell.k, seed=derive_seed(seed, "matrix")))
    esn = EsnParams(k=cell.k, beta=cell.beta, gamma=proto.gamma, ridge=proto.ridge,
                    seed=derive_seed(seed, "esn"))
    auto = am.AutomatonConfig(delta=cell.delta, seed=derive_seed(seed, "sequence"),
                              length=proto.total_steps + 1)
    return W, esn, auto


def run_cell(cell, proto):
    W, esn, auto = cell_inputs(cell, proto)
    try:
        return run_trial(esn, W, auto, proto)
    except OrthoEsnError as exc:
        raise type(exc)(f"{exc} [cell kind={cell.kind} k={cell.k} beta={cell.beta} "
                        f"delta={cell.delta} sample={cell.sample}]") from exc


def _cell_metrics(args):
    cell, proto = args
    result = run_cell(cell, proto)
    return cell, result.mse_at_d, result.mi_bits


def iter_cells(proto):
    for kind in proto.kinds:
        for k in proto.k_list:
            for bi, beta in enumerate(proto.beta_list):
                for delta in proto.delta_list:
                    for sample in range(proto.samples_per_cell):
                        yield Cell(kind=kind.value, k=k, beta_index=bi, delta=delta,
                                   sample=sample, beta=beta)


@dataclass(frozen=True)
class CellSummary:
    kind: str
    k: int
    beta: float
    gamma: float
    delta: int
    samples: int
    mse_mean: float
    mse_std: float
    mi_mean: float
    mi_std: float

    def as_row(self):
        return {name: getattr(self, name) for name in RESULT_COLUMNS}


@dataclass
class SweepResult:
    config: ProtocolConfig
    rows: list
    trials: dict

    def sub_seeds(self):
        """Per-cell sub-seeds, keyed by coordinates, in output order."""
        p = self.config
        return [
            {"kind": c.kind, "k": c.k, "beta": c.beta, "delta": c.delta, "sample": c.sample,
             "seed": cell_seed(p.master_seed, c.kind, c.k, c.beta_index, c.delta, c.sample)}
            for c in sorted(self.trials)
        ]


def default_jobs():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


def sweep(proto, jobs=1, progress=None):
    """Run every cell of ``proto`` and summarize per (kind, k, beta, delta).

    Cells are independent; with ``jobs > 1`` they run in worker processes.
    Output order depends only on cell coordinates.
    """
    cells = list(iter_cells(proto))
    work = [(c, proto) for c in cells]
    trials = {}
    if jobs and jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for cell, mse, mi in pool.map(_cell_metrics, work, chunksize=4):
                trials[cell] = (mse, mi)
                if progress:
                    progress(len(trials), len(cells))
    else:
        for item in work:
            cell, mse, mi = _cell_metrics(item)
            trials[cell] = (mse, mi)
            if progress:
                progress(len(trials), len(cells))

    groups = {}
    for cell in sorted(trials):
        groups.setdefault((cell.kind, cell.k, cell.beta_index, cell.delta, cell.beta), []).append(trials[cell])
    rows = []
    for (kind, k, _, delta, beta), vals in groups.items():
        arr = np.array(vals)
        rows.append(CellSummary(kind=kind, k=k, beta=beta, gamma=proto.gamma, delta=delta,
                                samples=len(vals),
                                mse_mean=float(arr[:, 0].mean()), mse_std=float(arr[:, 0].std()),
                                mi_mean=float(arr[:, 1].mean()), mi_std=float(arr[:, 1].std())))
    return SweepResult(config=proto, rows=rows, trials=trials)
