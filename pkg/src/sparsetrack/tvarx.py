"""Synthetic time-varying ARX (TVARX) data and block regressors.

The system is::

    y_k = sum_p a_p(t_k) y_{k-p} + sum_q b_q(t_k) u_{k-q} + e_k,   t_k = k / sample_rate

with zero initial conditions.  Every ``m`` samples a block is collected; its
regressor matrix has one row per target ``y_k`` of the block::

    (y_{k-1}, ..., y_{k-P}, u_{k-1}, ..., u_{k-Q})

and the unknown is ``v = (a_1..a_P, b_1..b_Q)`` with ``P, Q`` the
overestimated orders.  True coefficients sit at positions ``0..p_true-1``
and ``p_est..p_est+q_true-1``.
"""
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import ConfigError, coerce, dump_flat, load_flat
from .csvio import write_table, write_vector_csv
from .elastic_net import MeasurementRound
from .errors import InvalidParameterError, ShapeError, SimulationDivergence

DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant coefficient vector: ``pieces = ((start, coeffs), ...)``.

    The value at time ``t`` is the coefficient tuple of the last piece whose
    start is at most ``t`` (the first piece before its own start).
    """

    pieces: tuple

    def __post_init__(self):
        pieces = tuple(sorted((float(s), tuple(float(c) for c in np.atleast_1d(v))) for s, v in self.pieces))
        if not pieces:
            raise InvalidParameterError("a schedule needs at least one piece")
        if len({len(v) for _, v in pieces}) != 1:
            raise InvalidParameterError("all pieces of a schedule must have the same length")
        object.__setattr__(self, "pieces", pieces)

    @property
    def order(self):
        return len(self.pieces[0][1])

    def __call__(self, t):
        value = self.pieces[0][1]
        for start, coeffs in self.pieces:
            if start <= t:
                value = coeffs
            else:
                break
        return np.array(value)

    def sample(self, times):
        times = np.asarray(times, dtype=np.float64)
        starts = np.array([s for s, _ in self.pieces])
        values = np.array([v for _, v in self.pieces])
        idx = np.clip(np.searchsorted(starts, times, side="right") - 1, 0, None)
        return values[idx]

    @classmethod
    def constant(cls, *coeffs):
        return cls(((0.0, coeffs),))

    @classmethod
    def parse(cls, text):
        """Parse ``"0:-0.9; 0.5:0.9"``; multi-coefficient pieces use commas."""
        pieces = []
        for chunk in str(text).split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            try:
                start, values = chunk.split(":", 1)
                pieces.append((float(start), [float(v) for v in values.split(",")]))
            except ValueError:
                raise ConfigError(f"bad schedule piece {chunk!r}") from None
        return cls(tuple(pieces))

    def format(self):
        return "; ".join(
            f"{format(s, '.17g')}:" + ",".join(format(c, ".17g") for c in v) for s, v in self.pieces
        )


@dataclass(frozen=True)
class TvarxScenario:
    p_true: int
    q_true: int
    p_est: int
    q_est: int
    a_schedule: Schedule
    b_schedule: Schedule
    T: int
    sample_rate: float
    m: int
    snr_db: float
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise InvalidParameterError("block size m must be at least 1")
        if self.p_true > self.p_est or self.q_true > self.q_est:
            raise InvalidParameterError("estimated orders must cover the true orders")
        if self.a_schedule.order != self.p_true or self.b_schedule.order != self.q_true:
            raise InvalidParameterError("schedule lengths must match p_true and q_true")
        if self.T < 0 or self.sample_rate <= 0:
            raise InvalidParameterError("T must be >= 0 and sample_rate > 0")

    @property
    def n(self):
        return self.p_est + self.q_est

    @property
    def num_blocks(self):
        return self.T // self.m

    @property
    def active_indices(self):
        return list(range(self.p_true)) + [self.p_est + q for q in range(self.q_true)]

    def with_seed(self, seed):
        return replace(self, seed=int(seed))

    def block_times(self):
        return np.arange(self.num_blocks) * self.m / self.sample_rate

    def truth_at(self, times):
        times = np.atleast_1d(np.asarray(times, dtype=np.float64))
        v = np.zeros((times.size, self.n))
        v[:, : self.p_true] = self.a_schedule.sample(times)
        v[:, self.p_est : self.p_est + self.q_true] = self.b_schedule.sample(times)
        return v

    def block_truth(self):
        """True parameter vector of each block, taken at the block's first sample."""
        return self.truth_at(self.block_times())

    def to_mapping(self):
        return {
            "p_true": self.p_true,
            "q_true": self.q_true,
            "p_est": self.p_est,
            "q_est": self.q_est,
            "a_schedule": self.a_schedule.format(),
            "b_schedule": self.b_schedule.format(),
            "T": self.T,
            "sample_rate": float(self.sample_rate),
            "m": self.m,
            "snr_db": float(self.snr_db),
            "seed": self.seed,
        }


SCENARIO_KEYS = ("p_true", "q_true", "p_est", "q_est", "a_schedule", "b_schedule",
                 "t", "sample_rate", "m", "snr_db", "seed")


def benchmark_scenario(seed=0):
    """TVARX(1,1) with step-wise a1, b1 over 1 s at 1 kHz, orders overestimated as 10+10."""
    return TvarxScenario(
        p_true=1,
        q_true=1,
        p_est=10,
        q_est=10,
        a_schedule=Schedule(((0.0, (-0.9,)), (0.5, (0.9,)))),
        b_schedule=Schedule(((0.0, (0.7,)), (0.2, (-0.8,)), (0.4, (0.8,)), (0.7, (-0.7,)))),
        T=1000,
        sample_rate=1000.0,
        m=15,
        snr_db=20.0,
        seed=seed,
    )


def scenario_from_mapping(mapping, base=None):
    """Build a scenario from flat keys, filling gaps from ``base`` (benchmark scenario by default)."""
    base = benchmark_scenario() if base is None else base
    fields = base.to_mapping()
    fields = {k.lower(): v for k, v in fields.items()}
    for key, raw in mapping.items():
        key = key.lower()
        if key not in SCENARIO_KEYS:
            continue
        fields[key] = raw
    try:
        return TvarxScenario(
            p_true=int(coerce(str(fields["p_true"]))),
            q_true=int(coerce(str(fields["q_true"]))),
            p_est=int(coerce(str(fields["p_est"]))),
            q_est=int(coerce(str(fields["q_est"]))),
            a_schedule=Schedule.parse(fields["a_schedule"]),
            b_schedule=Schedule.parse(fields["b_schedule"]),
            T=int(coerce(str(fields["t"]))),
            sample_rate=float(coerce(str(fields["sample_rate"]))),
            m=int(coerce(str(fields["m"]))),
            snr_db=float(coerce(str(fields["snr_db"]))),
            seed=int(coerce(str(fields["seed"]))),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from None


def load_scenario(path):
    return scenario_from_mapping(load_flat(path))


def dump_scenario(scenario, path):
    Path(path).write_text(dump_flat(scenario.to_mapping()))


@dataclass
class TvarxRun:
    u: np.ndarray
    y: np.ndarray
    y_clean: np.ndarray
    noise: np.ndarray
    v_path: np.ndarray
    rounds: list = field(default_factory=list)
    noise_sigma: float = 0.0

    @property
    def snr_db(self):
        """Noiseless output power over noise power, in dB."""
        pn = float(np.mean(self.noise**2)) if self.noise.size else 0.0
        if pn == 0.0:
            return math.inf
        return 10.0 * math.log10(float(np.mean(self.y_clean**2)) / pn)


def _recursion(a, b, u, e, y_init=None):
    T = u.shape[0]
    P, Q = a.shape[1], b.shape[1]
    y = np.zeros(T)
    for k in range(T):
        acc = e[k]
        for p in range(1, min(P, k) + 1):
            acc += a[k, p - 1] * y[k - p]
        for q in range(1, min(Q, k) + 1):
            acc += b[k, q - 1] * u[k - q]
        if k == 0 and y_init is not None:
            acc = float(y_init)
        if not abs(acc) <= DIVERGENCE_LIMIT:
            raise SimulationDivergence(f"|y_{k}| exceeded {DIVERGENCE_LIMIT:g}")
        y[k] = acc
    return y


def simulate(scenario, u=None, y_init=None):
    """Simulate one run.

    The input is ``m`` iid standard normal values tiled to length ``T``.  The
    noise is drawn iid Gaussian and rescaled so that its sample power sits
    exactly ``snr_db`` below the power of the noiseless output; ``u`` is drawn
    before the noise from ``default_rng(scenario.seed)``.  A non-finite
    ``snr_db`` disables the noise.  ``u`` and ``y_init`` (the value of
    ``y_0``) override the defaults, mainly for testing.
    """
    rng = np.random.default_rng(scenario.seed)
    T, m = scenario.T, scenario.m
    if u is None:
        base = rng.standard_normal(m)
        u = np.tile(base, -(-T // m))[:T] if T else np.zeros(0)
    else:
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (T,):
            raise ShapeError(f"u must have length {T}")
    times = np.arange(T) / scenario.sample_rate
    a = scenario.a_schedule.sample(times).reshape(T, scenario.p_true)
    b = scenario.b_schedule.sample(times).reshape(T, scenario.q_true)
    y_clean = _recursion(a, b, u, np.zeros(T), y_init)
    sigma = 0.0
    e = np.zeros(T)
    if np.isfinite(scenario.snr_db) and T:
        power = float(np.mean(y_clean**2))
        sigma = math.sqrt(power / 10.0 ** (scenario.snr_db / 10.0))
        draw = rng.standard_normal(T)
        rms = math.sqrt(float(np.mean(draw**2)))
        if sigma > 0 and rms > 0:
            e = draw * (sigma / rms)
    y = _recursion(a, b, u, e, y_init) if sigma > 0 else y_clean.copy()
    run = TvarxRun(u=u, y=y, y_clean=y_clean, noise=e, v_path=scenario.block_truth(), noise_sigma=sigma)
    run.rounds = build_rounds(run, scenario)
    return run


def regressor_matrix(y, u, start, m, P, Q):
    """Rows ``(y_{k-1}..y_{k-P}, u_{k-1}..u_{k-Q})`` for ``k = start..start+m-1``; negative indices read 0."""
    k = start + np.arange(m)[:, None]
    ylags = k - np.arange(1, P + 1)[None, :]
    ulags = k - np.arange(1, Q + 1)[None, :]
    Y = np.where(ylags >= 0, y[np.clip(ylags, 0, None)], 0.0)
    U = np.where(ulags >= 0, u[np.clip(ulags, 0, None)], 0.0)
    return np.hstack([Y, U])


def build_rounds(run, scenario):
    """One :class:`MeasurementRound` per complete block of ``m`` samples."""
    m = scenario.m
    if scenario.T < m:
        warnings.warn(f"horizon T={scenario.T} is shorter than one block (m={m}); no rounds")
        return []
    rounds = []
    for s in range(scenario.num_blocks):
        A = regressor_matrix(run.y, run.u, s * m, m, scenario.p_est, scenario.q_est)
        rounds.append(MeasurementRound(A, run.y[s * m : (s + 1) * m], t=s + 1))
    return rounds


def _check_paths(v_path, estimates):
    v = np.atleast_2d(np.asarray(v_path, dtype=np.float64))
    est = np.atleast_2d(np.asarray(estimates, dtype=np.float64))
    if v.shape != est.shape:
        raise ShapeError(f"truth has shape {v.shape}, estimates {est.shape}")
    return v, est


def mse(v_path, estimates, p_est, q_est):
    """Squared error summed over blocks and components, divided by ``p_est + q_est``."""
    v, est = _check_paths(v_path, estimates)
    if v.shape[1] != p_est + q_est:
        raise ShapeError(f"vectors have {v.shape[1]} components, expected {p_est + q_est}")
    return float(np.sum((v - est) ** 2) / (p_est + q_est))


def block_mse(v_path, estimates, p_est, q_est):
    """:func:`mse` averaged over blocks: mean squared error per component and block."""
    v, _ = _check_paths(v_path, estimates)
    return mse(v_path, estimates, p_est, q_est) / v.shape[0]


def support_error(v_path, estimates):
    """Signed errors ``estimate - truth``, one row per block."""
    v, est = _check_paths(v_path, estimates)
    return est - v


def support_split(errors, active):
    """Mean absolute signed error over (null, active) components."""
    errors = np.abs(np.atleast_2d(errors))
    mask = np.zeros(errors.shape[1], dtype=bool)
    mask[list(active)] = True
    return float(errors[:, ~mask].mean()), float(errors[:, mask].mean())


def write_run(run, scenario, directory):
    """Dump ``u.csv``, ``y.csv`` and per-block ``truth.csv`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_vector_csv(directory / "u.csv", run.u)
    write_vector_csv(directory / "y.csv", run.y)
    write_truth(directory / "truth.csv", scenario, run.v_path)
    return [directory / "u.csv", directory / "y.csv", directory / "truth.csv"]


def write_truth(path, scenario, v_path):
    header = ["block", "t_seconds"] + [f"v{i}" for i in range(scenario.n)]
    rows = [[s + 1, t] + list(v) for s, (t, v) in enumerate(zip(scenario.block_times(), v_path))]
    write_table(path, header, rows)


def fig1_rows(scenario, estimates, r):
    """``(r, t_seconds, a1_true, a1_est, b1_true, b1_est)`` per block."""
    truth = scenario.block_truth()
    rows = []
    for t, v, est in zip(scenario.block_times(), truth, estimates):
        rows.append([r, t, v[0], est[0], v[scenario.p_est], est[scenario.p_est]])
    return rows


def fig2_rows(scenario, estimates, r):
    """``(component_index, block, signed_error, r)`` for every block and component."""
    err = support_error(scenario.block_truth(), estimates)
    rows = []
    for i in range(scenario.n):
        for s in range(err.shape[0]):
            rows.append([i, s + 1, err[s, i], r])
    return rows
