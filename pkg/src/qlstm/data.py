"""Time-series generators, CSV ingestion, rescaling, windowing, and splitting.

Built-in generators cover the four synthesizable experiments: a sine wave, a
damped pendulum (RK4 on the angular velocity), the Bessel function J_2, and
the collapse-and-revival population inversion of a qubit coupled to a coherent
cavity field.  Externally produced series (e.g. delayed-feedback waveguide
data) enter through :func:`load_csv`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TimeSeries:
    """A scalar series with provenance metadata."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("time series values must be 1-D")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("time series values must be finite")

    def __len__(self):
        return self.values.size


@dataclass
class WindowedDataset:
    """(window, target) pairs with a temporal train/test split index."""

    inputs: np.ndarray   # (samples, N)
    targets: np.ndarray  # (samples,)
    split_index: int

    @property
    def n_samples(self) -> int:
        return self.targets.size

    def train(self) -> tuple[np.ndarray, np.ndarray]:
        return self.inputs[: self.split_index], self.targets[: self.split_index]

    def test(self) -> tuple[np.ndarray, np.ndarray]:
        return self.inputs[self.split_index :], self.targets[self.split_index :]


@dataclass
class PendulumConfig:
    g: float = 9.81     # m/s^2
    b: float = 0.15     # damping
    L: float = 1.0      # m
    m: float = 1.0      # kg
    theta0: float = 0.0       # rad
    omega0: float = 3.0       # rad/s
    t_end: float = 10.0
    dt: float = 0.05

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end <= self.dt:
            raise ValueError("t_end must exceed dt")


@dataclass
class PopInvConfig:
    coupling: float = 1.0
    n_bar: float = 40.0   # mean photon number |alpha|^2
    n_max: int = 100
    t_end: float = 5.0
    n_points: int = 500

    def __post_init__(self):
        # The Poisson weights must have decayed well before the cutoff.
        if self.n_max < self.n_bar + 6.0 * math.sqrt(self.n_bar):
            raise ValueError(f"n_max={self.n_max} too small for n_bar={self.n_bar}")
        if self.n_points < 2 or self.t_end <= 0:
            raise ValueError("need a positive time span with at least 2 points")


def gen_sine(n_points: int = 200, x_start: float = 0.0, x_end: float = 20.0) -> TimeSeries:
    """sin(x) on a uniform grid."""
    if n_points < 2:
        raise ValueError("need at least 2 points")
    x = np.linspace(x_start, x_end, n_points)
    return TimeSeries(np.sin(x), meta={"source": "sine", "x_start": x_start, "x_end": x_end})


def _pendulum_deriv(y: np.ndarray, cfg: PendulumConfig) -> np.ndarray:
    theta, omega = y
    return np.array([omega, -(cfg.b / cfg.m) * omega - (cfg.g / cfg.L) * math.sin(theta)])


def gen_pendulum(config: PendulumConfig | None = None) -> TimeSeries:
    """Angular velocity of the damped pendulum, integrated with fixed-step RK4."""
    cfg = config or PendulumConfig()
    n_steps = int(round(cfg.t_end / cfg.dt))
    y = np.array([cfg.theta0, cfg.omega0])
    omegas = [y[1]]
    for _ in range(n_steps):
        k1 = _pendulum_deriv(y, cfg)
        k2 = _pendulum_deriv(y + 0.5 * cfg.dt * k1, cfg)
        k3 = _pendulum_deriv(y + 0.5 * cfg.dt * k2, cfg)
        k4 = _pendulum_deriv(y + cfg.dt * k3, cfg)
        y = y + (cfg.dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        omegas.append(y[1])
    return TimeSeries(np.array(omegas), meta={"source": "pendulum", "dt": cfg.dt})


def pendulum_trajectory(config: PendulumConfig) -> np.ndarray:
    """Full (theta, omega) RK4 trajectory, shape (steps + 1, 2); for testing."""
    cfg = config
    n_steps = int(round(cfg.t_end / cfg.dt))
    y = np.array([cfg.theta0, cfg.omega0])
    out = [y.copy()]
    for _ in range(n_steps):
        k1 = _pendulum_deriv(y, cfg)
        k2 = _pendulum_deriv(y + 0.5 * cfg.dt * k1, cfg)
        k3 = _pendulum_deriv(y + 0.5 * cfg.dt * k2, cfg)
        k4 = _pendulum_deriv(y + cfg.dt * k3, cfg)
        y = y + (cfg.dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y.copy())
    return np.array(out)


def bessel_j(order: int, x: float) -> float:
    """Bessel function of the first kind, integer order, by series summation.

    Terms follow the recurrence t_{m+1} = t_m * (-(x/2)^2) / ((m+1)(m+1+order)),
    stopping once |t| < 1e-16 * |partial sum| or after 60 terms.
    """
    if order < 0 or order > 10:
        raise ValueError("order must be an integer in [0, 10]")
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    half = x / 2.0
    term = half**order / math.factorial(order)
    total = term
    q = -(half * half)
    for m in range(60):
        term *= q / ((m + 1) * (m + 1 + order))
        total += term
        if abs(term) < 1e-16 * abs(total):
            break
    return total


def gen_bessel(order: int = 2, n_points: int = 300, x_end: float = 20.0) -> TimeSeries:
    """J_order on a uniform grid over [0, x_end]."""
    if n_points < 2:
        raise ValueError("need at least 2 points")
    x = np.linspace(0.0, x_end, n_points)
    values = np.array([bessel_j(order, xi) for xi in x])
    return TimeSeries(values, meta={"source": "bessel", "order": order, "x_end": x_end})


def gen_population_inversion(config: PopInvConfig | None = None) -> TimeSeries:
    """D(t): Poisson-weighted sum of cos(2g sqrt(n+1) t) over photon numbers."""
    cfg = config or PopInvConfig()
    t = np.linspace(0.0, cfg.t_end, cfg.n_points)
    # Stable Poisson weights: w_0 = e^{-n_bar}, w_{n+1} = w_n * n_bar/(n+1).
    weights = np.empty(cfg.n_max + 1)
    weights[0] = math.exp(-cfg.n_bar)
    for n in range(cfg.n_max):
        weights[n + 1] = weights[n] * cfg.n_bar / (n + 1)
    freqs = 2.0 * cfg.coupling * np.sqrt(np.arange(cfg.n_max + 1) + 1.0)
    values = np.cos(np.outer(t, freqs)) @ weights
    return TimeSeries(values, meta={"source": "popinv", "n_bar": cfg.n_bar, "n_max": cfg.n_max})


def load_csv(path) -> TimeSeries:
    """Read a `t,value` CSV (one sample per row, rows in time order)."""
    values = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "value"]:
            raise ValueError(f"{path}: expected header 't,value'")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                v = float(row[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value {row[1]!r}") from exc
            if not math.isfinite(v):
                raise ValueError(f"{path}:{lineno}: non-finite value")
            values.append(v)
    if len(values) < 6:
        raise ValueError(f"{path}: series too short ({len(values)} rows)")
    return TimeSeries(np.array(values), meta={"source": f"csv:{path}"})


def write_csv(series: TimeSeries, path, t: np.ndarray | None = None) -> None:
    """Write a series in the same `t,value` format the loader reads."""
    if t is None:
        t = np.arange(len(series), dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "value"])
        for ti, vi in zip(t, series.values):
            writer.writerow([repr(float(ti)), repr(float(vi))])


def rescale_minmax(series: TimeSeries) -> tuple[TimeSeries, tuple[float, float]]:
    """Map the series onto [-1, 1]; return the (min, max) scaler for unscaling."""
    lo, hi = float(series.values.min()), float(series.values.max())
    if hi <= lo:
        raise ValueError("cannot rescale a constant series")
    scaled = 2.0 * (series.values - lo) / (hi - lo) - 1.0
    return TimeSeries(scaled, meta=dict(series.meta)), (lo, hi)


def unscale(values: np.ndarray, scaler: tuple[float, float]) -> np.ndarray:
    lo, hi = scaler
    return (np.asarray(values, float) + 1.0) * (hi - lo) / 2.0 + lo


def make_windows(series: TimeSeries, n: int = 4, train_fraction: float = 0.67) -> WindowedDataset:
    """Slide a length-``n`` window over the series; split temporally at 67%."""
    values = series.values
    if len(values) <= n:
        raise ValueError(f"series of length {len(values)} cannot yield {n}-windows")
    samples = len(values) - n
    inputs = np.stack([values[k : k + n] for k in range(samples)])
    targets = values[n:]
    split = int(math.floor(train_fraction * samples))
    return WindowedDataset(inputs=inputs, targets=targets, split_index=split)


def split(dataset: WindowedDataset) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
    """(train, test) sample pairs, temporal order preserved."""
    return dataset.train(), dataset.test()
