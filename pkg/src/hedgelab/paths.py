"""Time grids, Brownian increments, and market (stock + money-market) paths.

The stock follows geometric Brownian motion simulated with the exact
log-scheme, so the sampled path has no discretization bias of its own:
any self-financing defect observed downstream is attributable to discrete
trading, not to the simulator. The money-market account is deterministic,
beta_k = exp(r * t_k).

Randomness is counter-based: every increment sequence is a pure function
of (seed, path_index, grid), so Monte Carlo results are reproducible under
any execution order. Refinement keys extend the counter so a refined path
is likewise a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .accum import comp_cumsum

# Salt mixed into the bridge RNG stream so refinement noise can never
# collide with the base increment stream for any (seed, path_index).
_BRIDGE_SALT = 0x42524447


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing instants in years, from 0 to the horizon T > 0."""

    times: np.ndarray

    def __post_init__(self):
        t = _readonly(self.times)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("time grid needs at least 2 points")
        if not np.all(np.isfinite(t)):
            raise ValueError("time grid values must be finite")
        if t[0] != 0.0:
            raise ValueError("time grid must start at 0")
        if not np.all(np.diff(t) > 0.0):
            raise ValueError("time grid must be strictly increasing")
        object.__setattr__(self, "times", t)

    @property
    def n_points(self) -> int:
        return int(self.times.size)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> np.ndarray:
        """Step lengths, one per interval."""
        return np.diff(self.times)

    def same_as(self, other: "TimeGrid") -> bool:
        return self is other or np.array_equal(self.times, other.times)


@dataclass(frozen=True)
class GbmParams:
    """Geometric Brownian motion parameters plus the risk-free rate."""

    s0: float
    mu: float
    sigma: float
    r: float

    def __post_init__(self):
        if not (self.s0 > 0.0 and math.isfinite(self.s0)):
            raise ValueError("s0 must be > 0")
        if not (self.sigma >= 0.0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be >= 0")
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        if not math.isfinite(self.r):
            raise ValueError("r must be finite")


@dataclass(frozen=True, eq=False)
class BrownianPath:
    """Brownian increments on a grid, one N(0, dt_k) draw per interval.

    `key` records the counter lineage ((seed, path_index), extended by each
    refinement) so derived randomness stays reproducible.
    """

    grid: TimeGrid
    increments: np.ndarray
    key: tuple = (0,)

    def __post_init__(self):
        inc = _readonly(self.increments)
        if inc.ndim != 1 or inc.size != self.grid.n_points - 1:
            raise ValueError("need exactly one increment per grid interval")
        if not np.all(np.isfinite(inc)):
            raise ValueError("increments must be finite")
        object.__setattr__(self, "increments", inc)


@dataclass(frozen=True, eq=False)
class MarketPath:
    """Sampled stock and bond values on a grid, with the driving increments."""

    grid: TimeGrid
    stock: np.ndarray
    bond: np.ndarray
    brownian: BrownianPath
    rate: float = 0.0

    def __post_init__(self):
        s = _readonly(self.stock)
        b = _readonly(self.bond)
        n = self.grid.n_points
        if s.shape != (n,) or b.shape != (n,):
            raise ValueError("stock and bond must have one value per grid point")
        if not (np.all(s > 0.0) and np.all(np.isfinite(s))):
            raise ValueError("stock values must be positive and finite")
        if not (np.all(b > 0.0) and np.all(np.isfinite(b))):
            raise ValueError("bond values must be positive and finite")
        if abs(b[0] - 1.0) > 1e-12:
            raise ValueError("bond must be normalized to 1 at t=0")
        object.__setattr__(self, "stock", s)
        object.__setattr__(self, "bond", b)


def uniform_grid(horizon: float, steps: int) -> TimeGrid:
    """Equally spaced grid of `steps` intervals on [0, horizon]."""
    if not (horizon > 0.0 and math.isfinite(horizon)):
        raise ValueError("horizon must be > 0")
    if int(steps) < 1:
        raise ValueError("steps must be >= 1")
    return TimeGrid(np.linspace(0.0, float(horizon), int(steps) + 1))


def generate_brownian(grid: TimeGrid, seed: int, path_index: int = 0) -> BrownianPath:
    """Draw the increment sequence for one path.

    The stream is keyed by (seed, path_index): the same pair always yields
    bit-identical increments, and distinct pairs yield independent streams,
    regardless of call order or thread schedule.
    """
    key = (int(seed), int(path_index))
    rng = np.random.default_rng(list(key))
    z = rng.standard_normal(grid.n_points - 1)
    return BrownianPath(grid, z * np.sqrt(grid.dt), key=key)


def gbm_path(params: GbmParams, w: BrownianPath, measure: str) -> MarketPath:
    """Exact-scheme GBM stock path plus deterministic bond path.

    measure: "physical" uses drift mu, "risk_neutral" substitutes r.
    S_k = s0 * exp((d - sigma^2/2) * t_k + sigma * W_k) reproduces the
    step recurrence S_{k+1} = S_k * exp((d - sigma^2/2) dt_k + sigma dW_k)
    without compounding per-step rounding.
    """
    if measure == "physical":
        drift = params.mu
    elif measure == "risk_neutral":
        drift = params.r
    else:
        raise ValueError(f"measure must be 'physical' or 'risk_neutral', got {measure!r}")
    t = w.grid.times
    cumw = np.concatenate(([0.0], comp_cumsum(w.increments)))
    stock = params.s0 * np.exp((drift - 0.5 * params.sigma**2) * t + params.sigma * cumw)
    bond = np.exp(params.r * t)
    return MarketPath(grid=w.grid, stock=stock, bond=bond, brownian=w, rate=params.r)


def refine(grid: TimeGrid, w: BrownianPath, factor: int) -> tuple[TimeGrid, BrownianPath]:
    """Split every interval into `factor` pieces, bridging the increments.

    The sub-increments of each original step are drawn conditionally on
    summing to the original increment (Brownian bridge), so the refined
    path and the coarse path describe the same Brownian motion at shared
    instants. Original knots are kept bitwise in the new grid.
    """
    m = int(factor)
    if m < 2:
        raise ValueError("refinement factor must be >= 2")
    n_steps = grid.n_points - 1
    h = grid.dt
    key = (*w.key, m)
    rng = np.random.default_rng([_BRIDGE_SALT, *[int(k) for k in key]])
    xi = rng.standard_normal((n_steps, m)) * np.sqrt(h / m)[:, None]
    # Condition iid N(0, h/m) draws on the known step total.
    excess = (xi.sum(axis=1) - w.increments) / m
    sub = xi - excess[:, None]

    offsets = np.arange(m) / m
    fine = grid.times[:-1, None] + h[:, None] * offsets[None, :]
    times = np.append(fine.reshape(-1), grid.times[-1])
    new_grid = TimeGrid(times)
    return new_grid, BrownianPath(new_grid, sub.reshape(-1), key=key)
