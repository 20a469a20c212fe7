"""Predictable holdings schedules: buy-and-hold, constant-mix, delta hedging,
and deliberately broken (non-self-financing) variants for negative controls.

Holdings entry k is the position held over the interval starting at t_k,
i.e. the position immediately after the rebalance at t_k. Every built-in
strategy decides entry k from path values at indices <= k only (no use of
the future). Holdings at the final grid point govern no interval; they are
set equal to the penultimate entry so all series share the grid length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .calculus import SampledSeries
from .paths import MarketPath, TimeGrid, _readonly

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class HoldingsSchedule:
    """Stock holding a_k (shares) and bond holding b_k (units) per grid point."""

    grid: TimeGrid
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _readonly(self.a)
        b = _readonly(self.b)
        n = self.grid.n_points
        if a.shape != (n,) or b.shape != (n,):
            raise ValueError("holdings need one entry per grid point")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("holdings must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class EuropeanCall:
    strike: float
    expiry: float

    def __post_init__(self):
        if not (self.strike > 0.0 and math.isfinite(self.strike)):
            raise ValueError("strike must be > 0")
        if not (self.expiry > 0.0 and math.isfinite(self.expiry)):
            raise ValueError("expiry must be > 0")


def buy_and_hold(grid: TimeGrid, a0: float, b0: float) -> HoldingsSchedule:
    """Constant holdings; trivially self-financing (no rebalances)."""
    n = grid.n_points
    return HoldingsSchedule(grid, np.full(n, float(a0)), np.full(n, float(b0)))


def constant_mix(path: MarketPath, stock_weight: float, initial_wealth: float) -> HoldingsSchedule:
    """Rebalance at every grid point to a fixed stock fraction of wealth.

    Each rebalance conserves the pre-rebalance wealth (value only moves
    between the stock and bond accounts), so the schedule is self-financing
    up to floating-point rounding.
    """
    s = path.stock
    beta = path.bond
    n = path.grid.n_points
    w = float(stock_weight)
    a = np.empty(n)
    b = np.empty(n)
    wealth = float(initial_wealth)
    a[0] = w * wealth / s[0]
    b[0] = (1.0 - w) * wealth / beta[0]
    for k in range(1, n - 1):
        wealth = a[k - 1] * s[k] + b[k - 1] * beta[k]
        a[k] = w * wealth / s[k]
        b[k] = (1.0 - w) * wealth / beta[k]
    a[n - 1] = a[n - 2]
    b[n - 1] = b[n - 2]
    return HoldingsSchedule(path.grid, a, b)


def bs_price(s: float, strike: float, vol: float, rate: float, tau: float) -> float:
    """Black-Scholes value of a European call.

    At tau = 0 this is the payoff max(s - strike, 0); at vol = 0 it is the
    deterministic forward value max(s - strike * exp(-rate * tau), 0).
    """
    if not s > 0.0:
        raise ValueError("spot must be > 0")
    if not strike > 0.0:
        raise ValueError("strike must be > 0")
    if vol < 0.0:
        raise ValueError("vol must be >= 0")
    if tau < 0.0:
        raise ValueError("tau must be >= 0")
    if vol == 0.0 or tau == 0.0:
        return max(s - strike * math.exp(-rate * tau), 0.0)
    srt = vol * math.sqrt(tau)
    d1 = (math.log(s / strike) + (rate + 0.5 * vol * vol) * tau) / srt
    d2 = d1 - srt
    return s * _norm_cdf(d1) - strike * math.exp(-rate * tau) * _norm_cdf(d2)


def bs_delta(s, strike: float, vol: float, rate: float, tau):
    """Call delta Phi(d1), elementwise over spot/expiry arrays.

    Degenerate limits resolve by sign: when vol * sqrt(tau) = 0 the delta
    is the indicator of s > strike * exp(-rate * tau). Exactly on that kink
    (e.g. tau = 0 and s = strike) the delta is undefined and a ValueError
    is raised.
    """
    s_arr = np.asarray(s, dtype=float)
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(s_arr <= 0.0):
        raise ValueError("spot must be > 0")
    if not strike > 0.0:
        raise ValueError("strike must be > 0")
    if vol < 0.0:
        raise ValueError("vol must be >= 0")
    if np.any(tau_arr < 0.0):
        raise ValueError("tau must be >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = (np.log(s_arr / strike) + (rate + 0.5 * vol * vol) * tau_arr) / (
            vol * np.sqrt(tau_arr)
        )
    # 0/0 happens only on the kink where the delta has no one-sided limit.
    if np.any(np.isnan(d1)):
        raise ValueError("delta undefined at the payoff kink (vol*sqrt(tau)=0 and s on the strike)")
    out = ndtr(d1)
    return float(out) if np.ndim(s) == 0 and np.ndim(tau) == 0 else out


def delta_hedge(option: EuropeanCall, path: MarketPath, hedge_vol: float) -> HoldingsSchedule:
    """Delta-hedge the call along the path, bond account completed so the
    schedule is self-financing and starts at the Black-Scholes price.

    a_k = bs_delta(S_k, strike, hedge_vol, r, T - t_k) over each interval;
    the last interval uses the time-to-expiry at its start.
    """
    horizon = path.grid.horizon
    if not math.isclose(option.expiry, horizon, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError("option expiry must equal the grid horizon")
    taus = option.expiry - path.grid.times[:-1]
    head = bs_delta(path.stock[:-1], option.strike, hedge_vol, path.rate, taus)
    a = np.append(np.atleast_1d(head), head[-1])
    y0 = bs_price(path.stock[0], option.strike, hedge_vol, path.rate, option.expiry)

    from .ledger import enforce_self_financing  # deferred: ledger imports this module

    return enforce_self_financing(SampledSeries(path.grid, a), path, y0)


def broken_strategy(
    base: HoldingsSchedule,
    mode: str,
    *,
    amount: float = 0.0,
    at_index: int = 0,
    path: MarketPath | None = None,
) -> HoldingsSchedule:
    """Negative controls that violate self-financing on purpose.

    mode="frozen_bond" keeps b pinned at b_0 while a rebalances unfunded;
    mode="cash_injection" adds `amount` of external money (amount / beta_k
    bond units) at grid index `at_index`, which requires `path` for the
    bond price.
    """
    if mode == "frozen_bond":
        return HoldingsSchedule(base.grid, base.a, np.full_like(base.b, base.b[0]))
    if mode == "cash_injection":
        if path is None:
            raise ValueError("cash_injection needs the market path for the bond price")
        if not base.grid.same_as(path.grid):
            raise ValueError("schedule and path live on different time grids")
        if not 0 <= int(at_index) < base.grid.n_points:
            raise ValueError("injection index out of range")
        b = base.b.copy()
        b[int(at_index):] += float(amount) / path.bond[int(at_index)]
        return HoldingsSchedule(base.grid, base.a, b)
    raise ValueError(f"unknown mode {mode!r}")


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)
