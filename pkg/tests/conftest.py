import numpy as np
import pytest

from hedgelab.paths import BrownianPath, GbmParams, MarketPath, TimeGrid, generate_brownian, gbm_path, uniform_grid


def make_market(seed=0, path_index=0, steps=64, horizon=1.0, s0=100.0, mu=0.05,
                sigma=0.2, r=0.05, measure="physical"):
    params = GbmParams(s0=s0, mu=mu, sigma=sigma, r=r)
    grid = uniform_grid(horizon, steps)
    w = generate_brownian(grid, seed, path_index)
    return gbm_path(params, w, measure)


def hand_market(stock, bond=None, times=None):
    """Market path from explicit values (bond defaults to a flat account)."""
    stock = np.asarray(stock, dtype=float)
    n = stock.size
    if times is None:
        times = np.linspace(0.0, 1.0, n)
    grid = TimeGrid(np.asarray(times, dtype=float))
    bond = np.ones(n) if bond is None else np.asarray(bond, dtype=float)
    w = BrownianPath(grid, np.zeros(n - 1))
    return MarketPath(grid, stock, bond, w, rate=0.0)


@pytest.fixture
def market():
    return make_market()
