"""Black-Scholes market primitives and the pricing kernel."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import BadDimension, DriftBelowRiskFree, NonPositiveDefinite


@dataclass(frozen=True, eq=False)
class MarketParams:
    """Riskless rate ``r``, drifts ``mu``, volatility matrix ``sigma`` and initial prices."""

    r: float
    mu: np.ndarray
    sigma: np.ndarray
    p0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", float(self.r))
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        p0 = np.atleast_1d(np.asarray(self.p0, dtype=float))
        for arr in (mu, sigma, p0):
            arr.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "p0", p0)
        validate(self)

    @classmethod
    def single(cls, r: float, mu: float, sigma: float, p0: float = 100.0) -> "MarketParams":
        return cls(r, [mu], [[sigma]], [p0])

    @property
    def n_assets(self) -> int:
        return self.mu.shape[0]

    @cached_property
    def cov(self) -> np.ndarray:
        return self.sigma @ self.sigma.T

    @cached_property
    def excess(self) -> np.ndarray:
        return self.mu - self.r

    @cached_property
    def gamma(self) -> np.ndarray:
        return np.linalg.solve(self.sigma, self.excess)

    @cached_property
    def gamma_sq(self) -> float:
        return float(self.gamma @ self.gamma)

    @cached_property
    def direction(self) -> np.ndarray:
        """Sigma^{-1}(mu - r 1), the Merton direction per unit of risk tolerance."""
        return np.linalg.solve(self.cov, self.excess)

    def to_dict(self) -> dict:
        return {"r": self.r, "mu": self.mu.tolist(), "sigma": self.sigma.tolist(),
                "p0": self.p0.tolist()}


def validate(params: MarketParams) -> MarketParams:
    n = params.mu.shape[0]
    if params.mu.ndim != 1 or params.sigma.shape != (n, n) or params.p0.shape != (n,):
        raise BadDimension(
            f"mu {params.mu.shape}, sigma {params.sigma.shape}, p0 {params.p0.shape} inconsistent")
    if not params.r > 0:
        raise DriftBelowRiskFree(f"r must be positive, got {params.r}")
    if np.any(params.mu - params.r <= 0):
        raise DriftBelowRiskFree("every drift must exceed the riskless rate")
    if np.any(params.p0 <= 0):
        raise BadDimension("initial prices must be positive")
    cov = params.sigma @ params.sigma.T
    eig = np.linalg.eigvalsh(0.5 * (cov + cov.T))
    if not np.all(np.isfinite(eig)) or eig.min() <= 1e-14 * max(1.0, eig.max()):
        raise NonPositiveDefinite("sigma sigma' is not positive definite")
    if not np.all(np.isfinite(params.gamma)):
        raise NonPositiveDefinite("market price of risk is not finite")
    return params


def kernel_value(params: MarketParams, t, w) -> np.ndarray:
    """Z(t) = exp(-(r + |gamma|^2/2) t - gamma'w); ``w`` has a trailing asset axis."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    return np.exp(-(params.r + 0.5 * params.gamma_sq) * t - w @ params.gamma)


def kernel_power_moment(params: MarketParams, eta, tau) -> np.ndarray:
    """E[(Z(s)/Z(t))^eta] for s - t = tau."""
    eta = np.asarray(eta, dtype=float)
    return np.exp(-eta * (params.r - 0.5 * (eta - 1.0) * params.gamma_sq) * np.asarray(tau, float))


def stock_price(params: MarketParams, t, w) -> np.ndarray:
    """Componentwise geometric Brownian motion prices; trailing axis is the asset."""
    t = np.asarray(t, dtype=float)[..., None]
    w = np.asarray(w, dtype=float)
    drift = params.mu - 0.5 * np.sum(params.sigma ** 2, axis=1)
    return params.p0 * np.exp(drift * t + w @ params.sigma.T)


@dataclass(frozen=True)
class KernelState:
    t: float
    z: float
    w: np.ndarray


def path_generator(seed: int, index: int) -> np.random.Generator:
    """Independent stream for path ``index``; identical however paths are batched."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def brownian_increments(seed: int, indices, steps: int, n_assets: int, dt: float) -> np.ndarray:
    """Array of shape (len(indices), steps, n_assets) of N(0, dt) increments."""
    out = np.empty((len(indices), steps, n_assets))
    sd = np.sqrt(dt)
    for row, i in enumerate(indices):
        out[row] = path_generator(seed, int(i)).standard_normal((steps, n_assets)) * sd
    return out


@dataclass(frozen=True, eq=False)
class KernelPaths:
    t: np.ndarray   # (K+1,)
    w: np.ndarray   # (P, K+1, N)
    z: np.ndarray   # (P, K+1)

    def state(self, path: int, step: int) -> KernelState:
        return KernelState(float(self.t[step]), float(self.z[path, step]), self.w[path, step].copy())


def time_grid(horizon: float, steps: int) -> np.ndarray:
    return np.linspace(0.0, horizon, steps + 1)


def simulate_kernel_paths(params: MarketParams, horizon: float, steps: int, n_paths: int,
                          seed: int, first_path: int = 0) -> KernelPaths:
    """Exact log-normal stepping of W and Z on an equidistant grid."""
    if steps < 1 or n_paths < 1:
        raise ValueError("steps and n_paths must be >= 1")
    t = time_grid(horizon, steps)
    dw = brownian_increments(seed, range(first_path, first_path + n_paths), steps,
                             params.n_assets, horizon / steps)
    w = np.zeros((n_paths, steps + 1, params.n_assets))
    np.cumsum(dw, axis=1, out=w[:, 1:])
    # log Z accumulated from increments so the path is multiplicative by construction
    dlogz = -(params.r + 0.5 * params.gamma_sq) * np.diff(t) - dw @ params.gamma
    logz = np.zeros((n_paths, steps + 1))
    np.cumsum(dlogz, axis=1, out=logz[:, 1:])
    return KernelPaths(t, w, np.exp(logz))
