"""Closed-form expected curves, Monte Carlo paths, scenario replay and replication checks."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator, TextIO

import numpy as np

from .consumption import _exponent, log_g
from .errors import MultiAssetUnsupported, NonPositivePrice, ZeroExpectedWealth
from .market import brownian_increments, kernel_power_moment, kernel_value, stock_price, time_grid
from .merge import MergedPolicy, evaluate
from .preferences import floor_F1, floor_F2
from .quadrature import rule
from .terminal import wealth_growth


@dataclass(frozen=True, eq=False)
class ExpectedCurves:
    t: np.ndarray
    consumption: np.ndarray
    wealth: np.ndarray
    exposure: np.ndarray     # (K, N)
    floor: np.ndarray

    @property
    def allocation(self) -> np.ndarray:
        if np.any(self.wealth == 0):
            raise ZeroExpectedWealth("expected wealth vanishes on the grid")
        return self.exposure / self.wealth[:, None]


def expected_curves(policy: MergedPolicy, t, f1=None) -> ExpectedCurves:
    """E[c*], E[V*] and E[exposure] at the times ``t`` from moments of the kernel.

    ``f1`` optionally supplies precomputed F1(t) values on the same grid.
    """
    t = np.atleast_1d(np.asarray(t, float))
    m, p, cf = policy.market, policy.prefs, policy.cashflows
    lam = policy.consumption.log_lambda1
    s, w = rule(t, cf.T, policy.quad)
    b_s = p.b(s)
    e_s = _exponent(b_s)
    tt = t[:, None]
    G = np.exp(log_g(m, p, s, tt, lam) - e_s * (m.r - 0.5 * (e_s - 1.0) * m.gamma_sq) * tt) * w
    i_wealth = G.sum(axis=-1)
    i_expo = np.sum(G / (1.0 - b_s), axis=-1)
    e_t = _exponent(p.b(t))
    c = np.exp(log_g(m, p, t, t, lam)) * kernel_power_moment(m, e_t, t) + cf.cbar(t)
    eh = 1.0 / (p.b_hat - 1.0)
    term = (policy.v2_star - policy.terminal.f2_0) * wealth_growth(m, p, t) * kernel_power_moment(m, eh, t)
    f1 = floor_F1(m, cf, t, policy.quad) if f1 is None else np.asarray(f1, float)
    floor = np.atleast_1d(f1 + floor_F2(m, cf, t))
    wealth = i_wealth + term + floor
    exposure = (i_expo + term / (1.0 - p.b_hat))[:, None] * m.direction
    return ExpectedCurves(t, c, wealth, exposure, floor)


def _scalar_or_array(x, t):
    return float(x[0]) if np.ndim(t) == 0 else x


def expected_consumption(policy: MergedPolicy, t):
    return _scalar_or_array(expected_curves(policy, t).consumption, t)


def expected_wealth(policy: MergedPolicy, t):
    return _scalar_or_array(expected_curves(policy, t).wealth, t)


def expected_exposure(policy: MergedPolicy, t):
    ex = expected_curves(policy, t).exposure
    return ex[0] if np.ndim(t) == 0 else ex


def expected_allocation_estimator(policy: MergedPolicy, t):
    al = expected_curves(policy, t).allocation
    return al[0] if np.ndim(t) == 0 else al


@dataclass(frozen=True, eq=False)
class PathRecord:
    """A batch of paths on a common grid; leading axis indexes paths."""

    t: np.ndarray          # (K,)
    w: np.ndarray          # (P, K, N)
    z: np.ndarray          # (P, K)
    prices: np.ndarray     # (P, K, N)
    c_star: np.ndarray     # (P, K)
    pi_star: np.ndarray    # (P, K, N)
    exposure: np.ndarray   # (P, K, N)
    V_star: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    F_t: np.ndarray        # (K,)
    cbar: np.ndarray       # (K,)
    y: np.ndarray          # (K,)
    first_path: int = 0

    @property
    def n_paths(self) -> int:
        return self.z.shape[0]

    def select(self, i: int) -> "PathRecord":
        sl = slice(i, i + 1)
        return PathRecord(self.t, self.w[sl], self.z[sl], self.prices[sl], self.c_star[sl],
                          self.pi_star[sl], self.exposure[sl], self.V_star[sl], self.V1[sl],
                          self.V2[sl], self.F_t, self.cbar, self.y, self.first_path + i)

    def min_wealth_cushion(self) -> float:
        return float(np.min(self.V_star - self.F_t))

    def min_consumption_cushion(self) -> float:
        return float(np.min(self.c_star - self.cbar))


def record_from_brownian(policy: MergedPolicy, t: np.ndarray, w: np.ndarray,
                         first_path: int = 0) -> PathRecord:
    """Evaluate the merged policy along Brownian paths ``w`` of shape (P, K, N)."""
    m, cf = policy.market, policy.cashflows
    t = np.asarray(t, float)
    w = np.asarray(w, float)
    z = kernel_value(m, t, w)
    P, K = z.shape
    N = m.n_assets
    out = {k: np.empty((P, K)) for k in ("c", "V", "V1", "V2")}
    pi = np.empty((P, K, N))
    ex = np.empty((P, K, N))
    f = np.empty(K)
    for k in range(K):
        a = evaluate(policy, t[k], z[:, k])
        out["c"][:, k] = a.c_star
        out["V"][:, k] = a.V_star
        out["V1"][:, k] = a.V1
        out["V2"][:, k] = a.V2
        pi[:, k] = a.pi_star
        ex[:, k] = a.exposure
        f[k] = a.F_t.flat[0]
    return PathRecord(t, w, z, stock_price(m, t, w), out["c"], pi, ex, out["V"], out["V1"],
                      out["V2"], f, np.asarray(cf.cbar(t), float), np.asarray(cf.y(t), float),
                      first_path)


def _brownian(policy: MergedPolicy, steps: int, paths: range, seed: int):
    T = policy.T
    dw = brownian_increments(seed, paths, steps, policy.market.n_assets, T / steps)
    w = np.zeros((len(paths), steps + 1, policy.market.n_assets))
    np.cumsum(dw, axis=1, out=w[:, 1:])
    return time_grid(T, steps), w


def iter_policy_paths(policy: MergedPolicy, steps: int, n_paths: int, seed: int,
                      chunk: int = 500) -> Iterator[PathRecord]:
    """Yield PathRecords in chunks; path i always uses the same random stream."""
    for start in range(0, n_paths, chunk):
        idx = range(start, min(n_paths, start + chunk))
        t, w = _brownian(policy, steps, idx, seed)
        yield record_from_brownian(policy, t, w, start)


def simulate_policy(policy: MergedPolicy, steps: int, n_paths: int, seed: int,
                    chunk: int = 500) -> PathRecord:
    if steps < 1 or n_paths < 1:
        raise ValueError("steps and n_paths must be >= 1")
    parts = list(iter_policy_paths(policy, steps, n_paths, seed, chunk))
    if len(parts) == 1:
        return parts[0]
    cat = {name: np.concatenate([getattr(p, name) for p in parts])
           for name in ("w", "z", "prices", "c_star", "pi_star", "exposure", "V_star", "V1", "V2")}
    first = parts[0]
    return PathRecord(first.t, cat["w"], cat["z"], cat["prices"], cat["c_star"], cat["pi_star"],
                      cat["exposure"], cat["V_star"], cat["V1"], cat["V2"], first.F_t, first.cbar,
                      first.y, 0)


@dataclass(frozen=True)
class FloorCheck:
    n_paths: int
    min_wealth_cushion: float
    min_consumption_cushion: float
    violations: int


def check_floors(policy: MergedPolicy, steps: int, n_paths: int, seed: int,
                 chunk: int = 500) -> FloorCheck:
    mw, mc, bad = np.inf, np.inf, 0
    for rec in iter_policy_paths(policy, steps, n_paths, seed, chunk):
        dv = rec.V_star - rec.F_t
        dc = rec.c_star - rec.cbar
        mw = min(mw, float(dv.min()))
        mc = min(mc, float(dc.min()))
        bad += int(np.sum(dv <= 0) + np.sum(dc <= 0))
    return FloorCheck(n_paths, mw, mc, bad)


@dataclass(frozen=True)
class BudgetEstimate:
    estimate: float
    std_error: float
    target: float
    n_paths: int

    @property
    def z_score(self) -> float:
        return (self.estimate - self.target) / self.std_error

    def passes(self, k: float = 3.0) -> bool:
        return abs(self.z_score) <= k


def budget_mc(policy: MergedPolicy, steps: int, n_paths: int, seed: int, chunk: int = 2000,
              income_pv: float | None = None) -> BudgetEstimate:
    """Monte Carlo estimate of E[int Z c* dt + Z(T) V*(T)] with trapezoid in time.

    Only consumption and terminal wealth are needed, both closed-form in Z, so no
    wealth integrals are evaluated along the paths.
    """
    from .consumption import consumption_rate
    from .preferences import income_value
    from .terminal import wealth_V2

    m, cf = policy.market, policy.cashflows
    t = time_grid(cf.T, steps)
    dt = np.diff(t)
    total = np.empty(n_paths)
    for start in range(0, n_paths, chunk):
        idx = range(start, min(n_paths, start + chunk))
        _, w = _brownian(policy, steps, idx, seed)
        z = kernel_value(m, t, w)
        zc = z * consumption_rate(policy.consumption, t, z)
        integral = np.sum(0.5 * (zc[:, 1:] + zc[:, :-1]) * dt, axis=1)
        total[start:start + len(idx)] = integral + z[:, -1] * wealth_V2(policy.terminal, cf.T, z[:, -1])
    target = policy.v0 + (income_value(m, cf, policy.quad) if income_pv is None else income_pv)
    return BudgetEstimate(float(total.mean()), float(total.std(ddof=1) / np.sqrt(n_paths)),
                          float(target), n_paths)


def replay_scenario(policy: MergedPolicy, times, prices) -> PathRecord:
    """Evaluate the policy along a given single-asset price path."""
    m = policy.market
    if m.n_assets != 1:
        raise MultiAssetUnsupported("scenario replay needs a single risky asset")
    times = np.asarray(times, float)
    prices = np.asarray(prices, float)
    if np.any(prices <= 0) or not np.all(np.isfinite(prices)):
        raise NonPositivePrice("scenario prices must be positive and finite")
    mu, sig, p1 = m.mu[0], m.sigma[0, 0], m.p0[0]
    w = (np.log(prices / p1) - (mu - 0.5 * sig ** 2) * times) / sig
    return record_from_brownian(policy, times, w[None, :, None])


def verify_self_financing(policy: MergedPolicy, record: PathRecord, dt: float) -> float:
    """Euler replication with the recorded weights and consumption.

    Returns the maximum over paths and dates of |V_euler - V*| / (|V*| + 1).
    """
    if not np.allclose(np.diff(record.t), dt, rtol=1e-9, atol=1e-12):
        raise ValueError("dt does not match the record's time grid")
    m = policy.market
    dw = np.diff(record.w, axis=1)
    v = record.V_star[:, 0].copy()
    worst = 0.0
    for k in range(record.t.size - 1):
        pi = record.pi_star[:, k]
        expo = np.where(np.isnan(pi), record.exposure[:, k], pi * v[:, None])
        v = (v + (m.r * v + expo @ m.excess - record.c_star[:, k] + record.y[k]) * dt
             + np.einsum("pi,ij,pj->p", expo, m.sigma, dw[:, k]))
        ref = record.V_star[:, k + 1]
        worst = max(worst, float(np.max(np.abs(v - ref) / (np.abs(ref) + 1.0))))
    return worst


def quantile_summary(record: PathRecord, qs=(0.05, 0.25, 0.5, 0.75, 0.95)) -> dict:
    out = {"t": record.t}
    for name, arr in (("c_star", record.c_star), ("V_star", record.V_star),
                      ("pi_1", record.pi_star[..., 0])):
        for q in qs:
            out[f"{name}_q{int(round(q * 100)):02d}"] = np.nanquantile(arr, q, axis=0)
    return out


def path_columns(n_assets: int) -> list[str]:
    return (["t", "z", "P"] + [f"P_{i + 1}" for i in range(1, n_assets)] + ["c_star"]
            + [f"pi_{i + 1}" for i in range(n_assets)]
            + [f"exposure_{i + 1}" for i in range(n_assets)] + ["V_star", "V1", "V2", "F_t"])


def write_paths_csv(record: PathRecord, fh: TextIO, header: str = "",
                    column_names: bool = True) -> None:
    """One row per (path, date); the leading ``path`` column identifies the path."""
    if header:
        fh.write(header)
    n = record.prices.shape[-1]
    writer = csv.writer(fh, lineterminator="\n")
    if column_names:
        writer.writerow(["path"] + path_columns(n))
    for p in range(record.n_paths):
        for k in range(record.t.size):
            row = [record.first_path + p, record.t[k], record.z[p, k], *record.prices[p, k],
                   record.c_star[p, k], *record.pi_star[p, k], *record.exposure[p, k],
                   record.V_star[p, k], record.V1[p, k], record.V2[p, k], record.F_t[k]]
            writer.writerow([repr(float(x)) if not isinstance(x, int) else x for x in row])


def write_columns_csv(columns: dict, fh: TextIO, header: str = "") -> None:
    if header:
        fh.write(header)
    names = list(columns)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(names)
    arrays = [np.asarray(columns[n]) for n in names]
    for k in range(arrays[0].shape[0]):
        writer.writerow([repr(float(a[k])) for a in arrays])


def curves_columns(curves: ExpectedCurves) -> dict:
    cols = {"t": curves.t, "E_c_star": curves.consumption, "E_V_star": curves.wealth}
    n = curves.exposure.shape[1]
    for i in range(n):
        cols[f"E_exposure_{i + 1}"] = curves.exposure[:, i]
    alloc = curves.allocation
    for i in range(n):
        cols[f"allocation_{i + 1}"] = alloc[:, i]
    cols["F_t"] = curves.floor
    return cols
