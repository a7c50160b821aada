"""Fixed composite Gauss-Legendre quadrature and bracketed root finding.

Every integral in the solvers runs over an interval ``[t, T]`` whose lower end
may vary across a batch of evaluation points.  :func:`rule` therefore returns
nodes and weights that broadcast over arbitrary-shaped endpoint arrays, with the
quadrature axis appended last.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import MaxIterations, NoBracket, NonFinite


@dataclass(frozen=True)
class QuadSpec:
    nodes: int = 16
    panels: int = 16

    def __post_init__(self):
        if int(self.nodes) < 2 or int(self.panels) < 1:
            raise ValueError("QuadSpec needs nodes >= 2 and panels >= 1")

    @property
    def total(self) -> int:
        return self.nodes * self.panels


@dataclass(frozen=True)
class RootSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.max_iter > 0):
            raise ValueError("RootSpec tolerances and max_iter must be positive")


DEFAULT_QUAD = QuadSpec()
DEFAULT_ROOT = RootSpec()


@lru_cache(maxsize=32)
def unit_rule(nodes: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule on [0, 1]; returns read-only (points, weights)."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    h = 1.0 / panels
    left = np.arange(panels)[:, None] * h
    pts = (left + 0.5 * h * (x + 1.0)).ravel()
    wts = np.tile(0.5 * h * w, panels)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def rule(t0, t1, spec: QuadSpec = DEFAULT_QUAD) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[t0, t1]`` with a trailing quadrature axis."""
    u, w = unit_rule(spec.nodes, spec.panels)
    t0 = np.asarray(t0, dtype=float)[..., None]
    t1 = np.asarray(t1, dtype=float)[..., None]
    span = t1 - t0
    return t0 + span * u, span * w


def integrate(f: Callable[[np.ndarray], np.ndarray], t0: float, t1: float,
              spec: QuadSpec = DEFAULT_QUAD) -> float:
    """Integrate a vectorised ``f`` over ``[t0, t1]``."""
    if t1 < t0:
        raise ValueError("integrate requires t0 <= t1")
    if t1 == t0:
        return 0.0
    s, w = rule(t0, t1, spec)
    vals = np.asarray(f(s), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonFinite(f"integrand not finite on [{t0}, {t1}]")
    return float(np.dot(vals, w))


def find_root(f: Callable[[float], float], lo: float, hi: float,
              spec: RootSpec = DEFAULT_ROOT) -> float:
    """Brent's method on a sign-changing bracket.

    Convergence is declared when the bracket is narrower than
    ``abs_tol + rel_tol * |x|``.
    """
    flo, fhi = f(lo), f(hi)
    if not (np.isfinite(flo) and np.isfinite(fhi)):
        raise NonFinite(f"non-finite bracket values f({lo})={flo}, f({hi})={fhi}")
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if flo * fhi > 0:
        raise NoBracket(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")
    rtol = max(spec.rel_tol, 4.0 * np.finfo(float).eps)
    x, info = brentq(f, lo, hi, xtol=spec.abs_tol, rtol=rtol, maxiter=spec.max_iter,
                     full_output=True, disp=False)
    if not info.converged:
        raise MaxIterations(f"root finder stopped after {info.iterations} iterations")
    return float(x)


def bracket_increasing(f: Callable[[float], float], x0: float = 0.0, step: float = 1.0,
                       max_doublings: int = 80) -> tuple[float, float]:
    """Bracket the root of an increasing function by doubling steps from ``x0``."""
    fx = f(x0)
    if fx == 0.0:
        return x0, x0
    direction = -1.0 if fx > 0 else 1.0
    a = x0
    for _ in range(max_doublings):
        b = a + direction * step
        fb = f(b)
        if np.sign(fb) != np.sign(fx) or fb == 0.0:
            return (min(a, b), max(a, b))
        a, fx = b, fb
        step *= 2.0
    raise NoBracket("doubling search did not find a sign change")
