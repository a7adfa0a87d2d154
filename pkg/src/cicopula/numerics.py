"""Quadrature on [0, 1], finite differences and bracketed root finding.

Everything downstream integrates over the latent copula coordinate ``w`` on
the unit interval, so the rules here are always normalised to [0, 1] and
mapped onto sub-intervals when needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

MAX_GAUSS_ORDER = 512
DEFAULT_ORDER = 64
DEFAULT_STEP = 1e-5
DEFAULT_ROOT_TOL = 1e-12


class QuadratureError(ArithmeticError):
    """Raised when an integrand is not finite at a quadrature node."""


class RootFindingError(ArithmeticError):
    """Raised when a bracketed root search fails.

    ``best`` holds the best abscissa found so far, when there is one.
    """

    def __init__(self, message: str, best: float | None = None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights of a quadrature rule on [0, 1]."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise ValueError("nodes and weights must be non-empty 1-d arrays of equal length")
        if np.any(nodes <= 0.0) or np.any(nodes >= 1.0):
            raise ValueError("quadrature nodes must lie in the open interval (0, 1)")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("quadrature nodes must be strictly increasing")
        if np.any(weights <= 0.0):
            raise ValueError("quadrature weights must be positive")
        if abs(math.fsum(weights) - 1.0) > 1e-14:
            raise ValueError("quadrature weights must sum to 1")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def order(self) -> int:
        return self.nodes.size

    def mapped(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights for the interval [a, b] (affine map)."""
        width = b - a
        return a + width * self.nodes, width * self.weights

    def reversed_mapped(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Like :meth:`mapped` but with node density of ``0`` placed at ``b``."""
        width = b - a
        return b - width * self.nodes, width * self.weights


def gauss_rule(order: int = DEFAULT_ORDER) -> QuadratureRule:
    """Gauss-Legendre rule with ``order`` nodes mapped to [0, 1].

    Exact for polynomials of degree ``2 * order - 1``.
    """
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= MAX_GAUSS_ORDER:
        raise ValueError(f"quadrature order must be an integer in [1, {MAX_GAUSS_ORDER}], got {order!r}")
    x, w = leggauss(int(order))
    weights = w / 2.0
    # leggauss weights sum to 2 only up to rounding; renormalise so the
    # constant is integrated exactly.
    weights = weights / math.fsum(weights)
    return QuadratureRule((x + 1.0) / 2.0, weights)


def graded_rule(order: int = 24, levels: int = 16, ratio: float = 0.25) -> QuadratureRule:
    """Composite Gauss-Legendre rule on panels refined geometrically towards 0.

    Panels are ``[0, ratio**levels], [ratio**levels, ratio**(levels-1)], ..., [ratio, 1]``
    with ``order`` nodes each. Used for integrands with an algebraic cusp or
    a thin layer near ``w = 0`` (Clayton h-functions), where a single
    Gauss panel converges slowly.
    """
    if levels < 0:
        raise ValueError("levels must be non-negative")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    base = gauss_rule(order)
    edges = [0.0] + [ratio**k for k in range(levels, 0, -1)] + [1.0]
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = base.mapped(a, b)
        nodes.append(x)
        weights.append(w)
    weights = np.concatenate(weights)
    return QuadratureRule(np.concatenate(nodes), weights / math.fsum(weights))


def two_sided_graded_rule(order: int = 16, levels: int = 14, ratio: float = 0.3) -> QuadratureRule:
    """:func:`graded_rule` on [0, 1/2] mirrored onto [1/2, 1].

    For integrands with algebraic endpoint singularities at either end,
    such as ``F_i(F_j^-1(u))`` for mismatched marginals.
    """
    half = graded_rule(order, levels, ratio)
    nodes = np.concatenate([half.nodes / 2.0, 1.0 - half.nodes[::-1] / 2.0])
    weights = np.concatenate([half.weights, half.weights[::-1]]) / 2.0
    return QuadratureRule(nodes, weights / math.fsum(weights))


def integrate_01(f: Callable[[np.ndarray], np.ndarray], rule: QuadratureRule) -> float:
    """Apply ``rule`` to a vectorised integrand ``f`` over [0, 1]."""
    values = np.asarray(f(rule.nodes), dtype=float)
    if values.shape != rule.nodes.shape:
        values = np.broadcast_to(values, rule.nodes.shape)
    if not np.all(np.isfinite(values)):
        bad = rule.nodes[~np.isfinite(values)][0]
        raise QuadratureError(f"integrand is not finite at node {bad!r}")
    return float(np.sum(rule.weights * values))


def central_diff(
    f: Callable[[float], float],
    x: float,
    h: float = DEFAULT_STEP,
    lower: float | None = None,
    upper: float | None = None,
) -> float:
    """Second-order finite-difference derivative of ``f`` at ``x``.

    Uses the central formula when ``[x - h, x + h]`` fits inside
    ``[lower, upper]`` and the second-order one-sided formula otherwise.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    fits_left = lower is None or x - h >= lower
    fits_right = upper is None or x + h <= upper
    if fits_left and fits_right:
        return (f(x + h) - f(x - h)) / (2.0 * h)
    if fits_left == fits_right:
        raise ValueError(f"domain [{lower}, {upper}] is too narrow for step {h}")
    if not fits_left:
        if upper is not None and x + 2 * h > upper:
            raise ValueError(f"domain [{lower}, {upper}] is too narrow for step {h}")
        return (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2 * h)) / (2.0 * h)
    if lower is not None and x - 2 * h < lower:
        raise ValueError(f"domain [{lower}, {upper}] is too narrow for step {h}")
    return (3.0 * f(x) - 4.0 * f(x - h) + f(x - 2 * h)) / (2.0 * h)


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    tol: float = DEFAULT_ROOT_TOL

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("bracket requires lo < hi")
        if not self.tol > 0:
            raise ValueError("bracket tolerance must be positive")


def find_root(f: Callable[[float], float], bracket: RootBracket, maxiter: int = 200) -> float:
    """Root of ``f`` inside ``bracket`` (Brent's bisection/secant hybrid)."""
    flo, fhi = f(bracket.lo), f(bracket.hi)
    if flo == 0.0:
        return float(bracket.lo)
    if fhi == 0.0:
        return float(bracket.hi)
    if np.sign(flo) == np.sign(fhi):
        raise RootFindingError(
            f"no sign change on [{bracket.lo}, {bracket.hi}]: f(lo)={flo!r}, f(hi)={fhi!r}"
        )
    root, info = brentq(
        f, bracket.lo, bracket.hi, xtol=bracket.tol, rtol=4 * np.finfo(float).eps,
        maxiter=maxiter, full_output=True, disp=False,
    )
    if not info.converged:
        raise RootFindingError(f"root search did not converge in {maxiter} iterations", best=root)
    return float(root)
