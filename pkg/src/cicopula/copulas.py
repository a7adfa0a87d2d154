"""Bivariate copulas of a component and the latent variable.

Each family provides the copula ``C(u, w)``, its h-function
``h(u, w) = dC/dw`` (the conditional cdf of ``U`` given ``W = w``), the
inverse of ``h`` in ``u`` and the copula density ``dh/du``. All methods are
vectorised over numpy arrays with the usual broadcasting rules.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .numerics import (
    RootBracket,
    QuadratureRule,
    RootFindingError,
    find_root,
    gauss_rule,
    graded_rule,
)

DENSITY_STEP = 1e-6


class BivariateCopula(ABC):
    family: ClassVar[str]
    # True when h(u, .) is a polynomial in w, so plain Gauss rules are exact.
    polynomial_h: ClassVar[bool] = False

    @abstractmethod
    def cdf(self, u, w):
        ...

    @abstractmethod
    def h(self, u, w):
        ...

    @abstractmethod
    def params(self) -> dict:
        ...

    def h_inverse(self, v, w):
        """Solve ``h(u, w) = v`` for ``u`` by root finding, elementwise."""
        v, w = np.broadcast_arrays(np.asarray(v, dtype=float), np.asarray(w, dtype=float))
        out = np.empty(v.shape)
        for idx in np.ndindex(v.shape):
            vi, wi = float(v[idx]), float(w[idx])
            if vi <= 0.0:
                out[idx] = 0.0
            elif vi >= 1.0:
                out[idx] = 1.0
            else:
                try:
                    out[idx] = find_root(lambda u: float(self.h(u, wi)) - vi, RootBracket(0.0, 1.0))
                except RootFindingError as exc:
                    raise RootFindingError(
                        f"{self!r}: h(., {wi}) does not cross {vi}; invalid parameters?", exc.best
                    ) from exc
        return out if out.ndim else float(out)

    def density(self, u, w):
        """Copula density ``d h / d u`` by central differences."""
        u = np.asarray(u, dtype=float)
        lo = np.clip(u - DENSITY_STEP, 0.0, 1.0)
        hi = np.clip(u + DENSITY_STEP, 0.0, 1.0)
        return (self.h(hi, w) - self.h(lo, w)) / (hi - lo)

    def default_rule(self, order: int | None = None) -> QuadratureRule:
        if self.polynomial_h:
            return gauss_rule(order or 64)
        return graded_rule(order or 24)


@dataclass(frozen=True)
class Independence(BivariateCopula):
    family: ClassVar[str] = "independence"
    polynomial_h: ClassVar[bool] = True

    def cdf(self, u, w):
        return np.multiply(u, w)

    def h(self, u, w):
        out = np.asarray(u, dtype=float) + np.zeros_like(w, dtype=float)
        return out if out.ndim else float(out)

    def h_inverse(self, v, w):
        return self.h(v, w)

    def density(self, u, w):
        shape = np.broadcast_shapes(np.shape(u), np.shape(w))
        return np.ones(shape) if shape else 1.0

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class FGM(BivariateCopula):
    """Farlie-Gumbel-Morgenstern copula ``uw(1 + alpha(1-u)(1-w))``.

    ``check=False`` skips the ``|alpha| <= 1`` test; only useful for
    exercising the validity checks on an invalid copula.
    """

    alpha: float
    check: bool = field(default=True, repr=False, compare=False)

    family: ClassVar[str] = "fgm"
    polynomial_h: ClassVar[bool] = True

    def __post_init__(self):
        if self.check and not -1.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [-1,1], got {self.alpha}")

    def cdf(self, u, w):
        u, w = np.asarray(u, dtype=float), np.asarray(w, dtype=float)
        return u * w * (1.0 + self.alpha * (1.0 - u) * (1.0 - w))

    def h(self, u, w):
        u, w = np.asarray(u, dtype=float), np.asarray(w, dtype=float)
        return u + self.alpha * u * (1.0 - u) * (1.0 - 2.0 * w)

    def h_inverse(self, v, w):
        # h is the quadratic u(1 + b) - b u^2 with b = alpha(1 - 2w); the
        # rationalised root avoids dividing by b.
        v, w = np.asarray(v, dtype=float), np.asarray(w, dtype=float)
        b = self.alpha * (1.0 - 2.0 * w)
        disc = np.maximum((1.0 + b) ** 2 - 4.0 * b * v, 0.0)
        return 2.0 * v / ((1.0 + b) + np.sqrt(disc))

    def density(self, u, w):
        u, w = np.asarray(u, dtype=float), np.asarray(w, dtype=float)
        return 1.0 + self.alpha * (1.0 - 2.0 * u) * (1.0 - 2.0 * w)

    def params(self) -> dict:
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class Clayton(BivariateCopula):
    """Clayton copula ``(u^-theta + w^-theta - 1)^(-1/theta)``, ``theta > 0``.

    Boundary values are the limits: ``C = 0`` on the lower edges,
    ``h(0, w) = 0`` and ``h(u, 0) = 1`` for ``u > 0`` (lower tail dependence
    sends ``U`` to 0 together with ``W``).
    """

    theta: float

    family: ClassVar[str] = "clayton"

    def __post_init__(self):
        if not self.theta > 0.0 or not np.isfinite(self.theta):
            raise ValueError(f"theta must be positive, got {self.theta}")

    def _log_s(self, u, w):
        # log(u^-t + w^-t - 1) without overflow for small arguments
        t = self.theta
        a, b = -t * np.log(u), -t * np.log(w)
        m = np.logaddexp(a, b)
        return m + np.log1p(-np.exp(-m))

    def cdf(self, u, w):
        u, w = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(w, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            val = np.exp(-self._log_s(u, w) / self.theta)
        val = np.where((u <= 0.0) | (w <= 0.0), 0.0, val)
        val = np.where(u >= 1.0, w, val)
        val = np.where(w >= 1.0, u, val)
        return val if val.ndim else float(val)

    def h(self, u, w):
        u, w = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(w, dtype=float))
        t = self.theta
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            # h = (1 + (u^-t - 1) w^t)^(-1 - 1/t)
            x = np.exp(t * (np.log(w) - np.log(u))) - w**t
            val = np.exp(-(1.0 + 1.0 / t) * np.log1p(x))
        val = np.where(w <= 0.0, 1.0, val)
        val = np.where(u <= 0.0, 0.0, val)
        val = np.where(u >= 1.0, 1.0, val)
        return val if val.ndim else float(val)

    def h_inverse(self, v, w):
        v, w = np.broadcast_arrays(np.asarray(v, dtype=float), np.asarray(w, dtype=float))
        t = self.theta
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            y = np.expm1(-t / (1.0 + t) * np.log(v)) * np.exp(-t * np.log(w))
            val = np.exp(-np.log1p(y) / t)
        val = np.where(v <= 0.0, 0.0, val)
        val = np.where((w <= 0.0) & (v < 1.0), 0.0, val)
        val = np.where(v >= 1.0, 1.0, val)
        return val if val.ndim else float(val)

    def density(self, u, w):
        u, w = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(w, dtype=float))
        t = self.theta
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            log_c = (
                np.log1p(t)
                - (t + 1.0) * (np.log(u) + np.log(w))
                - (2.0 + 1.0 / t) * self._log_s(u, w)
            )
            val = np.exp(log_c)
        val = np.where((u <= 0.0) | (w <= 0.0) | ~np.isfinite(val), 0.0, val)
        return val if val.ndim else float(val)

    def params(self) -> dict:
        return {"theta": self.theta}


FAMILIES: dict[str, type[BivariateCopula]] = {
    cls.family: cls for cls in (Independence, FGM, Clayton)
}


def cdf(cop: BivariateCopula, u, w):
    return cop.cdf(u, w)


def h(cop: BivariateCopula, u, w):
    return cop.h(u, w)


def h_inverse(cop: BivariateCopula, v, w):
    return cop.h_inverse(v, w)


@dataclass
class CopulaReport:
    """Largest violation of each copula invariant found on a grid."""

    violations: dict[str, float]
    tol: float = 1e-10

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.violations.values())

    def failures(self) -> dict[str, float]:
        return {k: v for k, v in self.violations.items() if v > self.tol}


def validate(
    cop: BivariateCopula, grid_size: int = 101, rule: QuadratureRule | None = None, tol: float = 1e-10
) -> CopulaReport:
    """Check groundedness, margins, 2-increasingness and h-function properties."""
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")
    g = np.linspace(0.0, 1.0, grid_size)
    U, W = np.meshgrid(g, g, indexing="ij")
    C = np.asarray(cop.cdf(U, W))
    H = np.asarray(cop.h(U, W))
    rule = rule or cop.default_rule()

    rect = C[1:, 1:] - C[:-1, 1:] - C[1:, :-1] + C[:-1, :-1]
    margin_integral = np.array([np.sum(rule.weights * cop.h(u, rule.nodes)) for u in g])

    violations = {
        "grounded": float(max(np.max(np.abs(C[:, 0])), np.max(np.abs(C[0, :])))),
        "uniform_margins": float(max(np.max(np.abs(C[:, -1] - g)), np.max(np.abs(C[-1, :] - g)))),
        "two_increasing": float(max(0.0, -np.min(rect))),
        "h_range": float(max(0.0, -np.min(H), np.max(H) - 1.0)),
        "h_boundary": float(max(np.max(np.abs(H[0, :])), np.max(np.abs(H[-1, :] - 1.0)))),
        "h_monotone": float(max(0.0, -np.min(np.diff(H, axis=0)))),
        "margin_integral": float(np.max(np.abs(margin_integral - g))),
    }
    return CopulaReport(violations, tol)
