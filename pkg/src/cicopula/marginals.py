"""Absolutely continuous univariate marginals.

Models only touch marginals through ``cdf`` and ``quantile``; all
integration happens in copula coordinates.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar

import numpy as np


def _out(val):
    return val if np.ndim(val) else float(val)


class Marginal(ABC):
    family: ClassVar[str]
    lower: ClassVar[float] = 0.0
    upper: ClassVar[float] = 1.0

    @abstractmethod
    def cdf(self, x):
        ...

    @abstractmethod
    def pdf(self, x):
        ...

    @abstractmethod
    def quantile(self, p):
        ...

    @abstractmethod
    def params(self) -> dict:
        ...


@dataclass(frozen=True)
class Uniform01(Marginal):
    family: ClassVar[str] = "uniform01"

    def cdf(self, x):
        return _out(np.clip(np.asarray(x, dtype=float), 0.0, 1.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(np.where((x >= 0.0) & (x <= 1.0), 1.0, 0.0))

    def quantile(self, p):
        return _out(np.clip(np.asarray(p, dtype=float), 0.0, 1.0))

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class Power(Marginal):
    """``F(x) = x**k`` on [0, 1]."""

    k: float
    family: ClassVar[str] = "power"

    def __post_init__(self):
        if not self.k > 0.0 or not np.isfinite(self.k):
            raise ValueError(f"k must be positive, got {self.k}")

    def cdf(self, x):
        return _out(np.clip(np.asarray(x, dtype=float), 0.0, 1.0) ** self.k)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0.0) & (x <= 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = self.k * np.where(inside, x, 1.0) ** (self.k - 1.0)
        return _out(np.where(inside, val, 0.0))

    def quantile(self, p):
        return _out(np.clip(np.asarray(p, dtype=float), 0.0, 1.0) ** (1.0 / self.k))

    def params(self) -> dict:
        return {"k": self.k}


@dataclass(frozen=True)
class Exponential(Marginal):
    rate: float
    family: ClassVar[str] = "exponential"
    upper: ClassVar[float] = np.inf

    def __post_init__(self):
        if not self.rate > 0.0 or not np.isfinite(self.rate):
            raise ValueError(f"rate must be positive, got {self.rate}")

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return _out(-np.expm1(-self.rate * x))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(np.where(x >= 0.0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0))

    def quantile(self, p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        with np.errstate(divide="ignore"):
            return _out(-np.log1p(-p) / self.rate)

    def params(self) -> dict:
        return {"rate": self.rate}


FAMILIES: dict[str, type[Marginal]] = {
    cls.family: cls for cls in (Uniform01, Power, Exponential)
}
