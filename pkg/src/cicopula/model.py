"""Conditionally independent models ``(X_1, ..., X_n, Z)``.

A model is built from one bivariate copula ``C_i(u, w)`` per component
(coupling ``X_i`` to the latent ``Z``) and the marginals of the ``X_i`` and
``Z``. Given ``Z``, the components are independent, so every joint quantity
reduces to a one-dimensional integral over ``w = F_Z(z)`` of a product of
h-functions ``h_i(u_i, w) = P{U_i <= u_i | W = w}``.

Component indices in this module are 1-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .copulas import BivariateCopula, validate
from .marginals import Marginal, Uniform01
from .numerics import (
    DEFAULT_STEP,
    QuadratureError,
    QuadratureRule,
    gauss_rule,
    graded_rule,
    two_sided_graded_rule,
)

CI_TOLERANCE = 1e-4


class Component(NamedTuple):
    copula: BivariateCopula
    marginal: Marginal


def default_rule(copulas: Sequence[BivariateCopula]) -> QuadratureRule:
    """Gauss-Legendre of order 64 unless a family has non-polynomial h."""
    if all(c.polynomial_h for c in copulas):
        return gauss_rule(64)
    return graded_rule()


@dataclass(frozen=True, eq=False)
class CiModel:
    components: tuple[Component, ...]
    z_marginal: Marginal = field(default_factory=Uniform01)
    quad: QuadratureRule | None = None

    def __post_init__(self):
        comps = tuple(Component(*c) for c in self.components)
        if not comps:
            raise ValueError("model needs at least one component")
        for i, (cop, _) in enumerate(comps, start=1):
            report = validate(cop, grid_size=11, tol=1e-9)
            if not report.passed:
                raise ValueError(f"component {i}: invalid copula {cop!r}: {report.failures()}")
        object.__setattr__(self, "components", comps)
        if self.quad is None:
            object.__setattr__(self, "quad", default_rule([c.copula for c in comps]))

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def copulas(self) -> tuple[BivariateCopula, ...]:
        return tuple(c.copula for c in self.components)

    @property
    def marginals(self) -> tuple[Marginal, ...]:
        return tuple(c.marginal for c in self.components)

    def with_quad(self, quad: QuadratureRule) -> "CiModel":
        return CiModel(self.components, self.z_marginal, quad)

    def h_matrix(self, u: Sequence[float], w: np.ndarray) -> np.ndarray:
        """``h_i(u_i, w)`` for every component, shape ``(n,) + w.shape``."""
        w = np.asarray(w, dtype=float)
        return np.stack([np.broadcast_to(cop.h(ui, w), w.shape) for cop, ui in zip(self.copulas, u)])

    def probabilities(self, x: float | Sequence[float]) -> np.ndarray:
        """``F_i(x_i)`` per component; a scalar ``x`` is shared by all."""
        xs = np.broadcast_to(np.asarray(x, dtype=float), (self.n,))
        return np.array([m.cdf(xi) for m, xi in zip(self.marginals, xs)])

    def check_index(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise IndexError(f"component index {i} outside 1..{self.n}")


def _integrate(values: np.ndarray, weights: np.ndarray) -> float:
    if not np.all(np.isfinite(values)):
        raise QuadratureError("non-finite integrand; invalid copula?")
    return float(np.sum(weights * values))


def _check_probs(u, n: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (n,):
        raise ValueError(f"expected {n} coordinates, got shape {u.shape}")
    if np.any((u < 0.0) | (u > 1.0)):
        raise ValueError("copula coordinates must lie in [0, 1]")
    return u


def joint_copula(model: CiModel, u: Sequence[float]) -> float:
    """Copula of ``(X_1..X_n)``: integral over w of the product of h-functions."""
    u = _check_probs(u, model.n)
    prod = np.prod(model.h_matrix(u, model.quad.nodes), axis=0)
    return _integrate(prod, model.quad.weights)


def joint_copula_with_z(model: CiModel, u: Sequence[float], w: float) -> float:
    """The full ``(n+1)``-copula ``C(u_1..u_n, w)``."""
    u = _check_probs(u, model.n)
    if not 0.0 <= w <= 1.0:
        raise ValueError("w must lie in [0, 1]")
    if w == 0.0:
        return 0.0
    nodes, weights = model.quad.mapped(0.0, w)
    prod = np.prod(model.h_matrix(u, nodes), axis=0)
    return _integrate(prod, weights)


def joint_copula_with_z_batch(model: CiModel, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Vectorised :func:`joint_copula_with_z` for points ``u`` (m, n) and ``w`` (m,)."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    s = w[:, None] * model.quad.nodes[None, :]
    prod = np.ones_like(s)
    for k, cop in enumerate(model.copulas):
        prod = prod * cop.h(u[:, k, None], s)
    return np.sum(w[:, None] * model.quad.weights[None, :] * prod, axis=1)


def joint_cdf(model: CiModel, x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise ValueError(f"expected {model.n} coordinates, got shape {x.shape}")
    return joint_copula(model, model.probabilities(x))


def conditional_cdf(model: CiModel, i: int, x: float, z: float) -> float:
    """``P{X_i <= x | Z = z}``."""
    model.check_index(i)
    cop, marg = model.components[i - 1]
    return float(cop.h(marg.cdf(x), model.z_marginal.cdf(z)))


def rectangle_probability(model: CiModel, boxes: Sequence[tuple[float, float]]) -> float:
    """``P{a_i < X_i <= b_i for all i}``."""
    if len(boxes) != model.n:
        raise ValueError(f"expected {model.n} intervals, got {len(boxes)}")
    nodes, weights = model.quad.nodes, model.quad.weights
    prod = np.ones_like(nodes)
    for (cop, marg), (a, b) in zip(model.components, boxes):
        if not a <= b:
            raise ValueError(f"malformed interval [{a}, {b}]")
        prod = prod * (cop.h(marg.cdf(b), nodes) - cop.h(marg.cdf(a), nodes))
    return _integrate(prod, weights)


def stress_strength(model: CiModel, i: int, j: int) -> float:
    """``P{X_i < X_j}``.

    Given ``W = w`` the components are independent, so the inner integral is
    ``E[h_i(F_i(X_j), w) | W = w]``; it is taken over ``u = F_j(x)`` against
    the conditional density of ``U_j``, the copula density ``c_j(u, w)``.
    """
    model.check_index(i)
    model.check_index(j)
    if i == j:
        raise ValueError("stress_strength needs two distinct components")
    cop_i, marg_i = model.components[i - 1]
    cop_j, marg_j = model.components[j - 1]

    # F_i(F_j^-1(u)) has kinks where F_j^-1(u) leaves the support of X_i.
    cuts = {0.0, 1.0}
    for edge in (marg_i.lower, marg_i.upper):
        if np.isfinite(edge):
            c = float(marg_j.cdf(edge))
            if 0.0 < c < 1.0:
                cuts.add(c)
    cuts = sorted(cuts)
    inner_rule = two_sided_graded_rule()
    pieces = [inner_rule.mapped(a, b) for a, b in zip(cuts[:-1], cuts[1:])]
    u = np.concatenate([p[0] for p in pieces])
    wu = np.concatenate([p[1] for p in pieces])

    w, ww = model.quad.nodes, model.quad.weights
    x = marg_j.quantile(u)
    inner = cop_i.h(marg_i.cdf(x)[:, None], w[None, :]) * cop_j.density(u[:, None], w[None, :])
    if not np.all(np.isfinite(inner)):
        raise QuadratureError("non-finite stress-strength integrand")
    return float(np.sum(wu[:, None] * ww[None, :] * inner))


@dataclass(frozen=True)
class CandidateCopula:
    """A closed-form ``(n+1)``-copula ``C(u_1..u_n, w)`` offered for a CI check.

    ``evaluator(u, w)`` must be vectorised: ``u`` has shape ``(m, n)``, ``w``
    shape ``(m,)``, and the result shape ``(m,)``.
    """

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    n: int
    name: str = "candidate"

    def __call__(self, u, w) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(u, dtype=float), np.asarray(w, dtype=float)), dtype=float)


def _grid_points(grid_size: int, dims: int) -> np.ndarray:
    g = np.linspace(0.0, 1.0, grid_size)
    return np.array(list(itertools.product(g, repeat=dims)))


def validate_candidate(candidate: CandidateCopula, grid_size: int = 11) -> dict[str, float]:
    """Largest groundedness and uniform-margin violations on a grid."""
    n = candidate.n
    pts = _grid_points(grid_size, n + 1)
    vals = candidate(pts[:, :n], pts[:, n])
    grounded = float(np.max(np.abs(vals[np.any(pts == 0.0, axis=1)])))
    g = np.linspace(0.0, 1.0, grid_size)
    margin = 0.0
    for k in range(n + 1):
        pts_k = np.ones((grid_size, n + 1))
        pts_k[:, k] = g
        margin = max(margin, float(np.max(np.abs(candidate(pts_k[:, :n], pts_k[:, n]) - g))))
    return {"grounded": grounded, "uniform_margins": margin}


@dataclass
class CiReport:
    residual: float
    worst_point: tuple[float, ...]
    tol: float = CI_TOLERANCE

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol


def verify_ci(
    candidate: CandidateCopula,
    model: CiModel,
    grid_size: int = 11,
    step: float = DEFAULT_STEP,
    tol: float = CI_TOLERANCE,
) -> CiReport:
    """Compare ``dC/dw`` of a candidate with the product of the model's h-functions.

    The derivative is a finite difference (central inside, second-order
    one-sided within ``step`` of the boundary), so any black-box candidate
    can be checked. The residual is the largest absolute mismatch on the
    grid ``{0, 1/(g-1), ..., 1}^(n+1)``.
    """
    if candidate.n != model.n:
        raise ValueError(f"candidate has {candidate.n} coordinates, model has {model.n}")
    n = model.n
    report = validate_candidate(candidate, grid_size)
    if max(report.values()) > 1e-8:
        raise ValueError(f"candidate is not a copula on the grid: {report}")

    pts = _grid_points(grid_size, n + 1)
    u, w = pts[:, :n], pts[:, n]
    f = lambda ww: candidate(u, np.clip(ww, 0.0, 1.0))
    left = w - step < 0.0
    right = w + step > 1.0
    deriv = (f(w + step) - f(w - step)) / (2.0 * step)
    fwd = (-3.0 * f(w) + 4.0 * f(w + step) - f(w + 2 * step)) / (2.0 * step)
    bwd = (3.0 * f(w) - 4.0 * f(w - step) + f(w - 2 * step)) / (2.0 * step)
    deriv = np.where(left, fwd, np.where(right, bwd, deriv))

    target = np.ones(len(pts))
    for k, cop in enumerate(model.copulas):
        target = target * cop.h(u[:, k], w)
    err = np.abs(deriv - target)
    worst = int(np.argmax(err))
    return CiReport(float(err[worst]), tuple(float(v) for v in pts[worst]), tol)


def product_candidate(n: int) -> CandidateCopula:
    """``u_1 ... u_n w``: the (n+1)-copula of mutually independent variables."""
    return CandidateCopula(lambda u, w: np.prod(u, axis=1) * w, n, "product")


def fgm_pair_candidate(alpha: float, n: int = 2) -> CandidateCopula:
    """Grounded antiderivative for two FGM components (plus ``n - 2`` independent ones).

    ``C = P w + alpha P w (2 - u1 - u2)(1 - w)
    + (alpha^2 / 6) P (1 - u1)(1 - u2)(1 - (1 - 2w)^3)`` with ``P = u_1 ... u_n``.
    """

    def evaluator(u, w):
        p = np.prod(u, axis=1)
        u1, u2 = u[:, 0], u[:, 1]
        return (
            p * w
            + alpha * p * w * (2.0 - u1 - u2) * (1.0 - w)
            + alpha**2 / 6.0 * p * (1.0 - u1) * (1.0 - u2) * (1.0 - (1.0 - 2.0 * w) ** 3)
        )

    return CandidateCopula(evaluator, n, "fgm-pair")


def direct_fgm_candidate(alpha: float, n: int = 2) -> CandidateCopula:
    """``P w (1 + alpha (1 - u1)(1 - u2))``: FGM dependence between X_1 and X_2, none through Z."""
    return CandidateCopula(
        lambda u, w: np.prod(u, axis=1) * w * (1.0 + alpha * (1.0 - u[:, 0]) * (1.0 - u[:, 1])),
        n,
        "direct-fgm",
    )


def model_candidate(model: CiModel) -> CandidateCopula:
    """The model's own ``(n+1)``-copula, integrated numerically."""
    return CandidateCopula(lambda u, w: joint_copula_with_z_batch(model, u, w), model.n, "model")
