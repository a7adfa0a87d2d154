"""Order statistics of conditionally independent components.

Given ``W = w`` the indicators ``1{X_i <= x}`` are independent Bernoulli
variables with success probabilities ``h_i(F_i(x), w)``, so the number of
components below a threshold is Poisson-binomial. Every cdf here is the
integral over ``w`` of a tail probability of that count (or of the joint
counts below several thresholds), computed by dynamic programming. The
permanent-based routes sum the same events over permutations and serve as
an independent cross-check.

Ranks are 1-based: ``X_{1:n} <= ... <= X_{n:n}``.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import CiModel
from .numerics import two_sided_graded_rule
from .permanent import permanent

PROB_TOL = 1e-12
MAX_PERMANENT_COMPONENTS = 12
MRL_DENOMINATOR_FLOOR = 1e-12
DENSE_STATE_LIMIT = 48  # below this many count states the matrix form is faster


@dataclass(frozen=True)
class OrderStatQuery:
    ranks: tuple[int, ...]
    thresholds: tuple[float, ...]

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.ranks)
        thresholds = tuple(float(x) for x in self.thresholds)
        if not ranks:
            raise ValueError("query needs at least one rank")
        if len(ranks) != len(thresholds):
            raise ValueError("ranks and thresholds must have equal length")
        if any(a >= b for a, b in zip(ranks, ranks[1:])):
            raise ValueError(f"ranks must be strictly increasing, got {ranks}")
        if ranks[0] < 1:
            raise ValueError("ranks start at 1")
        if any(a > b for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError(f"thresholds must be nondecreasing, got {thresholds}")
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "thresholds", thresholds)

    def check(self, n: int) -> None:
        if self.ranks[-1] > n:
            raise ValueError(f"rank {self.ranks[-1]} exceeds the number of components {n}")


@dataclass(frozen=True, eq=False)
class CountDistribution:
    """Joint law of the counts ``c_j = #{i : X_i <= x_j}``, one axis per threshold.

    ``probs`` has shape ``(c_1 states, ..., c_k states) + batch``. When
    ``cap`` is set, axis ``j`` has ``cap[j] + 1`` states and its last state
    collects every count ``>= cap[j]``; otherwise it has ``n + 1`` states.
    """

    probs: np.ndarray
    n: int
    k: int
    cap: tuple[int, ...] | None = None

    def total(self):
        return self.probs.sum(axis=tuple(range(self.k)))

    def tail(self, ranks: Sequence[int]):
        """``P{c_j >= r_j for every j}``."""
        ranks = tuple(ranks)
        if len(ranks) != self.k:
            raise ValueError(f"expected {self.k} ranks")
        if self.cap is not None and any(r > c for r, c in zip(ranks, self.cap)):
            raise ValueError("rank beyond the saturation cap")
        return self.probs[tuple(slice(r, None) for r in ranks)].sum(axis=tuple(range(self.k)))

    def head(self, bounds: Sequence[int]):
        """``P{c_j <= b_j for every j}``."""
        bounds = tuple(bounds)
        if len(bounds) != self.k:
            raise ValueError(f"expected {self.k} bounds")
        if self.cap is not None and any(b >= c for b, c in zip(bounds, self.cap)):
            raise ValueError("bound at or beyond the saturation cap")
        return self.probs[tuple(slice(0, b + 1) for b in bounds)].sum(axis=tuple(range(self.k)))


def count_dp(p, cap: Sequence[int] | None = None) -> CountDistribution:
    """Distribution of counts below ``k`` nested thresholds.

    ``p[i, j]`` is the probability that component ``i`` falls at or below
    threshold ``j``; it must be nondecreasing in ``j``. Shapes ``(n,)``,
    ``(n, k)`` and ``(n, k, *batch)`` are accepted; batch axes are carried
    through elementwise. Components are added one at a time: component
    ``i`` lands strictly between thresholds ``m-1`` and ``m`` with
    probability ``p[i, m] - p[i, m-1]`` and then raises ``c_m, ..., c_k``.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if p.ndim < 2 or p.shape[0] < 1:
        raise ValueError("need at least one component")
    n, k = p.shape[:2]
    batch = p.shape[2:]
    # cat[i, m]: probability that component i lands in category m, i.e.
    # between thresholds m-1 and m (category k is above every threshold).
    ext = np.empty((n, k + 2) + batch)
    ext[:, 0] = 0.0
    ext[:, 1:-1] = p
    ext[:, -1] = 1.0
    cat = ext[:, 1:] - ext[:, :-1]
    if not cat.min() >= -PROB_TOL:  # also false for NaN
        if not (p.min() >= -PROB_TOL and p.max() <= 1.0 + PROB_TOL):
            raise ValueError("probabilities must lie in [0, 1]")
        raise ValueError("per-component threshold probabilities must be nondecreasing")
    cat = np.maximum(cat, 0.0)

    if cap is None:
        top = (n,) * k
    else:
        cap = tuple(int(c) for c in cap)
        if len(cap) != k or any(c < 0 for c in cap):
            raise ValueError("cap needs one non-negative entry per threshold")
        top = tuple(min(c, n) for c in cap)

    if math.prod(t + 1 for t in top) <= DENSE_STATE_LIMIT:
        dist = _dense_recurrence(cat, top)
    else:
        dist = _sliced_recurrence(cat, top)
    if cap is not None and top != cap:
        # caps beyond n: pad with the unreachable states
        dist = np.pad(dist, [(0, c - t) for c, t in zip(cap, top)] + [(0, 0)] * len(batch))
    return CountDistribution(dist, n, k, cap)


def _dense_recurrence(cat: np.ndarray, top: tuple[int, ...]) -> np.ndarray:
    """Add-one-component recurrence with the state update as a matrix product."""
    n, k1 = cat.shape[:2]
    batch = cat.shape[2:]
    shifts = _shift_matrices(top)
    states = shifts.shape[1]
    flat_cat = cat.reshape(n, k1, -1)
    dist = np.zeros((states, flat_cat.shape[2]))
    dist[0] = 1.0
    for i in range(n):
        dist = np.einsum("msb,mb->sb", shifts @ dist, flat_cat[i])
    return dist.reshape(tuple(t + 1 for t in top) + batch)


@functools.lru_cache(maxsize=64)
def _shift_matrices(top: tuple[int, ...]) -> np.ndarray:
    """``out[m]`` moves a component landing in category ``m`` into the count state.

    Category ``m < k`` raises the counts on axes ``m..k-1`` (saturating at
    ``top``); category ``k`` leaves them unchanged.
    """
    k = len(top)
    dims = tuple(t + 1 for t in top)
    idx = np.indices(dims).reshape(k, -1)
    size = idx.shape[1]
    out = np.zeros((k + 1, size, size))
    for m in range(k + 1):
        moved = idx.copy()
        moved[m:] = np.minimum(moved[m:] + 1, np.array(top)[m:, None])
        out[m, np.ravel_multi_index(moved, dims), np.arange(size)] = 1.0
    out.setflags(write=False)
    return out


def _sliced_recurrence(cat: np.ndarray, top: tuple[int, ...]) -> np.ndarray:
    """Same recurrence by in-place slice updates; memory stays linear in the state count."""
    n, k = cat.shape[0], cat.shape[1] - 1
    batch = cat.shape[2:]
    # One spare state per axis catches the overflow of a step; it is folded
    # back into the top state (which means ">= top") once overflow is possible.
    dist = np.zeros(tuple(t + 2 for t in top) + batch)
    dist[(0,) * k] = 1.0
    src = (slice(0, -1),) * k
    for i in range(n):
        new = dist * cat[i, k]
        for m in range(k):
            # category m raises the counts on axes m..k-1
            dst = (slice(0, -1),) * m + (slice(1, None),) * (k - m)
            new[dst] += dist[src] * cat[i, m]
        for axis, t in enumerate(top):
            if i < t:  # at most i + 1 components counted so far: no overflow yet
                continue
            lo = (slice(None),) * axis + (t,)
            hi = (slice(None),) * axis + (t + 1,)
            new[lo] += new[hi]
            new[hi] = 0.0
        dist = new
    return dist[src]


def _threshold_probs(model: CiModel, thresholds: Sequence[float], w: np.ndarray) -> np.ndarray:
    """``h_i(F_i(x_j), w)`` with shape ``(n, k) + w.shape``."""
    x = np.asarray(thresholds, dtype=float)
    out = np.empty((model.n, x.size) + w.shape)
    done: dict = {}
    for i, comp in enumerate(model.components):
        # identical components (e.g. iid models) share one evaluation
        if comp not in done:
            u = np.asarray(comp.marginal.cdf(x)).reshape(x.shape + (1,) * w.ndim)
            done[comp] = comp.copula.h(u, w)
        out[i] = done[comp]
    return out


def _check_rank(model: CiModel, r: int) -> None:
    if not 1 <= r <= model.n:
        raise ValueError(f"rank {r} outside 1..{model.n}")


def single_cdf(model: CiModel, r: int, x: float) -> float:
    """``P{X_{r:n} <= x}``."""
    _check_rank(model, r)
    return k_joint_cdf(model, OrderStatQuery((r,), (x,)))


def pair_cdf(model: CiModel, r: int, s: int, x: float, y: float) -> float:
    """``P{X_{r:n} <= x, X_{s:n} <= y}`` for ``r < s``.

    When ``x > y`` the first event is implied by the second, so ``x`` is
    replaced by ``y``.
    """
    if not r < s:
        raise ValueError("pair_cdf needs r < s")
    return k_joint_cdf(model, OrderStatQuery((r, s), (min(x, y), y)))


def k_joint_cdf(model: CiModel, query: OrderStatQuery) -> float:
    """``P{X_{r_1:n} <= x_1, ..., X_{r_k:n} <= x_k}``."""
    query.check(model.n)
    nodes, weights = model.quad.nodes, model.quad.weights
    p = _threshold_probs(model, query.thresholds, nodes)
    tail = count_dp(p, cap=query.ranks).tail(query.ranks)
    return float(np.sum(weights * tail))


def extreme_cdfs(model: CiModel, x: float) -> tuple[float, float]:
    """``(P{X_{1:n} <= x}, P{X_{n:n} <= x})`` from the product formulas."""
    nodes, weights = model.quad.nodes, model.quad.weights
    h = model.h_matrix(model.probabilities(x), nodes)
    max_cdf = float(np.sum(weights * np.prod(h, axis=0)))
    min_cdf = 1.0 - float(np.sum(weights * np.prod(1.0 - h, axis=0)))
    return min_cdf, max_cdf


def _block_matrices(blocks: Sequence[tuple[int, np.ndarray]]) -> np.ndarray:
    """Stack rows ``row`` repeated ``count`` times; ``row`` is ``(n, m)``, result ``(m, n, n)``."""
    rows = [np.repeat(row.T[:, None, :], count, axis=1) for count, row in blocks if count]
    return np.concatenate(rows, axis=1)


def _check_permanent_size(model: CiModel) -> None:
    if model.n > MAX_PERMANENT_COMPONENTS:
        raise ValueError(
            f"permanent route limited to {MAX_PERMANENT_COMPONENTS} components, model has {model.n}"
        )


def k_joint_cdf_permanent(model: CiModel, query: OrderStatQuery) -> float:
    """Permanent form of :func:`k_joint_cdf`.

    For block sizes ``j_1 + ... + j_{k+1} = n`` with ``j_1 + ... + j_l >= r_l``
    the matrix has ``j_1`` rows of ``h(x_1)``, ``j_l`` rows of
    ``h(x_l) - h(x_{l-1})`` and ``j_{k+1}`` rows of ``1 - h(x_k)``; its
    permanent divided by ``j_1! ... j_{k+1}!`` is the probability that exactly
    ``j_l`` components land in the ``l``-th cell.
    """
    _check_permanent_size(model)
    query.check(model.n)
    n, k = model.n, len(query.ranks)
    nodes, weights = model.quad.nodes, model.quad.weights
    p = _threshold_probs(model, query.thresholds, nodes)  # (n, k, m)
    cells = [p[:, 0]] + [p[:, l] - p[:, l - 1] for l in range(1, k)] + [1.0 - p[:, k - 1]]

    total = np.zeros_like(nodes)
    for sizes in itertools.product(range(n + 1), repeat=k):
        if sum(sizes) > n:
            continue
        cum = list(itertools.accumulate(sizes))
        if any(c < r for c, r in zip(cum, query.ranks)):
            continue
        sizes = sizes + (n - sum(sizes),)
        mats = _block_matrices(list(zip(sizes, cells)))
        total += permanent(mats) / math.prod(math.factorial(j) for j in sizes)
    return float(np.sum(weights * total))


def single_cdf_permanent(model: CiModel, r: int, x: float) -> float:
    """``sum_{i>=r} 1/(i!(n-i)!) int Per(M_1(x, s)) ds``."""
    _check_rank(model, r)
    _check_permanent_size(model)
    n = model.n
    nodes, weights = model.quad.nodes, model.quad.weights
    h = model.h_matrix(model.probabilities(x), nodes)
    total = np.zeros_like(nodes)
    for i in range(r, n + 1):
        mats = _block_matrices([(i, h), (n - i, 1.0 - h)])
        total += permanent(mats) / (math.factorial(i) * math.factorial(n - i))
    return float(np.sum(weights * total))


def pair_cdf_permanent(model: CiModel, r: int, s: int, x: float, y: float) -> float:
    """Permanent route for pairs: ``i`` components at or below ``x``,
    ``j`` in ``(x, y]`` and ``n - i - j`` above ``y``, weighted by
    ``1/(i! j! (n-i-j)!)``, summed over ``i >= r`` and ``i + j >= s``."""
    if not r < s:
        raise ValueError("pair_cdf needs r < s")
    x = min(x, y)
    _check_rank(model, r)
    _check_rank(model, s)
    _check_permanent_size(model)
    n = model.n
    nodes, weights = model.quad.nodes, model.quad.weights
    hx = model.h_matrix(model.probabilities(x), nodes)
    hy = model.h_matrix(model.probabilities(y), nodes)
    total = np.zeros_like(nodes)
    for i in range(r, n + 1):
        for j in range(max(s - i, 0), n - i + 1):
            mats = _block_matrices([(i, hx), (j, hy - hx), (n - i - j, 1.0 - hy)])
            denom = math.factorial(i) * math.factorial(j) * math.factorial(n - i - j)
            total += permanent(mats) / denom
    return float(np.sum(weights * total))


def iid_single_cdf(F: float, n: int, r: int) -> float:
    """Binomial tail: the cdf of ``X_{r:n}`` for iid components with cdf value ``F``."""
    return math.fsum(math.comb(n, i) * F**i * (1.0 - F) ** (n - i) for i in range(r, n + 1))


def iid_pair_cdf(Fx: float, Fy: float, n: int, r: int, s: int) -> float:
    """Multinomial sum for ``P{X_{r:n} <= x, X_{s:n} <= y}`` with iid components."""
    Fx = min(Fx, Fy)
    terms = []
    for i in range(r, n + 1):
        for j in range(max(s - i, 0), n - i + 1):
            coef = math.factorial(n) // (
                math.factorial(i) * math.factorial(j) * math.factorial(n - i - j)
            )
            terms.append(coef * Fx**i * (Fy - Fx) ** j * (1.0 - Fy) ** (n - i - j))
    return math.fsum(terms)


def _reference_marginal(marginals):
    """The unbounded marginal with the heaviest upper tail."""
    unbounded = [m for m in marginals if not np.isfinite(m.upper)]
    if not unbounded:
        return None
    return max(unbounded, key=lambda m: float(m.quantile(1.0 - 1e-6)))


def mrl(model: CiModel, k: int, r: int, t: float) -> float:
    """Mean residual life ``E[X_{k:n} - t | X_{r:n} > t]`` for ``r < k``.

    The numerator is ``int_t^inf P{X_{r:n} > t, X_{k:n} > u} du`` where the
    joint survival is ``P{N(t) <= r-1, N(u) <= k-1}`` from the two-threshold
    count distribution. Bounded stretches of ``[t, inf)`` are integrated
    directly in ``u``, split at every finite support end; an unbounded tail
    is mapped through the quantile function of the heaviest-tailed marginal.
    """
    if not r < k:
        raise ValueError("mrl needs r < k")
    _check_rank(model, r)
    _check_rank(model, k)
    denom = 1.0 - single_cdf(model, r, t)
    if denom < MRL_DENOMINATOR_FLOOR:
        raise ArithmeticError(f"P{{X_({r}:{model.n}) > {t}}} = {denom:.3g} is too small")

    rule = two_sided_graded_rule()
    s_nodes, s_weights = model.quad.nodes, model.quad.weights

    def survival(u: np.ndarray) -> np.ndarray:
        # returns P{N(t) <= r-1, N(u) <= k-1} for every u
        p_t = model.h_matrix(model.probabilities(t), s_nodes)  # (n, m)
        p_t = np.broadcast_to(p_t[:, None, :], (model.n, u.size, s_nodes.size))
        p_u = np.stack(
            [cop.h(marg.cdf(u)[:, None], s_nodes[None, :]) for cop, marg in model.components]
        )
        p = np.stack([p_t, np.maximum(p_u, p_t)], axis=1)  # (n, 2, len(u), m)
        head = count_dp(p, cap=(r, k)).head((r - 1, k - 1))
        return head @ s_weights

    finite_ends = sorted({m.upper for m in model.marginals if np.isfinite(m.upper) and m.upper > t})
    edges = [float(t)] + finite_ends
    numerator = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        u, wu = rule.mapped(a, b)
        numerator += float(wu @ survival(u))

    ref = _reference_marginal(model.marginals)
    if ref is not None:
        start = edges[-1]
        q0 = float(ref.cdf(start))
        if q0 < 1.0:
            q, wq = rule.mapped(q0, 1.0)
            u = ref.quantile(q)
            numerator += float((wq / ref.pdf(u)) @ survival(u))
    return numerator / denom
