"""Seeded conditional sampling of ``(X_1, ..., X_n, Z)`` and empirical checks.

Rows are drawn as: ``W ~ U(0,1)``; ``V_i ~ U(0,1)`` independently;
``U_i = h_i^{-1}(V_i, W)``; ``X_i = F_i^{-1}(U_i)``; ``Z = F_Z^{-1}(W)``.
Given ``W`` the ``X_i`` are independent by construction.

Uniforms come from the counter-based Philox generator keyed by the seed.
Rows are grouped in fixed blocks of ``BLOCK_ROWS``, and the stream for a
(column, block) pair starts at counter ``(0, 0, column, block)``, so every
row's randomness is a function of ``(seed, row index)`` alone; blocks can
be generated in any order or in parallel with identical results.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import CiModel

BLOCK_ROWS = 1 << 16
KS_COEFFICIENT = 1.63  # asymptotic Kolmogorov critical value, alpha ~ 0.01
KS_GRID_POINTS = 201


@dataclass(frozen=True, eq=False)
class SampleBatch:
    seed: int
    columns: np.ndarray  # (count, n + 1): X_1..X_n, Z

    @property
    def count(self) -> int:
        return self.columns.shape[0]

    @property
    def n(self) -> int:
        return self.columns.shape[1] - 1

    @property
    def x(self) -> np.ndarray:
        return self.columns[:, :-1]

    @property
    def z(self) -> np.ndarray:
        return self.columns[:, -1]


def _uniform_block(seed: int, column: int, block: int, size: int) -> np.ndarray:
    bitgen = np.random.Philox(key=seed, counter=[0, 0, column, block])
    return np.random.Generator(bitgen).random(size)


def _uniforms(seed: int, column: int, count: int) -> np.ndarray:
    blocks = []
    for b in range(math.ceil(count / BLOCK_ROWS)):
        size = min(BLOCK_ROWS, count - b * BLOCK_ROWS)
        blocks.append(_uniform_block(seed, column, b, size))
    return np.concatenate(blocks)


def sample(model: CiModel, count: int, seed: int) -> SampleBatch:
    if count < 1:
        raise ValueError("count must be at least 1")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    w = _uniforms(seed, 0, count)
    cols = []
    for i, (cop, marg) in enumerate(model.components, start=1):
        u = cop.h_inverse(_uniforms(seed, i, count), w)
        cols.append(marg.quantile(u))
    cols.append(model.z_marginal.quantile(w))
    return SampleBatch(seed, np.column_stack(cols))


def empirical_cdf(batch: SampleBatch, column: int, x: float) -> float:
    """Fraction of rows whose ``column`` value is ``<= x``.

    Columns are numbered from 1 in batch order: ``1..n`` are ``X_1..X_n``
    and ``n + 1`` is ``Z``.
    """
    if not 1 <= column <= batch.n + 1:
        raise IndexError(f"column {column} outside 1..{batch.n + 1}")
    return float(np.count_nonzero(batch.columns[:, column - 1] <= x)) / batch.count


def order_statistics(batch: SampleBatch) -> np.ndarray:
    """Row-wise sorted X columns: column ``r - 1`` holds ``X_{r:n}``."""
    return np.sort(batch.x, axis=1)


def empirical_order_stat_cdf(batch: SampleBatch, r: int, x: float) -> float:
    if not 1 <= r <= batch.n:
        raise ValueError(f"rank {r} outside 1..{batch.n}")
    return float(np.count_nonzero(order_statistics(batch)[:, r - 1] <= x)) / batch.count


@dataclass
class KsResult:
    statistic: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.statistic <= self.threshold


def ks_check(
    values: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray], grid: np.ndarray | None = None
) -> KsResult:
    """Sup distance between the empirical cdf of ``values`` and ``cdf`` on a grid.

    The default grid is the 201 empirical quantiles at levels 0, 0.005, ..., 1.
    Passes when the distance is at most ``1.63 / sqrt(count)``.
    """
    values = np.sort(np.asarray(values, dtype=float))
    count = values.size
    if count < 1000:
        raise ValueError("ks_check needs at least 1000 values")
    if grid is None:
        grid = np.quantile(values, np.linspace(0.0, 1.0, KS_GRID_POINTS))
    grid = np.asarray(grid, dtype=float)
    ecdf = np.searchsorted(values, grid, side="right") / count
    stat = float(np.max(np.abs(ecdf - np.asarray(cdf(grid), dtype=float))))
    return KsResult(stat, KS_COEFFICIENT / math.sqrt(count))


def check_margins(model: CiModel, count: int, seed: int) -> dict[str, KsResult]:
    """KS-check every X column and Z against its marginal.

    A failing column is re-drawn once with ``seed + 1`` before it counts as
    a failure (each check has a 1% false-alarm rate by design).
    """

    def run(s: int) -> dict[str, KsResult]:
        batch = sample(model, count, s)
        out = {
            f"x{i}": ks_check(batch.columns[:, i - 1], marg.cdf)
            for i, marg in enumerate(model.marginals, start=1)
        }
        out["z"] = ks_check(batch.z, model.z_marginal.cdf)
        return out

    results = run(seed)
    if not all(r.passed for r in results.values()):
        retry = run(seed + 1)
        results = {k: (v if v.passed else retry[k]) for k, v in results.items()}
    return results


def binomial_sigma(p: float, count: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / count)


def write_csv(batch: SampleBatch, path, digits: int = 12) -> None:
    header = [f"x{i}" for i in range(1, batch.n + 1)] + ["z"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in batch.columns:
            writer.writerow([format(v, f".{digits}g") for v in row])


def read_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def slice_covariance(model: CiModel, i: int, j: int, lo: float, hi: float) -> float:
    """Covariance of ``(U_i, U_j)`` given ``lo < W <= hi``.

    Within the slice the pair is a mixture over ``w`` of independent
    variables with means ``m(w) = 1 - int_0^1 h(u, w) du``, so the
    covariance is ``Cov_w(m_i(W), m_j(W))`` under ``W ~ U(lo, hi)``.
    """
    u, wu = model.quad.nodes, model.quad.weights
    w, ww = model.quad.mapped(lo, hi)
    ww = ww / (hi - lo)

    def mean(k: int) -> np.ndarray:
        cop = model.copulas[k - 1]
        return 1.0 - wu @ cop.h(u[:, None], w[None, :])

    mi, mj = mean(i), mean(j)
    return float(ww @ (mi * mj) - (ww @ mi) * (ww @ mj))


def slice_covariances(
    batch: SampleBatch, model: CiModel, i: int, j: int, edges: Sequence[float]
) -> list[tuple[float, float, float]]:
    """Per slice of W: (empirical covariance of U_i, U_j; theoretical value; standard error)."""
    w = model.z_marginal.cdf(batch.z)
    ui = model.marginals[i - 1].cdf(batch.columns[:, i - 1])
    uj = model.marginals[j - 1].cdf(batch.columns[:, j - 1])
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (w > lo) & (w <= hi)
        a, b = ui[sel], uj[sel]
        prod = (a - a.mean()) * (b - b.mean())
        se = float(prod.std(ddof=1) / math.sqrt(sel.sum()))
        out.append((float(prod.mean()), slice_covariance(model, i, j, lo, hi), se))
    return out
