"""Weighted logrank vector, its covariance estimate and the quadratic-form test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NoEvents
from .numerics import batch_quadratic_form, chi2_quantile, chi2_sf, pseudo_inverse, sym_matrix
from .survcore import PooledRisk, RiskTable
from .weights import WeightFn, WeightSet

# slack for S_n >= max_i T_i^2 / sigma_ii
INEQUALITY_SLACK = 1e-9


@dataclass(frozen=True)
class DirectionStat:
    tag: str
    t: float
    sigma: float
    studentized_sq: float


@dataclass(frozen=True)
class StatResult:
    t_vec: np.ndarray
    sigma_hat: np.ndarray
    s_n: float
    df_used: int
    rank: int
    per_direction: list[DirectionStat] = field(default_factory=list)


@dataclass(frozen=True)
class TestOutcome:
    stat: StatResult
    p_chi2: float

    def reject_at(self, alpha: float) -> bool:
        return self.p_chi2 <= alpha

    __test__ = False


def _require_events(rt: RiskTable) -> None:
    if not rt.has_events:
        raise NoEvents("no events observed; the logrank statistics are undefined")


def compute_t_vec(rt: RiskTable, ws: WeightSet) -> np.ndarray:
    """Observed-minus-expected form ``sum w(F(t-)) (d1 - y1 d / y)``, scaled."""
    _require_events(rt)
    w = ws.matrix(rt.km_left)
    x = rt.d1 - rt.y1 * rt.d / rt.y
    return math.sqrt(rt.n / (rt.n1 * rt.n2)) * (w @ x)


def compute_sigma(rt: RiskTable, ws: WeightSet) -> np.ndarray:
    _require_events(rt)
    w = ws.matrix(rt.km_left)
    v = rt.y1 * (rt.y - rt.y1) / rt.y * (rt.d / rt.y)
    return sym_matrix(rt.n / (rt.n1 * rt.n2) * ((w * v) @ w.T))


def _check_inequality(s: np.ndarray, stud: np.ndarray) -> None:
    bound = stud.max(axis=-1) if stud.size else np.zeros_like(s)
    assert np.all(s >= bound - INEQUALITY_SLACK * np.maximum(1.0, s)), "S_n below a studentized direction"


def compute_sn(rt: RiskTable, ws: WeightSet) -> StatResult:
    t = compute_t_vec(rt, ws)
    sigma = compute_sigma(rt, ws)
    pinv, rank = pseudo_inverse(sigma)
    s = max(0.0, float(t @ pinv @ t))
    diag = np.diag(sigma)
    stud = np.where(diag > 0, t**2 / np.where(diag > 0, diag, 1.0), 0.0)
    _check_inequality(np.array([s]), stud[None, :])
    per = [
        DirectionStat(w.tag, float(ti), float(math.sqrt(di)), float(si))
        for w, ti, di, si in zip(ws, t, diag, stud)
    ]
    df = len(ws) if ws.verified_independent else max(rank, 1)
    return StatResult(t, sigma, s, df, rank, per)


def chi2_test(stat: StatResult, alpha: float = 0.05) -> TestOutcome:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return TestOutcome(stat, chi2_sf(stat.s_n, stat.df_used))


def chi2_critical(alpha: float, df: int) -> float:
    return chi2_quantile(1.0 - alpha, df)


class BatchKernel:
    """Statistics for many group assignments of the same pooled sample.

    All weights of interest are evaluated once on the pooled Kaplan-Meier
    left limits; per assignment only ``(y1, d1)`` change.
    """

    def __init__(self, pooled: PooledRisk, weights: Sequence[WeightFn]):
        self.pooled = pooled
        self.weights = list(weights)
        self.w = np.stack([w(pooled.km_left) for w in self.weights])  # (M, R)
        self.scale = pooled.n / (pooled.n1 * pooled.n2)
        self.d_over_y = pooled.d / pooled.y

    def moments(self, is_g1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``T`` with shape ``(B, M)`` and ``Sigma`` with shape ``(B, M, M)``."""
        y1, d1 = self.pooled.group_counts(is_g1)
        x = d1 - y1 * self.d_over_y
        v = y1 * (self.pooled.y - y1) / self.pooled.y * self.d_over_y
        t = math.sqrt(self.scale) * np.einsum("br,ir->bi", x, self.w)
        sigma = self.scale * np.einsum("br,ir,jr->bij", v, self.w, self.w)
        return t, sigma

    @staticmethod
    def studentized(t: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        diag = np.diagonal(sigma, axis1=1, axis2=2)
        pos = diag > 0
        return np.where(pos, t**2 / np.where(pos, diag, 1.0), 0.0)

    @staticmethod
    def quadratic(t: np.ndarray, sigma: np.ndarray, idx: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        idx = list(idx)
        sub_t = t[:, idx]
        sub_s = sigma[:, idx][:, :, idx]
        s, rank = batch_quadratic_form(sub_s, sub_t)
        s = np.maximum(s, 0.0)
        _check_inequality(s, BatchKernel.studentized(sub_t, sub_s))
        return s, rank

    def statistic(self, is_g1: np.ndarray) -> np.ndarray:
        t, sigma = self.moments(is_g1)
        s, _ = self.quadratic(t, sigma, range(len(self.weights)))
        return s
