"""Two-sample right-censored data, risk tables and pooled estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import BadLabelCardinality, BadStatus, EmptyGroup, NegativeTime


class Subject(NamedTuple):
    time: float
    status: int
    group: str


def _parse_status(value) -> int:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, str):
        value = value.strip()
        if value in ("0", "1"):
            return int(value)
        try:
            value = float(value)
        except ValueError:
            raise BadStatus(f"status {value!r} is not 0/1") from None
    if value in (0, 1):
        return int(value)
    raise BadStatus(f"status {value!r} is not 0/1")


@dataclass(frozen=True)
class TwoSampleData:
    """Validated two-sample survival data.

    ``group`` holds indices 1 and 2; ``labels[0]`` is the original label of
    group 1.
    """

    time: np.ndarray
    status: np.ndarray
    group: np.ndarray
    labels: tuple[str, str]

    @property
    def n(self) -> int:
        return len(self.time)

    @property
    def n1(self) -> int:
        return int(np.count_nonzero(self.group == 1))

    @property
    def n2(self) -> int:
        return self.n - self.n1

    @property
    def subjects(self) -> list[Subject]:
        return [
            Subject(float(t), int(s), self.labels[g - 1])
            for t, s, g in zip(self.time, self.status, self.group)
        ]

    def relabeled(self, group: np.ndarray) -> "TwoSampleData":
        """Same times and statuses, new group indices."""
        return TwoSampleData(self.time, self.status, np.asarray(group, dtype=np.int8), self.labels)

    def swapped(self) -> "TwoSampleData":
        return TwoSampleData(self.time, self.status, (3 - self.group).astype(np.int8), self.labels[::-1])


def ingest(records: Iterable) -> TwoSampleData:
    """Validate raw ``(time, status, group)`` rows.

    The lexicographically smaller group label becomes group 1.
    """
    times, statuses, groups = [], [], []
    for i, rec in enumerate(records):
        t, s, g = rec
        t = float(t)
        if not math.isfinite(t):
            raise NegativeTime(f"record {i}: time {t!r} is not finite")
        if t < 0:
            raise NegativeTime(f"record {i}: negative time {t!r}")
        times.append(t)
        statuses.append(_parse_status(s))
        groups.append(str(g))
    labels = sorted(set(groups))
    if len(labels) < 2:
        raise EmptyGroup(f"need two groups, found {len(labels)} ({', '.join(labels) or 'none'})")
    if len(labels) > 2:
        raise BadLabelCardinality(f"expected exactly two group labels, found {len(labels)}: {labels}")
    index = {labels[0]: 1, labels[1]: 2}
    return TwoSampleData(
        np.asarray(times, dtype=float),
        np.asarray(statuses, dtype=np.int8),
        np.asarray([index[g] for g in groups], dtype=np.int8),
        (labels[0], labels[1]),
    )


@dataclass(frozen=True)
class RiskTable:
    """One row per distinct observed time, ascending.

    Columns: ``y`` pooled at risk, ``y1`` group-1 at risk, ``d`` pooled
    events, ``d1`` group-1 events, ``km_left`` pooled Kaplan-Meier
    distribution function just before ``t``.
    """

    t: np.ndarray
    y: np.ndarray
    y1: np.ndarray
    d: np.ndarray
    d1: np.ndarray
    km_left: np.ndarray
    n: int
    n1: int
    n2: int

    @property
    def y2(self) -> np.ndarray:
        return self.y - self.y1

    @property
    def d2(self) -> np.ndarray:
        return self.d - self.d1

    @property
    def has_events(self) -> bool:
        return bool(self.d.sum() > 0)

    def rows(self) -> list[tuple]:
        return list(
            zip(self.t.tolist(), self.y.tolist(), self.y1.tolist(), self.d.tolist(), self.d1.tolist(), self.km_left.tolist())
        )


def km_left_limits(y: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Pooled Kaplan-Meier F(t-) at each row from at-risk and event counts."""
    surv = np.cumprod(1.0 - d / y)
    left = np.empty_like(surv)
    left[0] = 1.0
    left[1:] = surv[:-1]
    return 1.0 - left


def build_risk_table(data: TwoSampleData) -> RiskTable:
    t, inv = np.unique(data.time, return_inverse=True)
    g1 = data.group == 1
    ev = data.status == 1
    k = len(t)
    count = np.bincount(inv, minlength=k)
    count1 = np.bincount(inv, weights=g1, minlength=k).astype(np.int64)
    d = np.bincount(inv, weights=ev, minlength=k).astype(np.int64)
    d1 = np.bincount(inv, weights=ev & g1, minlength=k).astype(np.int64)
    y = data.n - np.concatenate(([0], np.cumsum(count)[:-1]))
    y1 = data.n1 - np.concatenate(([0], np.cumsum(count1)[:-1]))
    return RiskTable(t, y, y1, d, d1, km_left_limits(y, d), data.n, data.n1, data.n2)


def nelson_aalen_increments(rt: RiskTable, group: str | int = "pooled") -> tuple[np.ndarray, np.ndarray]:
    """Jumps ``d_g / y_g`` of the Nelson-Aalen estimator, 0 where ``y_g == 0``."""
    if group in ("pooled", 0):
        num, den = rt.d, rt.y
    elif group in (1, "1"):
        num, den = rt.d1, rt.y1
    elif group in (2, "2"):
        num, den = rt.d2, rt.y2
    else:
        raise ValueError(f"unknown group {group!r}")
    inc = np.zeros(len(rt.t))
    pos = den > 0
    inc[pos] = num[pos] / den[pos]
    return rt.t, inc


class PooledRisk:
    """Label-free part of the risk table, shared by all permutations.

    Times, statuses, pooled at-risk and event counts and the pooled
    Kaplan-Meier curve do not depend on group membership. Only rows with
    at least one event enter the statistics, so only those are kept.
    Group labels must be supplied in ``order`` (sorted by time).
    """

    def __init__(self, data: TwoSampleData):
        self.n = data.n
        self.n1 = data.n1
        self.n2 = data.n2
        self.order = np.argsort(data.time, kind="stable")
        t_sorted = data.time[self.order]
        self.event_sorted = data.status[self.order] == 1
        t, start, count = np.unique(t_sorted, return_index=True, return_counts=True)
        y = self.n - start
        d = np.add.reduceat(self.event_sorted.astype(np.int64), start)
        km = km_left_limits(y, d)
        keep = d > 0
        self.t = t[keep]
        self.start = start[keep]
        self.stop = (start + count)[keep]
        self.y = y[keep].astype(float)
        self.d = d[keep].astype(float)
        self.km_left = km[keep]

    @property
    def n_event_rows(self) -> int:
        return len(self.t)

    def sorted_labels(self, group: np.ndarray) -> np.ndarray:
        """Group-1 indicator in time order for the original assignment."""
        return (np.asarray(group)[self.order] == 1)

    def group_counts(self, is_g1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(y1, d1)`` at event rows for a batch of label vectors.

        ``is_g1`` has shape ``(B, n)`` (or ``(n,)``), boolean, time ordered.
        """
        lab = np.atleast_2d(is_g1).astype(np.int32)
        b = lab.shape[0]
        cs = np.zeros((b, self.n + 1), dtype=np.int32)
        np.cumsum(lab, axis=1, out=cs[:, 1:])
        ce = np.zeros((b, self.n + 1), dtype=np.int32)
        np.cumsum(lab * self.event_sorted, axis=1, out=ce[:, 1:])
        y1 = self.n1 - cs[:, self.start]
        d1 = ce[:, self.stop] - ce[:, self.start]
        return y1, d1
