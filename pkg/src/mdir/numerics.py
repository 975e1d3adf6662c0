"""Small symmetric linear algebra and chi-square distribution functions."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import NoConvergence

EPS = np.finfo(float).eps


def sym_matrix(a, rtol: float = 1e-12) -> np.ndarray:
    """Validate near-symmetry and return ``(A + A.T) / 2``."""
    a = np.array(a, dtype=float, ndmin=2)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if np.max(np.abs(a - a.T), initial=0.0) > rtol * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (a + a.T)


class EigenDecomp(NamedTuple):
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns


def eigen_sym(a) -> EigenDecomp:
    a = sym_matrix(a)
    try:
        vals, vecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return EigenDecomp(vals[::-1].copy(), vecs[:, ::-1].copy())


def _cutoff(vals: np.ndarray, m: int) -> np.ndarray:
    top = np.max(vals, axis=-1, keepdims=True)
    return m * EPS * np.maximum(top, 0.0)


def pseudo_inverse(a) -> tuple[np.ndarray, int]:
    """Moore-Penrose inverse of a symmetric matrix and its numerical rank.

    Eigenvalues at or below ``m * eps * max(eigenvalue)`` count as zero.
    """
    vals, vecs = eigen_sym(a)
    m = len(vals)
    tol = _cutoff(vals, m)[0]
    keep = vals > tol
    if not keep.any():
        return np.zeros((m, m)), 0
    v = vecs[:, keep]
    pinv = (v / vals[keep]) @ v.T
    return 0.5 * (pinv + pinv.T), int(keep.sum())


def batch_quadratic_form(sigma: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``t_b' pinv(sigma_b) t_b`` and ``rank(sigma_b)`` over a leading batch axis."""
    m = sigma.shape[-1]
    if m == 1:
        s11 = sigma[:, 0, 0]
        pos = s11 > 0
        out = np.zeros(len(s11))
        out[pos] = t[pos, 0] ** 2 / s11[pos]
        return out, pos.astype(np.int64)
    try:
        vals, vecs = np.linalg.eigh(sigma)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    keep = vals > _cutoff(vals, m)
    proj = np.einsum("bij,bi->bj", vecs, t)
    inv = np.where(keep, 1.0 / np.where(keep, vals, 1.0), 0.0)
    return np.einsum("bj,bj->b", proj * proj, inv), keep.sum(axis=1)


# incomplete gamma -----------------------------------------------------------

_ITMAX = 10_000


def _gamma_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    else:
        raise NoConvergence(f"incomplete gamma series failed for a={a}, x={x}")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cfrac(a: float, x: float) -> float:
    # modified Lentz on the Legendre continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _ITMAX):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    else:
        raise NoConvergence(f"incomplete gamma continued fraction failed for a={a}, x={x}")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if x <= 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _gamma_series(a, x))
    return max(0.0, 1.0 - _gamma_cfrac(a, x))


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if x <= 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_series(a, x))
    return min(1.0, _gamma_cfrac(a, x))


def _check_df(df) -> None:
    if int(df) != df or df < 1:
        raise ValueError(f"degrees of freedom must be a positive integer, got {df!r}")


def chi2_cdf(x: float, df: int) -> float:
    _check_df(df)
    if x <= 0:
        return 0.0
    return gamma_p(df / 2.0, x / 2.0)


def chi2_sf(x: float, df: int) -> float:
    _check_df(df)
    if x <= 0:
        return 1.0
    return gamma_q(df / 2.0, x / 2.0)


def chi2_quantile(p: float, df: int) -> float:
    """Inverse of :func:`chi2_cdf` by bisection.

    The upper tail is bisected on the survival function so quantiles near
    ``p = 1`` keep full relative precision.
    """
    _check_df(df)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    if p <= 0.5:
        f = lambda x: chi2_cdf(x, df) - p  # noqa: E731, increasing
    else:
        q = 1.0 - p
        f = lambda x: q - chi2_sf(x, df)  # noqa: E731, increasing
    lo, hi = 0.0, max(1.0, float(df))
    while f(hi) < 0:
        lo, hi = hi, hi * 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def noncentral_chi2_cdf(x: float, df: int, lam: float, tail: float = 1e-12) -> float:
    """Poisson mixture of central chi-square CDFs, truncated at ``tail`` mass."""
    _check_df(df)
    if lam < 0:
        raise ValueError("noncentrality must be nonnegative")
    if x <= 0:
        return 0.0
    if lam == 0:
        return chi2_cdf(x, df)
    half = lam / 2.0
    total = 0.0
    mass = 0.0
    k = 0
    kmax = int(half + 40.0 * math.sqrt(half) + 200)
    while k <= kmax:
        wk = math.exp(-half + k * math.log(half) - math.lgamma(k + 1.0))
        total += wk * chi2_cdf(x, df + 2 * k)
        mass += wk
        if 1.0 - mass < tail and k > half:
            break
        k += 1
    return min(1.0, max(0.0, total))
