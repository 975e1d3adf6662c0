"""Polynomial hazard weights on [0, 1] and exact linear-independence checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import DegreeTooLarge, OutOfDomain, TooManyWeights

MAX_DEGREE = 20
MAX_DIRECTIONS = 10


def _trim(coeffs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    c = list(coeffs)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class WeightFn:
    """A polynomial weight ``w(u) = sum_k coeffs[k] * u**k`` on [0, 1].

    ``factors`` holds ``(r, g)`` for weights of the form ``u**r * (1 - u)**g``;
    evaluation then uses the factored form, which stays accurate near the
    endpoints where the expanded form cancels badly.
    """

    coeffs: tuple[Fraction, ...]
    tag: str = "w"
    factors: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        c = _trim(Fraction(x) for x in self.coeffs)
        if all(x == 0 for x in c):
            raise ValueError("weight polynomial must have a nonzero coefficient")
        if len(c) - 1 > MAX_DEGREE:
            raise DegreeTooLarge(f"degree {len(c) - 1} exceeds maximum {MAX_DEGREE}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_coeffs(cls, coeffs: Iterable, tag: str = "w") -> "WeightFn":
        return cls(tuple(Fraction(x) for x in coeffs), tag)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, u):
        """Vectorised evaluation; no domain check."""
        u = np.asarray(u, dtype=float)
        if self.factors is not None:
            r, g = self.factors
            return u**r * (1.0 - u) ** g
        out = np.full_like(u, float(self.coeffs[-1]))
        for c in reversed(self.coeffs[:-1]):
            out = out * u + float(c)
        return out

    def eval(self, u: float) -> float:
        if not 0.0 <= u <= 1.0:
            raise OutOfDomain(f"u={u!r} outside [0, 1]")
        if self.factors is not None:
            r, g = self.factors
            return u**r * (1.0 - u) ** g
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * u + float(c)
        return acc

    def scaled(self, factor, tag: str | None = None) -> "WeightFn":
        return WeightFn(tuple(c * Fraction(factor) for c in self.coeffs), tag or f"{factor}*{self.tag}")

    def __add__(self, other: "WeightFn") -> "WeightFn":
        k = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (k - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (k - len(other.coeffs))
        return WeightFn(tuple(x + y for x, y in zip(a, b)), f"{self.tag}+{other.tag}")

    def derivative_coeffs(self) -> tuple[Fraction, ...]:
        return tuple(k * c for k, c in enumerate(self.coeffs) if k > 0) or (Fraction(0),)

    def extrema(self) -> tuple[float, float]:
        """(min, max) of the polynomial over [0, 1].

        Candidates are the endpoints and the real roots of the derivative
        inside the interval.
        """
        cand = [0.0, 1.0]
        d = self.derivative_coeffs()
        if any(c != 0 for c in d) and len(d) > 1:
            roots = np.roots([float(c) for c in reversed(d)])
            for z in roots:
                if abs(z.imag) <= 1e-9 * max(1.0, abs(z.real)) and -1e-12 <= z.real <= 1 + 1e-12:
                    cand.append(min(1.0, max(0.0, float(z.real))))
        vals = [self.eval(u) for u in cand]
        return min(vals), max(vals)


def make_rg(r: int, g: int, max_degree: int = MAX_DEGREE) -> WeightFn:
    """``u**r * (1 - u)**g`` with exact integer coefficients."""
    if r < 0 or g < 0:
        raise ValueError("r and g must be nonnegative")
    if r + g > max_degree:
        raise DegreeTooLarge(f"r+g={r + g} exceeds maximum degree {max_degree}")
    coeffs = [Fraction(0)] * (r + g + 1)
    for k in range(g + 1):
        coeffs[r + k] = Fraction((-1) ** k * comb(g, k))
    return WeightFn(tuple(coeffs), f"w({r},{g})", factors=(r, g))


def make_crossing() -> WeightFn:
    return WeightFn((Fraction(1), Fraction(-2)), "cross")


def inner_product(a: WeightFn, b: WeightFn) -> Fraction:
    """Exact L2(0, 1) inner product of two polynomial weights."""
    return sum(
        (ca * cb / (i + j + 1) for i, ca in enumerate(a.coeffs) for j, cb in enumerate(b.coeffs)),
        Fraction(0),
    )


def _reduce(row: list[Fraction], basis: list[tuple[int, list[Fraction]]]) -> list[Fraction]:
    row = list(row)
    for pivot, brow in basis:
        if row[pivot] != 0:
            f = row[pivot] / brow[pivot]
            row = [x - f * y for x, y in zip(row, brow)]
    return row


def _coefficient_rows(weights: Sequence[WeightFn]) -> list[list[Fraction]]:
    width = max(w.degree for w in weights) + 1
    return [list(w.coeffs) + [Fraction(0)] * (width - len(w.coeffs)) for w in weights]


def _greedy_basis(weights: Sequence[WeightFn]) -> list[int]:
    kept: list[int] = []
    basis: list[tuple[int, list[Fraction]]] = []
    for idx, row in enumerate(_coefficient_rows(weights)):
        res = _reduce(row, basis)
        pivot = next((k for k, x in enumerate(res) if x != 0), None)
        if pivot is None:
            continue
        basis.append((pivot, res))
        kept.append(idx)
    return kept


@dataclass(frozen=True)
class WeightSet:
    weights: tuple[WeightFn, ...]
    verified_independent: bool = False

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))
        if not self.weights:
            raise ValueError("weight set is empty")
        if len(self.weights) > MAX_DIRECTIONS:
            raise TooManyWeights(f"at most {MAX_DIRECTIONS} directions supported, got {len(self.weights)}")

    @classmethod
    def checked(cls, weights: Iterable[WeightFn]) -> "WeightSet":
        ws = tuple(weights)
        return cls(ws, check_independence(cls(ws)))

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)

    @property
    def tags(self) -> list[str]:
        return [w.tag for w in self.weights]

    def matrix(self, u: np.ndarray) -> np.ndarray:
        """Evaluate every weight at ``u``; shape ``(m, len(u))``."""
        return np.stack([w(u) for w in self.weights])


def check_independence(ws: WeightSet) -> bool:
    return len(_greedy_basis(ws.weights)) == len(ws.weights)


def select_independent_subset(ws: WeightSet) -> WeightSet:
    """Keep each weight that is not in the span of the ones kept before it."""
    kept = _greedy_basis(ws.weights)
    return WeightSet(tuple(ws.weights[i] for i in kept), True)


def make_menu(rg: Sequence[tuple[int, int]] = ((0, 0),), cross: bool = True) -> WeightSet:
    """Weight menu in the order: every ``w(r,g)`` as given, then crossing."""
    weights = [make_rg(r, g) for r, g in rg]
    if cross:
        weights.append(make_crossing())
    if not weights:
        raise ValueError("empty weight menu")
    return WeightSet.checked(weights)


def parse_weight(spec) -> WeightFn:
    """Parse one weight from a config value.

    Accepted forms: ``"cross"``, ``"r,g"``, ``[r, g]``, ``{"rg": [r, g]}``,
    ``{"cross": true}``, ``{"coeffs": [...], "tag": ...}``.
    """
    if isinstance(spec, str):
        if spec.strip().lower() == "cross":
            return make_crossing()
        r, g = (int(x) for x in spec.split(","))
        return make_rg(r, g)
    if isinstance(spec, (list, tuple)) and len(spec) == 2:
        return make_rg(int(spec[0]), int(spec[1]))
    if isinstance(spec, dict):
        if spec.get("cross"):
            return make_crossing()
        if "rg" in spec:
            r, g = spec["rg"]
            return make_rg(int(r), int(g))
        if "coeffs" in spec:
            return WeightFn.from_coeffs(spec["coeffs"], spec.get("tag", "w"))
    raise ValueError(f"cannot parse weight specification {spec!r}")


def parse_menu(spec) -> WeightSet:
    """Parse a weight menu: ``{"rg": [[r, g], ...], "cross": bool}`` or a list of weights."""
    if isinstance(spec, dict) and ("rg" in spec or "cross" in spec) and "coeffs" not in spec:
        rg = spec.get("rg", [])
        if rg and not isinstance(rg[0], (list, tuple)):
            rg = [rg]
        rg = [(int(r), int(g)) for r, g in rg]
        return make_menu(rg, bool(spec.get("cross", False)))
    if isinstance(spec, (list, tuple)):
        return WeightSet.checked(parse_weight(s) for s in spec)
    return WeightSet.checked([parse_weight(spec)])
