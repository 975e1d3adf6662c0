"""Simulation studies: type-I error, power curves and asymptotic power.

Survival times follow the exponential baseline with hazard 1; a group under
the alternative has hazard ``1 + theta * w(1 - exp(-t))``. Censoring times
are independent exponentials.

Every simulated data set ``i`` draws from its own Philox stream keyed by
``(seed, i)``, so reports are reproducible and independent of the number
of worker threads.
"""

from __future__ import annotations

import math
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import integrate

from .errors import ConfigError, NegativeHazard, QuadratureFailure
from .logrank import BatchKernel
from .numerics import chi2_quantile, noncentral_chi2_cdf, pseudo_inverse
from .permute import at_least, block_rng, permuted_labels, worker_count
from .survcore import PooledRisk, TwoSampleData
from .weights import WeightFn, WeightSet, make_crossing, make_menu, make_rg

CALIBRATIONS = ("permutation", "chi2")
UNEQUAL_DEFAULT = (0.10, 0.20)
EQUAL_DEFAULT = 0.15


def censoring_rate_for_target(p: float) -> float:
    """Exponential censoring rate giving censoring proportion ``p`` against Exp(1)."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"censoring proportion must lie in [0, 1), got {p!r}")
    return p / (1.0 - p)


@dataclass(frozen=True)
class Censoring:
    kind: str = "none"
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "equal", "unequal"):
            raise ConfigError(f"unknown censoring design {self.kind!r}")
        for p in (self.p1, self.p2):
            if not 0.0 <= p < 1.0:
                raise ConfigError(f"censoring proportion {p!r} outside [0, 1)")

    @classmethod
    def parse(cls, spec) -> "Censoring":
        if isinstance(spec, Censoring):
            return spec
        if spec in (None, "none"):
            return cls()
        if spec == "equal":
            return cls("equal", EQUAL_DEFAULT, EQUAL_DEFAULT)
        if spec == "unequal":
            return cls("unequal", *UNEQUAL_DEFAULT)
        if isinstance(spec, Mapping):
            if "equal" in spec:
                p = float(spec["equal"])
                return cls("equal", p, p)
            if "unequal" in spec:
                p1, p2 = spec["unequal"]
                return cls("unequal", float(p1), float(p2))
        raise ConfigError(f"cannot parse censoring design {spec!r}")

    @property
    def label(self) -> str:
        if self.kind == "none":
            return "none"
        if self.kind == "equal":
            return f"equal({self.p1:g})"
        return f"unequal({self.p1:g},{self.p2:g})"

    def rates(self) -> tuple[float, float]:
        return censoring_rate_for_target(self.p1), censoring_rate_for_target(self.p2)


# sampling -----------------------------------------------------------------


def hazard_bound(theta: float, w: WeightFn) -> float:
    """Supremum of ``1 + theta * w`` on [0, 1]; validates the hazard.

    The hazard must be nonnegative everywhere and positive at ``u = 1``;
    otherwise the survival law is invalid or defective.
    """
    if theta == 0:
        return 1.0
    lo, hi = w.extrema()
    hmin = 1.0 + min(theta * lo, theta * hi)
    hmax = 1.0 + max(theta * lo, theta * hi)
    if hmin < -1e-12:
        raise NegativeHazard(f"1 + {theta} * {w.tag} takes the negative value {hmin:.4g} on [0, 1]")
    if 1.0 + theta * w.eval(1.0) <= 0.0:
        raise NegativeHazard(f"1 + {theta} * {w.tag} vanishes at u = 1; the survival law is defective")
    return hmax * (1.0 + 1e-12)


def sample_alternative(theta: float, w: WeightFn, rng: np.random.Generator, size: int | None = None):
    """Draws with hazard ``1 + theta * w(1 - exp(-t))`` by hazard thinning.

    Candidate epochs come from a homogeneous process with rate equal to the
    hazard's supremum; each is accepted with probability hazard / bound.
    """
    bound = hazard_bound(theta, w)
    scalar = size is None
    k = 1 if scalar else int(size)
    if theta == 0:
        out = rng.exponential(1.0, k)
        return float(out[0]) if scalar else out
    t = np.zeros(k)
    pending = np.arange(k)
    while pending.size:
        t[pending] += rng.exponential(1.0 / bound, pending.size)
        u = -np.expm1(-t[pending])
        accept = rng.random(pending.size) * bound <= 1.0 + theta * w(u)
        pending = pending[~accept]
    return float(t[0]) if scalar else t


def simulate_dataset(
    rng: np.random.Generator,
    n1: int,
    n2: int,
    rates: tuple[float, float],
    thetas: tuple[float, float] = (0.0, 0.0),
    w: WeightFn | None = None,
) -> TwoSampleData:
    """One data set; group ``j`` has hazard ``1 + thetas[j] * w``."""
    w = w or make_rg(0, 0)
    times, status = [], []
    for n_j, rate, theta in ((n1, rates[0], thetas[0]), (n2, rates[1], thetas[1])):
        t = sample_alternative(theta, w, rng, n_j)
        c = rng.exponential(1.0 / rate, n_j) if rate > 0 else np.full(n_j, np.inf)
        times.append(np.minimum(t, c))
        status.append((t <= c).astype(np.int8))
    group = np.concatenate([np.ones(n1, dtype=np.int8), np.full(n2, 2, dtype=np.int8)])
    return TwoSampleData(np.concatenate(times), np.concatenate(status), group, ("1", "2"))


# scenarios ----------------------------------------------------------------


@dataclass(frozen=True)
class SimScenario:
    """One simulation cell.

    ``methods`` maps a method name to its weight menu; every method is
    evaluated on the same simulated data sets and the same permutations.
    Group 1 keeps the baseline hazard, group 2 gets ``1 + theta * alt_weight``.
    """

    n1: int
    n2: int
    methods: Mapping[str, WeightSet]
    censoring: Censoring = Censoring()
    theta: float = 0.0
    alt_weight: WeightFn | None = None
    alpha: float = 0.05
    n_sim: int = 2000
    n_perm: int = 500
    seed: int = 0
    calibrations: tuple[str, ...] = ("permutation", "chi2")
    scenario_id: str = "scenario"
    thetas: tuple[float, float] | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.n1 < 1 or self.n2 < 1:
            raise ConfigError("group sizes must be positive")
        if self.n_sim < 1 or self.n_perm < 1:
            raise ConfigError("n_sim and n_perm must be positive")
        if not self.methods:
            raise ConfigError("at least one method is required")
        bad = set(self.calibrations) - set(CALIBRATIONS)
        if bad or not self.calibrations:
            raise ConfigError(f"unknown calibrations {sorted(bad)}; choose from {CALIBRATIONS}")
        if self.theta != 0:
            if self.alt_weight is None:
                raise ConfigError("a nonzero theta needs an alternative weight")
            hazard_bound(self.theta, self.alt_weight)

    @property
    def group_thetas(self) -> tuple[float, float]:
        return self.thetas if self.thetas is not None else (0.0, self.theta)

    def describe(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "n1": self.n1,
            "n2": self.n2,
            "censoring": self.censoring.label,
            "theta": self.theta,
            "alternative": self.alt_weight.tag if self.alt_weight else None,
            "methods": {k: v.tags for k, v in self.methods.items()},
            "alpha": self.alpha,
            "n_sim": self.n_sim,
            "n_perm": self.n_perm,
            "seed": self.seed,
            "calibrations": list(self.calibrations),
        }


def binomial_se(rate: float, n: int) -> float:
    return math.sqrt(max(rate * (1.0 - rate), 0.0) / n)


@dataclass
class SimReport:
    scenario: SimScenario
    rates: dict[str, dict[str, float]]
    per_direction: dict[str, dict[str, float]]
    runtime_s: float = field(default=0.0, compare=False)

    @property
    def n_sim(self) -> int:
        return self.scenario.n_sim

    def rate(self, method: str, calibration: str = "permutation") -> float:
        return self.rates[method][calibration]

    def se(self, method: str, calibration: str = "permutation") -> float:
        return binomial_se(self.rate(method, calibration), self.n_sim)

    def rejection_rate(self) -> float:
        """Rate of the first method under the first calibration."""
        m = next(iter(self.rates))
        return self.rates[m][self.scenario.calibrations[0]]

    def csv_rows(self) -> list[dict]:
        rows = []
        for method, by_cal in self.rates.items():
            for cal, r in by_cal.items():
                rows.append(
                    {
                        "scenario_id": self.scenario.scenario_id,
                        "theta": self.scenario.theta,
                        "method": f"{method}/{cal}",
                        "rejection_rate": r,
                        "se": binomial_se(r, self.n_sim),
                        "n_sim": self.n_sim,
                    }
                )
        return rows


CSV_COLUMNS = ("scenario_id", "theta", "method", "rejection_rate", "se", "n_sim")


class _Evaluator:
    """Shared weights across methods, column indices per method."""

    def __init__(self, methods: Mapping[str, WeightSet]):
        self.weights: list[WeightFn] = []
        self.index: dict[str, list[int]] = {}
        self.df: dict[str, int] = {}
        for name, ws in methods.items():
            cols = []
            for w in ws:
                pos = next((i for i, v in enumerate(self.weights) if v == w), None)
                if pos is None:
                    self.weights.append(w)
                    pos = len(self.weights) - 1
                cols.append(pos)
            self.index[name] = cols
            self.df[name] = len(ws) if ws.verified_independent else 0
        self.tags = [w.tag for w in self.weights]


def _one_replicate(sc: SimScenario, ev: _Evaluator, crit: dict, i: int):
    rng = block_rng(sc.seed, i)
    data = simulate_dataset(rng, sc.n1, sc.n2, sc.censoring.rates(), sc.group_thetas, sc.alt_weight)
    n_methods = len(ev.index)
    n_dir = len(ev.weights)
    out_m = np.zeros((n_methods, len(CALIBRATIONS)), dtype=bool)
    out_d = np.zeros((n_dir, len(CALIBRATIONS)), dtype=bool)
    pooled = PooledRisk(data)
    if pooled.n_event_rows == 0:
        return out_m, out_d
    kernel = BatchKernel(pooled, ev.weights)
    base = pooled.sorted_labels(data.group)
    t0, s0 = kernel.moments(base)
    obs = {}
    for k, (name, cols) in enumerate(ev.index.items()):
        s, rank = kernel.quadratic(t0, s0, cols)
        df = ev.df[name] or max(int(rank[0]), 1)
        obs[name] = (float(s[0]), df)
        out_m[k, 1] = s[0] > crit[df]
    stud0 = kernel.studentized(t0, s0)[0]
    out_d[:, 1] = stud0 > crit[1]
    if "permutation" in sc.calibrations:
        labels = permuted_labels(rng, base, sc.n_perm)
        t, sigma = kernel.moments(labels)
        for k, (name, cols) in enumerate(ev.index.items()):
            s, _ = kernel.quadratic(t, sigma, cols)
            p = (1 + at_least(s, obs[name][0]).sum()) / (sc.n_perm + 1)
            out_m[k, 0] = p <= sc.alpha
        stud = kernel.studentized(t, sigma)
        for j in range(n_dir):
            p = (1 + at_least(stud[:, j], stud0[j]).sum()) / (sc.n_perm + 1)
            out_d[j, 0] = p <= sc.alpha
    return out_m, out_d


def run_scenario(sc: SimScenario, workers: int | None = None) -> SimReport:
    """Simulate ``n_sim`` data sets and report rejection rates per method and calibration."""
    start = _time.perf_counter()
    ev = _Evaluator(sc.methods)
    crit = {df: chi2_quantile(1.0 - sc.alpha, df) for df in range(1, len(ev.weights) + 1)}
    rej_m = np.zeros((sc.n_sim, len(ev.index), len(CALIBRATIONS)), dtype=bool)
    rej_d = np.zeros((sc.n_sim, len(ev.weights), len(CALIBRATIONS)), dtype=bool)

    def run(i: int) -> None:
        rej_m[i], rej_d[i] = _one_replicate(sc, ev, crit, i)

    nw = worker_count(workers)
    if nw == 1:
        for i in range(sc.n_sim):
            run(i)
    else:
        with ThreadPoolExecutor(nw) as pool:
            list(pool.map(run, range(sc.n_sim)))

    cal_idx = {c: CALIBRATIONS.index(c) for c in sc.calibrations}
    rates = {
        name: {c: float(rej_m[:, k, j].mean()) for c, j in cal_idx.items()}
        for k, name in enumerate(ev.index)
    }
    per_dir = {
        tag: {c: float(rej_d[:, k, j].mean()) for c, j in cal_idx.items()} for k, tag in enumerate(ev.tags)
    }
    return SimReport(sc, rates, per_dir, _time.perf_counter() - start)


def null_statistics(
    n1: int, n2: int, censoring, menu: WeightSet, n_sim: int, seed: int = 0, workers: int | None = None
) -> np.ndarray:
    """``S_n`` for ``n_sim`` data sets drawn under the null (baseline hazard in both groups).

    Data sets without events give ``nan``.
    """
    rates = Censoring.parse(censoring).rates()
    idx = range(len(menu))
    out = np.full(n_sim, np.nan)

    def run(i: int) -> None:
        data = simulate_dataset(block_rng(seed, i), n1, n2, rates)
        pooled = PooledRisk(data)
        if pooled.n_event_rows:
            kernel = BatchKernel(pooled, menu.weights)
            t, sigma = kernel.moments(pooled.sorted_labels(data.group))
            out[i] = kernel.quadratic(t, sigma, idx)[0][0]

    nw = worker_count(workers)
    if nw == 1:
        for i in range(n_sim):
            run(i)
    else:
        with ThreadPoolExecutor(nw) as pool:
            list(pool.map(run, range(n_sim)))
    return out


def two_direction_menu() -> WeightSet:
    return make_menu([(0, 0)], cross=True)


def four_direction_menu() -> WeightSet:
    return WeightSet.checked([make_rg(0, 0), make_crossing(), make_rg(1, 1), make_rg(1, 3)])


def run_type1_study(scenario: SimScenario, workers: int | None = None) -> SimReport:
    if scenario.theta != 0 or (scenario.thetas and any(scenario.thetas)):
        raise ConfigError("a type-I error study needs theta = 0")
    return run_scenario(scenario, workers)


def null_design_scenarios(
    n_sim: int = 2000,
    n_perm: int = 500,
    seed: int = 0,
    menus: Mapping[str, WeightSet] | None = None,
    alpha: float = 0.05,
) -> list[SimScenario]:
    """The twelve null designs: four sample-size pairs times three censoring designs."""
    menus = menus or {"four_directions": four_direction_menu(), "two_directions": two_direction_menu()}
    out = []
    for n1, n2 in ((50, 50), (30, 70), (100, 100), (150, 50)):
        for cens in ("none", "equal", "unequal"):
            out.append(
                SimScenario(
                    n1, n2, dict(menus), Censoring.parse(cens), alpha=alpha, n_sim=n_sim,
                    n_perm=n_perm, seed=seed, scenario_id=f"({n1},{n2})/{cens}",
                )
            )
    return out


# power ----------------------------------------------------------------------

ALTERNATIVES = {
    # name: (alternative weight, grid top, mismatched single direction)
    "proportional": (lambda: make_rg(0, 0), 0.9, make_crossing),
    "crossing": (make_crossing, 0.9, lambda: make_rg(0, 0)),
    "central": (lambda: make_rg(1, 1), 4.5, make_crossing),
    "early": (lambda: make_rg(0, 5), 4.5, make_crossing),
}


def theta_grid(theta_max: float, n_points: int = 10) -> list[float]:
    return [float(x) for x in np.linspace(0.0, theta_max, n_points)]


def power_methods(alt: WeightFn, mismatched: WeightFn) -> dict[str, WeightSet]:
    return {
        "four_directions": four_direction_menu(),
        "two_directions": two_direction_menu(),
        "optimal": WeightSet((alt,), True),
        "mismatched": WeightSet((mismatched,), True),
    }


def power_scenarios(
    alternative: str,
    n1: int = 50,
    n2: int = 50,
    censoring="equal",
    n_points: int = 10,
    theta_max: float | None = None,
    n_sim: int = 1000,
    n_perm: int = 500,
    seed: int = 0,
    alpha: float = 0.05,
    methods: Mapping[str, WeightSet] | None = None,
) -> list[SimScenario]:
    """Scenarios along a theta grid for one of the named alternatives.

    All grid points share the seed, so curves use common random numbers.
    """
    if alternative not in ALTERNATIVES:
        raise ConfigError(f"unknown alternative {alternative!r}; choose from {sorted(ALTERNATIVES)}")
    make_alt, top, make_mis = ALTERNATIVES[alternative]
    alt = make_alt()
    methods = methods or power_methods(alt, make_mis())
    cens = Censoring.parse(censoring)
    return [
        SimScenario(
            n1, n2, dict(methods), cens, theta, alt, alpha, n_sim, n_perm, seed, ("permutation",),
            f"{alternative}/({n1},{n2})/{cens.label}",
        )
        for theta in theta_grid(top if theta_max is None else theta_max, n_points)
    ]


def run_power_study(scenarios: Sequence[SimScenario], workers: int | None = None) -> list[SimReport]:
    return [run_scenario(sc, workers) for sc in scenarios]


# asymptotic power -------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticPowerSpec:
    """Limit design: baseline Exp(1), exponential censoring with ``rates``.

    ``direction`` times ``scale`` is the local hazard direction; ``menu`` the
    weights of the test.
    """

    eta: float
    direction: WeightFn
    menu: WeightSet
    rates: tuple[float, float] = (0.0, 0.0)
    alpha: float = 0.05
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise ConfigError(f"eta must lie in (0, 1), got {self.eta!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha!r}")

    def psi(self, u):
        """Censoring adjustment at ``u = F0(t)``; survival of censoring is ``(1-u)**rate``."""
        r1, r2 = self.rates
        s1 = (1.0 - u) ** r1
        s2 = (1.0 - u) ** r2
        return s1 * s2 / (self.eta * s1 + (1.0 - self.eta) * s2)


def _quad(f) -> float:
    val, err = integrate.quad(f, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    if not math.isfinite(val) or err > 1e-8:
        raise QuadratureFailure(f"quadrature error estimate {err:.3g} exceeds 1e-8")
    return val


def asymptotic_moments(spec: AsymptoticPowerSpec) -> tuple[np.ndarray, np.ndarray]:
    """Limit mean ``a`` and covariance ``Sigma`` of the weighted logrank vector."""
    ws = spec.menu.weights
    h = spec.direction
    a = np.array([spec.scale * _quad(lambda u, wi=wi: h.eval(u) * wi.eval(u) * spec.psi(u)) for wi in ws])
    m = len(ws)
    sigma = np.empty((m, m))
    for r in range(m):
        for s in range(r, m):
            sigma[r, s] = sigma[s, r] = _quad(lambda u, r=r, s=s: ws[r].eval(u) * ws[s].eval(u) * spec.psi(u))
    return a, sigma


def asymptotic_power(spec: AsymptoticPowerSpec) -> tuple[float, float]:
    """Noncentrality ``a' pinv(Sigma) a`` and the limiting rejection probability."""
    a, sigma = asymptotic_moments(spec)
    pinv, _ = pseudo_inverse(sigma)
    lam = max(0.0, float(a @ pinv @ a))
    m = len(spec.menu)
    crit = chi2_quantile(1.0 - spec.alpha, m)
    return lam, 1.0 - noncentral_chi2_cdf(crit, m, lam)


def local_coefficients(n1: int, n2: int) -> tuple[float, float]:
    """Regression coefficients scaling the local hazard perturbation per group."""
    n = n1 + n2
    root = math.sqrt(n1 * n2 / n)
    return root / n1, -root / n2


def local_scenario(
    spec: AsymptoticPowerSpec,
    n: int,
    n_sim: int,
    seed: int = 0,
    calibrations: tuple[str, ...] = ("chi2",),
    n_perm: int = 200,
) -> SimScenario:
    """Finite-``n`` scenario under the local alternative matching ``spec``."""
    n1 = int(round(spec.eta * n))
    n2 = n - n1
    c1, c2 = local_coefficients(n1, n2)
    w = spec.direction.scaled(spec.scale, f"{spec.scale:g}*{spec.direction.tag}")
    hazard_bound(c1, w)
    hazard_bound(c2, w)
    p1, p2 = (r / (1.0 + r) for r in spec.rates)
    cens = Censoring("none") if p1 == p2 == 0 else Censoring("unequal", p1, p2)
    return SimScenario(
        n1, n2, {"test": spec.menu}, cens, c2, w, spec.alpha, n_sim, n_perm, seed,
        calibrations, f"local/{spec.direction.tag}/{'+'.join(spec.menu.tags)}", thetas=(c1, c2),
    )
