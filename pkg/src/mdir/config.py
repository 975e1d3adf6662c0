"""Declarative simulation configs (JSON).

type1::

    {"study": "type1", "seed": 1, "alpha": 0.05, "n_sim": 2000, "n_perm": 500,
     "designs": [[50, 50], [30, 70]], "censoring": ["none", "equal", "unequal"],
     "menus": {"two_directions": {"rg": [[0, 0]], "cross": true}},
     "calibrations": ["permutation", "chi2"]}

power::

    {"study": "power", "alternative": "crossing", "designs": [[50, 50]],
     "censoring": ["equal"], "n_points": 10, "theta_max": 0.9,
     "n_sim": 1000, "n_perm": 500, "seed": 1, "alpha": 0.05}

``alternative`` is one of proportional, crossing, central, early, or
``{"name": ..., "weight": <weight>, "theta_max": ..., "mismatched": <weight>}``.
An optional ``methods`` mapping of name to menu replaces the default four
methods.

asympt::

    {"study": "asympt", "eta": 0.5, "censoring": "none", "alpha": 0.05,
     "cases": [{"direction": "0,0", "scale": 1.0, "menu": {"rg": [[0, 0]]}}],
     "simulate": {"n": 1000, "n_sim": 4000, "seed": 1}}

Censoring entries accept "none", "equal", "unequal", {"equal": p} and
{"unequal": [p1, p2]}. Weights accept "cross", "r,g", [r, g] and
{"coeffs": [...]}; menus accept {"rg": [[r, g], ...], "cross": bool} or a
list of weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .simstudy import (
    ALTERNATIVES,
    AsymptoticPowerSpec,
    Censoring,
    SimScenario,
    four_direction_menu,
    power_methods,
    theta_grid,
    two_direction_menu,
)
from .weights import WeightSet, parse_menu, parse_weight

FULL_SCALE = {"type1": {"n_sim": 10_000, "n_perm": 1000}, "power": {"n_sim": 1000, "n_perm": 1000}}
DESK_SCALE = {"type1": {"n_sim": 2000, "n_perm": 500}, "power": {"n_sim": 500, "n_perm": 500}}
DESIGNS = [[50, 50], [30, 70], [100, 100], [150, 50]]

_KNOWN = {
    "type1": {"study", "seed", "alpha", "n_sim", "n_perm", "designs", "censoring", "menus", "calibrations"},
    "power": {"study", "seed", "alpha", "n_sim", "n_perm", "designs", "censoring", "alternative",
              "n_points", "theta_max", "methods", "calibrations"},
    "asympt": {"study", "eta", "censoring", "alpha", "cases", "simulate"},
}


@dataclass
class AsymptCase:
    case_id: str
    spec: AsymptoticPowerSpec


@dataclass
class StudyConfig:
    study: str
    scenarios: list[SimScenario] = field(default_factory=list)
    asympt: list[AsymptCase] = field(default_factory=list)
    simulate: dict | None = None


def load_config(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None


def _menus(spec, default) -> dict[str, WeightSet]:
    if spec is None:
        return default
    if not isinstance(spec, dict) or not spec:
        raise ConfigError("menus/methods must be a nonempty mapping of name to weight menu")
    try:
        return {name: parse_menu(m) for name, m in spec.items()}
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad weight menu: {exc}") from None


def _as_list(v):
    return v if isinstance(v, list) else [v]


def build_study(cfg: dict, study: str | None = None, full_scale: bool = False) -> StudyConfig:
    study = study or cfg.get("study")
    if study not in _KNOWN:
        raise ConfigError(f"unknown study {study!r}; choose type1, power or asympt")
    if cfg.get("study", study) != study:
        raise ConfigError(f"config is for study {cfg.get('study')!r}, not {study!r}")
    unknown = set(cfg) - _KNOWN[study]
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if study == "asympt":
        return _build_asympt(cfg)

    scale = (FULL_SCALE if full_scale else DESK_SCALE)[study]
    n_sim = scale["n_sim"] if full_scale else int(cfg.get("n_sim", scale["n_sim"]))
    n_perm = scale["n_perm"] if full_scale else int(cfg.get("n_perm", scale["n_perm"]))
    common = dict(alpha=float(cfg.get("alpha", 0.05)), n_sim=n_sim, n_perm=n_perm, seed=int(cfg.get("seed", 0)))
    designs = cfg.get("designs", DESIGNS if study == "type1" else [[50, 50]])
    censoring = [Censoring.parse(c) for c in _as_list(cfg.get("censoring", ["none", "equal", "unequal"] if study == "type1" else ["equal"]))]

    out = StudyConfig(study)
    if study == "type1":
        menus = _menus(cfg.get("menus"), {"four_directions": four_direction_menu(), "two_directions": two_direction_menu()})
        cals = tuple(cfg.get("calibrations", ["permutation", "chi2"]))
        for n1, n2 in designs:
            for cens in censoring:
                out.scenarios.append(
                    SimScenario(int(n1), int(n2), menus, cens, calibrations=cals,
                                scenario_id=f"({n1},{n2})/{cens.label}", **common)
                )
        return out

    alt = cfg.get("alternative")
    if isinstance(alt, str):
        if alt not in ALTERNATIVES:
            raise ConfigError(f"unknown alternative {alt!r}; choose from {sorted(ALTERNATIVES)}")
        make_alt, top, make_mis = ALTERNATIVES[alt]
        name, w_alt, w_mis = alt, make_alt(), make_mis()
    elif isinstance(alt, dict) and "weight" in alt:
        try:
            w_alt = parse_weight(alt["weight"])
            w_mis = parse_weight(alt.get("mismatched", "cross"))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad alternative weight: {exc}") from None
        name, top = alt.get("name", w_alt.tag), alt.get("theta_max")
    else:
        raise ConfigError("power study needs an 'alternative'")
    top = float(cfg.get("theta_max", top if top is not None else 0.0))
    if top <= 0 and "theta_max" not in cfg:
        raise ConfigError("power study needs 'theta_max'")
    methods = _menus(cfg.get("methods"), power_methods(w_alt, w_mis))
    cals = tuple(cfg.get("calibrations", ["permutation"]))
    for n1, n2 in designs:
        for cens in censoring:
            for theta in theta_grid(top, int(cfg.get("n_points", 10))):
                out.scenarios.append(
                    SimScenario(int(n1), int(n2), methods, cens, theta, w_alt, calibrations=cals,
                                scenario_id=f"{name}/({n1},{n2})/{cens.label}", **common)
                )
    return out


def _build_asympt(cfg: dict) -> StudyConfig:
    rates = Censoring.parse(cfg.get("censoring", "none")).rates()
    out = StudyConfig("asympt", simulate=cfg.get("simulate"))
    cases = cfg.get("cases")
    if not cases:
        raise ConfigError("asympt study needs a nonempty 'cases' list")
    for k, case in enumerate(cases):
        try:
            direction = parse_weight(case["direction"])
            menu = parse_menu(case.get("menu", {"rg": [[0, 0]], "cross": True}))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"case {k}: {exc}") from None
        spec = AsymptoticPowerSpec(
            float(cfg.get("eta", 0.5)), direction, menu, rates,
            float(cfg.get("alpha", 0.05)), float(case.get("scale", 1.0)),
        )
        out.asympt.append(AsymptCase(case.get("id", f"case{k}"), spec))
    return out
