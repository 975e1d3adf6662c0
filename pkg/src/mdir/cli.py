"""Command-line front end.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field

from . import __version__
from .config import build_study, load_config
from .errors import ConfigError, MdirError
from .io import read_csv, rows_to_csv, write_atomic
from .logrank import chi2_test, compute_sn
from .numerics import chi2_sf
from .permute import PermConfig, permutation_test
from .simstudy import CSV_COLUMNS, local_scenario, run_scenario, asymptotic_power
from .survcore import build_risk_table
from .weights import WeightSet, make_menu, select_independent_subset

SCHEMA = "mdir.test/v1"


@dataclass
class DirectionReport:
    weight: str
    t: float
    sigma: float
    studentized_sq: float
    p_chi2: float


@dataclass
class CliReport:
    input: str
    n: int
    n1: int
    n2: int
    groups: list[str]
    weights: list[str]
    pruned: list[str]
    statistic: float
    df: int
    p_chi2: float
    p_perm: float
    n_perm: int
    seed: int
    alpha: float
    per_direction: list[DirectionReport] = field(default_factory=list)
    schema: str = SCHEMA

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CliReport":
        d = json.loads(text)
        d["per_direction"] = [DirectionReport(**p) for p in d["per_direction"]]
        return cls(**d)

    def to_text(self) -> str:
        lines = [
            f"multiple-direction logrank test: {self.input}",
            f"  groups: 1 = {self.groups[0]} (n={self.n1}), 2 = {self.groups[1]} (n={self.n2})",
            f"  weights: {', '.join(self.weights)}",
        ]
        if self.pruned:
            lines.append(f"  dropped (linearly dependent): {', '.join(self.pruned)}")
        lines += [
            f"  S_n = {self.statistic:.4f}, df = {self.df}",
            f"  p-value permutation ({self.n_perm} runs, seed {self.seed}): {fmt_p(self.p_perm)}",
            f"  p-value chi2-approximation: {fmt_p(self.p_chi2)}",
            "  single directions:",
        ]
        for d in self.per_direction:
            lines.append(
                f"    {d.weight:>8}  T = {d.t: .4f}  sd = {d.sigma:.4f}  T^2/var = {d.studentized_sq:.4f}  p_chi2 = {fmt_p(d.p_chi2)}"
            )
        return "\n".join(lines) + "\n"


def fmt_p(p: float) -> str:
    """Three significant digits."""
    return f"{p:.3g}" if p >= 1e-3 else f"{p:.2e}"


def resolve_menu(cross: bool, rg: list[tuple[int, int]] | None) -> tuple[WeightSet, list[str]]:
    """Weight menu from CLI flags; linearly dependent weights are dropped in order."""
    rg = [(0, 0)] if rg is None else rg
    if not rg and not cross:
        raise ConfigError("no weights selected; use --cross and/or --rg r,g")
    menu = make_menu(rg, cross)
    if menu.verified_independent:
        return menu, []
    kept = select_independent_subset(menu)
    dropped = list(menu.tags)
    for t in kept.tags:
        dropped.remove(t)
    return kept, dropped


def cmd_test(input_path: str, cross: bool = True, rg=None, n_perm: int = 10_000, seed: int = 0,
             alpha: float = 0.05) -> CliReport:
    data = read_csv(input_path)
    ws, dropped = resolve_menu(cross, rg)
    stat = compute_sn(build_risk_table(data), ws)
    outcome = chi2_test(stat, alpha)
    perm = permutation_test(data, ws, PermConfig(n_perm=n_perm, seed=seed, alpha=alpha))
    per = [
        DirectionReport(d.tag, d.t, d.sigma, d.studentized_sq, chi2_sf(d.studentized_sq, 1))
        for d in stat.per_direction
    ]
    return CliReport(
        str(input_path), data.n, data.n1, data.n2, list(data.labels), ws.tags, dropped,
        stat.s_n, stat.df_used, outcome.p_chi2, perm.p_perm, n_perm, seed, alpha, per,
    )


def cmd_single(input_path: str, weight: str, **kw) -> CliReport:
    """Single-direction test: ``weight`` is ``"cross"`` or ``"r,g"``."""
    if weight == "cross":
        return cmd_test(input_path, cross=True, rg=[], **kw)
    return cmd_test(input_path, cross=False, rg=[_rg_pair(weight)], **kw)


def _rg_pair(text: str) -> tuple[int, int]:
    try:
        r, g = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected r,g with nonnegative integers, got {text!r}") from None
    if r < 0 or g < 0:
        raise argparse.ArgumentTypeError(f"r and g must be nonnegative, got {text!r}")
    return r, g


def _alpha(text: str) -> float:
    a = float(text)
    if not 0.0 < a < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return a


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdir", description="Multiple-direction weighted logrank permutation tests.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test two samples from a time,status,group CSV")
    t.add_argument("--input", required=True, metavar="PATH")
    t.add_argument("--cross", action=argparse.BooleanOptionalAction, default=True,
                   help="include the crossing-hazards weight 1-2u (default: on)")
    t.add_argument("--rg", action="append", type=_rg_pair, metavar="R,G",
                   help="add weight u^r (1-u)^g; repeatable (default: 0,0)")
    t.add_argument("--no-rg", action="store_true", help="use no u^r (1-u)^g weights")
    t.add_argument("--nperm", type=_positive, default=10_000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--alpha", type=_alpha, default=0.05)
    t.add_argument("--format", choices=("text", "json"), default="text")
    t.add_argument("--out", metavar="PATH")

    s = sub.add_parser("simulate", help="run a simulation study from a JSON config")
    s.add_argument("study", choices=("type1", "power", "asympt"))
    s.add_argument("config", metavar="CONFIG")
    s.add_argument("--out", metavar="PATH", help="CSV output (default: stdout)")
    s.add_argument("--plot", metavar="PATH", help="SVG of the power curves (power study only)")
    s.add_argument("--paper-scale", action="store_true", help="use the full replication counts")
    s.add_argument("--seed", type=int, help="override the config seed")
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _run_test(args) -> None:
    if args.no_rg and args.rg:
        raise ConfigError("--no-rg conflicts with --rg")
    rg = [] if args.no_rg else args.rg
    report = cmd_test(args.input, args.cross, rg, args.nperm, args.seed, args.alpha)
    if report.pruned:
        print(f"warning: dropped linearly dependent weight(s): {', '.join(report.pruned)}", file=sys.stderr)
    _emit(report.to_json() if args.format == "json" else report.to_text(), args.out)


ASYMPT_COLUMNS = ("scenario_id", "direction", "scale", "menu", "df", "lambda", "power",
                  "sim_n", "sim_power", "sim_se", "n_sim")


def _run_simulate(args) -> None:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
        if isinstance(cfg.get("simulate"), dict):
            cfg["simulate"]["seed"] = args.seed
    study = build_study(cfg, args.study, full_scale=args.paper_scale)
    if args.study == "asympt":
        rows = []
        for case in study.asympt:
            lam, power = asymptotic_power(case.spec)
            row = {
                "scenario_id": case.case_id, "direction": case.spec.direction.tag, "scale": case.spec.scale,
                "menu": "+".join(case.spec.menu.tags), "df": len(case.spec.menu), "lambda": lam, "power": power,
            }
            if study.simulate:
                n = int(study.simulate.get("n", 1000))
                n_sim = int(study.simulate.get("n_sim", 4000))
                sc = local_scenario(case.spec, n, n_sim, int(study.simulate.get("seed", 0)))
                rep = run_scenario(sc)
                row.update(sim_n=n, sim_power=rep.rate("test", "chi2"), sim_se=rep.se("test", "chi2"), n_sim=n_sim)
            rows.append(row)
        _emit(rows_to_csv(rows, ASYMPT_COLUMNS), args.out)
        return
    if args.plot and args.study != "power":
        raise ConfigError("--plot is only available for power studies")
    reports = [run_scenario(sc) for sc in study.scenarios]
    text = rows_to_csv([r for rep in reports for r in rep.csv_rows()], CSV_COLUMNS)
    svg = None
    if args.plot:
        from .plots import power_curves_svg

        svg = power_curves_svg(reports)
    _emit(text, args.out)
    if svg is not None:
        write_atomic(args.plot, svg)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "test":
            _run_test(args)
        else:
            _run_simulate(args)
    except MdirError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
