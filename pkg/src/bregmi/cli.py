"""Command-line entry point: ``bregmi {test,tune,robustness,simulate}``.

Every run writes one JSON or CSV document (to ``--out`` or standard output).
With ``--plot`` a PNG figure is written next to ``--out``. The exit status
is 0 whenever the run completes, whatever the test decision.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from pathlib import Path

from .config import DeltaKind, Method, RunConfig
from .divergence import GsbParams
from .errors import BregmiError
from .io import emit_result, load_samples, write_document
from .robustness import DeltaPolicy, ges_curve, normal_null_model
from .simulation import CONTAMINANT, MODEL0, MODEL1, MODEL2, Contamination, NormalMixture, ScenarioSpec, run_table
from .testing import fit_kde, run_test
from .tuning import GridSearch, LocalSearch, select_tuning

__all__ = ["build_parser", "main", "load_scenario"]

DEFAULT_TUNE_ALPHAS = (-0.5, -0.2, 0.1, 0.3, 0.5, 0.8, 1.0)
DEFAULT_TUNE_LAMBDAS = (-0.5, 0.0, 0.5, 1.0)
DEFAULT_TUNE_BETAS = (0.0, -0.05, -0.5)

_PRESETS = {"model0": MODEL0, "model1": MODEL1, "model2": MODEL2, "contaminant": CONTAMINANT}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--method", choices=[m.value for m in Method], default="auto")
    p.add_argument("--permutations", type=int, default=500)
    p.add_argument("--grid-points", type=int, default=512)
    p.add_argument("--bandwidth", type=float, default=None, help="fixed bandwidth (default: Silverman)")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0, or the scenario file's)")
    p.add_argument("--eta", type=float, default=0.05, help="bump width for point contamination")
    p.add_argument("--policy", choices=[k.value for k in DeltaKind], default="bump")
    p.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--plot", action="store_true", help="also write a PNG next to --out")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bregmi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="two-sample test")
    p.add_argument("inputs", nargs="+", type=Path, help="group,y CSV or two y-column CSVs")
    _add_common(p)

    p = sub.add_parser("tune", help="resampling-based choice of the tuning triple")
    p.add_argument("inputs", nargs="+", type=Path)
    p.add_argument("--search", choices=["grid", "local"], default="grid")
    p.add_argument("--resamples", type=int, default=200)
    p.add_argument("--include-pd", action="store_true", help="score power-divergence candidates too")
    p.add_argument("--tune-alphas", type=_floats, default=DEFAULT_TUNE_ALPHAS)
    p.add_argument("--tune-lambdas", type=_floats, default=DEFAULT_TUNE_LAMBDAS)
    p.add_argument("--tune-betas", type=_floats, default=DEFAULT_TUNE_BETAS)
    _add_common(p)

    p = sub.add_parser("robustness", help="IF2 curve, GES, region and breakdown bound")
    p.add_argument("--x0", type=int, choices=[0, 1], default=0)
    p.add_argument("--y-min", type=float, default=-20.0)
    p.add_argument("--y-max", type=float, default=20.0)
    p.add_argument("--n-eval", type=int, default=401)
    p.add_argument("--p0", type=float, default=0.5, help="null probability of group 0")
    _add_common(p)

    p = sub.add_parser("simulate", help="rejection-proportion table for a scenario file")
    p.add_argument("scenario", type=Path, help="INI file with scenario/model0/model1/contamination/grids")
    p.add_argument("--replications", type=int, default=None, help="override the scenario file")
    _add_common(p)
    return parser


def _config(args) -> RunConfig:
    return RunConfig(
        level=args.level,
        method=args.method,
        n_perm=args.permutations,
        grid_points=args.grid_points,
        bandwidth=args.bandwidth,
        seed=0 if args.seed is None else args.seed,
        delta_policy=args.policy,
        eta=args.eta,
        output_format=args.format,
    )


def _figure_path(out: Path | None, suffix: str) -> Path:
    if out is None:
        return Path(f"bregmi-{suffix}.png")
    return out.with_suffix(".png")


def _mixture(section) -> NormalMixture:
    preset = section.get("preset")
    if preset:
        try:
            return _PRESETS[preset.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown preset {preset!r}") from None
    means = _floats(section.get("means", section.get("mean", "0")))
    if "variance" in section:
        sds = tuple(math.sqrt(v) for v in _floats(section["variance"]))
    else:
        sds = _floats(section.get("sds", section.get("sd", "1")))
    if "weights" in section:
        weights = _floats(section["weights"])
    else:
        weights = tuple(1.0 / len(means) for _ in means)
    return NormalMixture(weights, means, sds)


def load_scenario(path: Path, seed: int | None = None, replications: int | None = None):
    """Parse a scenario file into ``(ScenarioSpec, alphas, lambdas, beta)``."""
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(path)
    sc = cp["scenario"] if cp.has_section("scenario") else {}
    model0 = _mixture(cp["model0"]) if cp.has_section("model0") else MODEL0
    model1 = _mixture(cp["model1"]) if cp.has_section("model1") else MODEL0
    contamination = None
    if cp.has_section("contamination"):
        c = cp["contamination"]
        keys = ("mean", "means", "preset")
        cont = _mixture(c) if any(k in c for k in keys) else CONTAMINANT
        contamination = Contamination(float(c.get("epsilon", "0")), cont)
    grids = cp["grids"] if cp.has_section("grids") else {}
    spec = ScenarioSpec(
        model0=model0,
        model1=model1,
        n0=int(sc.get("n0", 100)),
        n1=int(sc.get("n1", 100)),
        replications=replications or int(sc.get("replications", 200)),
        level=float(sc.get("level", 0.05)),
        seed=int(sc.get("seed", 0)) if seed is None else seed,
        contamination=contamination,
    )
    alphas = _floats(grids.get("alpha", "0.5"))
    lambdas = _floats(grids.get("lambda", "0"))
    beta = float(grids.get("beta", "0"))
    return spec, alphas, lambdas, beta


def _cmd_test(args) -> None:
    config = _config(args)
    data = load_samples(args.inputs)
    params = GsbParams(args.alpha, args.lam, args.beta)
    res = run_test(data, params, config)
    write_document(emit_result(res, config, args.format), args.out)
    if args.plot:
        fit = fit_kde(data, config.bandwidth, config.grid_points)
        from .plotting import plot_densities

        plot_densities(fit, _figure_path(args.out, "test"))


def _cmd_tune(args) -> None:
    config = _config(args)
    data = load_samples(args.inputs)
    pilot = GsbParams(args.alpha, args.lam, args.beta)
    if args.search == "grid":
        search = GridSearch(
            [GsbParams(a, v, b) for b in args.tune_betas for v in args.tune_lambdas for a in args.tune_alphas]
        )
    else:
        search = LocalSearch(pilot)
    surface = select_tuning(
        data, pilot, search, args.resamples, args.level, config.seed, config, include_pd=args.include_pd
    )
    write_document(emit_result(surface, config, args.format), args.out)
    if args.plot:
        from .plotting import plot_risk_surface

        plot_risk_surface(surface, _figure_path(args.out, "tune"))


def _cmd_robustness(args) -> None:
    config = _config(args)
    params = GsbParams(args.alpha, args.lam, args.beta)
    margin = max(1.0, args.eta)
    hd = normal_null_model(p0=args.p0, y_range=(args.y_min - margin, args.y_max + margin))
    policy = DeltaPolicy(DeltaKind(args.policy), args.eta)
    report = ges_curve(params, hd, args.x0, (args.y_min, args.y_max), args.n_eval, policy)
    write_document(emit_result(report, config, args.format), args.out)
    if args.plot:
        from .plotting import plot_ges

        plot_ges(report, _figure_path(args.out, "robustness"))


def _cmd_simulate(args) -> None:
    config = _config(args)
    spec, alphas, lambdas, beta = load_scenario(args.scenario, args.seed, args.replications)
    table = run_table(spec, alphas, lambdas, beta, config)
    write_document(emit_result(table, table.config, args.format), args.out)
    if args.plot:
        from .plotting import plot_rejection_table

        plot_rejection_table(table, _figure_path(args.out, "simulate"))


_COMMANDS = {
    "test": _cmd_test,
    "tune": _cmd_tune,
    "robustness": _cmd_robustness,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (BregmiError, ValueError, OSError) as exc:
        print(f"bregmi: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
