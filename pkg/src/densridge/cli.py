"""Command-line interface: ``densridge {ridge,uncertainty,confset,simulate}``.

Every command writes into an output directory containing its artifacts and a
single ``manifest.json``.  Exit codes: 0 ok, 1 runtime failure, 2 usage or
configuration error, 3 empty ridge.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__
from . import io as rio
from .experiments import FAMILIES, Scenario, check_lu2, generate, rate_check, run_coverage
from .finder import EmptyRidgeError, FinderConfig, GridSpec, find_ridge
from .inference import BootstrapPlan, ReplicateFailureError, bootstrap
from .kde import InputError, KdeModel, load_sample, silverman_bandwidth

log = logging.getLogger("densridge")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_EMPTY = 0, 1, 2, 3
STATISTIC_NAMES = {"plain": "quasi-hausdorff", "stabilized": "variance-stabilized"}


class UsageError(Exception):
    pass


class ConfigError(UsageError):
    def __init__(self, problems: List[str]):
        super().__init__("invalid config:\n  " + "\n  ".join(problems))
        self.problems = problems


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# argument types


def _positive_float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}")
    if not (v > 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {s}")
    return v


def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {s}")
    return v


def _alpha(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}")
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"alpha must lie in the open interval (0, 1), got {s}")
    return v


def _seed(s: str):
    if s == "random":
        return s
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a non-negative integer or 'random', got {s!r}")
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return v


def _grid(s: str) -> GridSpec:
    """``"x0,x1,y0,y1,res"``; more generally ``2d`` bounds followed by one resolution."""
    try:
        parts = [float(p) for p in s.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be comma-separated numbers, got {s!r}")
    if len(parts) < 5 or len(parts) % 2 == 0:
        raise argparse.ArgumentTypeError("grid must be lo0,hi0,lo1,hi1,...,res")
    res = parts[-1]
    if res != int(res) or res < 1:
        raise argparse.ArgumentTypeError("grid resolution must be a positive integer")
    bounds = parts[:-1]
    lower = tuple(bounds[0::2])
    upper = tuple(bounds[1::2])
    if any(not a < b for a, b in zip(lower, upper)):
        raise argparse.ArgumentTypeError("grid bounds must satisfy lo < hi on every axis")
    return GridSpec(lower, upper, int(res))


def _resolve_seed(seed) -> int:
    if seed == "random":
        return int(np.random.SeedSequence().generate_state(1, np.uint32)[0])
    return int(seed)


# --------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("output", type=Path, help="output directory")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")


def _add_input(p: argparse.ArgumentParser):
    p.add_argument("input", type=Path, help="CSV or JSON point file")
    p.add_argument("--header", action="store_true", help="CSV input has a header row")
    bw = p.add_mutually_exclusive_group()
    bw.add_argument("--h", type=_positive_float, help="kernel bandwidth")
    bw.add_argument("--silverman", action="store_true", help="Silverman bandwidth (default)")


def _add_finder(p: argparse.ArgumentParser):
    p.add_argument("--grid", type=_grid, help='start mesh "x0,x1,y0,y1,res" (default: the sample)')
    p.add_argument("--tol", type=_positive_float, default=1e-6)
    p.add_argument("--max-iters", type=_positive_int, default=500)
    p.add_argument("--density-floor", type=float, default=0.05)
    p.add_argument("--step-rule", choices=("mean-shift", "fixed"), default="mean-shift")
    p.add_argument("--step-size", type=_positive_float, default=1.0)


def _add_boot(p: argparse.ArgumentParser):
    p.add_argument("--B", type=_positive_int, default=200, help="bootstrap replicates")
    p.add_argument("--seed", type=_seed, default=0, help="integer or 'random' (default 0)")
    p.add_argument("--ridge", type=Path, help="reuse a ridge.json instead of recomputing")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="densridge", description="Density ridge estimation and bootstrap inference.")
    parser.add_argument("--version", action="version", version=f"densridge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ridge", help="estimate the ridge of a KDE")
    _add_input(p)
    _add_finder(p)
    _add_common(p)

    p = sub.add_parser("uncertainty", help="bootstrap local uncertainty at each ridge point")
    _add_input(p)
    _add_finder(p)
    _add_boot(p)
    _add_common(p)

    p = sub.add_parser("confset", help="bootstrap confidence set for the smoothed ridge")
    _add_input(p)
    _add_finder(p)
    _add_boot(p)
    p.add_argument("--alpha", type=_alpha, default=0.1)
    p.add_argument("--statistic", choices=tuple(STATISTIC_NAMES), default="plain")
    _add_common(p)

    p = sub.add_parser("simulate", help="run a coverage, trace or rate experiment from a config file")
    p.add_argument("config", help="JSON or TOML config file, or the name of a bundled config")
    _add_common(p)
    return parser


# --------------------------------------------------------------------------
# helpers


class _Run:
    """Collects artifacts and the manifest for one command."""

    def __init__(self, args, command: str):
        self.args = args
        self.command = command
        self.out: Path = args.output
        self.files: Dict[str, str] = {}
        self.inputs: Dict[str, str] = {}
        self.config: Dict[str, Any] = {}
        self.seeds: Dict[str, Any] = {}

    def add_input(self, path: Path):
        self.inputs[str(path)] = rio.file_digest(path)

    def write(self, name: str, text: str, kind: str):
        fmt = self.args.format
        if fmt != "both" and kind != fmt:
            return
        self.files[name] = text

    def finish(self):
        self.out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.out / name).write_text(text)
        manifest = {
            "tool": "densridge",
            "version": __version__,
            "command": self.command,
            "argv": [str(a) for a in self.args.argv],
            "config": self.config,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": sorted(self.files),
            "created": datetime.now(timezone.utc).isoformat(),
        }
        (self.out / "manifest.json").write_text(rio.dumps(manifest))


def _finder_config(args) -> FinderConfig:
    if not 0 <= args.density_floor < 1:
        raise UsageError("--density-floor must lie in [0, 1)")
    return FinderConfig(
        mesh=args.grid if args.grid is not None else "from-sample",
        tol_projgrad=args.tol,
        max_iters=args.max_iters,
        density_floor=args.density_floor,
        step_rule=args.step_rule,
        step_size=args.step_size,
    )


def _load(args, run: _Run):
    try:
        sample = load_sample(args.input, header=args.header)
    except OSError as exc:
        raise InputError(f"cannot read {args.input}: {exc.strerror or exc}")
    run.add_input(args.input)
    if args.h is not None:
        h, rule = args.h, "fixed"
    else:
        h, rule = silverman_bandwidth(sample), "silverman"
    run.config.update({"input": str(args.input), "header": args.header, "h": h, "bandwidth_rule": rule,
                       "n": sample.n, "d": sample.d})
    return sample, h


def _base_ridge(args, run: _Run, sample, h):
    if getattr(args, "ridge", None) is not None:
        base = rio.load_ridge(args.ridge)
        run.add_input(args.ridge)
        if base.locations.shape[1] != sample.d:
            raise InputError("ridge file dimension does not match the sample")
        if base.h != h:
            log.warning("ridge file was built with h=%r; using it for the bootstrap", base.h)
        run.config["h"] = base.h
        return base, base.h
    config = _finder_config(args)
    base = find_ridge(KdeModel(sample, h), config, frames=True)
    return base, h


# --------------------------------------------------------------------------
# commands


def cmd_ridge(args) -> int:
    run = _Run(args, "ridge")
    sample, h = _load(args, run)
    config = _finder_config(args)
    run.config["finder"] = config.to_dict()
    ridge = find_ridge(KdeModel(sample, h), config, frames=True)
    run.write("ridge.csv", rio.ridge_to_csv(ridge), "csv")
    run.write("ridge.json", rio.dumps(rio.ridge_to_dict(ridge)), "json")
    run.finish()
    return EXIT_OK


def _boot_command(args, name: str) -> int:
    run = _Run(args, name)
    sample, h = _load(args, run)
    base, h = _base_ridge(args, run, sample, h)
    seed = _resolve_seed(args.seed)
    run.seeds["bootstrap"] = seed
    plan = BootstrapPlan(B=args.B, seed=seed, finder=base.config)
    run.config["finder"] = base.config.to_dict()
    run.config["B"] = args.B
    alpha = getattr(args, "alpha", None)
    statistic = STATISTIC_NAMES[getattr(args, "statistic", "plain")]
    if alpha is not None:
        run.config.update({"alpha": alpha, "statistic": statistic})
    field_, cset = bootstrap(sample, h, base, plan, alpha=alpha, statistic=statistic, threads=args.threads)
    run.write("ridge.csv", rio.ridge_to_csv(base), "csv")
    run.write("ridge.json", rio.dumps(rio.ridge_to_dict(base)), "json")
    if name == "uncertainty":
        run.write("uncertainty.csv", rio.uncertainty_to_csv(field_), "csv")
        run.write("uncertainty.json", rio.dumps(rio.uncertainty_to_dict(field_)), "json")
    else:
        # the confidence set summary is always written: it carries the radius
        run.files["confset.json"] = rio.dumps(rio.confset_to_dict(cset))
        run.write("tube.csv", rio.tube_to_csv(cset), "csv")
    for b, msg in field_.failed:
        log.warning("replicate %d failed: %s", b, msg)
    run.finish()
    return EXIT_OK


def cmd_uncertainty(args) -> int:
    return _boot_command(args, "uncertainty")


def cmd_confset(args) -> int:
    return _boot_command(args, "confset")


# --------------------------------------------------------------------------
# simulate

TASKS = ("coverage", "lu2", "rate")
_SCENARIO_FIELDS = {"family": str, "n": int, "noise_sigma": float, "radius": float, "side": float,
                    "corner_radius": float, "axes": list, "seed": int}
_FINDER_FIELDS = {"tol_projgrad": float, "max_iters": int, "density_floor": float, "step_rule": str,
                  "step_size": float, "grad_floor": float}
_TASK_FIELDS = {
    "coverage": {"alpha": float, "M": int, "B": int, "seed": int, "h": (str, float), "resolution": int,
                 "statistic": str, "threads": int},
    "lu2": {"n": int, "h": (str, float), "M": int, "B": int, "resolution": int, "population_size": int},
    "rate": {"h": (str, float), "n_small": int, "n_large": int, "runs": int, "resolution": int},
}


def bundled_config_dir() -> Path:
    return Path(__file__).parent / "configs"


def _read_config(spec: str) -> Dict[str, Any]:
    path = Path(spec)
    if not path.exists():
        cand = bundled_config_dir() / spec
        for p in (cand, cand.with_suffix(".json"), cand.with_suffix(".toml")):
            if p.exists():
                path = p
                break
        else:
            raise InputError(f"config not found: {spec}")
    text = path.read_text()
    try:
        if path.suffix == ".toml":
            try:
                import tomllib
            except ImportError:  # Python < 3.11
                import tomli as tomllib
            return tomllib.loads(text), path
        return json.loads(text), path
    except ValueError as exc:
        raise ConfigError([f"{path}: cannot parse: {exc}"])


def _check_type(where: str, value, kind, problems: List[str]):
    kinds = kind if isinstance(kind, tuple) else (kind,)
    for k in kinds:
        if k is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            return
        if k is int and isinstance(value, int) and not isinstance(value, bool):
            return
        if k in (str, list) and isinstance(value, k):
            return
    names = " or ".join(k.__name__ for k in kinds)
    problems.append(f"{where}: expected {names}, got {type(value).__name__} {value!r}")


def validate_config(cfg: Any) -> List[str]:
    """Field-level problems with a simulate config; empty when valid."""
    problems: List[str] = []
    if not isinstance(cfg, dict):
        return ["config: expected a mapping"]
    task = cfg.get("task", "coverage")
    if task not in TASKS:
        problems.append(f"task: unknown task {task!r}; expected one of {TASKS}")
        return problems
    allowed = {"task", "scenario", "finder"} | set(_TASK_FIELDS[task])
    for key in sorted(set(cfg) - allowed):
        problems.append(f"{key}: unknown field for task {task!r}")
    for key, kind in _TASK_FIELDS[task].items():
        if key in cfg:
            _check_type(key, cfg[key], kind, problems)
    sc = cfg.get("scenario")
    if not isinstance(sc, dict):
        problems.append("scenario: required mapping")
    else:
        for key in sorted(set(sc) - set(_SCENARIO_FIELDS)):
            problems.append(f"scenario.{key}: unknown field")
        for key, kind in _SCENARIO_FIELDS.items():
            if key in sc:
                _check_type(f"scenario.{key}", sc[key], kind, problems)
        fam = sc.get("family")
        if fam is None:
            problems.append("scenario.family: required")
        elif fam not in FAMILIES:
            problems.append(f"scenario.family: unknown family {fam!r}; expected one of {FAMILIES}")
        if task == "lu2" and fam == "box":
            problems.append("scenario.family: lu2 needs an analytic oracle (circle or aniso-gaussian)")
    fd = cfg.get("finder", {})
    if not isinstance(fd, dict):
        problems.append("finder: expected a mapping")
    else:
        for key in sorted(set(fd) - set(_FINDER_FIELDS)):
            problems.append(f"finder.{key}: unknown field")
        for key, kind in _FINDER_FIELDS.items():
            if key in fd:
                _check_type(f"finder.{key}", fd[key], kind, problems)
    h = cfg.get("h")
    if isinstance(h, str) and h != "silverman":
        problems.append(f"h: expected 'silverman' or a positive number, got {h!r}")
    elif isinstance(h, (int, float)) and not isinstance(h, bool) and not h > 0:
        problems.append(f"h: must be positive, got {h!r}")
    if task == "coverage":
        a = cfg.get("alpha", 0.1)
        if isinstance(a, (int, float)) and not 0 < a < 1:
            problems.append(f"alpha: must lie in (0, 1), got {a!r}")
        st = cfg.get("statistic", "plain")
        if isinstance(st, str) and st not in STATISTIC_NAMES:
            problems.append(f"statistic: expected one of {tuple(STATISTIC_NAMES)}, got {st!r}")
    for key in ("M", "B", "n", "resolution", "runs", "n_small", "n_large", "population_size", "threads"):
        v = cfg.get(key)
        if isinstance(v, int) and not isinstance(v, bool) and v < 1:
            problems.append(f"{key}: must be >= 1, got {v}")
    return problems


def _scenario(cfg) -> Scenario:
    sc = dict(cfg["scenario"])
    fam = sc.pop("family")
    if "axes" in sc:
        sc["axes"] = tuple(sc["axes"])
    try:
        return Scenario.defaults(fam, **sc)
    except ValueError as exc:
        raise ConfigError([f"scenario: {exc}"])


def _sim_h(cfg):
    h = cfg.get("h", "silverman")
    return h if h == "silverman" else float(h)


def _fixed_h(h, scenario: Scenario) -> float:
    """Bandwidth for fixed-h studies: Silverman on the scenario's seed draw."""
    if h != "silverman":
        return float(h)
    return silverman_bandwidth(generate(scenario))


def cmd_simulate(args) -> int:
    run = _Run(args, "simulate")
    cfg, path = _read_config(args.config)
    problems = validate_config(cfg)
    if problems:
        raise ConfigError(problems)
    run.add_input(path)
    scenario = _scenario(cfg)
    finder = FinderConfig(**cfg.get("finder", {}))
    task = cfg.get("task", "coverage")
    run.config = {"config_file": str(path), "resolved": cfg, "scenario": scenario.to_dict(),
                  "finder": finder.to_dict()}
    run.seeds["scenario"] = scenario.seed
    threads = int(cfg.get("threads", args.threads))
    if task == "coverage":
        plan = BootstrapPlan(B=int(cfg.get("B", 300)), seed=int(cfg.get("seed", 0)), finder=finder)
        run.seeds["bootstrap"] = plan.seed
        report = run_coverage(
            scenario,
            alpha=float(cfg.get("alpha", 0.1)),
            M=int(cfg.get("M", 100)),
            plan=plan,
            h_rule=_sim_h(cfg),
            resolution=int(cfg.get("resolution", 100)),
            statistic=STATISTIC_NAMES[cfg.get("statistic", "plain")],
            threads=threads,
        )
        run.write("coverage.json", rio.dumps(report.to_dict()), "json")
        run.write("coverage.csv", report.to_csv(), "csv")
        log.info("empirical coverage %.3f", report.empirical_coverage)
    elif task == "lu2":
        n = int(cfg.get("n", scenario.n))
        h = _fixed_h(cfg.get("h", "silverman"), replace(scenario, n=n))
        report = check_lu2(scenario, n=n, h=h, M=int(cfg.get("M", 50)), resolution=int(cfg.get("resolution", 60)),
                           B=int(cfg.get("B", 0)), finder=finder,
                           population_size=int(cfg.get("population_size", 1_000_000)))
        run.write("lu2.json", rio.dumps(report.to_dict()), "json")
        run.write("lu2.csv", report.to_csv(), "csv")
    else:
        n_small = int(cfg.get("n_small", 2000))
        h = _fixed_h(cfg.get("h", "silverman"), replace(scenario, n=n_small))
        report = rate_check(scenario, h=h, n_small=n_small, n_large=int(cfg.get("n_large", 4 * n_small)),
                            runs=int(cfg.get("runs", 20)), resolution=int(cfg.get("resolution", 60)), finder=finder)
        run.write("rate.json", rio.dumps(report.to_dict()), "json")
        run.write("rate.csv", report.to_csv(), "csv")
    run.finish()
    return EXIT_OK


COMMANDS = {"ridge": cmd_ridge, "uncertainty": cmd_uncertainty, "confset": cmd_confset,
            "simulate": cmd_simulate}


def _join_grid(argv: List[str]) -> List[str]:
    # "--grid -4,4,-4,4,50" would otherwise read the bounds as an option
    out: List[str] = []
    it = iter(argv)
    for a in it:
        if a == "--grid":
            nxt = next(it, None)
            out.append(a if nxt is None else f"--grid={nxt}")
        else:
            out.append(a)
    return out


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_grid(argv))
    except UsageError as exc:
        print(f"densridge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help, --version
        return int(exc.code or 0)
    args.argv = argv
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"densridge: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"densridge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EmptyRidgeError as exc:
        print(f"densridge: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (InputError, ValueError) as exc:
        print(f"densridge: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ReplicateFailureError, RuntimeError, ArithmeticError, OSError) as exc:
        print(f"densridge: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
