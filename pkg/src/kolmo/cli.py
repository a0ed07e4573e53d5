"""Command-line front end.

Every subcommand takes its parameters from flags and, optionally, a flat
``key = value`` config file (``--config``); flags win.  The merged
configuration is echoed into each JSON output.  Exit codes: 0 pass,
1 a check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from ._rng import DEFAULT_SEED, stream
from .brownian import BrownianSampler, ValidationConfig, validate
from .dyadics import dyadic_grid, nearest_dyadic
from .kernels import ConsistentFamily, binomial_family, check_consistent, check_semigroup, gaussian_semigroup
from .kolmogorov_chentsov import KCParams, an_bound, an_probability, kc_moment_check
from .processes import LinearGaussianSampler, ZeroSampler, independent_increments_test
from .shs import simulate, thermostat, with_sigma

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("KOLMO_SEED")
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"KOLMO_SEED must be an integer, got {raw!r}") from None


def _int_range(text: str) -> list[int]:
    """``"4..12"`` or ``"4,6,8"``."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _pairs(text: str) -> list[tuple[float, float]]:
    out = []
    for item in str(text).split(","):
        if item.strip():
            s, t = item.split(":")
            out.append((float(s), float(t)))
    return out


def _number(text: str) -> float:
    return float(Fraction(str(text)))


# name -> (type, default, help); None default means required unless noted
COMMANDS = {
    "sample-brownian": {
        "help": "write Brownian sample paths as CSV plus a manifest",
        "options": {
            "T": (float, 1.0, "horizon"),
            "level": (int, 8, "dyadic level n (step 2^-n)"),
            "count": (int, 1, "number of paths"),
            "out": (str, "brownian_paths", "output directory"),
        },
    },
    "verify-kc": {
        "help": "Monte-Carlo check of the moment condition and the A_n union bound",
        "options": {
            "alpha": (float, 4.0, "moment exponent"),
            "beta": (float, 1.0, "excess exponent"),
            "C": (float, 3.0, "moment constant"),
            "gamma": (float, 0.2, "Hoelder exponent, must be < beta/alpha"),
            "levels": (_int_range, "4..12", "levels, e.g. 4..12 or 4,6,8"),
            "pairs": (_pairs, "0:0.5,0.25:0.5,0:0.125", "moment pairs s:t,..."),
            "nsamples": (int, 10000, "paths per level"),
            "T": (float, 1.0, "horizon"),
            "sampler": (str, "brownian", "brownian | zero"),
            "out": (str, "", "JSON output file (default stdout)"),
        },
    },
    "verify-semigroup": {
        "help": "check kappa_s o kappa_t = kappa_{s+t} for a kernel family",
        "options": {
            "family": (str, "gaussian", "gaussian | binomial"),
            "s": (_number, 0.5, "first index"),
            "t": (_number, 0.25, "second index"),
            "p": (str, "1/2", "step probability for the binomial family"),
            "out": (str, "", "JSON output file (default stdout)"),
        },
    },
    "test-increments": {
        "help": "pairwise correlation / chi-square tests of path increments",
        "options": {
            "times": (_float_list, "0,0.25,0.5,1", "sorted dyadic times"),
            "nsamples": (int, 10000, "number of paths"),
            "T": (float, 1.0, "horizon"),
            "sampler": (str, "brownian", "brownian | linear | zero"),
            "out": (str, "", "JSON output file (default stdout)"),
        },
    },
    "simulate-shs": {
        "help": "simulate a stochastic hybrid system and write trace CSVs",
        "options": {
            "model": (str, "thermostat", "model name"),
            "sigma": (float, None, "override every mode's diffusion coefficient"),
            "T": (float, 50.0, "horizon"),
            "level": (int, 10, "dyadic level n (dt = 2^-n)"),
            "out": (str, "", "directory for trace.csv / events.csv"),
        },
    },
    "dyadics": {
        "help": "print dyadic grids or nearest grid points",
        "options": {},
    },
    "validate-brownian": {
        "help": "run the Brownian validation report",
        "options": {
            "T": (float, 1.0, "horizon"),
            "times": (_float_list, "0,0.25,0.5,1", "sorted dyadic times starting at 0"),
            "levels": (_int_range, "8..12", "levels for the Hoelder trend"),
            "gammas": (_float_list, "0.4,0.6", "Hoelder exponents"),
            "nsamples": (int, 4000, "paths per statistic"),
            "holder-paths": (int, 20, "paths for the Hoelder trend"),
            "out": (str, "", "JSON output file (default stdout)"),
        },
    },
}


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    cfg = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        cfg[key.replace("_", "-")] = value
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kolmo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, spec in COMMANDS.items():
        p = sub.add_parser(name, help=spec["help"])
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, default=None, help="base seed (default $KOLMO_SEED)")
        for opt, (_, default, helptext) in spec["options"].items():
            shown = f" (default {default})" if default not in (None, "") else ""
            p.add_argument(f"--{opt}", dest=opt.replace("-", "_"), default=None, help=helptext + shown)
        if name == "dyadics":
            p.add_argument("--grid", nargs=2, metavar=("N", "T"), help="print D_N(T)")
            p.add_argument("--nearest", nargs=3, metavar=("t", "N", "T"), help="nearest point of D_N(T) to t")
    return parser


def merge_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then config file, then flags; values converted by type."""
    spec = COMMANDS[command]["options"]
    file_cfg = read_config(args.config) if args.config else {}
    unknown = set(file_cfg) - set(spec) - {"seed"}
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    merged = {}
    for opt, (conv, default, _) in spec.items():
        raw = getattr(args, opt.replace("-", "_"))
        if raw is None:
            raw = file_cfg.get(opt, default)
        if raw is None:
            merged[opt] = None
            continue
        try:
            merged[opt] = conv(raw) if isinstance(raw, str) else raw
        except (ValueError, TypeError) as exc:
            raise UsageError(f"bad value for --{opt}: {raw!r} ({exc})") from None
    seed = args.seed if args.seed is not None else file_cfg.get("seed")
    merged["seed"] = int(seed) if seed is not None else _default_seed()
    return merged


def _emit(payload: dict, out: str) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if not out:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}") from None


def _sampler(name: str, T: float, seed: int):
    if name == "brownian":
        return BrownianSampler(T, seed)
    if name == "zero":
        return ZeroSampler(T)
    if name == "linear":
        return LinearGaussianSampler(T)
    raise UsageError(f"unknown sampler {name!r}")


def _jsonable(cfg: dict) -> dict:
    return {k: [list(v) if isinstance(v, tuple) else v for v in val] if isinstance(val, list) else val for k, val in cfg.items()}


# -- commands ---------------------------------------------------------------------


def cmd_sample_brownian(cfg: dict) -> int:
    if cfg["count"] < 0:
        raise UsageError("count must be nonnegative")
    sampler = BrownianSampler(cfg["T"], cfg["seed"])
    out = Path(cfg["out"])
    files = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for i in range(cfg["count"]):
            name = f"path_{i:04d}.csv"
            (out / name).write_text(sampler.path(i, cfg["level"]).to_csv())
            files.append(name)
        manifest = {"config": _jsonable(cfg), "files": files, "points_per_path": len(sampler.grid(cfg["level"]))}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise UsageError(f"cannot write to {out}: {exc}") from None
    return EXIT_OK


def cmd_verify_kc(cfg: dict) -> int:
    try:
        params = KCParams(cfg["alpha"], cfg["beta"], cfg["C"], cfg["gamma"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    sampler = _sampler(cfg["sampler"], cfg["T"], cfg["seed"])
    if sampler.name == "linear":
        raise UsageError("verify-kc supports the brownian and zero samplers")
    reports = [an_probability(sampler, n, params.gamma, cfg["T"], cfg["nsamples"], cfg["seed"], params) for n in cfg["levels"]]
    moments = kc_moment_check(sampler, params, cfg["pairs"], cfg["nsamples"], cfg["seed"])
    bounds = [an_bound(params, n, cfg["T"]) for n in cfg["levels"]]
    ratios = [b / a for a, b in zip(bounds, bounds[1:]) if a > 0]
    passed = all(r.passed for r in reports) and all(m.passed for m in moments)
    payload = {
        "config": _jsonable(cfg),
        "an_reports": [r.to_dict() for r in reports],
        "moments": [m.to_dict() for m in moments],
        "bound_ratios": ratios,
        "limit_ratio": 2.0 ** -(params.beta - params.alpha * params.gamma),
        "passed": passed,
    }
    _emit(payload, cfg["out"])
    return EXIT_OK if passed else EXIT_FAIL


def cmd_verify_semigroup(cfg: dict) -> int:
    s, t = cfg["s"], cfg["t"]
    if s < 0 or t < 0:
        raise UsageError("indices must be nonnegative")
    if cfg["family"] == "gaussian":
        fam = gaussian_semigroup(sorted({0.0, s, t, s + t}))
    elif cfg["family"] == "binomial":
        if not (float(s).is_integer() and float(t).is_integer()):
            raise UsageError("binomial family needs integer indices")
        s, t = int(s), int(t)
        try:
            p = Fraction(cfg["p"])
        except ValueError:
            raise UsageError(f"bad probability {cfg['p']!r}") from None
        fam = binomial_family(p, s + t)
    else:
        raise UsageError(f"unknown family {cfg['family']!r}")
    res = check_semigroup(fam, s, t)
    triple = sorted({0, s, s + t})
    cons = check_consistent(ConsistentFamily.from_semigroup(fam), [tuple(triple)] if len(triple) == 3 else [])
    payload = {
        "config": _jsonable(cfg),
        "discrepancy": float(res.discrepancy),
        "identity_ok": res.identity_ok,
        "tolerance": res.tolerance,
        "consistent": cons.passed,
        "passed": res.passed and cons.passed,
    }
    _emit(payload, cfg["out"])
    return EXIT_OK if payload["passed"] else EXIT_FAIL


def cmd_test_increments(cfg: dict) -> int:
    sampler = _sampler(cfg["sampler"], cfg["T"], cfg["seed"])
    try:
        rep = independent_increments_test(sampler, cfg["times"], cfg["nsamples"], cfg["seed"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit({"config": _jsonable(cfg), "report": rep.to_dict(), "passed": rep.independent}, cfg["out"])
    return EXIT_OK if rep.independent else EXIT_FAIL


def cmd_simulate_shs(cfg: dict) -> int:
    if cfg["model"] != "thermostat":
        raise UsageError(f"unknown model {cfg['model']!r}")
    automaton = thermostat()
    if cfg["sigma"] is not None:
        automaton = with_sigma(automaton, cfg["sigma"])
    try:
        trace = simulate(automaton, cfg["T"], cfg["level"], stream(cfg["seed"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg["out"]:
        out = Path(cfg["out"])
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "trace.csv").write_text(trace.rows_csv())
            (out / "events.csv").write_text(trace.events_csv())
        except OSError as exc:
            raise UsageError(f"cannot write to {out}: {exc}") from None
    xs = trace.xs
    payload = {
        "config": _jsonable(cfg),
        "steps": len(trace.rows) - 1,
        "dt": 2.0 ** -cfg["level"],
        "events": len(trace.events),
        "first_event_time": trace.events[0][0] if trace.events else None,
        "invariant_violations": len(trace.violations),
        "band_fraction": float(((xs >= 18) & (xs <= 22)).mean()),
    }
    _emit(payload, "")
    return EXIT_OK


def cmd_dyadics(cfg: dict, args: argparse.Namespace) -> int:
    if not args.grid and not args.nearest:
        raise UsageError("dyadics needs --grid N T or --nearest t N T")
    try:
        if args.grid:
            grid = dyadic_grid(int(args.grid[0]), _number(args.grid[1]))
            print(" ".join(str(p) for p in grid.points))
        if args.nearest:
            t, n, T = _number(args.nearest[0]), int(args.nearest[1]), _number(args.nearest[2])
            point, dist = nearest_dyadic(t, dyadic_grid(n, T))
            print(f"{point} {format(dist, '.17g')}")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return EXIT_OK


def cmd_validate_brownian(cfg: dict) -> int:
    try:
        vcfg = ValidationConfig(
            times=tuple(cfg["times"]),
            nsamples=cfg["nsamples"],
            seed=cfg["seed"],
            levels=tuple(cfg["levels"]),
            gammas=tuple(cfg["gammas"]),
            holder_paths=cfg["holder-paths"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = validate(BrownianSampler(cfg["T"], cfg["seed"]), vcfg)
    payload = report.to_dict()
    payload["cli_config"] = _jsonable(cfg)
    _emit(payload, cfg["out"])
    return EXIT_OK if report.passed else EXIT_FAIL


HANDLERS = {
    "sample-brownian": cmd_sample_brownian,
    "verify-kc": cmd_verify_kc,
    "verify-semigroup": cmd_verify_semigroup,
    "test-increments": cmd_test_increments,
    "simulate-shs": cmd_simulate_shs,
    "validate-brownian": cmd_validate_brownian,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = merge_config(args.command, args)
        if args.command == "dyadics":
            return cmd_dyadics(cfg, args)
        return HANDLERS[args.command](cfg)
    except UsageError as exc:
        print(f"kolmo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
