"""Command-line front end: ``hilfer-picard {check,solve,bounds,validate}``.

Configs are flat ``key = value`` text files with dotted keys::

    # Hilfer-Hadamard IVP
    problem.alpha = 0.5
    problem.beta  = 0.5
    problem.x0    = 1
    rhs.variant   = linear_in_log
    rhs.lam       = 0.5
    grid.N        = 2048
    grid.L        = auto

See ``README.md`` for the complete schema. A ``report.json`` written by
``solve`` is also accepted as ``--config``: its embedded, fully resolved
config reproduces the run.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hilfer_picard.hadamard_calculus import LogGrid, set_num_threads
from hilfer_picard.picard_engine import (
    TAIL_MAX_TERMS,
    ConvergenceError,
    PreconditionError,
    Problem,
    a_priori_iteration_count,
    error_bound_log_terms,
    existence_radius,
    initial_condition_check,
    residual,
    solve,
)
from hilfer_picard.rhs_catalog import (
    LinearInLog,
    PowerNonlinear,
    PowerSource,
    RhsSpec,
    Sum,
    derive_hypotheses,
    evaluate,
)
from hilfer_picard.validation import format_table, run_validation

__all__ = ["ConfigError", "RunConfig", "load_config", "main", "parse_config"]

logger = logging.getLogger("hilfer_picard")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_HYPOTHESES = 3
EXIT_NONCONVERGENCE = 4

AUTO = "auto"

# variant name -> (class, {param: default or None when required})
VARIANTS: dict[str, tuple[type, dict[str, float | None]]] = {
    "zero": (PowerSource, {}),
    "power_source": (PowerSource, {"c": None, "nu": None}),
    "linear_in_log": (LinearInLog, {"lam": None, "kappa": 0.0}),
    "power_nonlinear": (PowerNonlinear, {"lam": None, "mu": None, "m": None}),
}

PROBLEM_KEYS = {"alpha": None, "beta": None, "x0": None, "a": 1.0, "h": 1.0, "b": 1.0}


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration; ``None`` for ``grid_L``/``n_max``/``eps`` means auto."""

    problem: Problem
    rhs_keys: dict[str, str]
    grid_N: int = 2048
    grid_q: float = 2.0
    grid_L: float | None = None
    tol: float = 1.0e-10
    n_max: int | None = None
    eps: float | None = None
    bounds_terms: int = 250
    out_dir: str = "."
    lines: dict[str, int] = field(default_factory=dict, compare=False)


def _parse_lines(text: str) -> tuple[dict[str, str], dict[str, int]]:
    values: dict[str, str] = {}
    where: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value in {raw.strip()!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: {key} repeats line {where[key]}")
        values[key] = value
        where[key] = lineno
    return values, where


class _Reader:
    """Typed access to the flat key/value map with line-numbered diagnostics."""

    def __init__(self, values: dict[str, str], where: dict[str, int]):
        self.values = values
        self.where = where
        self.used: set[str] = set()

    def _loc(self, key: str) -> str:
        return f"line {self.where[key]}: {key}" if key in self.where else key

    def raw(self, key: str, default: str | None = None) -> str:
        if key in self.values:
            self.used.add(key)
            return self.values[key]
        if default is None:
            raise ConfigError(f"{key}: required field is missing")
        return default

    def _text(self, key: str, default, auto: bool) -> str | None:
        if default is None and not auto:
            return self.raw(key)
        text = self.raw(key, AUTO if default is None else str(default))
        return None if auto and text.lower() == AUTO else text

    def real(self, key: str, default: float | None = None, *, auto: bool = False):
        text = self._text(key, default, auto)
        if text is None:
            return None
        try:
            val = float(text)
        except ValueError:
            raise ConfigError(f"{self._loc(key)}: expected a number, got {text!r}") from None
        if not math.isfinite(val):
            raise ConfigError(f"{self._loc(key)}: value must be finite, got {text!r}")
        return val

    def integer(self, key: str, default: int | None = None, *, auto: bool = False):
        text = self._text(key, default, auto)
        if text is None:
            return None
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{self._loc(key)}: expected an integer, got {text!r}") from None

    def fail(self, key: str, msg: str) -> ConfigError:
        return ConfigError(f"{self._loc(key)}: {msg}")


def _build_term(r: _Reader, prefix: str) -> tuple[RhsSpec, dict[str, str]]:
    key = f"{prefix}.variant"
    name = r.raw(key).lower()
    if name not in VARIANTS:
        choices = ", ".join([*VARIANTS, "sum"]) if prefix == "rhs" else ", ".join(VARIANTS)
        raise r.fail(key, f"unknown variant {name!r} (choose from {choices})")
    cls, params = VARIANTS[name]
    if name == "zero":
        return PowerSource(0.0, 0.0), {key: name}
    args = {p: r.real(f"{prefix}.{p}", d) for p, d in params.items()}
    try:
        spec = cls(**args)
    except ValueError as exc:
        raise r.fail(key, str(exc)) from None
    resolved = {key: name, **{f"{prefix}.{p}": repr(v) for p, v in args.items()}}
    return spec, resolved


def _build_rhs(r: _Reader) -> tuple[RhsSpec, dict[str, str]]:
    if r.raw("rhs.variant").lower() != "sum":
        return _build_term(r, "rhs")
    terms = []
    resolved = {"rhs.variant": "sum"}
    i = 1
    while f"rhs.term{i}.variant" in r.values:
        spec, keys = _build_term(r, f"rhs.term{i}")
        terms.append(spec)
        resolved.update(keys)
        i += 1
    if not terms:
        raise r.fail("rhs.variant", "sum needs rhs.term1.variant, rhs.term2.variant, ...")
    return Sum(tuple(terms)), resolved


def parse_config(text: str, *, out_dir: str | None = None) -> RunConfig:
    """Parse flat config text into a :class:`RunConfig`; raises :class:`ConfigError`."""
    values, where = _parse_lines(text)
    r = _Reader(values, where)

    prob = {k: r.real(f"problem.{k}", d) for k, d in PROBLEM_KEYS.items()}
    rhs, rhs_keys = _build_rhs(r)
    try:
        problem = Problem(rhs=rhs, **prob)
    except ValueError as exc:
        raise ConfigError(f"problem: {exc}") from None

    N = r.integer("grid.N", 2048)
    if N < 4:
        raise r.fail("grid.N", f"need at least 4 intervals, got {N}")
    q = r.real("grid.q", 2.0)
    if q < 1.0:
        raise r.fail("grid.q", f"grading exponent must be >= 1, got {q}")
    L = r.real("grid.L", auto=True)
    if L is not None and L <= 0.0:
        raise r.fail("grid.L", f"must be positive or 'auto', got {L}")
    tol = r.real("solver.tol", 1.0e-10)
    if tol <= 0.0:
        raise r.fail("solver.tol", "must be positive")
    n_max = r.integer("solver.n_max", auto=True)
    if n_max is not None and n_max < 1:
        raise r.fail("solver.n_max", "must be >= 1 or 'auto'")
    eps = r.real("solver.eps", auto=True)
    if eps is not None and eps <= 0.0:
        raise r.fail("solver.eps", "must be positive or 'auto'")
    n_terms = r.integer("bounds.n_terms", 250)
    if not 2 <= n_terms <= TAIL_MAX_TERMS:
        raise r.fail("bounds.n_terms", f"must lie in [2, {TAIL_MAX_TERMS}]")
    out = r.raw("output.dir", ".")

    unknown = sorted(set(values) - r.used)
    if unknown:
        raise ConfigError(f"{r._loc(unknown[0])}: unknown key")

    return RunConfig(
        problem=problem,
        rhs_keys=rhs_keys,
        grid_N=N,
        grid_q=q,
        grid_L=L,
        tol=tol,
        n_max=n_max,
        eps=eps,
        bounds_terms=n_terms,
        out_dir=out_dir if out_dir is not None else out,
        lines=where,
    )


def load_config(path: str | Path, *, out_dir: str | None = None) -> RunConfig:
    """Read a config file, or the ``config`` block of a ``report.json``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        try:
            block = json.loads(text)["config"]
        except (json.JSONDecodeError, KeyError, TypeError):
            raise ConfigError(f"{path}: JSON config must be a report with a 'config' object") from None
        text = "\n".join(f"{k} = {v}" for k, v in block.items())
    return parse_config(text, out_dir=out_dir)


def resolved_config(cfg: RunConfig, *, L: float, n_max: int, eps: float) -> dict[str, str]:
    """Flat config with every auto value substituted, in canonical key order."""
    p = cfg.problem
    out = {f"problem.{k}": repr(float(getattr(p, k))) for k in PROBLEM_KEYS}
    out.update(cfg.rhs_keys)
    out.update(
        {
            "grid.N": str(cfg.grid_N),
            "grid.q": repr(cfg.grid_q),
            "grid.L": repr(float(L)),
            "solver.tol": repr(cfg.tol),
            "solver.n_max": str(n_max),
            "solver.eps": repr(float(eps)),
            "bounds.n_terms": str(cfg.bounds_terms),
        }
    )
    return out


# {{{ output helpers


def _fmt(v: float) -> str:
    """Shortest round-trip decimal; blank for non-finite values."""
    return repr(float(v)) if math.isfinite(v) else ""


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _out_dir(cfg: RunConfig) -> Path:
    d = Path(cfg.out_dir)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {d} is not writable: {exc.strerror}") from None
    if not os.access(d, os.W_OK):
        raise ConfigError(f"output directory {d} is not writable")
    return d


# }}}


def _hypothesis_report(cfg: RunConfig) -> tuple[dict, float | None]:
    p = cfg.problem
    hyp = derive_hypotheses(p.rhs, p)
    l = existence_radius(hyp, p) if hyp.valid_H1 else None
    report = {
        "k": hyp.k,
        "M": hyp.M,
        "A": hyp.A,
        "valid_H1": hyp.valid_H1,
        "valid_H2": hyp.valid_H2,
        "vacuous_lipschitz": hyp.vacuous_lipschitz,
        "gamma": p.gamma,
        "l": l,
        "l_capped_by_h": bool(l is not None and l == p.h),
    }
    if hyp.diagnostic:
        report["diagnostic"] = hyp.diagnostic
    return report, l


def cmd_check(cfg: RunConfig, args: argparse.Namespace) -> int:
    report, _ = _hypothesis_report(cfg)
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out is not None:
        _write_json(_out_dir(cfg) / "check.json", report)
    if not report["valid_H1"]:
        print(f"hypotheses rejected: {report['diagnostic']}", file=sys.stderr)
        return EXIT_HYPOTHESES
    return EXIT_OK


def cmd_solve(cfg: RunConfig, args: argparse.Namespace) -> int:
    p = cfg.problem
    hyp = derive_hypotheses(p.rhs, p)
    if not hyp.valid_H1 and (cfg.grid_L is None or cfg.n_max is None):
        print(f"hypotheses rejected: {hyp.diagnostic}", file=sys.stderr)
        return EXIT_HYPOTHESES
    l = existence_radius(hyp, p) if hyp.valid_H1 else None
    L = cfg.grid_L if cfg.grid_L is not None else l
    eps = cfg.eps if cfg.eps is not None else cfg.tol
    out = _out_dir(cfg)

    grid = LogGrid(L, cfg.grid_N, cfg.grid_q, p.a)
    try:
        run = solve(p, grid, cfg.tol, cfg.n_max, eps=eps, hyp=hyp)
    except PreconditionError as exc:
        print(f"hypotheses rejected: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESES

    final = run.final
    u, t, z = grid.nodes, grid.t, final.zvalues
    x = final.x()
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.asarray(evaluate(p.rhs, u, x), dtype=float)
    _write_csv(
        out / "solution.csv",
        ["u", "t", "z", "x", "rhs_value"],
        ([_fmt(a), _fmt(b), _fmt(c), _fmt(d), _fmt(e)] for a, b, c, d, e in zip(u, t, z, x, f)),
    )

    res = residual(run, p, grid) if run.converged else None
    n_max = cfg.n_max if cfg.n_max is not None else run.a_priori_N + 10
    report = {
        "config": resolved_config(cfg, L=L, n_max=n_max, eps=eps),
        "converged": run.converged,
        "n_performed": run.n_performed,
        "sup_diffs": run.sup_diffs,
        "radius_l": run.radius_l,
        "a_priori_N": run.a_priori_N,
        "residual": res,
        "initial_condition": {
            "z0_minus_x0": abs(float(z[0]) - p.x0),
            "z1_minus_x0": abs(float(z[1]) - p.x0),
            "max": initial_condition_check(run, p),
        },
        "box_violations": run.box_violations,
        "hypotheses": {
            "k": hyp.k,
            "M": hyp.M,
            "A": hyp.A,
            "valid_H1": hyp.valid_H1,
            "valid_H2": hyp.valid_H2,
            "vacuous_lipschitz": hyp.vacuous_lipschitz,
        },
    }
    _write_json(out / "report.json", {k: _jsonable(v) for k, v in report.items()})
    status = "converged" if run.converged else "did NOT converge"
    print(f"{status} after {run.n_performed} iterations; wrote {out / 'solution.csv'}")
    return EXIT_OK if run.converged else EXIT_NONCONVERGENCE


def cmd_bounds(cfg: RunConfig, args: argparse.Namespace) -> int:
    p = cfg.problem
    hyp = derive_hypotheses(p.rhs, p)
    if not (hyp.valid_H1 and hyp.valid_H2):
        print(f"hypotheses rejected: {hyp.diagnostic}", file=sys.stderr)
        return EXIT_HYPOTHESES
    l = existence_radius(hyp, p)
    eps = cfg.eps if cfg.eps is not None else cfg.tol
    try:
        n_apriori = a_priori_iteration_count(hyp, p, l, eps)
    except ConvergenceError as exc:
        print(f"bound series: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESES

    n = cfg.bounds_terms
    logs = error_bound_log_terms(TAIL_MAX_TERMS, hyp, p, l)
    terms = np.exp(logs)
    # tail[n] = sum_{m >= n} u_m over the 10,000 computed terms
    tails = np.cumsum(terms[::-1])[::-1]
    with np.errstate(invalid="ignore"):
        ratios = np.exp(np.diff(logs))
    rows = (
        [str(i), _fmt(terms[i]), _fmt(ratios[i]), _fmt(tails[i])] for i in range(n)
    )
    out = _out_dir(cfg)
    _write_csv(out / "bounds.csv", ["n", "u_n", "ratio", "tail"], rows)
    summary = {"a_priori_N": n_apriori, "eps": eps, "radius_l": l, "n_terms": n}
    _write_json(out / "bounds.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    cases = run_validation(args.level)
    print(format_table(cases))
    failed = [c.name for c in cases if not c.passed]
    if failed:
        print("FAILED: " + "; ".join(failed), file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def _thread_count(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("HPD_THREADS", "").strip()
    if not env:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"HPD_THREADS must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hilfer-picard",
        description="Picard iteration for Hilfer-Hadamard initial value problems.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log each iteration")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", required=True, help="flat key = value config file")
        sp.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        sp.add_argument(
            "--threads", type=int, default=None, help="worker threads, 0 = auto (env HPD_THREADS)"
        )

    common(sub.add_parser("check", help="derive (H1)/(H2) constants and the existence radius"))
    common(sub.add_parser("solve", help="run the Picard iteration, write CSV + JSON"))
    common(sub.add_parser("bounds", help="write the majorant bound series"))
    v = sub.add_parser("validate", help="run the oracle suites")
    v.add_argument("--level", choices=("quick", "full"), default="quick")
    v.add_argument("--threads", type=int, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        threads = _thread_count(args.threads)
        if threads < 0:
            raise ConfigError(f"--threads must be >= 0, got {threads}")
        set_num_threads(threads)
        if args.command == "validate":
            return cmd_validate(args)
        cfg = load_config(args.config, out_dir=args.out)
        handler = {"check": cmd_check, "solve": cmd_solve, "bounds": cmd_bounds}[args.command]
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
