"""Command-line entry point.

Subcommands: solve, converge, noise, verify.  Flag values override config
file values; the effective configuration is echoed into the output
directory for provenance.  Exit codes: 0 success, 1 check failure,
2 usage error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from pdwg.harness import (
    run_benchmark_tables,
    run_convergence,
    run_noise_study,
    solve_single,
)
from pdwg.linsolve import SingularSystem
from pdwg.polyspace import DEFAULT_EDGE_POINTS, DEFAULT_TRI_DEGREE
from pdwg.problems import DEFAULT_NOISE_SEED, case_configs, catalog

OUTPUT_DIR_ENV = "PDWG_OUTPUT_DIR"

_DEFAULTS = {
    "problem": "sinsin",
    "case": "case1",
    "n": 16,
    "n_list": [1, 2, 4, 8, 16, 32],
    "amplitudes": [0.0, 0.005, 0.01, 0.05],
    "seed": DEFAULT_NOISE_SEED,
    "quadrature_degree": DEFAULT_TRI_DEGREE,
    "out": None,
    "plan": None,
    "diagnostics": False,
}


class UsageError(Exception):
    pass


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdwg",
        description="Primal-dual weak Galerkin solver for the elliptic Cauchy problem",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--problem", help="problem name (see `catalog`)")
        p.add_argument("--case", help="boundary configuration name")
        p.add_argument("--out", "-o", help=f"output directory (default ${OUTPUT_DIR_ENV} or ./pdwg_out)")
        p.add_argument("--quadrature-degree", type=int, dest="quadrature_degree",
                       help="triangle quadrature exactness degree override")
        p.add_argument("--diagnostics", action="store_true", default=None,
                       help="print factorization diagnostics")

    p = sub.add_parser("solve", help="solve one configuration, write snapshot + error report")
    common(p)
    p.add_argument("--n", type=int, help="subdivision parameter")

    p = sub.add_parser("converge", help="run a convergence study, write the table CSV")
    common(p)
    p.add_argument("--n-list", dest="n_list", help="comma-separated mesh parameters")
    p.add_argument("--plan", choices=["benchmark"],
                   help="regenerate every benchmark table instead of a single study")

    p = sub.add_parser("noise", help="run the boundary-data noise study")
    common(p)
    p.add_argument("--n", type=int, help="subdivision parameter")
    p.add_argument("--amplitudes", help="comma-separated noise amplitudes (include 0)")
    p.add_argument("--seed", type=int, help="noise PRNG seed")

    p = sub.add_parser("verify", help="run the algebraic identity checks")
    common(p)
    p.add_argument("--seed", type=int, help="seed for the random multiplier draws")
    return parser


def _effective_config(args: argparse.Namespace) -> dict:
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if isinstance(cfg["n_list"], str):
        cfg["n_list"] = _parse_int_list(cfg["n_list"])
    if isinstance(cfg["amplitudes"], str):
        cfg["amplitudes"] = _parse_float_list(cfg["amplitudes"])
    if cfg["out"] is None:
        cfg["out"] = os.environ.get(OUTPUT_DIR_ENV, "pdwg_out")
    return cfg


def _validate_names(cfg: dict) -> None:
    if cfg["problem"] not in catalog():
        raise UsageError(f"unknown problem {cfg['problem']!r}; known: {sorted(catalog())}")
    if cfg["case"] not in case_configs():
        raise UsageError(f"unknown case {cfg['case']!r}; known: {sorted(case_configs())}")


def _prepare_out(cfg: dict, command: str) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    echo = {"command": command, **{k: v for k, v in cfg.items()}}
    (out / "config.json").write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    return out


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        cfg = _effective_config(args)
        command = args.command
        if command in ("solve", "converge", "noise"):
            _validate_names(cfg)
        out = _prepare_out(cfg, command)
        deg = cfg["quadrature_degree"]
        edge_points = max(DEFAULT_EDGE_POINTS, (deg + 2) // 2)

        if command == "solve":
            solution, report, snapshot = solve_single(
                cfg["problem"], cfg["case"], cfg["n"], deg, edge_points
            )
            (out / "solution_nodes.csv").write_text(snapshot.nodes_csv(), encoding="utf-8")
            (out / "solution_elements.csv").write_text(snapshot.elements_csv(), encoding="utf-8")
            lines = ["norm,value"] + [f"{k},{v:.12e}" for k, v in report.as_dict().items()]
            (out / "errors.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
            print(f"solved {cfg['problem']}/{cfg['case']} at n={cfg['n']}")
            for k, v in report.as_dict().items():
                print(f"  {k:9s} {v:.6e}")
            if cfg["diagnostics"]:
                pr = solution.pivot_report
                print(f"  residual_inf {solution.residual_inf:.3e}  "
                      f"min_pivot {pr.min_pivot:.3e}  pivot_ratio {pr.ratio:.3e}")
            return 0

        if command == "converge":
            if cfg["plan"] == "benchmark":
                written = run_benchmark_tables(out, cfg["n_list"], deg, edge_points)
                print(f"wrote {len(written)} files to {out}")
                return 0
            table = run_convergence(cfg["problem"], cfg["case"], cfg["n_list"], deg, edge_points)
            path = out / f"{cfg['problem']}_{cfg['case']}.csv"
            path.write_text(table.to_csv(), encoding="utf-8")
            print(table.to_csv(), end="")
            failures = [r for r in table.rows if r.report is None]
            if failures:
                for r in failures:
                    print(f"solver failure at n={r.n}: {r.error}", file=sys.stderr)
                return 3
            return 0

        if command == "noise":
            if 0.0 not in cfg["amplitudes"]:
                raise UsageError("amplitude list must include 0")
            study = run_noise_study(
                cfg["problem"], cfg["case"], cfg["n"], cfg["amplitudes"],
                cfg["seed"], deg, edge_points,
            )
            for row in study.rows:
                tag = f"a{row.amplitude:g}".replace(".", "p")
                if row.snapshot is None:
                    print(f"solver failure at amplitude {row.amplitude}: {row.error}",
                          file=sys.stderr)
                    continue
                (out / f"noise_{tag}_nodes.csv").write_text(
                    row.snapshot.nodes_csv(), encoding="utf-8")
                (out / f"noise_{tag}_elements.csv").write_text(
                    row.snapshot.elements_csv(), encoding="utf-8")
            (out / "noise_summary.csv").write_text(study.summary_csv(), encoding="utf-8")
            print(study.summary_csv(), end="")
            if any(r.report is None for r in study.rows):
                return 3
            return 0

        if command == "verify":
            from pdwg.verify import run_standard_checks

            report = run_standard_checks(seed=cfg["seed"])
            for line in report.lines():
                print(line)
            return 0 if report.ok else 1

    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SingularSystem as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
