"""Command-line front end.

Subcommands:
    ergodic       solve the stationary game and persist the solution
    recover       run a jet-lag recovery (stationary control or game restart)
    sweep         vary one parameter, one CSV row per value and direction
    oracle-check  compare the solver against the analytic special case

Exit codes: 0 success, 2 solver did not converge, 3 converged to an invalid
solution, 4 configuration or input error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import ergodic, mathieu, metrics, mfg, recovery, solution_io
from .config import SWEEPABLE, ConfigError, RunConfig, SweepSpec, entrained_params, load_config
from .grid import make_grid, rotate_field, rotation_steps
from .operators import Scheme

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_INVALID = 3
EXIT_CONFIG = 4


def _solve_stationary(cfg: RunConfig):
    grid = make_grid(cfg.n)
    params = entrained_params(cfg)
    if cfg.method == "method1":
        return ergodic.solve_method1(
            grid, params, cfg.scheme, eps=cfg.eps, max_iter=cfg.solver_max_iter("method1")
        )
    return ergodic.solve_method2(
        grid, params, cfg.scheme, eps=cfg.eps, max_iter=cfg.solver_max_iter("method2")
    )


def _outcome_exit(outcome: str) -> int:
    return {
        "converged": EXIT_OK,
        "invalid_solution": EXIT_INVALID,
        "not_converged": EXIT_NOT_CONVERGED,
    }[outcome]


def cmd_ergodic(cfg: RunConfig) -> int:
    sol = _solve_stationary(cfg)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.out_dir / "ergodic_solution.json"
    solution_io.save_solution(sol, out)
    cls = sol.classification
    print(
        f"{sol.method} {sol.scheme.value}: {sol.outcome} after {sol.iterations} iterations; "
        f"lambda={sol.lam:.8g} psi={cls.psi:.4f} min_mu={cls.min_density:.3e} -> {out}"
    )
    return _outcome_exit(sol.outcome)


def _check_solution_matches(cfg: RunConfig, sol) -> None:
    params = entrained_params(cfg)
    if sol.grid.n != cfg.n:
        raise ConfigError(f"solution grid n={sol.grid.n} does not match config n={cfg.n}")
    for name in ("omega_s", "omega_0", "sigma", "K", "F"):
        if abs(getattr(sol.params, name) - getattr(params, name)) > 1e-12:
            raise ConfigError(
                f"solution parameter {name}={getattr(sol.params, name)} does not match config"
            )
    if sol.scheme is not cfg.scheme:
        raise ConfigError(f"solution scheme {sol.scheme.value} does not match config")


def _recovery_report(cfg: RunConfig, sol, p_hours: int, mode: str):
    p = p_hours * sol.params.omega_s
    if mode == "ergodic":
        path = recovery.run_recovery(
            sol, p, horizon_hours=cfg.horizon_days * 24.0, subsample_hours=cfg.subsample_hours
        )
        controls = path.beta_p
        converged = True
    else:
        path = mfg.solve_recovery_mfg(
            sol,
            p,
            T_hours=cfg.T_days * 24.0,
            eps=cfg.eps,
            max_iter=cfg.mfg_max_iter(),
            subsample_hours=cfg.subsample_hours,
        )
        controls = path.controls
        converged = path.converged
    grid = sol.grid
    target = rotate_field(sol.mu, rotation_steps(grid, p))
    tau_w = metrics.recovery_time_w(path, target, grid, cfg.eps_w)
    tau_z = metrics.recovery_time_z(
        path, metrics.order_parameter(sol.mu, grid), path.p, grid, cfg.eps_z
    )
    report = metrics.cost_traces(path, controls, sol.params, grid, tau_w=tau_w, tau_z=tau_z)
    return path, report, converged


def cmd_recover(cfg: RunConfig, mode: str, solution_path: str) -> int:
    sol = solution_io.load_solution(solution_path)
    _check_solution_matches(cfg, sol)
    if sol.outcome != "converged":
        raise ConfigError(f"solution file outcome is {sol.outcome}; need a converged solution")
    path, report, converged = _recovery_report(cfg, sol, cfg.p_hours, mode)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{mode}_p{cfg.p_hours:+d}"
    solution_io.write_path_csv(path, cfg.out_dir / f"{stem}_path.csv")
    solution_io.write_z_csv(report, cfg.out_dir / f"{stem}_z.csv")
    solution_io.write_trace_csv(report, cfg.out_dir / f"{stem}_costs.csv")
    (cfg.out_dir / f"{stem}_report.json").write_text(
        solution_io.report_to_json(report, cfg.eps_w, cfg.eps_z), encoding="utf-8"
    )
    if mode == "mfg":
        solution_io.write_controls_csv(path, cfg.out_dir / f"{stem}_controls.csv")
    tw = "never" if report.tau_w_hours is None else f"{report.tau_w_hours / 24:.2f} d"
    tz = "never" if report.tau_z_hours is None else f"{report.tau_z_hours / 24:.2f} d"
    print(
        f"{stem}: tau_w={tw} tau_z={tz} f_total={report.f_total:.6g}"
        + ("" if converged else " [not converged]")
    )
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


def _sweep_config(cfg: RunConfig, param: str, value: float) -> RunConfig:
    if param == "p":
        hours = int(round(value))
        if abs(value - hours) > 1e-9:
            raise ConfigError(f"p sweep values are whole time zones, got {value}")
        return replace(cfg, p_hours=abs(hours))
    model = replace(cfg.model, **{"omega_0" if param == "omega_0" else param: value})
    return replace(cfg, model=model)


def _sweep_point(args):
    cfg, mode, param, value = args
    point = _sweep_config(cfg, param, value)
    row: dict[str, object] = {"value": value}
    try:
        sol = _solve_stationary(point)
        if sol.outcome != "converged":
            raise ergodic.SolverError(sol.outcome)
        for direction, sign in (("east", 1), ("west", -1)):
            _, report, converged = _recovery_report(
                point, sol, sign * point.p_hours, mode
            )
            row[f"status_{direction}"] = "ok" if converged else "not_converged"
            row[f"tau_w_{direction}"] = report.tau_w_hours
            row[f"tau_z_{direction}"] = report.tau_z_hours
            row[f"f_alpha_{direction}"] = report.f_alpha
            row[f"f_osc_{direction}"] = report.f_osc
            row[f"f_sun_{direction}"] = report.f_sun
            row[f"f_total_{direction}"] = report.f_total
    except (ergodic.SolverError, ValueError) as exc:
        for direction in ("east", "west"):
            row.setdefault(f"status_{direction}", f"failed:{exc}")
    return row


SWEEP_COLUMNS = (
    ["value"]
    + [f"tau_w_{d}" for d in ("east", "west")]
    + [f"tau_z_{d}" for d in ("east", "west")]
    + [f"f_{kind}_{d}" for d in ("east", "west") for kind in ("alpha", "osc", "sun", "total")]
    + [f"status_{d}" for d in ("east", "west")]
)


def _sweep_cell(row: dict, col: str) -> str:
    if col.startswith("status"):
        return str(row.get(col, "failed"))
    val = row.get(col)
    if val is None:
        return "inf" if col.startswith("tau") else "nan"
    return repr(float(val))


def cmd_sweep(spec: SweepSpec, mode: str, jobs: int) -> int:
    cfg = spec.base
    tasks = [(cfg, mode, spec.parameter, v) for v in sorted(spec.values)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(_sweep_cell(row, col) for col in SWEEP_COLUMNS))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.out_dir / f"sweep_{spec.parameter}.csv"
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} rows -> {out}")
    return EXIT_OK


def cmd_oracle_check(cfg: RunConfig) -> int:
    """Solver vs analytic special case at two resolutions, plus the first-order
    consistency check when K > 0."""
    params = replace(entrained_params(cfg), K=0.0, omega_0=cfg.model.omega_s)
    errors = {}
    for n in (60, 120):
        grid = make_grid(n)
        sol = ergodic.solve_method1(grid, params, cfg.scheme, eps=cfg.eps)
        if sol.outcome != "converged":
            print(f"n={n}: solver outcome {sol.outcome}")
            return EXIT_NOT_CONVERGED
        oracle = mathieu.special_case_solution(params.F, params.sigma, grid)
        errors[n] = {
            "mu_sup": float(np.max(np.abs(sol.mu - oracle.mu_K0))),
            "lambda": abs(sol.lam - oracle.lambda_K0),
        }
        print(
            f"n={n}: |mu - oracle|_inf = {errors[n]['mu_sup']:.3e}  "
            f"|lambda - oracle| = {errors[n]['lambda']:.3e}"
        )
    ratio = errors[60]["mu_sup"] / errors[120]["mu_sup"] if errors[120]["mu_sup"] else float("inf")
    second_order = 3.0 <= ratio <= 5.0
    print(f"refinement ratio 60->120: {ratio:.2f} ({'second order' if second_order else 'UNEXPECTED'})")

    ok = second_order and errors[120]["lambda"] < 1e-4
    if cfg.model.K > 0:
        ok = _perturbation_check(cfg, params) and ok
    print("oracle check:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def _perturbation_check(cfg: RunConfig, params) -> bool:
    grid = make_grid(cfg.n)
    oracle = mathieu.special_case_solution(params.F, params.sigma, grid)
    lam1 = mathieu.perturbation_lambda1(oracle.mu_K0, grid).density_weighted
    mu1 = mathieu.perturbation_mu1(oracle, lam1, grid)
    residuals = {}
    for K in (cfg.model.K, cfg.model.K / 2):
        solK = ergodic.solve_method1(replace(params, K=K), grid, cfg.scheme, eps=cfg.eps)
        sol0 = ergodic.solve_method1(params, grid, cfg.scheme, eps=cfg.eps)
        residuals[K] = float(np.max(np.abs(solK.mu - sol0.mu - K * mu1)))
    ks = sorted(residuals)
    ratio = residuals[ks[1]] / residuals[ks[0]] if residuals[ks[0]] else float("inf")
    print(
        f"first-order consistency: residual(K={ks[1]:g}) = {residuals[ks[1]]:.3e}, "
        f"halving ratio {ratio:.2f} (quadratic ~ 4)"
    )
    return ratio > 2.5


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="circadian-mfg",
        description="Stationary and jet-lag recovery solvers for coupled circadian oscillators",
    )
    parser.add_argument("--version", action="version", version="%(prog)s 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", type=Path, default=None, help="key = value config file")

    p = sub.add_parser("ergodic", help="solve the stationary game")
    add_config(p)

    p = sub.add_parser("recover", help="run a jet-lag recovery from a saved solution")
    add_config(p)
    p.add_argument("--mode", choices=("ergodic", "mfg"), default="ergodic")
    p.add_argument("--solution", required=True, help="path to a saved stationary solution")

    p = sub.add_parser("sweep", help="vary one parameter over a list of values")
    add_config(p)
    p.add_argument("--sweep-param", required=True, choices=SWEEPABLE)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--mode", choices=("ergodic", "mfg"), default="ergodic")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("oracle-check", help="compare solver against the analytic special case")
    add_config(p)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.command == "ergodic":
            return cmd_ergodic(cfg)
        if args.command == "recover":
            return cmd_recover(cfg, args.mode, args.solution)
        if args.command == "sweep":
            try:
                values = tuple(float(v) for v in args.values.split(",") if v.strip())
            except ValueError:
                raise ConfigError(f"bad --values list: {args.values!r}") from None
            spec = SweepSpec(parameter=args.sweep_param, values=values, base=cfg)
            return cmd_sweep(spec, args.mode, args.jobs)
        if args.command == "oracle-check":
            return cmd_oracle_check(cfg)
        raise AssertionError(args.command)
    except (ConfigError, solution_io.SolutionFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ergodic.SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except ValueError as exc:
        # densities left the validity regime mid-run (e.g. centered-scheme
        # negativity beyond the floor)
        print(f"invalid solution state: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
