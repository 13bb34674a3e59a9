"""Persistence of stationary solutions (versioned JSON) and CSV emission.

Arrays are written as decimal numerals with 17 significant digits, which
round-trip float64 exactly; a content hash over the numeric payload guards
against stale or hand-edited files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .ergodic import Classification, ErgodicSolution
from .grid import ModelParams, make_grid
from .operators import Scheme

FORMAT_VERSION = 1


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _payload_hash(doc: dict) -> str:
    blob = json.dumps(
        {k: doc[k] for k in ("params", "n", "scheme", "method", "lambda", "mu", "U", "beta")},
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()


def solution_to_json(sol: ErgodicSolution) -> str:
    cls = sol.classification
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "stationary_solution",
        "params": {
            "omega_S": _fmt(sol.params.omega_s),
            "omega_0": _fmt(sol.params.omega_0),
            "sigma": _fmt(sol.params.sigma),
            "K": _fmt(sol.params.K),
            "F": _fmt(sol.params.F),
            "p": _fmt(sol.params.p),
        },
        "n": sol.grid.n,
        "scheme": sol.scheme.value,
        "method": sol.method,
        "outcome": sol.outcome,
        "failed_checks": list(cls.failed_checks) if cls else [],
        "iterations": sol.iterations,
        "psi": _fmt(cls.psi) if cls else None,
        "min_density": _fmt(cls.min_density) if cls else None,
        "lambda": _fmt(sol.lam),
        "mu": [_fmt(v) for v in sol.mu],
        "U": [_fmt(v) for v in sol.U],
        "beta": [_fmt(v) for v in sol.beta],
    }
    doc["content_hash"] = _payload_hash(doc)
    return json.dumps(doc, indent=1)


def save_solution(sol: ErgodicSolution, path: str | Path) -> None:
    Path(path).write_text(solution_to_json(sol), encoding="utf-8")


class SolutionFileError(ValueError):
    pass


def load_solution(path: str | Path) -> ErgodicSolution:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SolutionFileError(f"cannot read solution file {path}: {exc}") from None
    if doc.get("format_version") != FORMAT_VERSION:
        raise SolutionFileError(f"unsupported solution format {doc.get('format_version')}")
    if doc.get("content_hash") != _payload_hash(doc):
        raise SolutionFileError(f"stale or corrupted solution file {path} (hash mismatch)")
    params = ModelParams(
        omega_s=float(doc["params"]["omega_S"]),
        omega_0=float(doc["params"]["omega_0"]),
        sigma=float(doc["params"]["sigma"]),
        K=float(doc["params"]["K"]),
        F=float(doc["params"]["F"]),
        p=float(doc["params"]["p"]),
    )
    grid = make_grid(int(doc["n"]))
    sol = ErgodicSolution(
        grid=grid,
        params=params,
        scheme=Scheme.parse(doc["scheme"]),
        method=doc["method"],
        mu=np.array([float(v) for v in doc["mu"]]),
        U=np.array([float(v) for v in doc["U"]]),
        lam=float(doc["lambda"]),
        beta=np.array([float(v) for v in doc["beta"]]),
        iterations=int(doc["iterations"]),
        criteria_met=doc["outcome"] != "not_converged",
        classification=Classification(
            outcome=doc["outcome"],
            psi=float(doc["psi"]),
            min_density=float(doc["min_density"]),
            failed_checks=tuple(doc.get("failed_checks", ())),
        ),
    )
    return sol


def _row(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def write_path_csv(path_obj, out_path: str | Path) -> None:
    """One row per stored slice: t_hours, density at each grid point."""
    n = path_obj.densities.shape[1]
    lines = ["t_hours," + ",".join(f"phi_{j}" for j in range(n))]
    for t, row in zip(path_obj.times(), path_obj.densities):
        lines.append(repr(float(t)) + "," + _row(row))
    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_controls_csv(path_obj, out_path: str | Path) -> None:
    """Per-slice controls of a finite-horizon solve."""
    n = path_obj.controls.shape[1]
    lines = ["t_hours," + ",".join(f"phi_{j}" for j in range(n))]
    for t, row in zip(path_obj.times(), path_obj.controls):
        lines.append(repr(float(t)) + "," + _row(row))
    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_z_csv(report, out_path: str | Path) -> None:
    lines = ["t_hours,re_z,im_z"]
    for t, z in zip(report.times(), report.z):
        lines.append(f"{float(t)!r},{z.real!r},{z.imag!r}")
    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_trace_csv(report, out_path: str | Path) -> None:
    lines = ["t_hours,f_alpha,f_osc,f_sun,f_total"]
    for t, fa, fo, fs, ft in zip(
        report.times(), report.trace_alpha, report.trace_osc,
        report.trace_sun, report.trace_total,
    ):
        lines.append(f"{float(t)!r},{fa!r},{fo!r},{fs!r},{ft!r}")
    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def report_to_json(report, eps_w: float, eps_z: float) -> str:
    doc = {
        "p_radians": report.p,
        "sample_hours": report.dt,
        "eps_w": eps_w,
        "eps_z": eps_z,
        "tau_w_hours": report.tau_w_hours,
        "tau_z_hours": report.tau_z_hours,
        "f_alpha_costhours": report.f_alpha,
        "f_osc_costhours": report.f_osc,
        "f_sun_costhours": report.f_sun,
        "f_total_costhours": report.f_total,
    }
    return json.dumps(doc, indent=1)
