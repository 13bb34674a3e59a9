"""Run configuration: a line-oriented ``key = value`` file.

Recognized keys (all optional, defaults are the reference experiment):

    omega_S, omega_0, sigma, K, F   model constants
    p_hours                         signed whole time zones east (+) / west (-)
    n                               grid points (multiple of 24 for recovery)
    scheme                          monotone | centered
    method                          method1 | method2
    eps, eps_w, eps_z               solver / recovery tolerances
    horizon_days                    recovery-run horizon
    T_days                          finite-horizon length for the game restart
    max_iter                        overrides the active solver's default cap
    out_dir                         output directory
    subsample_hours                 stored sampling interval

Unknown keys are errors. Blank lines and ``#`` comments are allowed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .grid import OMEGA_SUN, ModelParams
from .operators import Scheme


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams)
    p_hours: int = 9
    n: int = 120
    scheme: Scheme = Scheme.CENTERED
    method: str = "method1"
    eps: float = 1e-5
    eps_w: float = 0.01
    eps_z: float = 0.2
    horizon_days: float = 20.0
    T_days: float = 100.0
    max_iter: int | None = None
    out_dir: Path = Path("out")
    subsample_hours: float = 1.0

    @property
    def p(self) -> float:
        return self.p_hours * self.model.omega_s

    def solver_max_iter(self, method: str | None = None) -> int:
        if self.max_iter is not None:
            return self.max_iter
        return {"method1": 1000, "method2": 10**6}[method or self.method]

    def mfg_max_iter(self) -> int:
        return self.max_iter if self.max_iter is not None else 500


def _parse_float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _parse_int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def parse_config_text(text: str) -> RunConfig:
    model_kv: dict[str, float] = {}
    cfg_kv: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key == "omega_S":
            model_kv["omega_s"] = _parse_float(key, raw)
        elif key in ("omega_0", "sigma", "K", "F"):
            model_kv[key] = _parse_float(key, raw)
        elif key == "p_hours":
            cfg_kv["p_hours"] = _parse_int(key, raw)
        elif key in ("n", "max_iter"):
            cfg_kv[key] = _parse_int(key, raw)
        elif key == "scheme":
            try:
                cfg_kv["scheme"] = Scheme.parse(raw)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        elif key == "method":
            method = raw.strip().lower()
            if method in ("1", "2"):
                method = f"method{method}"
            if method not in ("method1", "method2"):
                raise ConfigError(f"method: expected method1 or method2, got {raw!r}")
            cfg_kv["method"] = method
        elif key in ("eps", "eps_w", "eps_z", "horizon_days", "T_days", "subsample_hours"):
            cfg_kv[key] = _parse_float(key, raw)
        elif key == "out_dir":
            cfg_kv["out_dir"] = Path(raw)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    try:
        model = ModelParams(**model_kv)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig(model=model, **cfg_kv)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.n < 3:
        raise ConfigError(f"n must be at least 3, got {cfg.n}")
    for name in ("eps", "eps_w", "eps_z", "horizon_days", "T_days", "subsample_hours"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name} must be positive")
    if cfg.max_iter is not None and cfg.max_iter < 1:
        raise ConfigError("max_iter must be at least 1")
    if cfg.n % 24 != 0:
        # whole-time-zone trips need an integral grid rotation
        r = cfg.n * cfg.p_hours / 24.0
        if abs(r - round(r)) > 1e-9:
            raise ConfigError(
                f"n={cfg.n} with p_hours={cfg.p_hours} gives a non-integral rotation; "
                "use n a multiple of 24"
            )


SWEEPABLE = ("p", "omega_0", "sigma", "K", "F")


@dataclass(frozen=True)
class SweepSpec:
    """One swept parameter, its values, and the base configuration."""

    parameter: str
    values: tuple[float, ...]
    base: RunConfig

    def __post_init__(self):
        if self.parameter not in SWEEPABLE:
            raise ConfigError(f"sweep parameter must be one of {SWEEPABLE}, got {self.parameter!r}")
        if not self.values:
            raise ConfigError("sweep needs at least one value")


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)


def entrained_params(cfg: RunConfig) -> ModelParams:
    """Parameters with p = 0, as used by the stationary solves."""
    return replace(cfg.model, p=0.0)
