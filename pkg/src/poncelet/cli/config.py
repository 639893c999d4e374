"""Run configuration: defaults < ``key = value`` file < command-line flags."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

FORMATS = ("csv", "json", "svg")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    a1sq: float = 4.0
    a2sq: float = 1.0
    lambda_gamma: float = 0.0
    n: int = 5
    k: int = 1
    x0: float = 0.0
    resolution: int = 4096
    seed: int = 42
    out_dir: str = "out"
    format: tuple = FORMATS
    perturb: float = 0.0
    lambda_caustic: float | None = None
    lambdas: tuple | None = None
    samples: int = 0  # 0 means "command default"
    length: float | None = None
    tolerances: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        """Plain values for reports; ``out_dir`` is left out so output does not depend on location."""
        out = {}
        for f in fields(self):
            if f.name == "out_dir":
                continue
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else (dict(sorted(v.items())) if isinstance(v, dict) else v)
        return out


_KEYS = {f.name for f in fields(RunConfig)} - {"tolerances"}


def _as_float(key, raw):
    try:
        v = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite")
    return v


def _as_int(key, raw):
    try:
        f = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if not f.is_integer():
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")
    return int(f)


def _coerce(key: str, raw):
    if key in ("a1sq", "a2sq", "lambda_gamma", "x0", "perturb"):
        return _as_float(key, raw)
    if key in ("lambda_caustic", "length"):
        return None if raw in (None, "", "none") else _as_float(key, raw)
    if key in ("n", "k", "resolution", "seed", "samples"):
        return _as_int(key, raw)
    if key == "out_dir":
        return str(raw)
    if key == "format":
        items = raw if isinstance(raw, (list, tuple)) else str(raw).split(",")
        items = tuple(dict.fromkeys(s.strip().lower() for s in items if s.strip()))
        bad = [s for s in items if s not in FORMATS]
        if bad or not items:
            raise ConfigError(f"format: unknown {bad or items}; choose from {', '.join(FORMATS)}")
        return items
    if key == "lambdas":
        items = raw if isinstance(raw, (list, tuple)) else str(raw).split(",")
        return tuple(_as_float(key, s) for s in items if str(s).strip())
    raise ConfigError(f"unknown key {key!r}")


def _norm_key(key: str) -> str:
    return key.strip().replace("-", "_").lower()


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {p}: {exc}") from None
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{p}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[_norm_key(key)] = value.strip()
    return out


def build_config(file_values: dict, cli_values: dict, known_tolerances=()) -> RunConfig:
    """Merge and validate. ``tol.<name>`` keys override check tolerances."""
    merged, tols = {}, {}
    for source in (file_values, cli_values):
        for key, raw in source.items():
            if raw is None:
                continue
            key = _norm_key(key)
            if key.startswith("tol."):
                name = key[4:]
                if known_tolerances and name not in known_tolerances:
                    raise ConfigError(f"unknown tolerance {name!r}")
                v = _as_float(key, raw)
                if v < 0:
                    raise ConfigError(f"{key}: must be >= 0")
                tols[name] = v
            elif key in _KEYS:
                merged[key] = _coerce(key, raw)
            else:
                raise ConfigError(f"unknown key {key!r}")
    cfg = replace(RunConfig(), **merged, tolerances=tols)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    if not cfg.a1sq >= cfg.a2sq > 0:
        raise ConfigError(f"need a1sq >= a2sq > 0, got {cfg.a1sq}, {cfg.a2sq}")
    if not cfg.lambda_gamma > -cfg.a2sq:
        raise ConfigError("lambda_gamma must select an ellipse (> -a2sq)")
    if cfg.n < 3:
        raise ConfigError("n must be >= 3")
    if cfg.k < 1 or math.gcd(cfg.k, cfg.n) != 1 or cfg.k > (cfg.n - 1) // 2:
        raise ConfigError(f"k must satisfy 1 <= k <= (n-1)/2 and gcd(k, n) = 1, got k={cfg.k}")
    if not 0.0 <= cfg.x0 < 1.0:
        raise ConfigError("x0 must lie in [0, 1)")
    if cfg.resolution < 64 or cfg.resolution % 2:
        raise ConfigError("resolution must be even and >= 64")
    if cfg.seed < 0:
        raise ConfigError("seed must be >= 0")
    if cfg.perturb < 0:
        raise ConfigError("perturb must be >= 0")
    if cfg.samples < 0:
        raise ConfigError("samples must be >= 0")
    if cfg.lambda_caustic is not None and not -cfg.a2sq < cfg.lambda_caustic < cfg.lambda_gamma:
        raise ConfigError("lambda_caustic must lie in (-a2sq, lambda_gamma)")
    if cfg.lambdas is not None:
        for lam in cfg.lambdas:
            if not -cfg.a1sq < lam < cfg.lambda_gamma:
                raise ConfigError(f"lambdas: {lam} outside (-a1sq, lambda_gamma)")


def require_odd(cfg: RunConfig):
    if cfg.n % 2 == 0:
        raise ConfigError("grids need odd n")
