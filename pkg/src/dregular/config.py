"""Experiment configuration: flat key-value files with one section,
spectral-grid recipes parameterized by the graph size, and validation.

Grids are written as recipes so that scans across sizes stay comparable:

    fixed:<re>:<im>        z = re + i*im
    edge:<kappa>           z = 2 + i*kappa*n^(-2/3)
    edge_scaled:<kappa>    z = 2 + i*kappa*(A*n)^(-2/3), A the edge coefficient

Several recipes may be separated by semicolons.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .kernels import edge_constant
from .samplers import MODELS

EXPERIMENTS = ("esd", "sce", "loop", "edge", "exch")

DEFAULTS = {
    "frak_c": 0.5,
    "frak_g": 0.1,
    "ell": 2,
    "model": "uniform_pairing",
    "seed": 1,
    "samples": 5,
    "kappa": 1.0,
}


class ConfigError(ValueError):
    """Invalid or unparsable experiment configuration; the message lists
    every violated invariant."""


@dataclass(frozen=True)
class ZRecipe:
    kind: str
    params: tuple

    def evaluate(self, n: int, d: int) -> complex:
        if self.kind == "fixed":
            return complex(self.params[0], self.params[1])
        if self.kind == "edge":
            return complex(2.0, self.params[0] * n ** (-2.0 / 3.0))
        if self.kind == "edge_scaled":
            return complex(2.0, self.params[0] * (edge_constant(d) * n) ** (-2.0 / 3.0))
        raise ValueError(f"unknown recipe kind {self.kind!r}")

    def label(self) -> str:
        return self.kind + ":" + ":".join(repr(p) for p in self.params)


def parse_z_recipe(text: str) -> ZRecipe:
    parts = text.strip().split(":")
    kind = parts[0]
    try:
        if kind == "fixed":
            if len(parts) != 3:
                raise ValueError
            return ZRecipe("fixed", (float(parts[1]), float(parts[2])))
        if kind in ("edge", "edge_scaled"):
            if len(parts) > 2:
                raise ValueError
            kappa = float(parts[1]) if len(parts) == 2 else 1.0
            return ZRecipe(kind, (kappa,))
    except ValueError:
        pass
    raise ConfigError(
        f"bad z recipe {text!r}; expected fixed:<re>:<im>, edge:<kappa>, or edge_scaled:<kappa>"
    )


def parse_z_grid(text: str) -> tuple:
    return tuple(parse_z_recipe(tok) for tok in text.split(";") if tok.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    n_list: tuple
    d: int
    model: str = DEFAULTS["model"]
    seed: int = DEFAULTS["seed"]
    samples: int = DEFAULTS["samples"]
    ell: int = DEFAULTS["ell"]
    frak_c: float = DEFAULTS["frak_c"]
    frak_g: float = DEFAULTS["frak_g"]
    z_grid: tuple = field(default_factory=tuple)
    kappa: float = DEFAULTS["kappa"]
    radius: int = 0
    isolation_radius: int = 0
    out: str = "results"

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "n_list": list(self.n_list),
            "d": self.d,
            "model": self.model,
            "seed": self.seed,
            "samples": self.samples,
            "ell": self.ell,
            "frak_c": self.frak_c,
            "frak_g": self.frak_g,
            "z_grid": [r.label() for r in self.z_grid],
            "kappa": self.kappa,
            "radius": self.radius,
            "isolation_radius": self.isolation_radius,
            "out": self.out,
        }


def _validate(cfg: ExperimentConfig) -> list:
    errors = []
    if cfg.name not in EXPERIMENTS:
        errors.append(f"unknown experiment {cfg.name!r}, expected one of {EXPERIMENTS}")
    if not cfg.n_list:
        errors.append("n_list must not be empty")
    if cfg.d < 3:
        errors.append(f"degree must be >= 3, got {cfg.d}")
    if cfg.model not in MODELS:
        errors.append(f"unknown model {cfg.model!r}")
    if cfg.model == "permutation" and cfg.d % 2 != 0:
        errors.append("permutation model requires even d")
    for n in cfg.n_list:
        if n <= cfg.d:
            errors.append(f"need n > d, got n={n}, d={cfg.d}")
        if (n * cfg.d) % 2 != 0:
            errors.append(f"n*d must be even, got n={n}, d={cfg.d}")
        if cfg.model == "matching" and n % 2 != 0:
            errors.append(f"matching model requires even n, got n={n}")
    if cfg.samples < 1:
        errors.append("samples must be >= 1")
    if cfg.ell < 1:
        errors.append("ell must be >= 1")
    if not 0.0 < cfg.frak_c < 1.0:
        errors.append("frak_c must lie in (0, 1)")
    if not 0.0 < cfg.frak_g < 1.0:
        errors.append("frak_g must lie in (0, 1)")
    for recipe in cfg.z_grid:
        for n in cfg.n_list:
            if n <= cfg.d or cfg.d < 3:
                continue
            z = recipe.evaluate(n, cfg.d)
            eta_min = n ** (-1.0 + cfg.frak_g)
            if z.imag < eta_min:
                errors.append(
                    f"recipe {recipe.label()} at n={n} gives Im z = {z.imag:.3e} below the "
                    f"spectral-domain floor n^(-1+frak_g) = {eta_min:.3e}"
                )
    return errors


def make_config(**kwargs) -> ExperimentConfig:
    """Build and validate a config from keyword values."""
    if "z_grid" in kwargs and isinstance(kwargs["z_grid"], str):
        kwargs["z_grid"] = parse_z_grid(kwargs["z_grid"])
    if "n_list" in kwargs:
        kwargs["n_list"] = tuple(int(v) for v in kwargs["n_list"])
    cfg = ExperimentConfig(**kwargs)
    errors = _validate(cfg)
    if errors:
        raise ConfigError("; ".join(errors))
    return cfg


_INT_KEYS = ("d", "seed", "samples", "ell", "radius", "isolation_radius")
_FLOAT_KEYS = ("frak_c", "frak_g", "kappa")


def parse_config(path) -> ExperimentConfig:
    """Read an experiment config file ([experiment] section, flat keys)."""
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if "experiment" not in parser:
        raise ConfigError(f"{path}: missing [experiment] section")
    section = parser["experiment"]
    kwargs = {}
    errors = []
    for key, raw in section.items():
        raw = raw.strip()
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(raw)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(raw)
            elif key == "n_list":
                kwargs[key] = tuple(int(tok) for tok in raw.replace(",", " ").split())
            elif key == "n":
                kwargs["n_list"] = (int(raw),)
            elif key == "z_grid":
                kwargs[key] = parse_z_grid(raw)
            elif key in ("name", "model", "out"):
                kwargs[key] = raw
            else:
                errors.append(f"unknown key {key!r}")
        except (ValueError, ConfigError) as exc:
            errors.append(f"bad value for {key!r}: {exc}")
    if "name" not in kwargs:
        errors.append("missing required key 'name'")
    if "n_list" not in kwargs:
        errors.append("missing required key 'n_list' (or 'n')")
    if "d" not in kwargs:
        errors.append("missing required key 'd'")
    if errors:
        raise ConfigError(f"{path}: " + "; ".join(errors))
    try:
        return make_config(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
