"""Run configuration: a TOML file plus command-line overrides.

Example file::

    [params]
    I = [3.0, 2.0, 1.0]
    mu_axis = 1
    mu = 1.0

    [equilibrium]
    family = "E12"
    q = 2.0
    alpha = 1.0

    [simulate]
    state = [2.0, 0.0, 0.0, 0.0, 1.0, 0.0]
    T = 50.0
    dt = 1e-3

Command-line flags always win over file values.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .gyrostat import GyrostatParams

SECTIONS = ("params", "equilibrium", "simulate", "perturb", "verify", "enumerate", "output")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (CLI exit code 2)."""


@dataclass
class RunConfig:
    params: GyrostatParams
    equilibrium: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    perturb: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    enumerate: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0


def load_file(path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {', '.join(sorted(unknown))}")
    for name, sec in data.items():
        if not isinstance(sec, dict):
            raise ConfigError(f"[{name}] must be a table")
    return data


def _float(v, what) -> float:
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a number, got {v!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{what} must be finite")
    return x


def _vec3(v, what):
    if not isinstance(v, (list, tuple)) or len(v) != 3:
        raise ConfigError(f"{what} must be a list of three numbers")
    return tuple(_float(x, what) for x in v)


def build_params(section: dict, overrides: dict) -> GyrostatParams:
    """Gyrostat parameters from the ``[params]`` table and flag overrides."""
    sec = dict(section)
    I = list(_vec3(sec.get("I", (3.0, 2.0, 1.0)), "params.I"))
    for i in range(3):
        key = f"I{i + 1}"
        if overrides.get(key) is not None:
            I[i] = _float(overrides[key], key)
        elif key in sec:
            I[i] = _float(sec[key], key)

    def pick(key, default=None):
        v = overrides.get(key)
        return sec.get(key, default) if v is None else v

    flag_axis = overrides.get("mu_axis") is not None or overrides.get("mu") is not None
    if overrides.get("mu_vec") is not None:
        mu_vec = overrides["mu_vec"]
    elif flag_axis:
        mu_vec = None
    else:
        mu_vec = sec.get("mu_vec")
        if mu_vec is not None and ("mu_axis" in sec or "mu" in sec):
            raise ConfigError("give either mu_vec or mu_axis/mu, not both")
    if mu_vec is not None:
        mu = _vec3(mu_vec, "mu_vec")
    else:
        axis = pick("mu_axis", 1)
        if isinstance(axis, bool) or axis not in (1, 2, 3):
            raise ConfigError(f"mu_axis must be 1, 2 or 3, got {axis!r}")
        mu = [0.0, 0.0, 0.0]
        mu[axis - 1] = _float(pick("mu", 1.0), "mu")
        mu = tuple(mu)
    m = _float(pick("m", 0.0), "m")
    r_G = _vec3(pick("r_G", (0.0, 0.0, 0.0)), "r_G")
    try:
        return GyrostatParams(I[0], I[1], I[2], mu, m=m, r_G=r_G)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None, overrides: dict) -> RunConfig:
    data = load_file(path) if path else {}
    params = build_params(data.get("params", {}), overrides)
    out = overrides.get("out") or data.get("output", {}).get("path")
    seed = overrides.get("seed")
    if seed is None:
        seed = data.get("verify", {}).get("seed", data.get("perturb", {}).get("seed", 0))
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
    return RunConfig(
        params=params,
        equilibrium=dict(data.get("equilibrium", {})),
        simulate=dict(data.get("simulate", {})),
        perturb=dict(data.get("perturb", {})),
        verify=dict(data.get("verify", {})),
        enumerate=dict(data.get("enumerate", {})),
        out=out,
        seed=seed,
    )
