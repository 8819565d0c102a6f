"""JSON run configuration.

Keys: ``mu, sigma, gamma, rho, eps, s0, w0, h0, T, dt, seed, paths``. A
configuration file must name the five model parameters explicitly; the
simulation keys fall back to the defaults below. With no file at all the
built-in defaults are used, including ``rho = 0.05``, which every output
records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .model import ConfigError, ModelParams
from .simulator import SimConfig

__all__ = ["DEFAULTS", "MODEL_KEYS", "RunConfig", "SIM_KEYS", "load_config", "resolve_config"]

MODEL_KEYS = ("mu", "sigma", "gamma", "rho", "eps")
SIM_KEYS = ("s0", "w0", "h0", "T", "dt", "seed", "paths")

DEFAULTS = {
    "mu": 0.05,
    "sigma": 0.15,
    "gamma": 0.01,
    "rho": 0.05,
    "eps": 0.01,
    "s0": 100.0,
    "w0": 100.0,
    "h0": None,
    "T": 10.0,
    "dt": 0.004,
    "seed": 0,
    "paths": 100,
}


@dataclass
class RunConfig:
    model: ModelParams
    sim: SimConfig
    options: dict = field(default_factory=dict)

    def config_dict(self) -> dict:
        """Resolved configuration in the input schema; feeding it back reproduces the run."""
        d = self.model.as_dict()
        d.update(
            s0=self.sim.s0, w0=self.sim.w0, h0=self.sim.h0, T=self.sim.T, dt=self.sim.dt,
            seed=self.sim.seed, paths=self.sim.n_paths,
        )
        return d

    def echo(self) -> dict:
        return {"config": self.config_dict(), "options": dict(self.options)}


def resolve_config(raw: dict | None, **overrides) -> RunConfig:
    """Validate a raw mapping (``None`` for built-in defaults) and build a :class:`RunConfig`."""
    if raw is None:
        merged = dict(DEFAULTS)
    else:
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = sorted(set(raw) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
        missing = [k for k in MODEL_KEYS if k not in raw]
        if missing:
            raise ConfigError(f"missing configuration key(s): {', '.join(missing)}")
        merged = dict(DEFAULTS)
        merged.update(raw)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    for key in ("seed", "paths"):
        value = merged[key]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer")
    for key in ("s0", "w0", "T", "dt") + (("h0",) if merged["h0"] is not None else ()):
        if isinstance(merged[key], bool) or not isinstance(merged[key], (int, float)):
            raise ConfigError(f"{key} must be a number")
    model = ModelParams(**{k: merged[k] for k in MODEL_KEYS})
    sim = SimConfig(
        s0=float(merged["s0"]),
        w0=float(merged["w0"]),
        h0=None if merged["h0"] is None else float(merged["h0"]),
        T=float(merged["T"]),
        dt=float(merged["dt"]),
        seed=merged["seed"],
        n_paths=merged["paths"],
    )
    return RunConfig(model=model, sim=sim)


def load_config(path: str | Path | None, **overrides) -> RunConfig:
    if path is None:
        return resolve_config(None, **overrides)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return resolve_config(raw, **overrides)
