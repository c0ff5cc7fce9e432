"""Run configuration: sectioned key-value files with typed defaults.

Files use the INI syntax read by :mod:`configparser`::

    [global]
    seed = 3

    [scene-gen]
    n_scenes = 200

Every key has a default below; unknown sections or keys and values that do
not parse as the default's type raise :class:`ConfigError`.
"""
from __future__ import annotations

import configparser
import copy
import json

DEFAULTS = {
    "global": {
        "seed": 0,
    },
    "scene-gen": {
        "n_scenes": 200,
        "traj_kind": "orbit",
        "n_questions": 5,
        "min_objects": 3,
        "max_objects": 8,
        "split_ratio": 0.9,
    },
    "emulator": {
        "d": 256,
        "identity_share": 0.12,
        "spatial_share": 0.001,
        "noise_sigma": 0.01,
        "mode": "direct",
        "kappa": 0.25,
        "tau_slot": 2,
        "supersample": 16,
    },
    "extraction": {
        "k": 23,
        "method": "svd",
        "n_components": 3,
    },
    "spectral-verify": {
        "theorem1_scenes": 20,
        "theorem1_m": 12,
        "epsilons": "4,3,2,1",
        "n_perturb": 1000,
        "kyfan_graphs": 10,
        "kyfan_m": 12,
        "kyfan_trials": 500,
        "cube_m": 1500,
        "cube_tau": 0.2,
        "cube_seed": 1,
        "eig_method": "lapack",
    },
    "probe": {
        "folds": 5,
        "ridge_alpha": 1.0,
        "knn_k": 5,
    },
    "counterfactual": {
        "basis_scenes": 10000,
        "eval_scenes": 200,
        "n_questions": 9,
    },
    "steer": {
        "axis": "x",
        "alphas": "-0.3,-0.15,0.15,0.3",
        "trials_per_cell": 15,
        "noise_sigma": 0.01,
    },
    "train": {
        "lam": 1.0,
        "steps": 500,
        "lr": 0.01,
        "momentum": 0.9,
        "batch": 16,
        "n_layers": 1,
        "d": 64,
        "n_train": 100,
        "n_val": 200,
        "spatial_scale": 0.1,
        "fiedler_scale": 0.15,
        "noise_sigma": 0.02,
        "kappa": 1.0,
    },
    "sweep": {
        "lambdas": "0,0.3,1,3,9",
        "n_seeds": 4,
        "jobs": 1,
    },
}


class ConfigError(ValueError):
    """Malformed configuration file or override."""


def _coerce(section, key, raw, default):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid "
                          f"{type(default).__name__}") from None
    return raw


class RunConfig:
    """Resolved configuration: defaults, then a file, then ``section.key=value`` overrides."""

    def __init__(self, values=None):
        self.values = copy.deepcopy(DEFAULTS)
        if values:
            for sec, kv in values.items():
                for k, v in kv.items():
                    self.set(sec, k, v)

    def set(self, section, key, value):
        if section not in self.values:
            raise ConfigError(f"unknown section [{section}]")
        if key not in self.values[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        default = DEFAULTS[section][key]
        if isinstance(value, str):
            value = _coerce(section, key, value, default)
        elif isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        elif type(value) is not type(default):
            raise ConfigError(f"[{section}] {key} expects {type(default).__name__}")
        self.values[section][key] = value

    def __getitem__(self, section):
        return self.values[section]

    @property
    def seed(self) -> int:
        return self.values["global"]["seed"]

    def read_file(self, path):
        cp = configparser.ConfigParser(interpolation=None)
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        except configparser.Error as e:
            raise ConfigError(f"malformed config {path}: {e}") from None
        for sec in cp.sections():
            for k, v in cp.items(sec):
                self.set(sec, k, v)
        return self

    def apply_override(self, spec: str):
        """Apply ``section.key=value``."""
        if "=" not in spec or "." not in spec.split("=", 1)[0]:
            raise ConfigError(f"override {spec!r} is not of the form section.key=value")
        lhs, value = spec.split("=", 1)
        section, key = lhs.rsplit(".", 1)
        self.set(section.strip(), key.strip(), value)
        return self

    def to_dict(self):
        return copy.deepcopy(self.values)

    def to_ini(self) -> str:
        lines = []
        for sec, kv in self.values.items():
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {v}" for k, v in kv.items())
            lines.append("")
        return "\n".join(lines)

    def __eq__(self, other):
        return isinstance(other, RunConfig) and json.dumps(self.values, sort_keys=True) == \
            json.dumps(other.values, sort_keys=True)


def parse_floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def defaults_help() -> str:
    """Human-readable table of every default, for ``--help``."""
    out = []
    for sec, kv in DEFAULTS.items():
        out.append(f"[{sec}]")
        out.extend(f"  {k} = {v}" for k, v in kv.items())
    return "\n".join(out)
