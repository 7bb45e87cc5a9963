"""Scenario files: network configuration plus channel distribution as YAML.

Schema::

    n_users: 4
    n_channels: 4
    noise: 0.025          # scalar, per-user list, or N x K nested list
    p_max: 40             # scalar or per-user list
    mask: null            # null / "inf" (unbounded), scalar, per-user list or N x K;
                          # individual entries may be null / "inf"
    gains:                # either shorthand ...
      diag: 15            #   scalar, per-user list or N x K (direct links)
      offdiag: 0.75       #   scalar (every cross link)
    # gains:              # ... or the full tensor, layout [receiver][transmitter][channel]
    #   tensor: [[[...]]]
    perturbation: 0.2     # gains uniform on (g (1 - v), g (1 + v))

Dumping always writes explicit arrays so that load(dump(s)) reproduces the
same numbers bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .channel import ChannelDistribution, ConfigError, NetworkConfig, _broadcast

__all__ = ["Scenario", "SCENARIO_PRESETS", "load_scenario", "dump_scenario", "scenario_preset"]

_KEYS = {"name", "n_users", "n_channels", "noise", "p_max", "mask", "gains", "perturbation"}


def _unbounded(x) -> bool:
    return x is None or (isinstance(x, str) and x.strip().lower() in ("inf", "+inf", "infinity"))


def _mask_array(value, shape) -> np.ndarray:
    if _unbounded(value):
        return np.full(shape, np.inf)

    def conv(v):
        if isinstance(v, list):
            return [conv(x) for x in v]
        if _unbounded(v):
            return np.inf
        if isinstance(v, str):
            raise ConfigError(f"bad mask entry {v!r}")
        return float(v)

    value = conv(value)
    if isinstance(value, list) and len(value) == shape[0] and any(isinstance(v, list) for v in value):
        # per-user rows, each a scalar or a length-K list
        try:
            value = [np.broadcast_to(np.asarray(v, dtype=float), shape[1:]) for v in value]
        except ValueError:
            raise ConfigError(f"mask rows do not fit {shape}") from None
    return _broadcast(value, shape, "mask")


def _mask_list(mask: np.ndarray):
    if np.all(np.isinf(mask)):
        return None
    return [[None if np.isinf(x) else float(x) for x in row] for row in mask]


def _number(d: dict, key: str):
    if key not in d:
        raise ConfigError(f"scenario is missing {key!r}")
    v = d[key]
    if isinstance(v, (str, bool)):
        raise ConfigError(f"{key} must be numeric, got {v!r}")
    return v


@dataclass(frozen=True, eq=False)
class Scenario:
    """A named network plus its gain distribution."""

    cfg: NetworkConfig
    dist: ChannelDistribution
    name: str = "custom"

    def __post_init__(self):
        if self.dist.n_users != self.cfg.n_users or self.dist.n_channels != self.cfg.n_channels:
            raise ConfigError("gain tensor does not match the network dimensions")

    @classmethod
    def from_dict(cls, d: dict) -> Scenario:
        if not isinstance(d, dict):
            raise ConfigError("scenario must be a mapping")
        unknown = set(d) - _KEYS
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        try:
            n, k = int(_number(d, "n_users")), int(_number(d, "n_channels"))
            if n < 1 or k < 1:
                raise ConfigError("n_users and n_channels must be positive")
            cfg = NetworkConfig.build(n, k, _number(d, "noise"), _number(d, "p_max"),
                                      _mask_array(d.get("mask"), (n, k)))
            gains = d.get("gains")
            if not isinstance(gains, dict):
                raise ConfigError("gains must be a mapping with diag/offdiag or tensor")
            v = float(d.get("perturbation", 0.0))
            if "tensor" in gains:
                if set(gains) != {"tensor"}:
                    raise ConfigError("gains.tensor cannot be mixed with shorthand keys")
                g = np.asarray(gains["tensor"], dtype=float)
                if g.shape != (n, n, k):
                    raise ConfigError(f"gains.tensor has shape {g.shape}, expected {(n, n, k)}")
            else:
                if set(gains) != {"diag", "offdiag"}:
                    raise ConfigError("gains shorthand needs exactly diag and offdiag")
                g = np.full((n, n, k), float(gains["offdiag"]))
                idx = np.arange(n)
                g[idx, idx, :] = _broadcast(gains["diag"], (n, k), "gains.diag")
            dist = ChannelDistribution(g, v)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        return cls(cfg=cfg, dist=dist, name=str(d.get("name", "custom")))

    def to_dict(self) -> dict:
        g = self.dist.mean_gains
        n = self.cfg.n_users
        idx = np.arange(n)
        off = g[~np.eye(n, dtype=bool)]
        if n > 1 and np.all(off == off.flat[0]):
            gains = {"diag": g[idx, idx, :].tolist(), "offdiag": float(off.flat[0])}
        elif n == 1:
            gains = {"diag": g[0, 0, :].tolist(), "offdiag": 0.0}
        else:
            gains = {"tensor": g.tolist()}
        return {
            "name": self.name,
            "n_users": n,
            "n_channels": self.cfg.n_channels,
            "noise": self.cfg.noise.tolist(),
            "p_max": self.cfg.p_max.tolist(),
            "mask": _mask_list(self.cfg.mask),
            "gains": gains,
            "perturbation": float(self.dist.perturbation),
        }

    def with_perturbation(self, v: float) -> Scenario:
        return Scenario(self.cfg, self.dist.with_perturbation(v), self.name)


# Direct gains of the "weak" preset: each user has a different best channel,
# cross links are weak, so the coupling matrix is positive definite on every
# realization with a 20% perturbation.
_WEAK_DIAG = 4.0 * np.array([
    [1.0, 0.8, 0.6, 0.4],
    [0.4, 1.0, 0.8, 0.6],
    [0.6, 0.4, 1.0, 0.8],
    [0.8, 0.6, 0.4, 1.0],
])

SCENARIO_PRESETS = {
    "strong": {
        "name": "strong", "n_users": 4, "n_channels": 4, "noise": 0.025, "p_max": 40.0,
        "mask": None, "gains": {"diag": 15.0, "offdiag": 0.75}, "perturbation": 0.2,
    },
    "weak": {
        "name": "weak", "n_users": 4, "n_channels": 4, "noise": 1.0, "p_max": 1.0,
        "mask": None, "gains": {"diag": _WEAK_DIAG.tolist(), "offdiag": 0.05}, "perturbation": 0.2,
    },
}


def scenario_preset(name: str) -> Scenario:
    if name not in SCENARIO_PRESETS:
        raise ConfigError(f"unknown scenario preset {name!r}; choose from {sorted(SCENARIO_PRESETS)}")
    return Scenario.from_dict(SCENARIO_PRESETS[name])


def load_scenario(path) -> Scenario:
    """Read a scenario YAML file, or a preset when ``path`` names one."""
    if str(path) in SCENARIO_PRESETS:
        return scenario_preset(str(path))
    with open(path, encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return Scenario.from_dict(data)


def dump_scenario(scn: Scenario, path) -> None:
    Path(path).write_text(yaml.safe_dump(scn.to_dict(), sort_keys=False), encoding="utf-8")
