"""Run configuration: INI-style files with per-module sections, plus CLI flags.

Configuration is flat key = value text grouped into sections; unknown sections
or keys are rejected by name so archived configs stay trustworthy. There is no
environment-variable configuration.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


# section -> key -> (type, default); None default means "no entry unless set"
_SCHEMA = {
    "run": {
        "example": (int, None),
        "order": (int, 5),
        "out": (str, "runs"),
    },
    "mesh": {
        "dx": (float, None),
        "ref_dx": (float, None),
    },
    "scheme": {
        "theta": (float, 1.3),
    },
    "time": {
        "cfl": (float, 0.5),
        "t_final": (float, None),
        "output_times": (tuple, ()),
    },
    "system": {
        "g": (float, None),
        "r": (float, None),
        "kappa": (float, None),
        "gamma": (float, None),
    },
}


@dataclass
class RunConfig:
    """Validated, fully-defaulted run settings (deterministic, seed-free)."""

    example: int | None = None
    order: int = 5
    out: str = "runs"
    dx: float | None = None
    ref_dx: float | None = None
    theta: float = 1.3
    cfl: float = 0.5
    t_final: float | None = None
    output_times: tuple = ()
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.order not in (2, 5):
            raise ConfigError(f"order must be 2 or 5, got {self.order}")
        if not 1.0 <= self.theta <= 2.0:
            raise ConfigError(f"theta must lie in [1, 2], got {self.theta}")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.example is not None and self.example not in range(1, 7):
            raise ConfigError(f"example must be 1..6, got {self.example}")
        if self.dx is not None and self.dx <= 0:
            raise ConfigError(f"dx must be positive, got {self.dx}")
        if self.t_final is not None and self.t_final <= 0:
            raise ConfigError(f"t_final must be positive, got {self.t_final}")

    def echo(self) -> dict:
        return {
            "example": self.example,
            "order": self.order,
            "out": self.out,
            "dx": self.dx,
            "ref_dx": self.ref_dx,
            "theta": self.theta,
            "cfl": self.cfl,
            "t_final": self.t_final,
            "output_times": list(self.output_times),
            "overrides": dict(self.overrides),
        }


def _convert(raw: str, typ, where: str):
    try:
        if typ is tuple:
            return tuple(float(v) for v in raw.replace(",", " ").split())
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"malformed value for {where}: {raw!r}") from exc


def parse_config(path=None, flags: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional INI file plus inline flag values.

    Flags use the flat field names of RunConfig (plus ``section.key``
    overrides) and win over file entries. Unknown keys raise, naming the key.
    """
    values: dict = {}
    overrides: dict = {}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(Path(path))
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"unknown config key {section}.{key}")
                typ, _ = _SCHEMA[section][key]
                values[key] = _convert(raw, typ, f"{section}.{key}")
                if section == "system":
                    overrides[key] = values.pop(key)
    field_names = set(RunConfig.__dataclass_fields__) - {"overrides"}
    for key, val in (flags or {}).items():
        if val is None:
            continue
        if "." in key:
            section, sub = key.split(".", 1)
            if section not in _SCHEMA or sub not in _SCHEMA[section]:
                raise ConfigError(f"unknown override key {key}")
            typ, _ = _SCHEMA[section][sub]
            parsed = _convert(str(val), typ, key)
            if section == "system":
                overrides[sub] = parsed
            else:
                values[sub] = parsed
        elif key in field_names:
            values[key] = val
        else:
            raise ConfigError(f"unknown config key {key}")
    return RunConfig(overrides=overrides, **values)
