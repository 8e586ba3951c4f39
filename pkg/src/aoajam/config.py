"""Scenario configuration files and CSV output.

Config files are flat ``key = value`` documents with ``#`` comments. Units are
part of the key name; angles are in degrees and Rician factors in dB, and both
are converted once, in :meth:`ScenarioConfig.to_scenario`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import MISSING, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .estimation import Knowledge
from .harness import JammerMode, Scenario

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "parse_config",
    "load_config",
    "emit_config",
    "format_number",
    "write_table",
    "read_table",
]


class ConfigError(ValueError):
    pass


_JAMMER_MODES = {m.value: m for m in JammerMode}
_KNOWLEDGE = {k.value: k for k in Knowledge}


@dataclass(frozen=True)
class ScenarioConfig:
    theta_t_deg: float
    theta_j_deg: float
    snr_db: float
    k_t_db: float
    k_j_db: float
    power_ratio: float
    training_length: int
    jammer_mode: str
    receiver_knowledge: str
    trials: int
    seed: int
    n_r: int = 4
    n_j: int = 4
    spacing_m: float = 0.5
    wavelength_m: float = 1.0
    grid_start_deg: float = -90.0
    grid_stop_deg: float = 90.0
    grid_step_deg: float = 0.1
    refine: bool = False
    block_fading: bool = True

    def to_scenario(self) -> Scenario:
        try:
            return Scenario(
                theta_t=math.radians(self.theta_t_deg),
                theta_j=math.radians(self.theta_j_deg),
                k_t=_db_to_linear(self.k_t_db),
                k_j=_db_to_linear(self.k_j_db),
                snr_db=self.snr_db,
                power_ratio=self.power_ratio,
                L=self.training_length,
                n_r=self.n_r,
                n_j=self.n_j,
                spacing=self.spacing_m,
                wavelength=self.wavelength_m,
                jammer_mode=_JAMMER_MODES[self.jammer_mode],
                receiver_knowledge=_KNOWLEDGE[self.receiver_knowledge],
                trials=self.trials,
                seed=self.seed,
                grid_start=math.radians(self.grid_start_deg),
                grid_stop=math.radians(self.grid_stop_deg),
                grid_step=math.radians(self.grid_step_deg),
                refine=self.refine,
                block_fading=self.block_fading,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def override(self, **kw) -> "ScenarioConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return _validated(replace(self, **kw))


def _db_to_linear(x: float) -> float:
    return math.inf if x == math.inf else 10 ** (x / 10)


_FIELDS = {f.name: f for f in fields(ScenarioConfig)}
_REQUIRED = [f.name for f in fields(ScenarioConfig) if f.default is MISSING]


def _field_kind(name: str) -> type:
    return {"int": int, "float": float, "bool": bool, "str": str}[_FIELDS[name].type]


def _convert(name: str, raw: str, where: str):
    kind = _field_kind(name)
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        text = text[1:-1]
    try:
        if kind is bool:
            if text.lower() not in ("true", "false"):
                raise ValueError
            return text.lower() == "true"
        if kind is int:
            return int(text)
        if kind is float:
            value = float(text)
            if math.isnan(value):
                raise ValueError
            return value
    except ValueError:
        raise ConfigError(f"{where}: key '{name}' expects {kind.__name__}, got {raw.strip()!r}") from None
    return text


def _validated(cfg: ScenarioConfig) -> ScenarioConfig:
    if cfg.jammer_mode not in _JAMMER_MODES:
        raise ConfigError(f"key 'jammer_mode' must be one of {sorted(_JAMMER_MODES)}, got {cfg.jammer_mode!r}")
    if cfg.receiver_knowledge not in _KNOWLEDGE:
        raise ConfigError(
            f"key 'receiver_knowledge' must be one of {sorted(_KNOWLEDGE)}, got {cfg.receiver_knowledge!r}")
    for name in ("theta_t_deg", "theta_j_deg"):
        if abs(getattr(cfg, name)) > 90:
            raise ConfigError(f"key '{name}' must lie in [-90, 90]")
    for name in ("snr_db", "power_ratio", "spacing_m", "wavelength_m", "grid_step_deg"):
        if not math.isfinite(getattr(cfg, name)):
            raise ConfigError(f"key '{name}' must be finite")
    return cfg


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"{source}:{lineno}"
        if "=" not in body:
            raise ConfigError(f"{where}: expected 'key = value', got {body!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{where}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"{where}: duplicate key '{key}'")
        values[key] = _convert(key, raw, where)
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"{source}: missing required key(s): {', '.join(missing)}")
    return _validated(ScenarioConfig(**values))


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(text, str(path))


def format_number(x) -> str:
    """Shortest text that parses back to the same double (or int)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def emit_config(cfg: ScenarioConfig) -> str:
    lines = []
    for f in fields(ScenarioConfig):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {v if isinstance(v, str) else format_number(v)}")
    return "\n".join(lines) + "\n"


def write_table(path, header: list[str], rows) -> None:
    """Writes a comma-separated table with ``\\n`` line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError("row length does not match header")
        writer.writerow([v if isinstance(v, str) else format_number(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])
