"""Experiment configuration: one INI file shared by every subcommand.

Example::

    [system]
    tbp = 16
    swerling = swerling0
    grid_points_per_sample = 64
    n0 = 1.0
    trials = 1500
    seed = 42
    range_fraction = 0.8

    [sweep]
    snr_start = -5
    snr_stop = 20
    snr_step = 1

    [theorem]
    snr_db = 10
    m_values = 8, 32, 128
    epsilons = 0.3, 0.5
    trials = 1000
    ref_trials = 10000

Every key is optional; missing ones take the defaults above. Errors name the
file, line and field.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from rangeinfo.errors import ConfigError
from rangeinfo.signal_model import Swerling, SystemConfig


@dataclass(frozen=True)
class SweepSettings:
    snr_start: float = -5.0
    snr_stop: float = 20.0
    snr_step: float = 1.0

    def __post_init__(self):
        if not self.snr_step > 0:
            raise ValueError("snr_step must be positive")
        if self.snr_stop < self.snr_start:
            raise ValueError("snr_stop must not be below snr_start")

    @property
    def snr_db(self) -> np.ndarray:
        count = int(round((self.snr_stop - self.snr_start) / self.snr_step)) + 1
        return np.round(self.snr_start + self.snr_step * np.arange(count), 10)


@dataclass(frozen=True)
class TheoremSettings:
    snr_db: float = 10.0
    m_values: tuple[int, ...] = (8, 32, 128)
    epsilons: tuple[float, ...] = (0.3, 0.5)
    trials: int = 1000
    ref_trials: int = 10_000

    def __post_init__(self):
        if not self.m_values or any(m < 1 or m > 256 for m in self.m_values):
            raise ValueError("m_values must be a nonempty list of integers in [1, 256]")
        if not self.epsilons or any(not e > 0 for e in self.epsilons):
            raise ValueError("epsilons must be a nonempty list of positive numbers")
        if not 1 <= self.trials <= 2000:
            raise ValueError("trials must lie in [1, 2000]")
        if self.ref_trials < 10_000:
            raise ValueError("ref_trials must be at least 10000")


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    theorem: TheoremSettings = field(default_factory=TheoremSettings)
    source: str = "<defaults>"

    def with_seed(self, seed: int | None) -> "ExperimentConfig":
        if seed is None:
            return self
        try:
            system = self.system.replace(seed=seed)
        except ValueError as exc:
            raise ConfigError(f"--seed: {exc}") from None
        return ExperimentConfig(system, self.sweep, self.theorem, self.source)


def _int(text: str) -> int:
    return int(text, 0)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(",", " ").split())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


_SCHEMA = {
    "system": {
        "tbp": _int, "snr_db": float, "swerling": Swerling.parse, "grid_points_per_sample": _int,
        "n0": float, "trials": _int, "seed": _int, "range_fraction": float,
    },
    "sweep": {"snr_start": float, "snr_stop": float, "snr_step": float},
    "theorem": {"snr_db": float, "m_values": _ints, "epsilons": _floats, "trials": _int, "ref_trials": _int},
}
_BUILDERS = {"system": SystemConfig, "sweep": SweepSettings, "theorem": TheoremSettings}


def _line_of(lines: list[str], section: str, key: str | None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header if key is None)."""
    current = None
    header = re.compile(r"^\s*\[([^\]]+)\]")
    for number, line in enumerate(lines, 1):
        m = header.match(line)
        if m:
            current = m.group(1).strip().lower()
            if key is None and current == section:
                return number
            continue
        if current == section and key is not None and re.match(rf"^\s*{re.escape(key)}\s*[=:]", line, re.I):
            return number
    return None


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    lines = text.splitlines()

    def fail(section, key, msg):
        line = _line_of(lines, section, key)
        where = f"{source}:{line}" if line else source
        what = f"[{section}]" + (f" {key}" if key else "")
        raise ConfigError(f"{where}: {what}: {msg}")

    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        first = str(exc).splitlines()[0]
        raise ConfigError(f"{source}: {first}") from None

    parts = {}
    for section in parser.sections():
        if section.lower() not in _SCHEMA:
            fail(section.lower(), None, f"unknown section (expected one of {', '.join(_SCHEMA)})")
    for section, fields in _SCHEMA.items():
        values = {}
        if parser.has_section(section):
            for key, raw in parser.items(section):
                if key not in fields:
                    fail(section, key, f"unknown field (expected one of {', '.join(fields)})")
                try:
                    values[key] = fields[key](raw.strip())
                except ValueError as exc:
                    fail(section, key, f"cannot parse {raw.strip()!r}: {exc}")
        try:
            parts[section] = _BUILDERS[section](**values)
        except ValueError as exc:
            key = next((k for k in values if k in str(exc)), None)
            fail(section, key, str(exc))
    return ExperimentConfig(parts["system"], parts["sweep"], parts["theorem"], source)


def load_config(path: str | Path | None) -> ExperimentConfig:
    """Read a configuration file; ``None`` gives the defaults."""
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))
