"""Run configuration: INI files with sections mirroring the module names.

Sections and keys (all optional; defaults reproduce the macro-cell setup):

    [scenario]      users, cell_radius_m, min_distance_m, shadowing_db,
                    bandwidth_hz, subcarrier_hz, subcarriers, slots,
                    slot_s, temperature_k, rx_antennas
    [power]         model = affine | frenger | linear (sweep power preset)
    [affine]        p0_w, delta_p, p_sleep_w, max_tx_power_w (custom preset)
    [parameterized] pa_limit_w, eta_pa_max, theta, p_bb_w, p_rf_w,
                    feeder_loss, dc_loss, cool_loss, ac_loss, num_sectors,
                    max_tx_power_w, bandwidth_hz, delta_p, p_sleep_ref_w
    [component]     pa_points = 0:80, 10:133.27, 20:214.91   (out_w:draw_w)
                    dc_points / ac_points = 1.1:0.075, ...   (zeta:loss)
    [run]           rates, trials, seed, workers, format, output, spacing

Command-line flags override file values.  The environment variable
``GREENCELL_CONFIG`` names a default file read when ``--config`` is absent.
"""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field, replace

from .channel import Scenario
from .curves import PaCurve, TabulatedLossCurve
from .powermodel import (POWER_MODEL_PRESETS, AffineParams, ComponentConfig,
                         ParameterizedParams)

ENV_CONFIG = "GREENCELL_CONFIG"


class ConfigError(ValueError):
    """Configuration problem; the message names the offending key."""


_SUFFIX = {"k": 1e3, "m": 1e6, "g": 1e9}


def parse_rate(text: str) -> float:
    """Rate in bps; accepts scientific notation and k/M/G suffixes."""
    t = text.strip()
    mult = 1.0
    if t and t[-1].lower() in _SUFFIX:
        mult = _SUFFIX[t[-1].lower()]
        t = t[:-1]
    try:
        value = float(t) * mult
    except ValueError as exc:
        raise ConfigError(f"run.rates: cannot parse rate {text!r}") from exc
    if value <= 0:
        raise ConfigError(f"run.rates: rate {text!r} must be positive")
    return value


def parse_rate_grid(text: str, spacing: str = "linear") -> tuple[float, ...]:
    """Grid syntax ``start:stop:steps`` or a comma-separated list."""
    import numpy as np

    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"run.rates: expected start:stop:steps, got {text!r}")
        start, stop = parse_rate(parts[0]), parse_rate(parts[1])
        try:
            steps = int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"run.rates: steps {parts[2]!r} not an integer") from exc
        if steps < 1:
            raise ConfigError("run.rates: steps must be >= 1")
        if spacing == "linear":
            grid = np.linspace(start, stop, steps)
        elif spacing == "log":
            grid = np.geomspace(start, stop, steps)
        else:
            raise ConfigError(f"run.spacing: unknown spacing {spacing!r}")
        return tuple(float(g) for g in grid)
    return tuple(parse_rate(p) for p in text.split(","))


def _parse_points(text: str, key: str) -> tuple[tuple[float, float], ...]:
    pts = []
    for chunk in text.split(","):
        m = re.fullmatch(r"\s*([^:]+):([^:]+)\s*", chunk)
        if not m:
            raise ConfigError(f"{key}: expected x:y pairs, got {chunk!r}")
        pts.append((float(m.group(1)), float(m.group(2))))
    return tuple(pts)


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings for one CLI invocation."""

    scenario: Scenario = Scenario()
    power_model: str = "affine"
    affine: AffineParams | None = None          # overrides the preset
    parameterized: ParameterizedParams = field(
        default_factory=ParameterizedParams)
    component: ComponentConfig = field(default_factory=ComponentConfig)
    schemes: tuple[str, ...] = ()
    rate_grid: tuple[float, ...] = ()
    spacing: str = "linear"
    trials: int = 100
    seed: int | None = None
    workers: int = 1
    output: str | None = None
    out_format: str = "csv"
    plot: bool = False

    def validate(self) -> "RunConfig":
        if self.trials < 1:
            raise ConfigError("run.trials: must be >= 1")
        if self.workers < 1:
            raise ConfigError("run.workers: must be >= 1")
        if self.out_format not in ("csv", "json"):
            raise ConfigError(f"run.format: unknown format {self.out_format!r}")
        if self.power_model not in POWER_MODEL_PRESETS:
            raise ConfigError(f"power.model: unknown preset {self.power_model!r}")
        if any(r <= 0 for r in self.rate_grid):
            raise ConfigError("run.rates: rates must be positive")
        return self

    def resolved_items(self) -> list[tuple[str, object]]:
        """Flat key=value view for --dry-run output and logging."""
        items = [(f"scenario.{k}", v) for k, v in vars(self.scenario).items()]
        items += [
            ("power.model", self.power_model),
            ("run.schemes", ",".join(self.schemes) or "-"),
            ("run.rates", ",".join(f"{r:g}" for r in self.rate_grid) or "-"),
            ("run.spacing", self.spacing),
            ("run.trials", self.trials),
            ("run.seed", self.seed if self.seed is not None else "-"),
            ("run.workers", self.workers),
            ("run.output", self.output or "-"),
            ("run.format", self.out_format),
        ]
        return items


_SCENARIO_KEYS = {
    "users": ("num_users", int),
    "cell_radius_m": ("cell_radius_m", float),
    "min_distance_m": ("min_distance_m", float),
    "carrier_hz": ("carrier_hz", float),
    "shadowing_db": ("shadowing_db", float),
    "bandwidth_hz": ("bandwidth_hz", float),
    "subcarrier_hz": ("subcarrier_hz", float),
    "subcarriers": ("num_subcarriers", int),
    "slots": ("num_slots", int),
    "slot_s": ("slot_s", float),
    "frame_s": ("frame_s", float),
    "temperature_k": ("temperature_k", float),
    "rx_antennas": ("num_rx_antennas", int),
}


def load_config(path: str | None) -> RunConfig:
    """Read an INI file into a RunConfig; missing file with explicit path errors."""
    cfg = RunConfig()
    if path is None:
        path = os.environ.get(ENV_CONFIG)
        if path is None:
            return cfg
    if not os.path.exists(path):
        raise ConfigError(f"config: file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"config: cannot parse {path}: {exc}") from exc

    scenario_kwargs = {}
    if parser.has_section("scenario"):
        for key, raw in parser.items("scenario"):
            if key not in _SCENARIO_KEYS:
                raise ConfigError(f"scenario.{key}: unknown key")
            attr, conv = _SCENARIO_KEYS[key]
            try:
                scenario_kwargs[attr] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"scenario.{key}: bad value {raw!r}") from exc
    try:
        defaults = Scenario()
        slots = scenario_kwargs.get("num_slots", defaults.num_slots)
        slot_s = scenario_kwargs.get("slot_s", defaults.slot_s)
        scenario_kwargs.setdefault("frame_s", slots * slot_s)
        scenario = Scenario(**scenario_kwargs)
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from exc
    cfg = replace(cfg, scenario=scenario)

    if parser.has_option("power", "model"):
        cfg = replace(cfg, power_model=parser.get("power", "model"))

    if parser.has_section("affine"):
        aff_kwargs = {}
        for key, raw in parser.items("affine"):
            if key not in ("p0_w", "delta_p", "p_sleep_w", "max_tx_power_w"):
                raise ConfigError(f"affine.{key}: unknown key")
            try:
                aff_kwargs[key] = float(raw)
            except ValueError as exc:
                raise ConfigError(f"affine.{key}: bad value {raw!r}") from exc
        try:
            cfg = replace(cfg, affine=AffineParams.from_idle(**aff_kwargs))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"affine: {exc}") from exc

    if parser.has_section("parameterized"):
        par_kwargs = {}
        valid = {f for f in ParameterizedParams.__dataclass_fields__
                 if f != "supported_antennas"}
        for key, raw in parser.items("parameterized"):
            if key not in valid:
                raise ConfigError(f"parameterized.{key}: unknown key")
            conv = int if key == "num_sectors" else float
            try:
                par_kwargs[key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"parameterized.{key}: bad value {raw!r}") from exc
        try:
            cfg = replace(cfg, parameterized=ParameterizedParams(**par_kwargs))
        except ValueError as exc:
            raise ConfigError(f"parameterized: {exc}") from exc

    comp_kwargs = {}
    if parser.has_section("component"):
        for key, raw in parser.items("component"):
            if key == "pa_points":
                comp_kwargs["pa_curve"] = PaCurve(_parse_points(raw, "component.pa_points"))
            elif key == "dc_points":
                comp_kwargs["dc_loss_curve"] = TabulatedLossCurve(
                    _parse_points(raw, "component.dc_points"))
            elif key == "ac_points":
                comp_kwargs["ac_loss_curve"] = TabulatedLossCurve(
                    _parse_points(raw, "component.ac_points"))
            else:
                raise ConfigError(f"component.{key}: unknown key")
        try:
            cfg = replace(cfg, component=ComponentConfig(**comp_kwargs))
        except ValueError as exc:
            raise ConfigError(f"component: {exc}") from exc

    if parser.has_section("run"):
        get = parser.get
        updates = {}
        for key, raw in parser.items("run"):
            if key == "rates":
                updates["rate_grid"] = parse_rate_grid(
                    raw, get("run", "spacing", fallback="linear"))
            elif key == "spacing":
                updates["spacing"] = raw
            elif key == "trials":
                updates["trials"] = parser.getint("run", "trials")
            elif key == "seed":
                updates["seed"] = parser.getint("run", "seed")
            elif key == "workers":
                updates["workers"] = parser.getint("run", "workers")
            elif key == "output":
                updates["output"] = raw
            elif key == "format":
                updates["out_format"] = raw
            elif key == "schemes":
                updates["schemes"] = tuple(s.strip() for s in raw.split(","))
            else:
                raise ConfigError(f"run.{key}: unknown key")
        cfg = replace(cfg, **updates)
    return cfg
