"""Run configuration: JSON schema, defaults, and round-trip serialization.

Every output file echoes its fully resolved configuration in the header so a
run can be reproduced from the output alone. The loader accepts the same
shape back, with omitted keys falling back to the documented defaults.
"""

from __future__ import annotations

import json
from pathlib import Path

from .controller import ControlMode, ControllerConfig
from .fleet import ChargingStrategy, FleetConfig, VehicleClass
from .grid import (
    GenerationMix,
    GenerationSource,
    GridParameters,
    INERTIA_PRESETS,
    grid_from_preset,
    load_mix_csv,
)
from .metrics import (
    DEFAULT_ROCOF_WINDOW_S,
    DEFAULT_SETTLING_BAND_HZ,
    DEFAULT_TAIL_FRACTION,
)
from .simulator import (
    DAY_PROFILE_HEADER,
    DayProfile,
    DayProfileRow,
    Scenario,
    _mix_from_day_values,
    load_day_profile_csv,
)

DEFAULT_LEVELS = [0.2, 0.4, 0.6, 0.8, 1.0]
DEFAULT_MODES = [ControlMode.V1G, ControlMode.V2G]
DEFAULT_STRATEGIES = [
    ChargingStrategy.IMMEDIATE,
    ChargingStrategy.DELAYED,
    ChargingStrategy.CONSTANT_MINIMUM_POWER,
]
DEFAULT_PROFILE_STEP_MIN = 15.0


class ConfigError(ValueError):
    """A configuration file or flag value is invalid."""


def parse_clock_min(value) -> float:
    """Accept minutes-since-midnight or an HH:MM string."""
    if isinstance(value, str):
        parts = value.split(":")
        if len(parts) != 2:
            raise ConfigError(f"bad clock {value!r}: expected HH:MM or minutes")
        try:
            hours, minutes = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ConfigError(f"bad clock {value!r}: {exc}") from exc
        if not (0 <= hours < 24 and 0 <= minutes < 60):
            raise ConfigError(f"bad clock {value!r}: out of range")
        return 60.0 * hours + float(minutes)
    clock = float(value)
    if not 0.0 <= clock < 1440.0:
        raise ConfigError(f"clock {clock:g} outside [0, 1440) minutes")
    return clock


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _take(section: dict, known: dict, where: str) -> dict:
    """Overlay section onto known defaults, rejecting unknown keys."""
    merged = dict(known)
    for key, value in section.items():
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in {where}")
        merged[key] = value
    return merged


def _section(cfg: dict, name: str) -> dict:
    value = cfg.get(name, {})
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be an object")
    return value


# ---------------------------------------------------------------------------
# section <-> object


def grid_to_dict(grid: GridParameters) -> dict:
    return {
        "h_eff_s": grid.h_eff_s,
        "s_base_mw": grid.s_base_mw,
        "f_nominal_hz": grid.f_nominal_hz,
        "damping_pu": grid.damping_pu,
        "droop_pu": grid.droop_pu,
        "t_governor_s": grid.t_governor_s,
        "t_turbine_s": grid.t_turbine_s,
        "t_ev_s": grid.t_ev_s,
    }


def grid_from_dict(section: dict, base: GridParameters) -> GridParameters:
    merged = _take(section, grid_to_dict(base), "grid")
    try:
        return GridParameters(**{k: float(v) for k, v in merged.items()})
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc


def vehicle_to_dict(vehicle: VehicleClass) -> dict:
    return {
        "battery_kwh": vehicle.battery_kwh,
        "charger_kw": vehicle.charger_kw,
        "discharge_kw": vehicle.discharge_kw,
        "soc_return": vehicle.soc_return,
        "soc_reserve": vehicle.soc_reserve,
        "shift_start_min": vehicle.shift_start_min,
        "shift_end_min": vehicle.shift_end_min,
        "charging_efficiency": vehicle.charging_efficiency,
    }


def vehicle_from_dict(section: dict, base: VehicleClass) -> VehicleClass:
    merged = _take(section, vehicle_to_dict(base), "fleet.vehicle")
    for key in ("shift_start_min", "shift_end_min"):
        merged[key] = parse_clock_min(merged[key])
    try:
        return VehicleClass(**{k: float(v) for k, v in merged.items()})
    except ValueError as exc:
        raise ConfigError(f"fleet.vehicle: {exc}") from exc


def fleet_to_dict(fleet: FleetConfig) -> dict:
    return {
        "n_vehicles": fleet.n_vehicles,
        "strategy": fleet.strategy.value,
        "vehicle": vehicle_to_dict(fleet.vehicle),
    }


def fleet_from_dict(section: dict, base: FleetConfig) -> FleetConfig:
    merged = _take(section, fleet_to_dict(base), "fleet")
    vehicle_section = merged["vehicle"]
    vehicle = (
        vehicle_section
        if isinstance(vehicle_section, VehicleClass)
        else vehicle_from_dict(vehicle_section, base.vehicle)
    )
    try:
        return FleetConfig(
            n_vehicles=int(merged["n_vehicles"]),
            strategy=parse_strategy(merged["strategy"]),
            vehicle=vehicle,
        )
    except ValueError as exc:
        raise ConfigError(f"fleet: {exc}") from exc


def controller_to_dict(controller: ControllerConfig) -> dict:
    return {
        "threshold_hz": controller.threshold_hz,
        "participation": controller.participation,
        "mode": controller.mode.value,
        "latch_on": controller.latch_on,
        "v2g_includes_shed": controller.v2g_includes_shed,
    }


def controller_from_dict(section: dict, base: ControllerConfig) -> ControllerConfig:
    merged = _take(section, controller_to_dict(base), "controller")
    try:
        return ControllerConfig(
            threshold_hz=float(merged["threshold_hz"]),
            participation=float(merged["participation"]),
            mode=parse_mode(merged["mode"]),
            latch_on=bool(merged["latch_on"]),
            v2g_includes_shed=bool(merged["v2g_includes_shed"]),
        )
    except ValueError as exc:
        raise ConfigError(f"controller: {exc}") from exc


def event_to_dict(scenario: Scenario) -> dict:
    return {
        "disturbance_mw": scenario.disturbance_mw,
        "event_time_s": scenario.event_time_s,
        "clock_min": scenario.clock_min,
        "horizon_s": scenario.horizon_s,
        "step_s": scenario.step_s,
    }


def mix_to_value(mix: GenerationMix | None):
    if mix is None:
        return None
    return [
        {"source": s.name, "h_seconds": s.inertia_s, "power_mw": s.power_mw}
        for s in mix.sources
    ]


def mix_from_value(value) -> GenerationMix | None:
    if value is None:
        return None
    if isinstance(value, str):
        try:
            return load_mix_csv(value)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"mix: {exc}") from exc
    if not isinstance(value, list):
        raise ConfigError("mix must be null, a CSV path, or a list of sources")
    sources = []
    for i, entry in enumerate(value, start=1):
        entry = _take(
            entry, {"source": None, "h_seconds": None, "power_mw": None}, f"mix[{i}]"
        )
        try:
            sources.append(
                GenerationSource(
                    str(entry["source"]),
                    float(entry["h_seconds"]),
                    float(entry["power_mw"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"mix[{i}]: {exc}") from exc
    try:
        return GenerationMix(tuple(sources))
    except ValueError as exc:
        raise ConfigError(f"mix: {exc}") from exc


def metrics_to_dict(rocof_window_s, settling_band_hz, tail_fraction) -> dict:
    return {
        "rocof_window_s": rocof_window_s,
        "settling_band_hz": settling_band_hz,
        "tail_fraction": tail_fraction,
    }


DEFAULT_METRICS = metrics_to_dict(
    DEFAULT_ROCOF_WINDOW_S, DEFAULT_SETTLING_BAND_HZ, DEFAULT_TAIL_FRACTION
)


def day_profile_to_value(day: DayProfile) -> list[dict]:
    rows = []
    for row in day.rows:
        by_name = {f"{s.name}_mw": s.power_mw for s in row.mix.sources}
        entry = {"clock_min": row.clock_min}
        entry.update({col: by_name[col] for col in DAY_PROFILE_HEADER[1:]})
        rows.append(entry)
    return rows


def day_profile_from_value(value) -> DayProfile:
    if isinstance(value, str):
        try:
            return load_day_profile_csv(value)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"day_profile: {exc}") from exc
    if not isinstance(value, list):
        raise ConfigError("day_profile must be a CSV path or a list of rows")
    rows = []
    for i, entry in enumerate(value, start=1):
        known = {col: None for col in DAY_PROFILE_HEADER}
        entry = _take(entry, known, f"day_profile[{i}]")
        try:
            clock = float(entry["clock_min"])
            values = {col: float(entry[col]) for col in DAY_PROFILE_HEADER[1:]}
            rows.append(DayProfileRow(clock, _mix_from_day_values(values)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"day_profile[{i}]: {exc}") from exc
    try:
        return DayProfile(tuple(rows))
    except ValueError as exc:
        raise ConfigError(f"day_profile: {exc}") from exc


# ---------------------------------------------------------------------------
# parsing helpers


def parse_strategy(value) -> ChargingStrategy:
    try:
        return ChargingStrategy(str(value).strip().lower())
    except ValueError:
        valid = ", ".join(s.value for s in ChargingStrategy)
        raise ConfigError(f"unknown strategy {value!r} (valid: {valid})") from None


def parse_mode(value) -> ControlMode:
    try:
        return ControlMode(str(value).strip().lower())
    except ValueError:
        valid = ", ".join(m.value for m in ControlMode)
        raise ConfigError(f"unknown mode {value!r} (valid: {valid})") from None


def parse_levels(text: str) -> list[float]:
    """Comma-separated participation percentages, e.g. '20,40,60,80,100'."""
    levels = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            pct = float(part)
        except ValueError as exc:
            raise ConfigError(f"bad participation level {part!r}") from exc
        if not 0.0 <= pct <= 100.0:
            raise ConfigError(f"participation level {pct:g} outside [0, 100] percent")
        levels.append(pct / 100.0)
    if not levels:
        raise ConfigError("no participation levels given")
    return levels


def parse_modes(text: str) -> list[ControlMode]:
    modes = [parse_mode(part) for part in text.split(",") if part.strip()]
    if not modes:
        raise ConfigError("no modes given")
    return modes


def parse_strategies(text: str) -> list[ChargingStrategy]:
    strategies = [parse_strategy(part) for part in text.split(",") if part.strip()]
    if not strategies:
        raise ConfigError("no strategies given")
    return strategies


def parse_h_preset(name: str) -> float:
    if name not in INERTIA_PRESETS:
        valid = ", ".join(sorted(INERTIA_PRESETS))
        raise ConfigError(f"unknown inertia preset {name!r} (valid: {valid})")
    return INERTIA_PRESETS[name]


def load_config_file(path: str | Path) -> dict:
    try:
        with Path(path).open(encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return cfg


# ---------------------------------------------------------------------------
# full scenario resolution


KNOWN_SECTIONS = {
    "grid",
    "mix",
    "fleet",
    "controller",
    "event",
    "metrics",
    "sweep",
    "daily",
    "profile",
}


def check_sections(cfg: dict) -> None:
    for key in cfg:
        if key not in KNOWN_SECTIONS:
            raise ConfigError(f"unknown config section {key!r}")


def scenario_from_config(cfg: dict) -> Scenario:
    """Build the base scenario from a config dict, defaults applied."""
    check_sections(cfg)
    base_grid = grid_from_preset("table2_reported")
    grid = grid_from_dict(_section(cfg, "grid"), base_grid)
    mix = mix_from_value(cfg.get("mix"))
    fleet = fleet_from_dict(_section(cfg, "fleet"), FleetConfig())
    controller = controller_from_dict(_section(cfg, "controller"), ControllerConfig())
    event_defaults = {
        "disturbance_mw": 1800.0,
        "event_time_s": 0.0,
        "clock_min": 1200.0,
        "horizon_s": 60.0,
        "step_s": 0.01,
    }
    event = _take(_section(cfg, "event"), event_defaults, "event")
    event["clock_min"] = parse_clock_min(event["clock_min"])
    try:
        return Scenario(
            grid=grid,
            fleet=fleet,
            controller=controller,
            mix=mix,
            disturbance_mw=float(event["disturbance_mw"]),
            event_time_s=float(event["event_time_s"]),
            clock_min=event["clock_min"],
            horizon_s=float(event["horizon_s"]),
            step_s=float(event["step_s"]),
        )
    except ValueError as exc:
        raise ConfigError(f"event: {exc}") from exc


def metrics_from_config(cfg: dict) -> dict:
    merged = _take(_section(cfg, "metrics"), DEFAULT_METRICS, "metrics")
    return {k: float(v) for k, v in merged.items()}


def scenario_to_config(scenario: Scenario) -> dict:
    # The grid section echoes the resolved parameters (mix-derived inertia
    # and base included) so the header states what the run actually used;
    # feeding it back together with the mix re-derives the same values.
    return {
        "grid": grid_to_dict(scenario.resolved_grid()),
        "mix": mix_to_value(scenario.mix),
        "fleet": fleet_to_dict(scenario.fleet),
        "controller": controller_to_dict(scenario.controller),
        "event": event_to_dict(scenario),
    }
