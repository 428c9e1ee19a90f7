"""Command-line front end.

Four subcommands: simulate (one trajectory), sweep (participation grid),
daily (96-interval nadir scan), and profile (24 h fleet load). Outputs are
deterministic CSV files whose header block echoes the fully resolved run
configuration; feeding that JSON back as --config reproduces the file
byte for byte. Exit codes: 0 success, 2 config error, 3 infeasible charging
window, 4 numerical divergence.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import (
    ConfigError,
    DEFAULT_LEVELS,
    DEFAULT_MODES,
    DEFAULT_PROFILE_STEP_MIN,
    DEFAULT_STRATEGIES,
    canonical_json,
    check_sections,
    day_profile_from_value,
    day_profile_to_value,
    fleet_from_dict,
    fleet_to_dict,
    load_config_file,
    metrics_from_config,
    parse_clock_min,
    parse_h_preset,
    parse_levels,
    parse_mode,
    parse_modes,
    parse_strategies,
    parse_strategy,
    scenario_from_config,
    scenario_to_config,
    _section,
    _take,
)
from .controller import ControlMode
from .fleet import (
    ChargingStrategy,
    FleetConfig,
    InfeasibleChargingWindow,
    _day_clocks,
    charging_power_at,
    soc_at,
)
from .grid import CALIFORNIA_LOW_INERTIA_MIX
from .metrics import FrequencyMetrics
from .simulator import (
    IntegrationError,
    bundled_day_profile,
    daily_nadir_scan,
    evaluate_scenarios,
    simulate,
    sweep_grid,
)

TRAJECTORY_COLUMNS = "t_s,f_hz,p_mech_pu,p_ev_pu,mean_soc"
METRICS_COLUMNS = (
    "scenario_id,mode,participation,strategy,clock_min,"
    "nadir_hz,nadir_s,rocof_hzps,overshoot_hz,settling_s,f_ss_hz"
)
PROFILE_COLUMNS = "clock_min,per_vehicle_kw,aggregate_mw,mean_soc"


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temp file and rename; no partial file survives a failure."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(
        dir=str(path.parent) or ".", prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _header(command: str, cfg: dict) -> list[str]:
    return [f"# fleetfreq {command}", f"# config = {canonical_json(cfg)}"]


def _apply(cfg: dict, section: str, key: str, value) -> None:
    if value is None:
        return
    cfg.setdefault(section, {})
    if not isinstance(cfg[section], dict):
        raise ConfigError(f"section {section!r} must be an object")
    cfg = cfg[section]
    cfg[key] = value


def _load_cfg(args) -> dict:
    cfg = load_config_file(args.config) if args.config else {}
    check_sections(cfg)
    return cfg


def _apply_scenario_flags(cfg: dict, args) -> None:
    if getattr(args, "h_preset", None) is not None:
        h = parse_h_preset(args.h_preset)
        _apply(cfg, "grid", "h_eff_s", h)
        _apply(cfg, "grid", "s_base_mw", CALIFORNIA_LOW_INERTIA_MIX.total_power_mw)
    if getattr(args, "mix", None) is not None:
        cfg["mix"] = args.mix
    if getattr(args, "step", None) is not None:
        _apply(cfg, "event", "step_s", args.step)
    if getattr(args, "horizon", None) is not None:
        _apply(cfg, "event", "horizon_s", args.horizon)
    if getattr(args, "clock", None) is not None:
        _apply(cfg, "event", "clock_min", parse_clock_min(args.clock))


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    _apply_scenario_flags(cfg, args)
    if args.strategy is not None:
        _apply(cfg, "fleet", "strategy", parse_strategy(args.strategy).value)
    if args.mode is not None:
        _apply(cfg, "controller", "mode", parse_mode(args.mode).value)
    if args.participation is not None:
        if not 0.0 <= args.participation <= 100.0:
            raise ConfigError("participation must lie in [0, 100] percent")
        _apply(cfg, "controller", "participation", args.participation / 100.0)
    scenario = scenario_from_config(cfg)
    traj = simulate(scenario)
    lines = _header("simulate", scenario_to_config(scenario))
    lines.append(TRAJECTORY_COLUMNS)
    for i in range(len(traj)):
        lines.append(
            ",".join(
                (
                    _fmt(traj.times_s[i]),
                    _fmt(traj.frequency_hz[i]),
                    _fmt(traj.p_mech_pu[i]),
                    _fmt(traj.p_ev_pu[i]),
                    _fmt(traj.mean_soc[i]),
                )
            )
        )
    write_atomic(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.out} ({len(traj)} samples)", file=sys.stderr)
    return 0


def _metrics_row(
    scenario_id: str,
    mode: ControlMode,
    level: float,
    strategy: ChargingStrategy,
    clock_min: float,
    m: FrequencyMetrics,
) -> str:
    settling = "" if m.settling_time_s is None else _fmt(m.settling_time_s)
    return ",".join(
        (
            scenario_id,
            mode.value,
            _fmt(level),
            strategy.value,
            _fmt(clock_min),
            _fmt(m.nadir_hz),
            _fmt(m.nadir_time_s),
            _fmt(m.rocof_hz_per_s),
            _fmt(m.overshoot_hz),
            settling,
            _fmt(m.f_steady_state_hz),
        )
    )


def _cell_id(strategy: ChargingStrategy, mode: ControlMode, level: float) -> str:
    return f"{strategy.value}-{mode.value}-p{int(round(level * 100.0)):03d}"


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    _apply_scenario_flags(cfg, args)
    if args.levels is not None:
        _apply(cfg, "sweep", "levels", parse_levels(args.levels))
    if args.modes is not None:
        _apply(cfg, "sweep", "modes", [m.value for m in parse_modes(args.modes)])
    if args.strategy is not None:
        _apply(
            cfg, "sweep", "strategies", [s.value for s in parse_strategies(args.strategy)]
        )
    base = scenario_from_config(cfg)
    metric_cfg = metrics_from_config(cfg)
    sweep_defaults = {
        "levels": list(DEFAULT_LEVELS),
        "modes": [m.value for m in DEFAULT_MODES],
        "strategies": [s.value for s in DEFAULT_STRATEGIES],
    }
    sweep_cfg = _take(_section(cfg, "sweep"), sweep_defaults, "sweep")
    levels = [float(v) for v in sweep_cfg["levels"]]
    modes = [parse_mode(v) for v in sweep_cfg["modes"]]
    strategies = [parse_strategy(v) for v in sweep_cfg["strategies"]]

    scenarios = []
    for strategy in strategies:
        strat_base = replace(base, fleet=replace(base.fleet, strategy=strategy))
        scenarios.extend(sweep_grid(strat_base, levels, modes))
    results = evaluate_scenarios(scenarios, args.workers, **metric_cfg)

    echo = scenario_to_config(base)
    echo["metrics"] = metric_cfg
    echo["sweep"] = {
        "levels": levels,
        "modes": [m.value for m in modes],
        "strategies": [s.value for s in strategies],
    }
    lines = _header("sweep", echo)
    lines.append(METRICS_COLUMNS)
    i = 0
    for strategy in strategies:
        for mode in modes:
            for level in levels:
                lines.append(
                    _metrics_row(
                        _cell_id(strategy, mode, level),
                        mode,
                        level,
                        strategy,
                        base.clock_min,
                        results[i],
                    )
                )
                i += 1
    write_atomic(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.out} ({i} cells)", file=sys.stderr)
    return 0


def cmd_daily(args) -> int:
    cfg = _load_cfg(args)
    _apply_scenario_flags(cfg, args)
    if args.strategy is not None:
        _apply(cfg, "fleet", "strategy", parse_strategy(args.strategy).value)
    if args.levels is not None:
        _apply(cfg, "daily", "levels", parse_levels(args.levels))
    if args.modes is not None:
        _apply(cfg, "daily", "modes", [m.value for m in parse_modes(args.modes)])
    if args.day_profile is not None:
        _apply(cfg, "daily", "day_profile", args.day_profile)
    base = scenario_from_config(cfg)
    metric_cfg = metrics_from_config(cfg)
    daily_defaults = {
        "levels": list(DEFAULT_LEVELS),
        "modes": [m.value for m in DEFAULT_MODES],
        "day_profile": None,
    }
    daily_cfg = _take(_section(cfg, "daily"), daily_defaults, "daily")
    levels = [float(v) for v in daily_cfg["levels"]]
    modes = [parse_mode(v) for v in daily_cfg["modes"]]
    day = (
        bundled_day_profile()
        if daily_cfg["day_profile"] is None
        else day_profile_from_value(daily_cfg["day_profile"])
    )

    cells = daily_nadir_scan(day, base, levels, modes, args.workers, **metric_cfg)

    echo = scenario_to_config(base)
    echo["metrics"] = metric_cfg
    echo["daily"] = {
        "levels": levels,
        "modes": [m.value for m in modes],
        "day_profile": day_profile_to_value(day),
    }
    lines = _header("daily", echo)
    lines.append(METRICS_COLUMNS)
    strategy = base.fleet.strategy
    for cell in cells:
        cell_id = (
            f"{_cell_id(strategy, cell.mode, cell.participation)}"
            f"-m{int(round(cell.clock_min)):04d}"
        )
        lines.append(
            _metrics_row(
                cell_id,
                cell.mode,
                cell.participation,
                strategy,
                cell.clock_min,
                cell.metrics,
            )
        )
    write_atomic(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.out} ({len(cells)} cells)", file=sys.stderr)
    return 0


def cmd_profile(args) -> int:
    cfg = _load_cfg(args)
    if args.strategy is not None:
        _apply(cfg, "fleet", "strategy", parse_strategy(args.strategy).value)
    if args.step_min is not None:
        _apply(cfg, "profile", "step_min", args.step_min)
    fleet = fleet_from_dict(_section(cfg, "fleet"), FleetConfig())
    profile_cfg = _take(
        _section(cfg, "profile"), {"step_min": DEFAULT_PROFILE_STEP_MIN}, "profile"
    )
    step_min = float(profile_cfg["step_min"])
    clocks = _day_clocks(step_min)

    echo = {"fleet": fleet_to_dict(fleet), "profile": {"step_min": step_min}}
    lines = _header("profile", echo)
    lines.append(PROFILE_COLUMNS)
    for clock in clocks:
        per_vehicle = charging_power_at(clock, fleet.strategy, fleet.vehicle)
        lines.append(
            ",".join(
                (
                    _fmt(clock),
                    _fmt(per_vehicle),
                    _fmt(fleet.n_vehicles * per_vehicle / 1000.0),
                    _fmt(soc_at(clock, fleet.strategy, fleet.vehicle)),
                )
            )
        )
    write_atomic(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.out} ({len(clocks)} samples)", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fleetfreq",
        description="Primary frequency response experiments for heavy-duty EV fleets.",
    )
    parser.add_argument("--version", action="version", version=f"fleetfreq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON run configuration file")
        p.add_argument("--out", required=True, help="output CSV path")

    def scenario_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--step", type=float, help="integration step in seconds")
        p.add_argument("--horizon", type=float, help="simulation horizon in seconds")
        p.add_argument(
            "--h-preset",
            choices=("table2_reported", "table2_weighted"),
            help="named effective-inertia preset for the bundled California mix",
        )
        p.add_argument("--mix", help="generation mix CSV (source,h_seconds,power_mw)")
        p.add_argument("--clock", help="time of day, HH:MM or minutes")

    p = sub.add_parser("simulate", help="integrate one contingency scenario")
    common(p)
    scenario_flags(p)
    p.add_argument("--strategy", help="charging strategy (immediate|delayed|constant)")
    p.add_argument("--mode", help="control mode (v1g|v2g)")
    p.add_argument("--participation", type=float, help="participation in percent")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="participation sweep over strategies and modes")
    common(p)
    scenario_flags(p)
    p.add_argument("--levels", help="comma-separated participation percents")
    p.add_argument("--modes", help="comma-separated modes (v1g,v2g)")
    p.add_argument("--strategy", help="comma-separated strategies to sweep")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("daily", help="nadir scan over a 96-interval day profile")
    common(p)
    scenario_flags(p)
    p.add_argument("--strategy", help="charging strategy for the scan")
    p.add_argument("--levels", help="comma-separated participation percents")
    p.add_argument("--modes", help="comma-separated modes (v1g,v2g)")
    p.add_argument("--day-profile", help="day profile CSV (default: bundled synthetic)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_daily)

    p = sub.add_parser("profile", help="24 h fleet charging profile")
    common(p)
    p.add_argument("--strategy", help="charging strategy (immediate|delayed|constant)")
    p.add_argument("--step-min", type=float, help="profile step in minutes")
    p.set_defaults(func=cmd_profile)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"fleetfreq: config error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleChargingWindow as exc:
        print(f"fleetfreq: infeasible charging window: {exc}", file=sys.stderr)
        return 3
    except IntegrationError as exc:
        print(f"fleetfreq: integration failed: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"fleetfreq: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"fleetfreq: i/o error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
