"""Primary frequency response of heavy-duty EV fleets on a single-area grid.

Library surface: grid dynamics and inertia bookkeeping (grid), fleet charging
strategies and SoC (fleet), event-triggered V1G/V2G response (controller),
fixed-step RK4 contingency simulation and experiment drivers (simulator),
frequency-security metrics (metrics), and the CSV-emitting CLI (cli).
"""

__version__ = "0.1.0"

from .controller import (
    ControlMode,
    ControllerConfig,
    EventLatch,
    detect_event,
    ev_power_command,
    soc_rate_under_command,
)
from .fleet import (
    ChargingStrategy,
    ChargingWindow,
    FleetConfig,
    FleetState,
    InfeasibleChargingWindow,
    VehicleClass,
    aggregate_profile,
    charging_power_at,
    charging_window,
    fleet_state_at,
    soc_at,
    soc_trajectory,
)
from .grid import (
    CALIFORNIA_LOW_INERTIA_MIX,
    GenerationMix,
    GenerationSource,
    GridParameters,
    GridState,
    GridStateDerivative,
    INERTIA_PRESETS,
    effective_inertia,
    grid_from_mix,
    grid_from_preset,
    load_mix_csv,
    steady_state_deviation,
    swing_derivative,
    to_per_unit,
)
from .metrics import (
    FrequencyMetrics,
    evaluate,
    nadir,
    overshoot,
    rocof,
    settling_time,
)
from .simulator import (
    DailyCell,
    DayProfile,
    DayProfileRow,
    IntegrationError,
    Scenario,
    SweepCell,
    Trajectory,
    bundled_day_profile,
    daily_nadir_scan,
    default_scenario,
    evaluate_scenarios,
    load_day_profile_csv,
    participation_sweep,
    simulate,
    synthetic_california_day,
)
