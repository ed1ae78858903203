"""Two-cell coordinated-multipoint downlink simulator with superposed and
orthogonal access, rate-guaranteed power allocation, and Monte-Carlo sweeps."""

from .allocation import (
    EQUAL_RECEIVED,
    EQUAL_TRANSMIT,
    AllocationProblem,
    OracleResult,
    allocate_jt,
    allocate_single_cell,
    brute_force_oracle,
)
from .channel import (
    ChannelRealization,
    RadioParams,
    draw_realization,
    normalized_gain,
)
from .config import (
    PRESETS,
    ExperimentConfig,
    config_from_dict,
    config_to_dict,
    emit_defaults,
    parse_config,
)
from .core import (
    Band,
    Cell,
    NomaCluster,
    PowerAllocation,
    UserEquipment,
    comp_user_rate_jt,
    noncomp_user_rate,
    sic_feasible,
    sic_margins,
    sum_rate_single_cell,
    user_rate_single_cell,
)
from .errors import (
    ConditionViolation,
    ConfigError,
    DomainError,
    InfeasibleGuarantee,
    NonConvergence,
    ParseError,
    ValidationError,
)
from .harness import SweepResult, SweepRow, run_sweep, substream, sweep_values
from .scenarios import (
    REFERENCE_RADIO,
    PlacementSpec,
    ScenarioTopology,
    TrialResult,
    build_scenario,
    cs_oma_rates,
    oma_rates,
    run_trial,
)
from .schemes import (
    CS_NOMA,
    CS_OMA,
    DPS_NOMA,
    JT_NOMA,
    JT_OMA,
    SCHEMES,
    CompSet,
    CsBandPlan,
    build_cs_band_plan,
    dps_select_cell,
    reject_cb,
    validate_jt_conditions,
)
from .units import db_to_linear, dbm_to_mw, mw_to_dbm

__version__ = "0.1.0"

__all__ = [
    "AllocationProblem", "Band", "Cell", "ChannelRealization", "CompSet",
    "ConditionViolation", "ConfigError", "CsBandPlan", "DomainError",
    "EQUAL_RECEIVED", "EQUAL_TRANSMIT", "ExperimentConfig",
    "InfeasibleGuarantee", "NomaCluster", "NonConvergence", "OracleResult",
    "PRESETS", "ParseError", "PlacementSpec", "PowerAllocation",
    "REFERENCE_RADIO", "RadioParams", "SCHEMES", "ScenarioTopology",
    "SweepResult", "SweepRow", "TrialResult", "UserEquipment",
    "ValidationError", "allocate_jt", "allocate_single_cell",
    "brute_force_oracle", "build_cs_band_plan", "build_scenario",
    "comp_user_rate_jt", "config_from_dict", "config_to_dict",
    "cs_oma_rates", "db_to_linear", "dbm_to_mw", "dps_select_cell",
    "draw_realization", "emit_defaults", "mw_to_dbm", "noncomp_user_rate",
    "normalized_gain", "oma_rates", "parse_config", "reject_cb", "run_sweep",
    "run_trial", "sic_feasible", "sic_margins", "substream",
    "sum_rate_single_cell", "sweep_values", "user_rate_single_cell",
    "validate_jt_conditions", "CS_NOMA", "CS_OMA", "DPS_NOMA", "JT_NOMA",
    "JT_OMA",
]
