"""Trace-driven evaluation of NVM backup strategies for intermittently powered systems."""
from .cachesim import CacheConfig, CacheStats, simulate_cache
from .controller import (
    TimingParams,
    backup_time,
    exec_time,
    nvp_backup_time,
    restore_time,
    run_controller,
)
from .energy import (
    EnergyBreakdown,
    EnergyParams,
    cache_energy,
    cycle_energy,
    decomposition_percentages,
    energy_nvm_only,
    energy_sram_nvm,
    leakage_energy,
    t_on_bound,
)
from .schedule import FailureSchedule, fixed_schedule, random_schedule
from .strategies import (
    BackupReport,
    aliveness_profile,
    dirty_bits_required,
    full_memory_backup,
    modified_address,
    modified_block,
    oracle,
    oracle_modified,
    used_address,
    verify_sufficiency,
)
from .trace import Trace, TraceEvent, footprint, gen_synthetic_trace, parse_trace

__version__ = "0.1.0"
