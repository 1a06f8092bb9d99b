"""Scale schedules, block grids and the multiscale coupling diagnostics."""
from .audit import (BlockRecord, DominatingField, MultiscaleAudit, SandwichResult,
                    check_sandwich, compute_dominating_field, measurability_check)
from .blocks import BlockGrid, region_enlarge
from .chains import brute_force_chain, detect_propagating_chain, max_chain_in
from .cover import cover_bad_blocks, cover_violations
from .schedule import ScaleSchedule, ScaleValues, schedule_values

__all__ = [
    "BlockGrid", "BlockRecord", "DominatingField", "MultiscaleAudit", "SandwichResult",
    "ScaleSchedule", "ScaleValues", "brute_force_chain", "check_sandwich",
    "compute_dominating_field", "cover_bad_blocks", "cover_violations",
    "detect_propagating_chain", "max_chain_in", "measurability_check", "region_enlarge",
    "schedule_values",
]
