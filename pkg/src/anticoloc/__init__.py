"""VM placement with per-VM disk anti-colocation.

Core pieces: a typed domain model with the published type catalogs, a
complete disk-assignment feasibility checker, per-PM configuration
enumeration, three MIP formulations (direct, configuration-based, hybrid)
with exact size accounting and MPS export, a small exact MIP solver, and
the randomized greedy placement baseline.
"""

from anticoloc.model import (
    Catalog,
    Instance,
    ModelError,
    PmRef,
    PmType,
    Policy,
    VmRef,
    VmType,
    builtin_catalog,
    large_pm_policy,
    load_instance,
    preset_instance,
)

__all__ = [
    "Catalog",
    "Instance",
    "ModelError",
    "PmRef",
    "PmType",
    "Policy",
    "VmRef",
    "VmType",
    "builtin_catalog",
    "large_pm_policy",
    "load_instance",
    "preset_instance",
]
