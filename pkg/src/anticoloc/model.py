"""Domain model: VM/PM type catalogs, placement policies, problem instances.

Memory is stored in integer MiB and disk sizes in integer GB so that all
capacity arithmetic is exact. The builtin catalog and the preset demand
and fleet mixes reproduce the published tables verbatim.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, NamedTuple

MIB_PER_GIB = 1024


class ModelError(ValueError):
    """Domain data violates an invariant (bad counts, unknown names, ...)."""


def _canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ModelError(msg)


@dataclass(frozen=True)
class VmType:
    """A VM flavor: vCPU count, memory, and one size per virtual disk."""

    name: str
    vcpus: int
    memory_mib: int
    volumes_gb: tuple[int, ...]

    def __post_init__(self) -> None:
        _require(bool(self.name), "VM type needs a name")
        _require(self.vcpus >= 1, f"{self.name}: vcpus must be >= 1")
        _require(self.memory_mib >= 1, f"{self.name}: memory must be >= 1 MiB")
        _require(len(self.volumes_gb) >= 1, f"{self.name}: needs at least one volume")
        _require(all(v >= 1 for v in self.volumes_gb), f"{self.name}: volume sizes must be >= 1 GB")

    @property
    def num_volumes(self) -> int:
        return len(self.volumes_gb)

    @property
    def total_volume_gb(self) -> int:
        return sum(self.volumes_gb)


@dataclass(frozen=True)
class PmType:
    """A PM flavor: capacities, one size per physical disk, and a fixed operation cost."""

    name: str
    vcpus: int
    memory_mib: int
    disks_gb: tuple[int, ...]
    cost: int

    def __post_init__(self) -> None:
        _require(bool(self.name), "PM type needs a name")
        _require(self.vcpus >= 1, f"{self.name}: vcpus must be >= 1")
        _require(self.memory_mib >= 1, f"{self.name}: memory must be >= 1 MiB")
        _require(len(self.disks_gb) >= 1, f"{self.name}: needs at least one disk")
        _require(all(s >= 1 for s in self.disks_gb), f"{self.name}: disk sizes must be >= 1 GB")
        _require(self.cost >= 0, f"{self.name}: cost must be >= 0")

    @property
    def num_disks(self) -> int:
        return len(self.disks_gb)

    @property
    def total_disk_gb(self) -> int:
        return sum(self.disks_gb)


@dataclass(frozen=True)
class Catalog:
    """An ordered set of VM types and PM types with unique names."""

    vm_types: tuple[VmType, ...]
    pm_types: tuple[PmType, ...]

    def __post_init__(self) -> None:
        _require(len(self.vm_types) >= 1, "catalog needs at least one VM type")
        _require(len(self.pm_types) >= 1, "catalog needs at least one PM type")
        vm_names = [t.name for t in self.vm_types]
        pm_names = [t.name for t in self.pm_types]
        _require(len(set(vm_names)) == len(vm_names), "duplicate VM type name")
        _require(len(set(pm_names)) == len(pm_names), "duplicate PM type name")

    def vm_index(self, name: str) -> int:
        for i, t in enumerate(self.vm_types):
            if t.name == name:
                return i
        raise ModelError(f"unknown VM type {name!r}")

    def pm_index(self, name: str) -> int:
        for i, t in enumerate(self.pm_types):
            if t.name == name:
                return i
        raise ModelError(f"unknown PM type {name!r}")

    def vm(self, name: str) -> VmType:
        return self.vm_types[self.vm_index(name)]

    def pm(self, name: str) -> PmType:
        return self.pm_types[self.pm_index(name)]

    def to_obj(self) -> dict[str, Any]:
        return {
            "vm_types": [
                {
                    "name": t.name,
                    "vcpus": t.vcpus,
                    "memory_mib": t.memory_mib,
                    "volumes_gb": list(t.volumes_gb),
                }
                for t in self.vm_types
            ],
            "pm_types": [
                {
                    "name": t.name,
                    "vcpus": t.vcpus,
                    "memory_mib": t.memory_mib,
                    "disks_gb": list(t.disks_gb),
                    "cost": t.cost,
                }
                for t in self.pm_types
            ],
        }

    @staticmethod
    def from_obj(obj: dict[str, Any]) -> "Catalog":
        try:
            vms = tuple(
                VmType(
                    name=str(d["name"]),
                    vcpus=int(d["vcpus"]),
                    memory_mib=int(d["memory_mib"]),
                    volumes_gb=tuple(int(v) for v in d["volumes_gb"]),
                )
                for d in obj["vm_types"]
            )
            pms = tuple(
                PmType(
                    name=str(d["name"]),
                    vcpus=int(d["vcpus"]),
                    memory_mib=int(d["memory_mib"]),
                    disks_gb=tuple(int(s) for s in d["disks_gb"]),
                    cost=int(d["cost"]),
                )
                for d in obj["pm_types"]
            )
        except (KeyError, TypeError) as exc:
            raise ModelError(f"malformed catalog object: {exc}") from exc
        return Catalog(vms, pms)

    def digest(self) -> str:
        return hashlib.sha256(_canonical_dumps(self.to_obj()).encode()).hexdigest()


@dataclass(frozen=True)
class Policy:
    """Per-PM-type whitelist of VM type names.

    PM types absent from ``entries`` accept every VM type; an entry with an
    empty name list accepts none. Entries are kept sorted so equal policies
    compare and digest equal.
    """

    entries: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self) -> None:
        pm_names = [pm for pm, _ in self.entries]
        _require(len(set(pm_names)) == len(pm_names), "duplicate PM type in policy")
        _require(list(pm_names) == sorted(pm_names), "policy entries must be sorted by PM type")
        for pm, vms in self.entries:
            _require(list(vms) == sorted(vms), f"policy entry {pm!r}: VM names must be sorted")
            _require(len(set(vms)) == len(vms), f"policy entry {pm!r}: duplicate VM name")

    @staticmethod
    def of(allowed: dict[str, Any]) -> "Policy":
        entries = tuple(
            (str(pm), tuple(sorted(str(v) for v in set(vms))))
            for pm, vms in sorted(allowed.items())
        )
        return Policy(entries)

    def allows(self, pm_type_name: str, vm_type_name: str) -> bool:
        for pm, vms in self.entries:
            if pm == pm_type_name:
                return vm_type_name in vms
        return True

    def restricted_types(self) -> tuple[str, ...]:
        return tuple(pm for pm, _ in self.entries)

    def to_obj(self) -> dict[str, list[str]]:
        return {pm: list(vms) for pm, vms in self.entries}

    @staticmethod
    def from_obj(obj: dict[str, Any]) -> "Policy":
        if not isinstance(obj, dict):
            raise ModelError("policy object must be a mapping")
        return Policy.of(obj)

    def validate_against(self, catalog: Catalog) -> None:
        """Reject names that do not exist in the catalog."""
        for pm, vms in self.entries:
            catalog.pm_index(pm)
            for v in vms:
                catalog.vm_index(v)

    def digest(self) -> str:
        return hashlib.sha256(_canonical_dumps(self.to_obj()).encode()).hexdigest()


# Digest used for "no policy" in cache keys, distinct from any real policy.
OPEN_POLICY_DIGEST = "open"


def policy_digest(policy: Policy | None) -> str:
    return OPEN_POLICY_DIGEST if policy is None else policy.digest()


class VmRef(NamedTuple):
    """One concrete VM: (index of its type in the catalog, ordinal within the type)."""

    type_index: int
    ordinal: int


class PmRef(NamedTuple):
    """One concrete PM: (index of its type in the catalog, ordinal within the type)."""

    type_index: int
    ordinal: int


@dataclass(frozen=True)
class Instance:
    """A placement problem: per-type VM demand and PM fleet over a catalog.

    Individual VMs and PMs are identified by (type index, ordinal) refs;
    expansion order is catalog order, then ordinal, and is part of the
    contract (variable naming and decoding rely on it).
    """

    catalog: Catalog
    vm_demand: tuple[int, ...]
    pm_fleet: tuple[int, ...]
    policy: Policy | None = None

    def __post_init__(self) -> None:
        _require(
            len(self.vm_demand) == len(self.catalog.vm_types),
            "vm_demand length must match the catalog",
        )
        _require(
            len(self.pm_fleet) == len(self.catalog.pm_types),
            "pm_fleet length must match the catalog",
        )
        _require(all(c >= 0 for c in self.vm_demand), "vm_demand counts must be >= 0")
        _require(all(c >= 0 for c in self.pm_fleet), "pm_fleet counts must be >= 0")
        _require(sum(self.vm_demand) >= 1, "instance needs at least one VM")
        _require(sum(self.pm_fleet) >= 1, "instance needs at least one PM")
        if self.policy is not None:
            self.policy.validate_against(self.catalog)

    @property
    def num_vms(self) -> int:
        return sum(self.vm_demand)

    @property
    def num_pms(self) -> int:
        return sum(self.pm_fleet)

    def vm_refs(self) -> tuple[VmRef, ...]:
        return tuple(
            VmRef(t, n) for t, count in enumerate(self.vm_demand) for n in range(count)
        )

    def pm_refs(self) -> tuple[PmRef, ...]:
        return tuple(
            PmRef(t, n) for t, count in enumerate(self.pm_fleet) for n in range(count)
        )

    def vm_type_of(self, ref: VmRef) -> VmType:
        return self.catalog.vm_types[ref.type_index]

    def pm_type_of(self, ref: PmRef) -> PmType:
        return self.catalog.pm_types[ref.type_index]

    def vm_label(self, ref: VmRef) -> str:
        return f"{self.catalog.vm_types[ref.type_index].name}#{ref.ordinal}"

    def pm_label(self, ref: PmRef) -> str:
        return f"{self.catalog.pm_types[ref.type_index].name}#{ref.ordinal}"

    def parse_vm_label(self, label: str) -> VmRef:
        name, ordinal = _split_label(label)
        t = self.catalog.vm_index(name)
        _require(0 <= ordinal < self.vm_demand[t], f"no such VM {label!r} in instance")
        return VmRef(t, ordinal)

    def parse_pm_label(self, label: str) -> PmRef:
        name, ordinal = _split_label(label)
        t = self.catalog.pm_index(name)
        _require(0 <= ordinal < self.pm_fleet[t], f"no such PM {label!r} in instance")
        return PmRef(t, ordinal)

    def allowed(self, vm_type_index: int, pm_type_index: int) -> bool:
        if self.policy is None:
            return True
        return self.policy.allows(
            self.catalog.pm_types[pm_type_index].name,
            self.catalog.vm_types[vm_type_index].name,
        )

    def to_obj(self, include_catalog: bool = True) -> dict[str, Any]:
        obj: dict[str, Any] = {}
        if include_catalog:
            obj["catalog"] = self.catalog.to_obj()
        obj["vm_demand"] = {
            t.name: c for t, c in zip(self.catalog.vm_types, self.vm_demand) if c
        }
        obj["pm_fleet"] = {
            t.name: c for t, c in zip(self.catalog.pm_types, self.pm_fleet) if c
        }
        if self.policy is not None:
            obj["policy"] = self.policy.to_obj()
        return obj

    def to_json(self, include_catalog: bool = True, indent: int | None = 2) -> str:
        return json.dumps(self.to_obj(include_catalog), indent=indent, sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(_canonical_dumps(self.to_obj()).encode()).hexdigest()


def _split_label(label: str) -> tuple[str, int]:
    name, sep, ordinal = label.rpartition("#")
    _require(bool(sep) and ordinal.isdigit(), f"bad ref label {label!r}, want 'type#ordinal'")
    return name, int(ordinal)


def _counts_from_names(mapping: Any, names: list[str], what: str) -> tuple[int, ...]:
    _require(isinstance(mapping, dict), f"{what} must be a mapping of type name to count")
    counts = [0] * len(names)
    index = {n: i for i, n in enumerate(names)}
    for name, count in mapping.items():
        _require(name in index, f"{what}: unknown type {name!r}")
        _require(isinstance(count, int) and count >= 0, f"{what}[{name!r}]: count must be an int >= 0")
        counts[index[name]] = count
    return tuple(counts)


def load_instance(text: str) -> Instance:
    """Parse an instance JSON document.

    The document holds ``vm_demand`` and ``pm_fleet`` maps (type name to
    count), an optional ``catalog`` (builtin when omitted), and an optional
    ``policy`` map (PM type name to allowed VM type names).
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"instance is not valid JSON: {exc}") from exc
    _require(isinstance(obj, dict), "instance document must be a JSON object")
    catalog = Catalog.from_obj(obj["catalog"]) if "catalog" in obj else builtin_catalog()
    _require("vm_demand" in obj, "instance needs a vm_demand map")
    _require("pm_fleet" in obj, "instance needs a pm_fleet map")
    vm_demand = _counts_from_names(
        obj["vm_demand"], [t.name for t in catalog.vm_types], "vm_demand"
    )
    pm_fleet = _counts_from_names(
        obj["pm_fleet"], [t.name for t in catalog.pm_types], "pm_fleet"
    )
    policy = Policy.from_obj(obj["policy"]) if "policy" in obj else None
    return Instance(catalog, vm_demand, pm_fleet, policy)


def _gib(x: float) -> int:
    mib = x * MIB_PER_GIB
    assert mib == int(mib)
    return int(mib)


@lru_cache(maxsize=1)
def builtin_catalog() -> Catalog:
    """The published 18 VM types and 15 PM types."""
    vm = VmType
    vm_types = (
        vm("m3.medium", 1, _gib(3.75), (4,)),
        vm("m3.large", 2, _gib(7.5), (32,)),
        vm("m3.xlarge", 4, _gib(15), (40, 40)),
        vm("m3.2xlarge", 8, _gib(30), (80, 80)),
        vm("c3.large", 2, _gib(3.75), (16, 16)),
        vm("c3.xlarge", 4, _gib(7.5), (40, 40)),
        vm("c3.2xlarge", 8, _gib(15), (80, 80)),
        vm("c3.4xlarge", 16, _gib(30), (160, 160)),
        vm("c3.8xlarge", 32, _gib(60), (320, 320)),
        vm("r3.large", 2, _gib(15.25), (32,)),
        vm("r3.xlarge", 4, _gib(30.5), (80,)),
        vm("r3.2xlarge", 8, _gib(61), (160,)),
        vm("r3.4xlarge", 16, _gib(122), (320,)),
        vm("r3.8xlarge", 32, _gib(244), (320, 320)),
        vm("i2.xlarge", 4, _gib(30.5), (800,)),
        vm("i2.2xlarge", 8, _gib(61), (800, 800)),
        vm("i2.4xlarge", 16, _gib(122), (800,) * 4),
        vm("i2.8xlarge", 32, _gib(244), (800,) * 8),
    )
    pm = PmType
    pm_types = (
        pm("s1", 8, _gib(16), (256,), 100),
        pm("s2", 8, _gib(32), (512,), 120),
        pm("s3", 8, _gib(64), (512,) * 2, 200),
        pm("s4", 8, _gib(64), (512,) * 4, 300),
        pm("m1", 16, _gib(32), (512,) * 2, 600),
        pm("m2", 16, _gib(64), (512,) * 4, 700),
        pm("m3", 16, _gib(128), (1000,) * 4, 900),
        pm("m4", 16, _gib(256), (1000,) * 8, 1500),
        pm("m5", 16, _gib(256), (512,) * 16, 1800),
        pm("l1", 32, _gib(256), (1000,) * 4, 2500),
        pm("l2", 48, _gib(512), (1000,) * 8, 3500),
        pm("l3", 64, _gib(1024), (1000,) * 4, 5000),
        pm("l4", 80, _gib(2048), (1600,) * 16, 7000),
        pm("l5", 120, _gib(4096), (1000,) * 4, 9000),
        pm("l6", 120, _gib(4096), (1600,) * 24, 12000),
    )
    return Catalog(vm_types, pm_types)


@lru_cache(maxsize=1)
def large_pm_policy() -> Policy:
    """The published l-type restriction; s and m types stay unrestricted.

    l1 takes the 4-vCPU-and-up types, l2/l3 the 8-vCPU-and-up types, and
    l4/l5/l6 only the 16-vCPU-and-up types.
    """
    l1 = [
        "m3.xlarge", "m3.2xlarge",
        "c3.xlarge", "c3.2xlarge", "c3.4xlarge", "c3.8xlarge",
        "r3.xlarge", "r3.2xlarge", "r3.4xlarge", "r3.8xlarge",
        "i2.xlarge", "i2.2xlarge", "i2.4xlarge", "i2.8xlarge",
    ]
    l23 = [
        "m3.2xlarge",
        "c3.2xlarge", "c3.4xlarge", "c3.8xlarge",
        "r3.2xlarge", "r3.4xlarge", "r3.8xlarge",
        "i2.2xlarge", "i2.4xlarge", "i2.8xlarge",
    ]
    l456 = [
        "c3.4xlarge", "c3.8xlarge",
        "r3.4xlarge", "r3.8xlarge",
        "i2.4xlarge", "i2.8xlarge",
    ]
    return Policy.of(
        {"l1": l1, "l2": l23, "l3": l23, "l4": l456, "l5": l456, "l6": l456}
    )


# Demand / fleet mixes from the published experiment setup tables. Where a
# printed total row disagrees with the per-type cells (VI has 77 PMs by
# cells, VII has 7575 VMs by cells), the cells are authoritative here.
_PRESETS: dict[str, tuple[dict[str, int], dict[str, int]]] = {
    "I": (
        {"m3.medium": 36, "m3.large": 14, "m3.xlarge": 10, "m3.2xlarge": 10},
        {"s1": 7, "s2": 7, "s3": 10, "s4": 7, "m1": 5, "m2": 5, "m3": 5, "m4": 2, "m5": 2},
    ),
    "II": (
        {
            "m3.medium": 5, "m3.large": 5, "m3.xlarge": 5, "m3.2xlarge": 5,
            "c3.large": 5, "c3.xlarge": 5, "c3.2xlarge": 5, "c3.4xlarge": 5,
            "c3.8xlarge": 5,
            "r3.large": 5, "r3.xlarge": 5, "r3.2xlarge": 5, "r3.4xlarge": 5,
            "r3.8xlarge": 5,
            "i2.xlarge": 2, "i2.2xlarge": 2, "i2.4xlarge": 3,
        },
        {
            "s1": 5, "s2": 5, "s3": 5, "s4": 5,
            "m1": 5, "m2": 5, "m3": 5, "m4": 5, "m5": 5,
            "l1": 5, "l2": 5, "l3": 5, "l4": 5, "l5": 5,
        },
    ),
    "III": (
        {"m3.medium": 500, "m3.large": 200, "m3.xlarge": 150, "m3.2xlarge": 150},
        {
            "s1": 150, "s2": 150, "s3": 150, "s4": 150,
            "m1": 100, "m2": 100, "m3": 100, "m4": 50, "m5": 50,
        },
    ),
    "IV": (
        {
            "m3.medium": 500, "m3.large": 200, "m3.xlarge": 150, "m3.2xlarge": 150,
            "c3.large": 2, "c3.xlarge": 2, "c3.2xlarge": 2, "c3.4xlarge": 2,
            "c3.8xlarge": 2,
        },
        {
            "s1": 150, "s2": 150, "s3": 150, "s4": 150,
            "m1": 100, "m2": 100, "m3": 100, "m4": 50, "m5": 50,
            "l1": 2, "l2": 2, "l3": 2, "l4": 2, "l5": 2, "l6": 2,
        },
    ),
    "V": (
        {
            "m3.large": 4000, "m3.xlarge": 2000,
            "c3.4xlarge": 3, "c3.8xlarge": 3,
            "r3.4xlarge": 3, "r3.8xlarge": 3,
            "i2.2xlarge": 3, "i2.4xlarge": 3, "i2.8xlarge": 2,
        },
        {
            "s1": 300, "s2": 300, "s3": 300, "s4": 300,
            "m1": 200, "m2": 200, "m3": 200, "m4": 100, "m5": 100,
            "l1": 2, "l2": 2, "l3": 2, "l4": 2, "l5": 2, "l6": 2,
        },
    ),
    "VI": (
        {
            "m3.2xlarge": 15,
            "c3.4xlarge": 15, "c3.8xlarge": 15,
            "r3.8xlarge": 15,
            "i2.2xlarge": 15, "i2.4xlarge": 15, "i2.8xlarge": 15,
        },
        {
            "m1": 10, "m2": 10, "m3": 10, "m4": 10, "m5": 10,
            "l1": 5, "l2": 5, "l3": 5, "l4": 5, "l5": 5, "l6": 2,
        },
    ),
    "VII": (
        {
            "m3.medium": 1875, "m3.large": 750, "m3.xlarge": 563, "m3.2xlarge": 562,
            "c3.large": 600, "c3.xlarge": 600, "c3.2xlarge": 150, "c3.4xlarge": 75,
            "c3.8xlarge": 75,
            "r3.large": 600, "r3.xlarge": 600, "r3.2xlarge": 150, "r3.4xlarge": 150,
            "r3.8xlarge": 75,
            "i2.xlarge": 300, "i2.2xlarge": 300, "i2.4xlarge": 75, "i2.8xlarge": 75,
        },
        {
            "s1": 900, "s2": 900, "s3": 900, "s4": 900,
            "m1": 450, "m2": 375, "m3": 375, "m4": 375, "m5": 375,
            "l1": 75, "l2": 75, "l3": 75, "l4": 75, "l5": 75, "l6": 75,
        },
    ),
}

PRESET_IDS = tuple(_PRESETS)


def preset_instance(preset_id: str, policy: Policy | None = None) -> Instance:
    """Build one of the published experiment setups I..VII over the builtin catalog."""
    if preset_id not in _PRESETS:
        raise ModelError(f"unknown preset {preset_id!r}, expected one of {', '.join(_PRESETS)}")
    demand_map, fleet_map = _PRESETS[preset_id]
    catalog = builtin_catalog()
    vm_demand = _counts_from_names(demand_map, [t.name for t in catalog.vm_types], "vm_demand")
    pm_fleet = _counts_from_names(fleet_map, [t.name for t in catalog.pm_types], "pm_fleet")
    return Instance(catalog, vm_demand, pm_fleet, policy)
