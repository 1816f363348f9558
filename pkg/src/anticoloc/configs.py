"""Feasible configuration enumeration per PM type.

A configuration is a per-VM-type count vector that fits on one PM of a
given type, disk anti-colocation included. The zero vector is excluded
from every enumerated set. Feasibility is downward monotone in the counts,
which is what makes prefix pruning in the depth-first enumeration sound.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from anticoloc.feasibility import disk_assignment
from anticoloc.model import Catalog, ModelError, PmType, Policy, policy_digest

DEFAULT_CAP = 1_000_000
CACHE_ENV = "ANTICOLOC_CACHE"
DEFAULT_CACHE_DIR = ".anticoloc-cache"
_CACHE_FORMAT = "anticoloc-configset-v1"


class CapExceededError(RuntimeError):
    """Raised when a PM type supports more configurations than the cap."""

    def __init__(self, pm_type: str, cap: int):
        super().__init__(f"{pm_type}: more than {cap} feasible configurations")
        self.pm_type = pm_type
        self.cap = cap


def upper_bounds(
    pm: PmType, catalog: Catalog, policy: Policy | None = None
) -> tuple[int, ...]:
    """Per-VM-type count caps on one PM, sound but not tight.

    The disk term divides aggregate disk capacity by one VM's total volume:
    anti-colocation binds per VM, so dividing the disk count by the volume
    count would be wrong (it ignores that different VMs may share a disk).
    Exactness is the enumerator's job via full feasibility checks.
    """
    bounds = []
    for vm in catalog.vm_types:
        if policy is not None and not policy.allows(pm.name, vm.name):
            bounds.append(0)
            continue
        if vm.vcpus > pm.vcpus or vm.memory_mib > pm.memory_mib:
            bounds.append(0)
            continue
        if vm.num_volumes > pm.num_disks or max(vm.volumes_gb) > max(pm.disks_gb):
            bounds.append(0)
            continue
        bounds.append(
            min(
                pm.vcpus // vm.vcpus,
                pm.memory_mib // vm.memory_mib,
                pm.total_disk_gb // vm.total_volume_gb,
            )
        )
    return tuple(bounds)


@dataclass(frozen=True)
class ConfigSet:
    """All feasible nonzero configurations of one PM type, in lexicographic order."""

    pm_type: str
    catalog_digest: str
    policy_digest: str
    vectors: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.vectors)

    def __getitem__(self, t: int) -> tuple[int, ...]:
        return self.vectors[t]


def enumerate_configs(
    pm: PmType,
    catalog: Catalog,
    policy: Policy | None = None,
    cap: int = DEFAULT_CAP,
) -> ConfigSet:
    """Enumerate every feasible nonzero configuration of the PM type.

    Depth-first over count vectors in catalog order, emitting in ascending
    lexicographic order. A prefix that fails feasibility prunes its whole
    subtree, and within one coordinate the loop breaks at the first failing
    count; both prunings rely on downward monotonicity. Raises
    CapExceededError as soon as the result would hold more than ``cap``
    vectors.
    """
    if cap < 1:
        raise ModelError("cap must be >= 1")
    bounds = upper_bounds(pm, catalog, policy)
    num_types = len(bounds)
    vm_types = catalog.vm_types
    mix = [0] * num_types
    out: list[tuple[int, ...]] = []
    memo: dict = {}
    cpu_left = pm.vcpus
    mem_left = pm.memory_mib

    def walk(u: int) -> None:
        nonlocal cpu_left, mem_left
        if u == num_types:
            if any(mix):
                if len(out) >= cap:
                    raise CapExceededError(pm.name, cap)
                out.append(tuple(mix))
            return
        walk(u + 1)
        vm = vm_types[u]
        taken = 0
        for count in range(1, bounds[u] + 1):
            if vm.vcpus > cpu_left or vm.memory_mib > mem_left:
                break
            cpu_left -= vm.vcpus
            mem_left -= vm.memory_mib
            taken = count
            mix[u] = count
            if disk_assignment(mix, pm, catalog, memo=memo) is None:
                break
            walk(u + 1)
        cpu_left += taken * vm.vcpus
        mem_left += taken * vm.memory_mib
        mix[u] = 0

    walk(0)
    return ConfigSet(
        pm_type=pm.name,
        catalog_digest=catalog.digest(),
        policy_digest=policy_digest(policy),
        vectors=tuple(out),
    )


def count_table(
    catalog: Catalog,
    policy: Policy | None = None,
    cap: int = DEFAULT_CAP,
) -> dict[str, int | None]:
    """Configuration count per PM type; None marks a type that exceeded the cap."""
    table: dict[str, int | None] = {}
    for pm in catalog.pm_types:
        try:
            table[pm.name] = len(enumerate_configs(pm, catalog, policy, cap))
        except CapExceededError:
            table[pm.name] = None
    return table


def cache_dir(explicit: str | os.PathLike | None = None) -> Path:
    """Cache directory: explicit argument, else $ANTICOLOC_CACHE, else ./.anticoloc-cache."""
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else Path(DEFAULT_CACHE_DIR)


def _cache_path(directory: Path, pm: PmType, catalog: Catalog, policy: Policy | None, cap: int) -> Path:
    key = f"{pm.name}-{catalog.digest()[:16]}-{policy_digest(policy)[:16]}-{cap}"
    return directory / f"{key}.json"


def save_config_set(path: Path, configs: ConfigSet, cap: int) -> None:
    payload = {
        "format": _CACHE_FORMAT,
        "pm_type": configs.pm_type,
        "catalog_digest": configs.catalog_digest,
        "policy_digest": configs.policy_digest,
        "cap": cap,
        "cap_exceeded": False,
        "count": len(configs),
        "configs": [list(v) for v in configs.vectors],
    }
    _write_atomic(path, payload)


def _save_cap_exceeded(path: Path, pm: PmType, catalog: Catalog, policy: Policy | None, cap: int) -> None:
    payload = {
        "format": _CACHE_FORMAT,
        "pm_type": pm.name,
        "catalog_digest": catalog.digest(),
        "policy_digest": policy_digest(policy),
        "cap": cap,
        "cap_exceeded": True,
        "count": None,
        "configs": [],
    }
    _write_atomic(path, payload)


def _write_atomic(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload))
    os.replace(tmp, path)


def load_config_set(path: Path) -> ConfigSet:
    """Load a cached ConfigSet; raises CapExceededError for a cached overflow marker."""
    obj = json.loads(Path(path).read_text())
    if obj.get("format") != _CACHE_FORMAT:
        raise ModelError(f"{path}: not a {_CACHE_FORMAT} file")
    if obj["cap_exceeded"]:
        raise CapExceededError(obj["pm_type"], obj["cap"])
    configs = ConfigSet(
        pm_type=obj["pm_type"],
        catalog_digest=obj["catalog_digest"],
        policy_digest=obj["policy_digest"],
        vectors=tuple(tuple(int(c) for c in v) for v in obj["configs"]),
    )
    if len(configs) != obj["count"]:
        raise ModelError(f"{path}: header count disagrees with stored vectors")
    return configs


def cached_enumerate(
    pm: PmType,
    catalog: Catalog,
    policy: Policy | None = None,
    cap: int = DEFAULT_CAP,
    directory: str | os.PathLike | None = None,
) -> ConfigSet:
    """enumerate_configs with a disk cache keyed by catalog, PM type, policy, and cap.

    Cache hits must match the key digests exactly; anything unreadable or
    stale counts as a miss and is rebuilt. Cap overflows are cached too, so
    repeated calls on an over-cap type stay cheap.
    """
    directory = cache_dir(directory)
    path = _cache_path(directory, pm, catalog, policy, cap)
    if path.exists():
        try:
            obj = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError):
            obj = None
        if (
            isinstance(obj, dict)
            and obj.get("format") == _CACHE_FORMAT
            and obj.get("pm_type") == pm.name
            and obj.get("catalog_digest") == catalog.digest()
            and obj.get("policy_digest") == policy_digest(policy)
        ):
            if obj.get("cap_exceeded"):
                raise CapExceededError(pm.name, cap)
            try:
                vectors = tuple(tuple(int(c) for c in v) for v in obj["configs"])
            except (KeyError, TypeError, ValueError):
                vectors = None
            if vectors is not None and len(vectors) == obj.get("count"):
                return ConfigSet(pm.name, catalog.digest(), policy_digest(policy), vectors)
    try:
        configs = enumerate_configs(pm, catalog, policy, cap)
    except CapExceededError:
        _save_cap_exceeded(path, pm, catalog, policy, cap)
        raise
    save_config_set(path, configs, cap)
    return configs
