"""Feasibility of a VM mix on one PM: scalar capacities and disk assignment.

A mix is a per-catalog-VM-type count vector. Disk assignment is the hard
part: every volume of every VM needs its own physical disk slot, no two
volumes of the same VM may share a disk, and per-disk capacity must hold.
``disk_assignment`` runs a complete backtracking search, so ``None`` is a
proof of infeasibility, not a heuristic give-up.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from anticoloc.model import Catalog, ModelError, PmType

Mix = Sequence[int]


def _check_mix(mix: Mix, catalog: Catalog) -> None:
    if len(mix) != len(catalog.vm_types):
        raise ModelError(
            f"mix has {len(mix)} entries, catalog has {len(catalog.vm_types)} VM types"
        )
    if any(c < 0 for c in mix):
        raise ModelError("mix counts must be >= 0")


def scalar_feasible(mix: Mix, pm: PmType, catalog: Catalog) -> bool:
    """vCPU and memory sums fit within the PM. Ignores disks."""
    _check_mix(mix, catalog)
    vcpus = 0
    mem = 0
    for count, vm in zip(mix, catalog.vm_types):
        if count:
            vcpus += count * vm.vcpus
            mem += count * vm.memory_mib
    return vcpus <= pm.vcpus and mem <= pm.memory_mib


def expand_mix(mix: Mix) -> list[int]:
    """Canonical VM expansion of a mix: type indices, catalog order, ordinals implicit."""
    out: list[int] = []
    for t, count in enumerate(mix):
        out.extend([t] * count)
    return out


@dataclass(frozen=True)
class DiskWitness:
    """A concrete disk assignment for a mix on one PM.

    Row r describes the r-th VM of the canonical expansion (catalog order):
    ``volume_to_disk[r][k]`` is the physical disk index holding volume k.
    """

    vm_type_indices: tuple[int, ...]
    volume_to_disk: tuple[tuple[int, ...], ...]


def validate_witness(
    witness: DiskWitness, mix: Mix, pm: PmType, catalog: Catalog
) -> list[str]:
    """Re-check a witness from raw data. Returns problem descriptions, empty if sound."""
    problems: list[str] = []
    expected = expand_mix(mix)
    if list(witness.vm_type_indices) != expected:
        problems.append("witness VM list does not match the mix expansion")
        return problems
    if len(witness.volume_to_disk) != len(expected):
        problems.append("witness row count does not match the mix")
        return problems
    load = [0] * pm.num_disks
    for r, t in enumerate(expected):
        vm = catalog.vm_types[t]
        row = witness.volume_to_disk[r]
        if len(row) != vm.num_volumes:
            problems.append(f"row {r}: {len(row)} entries for {vm.num_volumes} volumes")
            continue
        if len(set(row)) != len(row):
            problems.append(f"row {r}: two volumes of one VM share a disk")
        for k, disk in enumerate(row):
            if not 0 <= disk < pm.num_disks:
                problems.append(f"row {r}: disk index {disk} out of range")
            else:
                load[disk] += vm.volumes_gb[k]
    for disk, used in enumerate(load):
        if used > pm.disks_gb[disk]:
            problems.append(f"disk {disk}: load {used} exceeds size {pm.disks_gb[disk]}")
    return problems


def disk_assignment(
    mix: Mix,
    pm: PmType,
    catalog: Catalog,
    memo: dict | None = None,
) -> DiskWitness | None:
    """Find a disk assignment for the mix on the PM, or prove there is none.

    Complete backtracking search with fail-first ordering: VMs by largest
    volume then volume count (descending), volumes within a VM descending,
    candidate disks by remaining capacity descending. Disks with equal
    remaining capacity are interchangeable, so only the first of each equal
    run is tried at a choice point; that collapse is what keeps PMs with
    many identical disks tractable.

    ``memo``, when given, caches infeasible states at VM boundaries keyed by
    (sorted remaining capacities, sorted remaining VM types). The key is
    exact, so entries stay valid across calls that share pm and catalog;
    callers must not reuse a memo across different PMs or catalogs.
    """
    _check_mix(mix, catalog)
    vms = expand_mix(mix)
    if not vms:
        return DiskWitness((), ())

    num_disks = pm.num_disks
    max_disk = max(pm.disks_gb)
    total = 0
    for t in vms:
        vm = catalog.vm_types[t]
        if vm.num_volumes > num_disks:
            return None
        if max(vm.volumes_gb) > max_disk:
            return None
        total += vm.total_volume_gb
    if total > pm.total_disk_gb:
        return None

    # Search order: hardest VMs first. sort_key[i] indexes into vms.
    order = sorted(
        range(len(vms)),
        key=lambda i: (
            -max(catalog.vm_types[vms[i]].volumes_gb),
            -catalog.vm_types[vms[i]].num_volumes,
            vms[i],
        ),
    )
    # Volumes of each search-position VM, largest first, original index kept.
    vm_volumes: list[list[tuple[int, int]]] = []
    for i in order:
        vols = catalog.vm_types[vms[i]].volumes_gb
        vm_volumes.append(sorted(((v, k) for k, v in enumerate(vols)), key=lambda p: -p[0]))

    remaining = list(pm.disks_gb)
    # chosen[pos] = list of disk indices aligned with vm_volumes[pos].
    chosen: list[list[int]] = [[] for _ in order]

    if memo is not None:
        suffix_types = [tuple(sorted(vms[i] for i in order[pos:])) for pos in range(len(order))]

    def boundary_key(pos: int):
        return (tuple(sorted(remaining)), suffix_types[pos])

    def place_vm(pos: int) -> bool:
        if pos == len(order):
            return True
        if memo is not None:
            key = boundary_key(pos)
            if key in memo:
                return False
        ok = place_volume(pos, 0, [])
        if not ok and memo is not None:
            memo[key] = True
        return ok

    def place_volume(pos: int, vol: int, used: list[int]) -> bool:
        if vol == len(vm_volumes[pos]):
            return place_vm(pos + 1)
        size = vm_volumes[pos][vol][0]
        candidates = sorted(
            ((remaining[d], d) for d in range(num_disks) if d not in used and remaining[d] >= size),
            key=lambda p: (-p[0], p[1]),
        )
        prev_rem = -1
        for rem, d in candidates:
            if rem == prev_rem:
                continue  # interchangeable with the one just tried
            prev_rem = rem
            remaining[d] = rem - size
            used.append(d)
            chosen[pos].append(d)
            if place_volume(pos, vol + 1, used):
                return True
            chosen[pos].pop()
            used.pop()
            remaining[d] = rem
        return False

    if not place_vm(0):
        return None

    # Map the search order back to the canonical expansion order and restore
    # each VM's original volume indexing.
    rows: list[tuple[int, ...] | None] = [None] * len(vms)
    for pos, i in enumerate(order):
        row = [0] * len(vm_volumes[pos])
        for (_, k), d in zip(vm_volumes[pos], chosen[pos]):
            row[k] = d
        rows[i] = tuple(row)
    return DiskWitness(tuple(vms), tuple(rows))  # type: ignore[arg-type]


def config_feasible(
    mix: Mix, pm: PmType, catalog: Catalog, memo: dict | None = None
) -> bool:
    """Scalar capacities hold and a disk assignment exists. Zero mix is feasible."""
    if not scalar_feasible(mix, pm, catalog):
        return False
    return disk_assignment(mix, pm, catalog, memo=memo) is not None


def single_vm_disk_fit(
    volumes_gb: Sequence[int], remaining_gb: Sequence[int]
) -> tuple[int, ...] | None:
    """Fit one VM's volumes onto disks with the given remaining capacities.

    Volumes keep their original order and candidate disks are tried in index
    order, so the returned tuple is the lexicographically first feasible
    assignment. Backtracking makes the search complete. Used by the greedy
    placement loop against partially filled PMs.
    """
    n = len(remaining_gb)
    if len(volumes_gb) > n:
        return None
    picked: list[int] = []
    used = [False] * n

    def place(k: int) -> bool:
        if k == len(volumes_gb):
            return True
        size = volumes_gb[k]
        for d in range(n):
            if not used[d] and remaining_gb[d] >= size:
                used[d] = True
                picked.append(d)
                if place(k + 1):
                    return True
                picked.pop()
                used[d] = False
        return False

    if not place(0):
        return None
    return tuple(picked)
