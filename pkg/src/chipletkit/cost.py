"""System cost model: die cost and yield, assembly, NRE amortization, power.

The total for a candidate chiplet set is

    total = (assembly_cost + sum(die_cost_i / die_yield_i)) / assembly_yield
            + nre_total / volume

with negative-binomial die yield, a rasterized-disc dies-per-wafer estimate,
per-chiplet NRE attribution and a bond-count assembly yield. Cut bandwidth is
discretized into IO cells per net (the staircase), and those cells are charged
to both endpoint chiplets' areas. All functions here are pure and safe to call
concurrently.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

from .model import (IOCellType, Net, Netlist, SystemConfig, TechNode,
                    scale_block)


class CostError(Exception):
    """Cost model cannot evaluate the candidate (bad genome, reticle...)."""


class ReticleViolation(CostError):
    """A chiplet exceeds its technology's maximum reticle area."""


@dataclass(frozen=True)
class Chiplet:
    """One die of a candidate solution: blocks, technology, sized area.

    ``area`` already includes the IO cells required by nets cut at this
    chiplet's boundary.
    """

    block_ids: tuple[str, ...]
    tech: str
    area: float
    io_cells: Mapping[str, int]


@dataclass(frozen=True)
class CostBreakdown:
    """Itemized evaluation of one chiplet set (all currency/W terms)."""

    die_costs: tuple[float, ...]
    die_yields: tuple[float, ...]
    assembly_cost: float
    assembly_yield: float
    nre_total: float
    volume: int
    total: float
    power_total: float
    # report extras, derivable but convenient
    chiplet_techs: tuple[str, ...]
    chiplet_areas: tuple[float, ...]
    package_area: float
    block_power: float
    io_power: float


def die_yield(area_mm2: float, tech: TechNode) -> float:
    """Negative-binomial yield of a die of the given area.

    (1 + A*D/alpha)^(-alpha) with A in cm^2; approaches the Poisson model
    exp(-A*D) as alpha grows. Monotone decreasing in area.
    """
    if area_mm2 <= 0:
        raise CostError("die area must be > 0")
    if tech.defect_density == 0:
        return 1.0
    defects = (area_mm2 / 100.0) * tech.defect_density
    if math.isinf(tech.clustering_alpha):
        return math.exp(-defects)
    return (1.0 + defects / tech.clustering_alpha) ** (-tech.clustering_alpha)


def dies_per_wafer(die_area_mm2: float, tech: TechNode) -> int:
    """Count die sites fully inside the wafer disc.

    Dies are modeled as squares of side sqrt(area) on a grid anchored at the
    wafer center; a site counts only if all four corners are inside the disc,
    which is also how edge loss is accounted for. Evaluated row by row from
    the chord width, so it stays cheap for small dies.
    """
    if die_area_mm2 <= 0:
        raise CostError("die area must be > 0")
    radius = tech.wafer_diameter / 2.0
    side = math.sqrt(die_area_mm2)
    eps = 1e-9
    count = 0
    j_max = int(math.ceil(radius / side))
    for j in range(-j_max, j_max):
        y_far = max(abs(j * side), abs((j + 1) * side))
        if y_far >= radius:
            continue
        half_width = math.sqrt(radius * radius - y_far * y_far)
        count += 2 * int(math.floor(half_width / side + eps))
    return count


def die_cost(area_mm2: float, tech: TechNode,
             enforce_reticle: bool = True) -> float:
    """Silicon cost of one die candidate: wafer cost over die sites.

    Yield is accounted for separately (Eq. recomposition uses cost/yield).
    """
    if enforce_reticle and area_mm2 > tech.reticle_max_area:
        raise ReticleViolation(
            f"die area {area_mm2:.3f} mm^2 exceeds reticle limit "
            f"{tech.reticle_max_area:.3f} mm^2 of tech {tech.id!r}")
    sites = dies_per_wafer(area_mm2, tech)
    if sites == 0:
        raise CostError(
            f"die of {area_mm2:.3f} mm^2 does not fit on a "
            f"{tech.wafer_diameter:.0f} mm wafer")
    return tech.wafer_cost / sites


def cut_nets(assignment: Sequence[int], netlist: Netlist) -> list[Net]:
    """Nets whose endpoints land on different chiplets."""
    out = []
    for net in netlist.nets:
        if (assignment[netlist.index_of(net.source)]
                != assignment[netlist.index_of(net.sink)]):
            out.append(net)
    return out


def io_cells_for_cut(assignment: Sequence[int], netlist: Netlist,
                     io_table: Mapping[str, IOCellType]) -> list[dict[str, int]]:
    """Per-chiplet IO cell counts induced by the cut.

    Each cut net puts ceil(bandwidth / bits_per_cell) cells of its reach class
    on both endpoint chiplets; intra-chiplet nets contribute nothing.
    """
    n_chiplets = max(assignment) + 1 if len(assignment) else 0
    counts: list[Counter] = [Counter() for _ in range(n_chiplets)]
    for net in netlist.nets:
        ca = assignment[netlist.index_of(net.source)]
        cb = assignment[netlist.index_of(net.sink)]
        if ca == cb:
            continue
        cell = io_table[net.reach_class]
        n_cells = -(-net.bandwidth // cell.bits_per_cell)
        counts[ca][net.reach_class] += n_cells
        counts[cb][net.reach_class] += n_cells
    return [dict(sorted(c.items())) for c in counts]


def build_chiplets(assignment: Sequence[int], techs: Sequence[str],
                   netlist: Netlist, config: SystemConfig) -> list[Chiplet]:
    """Materialize the chiplet set for a block assignment and tech choice.

    ``techs`` supplies one technology id per chiplet index (a genome prefix).
    """
    n_chiplets = max(assignment) + 1
    if len(techs) < n_chiplets:
        raise CostError(
            f"genome supplies {len(techs)} techs for {n_chiplets} chiplets")
    members: list[list[str]] = [[] for _ in range(n_chiplets)]
    for block, chiplet in zip(netlist.blocks, assignment):
        members[chiplet].append(block.id)
    if any(not m for m in members):
        raise CostError("assignment leaves an empty chiplet")
    io_counts = io_cells_for_cut(assignment, netlist, config.io_cells)
    chiplets = []
    for idx in range(n_chiplets):
        tech = config.tech(techs[idx])
        area = 0.0
        for block_id in members[idx]:
            a, _ = scale_block(netlist.block(block_id), tech, config.techs)
            area += a
        for io_id, count in io_counts[idx].items():
            area += count * config.io_cell(io_id).cell_area
        chiplets.append(Chiplet(block_ids=tuple(members[idx]), tech=tech.id,
                                area=area, io_cells=io_counts[idx]))
    return chiplets


def estimate_package_area(chiplet_areas: Sequence[float],
                          separation: float) -> float:
    """Floorplan-free package area bound: square chiplets on a grid.

    Used only when no floorplan is supplied; a single chiplet packs exactly.
    """
    k = len(chiplet_areas)
    sides = [math.sqrt(a) for a in chiplet_areas]
    cols = int(math.ceil(math.sqrt(k)))
    width = 0.0
    height = 0.0
    for row_start in range(0, k, cols):
        row = sides[row_start:row_start + cols]
        width = max(width, sum(row) + separation * (len(row) - 1))
        height += max(row)
    rows = -(-k // cols)
    height += separation * (rows - 1)
    return width * height


def _assignment_of(partition) -> Sequence[int]:
    return getattr(partition, "assignment", partition)


def system_cost(partition, genome: Sequence[str], netlist: Netlist,
                config: SystemConfig, package_area: float | None = None,
                enforce_reticle: bool = True) -> CostBreakdown:
    """Evaluate the full system objective for a partition + tech assignment.

    ``genome`` may be longer than the realized chiplet count; the prefix is
    used. ``package_area`` should come from a floorplan; without one a grid
    packing estimate is substituted.
    """
    assignment = _assignment_of(partition)
    chiplets = build_chiplets(assignment, genome, netlist, config)
    k = len(chiplets)

    die_costs = []
    die_yields = []
    for c in chiplets:
        tech = config.tech(c.tech)
        die_costs.append(die_cost(c.area, tech, enforce_reticle))
        die_yields.append(die_yield(c.area, tech))

    if package_area is None:
        package_area = estimate_package_area(
            [c.area for c in chiplets], config.assembly.separation)

    assembly_cost = (package_area * config.assembly.substrate_cost_per_mm2
                     + config.assembly.cost_per_bond * k)
    assembly_yield = config.assembly.bond_yield ** k

    nre_total = sum(config.tech(c.tech).nre_design_cost for c in chiplets)

    recurring = assembly_cost + sum(c / y for c, y in zip(die_costs, die_yields))
    total = recurring / assembly_yield + nre_total / config.volume

    block_power = 0.0
    for block, chiplet_idx in zip(netlist.blocks, assignment):
        _, p = scale_block(block, config.tech(chiplets[chiplet_idx].tech),
                           config.techs)
        block_power += p
    io_power = 0.0
    for net in cut_nets(assignment, netlist):
        io_power += net.bandwidth * config.io_cell(net.reach_class).energy_per_bit
    power_total = block_power + io_power

    return CostBreakdown(
        die_costs=tuple(die_costs),
        die_yields=tuple(die_yields),
        assembly_cost=assembly_cost,
        assembly_yield=assembly_yield,
        nre_total=nre_total,
        volume=config.volume,
        total=total,
        power_total=power_total,
        chiplet_techs=tuple(c.tech for c in chiplets),
        chiplet_areas=tuple(c.area for c in chiplets),
        package_area=package_area,
        block_power=block_power,
        io_power=io_power,
    )


def monolithic_baseline(netlist: Netlist,
                        config: SystemConfig) -> tuple[float, float]:
    """(cost, power) of the cheapest single-chiplet homogeneous build.

    Normalizer for the mixed objective. The reticle limit is ignored here:
    the baseline is a yardstick, not a buildable design.
    """
    assignment = [0] * netlist.n_blocks
    best = None
    for tech_id in sorted(config.techs):
        bd = system_cost(assignment, [tech_id], netlist, config,
                         enforce_reticle=False)
        if best is None or bd.total < best.total:
            best = bd
    return best.total, best.power_total


def mixed_objective(breakdown: CostBreakdown, weights,
                    baseline: tuple[float, float]) -> float:
    """Weighted sum of normalized cost and normalized power.

    Both terms are divided by the monolithic baseline so they are
    commensurate; pure weights recover the single objectives.
    """
    base_cost, base_power = baseline
    value = weights.cost_weight * (breakdown.total / base_cost)
    if weights.power_weight > 0.0:
        if base_power > 0.0:
            value += weights.power_weight * (breakdown.power_total / base_power)
        else:
            value += weights.power_weight * breakdown.power_total
    return value


def breakdown_to_data(breakdown: CostBreakdown) -> dict:
    """JSON-ready report with every term of the total itemized."""
    return {
        "total": breakdown.total,
        "power_total": breakdown.power_total,
        "die_costs": list(breakdown.die_costs),
        "die_yields": list(breakdown.die_yields),
        "assembly_cost": breakdown.assembly_cost,
        "assembly_yield": breakdown.assembly_yield,
        "nre_total": breakdown.nre_total,
        "volume": breakdown.volume,
        "chiplet_techs": list(breakdown.chiplet_techs),
        "chiplet_areas": list(breakdown.chiplet_areas),
        "package_area": breakdown.package_area,
        "block_power": breakdown.block_power,
        "io_power": breakdown.io_power,
    }
