"""Parametric benchmark generator for tiled manycore-style designs.

Two templates are provided: a waferscale-style grid of identical tiles (each
tile: a router, a crossbar, shared memory blocks, and per-core triples of
core + bus + private memory) connected in a 2D mesh, and a smaller pool-style
design of tiles hanging off a hierarchical interconnect. Interconnect widths
grow with design scaling via the terminal-count law T = k * C^p, applied with
different exponents for processor-like and memory-like blocks.

The per-block base areas/powers and the technology/IO tables shipped here are
calibration defaults chosen to land in a realistic range (a default tile is
0.98875 mm^2 before scaling, 1582 mm^2 after the default 1600x), not vendor
data; override any of them through the config file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import (AssemblySpec, Block, Net, Netlist, ObjectiveWeights,
                    SystemConfig)
from .model import IOCellType, TechNode

REFERENCE_TECH = "45nm"

# Anchored ratios: 45nm -> 10nm shrinks logic ~10x while wafer cost grows
# ~2.6x and design NRE ~4.6x; intermediate nodes interpolated, memory area
# scaling deliberately poor at advanced nodes.
DEFAULT_TECHS = {
    "45nm": dict(logic_area_scale=1.0, memory_area_scale=1.0,
                 power_scale=1.0, wafer_cost=4000.0, wafer_diameter=300.0,
                 defect_density=0.08, clustering_alpha=2.0,
                 nre_design_cost=5.0e6, reticle_max_area=858.0),
    "14nm": dict(logic_area_scale=0.167, memory_area_scale=0.50,
                 power_scale=0.246, wafer_cost=8400.0, wafer_diameter=300.0,
                 defect_density=0.12, clustering_alpha=2.0,
                 nre_design_cost=1.6e7, reticle_max_area=858.0),
    "10nm": dict(logic_area_scale=0.100, memory_area_scale=0.45,
                 power_scale=0.164, wafer_cost=10400.0, wafer_diameter=300.0,
                 defect_density=0.16, clustering_alpha=2.0,
                 nre_design_cost=2.3e7, reticle_max_area=858.0),
    "7nm": dict(logic_area_scale=0.058, memory_area_scale=0.42,
                power_scale=0.107, wafer_cost=13000.0, wafer_diameter=300.0,
                defect_density=0.20, clustering_alpha=2.0,
                nre_design_cost=3.3e7, reticle_max_area=858.0),
}

# Parallel signaling cells are tiny with short reach; the two big-cell
# standards bundle 64 bits per cell and differ in reach.
DEFAULT_IO_CELLS = {
    "parallel": dict(cell_area=0.000157, reach=2.0, bits_per_cell=1,
                     energy_per_bit=5.0e-5),
    "ucie_advanced": dict(cell_area=0.88, reach=2.0, bits_per_cell=64,
                          energy_per_bit=3.0e-5),
    "ucie_standard": dict(cell_area=1.76, reach=25.0, bits_per_cell=64,
                          energy_per_bit=8.0e-5),
}

DEFAULT_ASSEMBLY = dict(cost_per_bond=0.30, bond_yield=0.99,
                        substrate_cost_per_mm2=0.01, separation=0.1)
DEFAULT_VOLUME = 100_000_000

RENT_P_LOGIC = 0.45
RENT_P_MEMORY = 0.12
RENT_K = 4.0


def rent_terminals(components: float, k: float, p: float) -> int:
    """Terminal count T = round(k * C^p); scaling C by s scales T by s^p."""
    if components < 1:
        raise ValueError("components must be >= 1")
    if not 0.0 < p < 1.0:
        raise ValueError("Rent exponent must be in (0, 1)")
    return int(round(k * components ** p))


def _scaled_bandwidth(base_bits: int, area_scaling: float, p: float) -> int:
    return max(1, rent_terminals(area_scaling, float(base_bits), p))


@dataclass(frozen=True)
class TileSpec:
    """One waferscale tile: router + crossbar + shared mems + core triples."""

    cores_per_tile: int = 14
    shared_mems: int = 4
    has_router: bool = True
    has_crossbar: bool = True
    area_scaling: float = 1600.0
    power_scaling: float = 1600.0
    # base mm^2 / W per block at the reference node (calibration defaults)
    core_area: float = 0.030
    bus_area: float = 0.004
    private_mem_area: float = 0.020
    shared_mem_area: float = 0.045
    crossbar_area: float = 0.040
    router_area: float = 0.01275
    core_power: float = 0.018
    bus_power: float = 0.003
    private_mem_power: float = 0.005
    shared_mem_power: float = 0.008
    crossbar_power: float = 0.020
    router_power: float = 0.012
    # base interconnect widths in bits, before terminal-count scaling
    core_bus_bits: int = 64
    bus_crossbar_bits: int = 64
    crossbar_mem_bits: int = 128
    crossbar_router_bits: int = 256
    router_router_bits: int = 256

    @property
    def blocks_per_tile(self) -> int:
        return (3 * self.cores_per_tile + self.shared_mems
                + int(self.has_router) + int(self.has_crossbar))


@dataclass(frozen=True)
class GridSpec:
    rows: int = 1
    cols: int = 1

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid dimensions must be >= 1")

    @property
    def tiles(self) -> int:
        return self.rows * self.cols

    @classmethod
    def for_tiles(cls, tiles: int) -> "GridSpec":
        """Most-square factorization of a tile count."""
        if tiles < 1:
            raise ValueError("tiles must be >= 1")
        rows = int(math.sqrt(tiles))
        while tiles % rows != 0:
            rows -= 1
        return cls(rows=rows, cols=tiles // rows)


def gen_waferscale(grid: GridSpec, tile: TileSpec = TileSpec(),
                   io_class: str = "parallel",
                   reference_tech: str = REFERENCE_TECH) -> Netlist:
    """Build the tiled-mesh netlist, with areas/powers pre-scaled.

    Intra-tile links are single directed edges (core->bus, bus->crossbar,
    crossbar->shared mem, crossbar->router); tile-to-tile mesh links are
    directed pairs between neighboring routers.
    """
    blocks: list[Block] = []
    nets: list[Net] = []
    s_area = tile.area_scaling
    s_power = tile.power_scaling

    def add_block(name, area, power, kind):
        blocks.append(Block(id=name, area=area * s_area,
                            power=power * s_power,
                            reference_tech=reference_tech, kind=kind))

    def add_net(src, dst, base_bits, memory_side):
        p = RENT_P_MEMORY if memory_side else RENT_P_LOGIC
        nets.append(Net(source=src, sink=dst,
                        bandwidth=_scaled_bandwidth(base_bits, s_area, p),
                        reach_class=io_class))

    routers: dict[tuple[int, int], str] = {}
    for r in range(grid.rows):
        for c in range(grid.cols):
            t = f"t{r}x{c}"
            xbar = f"{t}_xbar"
            router = f"{t}_router"
            if tile.has_crossbar:
                add_block(xbar, tile.crossbar_area, tile.crossbar_power,
                          "logic")
            if tile.has_router:
                add_block(router, tile.router_area, tile.router_power, "logic")
                routers[(r, c)] = router
            for j in range(tile.shared_mems):
                mem = f"{t}_smem{j}"
                add_block(mem, tile.shared_mem_area, tile.shared_mem_power,
                          "memory")
                if tile.has_crossbar:
                    add_net(xbar, mem, tile.crossbar_mem_bits,
                            memory_side=True)
            for j in range(tile.cores_per_tile):
                core = f"{t}_core{j}"
                bus = f"{t}_bus{j}"
                pmem = f"{t}_pmem{j}"
                add_block(core, tile.core_area, tile.core_power, "logic")
                add_block(bus, tile.bus_area, tile.bus_power, "logic")
                add_block(pmem, tile.private_mem_area, tile.private_mem_power,
                          "memory")
                add_net(core, bus, tile.core_bus_bits, memory_side=False)
                add_net(bus, pmem, tile.core_bus_bits, memory_side=True)
                if tile.has_crossbar:
                    add_net(bus, xbar, tile.bus_crossbar_bits,
                            memory_side=False)
            if tile.has_crossbar and tile.has_router:
                add_net(xbar, router, tile.crossbar_router_bits,
                        memory_side=False)

    for (r, c), router in routers.items():
        for dr, dc in ((0, 1), (1, 0)):
            other = routers.get((r + dr, c + dc))
            if other is not None:
                for src, dst in ((router, other), (other, router)):
                    add_net(src, dst, tile.router_router_bits,
                            memory_side=False)

    return Netlist(blocks=tuple(blocks), nets=tuple(nets))


@dataclass(frozen=True)
class PoolDesignSpec:
    """Pool-style template: compute tiles on a two-level interconnect."""

    tiles: int = 16
    tiles_per_group: int = 4
    area_scaling: float = 100.0
    power_scaling: float = 100.0
    tile_area: float = 0.25
    local_area: float = 0.03
    remote_area: float = 0.08
    axi_area: float = 0.035
    tile_power: float = 0.12
    local_power: float = 0.010
    remote_power: float = 0.020
    axi_power: float = 0.012
    tile_local_bits: int = 512
    local_remote_bits: int = 256
    remote_axi_bits: int = 128

    @property
    def groups(self) -> int:
        return -(-self.tiles // self.tiles_per_group)

    @property
    def n_blocks(self) -> int:
        return self.tiles * 2 + self.groups * 2


def gen_pool_design(spec: PoolDesignSpec = PoolDesignSpec(),
                    io_class: str = "parallel",
                    reference_tech: str = REFERENCE_TECH) -> Netlist:
    """16 tiles + 24 interconnect blocks with the default spec (40 total)."""
    blocks: list[Block] = []
    nets: list[Net] = []
    s_area = spec.area_scaling
    s_power = spec.power_scaling

    def add_block(name, area, power, kind):
        blocks.append(Block(id=name, area=area * s_area,
                            power=power * s_power,
                            reference_tech=reference_tech, kind=kind))

    def add_net(src, dst, base_bits):
        nets.append(Net(
            source=src, sink=dst,
            bandwidth=_scaled_bandwidth(base_bits, s_area, RENT_P_LOGIC),
            reach_class=io_class))

    for g in range(spec.groups):
        add_block(f"g{g}_remote", spec.remote_area, spec.remote_power, "logic")
        add_block(f"g{g}_axi", spec.axi_area, spec.axi_power, "logic")
        add_net(f"g{g}_remote", f"g{g}_axi", spec.remote_axi_bits)
    for t in range(spec.tiles):
        g = t // spec.tiles_per_group
        add_block(f"tile{t}", spec.tile_area, spec.tile_power, "logic")
        add_block(f"tile{t}_local", spec.local_area, spec.local_power, "logic")
        add_net(f"tile{t}", f"tile{t}_local", spec.tile_local_bits)
        add_net(f"tile{t}_local", f"g{g}_remote", spec.local_remote_bits)
    return Netlist(blocks=tuple(blocks), nets=tuple(nets))


def default_system_config(reach_override: float | None = None,
                          volume: int = DEFAULT_VOLUME,
                          cost_weight: float = 1.0,
                          **config_kwargs) -> SystemConfig:
    """SystemConfig built from the shipped default tables.

    ``reach_override`` rewrites the reach of every IO class (used for reach
    sweeps); further keyword arguments pass straight to SystemConfig.
    """
    techs = {tid: TechNode(id=tid, **params)
             for tid, params in DEFAULT_TECHS.items()}
    io_cells = {}
    for iid, params in DEFAULT_IO_CELLS.items():
        if reach_override is not None:
            params = {**params, "reach": reach_override}
        io_cells[iid] = IOCellType(id=iid, **params)
    return SystemConfig(
        techs=techs, io_cells=io_cells,
        assembly=AssemblySpec(**DEFAULT_ASSEMBLY), volume=volume,
        objective=ObjectiveWeights(cost_weight=cost_weight,
                                   power_weight=1.0 - cost_weight),
        **config_kwargs)
