"""Domain model: blocks, nets, technology nodes, IO cell types, system config.

Input files are JSON with a versioned schema (see docs/FORMATS.md). Model
objects are immutable after parsing and safe to share across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from .configs import AnnealConfig, FloorplanSettings, GAConfig, RefineBudget

NETLIST_SCHEMA = "netlist-v1"
CONFIG_SCHEMA = "config-v1"

BLOCK_KINDS = ("logic", "memory")


class SchemaError(ValueError):
    """Input file is structurally malformed (missing/ill-typed field)."""


class ValidationError(ValueError):
    """Input violates a model invariant (dangling reference, duplicate id...)."""


class UnknownTechError(ValidationError):
    """A technology id is not present in the technology table."""


@dataclass(frozen=True)
class Block:
    """An IP block with area/power given in its reference technology node."""

    id: str
    area: float       # mm^2 at reference_tech
    power: float      # W at reference_tech
    reference_tech: str
    kind: str = "logic"

    def __post_init__(self):
        if self.area <= 0:
            raise ValidationError(f"block {self.id!r}: area must be > 0")
        if self.power < 0:
            raise ValidationError(f"block {self.id!r}: power must be >= 0")
        if self.kind not in BLOCK_KINDS:
            raise ValidationError(
                f"block {self.id!r}: kind must be one of {BLOCK_KINDS}")


@dataclass(frozen=True)
class Net:
    """A directed two-pin connection carrying ``bandwidth`` bits."""

    source: str
    sink: str
    bandwidth: int
    reach_class: str

    def __post_init__(self):
        if self.source == self.sink:
            raise ValidationError(
                f"net {self.source!r}->{self.sink!r}: self-loops are rejected")
        if self.bandwidth < 1:
            raise ValidationError(
                f"net {self.source!r}->{self.sink!r}: bandwidth must be >= 1")


@dataclass(frozen=True)
class Netlist:
    blocks: tuple[Block, ...]
    nets: tuple[Net, ...]

    def __post_init__(self):
        index: dict[str, int] = {}
        for i, b in enumerate(self.blocks):
            if b.id in index:
                raise ValidationError(f"duplicate block id {b.id!r}")
            index[b.id] = i
        for net in self.nets:
            for end in (net.source, net.sink):
                if end not in index:
                    raise ValidationError(
                        f"net {net.source!r}->{net.sink!r} references unknown "
                        f"block {end!r}")
        object.__setattr__(self, "_index", index)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def index_of(self, block_id: str) -> int:
        try:
            return self._index[block_id]
        except KeyError:
            raise ValidationError(f"unknown block id {block_id!r}") from None

    def block(self, block_id: str) -> Block:
        return self.blocks[self.index_of(block_id)]


@dataclass(frozen=True)
class TechNode:
    """A manufacturing technology node.

    Area/power scale factors are relative to a common baseline, so converting
    a block between nodes uses the ratio of the two nodes' factors. Yield
    follows a negative-binomial model shaped by ``clustering_alpha``.
    """

    id: str
    logic_area_scale: float
    memory_area_scale: float
    power_scale: float
    wafer_cost: float          # currency per wafer
    wafer_diameter: float      # mm
    defect_density: float      # defects per cm^2
    clustering_alpha: float
    nre_design_cost: float     # currency per tapeout in this node
    reticle_max_area: float    # mm^2

    def __post_init__(self):
        positive = ("logic_area_scale", "memory_area_scale", "power_scale",
                    "wafer_cost", "wafer_diameter", "clustering_alpha",
                    "nre_design_cost", "reticle_max_area")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValidationError(f"tech {self.id!r}: {name} must be > 0")
        if self.defect_density < 0:
            raise ValidationError(
                f"tech {self.id!r}: defect_density must be >= 0")


@dataclass(frozen=True)
class IOCellType:
    """An inter-chiplet IO transceiver cell type.

    ``reach`` is the maximum wirelength the cell can drive; ``bits_per_cell``
    discretizes cut bandwidth into cells (the staircase).
    """

    id: str
    cell_area: float       # mm^2 per cell
    reach: float           # mm
    bits_per_cell: int
    energy_per_bit: float  # W per cut bit

    def __post_init__(self):
        if self.cell_area <= 0 or self.reach <= 0:
            raise ValidationError(
                f"io {self.id!r}: cell_area and reach must be > 0")
        if self.bits_per_cell < 1:
            raise ValidationError(f"io {self.id!r}: bits_per_cell must be >= 1")
        if self.energy_per_bit < 0:
            raise ValidationError(
                f"io {self.id!r}: energy_per_bit must be >= 0")


@dataclass(frozen=True)
class AssemblySpec:
    cost_per_bond: float           # currency per chiplet placed
    bond_yield: float              # per-chiplet bonding success probability
    substrate_cost_per_mm2: float
    separation: float              # minimum chiplet-to-chiplet gap, mm

    def __post_init__(self):
        if not 0.0 < self.bond_yield <= 1.0:
            raise ValidationError("bond_yield must be in (0, 1]")
        if min(self.cost_per_bond, self.substrate_cost_per_mm2,
               self.separation) < 0:
            raise ValidationError("assembly costs and separation must be >= 0")


@dataclass(frozen=True)
class ObjectiveWeights:
    cost_weight: float = 1.0
    power_weight: float = 0.0

    def __post_init__(self):
        for w in (self.cost_weight, self.power_weight):
            if not 0.0 <= w <= 1.0:
                raise ValidationError("objective weights must be in [0, 1]")
        if not math.isclose(self.cost_weight + self.power_weight, 1.0,
                            rel_tol=1e-9, abs_tol=1e-12):
            raise ValidationError("objective weights must sum to 1")


@dataclass(frozen=True)
class SystemConfig:
    techs: Mapping[str, TechNode]
    io_cells: Mapping[str, IOCellType]
    assembly: AssemblySpec
    volume: int
    objective: ObjectiveWeights = ObjectiveWeights()
    ga: GAConfig = GAConfig()
    floorplan: FloorplanSettings = FloorplanSettings()
    refine: RefineBudget = RefineBudget()

    def __post_init__(self):
        if not self.techs:
            raise ValidationError("technology table must not be empty")
        if self.volume < 1:
            raise ValidationError("volume must be >= 1")

    def tech(self, tech_id: str) -> TechNode:
        try:
            return self.techs[tech_id]
        except KeyError:
            raise UnknownTechError(f"unknown technology {tech_id!r}") from None

    def io_cell(self, io_id: str) -> IOCellType:
        try:
            return self.io_cells[io_id]
        except KeyError:
            raise ValidationError(f"unknown IO cell type {io_id!r}") from None


def scale_block(block: Block, target: TechNode,
                techs: Mapping[str, TechNode]) -> tuple[float, float]:
    """Convert a block's area and power from its reference node to ``target``.

    Multiplicative in the node scale-factor ratio; logic and memory blocks use
    different area factors. Scaling to the reference node is the identity.
    """
    if block.reference_tech not in techs:
        raise UnknownTechError(
            f"block {block.id!r} references unknown tech "
            f"{block.reference_tech!r}")
    ref = techs[block.reference_tech]
    if target.id == ref.id:
        return block.area, block.power
    if block.kind == "memory":
        area_ratio = target.memory_area_scale / ref.memory_area_scale
    else:
        area_ratio = target.logic_area_scale / ref.logic_area_scale
    power_ratio = target.power_scale / ref.power_scale
    return block.area * area_ratio, block.power * power_ratio


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _require(data: dict, key: str, kind, where: str):
    if key not in data:
        raise SchemaError(f"{where}: missing field {key!r}")
    value = data[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise SchemaError(
            f"{where}: field {key!r} must be {kind.__name__}, "
            f"got {type(value).__name__}")
    return value


def _optional(data: dict, key: str, kind, where: str, default):
    if key not in data:
        return default
    return _require(data, key, kind, where)


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must be an object")
    return data


def parse_netlist_data(data: dict) -> Netlist:
    schema = _optional(data, "schema", str, "netlist", NETLIST_SCHEMA)
    if schema != NETLIST_SCHEMA:
        raise SchemaError(f"unsupported netlist schema {schema!r}")
    raw_blocks = _require(data, "blocks", list, "netlist")
    raw_nets = _optional(data, "nets", list, "netlist", [])
    blocks = []
    for i, rb in enumerate(raw_blocks):
        if not isinstance(rb, dict):
            raise SchemaError(f"blocks[{i}] must be an object")
        where = f"blocks[{i}]"
        blocks.append(Block(
            id=_require(rb, "id", str, where),
            area=_require(rb, "area", float, where),
            power=_require(rb, "power", float, where),
            reference_tech=_require(rb, "reference_tech", str, where),
            kind=_optional(rb, "kind", str, where, "logic"),
        ))
    nets = []
    for i, rn in enumerate(raw_nets):
        if not isinstance(rn, dict):
            raise SchemaError(f"nets[{i}] must be an object")
        where = f"nets[{i}]"
        nets.append(Net(
            source=_require(rn, "source", str, where),
            sink=_require(rn, "sink", str, where),
            bandwidth=_require(rn, "bandwidth", int, where),
            reach_class=_require(rn, "reach_class", str, where),
        ))
    return Netlist(blocks=tuple(blocks), nets=tuple(nets))


def _parse_anneal(data: dict, where: str, factory) -> AnnealConfig:
    known = {"perturbations": int, "cooling_rate": float, "walkers": int,
             "sync_period": int, "seed": int}
    kwargs = {}
    for key, kind in known.items():
        if key in data:
            kwargs[key] = _require(data, key, kind, where)
    if "initial_temp" in data:
        raw = data["initial_temp"]
        kwargs["initial_temp"] = (None if raw is None
                                  else _require(data, "initial_temp", float,
                                                where))
    if "move_probs" in data:
        probs = _require(data, "move_probs", list, where)
        kwargs["move_probs"] = tuple(float(p) for p in probs)
    try:
        return factory(**kwargs)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def parse_config_data(data: dict) -> SystemConfig:
    schema = _optional(data, "schema", str, "config", CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise SchemaError(f"unsupported config schema {schema!r}")

    raw_techs = _require(data, "techs", dict, "config")
    techs = {}
    for tid, rt in raw_techs.items():
        if not isinstance(rt, dict):
            raise SchemaError(f"techs[{tid!r}] must be an object")
        where = f"techs[{tid!r}]"
        techs[tid] = TechNode(
            id=tid,
            logic_area_scale=_require(rt, "logic_area_scale", float, where),
            memory_area_scale=_require(rt, "memory_area_scale", float, where),
            power_scale=_require(rt, "power_scale", float, where),
            wafer_cost=_require(rt, "wafer_cost", float, where),
            wafer_diameter=_require(rt, "wafer_diameter", float, where),
            defect_density=_require(rt, "defect_density", float, where),
            clustering_alpha=_require(rt, "clustering_alpha", float, where),
            nre_design_cost=_require(rt, "nre_design_cost", float, where),
            reticle_max_area=_require(rt, "reticle_max_area", float, where),
        )

    raw_ios = _require(data, "io_cells", dict, "config")
    io_cells = {}
    for iid, ri in raw_ios.items():
        if not isinstance(ri, dict):
            raise SchemaError(f"io_cells[{iid!r}] must be an object")
        where = f"io_cells[{iid!r}]"
        io_cells[iid] = IOCellType(
            id=iid,
            cell_area=_require(ri, "cell_area", float, where),
            reach=_require(ri, "reach", float, where),
            bits_per_cell=_require(ri, "bits_per_cell", int, where),
            energy_per_bit=_require(ri, "energy_per_bit", float, where),
        )

    ra = _require(data, "assembly", dict, "config")
    assembly = AssemblySpec(
        cost_per_bond=_require(ra, "cost_per_bond", float, "assembly"),
        bond_yield=_require(ra, "bond_yield", float, "assembly"),
        substrate_cost_per_mm2=_require(ra, "substrate_cost_per_mm2", float,
                                        "assembly"),
        separation=_require(ra, "separation", float, "assembly"),
    )

    volume = _require(data, "volume", int, "config")

    ro = _optional(data, "objective", dict, "config", None)
    if ro is None:
        objective = ObjectiveWeights()
    else:
        objective = ObjectiveWeights(
            cost_weight=_require(ro, "cost_weight", float, "objective"),
            power_weight=_require(ro, "power_weight", float, "objective"),
        )

    rga = _optional(data, "ga", dict, "config", None)
    if rga is None:
        ga = GAConfig()
    else:
        fields = {"tot_pop": int, "k_pop": int, "zeta": int, "sigma": int,
                  "psi": int, "epsilon": int, "delta_threshold": float,
                  "p_c": float, "p_m": float, "K_max": int, "seed": int}
        kwargs = {k: _require(rga, k, t, "ga") for k, t in fields.items()
                  if k in rga}
        try:
            ga = GAConfig(**kwargs)
        except ValueError as exc:
            raise SchemaError(f"ga: {exc}") from exc

    rfp = _optional(data, "floorplan", dict, "config", None)
    if rfp is None:
        floorplan = FloorplanSettings()
    else:
        kwargs = {}
        for w in ("alpha", "beta", "gamma"):
            if w in rfp:
                kwargs[w] = _require(rfp, w, float, "floorplan")
        if "standard" in rfp:
            kwargs["standard"] = _parse_anneal(
                _require(rfp, "standard", dict, "floorplan"),
                "floorplan.standard", AnnealConfig.standard)
        if "fast" in rfp:
            kwargs["fast"] = _parse_anneal(
                _require(rfp, "fast", dict, "floorplan"),
                "floorplan.fast", AnnealConfig.fast)
        floorplan = FloorplanSettings(**kwargs)

    rrf = _optional(data, "refine", dict, "config", None)
    if rrf is None:
        refine = RefineBudget()
    else:
        fields = {"fm_passes": int, "kl_passes": int, "fm_quota": float,
                  "kl_quota": float, "pool_spectral": int,
                  "pool_expansion": int, "pool_random": int, "pool_mincut": int}
        kwargs = {k: _require(rrf, k, t, "refine") for k, t in fields.items()
                  if k in rrf}
        try:
            refine = RefineBudget(**kwargs)
        except ValueError as exc:
            raise SchemaError(f"refine: {exc}") from exc

    return SystemConfig(techs=techs, io_cells=io_cells, assembly=assembly,
                        volume=volume, objective=objective, ga=ga,
                        floorplan=floorplan, refine=refine)


def cross_validate(netlist: Netlist, config: SystemConfig) -> None:
    """Check references from the netlist into the config tables."""
    for block in netlist.blocks:
        if block.reference_tech not in config.techs:
            raise ValidationError(
                f"block {block.id!r} references unknown tech "
                f"{block.reference_tech!r}")
    for net in netlist.nets:
        if net.reach_class not in config.io_cells:
            raise ValidationError(
                f"net {net.source!r}->{net.sink!r} references unknown IO cell "
                f"type {net.reach_class!r}")


def parse_system(netlist_file, config_file) -> tuple[Netlist, SystemConfig]:
    """Load and cross-validate a netlist file and a config file."""
    netlist = parse_netlist_data(_load_json(netlist_file))
    config = parse_config_data(_load_json(config_file))
    cross_validate(netlist, config)
    return netlist, config


# ---------------------------------------------------------------------------
# Serialization (inverse of parsing; used by the generator and the tests)
# ---------------------------------------------------------------------------

def netlist_to_data(netlist: Netlist) -> dict:
    return {
        "schema": NETLIST_SCHEMA,
        "blocks": [
            {"id": b.id, "area": b.area, "power": b.power,
             "reference_tech": b.reference_tech, "kind": b.kind}
            for b in netlist.blocks
        ],
        "nets": [
            {"source": n.source, "sink": n.sink, "bandwidth": n.bandwidth,
             "reach_class": n.reach_class}
            for n in netlist.nets
        ],
    }


def _anneal_to_data(cfg: AnnealConfig) -> dict:
    return {
        "perturbations": cfg.perturbations,
        "cooling_rate": cfg.cooling_rate,
        "initial_temp": cfg.initial_temp,
        "walkers": cfg.walkers,
        "sync_period": cfg.sync_period,
        "move_probs": list(cfg.move_probs),
        "seed": cfg.seed,
    }


def config_to_data(config: SystemConfig) -> dict:
    return {
        "schema": CONFIG_SCHEMA,
        "techs": {
            t.id: {
                "logic_area_scale": t.logic_area_scale,
                "memory_area_scale": t.memory_area_scale,
                "power_scale": t.power_scale,
                "wafer_cost": t.wafer_cost,
                "wafer_diameter": t.wafer_diameter,
                "defect_density": t.defect_density,
                "clustering_alpha": t.clustering_alpha,
                "nre_design_cost": t.nre_design_cost,
                "reticle_max_area": t.reticle_max_area,
            }
            for t in config.techs.values()
        },
        "io_cells": {
            c.id: {
                "cell_area": c.cell_area,
                "reach": c.reach,
                "bits_per_cell": c.bits_per_cell,
                "energy_per_bit": c.energy_per_bit,
            }
            for c in config.io_cells.values()
        },
        "assembly": {
            "cost_per_bond": config.assembly.cost_per_bond,
            "bond_yield": config.assembly.bond_yield,
            "substrate_cost_per_mm2": config.assembly.substrate_cost_per_mm2,
            "separation": config.assembly.separation,
        },
        "volume": config.volume,
        "objective": {
            "cost_weight": config.objective.cost_weight,
            "power_weight": config.objective.power_weight,
        },
        "ga": {
            "tot_pop": config.ga.tot_pop, "k_pop": config.ga.k_pop,
            "zeta": config.ga.zeta, "sigma": config.ga.sigma,
            "psi": config.ga.psi, "epsilon": config.ga.epsilon,
            "delta_threshold": config.ga.delta_threshold,
            "p_c": config.ga.p_c, "p_m": config.ga.p_m,
            "K_max": config.ga.K_max, "seed": config.ga.seed,
        },
        "floorplan": {
            "alpha": config.floorplan.alpha,
            "beta": config.floorplan.beta,
            "gamma": config.floorplan.gamma,
            "standard": _anneal_to_data(config.floorplan.standard),
            "fast": _anneal_to_data(config.floorplan.fast),
        },
        "refine": {
            "fm_passes": config.refine.fm_passes,
            "kl_passes": config.refine.kl_passes,
            "fm_quota": config.refine.fm_quota,
            "kl_quota": config.refine.kl_quota,
            "pool_spectral": config.refine.pool_spectral,
            "pool_expansion": config.refine.pool_expansion,
            "pool_random": config.refine.pool_random,
            "pool_mincut": config.refine.pool_mincut,
        },
    }


def write_json(path, data: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
