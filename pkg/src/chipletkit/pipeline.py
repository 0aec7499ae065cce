"""Glue between partitions, the floorplanner and manager of the cost model.

The Evaluator is the single path through which optimizers score a candidate
(partition, technology assignment): it builds the chiplet set, floorplans it
in the requested mode, prices it and reports feasibility. Evaluations are
memoized and seeded on the canonical form of the solution, so equivalent
relabelings always score identically and a fixed master seed reproduces every
number regardless of evaluation order or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import cost as costmod
from .floorplan import (ChipletNet, Floorplan, anneal, check_feasible,
                        evaluate_floorplan)
from .model import IOCellType, Netlist, SystemConfig
from .seeding import stable_seed


def canonical_solution(assignment: Sequence[int],
                       techs: Sequence[str]) -> tuple[tuple[int, ...],
                                                      tuple[str, ...]]:
    """Relabel chiplets by first appearance; carry techs along.

    Two solutions with the same block grouping and the same per-group
    technology map to the same canonical form.
    """
    mapping: dict[int, int] = {}
    out = []
    for a in assignment:
        if a not in mapping:
            mapping[a] = len(mapping)
        out.append(mapping[a])
    new_techs = [""] * len(mapping)
    for old, new in mapping.items():
        new_techs[new] = techs[old]
    return tuple(out), tuple(new_techs)


def chiplet_nets(assignment: Sequence[int], netlist: Netlist,
                 io_table: Mapping[str, IOCellType]) -> list[ChipletNet]:
    """Aggregate cut block-nets into chiplet-level nets.

    Nets between the same chiplet pair with the same reach class merge, with
    bandwidths summed; direction is irrelevant for geometry.
    """
    bundles: dict[tuple[int, int, str], int] = {}
    for net in netlist.nets:
        ca = assignment[netlist.index_of(net.source)]
        cb = assignment[netlist.index_of(net.sink)]
        if ca == cb:
            continue
        key = (min(ca, cb), max(ca, cb), net.reach_class)
        bundles[key] = bundles.get(key, 0) + net.bandwidth
    out = []
    for (a, b, io_id), bits in sorted(bundles.items()):
        cell = io_table[io_id]
        out.append(ChipletNet(a=a, b=b, bits=bits, reach=cell.reach,
                              cell_area=cell.cell_area))
    return out


@dataclass(frozen=True)
class Evaluation:
    """One scored solution; ``objective`` is the weighted mixed objective."""

    assignment: tuple[int, ...]          # canonical labels
    techs: tuple[str, ...]               # technology per canonical chiplet
    objective: float
    feasible: bool
    breakdown: costmod.CostBreakdown | None
    floorplan: Floorplan | None
    violations: tuple = ()
    error: str | None = None

    @property
    def n_chiplets(self) -> int:
        return len(self.techs)


class Evaluator:
    """Memoizing fitness oracle over (partition, genome) candidates."""

    def __init__(self, netlist: Netlist, config: SystemConfig,
                 master_seed: int = 0,
                 baseline: tuple[float, float] | None = None):
        self.netlist = netlist
        self.config = config
        self.master_seed = master_seed
        self.baseline = (baseline if baseline is not None
                         else costmod.monolithic_baseline(netlist, config))
        self._cache: dict[tuple, Evaluation] = {}
        self.n_evaluations = 0   # cache misses, i.e. real model invocations
        self.n_hits = 0

    def evaluate(self, partition, genome: Sequence[str],
                 mode: str = "fast") -> Evaluation:
        assignment = tuple(getattr(partition, "assignment", partition))
        k = max(assignment) + 1
        if len(genome) < k:
            raise costmod.CostError(
                f"genome of length {len(genome)} cannot cover {k} chiplets")
        canon_assign, canon_techs = canonical_solution(assignment,
                                                       tuple(genome[:k]))
        key = (canon_assign, canon_techs, mode)
        hit = self._cache.get(key)
        if hit is not None:
            self.n_hits += 1
            return hit
        self.n_evaluations += 1
        result = self._evaluate_canonical(canon_assign, canon_techs, mode)
        self._cache[key] = result
        return result

    def _evaluate_canonical(self, assignment: tuple[int, ...],
                            techs: tuple[str, ...], mode: str) -> Evaluation:
        config = self.config
        try:
            chiplets = costmod.build_chiplets(assignment, techs, self.netlist,
                                              config)
        except costmod.CostError as exc:
            return Evaluation(assignment=assignment, techs=techs,
                              objective=math.inf, feasible=False,
                              breakdown=None, floorplan=None, error=str(exc))

        nets = chiplet_nets(assignment, self.netlist, config.io_cells)
        anneal_cfg = config.floorplan.config_for(mode).with_seed(
            stable_seed(self.master_seed, mode, assignment, techs))
        fp = anneal([c.area for c in chiplets], nets,
                    config.assembly.separation, anneal_cfg,
                    alpha=config.floorplan.alpha, beta=config.floorplan.beta,
                    gamma=config.floorplan.gamma)
        report = check_feasible(fp, nets, config.assembly.separation)
        try:
            breakdown = costmod.system_cost(
                assignment, techs, self.netlist, config,
                package_area=fp.package[0] * fp.package[1])
        except costmod.CostError as exc:
            return Evaluation(assignment=assignment, techs=techs,
                              objective=math.inf, feasible=False,
                              breakdown=None, floorplan=fp,
                              violations=report.violations, error=str(exc))
        objective = costmod.mixed_objective(breakdown, config.objective,
                                            self.baseline)
        return Evaluation(assignment=assignment, techs=techs,
                          objective=objective, feasible=report.feasible,
                          breakdown=breakdown, floorplan=fp,
                          violations=report.violations)

    def fp_objective(self, evaluation: Evaluation):
        """Floorplan objective components of an evaluation's plan."""
        nets = chiplet_nets(evaluation.assignment, self.netlist,
                            self.config.io_cells)
        return evaluate_floorplan(evaluation.floorplan, nets,
                                  self.config.floorplan.alpha,
                                  self.config.floorplan.beta,
                                  self.config.floorplan.gamma)
