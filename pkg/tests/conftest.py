"""Shared builders: tiny netlists, cheap configs, deterministic helpers.

Anneal budgets in test configs are deliberately small; every hyperparameter
is data, so tests exercise the same code paths the full-size defaults use.
"""

import dataclasses

import pytest

from chipletkit.configs import (AnnealConfig, FloorplanSettings, GAConfig,
                                RefineBudget)
from chipletkit.model import (AssemblySpec, Block, IOCellType, Net, Netlist,
                              ObjectiveWeights, SystemConfig, TechNode)


def make_tech(tech_id="t1", logic=1.0, memory=1.0, power=1.0,
              wafer_cost=1000.0, defect=0.1, alpha=2.0, nre=1e6,
              reticle=900.0, diameter=300.0):
    return TechNode(id=tech_id, logic_area_scale=logic,
                    memory_area_scale=memory, power_scale=power,
                    wafer_cost=wafer_cost, wafer_diameter=diameter,
                    defect_density=defect, clustering_alpha=alpha,
                    nre_design_cost=nre, reticle_max_area=reticle)


def make_io(io_id="io", cell_area=0.01, reach=100.0, bits_per_cell=16,
            energy_per_bit=1e-4):
    return IOCellType(id=io_id, cell_area=cell_area, reach=reach,
                      bits_per_cell=bits_per_cell,
                      energy_per_bit=energy_per_bit)


def tiny_anneal_settings(standard=800, fast=200, walkers=2):
    return FloorplanSettings(
        standard=AnnealConfig.standard(perturbations=standard,
                                       walkers=walkers),
        fast=AnnealConfig.fast(perturbations=fast, walkers=1))


def make_config(techs=None, io_cells=None, cost_per_bond=0.05,
                bond_yield=0.99, substrate=0.001, separation=0.1,
                volume=1_000_000, cost_weight=1.0, ga=None, floorplan=None,
                refine=None):
    if techs is None:
        techs = {"t1": make_tech("t1")}
    if io_cells is None:
        io_cells = {"io": make_io()}
    return SystemConfig(
        techs=techs, io_cells=io_cells,
        assembly=AssemblySpec(cost_per_bond=cost_per_bond,
                              bond_yield=bond_yield,
                              substrate_cost_per_mm2=substrate,
                              separation=separation),
        volume=volume,
        objective=ObjectiveWeights(cost_weight=cost_weight,
                                   power_weight=1.0 - cost_weight),
        ga=ga if ga is not None else GAConfig(),
        floorplan=floorplan if floorplan is not None
        else tiny_anneal_settings(),
        refine=refine if refine is not None else RefineBudget())


def block(bid, area=1.0, power=0.1, tech="t1", kind="logic"):
    return Block(id=bid, area=area, power=power, reference_tech=tech,
                 kind=kind)


def net(src, dst, bw=16, io="io"):
    return Net(source=src, sink=dst, bandwidth=bw, reach_class=io)


def bridged_cliques(clique_size=4, inner_bw=100, bridge_bw=1, area=1.0,
                    power=0.1):
    """Two cliques joined by one weak edge; the natural 2-way cut is the
    bridge."""
    blocks = []
    nets = []
    for side, prefix in enumerate("ab"):
        for i in range(clique_size):
            blocks.append(block(f"{prefix}{i}", area=area, power=power))
        for i in range(clique_size):
            for j in range(i + 1, clique_size):
                nets.append(net(f"{prefix}{i}", f"{prefix}{j}", bw=inner_bw))
    nets.append(net("a0", "b0", bw=bridge_bw))
    return Netlist(blocks=tuple(blocks), nets=tuple(nets))


def path_netlist(n=8, bw=10):
    blocks = tuple(block(f"p{i}") for i in range(n))
    nets = tuple(net(f"p{i}", f"p{i+1}", bw=bw) for i in range(n - 1))
    return Netlist(blocks=blocks, nets=nets)


def star_netlist(leaves=6, bw=10):
    blocks = (block("hub"),) + tuple(block(f"leaf{i}")
                                     for i in range(leaves))
    nets = tuple(net("hub", f"leaf{i}", bw=bw) for i in range(leaves))
    return Netlist(blocks=blocks, nets=nets)


@pytest.fixture
def toy_config():
    return make_config()


@pytest.fixture
def bridge_netlist():
    return bridged_cliques()
