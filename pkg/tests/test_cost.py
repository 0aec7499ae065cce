import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chipletkit.cost import (CostError, ReticleViolation, build_chiplets,
                             cut_nets, die_cost, die_yield, dies_per_wafer,
                             estimate_package_area, io_cells_for_cut,
                             mixed_objective, monolithic_baseline,
                             system_cost)
from chipletkit.model import Netlist, ObjectiveWeights
from conftest import block, make_config, make_io, make_tech, net


def raster_dies_oracle(die_area, diameter):
    """Independent packing count: enumerate grid cells, test all corners."""
    radius = diameter / 2.0
    side = math.sqrt(die_area)
    count = 0
    span = int(math.ceil(radius / side)) + 1
    for i in range(-span, span):
        for j in range(-span, span):
            corners = [(i * side, j * side), ((i + 1) * side, j * side),
                       (i * side, (j + 1) * side),
                       ((i + 1) * side, (j + 1) * side)]
            if all(x * x + y * y <= radius * radius + 1e-6
                   for x, y in corners):
                count += 1
    return count


class TestDieYield:
    def test_zero_defects_is_perfect(self):
        tech = make_tech(defect=0.0)
        assert die_yield(500.0, tech) == 1.0

    def test_poisson_limit_closed_form(self):
        # 1 cm^2 at 0.1 defects/cm^2, clustering -> infinity: exp(-0.1)
        tech = make_tech(defect=0.1, alpha=math.inf)
        assert die_yield(100.0, tech) == pytest.approx(
            0.9048374180359595, rel=1e-12)

    def test_negative_binomial_closed_form(self):
        # 2 cm^2, 0.1 defects/cm^2, alpha 2: (1 + 0.1)^-2
        tech = make_tech(defect=0.1, alpha=2.0)
        assert die_yield(200.0, tech) == pytest.approx(
            1.0 / 1.21, rel=1e-12)

    @given(a1=st.floats(1.0, 800.0), a2=st.floats(1.0, 800.0))
    @settings(max_examples=100, deadline=None)
    def test_monotone_decreasing_in_area(self, a1, a2):
        tech = make_tech(defect=0.2, alpha=3.0)
        lo, hi = sorted((a1, a2))
        assert die_yield(hi, tech) <= die_yield(lo, tech) + 1e-15


class TestDiesPerWafer:
    @pytest.mark.parametrize("area", [858.0, 100.0, 25.0, 7.3, 412.0])
    def test_matches_raster_oracle(self, area):
        tech = make_tech()
        assert dies_per_wafer(area, tech) == raster_dies_oracle(area, 300.0)

    def test_full_reticle_die_count_scale(self):
        # edge-corrected count is below the area ratio but same order
        tech = make_tech()
        count = dies_per_wafer(858.0, tech)
        upper = math.pi * 150.0 ** 2 / 858.0
        assert 0.5 * upper < count <= upper

    def test_cost_is_wafer_cost_over_count(self):
        tech = make_tech(wafer_cost=5000.0)
        count = dies_per_wafer(100.0, tech)
        assert die_cost(100.0, tech) == pytest.approx(5000.0 / count)

    @given(a1=st.floats(0.5, 890.0), a2=st.floats(0.5, 890.0))
    @settings(max_examples=150, deadline=None)
    def test_die_cost_never_decreases_with_area(self, a1, a2):
        tech = make_tech()
        lo, hi = sorted((a1, a2))
        assert die_cost(hi, tech) >= die_cost(lo, tech) - 1e-12

    def test_equal_areas_equal_cost(self):
        tech = make_tech()
        assert die_cost(123.4, tech) == die_cost(123.4, tech)

    def test_reticle_violation(self):
        tech = make_tech(reticle=100.0)
        with pytest.raises(ReticleViolation):
            die_cost(101.0, tech)


def _two_block_netlist(bw=100):
    return Netlist(blocks=(block("x"), block("y")),
                   nets=(net("x", "y", bw=bw),))


class TestIoCells:
    def test_no_cut_no_cells(self):
        nl = _two_block_netlist()
        cells = io_cells_for_cut([0, 0], nl, {"io": make_io()})
        assert cells == [{}]

    def test_ceiling_against_per_bit_oracle(self):
        nl = _two_block_netlist(bw=100)
        io = make_io(bits_per_cell=64)
        cells = io_cells_for_cut([0, 1], nl, {"io": io})
        # oracle: hand bits to cells one by one, 64 per cell
        used = 0
        opened = 0
        for _ in range(100):
            if used == 0:
                opened += 1
                used = 64
            used -= 1
        assert opened == 2
        assert cells == [{"io": 2}, {"io": 2}]

    def test_staircase_boundary(self):
        nl = _two_block_netlist(bw=64)
        cells = io_cells_for_cut([0, 1], nl, {"io": make_io(bits_per_cell=64)})
        assert cells == [{"io": 1}, {"io": 1}]

    @given(bw=st.integers(1, 400))
    @settings(max_examples=200, deadline=None)
    def test_staircase_steps_at_cell_multiples(self, bw):
        io = make_io(bits_per_cell=32)
        nl = _two_block_netlist(bw=bw)
        count = io_cells_for_cut([0, 1], nl, {"io": io})[0]["io"]
        assert count == math.ceil(bw / 32)
        if bw % 32 != 0:
            nl2 = _two_block_netlist(bw=bw + 1)
            assert io_cells_for_cut([0, 1], nl2, {"io": io})[0]["io"] == count

    def test_cut_locality(self):
        # moving d only changes counts on chiplets touched by d's nets
        nl = Netlist(
            blocks=(block("a"), block("b"), block("c"), block("d")),
            nets=(net("a", "b", bw=64), net("c", "d", bw=64)))
        io = {"io": make_io(bits_per_cell=64)}
        before = io_cells_for_cut([0, 1, 2, 2], nl, io)
        after = io_cells_for_cut([0, 1, 2, 0], nl, io)
        assert before[1] == after[1] == {"io": 1}   # a-b cut untouched
        assert before[0] == {"io": 1}
        assert after[0] == {"io": 2}                # gains only d's net
        assert after[2] == {"io": 1}


class TestSystemCost:
    def test_single_chiplet_collapse(self):
        # perfect yields and negligible NRE: total = assembly + die
        techs = {"t1": make_tech(defect=0.0, nre=1e-6)}
        config = make_config(techs=techs, bond_yield=1.0,
                             volume=1_000_000_000)
        nl = _two_block_netlist()
        bd = system_cost([0, 0], ["t1"], nl, config)
        assert bd.total == pytest.approx(bd.assembly_cost + bd.die_costs[0],
                                         abs=1e-9)
        assert bd.die_yields == (1.0,)
        assert bd.assembly_yield == 1.0

    def test_recomposition_identity(self):
        config = make_config()
        nl = _two_block_netlist()
        bd = system_cost([0, 1], ["t1", "t1"], nl, config)
        recomposed = ((bd.assembly_cost
                       + sum(c / y for c, y in zip(bd.die_costs,
                                                   bd.die_yields)))
                      / bd.assembly_yield + bd.nre_total / bd.volume)
        assert bd.total == pytest.approx(recomposed, rel=1e-12)

    def test_zero_cut_power_is_block_sum(self):
        techs = {"t1": make_tech(), "t2": make_tech("t2", power=0.25)}
        config = make_config(techs=techs)
        nl = Netlist(blocks=(block("x", power=2.0), block("y", power=3.0)),
                     nets=(net("x", "y"),))
        bd = system_cost([0, 0], ["t2"], nl, config)
        assert bd.power_total == (2.0 + 3.0) * 0.25
        assert bd.io_power == 0.0

    def test_cut_power_adds_bit_energy(self):
        config = make_config(io_cells={"io": make_io(energy_per_bit=0.01)})
        nl = _two_block_netlist(bw=100)
        bd = system_cost([0, 1], ["t1", "t1"], nl, config)
        assert bd.io_power == pytest.approx(100 * 0.01)

    def test_defect_density_monotonicity(self):
        nl = _two_block_netlist()
        totals = []
        for d in (0.0, 0.1, 0.4, 1.0):
            config = make_config(techs={"t1": make_tech(defect=d)})
            totals.append(system_cost([0, 1], ["t1", "t1"], nl,
                                      config).total)
        assert totals == sorted(totals)

    def test_partitioning_beats_monolithic_at_high_defect(self):
        # four 100 mm^2 blocks; yield loss on the 400 mm^2 die dominates
        techs = {"t1": make_tech(defect=2.0, alpha=2.0, nre=1e-6)}
        config = make_config(techs=techs, cost_per_bond=0.01,
                             substrate=0.0001, volume=1_000_000_000)
        nl = Netlist(blocks=tuple(block(f"b{i}", area=100.0)
                                  for i in range(4)), nets=())
        mono = system_cost([0, 0, 0, 0], ["t1"], nl, config)
        quad = system_cost([0, 1, 2, 3], ["t1"] * 4, nl, config)
        assert quad.total < mono.total

    def test_genome_prefix_must_cover(self):
        nl = _two_block_netlist()
        with pytest.raises(CostError):
            build_chiplets([0, 1], ["t1"], nl, make_config())

    def test_reticle_violation_propagates(self):
        techs = {"t1": make_tech(reticle=1.0)}
        config = make_config(techs=techs)
        with pytest.raises(ReticleViolation):
            system_cost([0, 0], ["t1"], _two_block_netlist(), config)

    def test_chiplet_area_includes_io_cells(self):
        io = make_io(cell_area=0.5, bits_per_cell=50)
        config = make_config(io_cells={"io": io})
        nl = _two_block_netlist(bw=100)   # 2 cells per side
        chiplets = build_chiplets([0, 1], ["t1", "t1"], nl, config)
        assert chiplets[0].area == pytest.approx(1.0 + 2 * 0.5)
        assert chiplets[0].io_cells == {"io": 2}

    def test_estimate_package_single_chiplet_exact(self):
        assert estimate_package_area([9.0], 0.5) == pytest.approx(9.0)


class TestMixedObjective:
    def test_pure_cost_weights(self):
        config = make_config()
        nl = _two_block_netlist()
        baseline = monolithic_baseline(nl, config)
        bd = system_cost([0, 1], ["t1", "t1"], nl, config)
        pure = mixed_objective(bd, ObjectiveWeights(1.0, 0.0), baseline)
        assert pure == pytest.approx(bd.total / baseline[0])

    def test_pure_power_weights(self):
        config = make_config(cost_weight=0.0)
        nl = _two_block_netlist()
        baseline = monolithic_baseline(nl, config)
        bd = system_cost([0, 1], ["t1", "t1"], nl, config)
        pure = mixed_objective(bd, ObjectiveWeights(0.0, 1.0), baseline)
        assert pure == pytest.approx(bd.power_total / baseline[1])

    def test_equal_breakdowns_equal_objective(self):
        config = make_config()
        nl = _two_block_netlist()
        baseline = monolithic_baseline(nl, config)
        bd = system_cost([0, 1], ["t1", "t1"], nl, config)
        w = ObjectiveWeights(0.5, 0.5)
        assert mixed_objective(bd, w, baseline) == \
            mixed_objective(bd, w, baseline)

    def test_baseline_picks_cheapest_tech(self):
        techs = {"cheap": make_tech("cheap", wafer_cost=500.0),
                 "pricey": make_tech("pricey", wafer_cost=5000.0)}
        config = make_config(techs=techs)
        nl = Netlist(blocks=(block("x", tech="cheap"),
                             block("y", tech="cheap")),
                     nets=(net("x", "y"),))
        base_cost, _ = monolithic_baseline(nl, config)
        cheap = system_cost([0, 0], ["cheap"], nl, config,
                            enforce_reticle=False)
        assert base_cost == pytest.approx(cheap.total)

    def test_baseline_ignores_reticle(self):
        techs = {"t1": make_tech(reticle=0.5)}
        config = make_config(techs=techs)
        nl = _two_block_netlist()
        base_cost, _ = monolithic_baseline(nl, config)   # must not raise
        assert base_cost > 0


def test_cut_nets_lists_crossers():
    nl = Netlist(blocks=(block("a"), block("b"), block("c")),
                 nets=(net("a", "b"), net("b", "c")))
    crossing = cut_nets([0, 0, 1], nl)
    assert [(n.source, n.sink) for n in crossing] == [("b", "c")]
