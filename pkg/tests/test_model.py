import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chipletkit.model import (Block, Net, Netlist, SchemaError,
                              UnknownTechError, ValidationError,
                              config_to_data, netlist_to_data,
                              parse_config_data, parse_netlist_data,
                              parse_system, scale_block, write_json)
from chipletkit.testgen import default_system_config
from conftest import block, make_config, make_tech, net


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def _minimal_netlist_data():
    return {
        "schema": "netlist-v1",
        "blocks": [
            {"id": "b0", "area": 2.0, "power": 0.5, "reference_tech": "t1"},
            {"id": "b1", "area": 1.0, "power": 0.2, "reference_tech": "t1",
             "kind": "memory"},
        ],
        "nets": [
            {"source": "b0", "sink": "b1", "bandwidth": 32,
             "reach_class": "io"},
        ],
    }


class TestParsing:
    def test_minimal_system(self, tmp_path):
        np_ = _write(tmp_path, "n.json", _minimal_netlist_data())
        cp = _write(tmp_path, "c.json", config_to_data(make_config()))
        netlist, config = parse_system(np_, cp)
        assert netlist.n_blocks == 2
        assert len(netlist.nets) == 1
        assert "t1" in config.techs

    def test_dangling_net_reference(self, tmp_path):
        data = _minimal_netlist_data()
        data["nets"][0]["sink"] = "X99"
        np_ = _write(tmp_path, "n.json", data)
        cp = _write(tmp_path, "c.json", config_to_data(make_config()))
        with pytest.raises(ValidationError, match="X99"):
            parse_system(np_, cp)

    def test_duplicate_block_id(self):
        data = _minimal_netlist_data()
        data["blocks"][1]["id"] = "b0"
        with pytest.raises(ValidationError, match="duplicate"):
            parse_netlist_data(data)

    def test_self_loop_rejected(self):
        data = _minimal_netlist_data()
        data["nets"][0]["sink"] = "b0"
        with pytest.raises(ValidationError, match="self-loop"):
            parse_netlist_data(data)

    def test_missing_field_is_schema_error(self):
        data = _minimal_netlist_data()
        del data["blocks"][0]["area"]
        with pytest.raises(SchemaError, match="area"):
            parse_netlist_data(data)

    def test_wrong_type_is_schema_error(self):
        data = _minimal_netlist_data()
        data["nets"][0]["bandwidth"] = "wide"
        with pytest.raises(SchemaError, match="bandwidth"):
            parse_netlist_data(data)

    def test_unknown_tech_reference(self, tmp_path):
        data = _minimal_netlist_data()
        data["blocks"][0]["reference_tech"] = "3nm"
        np_ = _write(tmp_path, "n.json", data)
        cp = _write(tmp_path, "c.json", config_to_data(make_config()))
        with pytest.raises(ValidationError, match="3nm"):
            parse_system(np_, cp)

    def test_unknown_reach_class(self, tmp_path):
        data = _minimal_netlist_data()
        data["nets"][0]["reach_class"] = "exotic"
        np_ = _write(tmp_path, "n.json", data)
        cp = _write(tmp_path, "c.json", config_to_data(make_config()))
        with pytest.raises(ValidationError, match="exotic"):
            parse_system(np_, cp)

    def test_bad_kind_rejected(self):
        with pytest.raises(ValidationError, match="kind"):
            block("b", kind="analog")

    def test_bandwidth_must_be_positive(self):
        with pytest.raises(ValidationError):
            net("a", "b", bw=0)


class TestRoundTrip:
    def test_netlist_round_trip(self, tmp_path):
        data = _minimal_netlist_data()
        netlist = parse_netlist_data(data)
        again = parse_netlist_data(netlist_to_data(netlist))
        assert again == netlist

    def test_config_round_trip(self):
        config = default_system_config()
        again = parse_config_data(config_to_data(config))
        assert again == config

    def test_write_json_round_trip(self, tmp_path):
        config = make_config()
        path = tmp_path / "cfg.json"
        write_json(path, config_to_data(config))
        assert parse_config_data(json.loads(path.read_text())) == config


class TestScaling:
    def test_identity_on_reference_node(self):
        b = block("b", area=3.0, power=0.7)
        techs = {"t1": make_tech("t1")}
        assert scale_block(b, techs["t1"], techs) == (3.0, 0.7)

    def test_logic_ratio_ten(self):
        # 10 mm^2 shrinks to 1 mm^2 when the node ratio is 10x
        techs = {"45nm": make_tech("45nm", logic=1.0),
                 "10nm": make_tech("10nm", logic=0.1)}
        b = Block(id="b", area=10.0, power=1.0, reference_tech="45nm")
        area, _ = scale_block(b, techs["10nm"], techs)
        assert area == pytest.approx(1.0)

    def test_memory_uses_memory_factor(self):
        techs = {"a": make_tech("a", logic=1.0, memory=1.0),
                 "b": make_tech("b", logic=0.1, memory=0.5)}
        b = Block(id="m", area=8.0, power=1.0, reference_tech="a",
                  kind="memory")
        area, _ = scale_block(b, techs["b"], techs)
        assert area == pytest.approx(4.0)

    def test_unknown_reference_raises(self):
        b = Block(id="b", area=1.0, power=0.0, reference_tech="ghost")
        with pytest.raises(UnknownTechError):
            scale_block(b, make_tech("t1"), {"t1": make_tech("t1")})

    @given(sa=st.floats(0.05, 20), sb=st.floats(0.05, 20),
           sc=st.floats(0.05, 20), area=st.floats(0.01, 1000))
    @settings(max_examples=200, deadline=None)
    def test_scaling_composes_multiplicatively(self, sa, sb, sc, area):
        techs = {
            "a": make_tech("a", logic=sa, power=sa),
            "b": make_tech("b", logic=sb, power=sb),
            "c": make_tech("c", logic=sc, power=sc),
        }
        via_b = Block(id="x", area=area, power=area, reference_tech="a")
        ab, _ = scale_block(via_b, techs["b"], techs)
        mid = Block(id="x", area=ab, power=ab, reference_tech="b")
        abc, _ = scale_block(mid, techs["c"], techs)
        ac, _ = scale_block(via_b, techs["c"], techs)
        assert abc == pytest.approx(ac, rel=1e-12)

    def test_total_area_is_sum_of_blocks(self):
        techs = {"a": make_tech("a"), "b": make_tech("b", logic=0.5,
                                                     memory=0.25, power=0.3)}
        blocks = [block(f"b{i}", area=1.0 + i, tech="a",
                        kind="memory" if i % 2 else "logic")
                  for i in range(5)]
        total = sum(scale_block(b, techs["b"], techs)[0] for b in blocks)
        per_block = [scale_block(b, techs["b"], techs)[0] for b in blocks]
        assert total == pytest.approx(sum(per_block))


class TestInvariantValidation:
    def test_negative_area_rejected(self):
        with pytest.raises(ValidationError):
            block("b", area=-1.0)

    def test_weights_must_sum_to_one(self):
        from chipletkit.model import ObjectiveWeights
        with pytest.raises(ValidationError):
            ObjectiveWeights(cost_weight=0.7, power_weight=0.7)

    def test_bond_yield_bounds(self):
        from chipletkit.model import AssemblySpec
        with pytest.raises(ValidationError):
            AssemblySpec(cost_per_bond=0.0, bond_yield=1.5,
                         substrate_cost_per_mm2=0.0, separation=0.0)

    def test_netlist_indexing(self):
        nl = Netlist(blocks=(block("x"), block("y")),
                     nets=(net("x", "y"),))
        assert nl.index_of("y") == 1
        assert nl.block("x").id == "x"
        with pytest.raises(ValidationError):
            nl.index_of("zz")
