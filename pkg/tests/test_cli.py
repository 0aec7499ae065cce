import json
import math

import pytest

from chipletkit.cli import main
from chipletkit.floorplan import ChipletNet, check_feasible, Floorplan, \
    SequencePair
from chipletkit.model import parse_system, write_json
from chipletkit.pipeline import Evaluator
from chipletkit.partition import Partition


def _gen(tmp_path, tiles=1, cores=2, mems=1, reach=25.0, extra=()):
    np_ = tmp_path / "netlist.json"
    cp = tmp_path / "config.json"
    rc = main(["gen", "--tiles", str(tiles), "--cores", str(cores),
               "--mems", str(mems), "--reach", str(reach),
               "--out-netlist", str(np_), "--out-config", str(cp),
               *extra])
    assert rc == 0
    return np_, cp


def _shrink_config(cp, standard=600, fast=150, walkers=2, **ga):
    """Rewrite a generated config with test-sized optimizer budgets."""
    data = json.loads(cp.read_text())
    data["floorplan"]["standard"]["perturbations"] = standard
    data["floorplan"]["standard"]["walkers"] = walkers
    data["floorplan"]["fast"]["perturbations"] = fast
    data["floorplan"]["fast"]["walkers"] = 1
    data["refine"].update({"fm_passes": 2, "kl_passes": 1, "fm_quota": 0.25})
    ga_defaults = dict(tot_pop=6, k_pop=4, sigma=2, zeta=2, psi=2,
                       epsilon=2, K_max=3)
    ga_defaults.update(ga)
    data["ga"].update(ga_defaults)
    write_json(cp, data)


def _read(path):
    return json.loads(path.read_text())


class TestGen:
    def test_writes_parseable_system(self, tmp_path):
        np_, cp = _gen(tmp_path, tiles=1, cores=14, mems=4)
        netlist, config = parse_system(np_, cp)
        assert netlist.n_blocks == 48
        assert (tmp_path / "manifest.json").exists()

    def test_pool_template(self, tmp_path):
        np_ = tmp_path / "n.json"
        cp = tmp_path / "c.json"
        rc = main(["gen", "--template", "pool", "--tiles", "16",
                   "--out-netlist", str(np_), "--out-config", str(cp)])
        assert rc == 0
        netlist, _ = parse_system(np_, cp)
        assert netlist.n_blocks == 40


class TestPartitionCmd:
    def test_homogeneous_run_bundle(self, tmp_path):
        np_, cp = _gen(tmp_path)
        _shrink_config(cp)
        out = tmp_path / "run"
        rc = main(["partition", "--netlist", str(np_), "--config", str(cp),
                   "--out-dir", str(out), "--homogeneous", "7nm",
                   "--seed", "42"])
        assert rc == 0
        report = _read(out / "cost_report.json")
        assert report["feasible"] is True
        part = _read(out / "partition.json")
        netlist, _ = parse_system(np_, cp)
        assert set(part["assignment"]) == {b.id for b in netlist.blocks}
        genome = _read(out / "genome.json")
        assert all(t == "7nm" for t in genome["chiplet_techs"])
        manifest = _read(out / "manifest.json")
        assert manifest["seed"] == 42
        assert len(manifest["inputs"]) == 2
        assert manifest["resolved_config"]["ga"]["K_max"] == 3

    def test_unknown_tech_is_structured_error(self, tmp_path, capsys):
        np_, cp = _gen(tmp_path)
        rc = main(["partition", "--netlist", str(np_), "--config", str(cp),
                   "--out-dir", str(tmp_path / "x"),
                   "--homogeneous", "3nm"])
        assert rc == 2
        assert "3nm" in capsys.readouterr().err

    def test_missing_file_is_structured_error(self, tmp_path, capsys):
        rc = main(["partition", "--netlist", str(tmp_path / "nope.json"),
                   "--config", str(tmp_path / "c.json"),
                   "--out-dir", str(tmp_path / "x")])
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_byte_identical_reruns(self, tmp_path):
        np_, cp = _gen(tmp_path)
        _shrink_config(cp)
        bundles = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            rc = main(["partition", "--netlist", str(np_), "--config",
                       str(cp), "--out-dir", str(out), "--seed", "7",
                       "--homogeneous", "7nm"])
            assert rc == 0
            bundles.append({f.name: f.read_bytes()
                            for f in sorted(out.iterdir())
                            if f.name != "manifest.json"})
        assert bundles[0] == bundles[1]

    def test_thread_count_does_not_change_results(self, tmp_path):
        np_, cp = _gen(tmp_path)
        _shrink_config(cp)
        bundles = []
        for name, threads in (("t1", "1"), ("t2", "2")):
            out = tmp_path / name
            rc = main(["partition", "--netlist", str(np_), "--config",
                       str(cp), "--out-dir", str(out), "--seed", "9",
                       "--threads", threads])
            assert rc in (0, 1)
            bundles.append({f.name: f.read_bytes()
                            for f in sorted(out.iterdir())
                            if f.name != "manifest.json"})
        assert bundles[0] == bundles[1]

    def test_ga_run_writes_trace(self, tmp_path):
        np_, cp = _gen(tmp_path)
        _shrink_config(cp)
        out = tmp_path / "ga"
        rc = main(["partition", "--netlist", str(np_), "--config", str(cp),
                   "--out-dir", str(out), "--seed", "3"])
        assert rc == 0
        lines = (out / "ga_trace.jsonl").read_text().strip().splitlines()
        assert len(lines) >= 1
        first = json.loads(lines[0])
        assert {"generation", "best_ever", "population_mean",
                "cache_hit_rate"} <= set(first)


class TestEvaluateCmd:
    def test_monolithic_matches_direct_evaluation(self, tmp_path):
        np_, cp = _gen(tmp_path)
        _shrink_config(cp)
        netlist, config = parse_system(np_, cp)
        part_file = tmp_path / "part.json"
        write_json(part_file, {"assignment": {b.id: 0
                                              for b in netlist.blocks}})
        genome_file = tmp_path / "genome.json"
        write_json(genome_file, {"genome": ["7nm"]})
        out = tmp_path / "eval"
        rc = main(["evaluate", "--netlist", str(np_), "--config", str(cp),
                   "--partition", str(part_file), "--genome",
                   str(genome_file), "--out-dir", str(out), "--seed", "5"])
        assert rc == 0
        report = _read(out / "cost_report.json")
        evaluator = Evaluator(netlist, config, master_seed=5)
        direct = evaluator.evaluate(Partition((0,) * netlist.n_blocks),
                                    ["7nm"], "standard")
        assert report["objective"] == pytest.approx(direct.objective)
        assert report["breakdown"]["total"] == pytest.approx(
            direct.breakdown.total)

    def test_infeasible_plan_reported(self, tmp_path, capsys):
        np_, cp = _gen(tmp_path, cores=3, reach=0.2)   # unreachable reach
        _shrink_config(cp)
        netlist, config = parse_system(np_, cp)
        # split every block apart to force long inter-chiplet nets
        labels = {b.id: i for i, b in enumerate(netlist.blocks[:3])}
        labels.update({b.id: 3 for b in netlist.blocks[3:]})
        part_file = tmp_path / "part.json"
        write_json(part_file, {"assignment": labels})
        genome_file = tmp_path / "genome.json"
        write_json(genome_file, {"genome": ["7nm", "7nm", "7nm", "7nm"]})
        out = tmp_path / "eval"
        rc = main(["evaluate", "--netlist", str(np_), "--config", str(cp),
                   "--partition", str(part_file), "--genome",
                   str(genome_file), "--out-dir", str(out)])
        assert rc == 1
        report = _read(out / "cost_report.json")
        assert report["feasible"] is False
        assert any(v[0] == "reach" for v in report["violations"])
        rc2 = main(["evaluate", "--netlist", str(np_), "--config", str(cp),
                    "--partition", str(part_file), "--genome",
                    str(genome_file), "--out-dir", str(out),
                    "--allow-infeasible"])
        assert rc2 == 0

    def test_partition_with_unknown_block_rejected(self, tmp_path, capsys):
        np_, cp = _gen(tmp_path)
        netlist, _ = parse_system(np_, cp)
        labels = {b.id: 0 for b in netlist.blocks}
        labels["ghost"] = 0
        part_file = tmp_path / "part.json"
        write_json(part_file, {"assignment": labels})
        genome_file = tmp_path / "genome.json"
        write_json(genome_file, {"genome": ["7nm"]})
        rc = main(["evaluate", "--netlist", str(np_), "--config", str(cp),
                   "--partition", str(part_file), "--genome",
                   str(genome_file), "--out-dir", str(tmp_path / "e")])
        assert rc == 2
        assert "ghost" in capsys.readouterr().err


def _chiplet_file(tmp_path, n, area=25.0, connect_ring=True):
    chiplets = [{"id": f"c{i}", "area": area} for i in range(n)]
    nets = []
    if connect_ring and n > 1:
        for i in range(n):
            nets.append({"a": f"c{i}", "b": f"c{(i + 1) % n}",
                         "bandwidth": 64, "reach_class": "parallel"})
        if n == 4:
            nets.append({"a": "c0", "b": "c2", "bandwidth": 64,
                         "reach_class": "parallel"})
    path = tmp_path / "chiplets.json"
    write_json(path, {"chiplets": chiplets, "nets": nets})
    return path


class TestFloorplanCmd:
    def test_single_chiplet_trivially_feasible(self, tmp_path):
        np_, cp = _gen(tmp_path)
        ch = _chiplet_file(tmp_path, 1)
        out = tmp_path / "fp"
        rc = main(["floorplan", "--chiplets", str(ch), "--config", str(cp),
                   "--out-dir", str(out), "--mode", "fast", "--seed", "1",
                   "--fast-perturbations", "200"])
        assert rc == 0
        report = _read(out / "floorplan_report.json")
        assert report["feasible"] is True
        assert report["wl_reach"] == 0.0

    def test_reach_sweep_flips_feasibility(self, tmp_path):
        # 4 connected 25 mm^2 chiplets: a 2 mm reach cannot cover the
        # diagonal, a 20 mm reach can
        results = {}
        for reach in (2.0, 20.0):
            np_, cp = _gen(tmp_path, reach=reach)
            ch = _chiplet_file(tmp_path, 4)
            out = tmp_path / f"fp{reach}"
            rc = main(["floorplan", "--chiplets", str(ch), "--config",
                       str(cp), "--out-dir", str(out), "--mode", "fast",
                       "--seed", "2", "--fast-perturbations", "2000",
                       "--walkers", "4", "--allow-infeasible"])
            assert rc == 0
            results[reach] = _read(out / "floorplan_report.json")["feasible"]
        assert results[2.0] is False
        assert results[20.0] is True

    def test_seed_reproducibility(self, tmp_path):
        np_, cp = _gen(tmp_path)
        ch = _chiplet_file(tmp_path, 3)
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            rc = main(["floorplan", "--chiplets", str(ch), "--config",
                       str(cp), "--out-dir", str(out), "--mode", "fast",
                       "--seed", "11", "--fast-perturbations", "300"])
            assert rc == 0
            outs.append((out / "floorplan.json").read_bytes())
        assert outs[0] == outs[1]
