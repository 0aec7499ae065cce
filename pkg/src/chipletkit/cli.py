"""Command-line surface: gen, partition, floorplan, evaluate.

Every run writes a manifest capturing inputs (with content hashes), the fully
resolved configuration and the master seed; result files are JSON with sorted
keys, so a fixed seed reproduces them byte for byte. Wall-clock numbers live
only in the manifest.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from . import cost as costmod
from . import model
from .floorplan import (ChipletNet, anneal, check_feasible,
                        evaluate_floorplan, floorplan_to_data)
from .ga import evolve
from .partition import Partition, core_chipletpart
from .pipeline import Evaluator
from .testgen import (GridSpec, PoolDesignSpec, TileSpec,
                      default_system_config, gen_pool_design, gen_waferscale)


class CliError(Exception):
    """User-facing failure with a structured message."""


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, args: argparse.Namespace, seed: int,
                    config: model.SystemConfig | None, inputs: list[Path],
                    outputs: list[str], timings: dict[str, float]) -> None:
    manifest = {
        "tool": "chipletkit",
        "version": __version__,
        "command": sys.argv[1:] if sys.argv[1:] else vars(args),
        "seed": seed,
        "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs],
        "outputs": outputs,
        "resolved_config": (model.config_to_data(config)
                            if config is not None else None),
        "timings_sec": timings,
    }
    model.write_json(out_dir / "manifest.json", manifest)


def _apply_overrides(config: model.SystemConfig,
                     args: argparse.Namespace) -> model.SystemConfig:
    """Fold CLI flags over the parsed config file."""
    ga_over = {}
    for name in _GA_FLAG_TYPES:
        flag = getattr(args, f"ga_{name}", None)
        if flag is not None:
            ga_over[name] = flag
    ga = config.ga
    if ga_over:
        ga = dataclasses.replace(ga, **ga_over)

    fp = config.floorplan
    if getattr(args, "standard_perturbations", None) is not None:
        fp = dataclasses.replace(fp, standard=dataclasses.replace(
            fp.standard, perturbations=args.standard_perturbations))
    if getattr(args, "fast_perturbations", None) is not None:
        fp = dataclasses.replace(fp, fast=dataclasses.replace(
            fp.fast, perturbations=args.fast_perturbations))
    if getattr(args, "walkers", None) is not None:
        fp = dataclasses.replace(
            fp, standard=dataclasses.replace(fp.standard, walkers=args.walkers),
            fast=dataclasses.replace(fp.fast, walkers=args.walkers))

    objective = config.objective
    if getattr(args, "weights", None) is not None:
        try:
            cw, pw = (float(x) for x in args.weights.split(","))
        except ValueError as exc:
            raise CliError(f"--weights expects 'cost,power': {exc}") from exc
        objective = model.ObjectiveWeights(cost_weight=cw, power_weight=pw)

    return dataclasses.replace(config, ga=ga, floorplan=fp,
                               objective=objective)


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def cmd_gen(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    if args.template == "waferscale":
        if args.rows and args.cols:
            grid = GridSpec(rows=args.rows, cols=args.cols)
        else:
            grid = GridSpec.for_tiles(args.tiles)
        tile = TileSpec(cores_per_tile=args.cores, shared_mems=args.mems,
                        area_scaling=args.area_scaling,
                        power_scaling=args.power_scaling)
        netlist = gen_waferscale(grid, tile, io_class=args.io_class)
    elif args.template == "pool":
        spec = PoolDesignSpec(tiles=args.tiles,
                              area_scaling=args.area_scaling,
                              power_scaling=args.power_scaling)
        netlist = gen_pool_design(spec, io_class=args.io_class)
    else:
        raise CliError(f"unknown template {args.template!r}")

    config = default_system_config(reach_override=args.reach,
                                   volume=args.volume)
    model.cross_validate(netlist, config)

    model.write_json(Path(args.out_netlist), model.netlist_to_data(netlist))
    model.write_json(Path(args.out_config), model.config_to_data(config))
    out_dir = Path(args.out_netlist).parent
    _write_manifest(out_dir, args, args.seed, config, [],
                    [str(args.out_netlist), str(args.out_config)],
                    {"generate": time.perf_counter() - t0})
    print(f"wrote {args.out_netlist} ({netlist.n_blocks} blocks, "
          f"{len(netlist.nets)} nets) and {args.out_config}")
    return 0


# ---------------------------------------------------------------------------
# partition
# ---------------------------------------------------------------------------

def _write_solution(out_dir: Path, netlist: model.Netlist,
                    config: model.SystemConfig, evaluation) -> list[str]:
    assignment = {block.id: evaluation.assignment[i]
                  for i, block in enumerate(netlist.blocks)}
    files = {
        "partition.json": {"assignment": assignment,
                           "n_chiplets": evaluation.n_chiplets},
        "genome.json": {"chiplet_techs": list(evaluation.techs)},
        "floorplan.json": floorplan_to_data(evaluation.floorplan),
        "cost_report.json": {
            "objective": evaluation.objective,
            "feasible": evaluation.feasible,
            "violations": [list(v) for v in evaluation.violations],
            "breakdown": costmod.breakdown_to_data(evaluation.breakdown),
        },
    }
    for name, data in files.items():
        model.write_json(out_dir / name, data)
    return sorted(files)


def cmd_partition(args: argparse.Namespace) -> int:
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    netlist, config = model.parse_system(args.netlist, args.config)
    config = _apply_overrides(config, args)
    timings["parse"] = time.perf_counter() - t0
    seed = args.seed if args.seed is not None else config.ga.seed
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    trace_lines: list[str] = []
    if args.homogeneous is not None:
        if args.homogeneous not in config.techs:
            raise CliError(f"unknown technology {args.homogeneous!r}")
        genome = (args.homogeneous,) * config.ga.K_max
        core = core_chipletpart(netlist, genome, config,
                                budget=config.refine, seed=seed)
        evaluation = core.evaluation
        genome_full = genome
        history = []
    else:
        result = evolve(netlist, config, seed=seed, threads=args.threads,
                        log=trace_lines.append)
        evaluation = result.core.evaluation
        genome_full = result.genome
        history = result.history
    timings["optimize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    outputs = _write_solution(out_dir, netlist, config, evaluation)
    model.write_json(out_dir / "genome.json", {
        "genome": list(genome_full),
        "chiplet_techs": list(evaluation.techs),
    })
    if history:
        with open(out_dir / "ga_trace.jsonl", "w", encoding="utf-8") as fh:
            for st in history:
                fh.write(json.dumps({
                    "generation": st.generation, "best_ever": st.best_ever,
                    "population_best": st.population_best,
                    "population_mean": st.population_mean,
                    "cache_hit_rate": st.cache_hit_rate,
                    "evaluations": st.evaluations}, sort_keys=True) + "\n")
        outputs.append("ga_trace.jsonl")
    timings["write"] = time.perf_counter() - t0
    _write_manifest(out_dir, args, seed, config,
                    [Path(args.netlist), Path(args.config)], outputs, timings)

    for line in trace_lines:
        print(line, file=sys.stderr)
    status = "feasible" if evaluation.feasible else "INFEASIBLE"
    print(f"{evaluation.n_chiplets} chiplets, objective "
          f"{evaluation.objective:.6g}, {status}; results in {out_dir}")
    if not evaluation.feasible and not args.allow_infeasible:
        return 1
    return 0


# ---------------------------------------------------------------------------
# floorplan
# ---------------------------------------------------------------------------

def _load_chiplet_file(path, config: model.SystemConfig):
    data = model._load_json(path)
    raw_chiplets = data.get("chiplets")
    if not isinstance(raw_chiplets, list) or not raw_chiplets:
        raise model.SchemaError("chiplet file needs a non-empty 'chiplets'")
    names = []
    areas = []
    for i, rc in enumerate(raw_chiplets):
        if not isinstance(rc, dict) or "id" not in rc or "area" not in rc:
            raise model.SchemaError(f"chiplets[{i}] needs 'id' and 'area'")
        names.append(str(rc["id"]))
        areas.append(float(rc["area"]))
    index = {name: i for i, name in enumerate(names)}
    if len(index) != len(names):
        raise model.ValidationError("duplicate chiplet ids")
    nets = []
    for i, rn in enumerate(data.get("nets", [])):
        for key in ("a", "b", "bandwidth", "reach_class"):
            if key not in rn:
                raise model.SchemaError(f"nets[{i}] missing {key!r}")
        if rn["a"] not in index or rn["b"] not in index:
            raise model.ValidationError(f"nets[{i}] references unknown chiplet")
        cell = config.io_cell(str(rn["reach_class"]))
        nets.append(ChipletNet(a=index[rn["a"]], b=index[rn["b"]],
                               bits=int(rn["bandwidth"]), reach=cell.reach,
                               cell_area=cell.cell_area))
    return names, areas, nets


def cmd_floorplan(args: argparse.Namespace) -> int:
    timings = {}
    t0 = time.perf_counter()
    config = model.parse_config_data(model._load_json(args.config))
    config = _apply_overrides(config, args)
    names, areas, nets = _load_chiplet_file(args.chiplets, config)
    timings["parse"] = time.perf_counter() - t0
    seed = args.seed if args.seed is not None else 0
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    anneal_cfg = config.floorplan.config_for(args.mode).with_seed(seed)
    plan = anneal(areas, nets, config.assembly.separation, anneal_cfg,
                  alpha=config.floorplan.alpha, beta=config.floorplan.beta,
                  gamma=config.floorplan.gamma)
    objective = evaluate_floorplan(plan, nets, config.floorplan.alpha,
                                   config.floorplan.beta,
                                   config.floorplan.gamma)
    report = check_feasible(plan, nets, config.assembly.separation)
    timings["anneal"] = time.perf_counter() - t0

    model.write_json(out_dir / "floorplan.json", floorplan_to_data(plan, names))
    model.write_json(out_dir / "floorplan_report.json", {
        "objective": objective.value,
        "wl_reach": objective.wl_reach,
        "chip_area": objective.chip_area,
        "package_area": objective.package_area,
        "feasible": report.feasible,
        "violations": [list(v) for v in report.violations],
    })
    _write_manifest(out_dir, args, seed, config,
                    [Path(args.chiplets), Path(args.config)],
                    ["floorplan.json", "floorplan_report.json"], timings)
    status = "feasible" if report.feasible else "INFEASIBLE"
    print(f"objective {objective.value:.6g} ({status}); results in {out_dir}")
    if not report.feasible and not args.allow_infeasible:
        return 1
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def cmd_evaluate(args: argparse.Namespace) -> int:
    timings = {}
    t0 = time.perf_counter()
    netlist, config = model.parse_system(args.netlist, args.config)
    config = _apply_overrides(config, args)
    part_data = model._load_json(args.partition)
    raw_assign = part_data.get("assignment")
    if not isinstance(raw_assign, dict):
        raise model.SchemaError("partition file needs an 'assignment' object")
    labels = []
    for block in netlist.blocks:
        if block.id not in raw_assign:
            raise model.ValidationError(
                f"partition does not place block {block.id!r}")
        labels.append(int(raw_assign[block.id]))
    for name in raw_assign:
        netlist.index_of(name)   # reject assignments of unknown blocks
    partition = Partition.from_labels(labels)

    genome_data = model._load_json(args.genome)
    techs = genome_data.get("genome", genome_data.get("chiplet_techs"))
    if not isinstance(techs, list) or not techs:
        raise model.SchemaError(
            "genome file needs 'genome' (list of tech ids)")
    for t in techs:
        config.tech(str(t))
    timings["parse"] = time.perf_counter() - t0

    seed = args.seed if args.seed is not None else 0
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    evaluator = Evaluator(netlist, config, master_seed=seed)
    evaluation = evaluator.evaluate(partition, [str(t) for t in techs],
                                    "standard")
    timings["evaluate"] = time.perf_counter() - t0
    if evaluation.breakdown is None:
        raise CliError(f"cost model failure: {evaluation.error}")

    outputs = _write_solution(out_dir, netlist, config, evaluation)
    _write_manifest(out_dir, args, seed, config,
                    [Path(args.netlist), Path(args.config),
                     Path(args.partition), Path(args.genome)],
                    outputs, timings)
    status = "feasible" if evaluation.feasible else "INFEASIBLE"
    print(f"objective {evaluation.objective:.6g} ({status}); "
          f"results in {out_dir}")
    if not evaluation.feasible and not args.allow_infeasible:
        return 1
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

_GA_FLAG_TYPES = {"tot_pop": int, "k_pop": int, "zeta": int, "sigma": int,
                  "psi": int, "epsilon": int, "delta_threshold": float,
                  "p_c": float, "p_m": float, "K_max": int}


def _add_common_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (default: from config)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--allow-infeasible", action="store_true",
                   help="exit 0 even when the result violates reach")
    p.add_argument("--weights", type=str, default=None,
                   metavar="COST,POWER", help="objective weight override")
    p.add_argument("--standard-perturbations", type=int, default=None)
    p.add_argument("--fast-perturbations", type=int, default=None)
    p.add_argument("--walkers", type=int, default=None)
    for name, kind in _GA_FLAG_TYPES.items():
        flag = "--" + name.replace("_", "-").lower()
        p.add_argument(flag, dest=f"ga_{name}", type=kind, default=None,
                       help=f"GA override for {name}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chipletkit",
        description="Cost-driven 2.5D chiplet partitioning toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a benchmark netlist + config")
    g.add_argument("--template", choices=("waferscale", "pool"),
                   default="waferscale")
    g.add_argument("--tiles", type=int, default=1)
    g.add_argument("--rows", type=int, default=0)
    g.add_argument("--cols", type=int, default=0)
    g.add_argument("--cores", type=int, default=14)
    g.add_argument("--mems", type=int, default=4)
    g.add_argument("--area-scaling", type=float, default=1600.0)
    g.add_argument("--power-scaling", type=float, default=1600.0)
    g.add_argument("--io-class", default="parallel")
    g.add_argument("--reach", type=float, default=None,
                   help="override reach (mm) of all IO classes")
    g.add_argument("--volume", type=int, default=100_000_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-netlist", required=True)
    g.add_argument("--out-config", required=True)
    g.set_defaults(func=cmd_gen)

    p = sub.add_parser("partition", help="full partitioning flow")
    p.add_argument("--netlist", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--homogeneous", metavar="TECH", default=None,
                   help="skip the GA and use a single technology")
    _add_common_run_flags(p)
    p.set_defaults(func=cmd_partition)

    f = sub.add_parser("floorplan", help="floorplan a chiplet-level netlist")
    f.add_argument("--chiplets", required=True)
    f.add_argument("--config", required=True)
    f.add_argument("--out-dir", required=True)
    f.add_argument("--mode", choices=("standard", "fast"), default="standard")
    _add_common_run_flags(f)
    f.set_defaults(func=cmd_floorplan)

    e = sub.add_parser("evaluate",
                       help="score an externally produced partition")
    e.add_argument("--netlist", required=True)
    e.add_argument("--config", required=True)
    e.add_argument("--partition", required=True)
    e.add_argument("--genome", required=True)
    e.add_argument("--out-dir", required=True)
    _add_common_run_flags(e)
    e.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (model.SchemaError, model.ValidationError, costmod.CostError,
            CliError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
