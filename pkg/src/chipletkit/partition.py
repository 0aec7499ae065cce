"""Cost-driven partitioning core.

A run builds a pool of initial partitions from four generator families
(spectral embedding, high-degree node expansion, uniform random, internal
min-cut), prunes statistically poor entries, then refines each survivor with
cost-model-driven FM moves and KL pair swaps. Candidate moves are priced by
the shared Evaluator (fast-mode floorplan + full cost model); a standard-mode
floorplan re-scores each survivor at the end and the best one wins, with
reach-feasible solutions preferred at any cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .configs import RefineBudget
from .model import Netlist, SystemConfig
from .pipeline import Evaluation, Evaluator
from .seeding import rng_for, stable_seed

_Z_CUTOFF = 1.5
_RELATIVE_CUTOFF = 2.0
_MIN_POOL_KEEP = 3
_KL_CANDIDATE_CAP = 32


@dataclass(frozen=True)
class Partition:
    """Block-to-chiplet assignment; labels are compact (0..K-1, none empty)."""

    assignment: tuple[int, ...]

    def __post_init__(self):
        if not self.assignment:
            raise ValueError("partition must cover at least one block")
        used = set(self.assignment)
        k = max(used) + 1
        if used != set(range(k)):
            raise ValueError("chiplet labels must be compact 0..K-1")

    @property
    def k(self) -> int:
        return max(self.assignment) + 1

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        """Compact arbitrary labels in order of first appearance."""
        mapping: dict[int, int] = {}
        out = []
        for lab in labels:
            if lab not in mapping:
                mapping[lab] = len(mapping)
            out.append(mapping[lab])
        return cls(tuple(out))


def apply_move(partition: Partition, block: int, target: int) -> Partition:
    """Move one block to an existing chiplet; compacts if the source empties.

    Compaction shifts higher labels down by one, so the genome prefix stays
    aligned with the surviving chiplets.
    """
    labels = list(partition.assignment)
    source = labels[block]
    if target == source:
        return partition
    if target >= partition.k:
        raise ValueError("moves may only target existing chiplets")
    labels[block] = target
    if source not in labels:
        labels = [lab - 1 if lab > source else lab for lab in labels]
    return Partition(tuple(labels))


def apply_swap(partition: Partition, block_a: int, block_b: int) -> Partition:
    labels = list(partition.assignment)
    labels[block_a], labels[block_b] = labels[block_b], labels[block_a]
    return Partition(tuple(labels))


def relabel_by_area(assignment: Sequence[int], netlist: Netlist) -> Partition:
    """Deterministic label order: largest total block area first.

    Pairs the biggest cluster with the first gene of a genome.
    """
    k = max(assignment) + 1
    areas = [0.0] * k
    for block, lab in zip(netlist.blocks, assignment):
        areas[lab] += block.area
    order = sorted(range(k), key=lambda lab: (-areas[lab], lab))
    remap = {old: new for new, old in enumerate(order)}
    return Partition(tuple(remap[lab] for lab in assignment))


# ---------------------------------------------------------------------------
# Graph helpers
# ---------------------------------------------------------------------------

def _adjacency(netlist: Netlist) -> list[dict[int, float]]:
    """Symmetrized weighted adjacency; parallel edges accumulate."""
    adj: list[dict[int, float]] = [dict() for _ in range(netlist.n_blocks)]
    for net in netlist.nets:
        a = netlist.index_of(net.source)
        b = netlist.index_of(net.sink)
        w = float(net.bandwidth)
        adj[a][b] = adj[a].get(b, 0.0) + w
        adj[b][a] = adj[b].get(a, 0.0) + w
    return adj


def _connected_components(adj: list[dict[int, float]]) -> list[list[int]]:
    n = len(adj)
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in adj[v]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(u)
        comps.append(sorted(comp))
    return comps


# ---------------------------------------------------------------------------
# Pool generators
# ---------------------------------------------------------------------------

def _kmeans(points: np.ndarray, k: int, rng: np.random.Generator,
            n_init: int = 8, iters: int = 100) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding and restarts."""
    n = points.shape[0]
    best_labels = None
    best_inertia = math.inf
    for _ in range(n_init):
        centers = np.empty((k, points.shape[1]))
        centers[0] = points[int(rng.integers(n))]
        d2 = np.sum((points - centers[0]) ** 2, axis=1)
        for c in range(1, k):
            total = d2.sum()
            if total <= 0.0:
                centers[c] = points[int(rng.integers(n))]
            else:
                centers[c] = points[rng.choice(n, p=d2 / total)]
            d2 = np.minimum(d2, np.sum((points - centers[c]) ** 2, axis=1))
        labels = np.zeros(n, dtype=int)
        for it in range(iters):
            dists = np.sum((points[:, None, :] - centers[None, :, :]) ** 2,
                           axis=2)
            new_labels = np.argmin(dists, axis=1)
            for c in range(k):
                if not np.any(new_labels == c):
                    # reseed an empty cluster at the farthest point
                    far = int(np.argmax(dists[np.arange(n), new_labels]))
                    new_labels[far] = c
            if it > 0 and np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for c in range(k):
                member = points[labels == c]
                if len(member):
                    centers[c] = member.mean(axis=0)
        inertia = float(np.sum((points - centers[labels]) ** 2))
        if inertia < best_inertia - 1e-12:
            best_inertia = inertia
            best_labels = labels.copy()
    return best_labels


def spectral_init(netlist: Netlist, k: int = 4, seed: int = 0) -> Partition:
    """Cluster blocks on the two smallest nontrivial Laplacian eigenvectors.

    Disconnected netlists are embedded per component, with the cluster budget
    split proportionally to component size.
    """
    n = netlist.n_blocks
    k = max(1, min(k, n))
    adj = _adjacency(netlist)
    comps = _connected_components(adj)
    rng = rng_for(seed, "spectral")

    # cluster budget per component, proportional with at least one each
    sizes = [len(c) for c in comps]
    if len(comps) >= k:
        budgets = [1] * len(comps)
    else:
        budgets = [max(1, int(round(k * s / n))) for s in sizes]
        order = sorted(range(len(comps)), key=lambda i: -sizes[i])
        idx = 0
        while sum(budgets) > k:
            i = order[idx % len(order)]
            if budgets[i] > 1:
                budgets[i] -= 1
            idx += 1
        idx = 0
        while sum(budgets) < k:
            i = order[idx % len(order)]
            if budgets[i] < sizes[i]:
                budgets[i] += 1
            idx += 1

    labels = [0] * n
    next_label = 0
    for comp, kc in zip(comps, budgets):
        kc = min(kc, len(comp))
        if kc <= 1 or len(comp) == 1:
            for v in comp:
                labels[v] = next_label % max(1, k) if len(comps) > k \
                    else next_label
            next_label += 1
            continue
        m = len(comp)
        local = {v: i for i, v in enumerate(comp)}
        weights = np.zeros((m, m))
        for v in comp:
            for u, w in adj[v].items():
                weights[local[v], local[u]] = w
        laplacian = np.diag(weights.sum(axis=1)) - weights
        _, vecs = np.linalg.eigh(laplacian)
        dims = min(2, m - 1)
        embedding = vecs[:, 1:1 + dims]
        sub = _kmeans(embedding, kc, rng)
        for v in comp:
            labels[v] = next_label + int(sub[local[v]])
        next_label += kc
    return Partition.from_labels(labels)


def node_expansion_init(netlist: Netlist, k: int) -> Partition:
    """Seed chiplets at the k highest-degree blocks, then grow them by BFS.

    A block reached by several frontiers joins the chiplet it is most
    strongly connected to (summed bandwidth), ties to the lower label.
    """
    n = netlist.n_blocks
    k = max(1, min(k, n))
    adj = _adjacency(netlist)
    degree = [len(adj[v]) for v in range(n)]
    strength = [sum(adj[v].values()) for v in range(n)]
    seeds = sorted(range(n), key=lambda v: (-degree[v], -strength[v], v))[:k]

    labels = [-1] * n
    for lab, v in enumerate(seeds):
        labels[v] = lab
    remaining = n - k
    while remaining > 0:
        frontier = []
        for v in range(n):
            if labels[v] >= 0:
                continue
            conn = [0.0] * k
            touched = False
            for u, w in adj[v].items():
                if labels[u] >= 0:
                    conn[labels[u]] += w
                    touched = True
            if touched:
                best = max(range(k), key=lambda lab: (conn[lab], -lab))
                frontier.append((v, best))
        if not frontier:
            # disconnected leftovers: balance by raw block area
            totals = [0.0] * k
            for v in range(n):
                if labels[v] >= 0:
                    totals[labels[v]] += netlist.blocks[v].area
            for v in range(n):
                if labels[v] < 0:
                    lab = min(range(k), key=lambda c: (totals[c], c))
                    labels[v] = lab
                    totals[lab] += netlist.blocks[v].area
            remaining = 0
            break
        for v, lab in frontier:
            labels[v] = lab
        remaining -= len(frontier)
    return Partition.from_labels(labels)


def random_init(netlist: Netlist, k: int, seed: int = 0) -> Partition:
    """Uniform random assignment; empty chiplets repaired deterministically."""
    n = netlist.n_blocks
    if not 1 <= k <= n:
        raise ValueError(f"random_init needs 1 <= k <= {n}, got {k}")
    rng = rng_for(seed, "random")
    labels = [int(v) for v in rng.integers(0, k, size=n)]
    for missing in range(k):
        if missing in labels:
            continue
        counts = [0] * k
        for lab in labels:
            counts[lab] += 1
        donor_label = max(range(k), key=lambda c: (counts[c], -c))
        donor_block = labels.index(donor_label)
        labels[donor_block] = missing
    return Partition(tuple(labels))


# --- internal multilevel min-cut bisection (METIS stand-in) ---------------

_BALANCE_TOL = 0.05


def _fm_bisect_refine(adj, node_w, labels, target0, passes=4):
    """Cutsize FM on a bisection with a weight-balance window."""
    n = len(node_w)
    total = sum(node_w)
    window = _BALANCE_TOL * total

    def cut_of(lab):
        cut = 0.0
        for v in range(n):
            for u, w in adj[v].items():
                if u > v and lab[v] != lab[u]:
                    cut += w
        return cut

    current = list(labels)
    for _ in range(passes):
        w0 = sum(node_w[v] for v in range(n) if current[v] == 0)
        gains = []
        for v in range(n):
            ext = sum(w for u, w in adj[v].items()
                      if current[u] != current[v])
            internal = sum(w for u, w in adj[v].items()
                           if current[u] == current[v])
            gains.append(ext - internal)
        locked = [False] * n
        cut = cut_of(current)
        best_cut, best_prefix = cut, 0
        moves = []
        for step in range(n):
            best_v = None
            for v in range(n):
                if locked[v]:
                    continue
                new_w0 = w0 - node_w[v] if current[v] == 0 \
                    else w0 + node_w[v]
                if abs(new_w0 - target0) > window and \
                        abs(new_w0 - target0) >= abs(w0 - target0):
                    continue
                if best_v is None or (gains[v], -v) > (gains[best_v], -best_v):
                    best_v = v
            if best_v is None:
                break
            v = best_v
            cut -= gains[v]
            w0 = w0 - node_w[v] if current[v] == 0 else w0 + node_w[v]
            current[v] = 1 - current[v]
            locked[v] = True
            moves.append(v)
            for u, w in adj[v].items():
                if locked[u]:
                    continue
                gains[u] += 2 * w if current[u] == current[v] else -2 * w
            gains[v] = -gains[v]
            if cut < best_cut - 1e-12:
                best_cut = cut
                best_prefix = len(moves)
        for v in moves[best_prefix:]:
            current[v] = 1 - current[v]
        if best_prefix == 0:
            break
    return current


def _coarsen(adj, node_w, rng):
    """One heavy-edge-matching level; returns coarse graph and projection."""
    n = len(node_w)
    matched = [-1] * n
    order = [int(v) for v in rng.permutation(n)]
    for v in order:
        if matched[v] >= 0:
            continue
        best_u, best_w = -1, -1.0
        for u, w in sorted(adj[v].items()):
            if matched[u] < 0 and u != v and (w > best_w):
                best_u, best_w = u, w
        matched[v] = best_u if best_u >= 0 else v
        if best_u >= 0:
            matched[best_u] = v
    coarse_of = [-1] * n
    nxt = 0
    for v in range(n):
        if coarse_of[v] >= 0:
            continue
        coarse_of[v] = nxt
        if matched[v] != v and matched[v] >= 0:
            coarse_of[matched[v]] = nxt
        nxt += 1
    c_w = [0.0] * nxt
    c_adj: list[dict[int, float]] = [dict() for _ in range(nxt)]
    for v in range(n):
        c_w[coarse_of[v]] += node_w[v]
        for u, w in adj[v].items():
            cv, cu = coarse_of[v], coarse_of[u]
            if cv != cu:
                c_adj[cv][cu] = c_adj[cv].get(cu, 0.0) + w
    return c_adj, c_w, coarse_of


def _initial_bisect(adj, node_w, target0, rng):
    """Region growing from a few seeds; best cut after refinement wins."""
    n = len(node_w)
    best = None
    seeds = sorted({int(rng.integers(n)) for _ in range(min(5, n))})
    for seed_v in seeds:
        labels = [1] * n
        labels[seed_v] = 0
        w0 = node_w[seed_v]
        while w0 < target0:
            best_v, best_conn = None, -1.0
            for v in range(n):
                if labels[v] == 0:
                    continue
                conn = sum(w for u, w in adj[v].items() if labels[u] == 0)
                if conn > best_conn:
                    best_v, best_conn = v, conn
            if best_v is None:
                break
            labels[best_v] = 0
            w0 += node_w[best_v]
        refined = _fm_bisect_refine(adj, node_w, labels, target0)
        cut = sum(w for v in range(n) for u, w in adj[v].items()
                  if u > v and refined[v] != refined[u])
        if best is None or cut < best[0] - 1e-12:
            best = (cut, refined)
    return best[1]


def _bisect(adj, node_w, target0, rng):
    n = len(node_w)
    if n <= 2:
        return [0] * max(1, n - 1) + [1] * min(1, n - 1) if n == 2 else [0]
    if n <= 32:
        return _initial_bisect(adj, node_w, target0, rng)
    c_adj, c_w, coarse_of = _coarsen(adj, node_w, rng)
    if len(c_w) >= n:   # matching made no progress
        return _initial_bisect(adj, node_w, target0, rng)
    coarse_labels = _bisect(c_adj, c_w, target0, rng)
    labels = [coarse_labels[coarse_of[v]] for v in range(n)]
    return _fm_bisect_refine(adj, node_w, labels, target0)


def mincut_init(netlist: Netlist, k: int, seed: int = 0) -> Partition:
    """Multilevel recursive-bisection min-cut partition into k parts."""
    n = netlist.n_blocks
    if not 2 <= k <= n:
        raise ValueError(f"mincut_init needs 2 <= k <= {n}, got {k}")
    adj = _adjacency(netlist)
    node_w = [b.area for b in netlist.blocks]
    rng = rng_for(seed, "mincut")
    labels = [0] * n

    def recurse(nodes: list[int], parts: int, base_label: int):
        if parts == 1 or len(nodes) == 1:
            for v in nodes:
                labels[v] = base_label
            return
        local = {v: i for i, v in enumerate(nodes)}
        sub_adj: list[dict[int, float]] = [dict() for _ in nodes]
        for v in nodes:
            for u, w in adj[v].items():
                if u in local:
                    sub_adj[local[v]][local[u]] = w
        sub_w = [node_w[v] for v in nodes]
        parts0 = (parts + 1) // 2
        target0 = sum(sub_w) * parts0 / parts
        side = _bisect(sub_adj, sub_w, target0, rng)
        left = [v for v in nodes if side[local[v]] == 0]
        right = [v for v in nodes if side[local[v]] == 1]
        if not left or not right:   # degenerate; force a split
            left, right = nodes[:1], nodes[1:]
        recurse(left, parts0, base_label)
        recurse(right, parts - parts0, base_label + parts0)

    recurse(list(range(n)), min(k, n), 0)
    return Partition.from_labels(labels)


# ---------------------------------------------------------------------------
# Pool construction and pruning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PoolEntry:
    partition: Partition
    origin: str
    evaluation: Evaluation

    @property
    def cost(self) -> float:
        return self.evaluation.objective

    @property
    def feasible(self) -> bool:
        return self.evaluation.feasible


def build_pool(netlist: Netlist, genome: Sequence[str], evaluator: Evaluator,
               budget: RefineBudget, seed: int = 0) -> list[PoolEntry]:
    """Initial partitioning pool; size is fixed by the budget.

    Failed generators are backfilled with random entries so the pool never
    shrinks. All entries are relabeled largest-area-first before scoring.
    """
    n = netlist.n_blocks
    k_cap = max(1, min(5, len(genome), n))
    jobs: list[tuple[str, int, int]] = []   # (origin, k, variant)
    for i in range(budget.pool_spectral):
        jobs.append(("spectral", min(4, k_cap), i))
    for i in range(budget.pool_expansion):
        jobs.append(("node_expansion", min(4, k_cap), i))
    for i in range(budget.pool_random):
        jobs.append(("random", 1 + (i % k_cap), i))
    for i in range(budget.pool_mincut):
        if k_cap >= 2:
            jobs.append(("mincut", 2 + (i % (k_cap - 1)), i))
        else:
            jobs.append(("random", 1, budget.pool_random + i))

    entries = []
    for origin, k, variant in jobs:
        part_seed = stable_seed(seed, "pool", origin, variant)
        try:
            if origin == "spectral":
                part = spectral_init(netlist, k, part_seed)
            elif origin == "node_expansion":
                part = node_expansion_init(netlist, k)
            elif origin == "mincut":
                part = mincut_init(netlist, k, part_seed)
            else:
                part = random_init(netlist, k, part_seed)
        except Exception:
            origin = "random"
            part = random_init(netlist, max(1, min(k, n)),
                               stable_seed(part_seed, "fallback"))
        part = relabel_by_area(part.assignment, netlist)
        entries.append(PoolEntry(
            partition=part, origin=origin,
            evaluation=evaluator.evaluate(part, genome, "fast")))
    return entries


def prune_pool(pool: list[PoolEntry]) -> list[PoolEntry]:
    """Drop statistical outliers: z-score > 1.5 or cost > twice the minimum.

    At least three entries always survive (lowest cost first when forced).
    """
    if not pool:
        raise ValueError("pool must be non-empty")
    finite = [e.cost for e in pool if math.isfinite(e.cost)]
    if finite:
        mean = sum(finite) / len(finite)
        if len(finite) > 1:
            var = sum((c - mean) ** 2 for c in finite) / (len(finite) - 1)
            sigma = math.sqrt(var)
        else:
            sigma = 0.0
        best = min(finite)
        survivors = []
        for e in pool:
            if not math.isfinite(e.cost):
                continue
            z = 0.0 if sigma == 0.0 else (e.cost - mean) / sigma
            if z > _Z_CUTOFF or e.cost > _RELATIVE_CUTOFF * best:
                continue
            survivors.append(e)
    else:
        survivors = []
    if len(survivors) < _MIN_POOL_KEEP:
        ranked = sorted(range(len(pool)), key=lambda i: (pool[i].cost, i))
        survivors = [pool[i] for i in
                     sorted(ranked[:min(_MIN_POOL_KEEP, len(pool))])]
    return survivors


# ---------------------------------------------------------------------------
# Refinement
# ---------------------------------------------------------------------------

def _neighbors(netlist: Netlist) -> list[set[int]]:
    out: list[set[int]] = [set() for _ in range(netlist.n_blocks)]
    for net in netlist.nets:
        a = netlist.index_of(net.source)
        b = netlist.index_of(net.sink)
        out[a].add(b)
        out[b].add(a)
    return out


def fm_refine(partition: Partition, genome: Sequence[str],
              evaluator: Evaluator, budget: RefineBudget,
              trace: list[float] | None = None) -> Partition:
    """Cost-driven K-way FM with vertex locking and best-prefix rollback.

    Candidate gains are cached per (block, target) and invalidated when a
    move touches the block's nets or either affected chiplet; the applied
    move is always re-priced exactly, so the per-pass trace is exact and
    nonincreasing.
    """
    netlist = evaluator.netlist
    n = netlist.n_blocks
    neighbors = _neighbors(netlist)
    quota = max(1, int(round(budget.fm_quota * n)))

    current = partition
    current_cost = evaluator.evaluate(current, genome, "fast").objective
    if trace is not None:
        trace.append(current_cost)

    for _ in range(budget.fm_passes):
        work, work_cost = current, current_cost
        states = [(work, work_cost)]
        locked: set[int] = set()
        gains: dict[tuple[int, int], float] = {}

        for _ in range(quota):
            k = work.k
            best = None   # (projected_cost, block, target)
            for block in range(n):
                if block in locked:
                    continue
                src = work.assignment[block]
                for tgt in range(k):
                    if tgt == src:
                        continue
                    gain = gains.get((block, tgt))
                    if gain is None:
                        cand = apply_move(work, block, tgt)
                        cand_cost = evaluator.evaluate(
                            cand, genome, "fast").objective
                        gain = work_cost - cand_cost
                        gains[(block, tgt)] = gain
                    projected = work_cost - gain
                    key = (projected, block, tgt)
                    if best is None or key < best:
                        best = key
            if best is None:
                break
            _, block, tgt = best
            src = work.assignment[block]
            cand = apply_move(work, block, tgt)
            cand_cost = evaluator.evaluate(cand, genome, "fast").objective
            shrunk = cand.k != work.k
            work, work_cost = cand, cand_cost
            locked.add(block)
            states.append((work, work_cost))
            if shrunk:
                gains.clear()
            else:
                stale = neighbors[block] | {block}
                gains = {(b, t): g for (b, t), g in gains.items()
                         if b not in stale}

        best_idx = min(range(len(states)), key=lambda i: (states[i][1], i))
        current, current_cost = states[best_idx]
        if trace is not None:
            trace.append(current_cost)
        if best_idx == 0:
            break
        # survivors get a fresh standard-mode plan between passes
        evaluator.evaluate(current, genome, "standard")
    return current


def _surrogate_swap_gain(netlist: Netlist, adj: list[dict[int, float]],
                         assignment: Sequence[int], a: int, b: int) -> float:
    """Cut-bandwidth reduction if blocks a and b trade chiplets."""
    la, lb = assignment[a], assignment[b]
    gain = 0.0
    for u, w in adj[a].items():
        if u == b:
            continue
        if assignment[u] == lb:
            gain += w
        elif assignment[u] == la:
            gain -= w
    for u, w in adj[b].items():
        if u == a:
            continue
        if assignment[u] == la:
            gain += w
        elif assignment[u] == lb:
            gain -= w
    return gain


def kl_refine(partition: Partition, genome: Sequence[str],
              evaluator: Evaluator, budget: RefineBudget,
              trace: list[float] | None = None) -> Partition:
    """Pairwise-swap refinement applying only strictly improving swaps.

    Swap candidates are preranked by the cut-bandwidth surrogate; the best
    candidates are then priced exactly with the cost model. Cost never
    increases.
    """
    netlist = evaluator.netlist
    n = netlist.n_blocks
    adj = _adjacency(netlist)
    swap_budget = max(1, int(round(budget.kl_quota * n)))

    current = partition
    current_cost = evaluator.evaluate(current, genome, "fast").objective
    if trace is not None:
        trace.append(current_cost)

    for _ in range(budget.kl_passes):
        work, work_cost = current, current_cost
        locked: set[int] = set()
        improved_in_pass = False
        for _ in range(swap_budget):
            assignment = work.assignment
            boundary = set()
            for net in netlist.nets:
                a = netlist.index_of(net.source)
                b = netlist.index_of(net.sink)
                if assignment[a] != assignment[b]:
                    boundary.add(a)
                    boundary.add(b)
            pairs = []
            pool = sorted(boundary) if boundary else list(range(n))
            for i, a in enumerate(pool):
                if a in locked:
                    continue
                for b in pool[i + 1:]:
                    if b in locked or assignment[a] == assignment[b]:
                        continue
                    pairs.append((a, b))
            if not pairs:
                break
            pairs.sort(key=lambda p: (-_surrogate_swap_gain(
                netlist, adj, assignment, p[0], p[1]), p))
            best = None
            for a, b in pairs[:_KL_CANDIDATE_CAP]:
                cand = apply_swap(work, a, b)
                cand_cost = evaluator.evaluate(cand, genome, "fast").objective
                key = (cand_cost, a, b)
                if best is None or key < best[:3]:
                    best = (cand_cost, a, b, cand)
            if best is None or best[0] >= work_cost - 1e-15:
                break
            work_cost, a, b, work = best
            locked.update((a, b))
            improved_in_pass = True
        current, current_cost = work, work_cost
        if trace is not None:
            trace.append(current_cost)
        if not improved_in_pass:
            break
        evaluator.evaluate(current, genome, "standard")
    return current


# ---------------------------------------------------------------------------
# End-to-end core
# ---------------------------------------------------------------------------

@dataclass
class CoreResult:
    partition: Partition
    evaluation: Evaluation            # standard-mode scoring of the winner
    pool: list[PoolEntry]
    survivors: list[str]              # origins that survived pruning
    refine_traces: dict[str, list[float]] = field(default_factory=dict)


def core_chipletpart(netlist: Netlist, genome: Sequence[str],
                     config: SystemConfig, budget: RefineBudget | None = None,
                     seed: int = 0, evaluator: Evaluator | None = None,
                     baseline: tuple[float, float] | None = None) -> CoreResult:
    """Pool -> prune -> FM -> KL -> pick the best standard-mode evaluation.

    Feasible solutions win over infeasible ones at any cost; among equals the
    earlier pool entry wins, which makes the result deterministic.
    """
    if budget is None:
        budget = config.refine
    if evaluator is None:
        evaluator = Evaluator(netlist, config, master_seed=seed,
                              baseline=baseline)

    pool = build_pool(netlist, genome, evaluator, budget, seed)
    survivors = prune_pool(pool)

    results = []
    traces: dict[str, list[float]] = {}
    for idx, entry in enumerate(survivors):
        tag = f"{entry.origin}[{idx}]"
        trace: list[float] = []
        refined = fm_refine(entry.partition, genome, evaluator, budget, trace)
        refined = kl_refine(refined, genome, evaluator, budget, trace)
        final = evaluator.evaluate(refined, genome, "standard")
        results.append((final, refined, idx))
        traces[tag] = trace

    best_eval, best_part, _ = min(
        results, key=lambda r: (not r[0].feasible, r[0].objective, r[2]))
    return CoreResult(partition=best_part, evaluation=best_eval, pool=pool,
                      survivors=[e.origin for e in survivors],
                      refine_traces=traces)
