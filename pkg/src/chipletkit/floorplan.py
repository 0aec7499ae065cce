"""Reach-aware chiplet floorplanner.

Placement is encoded as a sequence pair: two permutations of the chiplet
indices whose relative orders decide, for every pair, whether one chiplet is
left of or below the other. Packing resolves the encoded constraints with a
longest-path pass per axis, inserting the minimum separation on every edge,
so any evaluated sequence pair is overlap-free and separation-legal by
construction.

Annealing minimizes

    alpha * WL_reach + beta * sum(chiplet areas) + gamma * package_area

where WL_reach accumulates, per net, bits * max(length - reach, 0). Net
length between two placed chiplets follows the facing-edge model: with facing
width w, edge gap h and IO area A on each side, the IO depth is
l = sqrt(w^2 + 2A) - w and the length is h + 2l. Non-facing chiplets fall
back to the Manhattan distance between their nearest edge midpoints, with w
taken as the shorter of those two edges.

Multiple annealing walkers run go-with-the-winners style: at each sync point
the top fifth of walkers (by current objective) are cloned over the rest and
all walkers resume on their own RNG streams, which keeps results independent
of how the walkers are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .configs import AnnealConfig
from .seeding import rng_for

_TOL = 1e-9

ASPECT_MIN = 0.25   # Op4/Op5 keep width/height within [1/4, 4]
ASPECT_MAX = 4.0


@dataclass(frozen=True)
class ChipletNet:
    """A chiplet-level connection: endpoints, aggregated bits, IO properties."""

    a: int
    b: int
    bits: int
    reach: float
    cell_area: float

    @property
    def io_area(self) -> float:
        return self.bits * self.cell_area


@dataclass(frozen=True)
class SequencePair:
    first: tuple[int, ...]
    second: tuple[int, ...]

    def __post_init__(self):
        n = len(self.first)
        if sorted(self.first) != list(range(n)) or \
                sorted(self.second) != list(range(n)):
            raise ValueError("sequence pair entries must both be permutations")


@dataclass(frozen=True)
class Floorplan:
    sp: SequencePair
    shapes: tuple[tuple[float, float], ...]      # (width, height) per chiplet
    positions: tuple[tuple[float, float], ...]   # lower-left corner
    package: tuple[float, float]

    @property
    def n(self) -> int:
        return len(self.shapes)

    def rect(self, i: int) -> tuple[float, float, float, float]:
        x, y = self.positions[i]
        w, h = self.shapes[i]
        return x, y, w, h


@dataclass(frozen=True)
class FPObjective:
    wl_reach: float
    chip_area: float
    package_area: float
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    @property
    def value(self) -> float:
        return (self.alpha * self.wl_reach + self.beta * self.chip_area
                + self.gamma * self.package_area)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: tuple[tuple, ...]   # ("overlap"|"separation"|"reach", ...)


# ---------------------------------------------------------------------------
# Sequence-pair packing
# ---------------------------------------------------------------------------

def _pack(first: Sequence[int], second: Sequence[int],
          widths: Sequence[float], heights: Sequence[float],
          separation: float) -> tuple[list[float], list[float], float, float]:
    """Longest-path placement of a sequence pair; returns xs, ys, W, H."""
    n = len(first)
    pos1 = [0] * n
    pos2 = [0] * n
    for idx, b in enumerate(first):
        pos1[b] = idx
    for idx, b in enumerate(second):
        pos2[b] = idx

    xs = [0.0] * n
    for idx in range(n):
        b = first[idx]
        pb = pos2[b]
        best = 0.0
        for jdx in range(idx):
            a = first[jdx]
            if pos2[a] < pb:           # a left of b
                cand = xs[a] + widths[a] + separation
                if cand > best:
                    best = cand
        xs[b] = best

    ys = [0.0] * n
    for idx in range(n):
        b = second[idx]
        pb = pos1[b]
        best = 0.0
        for jdx in range(idx):
            a = second[jdx]
            if pos1[a] > pb:           # a below b
                cand = ys[a] + heights[a] + separation
                if cand > best:
                    best = cand
        ys[b] = best

    pkg_w = max(xs[i] + widths[i] for i in range(n))
    pkg_h = max(ys[i] + heights[i] for i in range(n))
    return xs, ys, pkg_w, pkg_h


def evaluate_sp(sp: SequencePair, shapes: Sequence[tuple[float, float]],
                separation: float = 0.0) -> Floorplan:
    """Place the chiplets encoded by a sequence pair."""
    widths = [s[0] for s in shapes]
    heights = [s[1] for s in shapes]
    xs, ys, pw, ph = _pack(sp.first, sp.second, widths, heights, separation)
    return Floorplan(sp=sp, shapes=tuple((w, h) for w, h in zip(widths, heights)),
                     positions=tuple((x, y) for x, y in zip(xs, ys)),
                     package=(pw, ph))


# ---------------------------------------------------------------------------
# Wirelength geometry
# ---------------------------------------------------------------------------

def _axis_gap_overlap(a0, a1, b0, b1):
    """(gap, overlap) of intervals [a0,a1] and [b0,b1] on one axis."""
    gap = max(a0 - b1, b0 - a1, 0.0)
    overlap = max(0.0, min(a1, b1) - max(a0, b0))
    return gap, overlap


def _edge_midpoints(rect):
    x, y, w, h = rect
    return (
        ((x, y + h / 2), h),          # left
        ((x + w, y + h / 2), h),      # right
        ((x + w / 2, y), w),          # bottom
        ((x + w / 2, y + h), w),      # top
    )


def _length_xy(ax, ay, aw, ah, bx, by, bw, bh, io_area: float) -> float:
    """Net length between two placed rectangles for a given total IO area.

    Hot path: geometry is inlined, no intermediate helpers.
    """
    dx = ax - bx - bw
    t = bx - ax - aw
    if t > dx:
        dx = t
    if dx < 0.0:
        dx = 0.0
    dy = ay - by - bh
    t = by - ay - ah
    if t > dy:
        dy = t
    if dy < 0.0:
        dy = 0.0
    hi = ax + aw if ax + aw < bx + bw else bx + bw
    lo = ax if ax > bx else bx
    ox = hi - lo
    if ox < 0.0:
        ox = 0.0
    hi = ay + ah if ay + ah < by + bh else by + bh
    lo = ay if ay > by else by
    oy = hi - lo
    if oy < 0.0:
        oy = 0.0

    if oy > _TOL:
        if ox > _TOL:
            # overlapping rectangles (never produced by packing): touching
            h, w = 0.0, (ox if ox > oy else oy)
        else:
            h, w = dx, oy              # horizontally facing edges
    elif ox > _TOL:
        h, w = dy, ox                  # vertically facing edges
    else:
        # diagonal: closest pair of edge midpoints, Manhattan distance
        best = None
        for (ma, la) in _edge_midpoints((ax, ay, aw, ah)):
            for (mb, lb) in _edge_midpoints((bx, by, bw, bh)):
                dist = abs(ma[0] - mb[0]) + abs(ma[1] - mb[1])
                key = (dist, la, lb)
                if best is None or key < best[0]:
                    best = (key, min(la, lb))
        h, w = best[0][0], best[1]

    if io_area <= 0.0:
        return h
    depth = math.sqrt(w * w + 2.0 * io_area) - w
    return h + 2.0 * depth


def _length_between(rect_a, rect_b, io_area: float) -> float:
    return _length_xy(rect_a[0], rect_a[1], rect_a[2], rect_a[3],
                      rect_b[0], rect_b[1], rect_b[2], rect_b[3], io_area)


def net_length(floorplan: Floorplan, net: ChipletNet) -> float:
    """Length of one chiplet-level net in the given floorplan."""
    return _length_between(floorplan.rect(net.a), floorplan.rect(net.b),
                           net.io_area)


def reach_penalty(floorplan: Floorplan,
                  nets: Sequence[ChipletNet]) -> tuple[float, list[float]]:
    """Total and per-chiplet reach-violation penalty (bits * excess mm)."""
    per_chiplet = [0.0] * floorplan.n
    total = 0.0
    for net in nets:
        excess = net_length(floorplan, net) - net.reach
        if excess > 0.0:
            pen = net.bits * excess
            total += pen
            per_chiplet[net.a] += pen
            per_chiplet[net.b] += pen
    return total, per_chiplet


def evaluate_floorplan(floorplan: Floorplan, nets: Sequence[ChipletNet],
                       alpha: float = 1.0, beta: float = 1.0,
                       gamma: float = 1.0) -> FPObjective:
    wl, _ = reach_penalty(floorplan, nets)
    chip_area = sum(w * h for w, h in floorplan.shapes)
    return FPObjective(wl_reach=wl, chip_area=chip_area,
                       package_area=floorplan.package[0] * floorplan.package[1],
                       alpha=alpha, beta=beta, gamma=gamma)


def check_feasible(floorplan: Floorplan, nets: Sequence[ChipletNet],
                   separation: float) -> FeasibilityReport:
    """Overlap, separation and reach check with an itemized violation list."""
    violations = []
    n = floorplan.n
    for i in range(n):
        for j in range(i + 1, n):
            ax, ay, aw, ah = floorplan.rect(i)
            bx, by, bw, bh = floorplan.rect(j)
            dx, ox = _axis_gap_overlap(ax, ax + aw, bx, bx + bw)
            dy, oy = _axis_gap_overlap(ay, ay + ah, by, by + bh)
            if ox > _TOL and oy > _TOL:
                violations.append(("overlap", i, j, min(ox, oy)))
            elif max(dx, dy) < separation - _TOL:
                violations.append(("separation", i, j, max(dx, dy)))
    for idx, net in enumerate(nets):
        excess = net_length(floorplan, net) - net.reach
        if excess > _TOL:
            violations.append(("reach", idx, net.a, net.b, excess))
    return FeasibilityReport(feasible=not violations,
                             violations=tuple(violations))


# ---------------------------------------------------------------------------
# Annealer
# ---------------------------------------------------------------------------

class _Walker:
    __slots__ = ("rng", "first", "second", "widths", "heights", "value",
                 "wl", "chip_area", "xs", "ys", "pkg_w", "pkg_h", "temp")

    def __init__(self, rng, first, second, widths, heights):
        self.rng = rng
        self.first = first
        self.second = second
        self.widths = widths
        self.heights = heights
        self.chip_area = sum(w * h for w, h in zip(widths, heights))

    def clone_state_from(self, other: "_Walker"):
        self.first = list(other.first)
        self.second = list(other.second)
        self.widths = list(other.widths)
        self.heights = list(other.heights)
        self.value = other.value
        self.wl = other.wl
        self.chip_area = other.chip_area
        self.xs = list(other.xs)
        self.ys = list(other.ys)
        self.pkg_w = other.pkg_w
        self.pkg_h = other.pkg_h


def _net_tuples(nets: Sequence[ChipletNet]):
    """(a, b, bits, reach, io_area) tuples: cheaper than attribute access."""
    return [(n.a, n.b, float(n.bits), n.reach, n.io_area) for n in nets]


def _objective_of(first, second, widths, heights, net_tuples, separation,
                  alpha, beta, gamma, chip_area=None):
    xs, ys, pw, ph = _pack(first, second, widths, heights, separation)
    wl = 0.0
    for a, b, bits, reach, io_area in net_tuples:
        length = _length_xy(xs[a], ys[a], widths[a], heights[a],
                            xs[b], ys[b], widths[b], heights[b], io_area)
        excess = length - reach
        if excess > 0.0:
            wl += bits * excess
    if chip_area is None:
        chip_area = sum(w * h for w, h in zip(widths, heights))
    value = alpha * wl + beta * chip_area + gamma * pw * ph
    return value, wl, xs, ys, pw, ph


def _victim_and_worst_net(walker: _Walker, net_tuples):
    """Chiplet with the largest reach penalty and its worst incident net."""
    n = len(walker.widths)
    xs, ys, widths, heights = walker.xs, walker.ys, walker.widths, \
        walker.heights
    per_chiplet = [0.0] * n
    lengths = []
    for a, b, bits, reach, io_area in net_tuples:
        length = _length_xy(xs[a], ys[a], widths[a], heights[a],
                            xs[b], ys[b], widths[b], heights[b], io_area)
        lengths.append(length)
        excess = length - reach
        if excess > 0.0:
            pen = bits * excess
            per_chiplet[a] += pen
            per_chiplet[b] += pen
    victim = max(range(n), key=lambda i: (per_chiplet[i], -i))
    if per_chiplet[victim] <= 0.0:
        return None, None, None
    worst = None
    for idx, net in enumerate(net_tuples):
        if victim != net[0] and victim != net[1]:
            continue
        excess = lengths[idx] - net[3]
        if excess <= 0.0:
            continue
        pen = net[2] * excess
        if worst is None or pen > worst[0]:
            worst = (pen, net, lengths[idx])
    return victim, worst[1], worst[2]


def _clamp_width(width: float, area: float) -> float:
    lo = math.sqrt(area * ASPECT_MIN)
    hi = math.sqrt(area * ASPECT_MAX)
    return min(max(width, lo), hi)


def _reshape_move(walker: _Walker, net_tuples):
    """Op4: reshape the max-penalty chiplet, aligning a boundary with the
    peer of its worst violating net. Area is preserved."""
    victim, net, _ = _victim_and_worst_net(walker, net_tuples)
    if victim is None:
        return None
    peer = net[1] if net[0] == victim else net[0]
    area = walker.widths[victim] * walker.heights[victim]
    vx, vy = walker.xs[victim], walker.ys[victim]
    vw, vh = walker.widths[victim], walker.heights[victim]
    px, py = walker.xs[peer], walker.ys[peer]
    pw_, ph_ = walker.widths[peer], walker.heights[peer]
    dx, ox = _axis_gap_overlap(vx, vx + vw, px, px + pw_)
    dy, oy = _axis_gap_overlap(vy, vy + vh, py, py + ph_)
    if ox > _TOL and dy > 0.0:
        new_w = _clamp_width(px + pw_ - vx, area)       # vertical facing
    elif oy > _TOL and dx > 0.0:
        new_h = min(max(py + ph_ - vy, math.sqrt(area * ASPECT_MIN)),
                    math.sqrt(area * ASPECT_MAX))       # horizontal facing
        new_w = area / new_h
    else:
        ratio = walker.rng.uniform(ASPECT_MIN, ASPECT_MAX)
        new_w = math.sqrt(area * ratio)
    if new_w <= 0.0:
        return None
    return victim, new_w, area / new_w


def _bloat_move(walker: _Walker, net_tuples, separation):
    """Op5: grow the max-penalty chiplet into neighboring whitespace by the
    amount needed to fix its worst violation, capped by the gap."""
    victim, net, length = _victim_and_worst_net(walker, net_tuples)
    if victim is None:
        return None
    peer = net[1] if net[0] == victim else net[0]
    needed = length - net[3]
    vx, vy = walker.xs[victim], walker.ys[victim]
    vw, vh = walker.widths[victim], walker.heights[victim]
    px, py = walker.xs[peer], walker.ys[peer]
    pw_, ph_ = walker.widths[peer], walker.heights[peer]
    dx, _ = _axis_gap_overlap(vx, vx + vw, px, px + pw_)
    dy, _ = _axis_gap_overlap(vy, vy + vh, py, py + ph_)
    if dx >= dy:
        grow = min(needed, dx - separation)
        if grow <= _TOL:
            return None
        return victim, vw + grow, vh
    grow = min(needed, dy - separation)
    if grow <= _TOL:
        return None
    return victim, vw, vh + grow


def _probe_temperature(walker: _Walker, net_tuples, separation, alpha, beta,
                       gamma, seed) -> float:
    """Starting temperature giving ~80% initial uphill acceptance."""
    rng = rng_for(seed, "probe")
    n = len(walker.widths)
    first = list(walker.first)
    second = list(walker.second)
    uphill = []
    base = _objective_of(first, second, walker.widths, walker.heights,
                         net_tuples, separation, alpha, beta, gamma)[0]
    for _ in range(100):
        i = int(rng.integers(n))
        j = (i + 1 + int(rng.integers(n - 1))) % n
        pi, pj = first.index(i), first.index(j)
        first[pi], first[pj] = first[pj], first[pi]
        si, sj = second.index(i), second.index(j)
        second[si], second[sj] = second[sj], second[si]
        value = _objective_of(first, second, walker.widths, walker.heights,
                              net_tuples, separation, alpha, beta, gamma)[0]
        if value > base:
            uphill.append(value - base)
        base = value
    if not uphill:
        return 0.0
    mean_up = sum(uphill) / len(uphill)
    return mean_up / math.log(1.0 / 0.8)


def anneal(areas: Sequence[float], nets: Sequence[ChipletNet],
           separation: float, config: AnnealConfig,
           alpha: float = 1.0, beta: float = 1.0, gamma: float = 1.0,
           on_accept: Callable[[float], None] | None = None) -> Floorplan:
    """Anneal a floorplan for chiplets of the given required areas.

    Always returns a plan (feasibility is reported by check_feasible).
    Deterministic for a fixed (config.seed, walkers, sync_period). Among all
    states seen, a reach-clean plan is preferred over any violating one.
    """
    n = len(areas)
    if n == 0:
        raise ValueError("need at least one chiplet")
    if n == 1:
        side = math.sqrt(areas[0])
        return Floorplan(sp=SequencePair((0,), (0,)), shapes=((side, side),),
                         positions=((0.0, 0.0),), package=(side, side))

    steps = max(1, config.perturbations // config.walkers)
    sync_period = config.sync_period if config.sync_period > 0 \
        else max(1, steps // 10)
    cool_every = max(1, steps // 1000)
    cum = []
    acc = 0.0
    for p in config.move_probs:
        acc += p
        cum.append(acc)

    net_tuples = _net_tuples(nets)

    walkers: list[_Walker] = []
    for wi in range(config.walkers):
        rng = rng_for(config.seed, "walker", wi)
        first = [int(v) for v in rng.permutation(n)]
        second = [int(v) for v in rng.permutation(n)]
        widths = [math.sqrt(a) for a in areas]
        heights = [math.sqrt(a) for a in areas]
        walkers.append(_Walker(rng, first, second, widths, heights))

    for w in walkers:
        (w.value, w.wl, w.xs, w.ys, w.pkg_w, w.pkg_h) = _objective_of(
            w.first, w.second, w.widths, w.heights, net_tuples, separation,
            alpha, beta, gamma, w.chip_area)

    if config.initial_temp is None:
        temp0 = _probe_temperature(walkers[0], net_tuples, separation, alpha,
                                   beta, gamma, config.seed)
    else:
        temp0 = config.initial_temp
    for w in walkers:
        w.temp = temp0

    best = None   # (violated_flag, value, snapshot)

    def consider_best(w: _Walker):
        nonlocal best
        key = (1 if w.wl > _TOL else 0, w.value)
        if best is None or key < (best[0], best[1]):
            snapshot = (list(w.first), list(w.second), list(w.widths),
                        list(w.heights), list(w.xs), list(w.ys),
                        w.pkg_w, w.pkg_h)
            best = (key[0], key[1], snapshot)

    for w in walkers:
        consider_best(w)

    def run_chunk(w: _Walker, n_moves: int, step_base: int):
        rng = w.rng
        for local in range(n_moves):
            u = rng.random()
            op = 0
            while op < 4 and u > cum[op]:
                op += 1
            undo = None
            new_chip_area = w.chip_area
            if op <= 2:
                i = int(rng.integers(n))
                j = (i + 1 + int(rng.integers(n - 1))) % n
                if op in (0, 2):
                    pi, pj = w.first.index(i), w.first.index(j)
                    w.first[pi], w.first[pj] = w.first[pj], w.first[pi]
                if op in (1, 2):
                    si, sj = w.second.index(i), w.second.index(j)
                    w.second[si], w.second[sj] = w.second[sj], w.second[si]
                undo = ("swap", op, i, j)
            else:
                if w.wl <= _TOL:       # no violation, no victim to fix
                    continue
                move = (_reshape_move(w, net_tuples) if op == 3
                        else _bloat_move(w, net_tuples, separation))
                if move is None:
                    continue
                victim, nw, nh = move
                ow, oh = w.widths[victim], w.heights[victim]
                undo = ("shape", victim, ow, oh)
                w.widths[victim], w.heights[victim] = nw, nh
                new_chip_area = w.chip_area - ow * oh + nw * nh

            value, wl, xs, ys, pw, ph = _objective_of(
                w.first, w.second, w.widths, w.heights, net_tuples,
                separation, alpha, beta, gamma, new_chip_area)
            delta = value - w.value
            accept = delta <= 0.0 or (
                w.temp > 0.0 and rng.random() < math.exp(-delta / w.temp))
            if accept:
                w.value, w.wl, w.chip_area = value, wl, new_chip_area
                w.xs, w.ys, w.pkg_w, w.pkg_h = xs, ys, pw, ph
                consider_best(w)
                if on_accept is not None:
                    on_accept(value)
            else:
                if undo[0] == "swap":
                    _, sop, i, j = undo
                    if sop in (0, 2):
                        pi, pj = w.first.index(i), w.first.index(j)
                        w.first[pi], w.first[pj] = w.first[pj], w.first[pi]
                    if sop in (1, 2):
                        si, sj = w.second.index(i), w.second.index(j)
                        w.second[si], w.second[sj] = w.second[sj], w.second[si]
                else:
                    _, victim, ow, oh = undo
                    w.widths[victim], w.heights[victim] = ow, oh
            if (step_base + local + 1) % cool_every == 0:
                w.temp *= config.cooling_rate

    done = 0
    while done < steps:
        chunk = min(sync_period, steps - done)
        for w in walkers:
            run_chunk(w, chunk, done)
        done += chunk
        if done < steps and config.walkers > 1:
            order = sorted(range(config.walkers),
                           key=lambda i: walkers[i].value)
            n_win = max(1, math.ceil(0.2 * config.walkers))
            winners = order[:n_win]
            for rank, wi in enumerate(order[n_win:]):
                walkers[wi].clone_state_from(walkers[winners[rank % n_win]])

    first, second, widths, heights, xs, ys, pw, ph = best[2]
    return Floorplan(
        sp=SequencePair(tuple(first), tuple(second)),
        shapes=tuple((w, h) for w, h in zip(widths, heights)),
        positions=tuple((x, y) for x, y in zip(xs, ys)),
        package=(pw, ph))


def floorplan_to_data(floorplan: Floorplan,
                      names: Sequence[str] | None = None) -> dict:
    """Geometry record consumable by external plotting scripts."""
    chiplets = []
    for i in range(floorplan.n):
        x, y, w, h = floorplan.rect(i)
        chiplets.append({
            "id": names[i] if names is not None else f"chiplet{i}",
            "x": x, "y": y, "width": w, "height": h,
        })
    return {
        "package": {"width": floorplan.package[0],
                    "height": floorplan.package[1]},
        "chiplets": chiplets,
        "sequence_pair": {"first": list(floorplan.sp.first),
                          "second": list(floorplan.sp.second)},
    }
