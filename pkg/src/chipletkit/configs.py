"""Hyperparameter dataclasses for the annealer, the GA and the refinement core.

All of these are plain frozen dataclasses so a resolved configuration can be
serialized into the run manifest and fed back in to reproduce a run. Every
default here is overridable from the config file and from CLI flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class AnnealConfig:
    """Simulated-annealing floorplanner settings.

    ``perturbations`` is the total move budget across all walkers; each walker
    runs ``perturbations // walkers`` moves. ``sync_period`` of 0 means walkers
    synchronize ten times over their run. ``initial_temp`` of None means the
    starting temperature is calibrated from probe moves so that roughly 80% of
    uphill moves are initially accepted; fast mode pins it to 0.0 (greedy).
    """

    mode: str = "standard"
    perturbations: int = 1_000_000
    cooling_rate: float = 0.989
    initial_temp: float | None = None
    walkers: int = 10
    sync_period: int = 0
    move_probs: tuple[float, float, float, float, float] = (0.2, 0.2, 0.2, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("standard", "fast"):
            raise ValueError(f"unknown anneal mode {self.mode!r}")
        if self.perturbations < 1 or self.walkers < 1:
            raise ValueError("perturbations and walkers must be >= 1")
        if len(self.move_probs) != 5 or any(p < 0 for p in self.move_probs):
            raise ValueError("move_probs must be 5 nonnegative values")
        if not math.isclose(sum(self.move_probs), 1.0, rel_tol=1e-9):
            raise ValueError("move_probs must sum to 1")
        if self.initial_temp is not None and self.initial_temp < 0:
            raise ValueError("initial_temp must be nonnegative")

    @classmethod
    def standard(cls, **overrides) -> "AnnealConfig":
        return cls(**{"mode": "standard", **overrides})

    @classmethod
    def fast(cls, **overrides) -> "AnnealConfig":
        defaults = dict(mode="fast", perturbations=10_000, initial_temp=0.0)
        defaults.update(overrides)
        return cls(**defaults)

    def with_seed(self, seed: int) -> "AnnealConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class FloorplanSettings:
    """Objective weights plus the two annealer operating points."""

    alpha: float = 1.0   # reach-violation weight
    beta: float = 1.0    # chiplet-area weight
    gamma: float = 1.0   # package-area weight
    standard: AnnealConfig = field(default_factory=AnnealConfig.standard)
    fast: AnnealConfig = field(default_factory=AnnealConfig.fast)

    def config_for(self, mode: str) -> AnnealConfig:
        if mode == "standard":
            return self.standard
        if mode == "fast":
            return self.fast
        raise ValueError(f"unknown floorplan mode {mode!r}")


@dataclass(frozen=True)
class GAConfig:
    """Outer genetic-algorithm hyperparameters.

    Field names match the config-file keys: tot_pop population size, k_pop
    offspring pairs per generation, zeta tournament size, sigma elite count,
    psi generation cap, epsilon stall-generation cap, delta_threshold minimum
    improvement counted as progress, p_c/p_m crossover and mutation rates,
    K_max genome length (maximum chiplet count).
    """

    tot_pop: int = 50
    k_pop: int = 45
    zeta: int = 3
    sigma: int = 5
    psi: int = 50
    epsilon: int = 10
    delta_threshold: float = 0.01
    p_c: float = 0.60
    p_m: float = 0.07
    K_max: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.tot_pop != self.k_pop + self.sigma:
            raise ValueError("tot_pop must equal k_pop + sigma")
        for name in ("p_c", "p_m"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if min(self.zeta, self.psi, self.K_max, self.tot_pop) < 1:
            raise ValueError("zeta, psi, K_max and tot_pop must be >= 1")
        if self.epsilon < 0 or self.sigma < 0:
            raise ValueError("epsilon and sigma must be >= 0")


@dataclass(frozen=True)
class RefineBudget:
    """Effort knobs for the partitioning core.

    The full budget is used for standalone partitioning runs and for the
    final re-evaluation of the GA winner; the reduced budget keeps the GA
    inner loop affordable (fewer passes, smaller move quota, smaller pool).
    """

    fm_passes: int = 4
    kl_passes: int = 2
    fm_quota: float = 0.5
    kl_quota: float = 0.1
    pool_spectral: int = 1
    pool_expansion: int = 1
    pool_random: int = 5
    pool_mincut: int = 4

    def __post_init__(self):
        if not 0.0 < self.fm_quota <= 1.0 or not 0.0 < self.kl_quota <= 1.0:
            raise ValueError("move quotas must be in (0, 1]")
        if min(self.fm_passes, self.kl_passes) < 0:
            raise ValueError("pass counts must be >= 0")

    @property
    def pool_size(self) -> int:
        return (self.pool_spectral + self.pool_expansion
                + self.pool_random + self.pool_mincut)

    @classmethod
    def full(cls) -> "RefineBudget":
        return cls()

    @classmethod
    def reduced(cls) -> "RefineBudget":
        return cls(fm_passes=2, kl_passes=1, fm_quota=0.25, kl_quota=0.1,
                   pool_spectral=1, pool_expansion=1, pool_random=3,
                   pool_mincut=2)
