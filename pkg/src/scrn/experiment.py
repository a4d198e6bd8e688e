"""Monte Carlo replications, the degree-distribution grids and the horizontal-link sweep."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .allocation import CapacityMode, simulate_ofr
from .degrees import DegreeDistributionSpec, Family
from .errors import ConfigInvalid, EmptyInput, NonBracketable
from .network import HorizontalPolicy, TierSizes, build_network

FAMILIES = (Family.REGULAR, Family.POISSON, Family.POWER_LAW)
TABLE1_CASES = ("a", "b", "c", "d")
DEFAULT_RHO_GRID = tuple(round(0.1 * i, 10) for i in range(11))


@dataclass(frozen=True)
class ScenarioConfig:
    n_wholesalers: int = 100
    ratio_alpha: float = 2.0
    ratio_beta: float = 10.0
    wholesaler_dist: Family = Family.REGULAR
    retailer_dist: Family = Family.REGULAR
    retailer_mean_in_degree: float = 2.0
    rho: float = 0.0
    ordered: bool = False
    coupled: bool = True
    capacity_mode: CapacityMode = CapacityMode.REALIZED
    horizontal_policy: HorizontalPolicy = HorizontalPolicy.COALITION
    replications: int = 1000
    seed: int = 0
    gap_threshold: float = 0.05
    # suppliers trade with exactly this many wholesalers (regular)
    supplier_out_degree: int = field(default=1, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "wholesaler_dist", Family.parse(self.wholesaler_dist))
        object.__setattr__(self, "retailer_dist", Family.parse(self.retailer_dist))
        object.__setattr__(self, "capacity_mode", CapacityMode(self.capacity_mode))
        object.__setattr__(self, "horizontal_policy", HorizontalPolicy(self.horizontal_policy))
        self.validate()

    def validate(self) -> None:
        if self.n_wholesalers < 1:
            raise ConfigInvalid("n_wholesalers must be >= 1")
        if not (self.ratio_alpha > 0 and self.ratio_beta > 0):
            raise ConfigInvalid("tier ratios must be positive")
        if not self.retailer_mean_in_degree >= 1:
            raise ConfigInvalid(
                "retailer_mean_in_degree must be >= 1 (zero-truncated degrees)"
            )
        if not 0 <= self.rho <= 1:
            raise ConfigInvalid(f"rho must lie in [0, 1], got {self.rho}")
        if self.replications < 1:
            raise ConfigInvalid("replications must be >= 1")
        if not 0 <= self.gap_threshold:
            raise ConfigInvalid("gap_threshold must be non-negative")
        if self.seed < 0:
            raise ConfigInvalid("seed must be non-negative")
        if self.supplier_out_degree != 1:
            raise ConfigInvalid("only single-link suppliers are supported")
        TierSizes.from_ratio(self.ratio_alpha, self.ratio_beta, self.n_wholesalers)
        try:
            self.degree_specs()
        except NonBracketable as exc:
            raise ConfigInvalid(f"degree means cannot be matched: {exc}") from exc

    @property
    def tiers(self) -> TierSizes:
        return TierSizes.from_ratio(self.ratio_alpha, self.ratio_beta, self.n_wholesalers)

    @property
    def wholesaler_in_mean(self) -> float:
        return self.ratio_alpha * self.supplier_out_degree

    @property
    def wholesaler_out_mean(self) -> float:
        return self.ratio_beta * self.retailer_mean_in_degree

    def degree_specs(self) -> tuple[DegreeDistributionSpec, ...]:
        """Specs for supplier-out, wholesaler-in, wholesaler-out and retailer-in degrees."""
        t = self.tiers
        return _specs(
            self.wholesaler_dist, self.retailer_dist,
            float(self.supplier_out_degree), self.wholesaler_in_mean,
            self.wholesaler_out_mean, float(self.retailer_mean_in_degree),
            t.n_suppliers, t.n_wholesalers, t.n_retailers,
        )

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


@lru_cache(maxsize=512)
def _specs(w_fam, r_fam, s_mean, w_in_mean, w_out_mean, r_mean, n_s, n_w, n_r):
    # power-law support is capped at the size of the opposite tier
    def solve(fam, mean, cap):
        if fam is not Family.REGULAR and mean == 1:
            # zero-truncated law with mean 1 is degenerate at 1
            return DegreeDistributionSpec(Family.REGULAR, 1.0)
        return DegreeDistributionSpec.solve(fam, mean, cap)

    return (
        DegreeDistributionSpec(Family.REGULAR, s_mean),
        solve(w_fam, w_in_mean, n_s),
        solve(w_fam, w_out_mean, n_r),
        solve(r_fam, r_mean, n_w),
    )


@dataclass(frozen=True)
class SummaryStats:
    mean_ofr: float
    std_error: float
    replications_used: int
    rejected_samples: int = 0
    values: tuple[float, ...] = field(default=(), repr=False, compare=False)


def summarize(values, rejected: int = 0) -> SummaryStats:
    """Mean and standard error (sample sd / sqrt(n)) of replication outcomes."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise EmptyInput("no values to summarize")
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return SummaryStats(mean, se, int(arr.size), int(rejected), tuple(arr.tolist()))


def replication_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one replication, a pure function of (seed, index)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _replicate(config: ScenarioConfig, index: int) -> tuple[float, int]:
    rng = replication_rng(config.seed, index)
    network = build_network(config, rng)
    result = simulate_ofr(network, config.capacity_mode, config.retailer_mean_in_degree)
    return result.ofr, network.rejected


def run_replication(config: ScenarioConfig, replication_index: int) -> float:
    return _replicate(config, replication_index)[0]


def _run_chunk(args):
    config, indices = args
    return [_replicate(config, i) for i in indices]


def run_scenario(config: ScenarioConfig, workers: int = 1) -> SummaryStats:
    n = config.replications
    if workers > 1 and n > 1:
        chunks = [list(range(k, n, workers)) for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [(config, c) for c in chunks]))
        outcomes = [None] * n
        for idx, part in zip(chunks, parts):
            for i, o in zip(idx, part):
                outcomes[i] = o
    else:
        outcomes = [_replicate(config, i) for i in range(n)]
    return summarize([o[0] for o in outcomes], sum(o[1] for o in outcomes))


@dataclass(frozen=True)
class Cell:
    """One row of a result grid."""

    case: str
    config: ScenarioConfig
    stats: SummaryStats

    @property
    def key(self):
        c = self.config
        return (self.case, c.wholesaler_dist.value, c.retailer_dist.value,
                c.retailer_mean_in_degree, c.rho)


def baseline_config(**overrides) -> ScenarioConfig:
    """2:1:10 tiers with 100 wholesalers, no horizontal links, random matching."""
    return ScenarioConfig(**overrides)


def table1_config(base: ScenarioConfig, case: str) -> ScenarioConfig:
    if case == "a":
        return base.with_(retailer_mean_in_degree=2.0, ordered=False, rho=0.0)
    if case == "b":
        return base.with_(retailer_mean_in_degree=2.0, ordered=True, rho=0.0)
    if case == "c":
        return base.with_(retailer_mean_in_degree=4.0, ordered=False, rho=0.0)
    if case == "d":
        return base.with_(retailer_mean_in_degree=8.0, ordered=False, rho=0.0)
    raise ConfigInvalid(f"unknown grid case {case!r}")


def run_table1(
    base: ScenarioConfig, cases=TABLE1_CASES, families=FAMILIES, workers: int = 1, progress=None
) -> list[Cell]:
    cells = []
    for case in cases:
        cfg = table1_config(base, case)
        for w in families:
            for r in families:
                c = cfg.with_(wholesaler_dist=w, retailer_dist=r)
                cells.append(Cell(case, c, run_scenario(c, workers)))
                if progress:
                    progress(cells[-1])
    return cells


def run_figure3_sweep(
    base: ScenarioConfig, rho_grid=DEFAULT_RHO_GRID, families=FAMILIES, workers: int = 1,
    progress=None,
) -> list[Cell]:
    for rho in rho_grid:
        if not 0 <= rho <= 1:
            raise ConfigInvalid(f"rho must lie in [0, 1], got {rho}")
    cfg = table1_config(base, "a")
    cells = []
    for w in families:
        for r in families:
            for rho in rho_grid:
                c = cfg.with_(wholesaler_dist=w, retailer_dist=r, rho=float(rho))
                cells.append(Cell("fig3", c, run_scenario(c, workers)))
                if progress:
                    progress(cells[-1])
    return cells
