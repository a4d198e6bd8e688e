"""Random three-tier supply networks built from two bipartite configuration models."""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, TextIO

import numpy as np

from .degrees import DegreeDistributionSpec, DegreeSequence, Role, draw_degrees
from .errors import (
    ConfigInvalid,
    LengthMismatch,
    ParseError,
    RejectionExhausted,
    RepairExhausted,
)

if TYPE_CHECKING:
    from .experiment import ScenarioConfig

REPAIR_CAP = 1_000_000
REJECTION_CAP = 10_000
_REPAIR_BLOCK = 4096


class HorizontalPolicy(str, enum.Enum):
    COALITION = "coalition"
    PAIRS = "pairs"


@dataclass(frozen=True)
class TierSizes:
    n_suppliers: int
    n_wholesalers: int
    n_retailers: int

    def __post_init__(self):
        if min(self.n_suppliers, self.n_wholesalers, self.n_retailers) < 1:
            raise ConfigInvalid("every tier needs at least one node")

    @classmethod
    def from_ratio(cls, alpha: float, beta: float, n_wholesalers: int) -> "TierSizes":
        n_s = alpha * n_wholesalers
        n_r = beta * n_wholesalers
        if abs(n_s - round(n_s)) > 1e-9 or abs(n_r - round(n_r)) > 1e-9:
            raise ConfigInvalid(
                f"ratio {alpha}:1:{beta} with N_w={n_wholesalers} gives fractional tiers"
            )
        return cls(int(round(n_s)), int(n_wholesalers), int(round(n_r)))

    @property
    def alpha(self) -> float:
        return self.n_suppliers / self.n_wholesalers

    @property
    def beta(self) -> float:
        return self.n_retailers / self.n_wholesalers


@dataclass(frozen=True)
class BipartiteLayer:
    """Edge multiset between an upstream and a downstream tier.

    ``src[i] -> dst[i]`` is one unit relationship; parallel edges are kept.
    """

    src: np.ndarray
    dst: np.ndarray
    up: DegreeSequence
    down: DegreeSequence

    @property
    def n_edges(self) -> int:
        return int(self.src.size)

    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.src.tolist(), self.dst.tolist()))

    def realized_degrees(self) -> tuple[np.ndarray, np.ndarray]:
        up = np.bincount(self.src, minlength=len(self.up))
        down = np.bincount(self.dst, minlength=len(self.down))
        return up, down

    def check(self) -> None:
        if self.up.total != self.down.total or self.up.total != self.n_edges:
            raise ConfigInvalid("layer stub sums are inconsistent")
        up, down = self.realized_degrees()
        if up.size != len(self.up) or down.size != len(self.down):
            raise ConfigInvalid("edge endpoint out of tier range")
        if not (np.array_equal(up, self.up.degrees) and np.array_equal(down, self.down.degrees)):
            raise ConfigInvalid("realized degrees differ from the drawn sequences")


@dataclass(frozen=True)
class SupplyNetwork:
    tiers: TierSizes
    layer_sw: BipartiteLayer
    layer_wr: BipartiteLayer
    # group id per wholesaler; ids are 0..n_groups-1
    group_of: np.ndarray
    rejected: int = 0
    repair_steps: int = 0

    @property
    def n_groups(self) -> int:
        return int(self.group_of.max()) + 1

    @property
    def horizontal_groups(self) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in range(self.n_groups)]
        for w, g in enumerate(self.group_of.tolist()):
            groups[g].append(w)
        return groups

    def check(self) -> None:
        self.layer_sw.check()
        self.layer_wr.check()
        if len(self.layer_sw.up) != self.tiers.n_suppliers:
            raise ConfigInvalid("supplier tier size mismatch")
        if not (len(self.layer_sw.down) == len(self.layer_wr.up) == self.tiers.n_wholesalers):
            raise ConfigInvalid("wholesaler tier size mismatch")
        if len(self.layer_wr.down) != self.tiers.n_retailers:
            raise ConfigInvalid("retailer tier size mismatch")
        if self.group_of.size != self.tiers.n_wholesalers:
            raise ConfigInvalid("every wholesaler needs a group")


def draw_consistent_sequences(
    spec_up: DegreeDistributionSpec,
    spec_down: DegreeDistributionSpec,
    n_up: int,
    n_down: int,
    rng: np.random.Generator,
    roles: tuple[Role, Role] = (Role.WHOLESALER_OUT, Role.RETAILER_IN),
    max_steps: int = REPAIR_CAP,
) -> tuple[DegreeSequence, DegreeSequence, int]:
    """Draw degree sequences for two adjacent tiers with equal stub sums.

    While the sums differ, one uniformly chosen node of each tier gets a fresh
    degree.  Returns both sequences and the number of repair steps taken.
    """
    expected_up = spec_up.target_mean * n_up
    expected_down = spec_down.target_mean * n_down
    if abs(expected_up - expected_down) > 1e-9 * max(expected_up, expected_down):
        raise ConfigInvalid(
            f"expected stub sums differ: {spec_up.target_mean}*{n_up} != "
            f"{spec_down.target_mean}*{n_down}"
        )
    up = draw_degrees(spec_up, n_up, rng)
    down = draw_degrees(spec_down, n_down, rng)
    gap = int(up.sum()) - int(down.sum())
    steps = 0
    while gap != 0:
        # random picks and replacement degrees are drawn in blocks
        block = min(_REPAIR_BLOCK, max_steps - steps)
        if block <= 0:
            raise RepairExhausted(f"stub sums still differ by {gap} after {steps} redraws")
        iu = rng.integers(0, n_up, size=block).tolist()
        idn = rng.integers(0, n_down, size=block).tolist()
        nu = draw_degrees(spec_up, block, rng).tolist()
        nd = draw_degrees(spec_down, block, rng).tolist()
        for i, j, a, b in zip(iu, idn, nu, nd):
            steps += 1
            gap += (a - int(up[i])) - (b - int(down[j]))
            up[i] = a
            down[j] = b
            if gap == 0:
                break
    return DegreeSequence(up, roles[0]), DegreeSequence(down, roles[1]), steps


def _stubs(seq: DegreeSequence) -> np.ndarray:
    return np.repeat(np.arange(len(seq), dtype=np.int64), seq.degrees)


def match_stubs_random(
    up_seq: DegreeSequence, down_seq: DegreeSequence, rng: np.random.Generator
) -> BipartiteLayer:
    """Configuration-model pairing: a uniform permutation of downstream stubs."""
    if up_seq.total != down_seq.total:
        raise ConfigInvalid(f"stub sums differ: {up_seq.total} vs {down_seq.total}")
    src = _stubs(up_seq)
    dst = rng.permutation(_stubs(down_seq))
    return BipartiteLayer(src, dst, up_seq, down_seq)


def match_stubs_ordered(
    up_seq: DegreeSequence, down_seq: DegreeSequence, rng: np.random.Generator | None = None
) -> BipartiteLayer:
    """Greedy rank matching.

    Repeatedly joins one stub of the upstream node and one stub of the
    downstream node that hold the most unmatched stubs (ties go to the lower
    id).  ``rng`` is accepted for interface symmetry and not used.
    """
    if up_seq.total != down_seq.total:
        raise ConfigInvalid(f"stub sums differ: {up_seq.total} vs {down_seq.total}")
    up_heap = [(-d, i) for i, d in enumerate(up_seq.degrees.tolist())]
    down_heap = [(-d, j) for j, d in enumerate(down_seq.degrees.tolist())]
    heapq.heapify(up_heap)
    heapq.heapify(down_heap)
    src, dst = [], []
    while up_heap:
        du, i = up_heap[0]
        dd, j = down_heap[0]
        src.append(i)
        dst.append(j)
        if du == -1:
            heapq.heappop(up_heap)
        else:
            heapq.heapreplace(up_heap, (du + 1, i))
        if dd == -1:
            heapq.heappop(down_heap)
        else:
            heapq.heapreplace(down_heap, (dd + 1, j))
    return BipartiteLayer(
        np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64), up_seq, down_seq
    )


def couple_wholesaler_degrees(
    in_seq: DegreeSequence, out_seq: DegreeSequence
) -> tuple[DegreeSequence, DegreeSequence]:
    """Comonotone reassignment: wholesaler 0 gets the largest in- and out-degree, and so on."""
    if len(in_seq) != len(out_seq):
        raise LengthMismatch(f"{len(in_seq)} in-degrees vs {len(out_seq)} out-degrees")
    ins = -np.sort(-in_seq.degrees, kind="stable")
    outs = -np.sort(-out_seq.degrees, kind="stable")
    return DegreeSequence(ins, in_seq.role), DegreeSequence(outs, out_seq.role)


def mean_gap_ok(seq: DegreeSequence | np.ndarray, target_mean: float, threshold: float = 0.05) -> bool:
    degrees = seq.degrees if isinstance(seq, DegreeSequence) else np.asarray(seq)
    if degrees.size == 0:
        raise ConfigInvalid("empty degree sequence")
    gap = abs(float(degrees.mean()) - target_mean) / target_mean
    # 1e-12 slack keeps the inclusive boundary robust to rounding in the mean
    return gap <= threshold + 1e-12


def assign_horizontal_groups(
    n_wholesalers: int,
    rho: float,
    policy: HorizontalPolicy | str = HorizontalPolicy.COALITION,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Group id per wholesaler.

    ``round(rho * n_wholesalers)`` wholesalers are chosen at random.  Under the
    coalition policy they share one pool; under the pairs policy they are
    paired off at random.  Everyone else is a singleton.
    """
    if not 0 <= rho <= 1:
        raise ConfigInvalid(f"rho must lie in [0, 1], got {rho}")
    policy = HorizontalPolicy(policy)
    n_linked = int(round(rho * n_wholesalers))
    group_of = np.arange(n_wholesalers, dtype=np.int64)
    if n_linked < 2:
        return group_of
    if rng is None:
        raise ConfigInvalid("rng required when rho > 0")
    chosen = rng.permutation(n_wholesalers)[:n_linked]
    if policy is HorizontalPolicy.COALITION:
        group_of[chosen] = chosen.min()
    else:
        for a, b in zip(chosen[0::2], chosen[1::2]):
            group_of[b] = group_of[a]
    # relabel to dense ids in order of first appearance
    _, dense = np.unique(group_of, return_inverse=True)
    return dense.astype(np.int64)


def build_network(
    config: "ScenarioConfig", rng: np.random.Generator, rejection_cap: int = REJECTION_CAP
) -> SupplyNetwork:
    """Sample one supply network for a scenario."""
    tiers = config.tiers
    spec_s, spec_w_in, spec_w_out, spec_r = config.degree_specs()
    rejected = 0
    repair = 0
    while True:
        s_out, w_in, steps_sw = draw_consistent_sequences(
            spec_s, spec_w_in, tiers.n_suppliers, tiers.n_wholesalers, rng,
            roles=(Role.SUPPLIER_OUT, Role.WHOLESALER_IN),
        )
        w_out, r_in, steps_wr = draw_consistent_sequences(
            spec_w_out, spec_r, tiers.n_wholesalers, tiers.n_retailers, rng,
            roles=(Role.WHOLESALER_OUT, Role.RETAILER_IN),
        )
        repair += steps_sw + steps_wr
        if mean_gap_ok(w_out, spec_w_out.target_mean, config.gap_threshold) and mean_gap_ok(
            r_in, spec_r.target_mean, config.gap_threshold
        ):
            break
        rejected += 1
        if rejected > rejection_cap:
            raise RejectionExhausted(
                f"{rejected} consecutive samples failed the {config.gap_threshold:.0%} mean-gap filter"
            )
    if config.coupled:
        w_in, w_out = couple_wholesaler_degrees(w_in, w_out)
        if not config.ordered:
            # rank coupling is kept, but wholesaler ids carry no degree information
            perm = rng.permutation(tiers.n_wholesalers)
            w_in = DegreeSequence(w_in.degrees[perm], w_in.role)
            w_out = DegreeSequence(w_out.degrees[perm], w_out.role)
    # retailer ids follow descending demand, so larger orders are served first
    r_in = DegreeSequence(-np.sort(-r_in.degrees, kind="stable"), r_in.role)
    layer_sw = match_stubs_random(s_out, w_in, rng)
    if config.ordered:
        layer_wr = match_stubs_ordered(w_out, r_in)
    else:
        layer_wr = match_stubs_random(w_out, r_in, rng)
    group_of = assign_horizontal_groups(
        tiers.n_wholesalers, config.rho, config.horizontal_policy, rng
    )
    return SupplyNetwork(tiers, layer_sw, layer_wr, group_of, rejected, repair)


# -- edge-list dump -----------------------------------------------------------

LAYER_SW = "sw"
LAYER_WR = "wr"


def dump_network(network: SupplyNetwork, out: TextIO) -> None:
    """Write ``layer<TAB>src<TAB>dst`` lines then ``group<TAB>wholesaler<TAB>group_id`` lines."""
    for name, layer in ((LAYER_SW, network.layer_sw), (LAYER_WR, network.layer_wr)):
        for s, d in zip(layer.src.tolist(), layer.dst.tolist()):
            out.write(f"{name}\t{s}\t{d}\n")
    for w, g in enumerate(network.group_of.tolist()):
        out.write(f"group\t{w}\t{g}\n")


def load_network(lines: Iterable[str]) -> SupplyNetwork:
    """Inverse of :func:`dump_network`; tier sizes come from the largest node ids."""
    edges: dict[str, list[tuple[int, int]]] = {LAYER_SW: [], LAYER_WR: []}
    groups: dict[int, int] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError("expected three tab-separated fields", line=lineno)
        tag = parts[0]
        try:
            a, b = int(parts[1]), int(parts[2])
        except ValueError:
            raise ParseError("node ids must be integers", line=lineno) from None
        if tag in edges:
            edges[tag].append((a, b))
        elif tag == "group":
            groups[a] = b
        else:
            raise ParseError(f"unknown record type {tag!r}", line=lineno)
    if not edges[LAYER_SW] or not edges[LAYER_WR]:
        raise ParseError("dump needs edges in both layers")
    group_of = [groups.get(w, -1) for w in range(1 + max(groups, default=-1))]
    if -1 in group_of:
        raise ParseError("some wholesalers have no group record")
    return network_from_edges(edges[LAYER_SW], edges[LAYER_WR], group_of or None)


def network_from_edges(sw_edges, wr_edges, group_of=None, tiers: TierSizes | None = None) -> SupplyNetwork:
    """Network with the given edge lists; degrees are read off the edges.

    Without ``tiers``, tier sizes are the largest node ids plus one.  Without
    ``group_of`` every wholesaler is its own group.
    """
    sw = np.asarray(list(sw_edges), dtype=np.int64).reshape(-1, 2)
    wr = np.asarray(list(wr_edges), dtype=np.int64).reshape(-1, 2)
    if tiers is None:
        tiers = TierSizes(
            int(sw[:, 0].max()) + 1,
            int(max(sw[:, 1].max(), wr[:, 0].max())) + 1,
            int(wr[:, 1].max()) + 1,
        )

    def layer(arr, n_up, n_down, roles):
        up = DegreeSequence(np.bincount(arr[:, 0], minlength=n_up), roles[0])
        down = DegreeSequence(np.bincount(arr[:, 1], minlength=n_down), roles[1])
        return BipartiteLayer(arr[:, 0].copy(), arr[:, 1].copy(), up, down)

    if group_of is None:
        group_of = np.arange(tiers.n_wholesalers, dtype=np.int64)
    group_of = np.asarray(group_of, dtype=np.int64)
    if group_of.size != tiers.n_wholesalers:
        raise ConfigInvalid("need one group id per wholesaler")
    net = SupplyNetwork(
        tiers,
        layer(sw, tiers.n_suppliers, tiers.n_wholesalers, (Role.SUPPLIER_OUT, Role.WHOLESALER_IN)),
        layer(wr, tiers.n_wholesalers, tiers.n_retailers, (Role.WHOLESALER_OUT, Role.RETAILER_IN)),
        group_of,
    )
    net.check()
    return net
