"""Sequential order and supply allocation over a built network."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ZeroDemand
from .network import SupplyNetwork

# volumes are real-valued; residues below this are treated as zero
EPS = 1e-9


class CapacityMode(str, enum.Enum):
    REALIZED = "realized"
    THEORETICAL = "theoretical"


@dataclass
class CapacityState:
    supplier_capacity: float
    wholesaler_capacity: np.ndarray
    group_of: np.ndarray
    group_capacity: np.ndarray

    @property
    def total(self) -> float:
        return float(self.group_capacity.sum())


@dataclass(frozen=True)
class DemandVector:
    per_retailer: np.ndarray

    @property
    def total(self) -> int:
        return int(self.per_retailer.sum())

    @classmethod
    def from_network(cls, network: SupplyNetwork) -> "DemandVector":
        # one unit per link to the wholesaler tier
        return cls(network.layer_wr.down.degrees.copy())


@dataclass(frozen=True)
class AllocationResult:
    D: float
    e: float
    ofr: float
    shortfall_per_retailer: np.ndarray
    shipped_per_wholesaler: np.ndarray
    group_remaining: np.ndarray


def compute_supplier_capacity(
    network: SupplyNetwork,
    mode: CapacityMode | str = CapacityMode.REALIZED,
    retailer_mean: float | None = None,
) -> float:
    """Per-supplier production so that total supply matches demand.

    In realized mode the balance uses this sample's total demand; in
    theoretical mode it uses the nominal retailer mean (``beta/alpha * mean``).
    """
    mode = CapacityMode(mode)
    n_s = network.tiers.n_suppliers
    if mode is CapacityMode.REALIZED:
        return network.layer_wr.down.total / n_s
    if retailer_mean is None:
        raise ValueError("theoretical capacity needs the nominal retailer mean")
    return retailer_mean * network.tiers.n_retailers / n_s


def initial_capacities(network: SupplyNetwork, c_s: float) -> CapacityState:
    w_cap = network.layer_sw.down.degrees.astype(np.float64) * c_s
    group_of = network.group_of
    g_cap = np.bincount(group_of, weights=w_cap, minlength=int(group_of.max()) + 1)
    return CapacityState(c_s, w_cap, group_of, g_cap)


def _retailer_suppliers(network: SupplyNetwork) -> list[list[int]]:
    """Distinct wholesalers linked to each retailer, ascending."""
    layer = network.layer_wr
    n_r = network.tiers.n_retailers
    n_w = network.tiers.n_wholesalers
    keys = np.unique(layer.dst * n_w + layer.src)
    r = keys // n_w
    w = (keys % n_w).tolist()
    bounds = np.searchsorted(r, np.arange(n_r + 1)).tolist()
    return [w[bounds[i]:bounds[i + 1]] for i in range(n_r)]


def allocate(
    network: SupplyNetwork, caps: CapacityState, demand: DemandVector | None = None
) -> AllocationResult:
    """Serve retailers in id order from their wholesalers in id order.

    Each visit moves ``min(remaining demand, group capacity)`` from the
    wholesaler's sharing group to the retailer.  Whatever a retailer still
    lacks after its last wholesaler is unfulfilled.  ``caps`` is not mutated.
    """
    if demand is None:
        demand = DemandVector.from_network(network)
    group_of = caps.group_of.tolist()
    remaining = caps.group_capacity.astype(np.float64).tolist()
    shipped = [0.0] * network.tiers.n_wholesalers
    wanted = demand.per_retailer.tolist()
    shortfall = [0.0] * len(wanted)
    e = 0.0
    for r, ws in enumerate(_retailer_suppliers(network)):
        need = float(wanted[r])
        for w in ws:
            g = group_of[w]
            avail = remaining[g]
            if avail <= EPS:
                continue
            if avail >= need - EPS:
                # case 1: this pool covers the rest of the order
                take = min(need, avail)
                remaining[g] = avail - take
                shipped[w] += take
                need = 0.0
                break
            # case 2: pool is emptied, move on to the next wholesaler
            remaining[g] = 0.0
            shipped[w] += avail
            need -= avail
        if need > 0.0:
            shortfall[r] = need
            e += need
    D = float(demand.total)
    return AllocationResult(
        D=D,
        e=e,
        ofr=compute_ofr_values(e, D),
        shortfall_per_retailer=np.asarray(shortfall),
        shipped_per_wholesaler=np.asarray(shipped),
        group_remaining=np.asarray(remaining),
    )


def compute_ofr_values(e: float, D: float) -> float:
    if D <= 0:
        raise ZeroDemand("total demand is zero")
    ofr = 1.0 - e / D
    assert -EPS <= ofr <= 1.0 + EPS, ofr
    return min(1.0, max(0.0, ofr))


def compute_ofr(result: AllocationResult) -> float:
    return compute_ofr_values(result.e, result.D)


def simulate_ofr(
    network: SupplyNetwork,
    mode: CapacityMode | str = CapacityMode.REALIZED,
    retailer_mean: float | None = None,
) -> AllocationResult:
    c_s = compute_supplier_capacity(network, mode, retailer_mean)
    return allocate(network, initial_capacities(network, c_s))
