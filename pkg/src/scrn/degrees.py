"""Zero-truncated degree distributions with mean-matched parameters.

Three families are supported: regular (every node has the same degree),
zero-truncated Poisson and zero-truncated power law on ``{1..k_max}``.
Every family is parametrized by its mean so that different families can be
compared on equal footing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigInvalid, InternalSamplingFailure, NonBracketable

MAX_BISECTION_STEPS = 200
MAX_REJECTION_ROUNDS = 10_000


class Family(str, enum.Enum):
    REGULAR = "reg"
    POISSON = "poiss"
    POWER_LAW = "pow"

    @classmethod
    def parse(cls, value: "str | Family") -> "Family":
        if isinstance(value, Family):
            return value
        key = str(value).strip().lower()
        aliases = {
            "reg": cls.REGULAR, "regular": cls.REGULAR,
            "poiss": cls.POISSON, "poisson": cls.POISSON, "ztp": cls.POISSON,
            "pow": cls.POWER_LAW, "power": cls.POWER_LAW, "powerlaw": cls.POWER_LAW,
            "power-law": cls.POWER_LAW, "power_law": cls.POWER_LAW,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ConfigInvalid(f"unknown distribution family {value!r}") from None


class Role(str, enum.Enum):
    SUPPLIER_OUT = "supplier_out"
    WHOLESALER_IN = "wholesaler_in"
    WHOLESALER_OUT = "wholesaler_out"
    RETAILER_IN = "retailer_in"


@dataclass(frozen=True)
class DegreeDistributionSpec:
    """A degree law with its internal parameter already solved.

    ``param`` is lambda for the Poisson family and the exponent gamma for the
    power law; it is unused (0.0) for regular degrees.  ``support_cap`` is the
    largest admissible degree of the power law.
    """

    family: Family
    target_mean: float
    param: float = 0.0
    support_cap: int | None = None

    def __post_init__(self):
        if not self.target_mean >= 1:
            raise ConfigInvalid(
                f"target_mean must be >= 1 under zero-truncation, got {self.target_mean}"
            )
        if self.family is Family.REGULAR and float(self.target_mean) != int(self.target_mean):
            raise ConfigInvalid(f"regular degree needs an integer mean, got {self.target_mean}")
        if self.family is Family.POWER_LAW:
            if self.support_cap is None or self.support_cap < 2:
                raise ConfigInvalid("power law needs support_cap >= 2")
            if not self.param > 1:
                raise ConfigInvalid(f"power-law exponent must exceed 1, got {self.param}")

    @classmethod
    def solve(
        cls, family: "Family | str", target_mean: float, support_cap: int | None = None
    ) -> "DegreeDistributionSpec":
        """Build a spec whose analytic mean equals ``target_mean``."""
        family = Family.parse(family)
        if family is Family.REGULAR:
            return cls(family, float(target_mean))
        if family is Family.POISSON:
            return cls(family, float(target_mean), solve_ztp_lambda(target_mean))
        if support_cap is None:
            raise ConfigInvalid("power law needs a support_cap")
        gamma = solve_powerlaw_gamma(target_mean, support_cap)
        return cls(family, float(target_mean), gamma, int(support_cap))

    def analytic_mean(self) -> float:
        if self.family is Family.REGULAR:
            return float(self.target_mean)
        if self.family is Family.POISSON:
            return ztp_mean(self.param)
        return powerlaw_mean(self.param, self.support_cap)


@dataclass(frozen=True)
class DegreeSequence:
    degrees: np.ndarray
    role: Role

    def __post_init__(self):
        degrees = np.asarray(self.degrees, dtype=np.int64)
        if degrees.ndim != 1 or degrees.size == 0:
            raise ConfigInvalid("degree sequence must be a non-empty 1-d array")
        if degrees.min() < 1:
            raise ConfigInvalid("zero-truncated degree sequence contains a degree < 1")
        object.__setattr__(self, "degrees", degrees)

    def __len__(self):
        return int(self.degrees.size)

    @property
    def total(self) -> int:
        return int(self.degrees.sum())

    @property
    def mean(self) -> float:
        return float(self.degrees.mean())


def ztp_mean(lam: float) -> float:
    """Mean of the zero-truncated Poisson law, lam / (1 - exp(-lam))."""
    if lam <= 0:
        return 1.0
    return lam / -math.expm1(-lam)


def _bisect(f, lo: float, hi: float) -> float:
    # f(lo) and f(hi) have opposite signs; iterate until the bracket stops shrinking
    f_lo = f(lo)
    for _ in range(MAX_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_ztp_lambda(target_mean: float) -> float:
    """Poisson rate whose zero-truncated mean equals ``target_mean``."""
    target_mean = float(target_mean)
    if not (target_mean > 1 and math.isfinite(target_mean)):
        raise NonBracketable(
            f"zero-truncated Poisson mean must be > 1, got {target_mean}"
        )
    # ztp_mean(lam) > lam, so the root lies below target_mean
    return _bisect(lambda lam: ztp_mean(lam) - target_mean, 0.0, target_mean)


@lru_cache(maxsize=256)
def _support(support_cap: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(1, support_cap + 1, dtype=np.float64)
    return k, np.log(k)


def powerlaw_mean(gamma: float, support_cap: int) -> float:
    k, logk = _support(int(support_cap))
    w = np.exp(-gamma * logk)
    return float(np.dot(k, w) / w.sum())


def solve_powerlaw_gamma(target_mean: float, support_cap: int) -> float:
    """Exponent gamma > 1 such that the power law on {1..support_cap} has the given mean.

    The truncated mean decreases strictly in gamma, from ``support_cap / H(support_cap)``
    at gamma = 1 towards 1 as gamma grows.
    """
    target_mean = float(target_mean)
    support_cap = int(support_cap)
    if support_cap < 2:
        raise NonBracketable(f"support_cap must be >= 2, got {support_cap}")
    upper = powerlaw_mean(1.0, support_cap)
    if not (1 < target_mean < upper):
        raise NonBracketable(
            f"power-law mean {target_mean} not reachable with gamma > 1 on "
            f"{{1..{support_cap}}}; admissible range is (1, {upper:.6g})"
        )
    hi = 4.0
    while powerlaw_mean(hi, support_cap) > target_mean:
        hi *= 2
        if hi > 1e4:
            raise NonBracketable(f"power-law mean {target_mean} too close to 1")
    return _bisect(lambda g: powerlaw_mean(g, support_cap) - target_mean, 1.0, hi)


@lru_cache(maxsize=256)
def powerlaw_cdf(gamma: float, support_cap: int) -> np.ndarray:
    """Cumulative table over {1..support_cap}; the last entry is exactly 1."""
    _, logk = _support(int(support_cap))
    pmf = np.exp(-gamma * logk)
    pmf /= pmf.sum()
    cdf = np.cumsum(pmf)
    cdf[-1] = 1.0
    cdf.flags.writeable = False
    return cdf


def draw_degrees(spec: DegreeDistributionSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. zero-truncated degrees as an int64 array."""
    if spec.family is Family.REGULAR:
        return np.full(n, int(spec.target_mean), dtype=np.int64)
    if spec.family is Family.POISSON:
        out = rng.poisson(spec.param, size=n).astype(np.int64)
        zeros = np.flatnonzero(out == 0)
        rounds = 0
        while zeros.size:
            rounds += 1
            if rounds > MAX_REJECTION_ROUNDS:
                raise InternalSamplingFailure("zero-rejection loop did not terminate")
            redraw = rng.poisson(spec.param, size=zeros.size)
            out[zeros] = redraw
            zeros = zeros[redraw == 0]
        return out
    cdf = powerlaw_cdf(spec.param, spec.support_cap)
    u = rng.random(n)
    return np.searchsorted(cdf, u, side="right").astype(np.int64) + 1


def sample_degree_sequence(
    spec: DegreeDistributionSpec, n: int, rng: np.random.Generator, role: Role = Role.RETAILER_IN
) -> DegreeSequence:
    if n < 1:
        raise ConfigInvalid(f"node count must be >= 1, got {n}")
    return DegreeSequence(draw_degrees(spec, n, rng), role)
