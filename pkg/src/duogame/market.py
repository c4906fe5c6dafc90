"""Agent-based consumer market with two competing brands.

Each simulated day every agent scores both brands with a motivation value
built from price sensitivity, advertisement susceptibility, promotion
sensitivity and the adoption of network neighbors, then adopts the argmax
brand (ties broken uniformly at random). Marketing budgets drive spend,
a cross-company interaction co-state and per-brand marketing forces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .network import SocialNetwork

NO_BRAND = -1

# The interaction co-state is positively unstable whenever the co-state
# factors and total force are positive, so forward integration saturates it
# at this bound to keep long runs finite; the default roughly offsets the
# advertisement and promotion force terms at their mid levels.
DEFAULT_INTER_CAP = 0.7


def marketing_spend(mb, ad, pm, k, adj_time) -> tuple:
    """Advertisement spend, promotion spend and the combined spending rate.

    Works elementwise on per-brand arrays as well as scalars.
    """
    if adj_time <= 0:
        raise ParameterError(f"spending adjustment time must be > 0, got {adj_time}")
    ad_s = k * mb * ad
    pm_s = k * mb * pm
    return ad_s, pm_s, (ad_s + pm_s) / adj_time


def marketing_force(ad, pm, inter, w1, w2, w3):
    return w1 * ad + w2 * pm + w3 * ad * pm + inter


def update_perceptions(mf, i_ad, i_pm, i_ft):
    """Scale the initial perception constants by the current marketing force."""
    return mf * i_ad, mf * i_pm, mf * i_ft


def update_costate(inter, rho, d1, d2, force, prices, pms, dt):
    """One Euler step of the 2x2 cross-company interaction system."""
    if dt <= 0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    inter = np.asarray(inter, dtype=float)
    prices = np.asarray(prices, dtype=float)
    pms = np.asarray(pms, dtype=float)
    coupling = np.array([[d1, d1 * d2], [d2 * d1, d2]])
    drift = coupling @ ((rho + force) * inter) - prices * (1.0 - pms)
    return inter + dt * drift


def sunk_cost(mbs, inters) -> float:
    return float(np.dot(np.asarray(mbs, float), np.asarray(inters, float)))


def price_sensitivity(price, pm, price_sum, s, m_agent):
    """Exponential response to a brand's promotion-adjusted price against the
    market reference, offset by the agent's socio-economic constant."""
    if s <= 1:
        raise ParameterError(f"price parameter s must be > 1, got {s}")
    return -np.power(s, price * (1.0 - pm) - price_sum) + m_agent


def motivation(sens_p, price, pm, sus_ad, ad, sens_pm, ft, inf):
    return sens_p * price * (1.0 - pm) + sus_ad * ad + sens_pm * pm + ft * inf


@dataclass
class MarketParams:
    """Shared behavioral constants of the consumer market."""

    w1: float = 1.0
    w2: float = 1.0
    w3: float = 0.5
    rho: float = 0.1
    delta1: float = 0.2
    delta2: float = 0.2
    i_ad: float = 0.5        # mean initial susceptibility to advertisement
    i_pm: float = 0.5        # mean initial promotion sensitivity
    i_ft: float = 0.05       # mean initial follower tendency
    perception_spread: float = 0.4   # half-width of the per-agent uniform draw
    s: float = 2.0           # price response base, > 1
    m_low: float = 0.5       # socio-economic constant, uniform per agent
    m_high: float = 1.93     # upper end straddles the price-indifference point
    k: float = 1.0           # budget adjustment factor
    adj_time_ms: float = 10.0
    inter_cap: float = DEFAULT_INTER_CAP
    price_sum_mode: str = "average"  # "average" or literal "sum" price reference

    def validate(self):
        if self.s <= 1:
            raise ParameterError("price parameter s must be > 1")
        if self.adj_time_ms <= 0:
            raise ParameterError("adj_time_ms must be > 0")
        if self.m_low > self.m_high:
            raise ParameterError("m_low must not exceed m_high")
        if self.price_sum_mode not in ("sum", "average"):
            raise ParameterError(f"unknown price_sum_mode {self.price_sum_mode!r}")
        return self


@dataclass
class MarketingState:
    """Per-brand marketing levels plus the shared interaction co-state."""

    mb: np.ndarray = field(default_factory=lambda: np.zeros(2))
    ad: np.ndarray = field(default_factory=lambda: np.zeros(2))
    pm: np.ndarray = field(default_factory=lambda: np.zeros(2))
    ad_spend: np.ndarray = field(default_factory=lambda: np.zeros(2))
    pm_spend: np.ndarray = field(default_factory=lambda: np.zeros(2))
    spend_rate: np.ndarray = field(default_factory=lambda: np.zeros(2))
    force: np.ndarray = field(default_factory=lambda: np.zeros(2))
    inter: np.ndarray = field(default_factory=lambda: np.zeros(2))
    total_force: float = 0.0


class ConsumerMarket:
    """Population state plus the per-day market step.

    The update is synchronous: every agent reads the previous day's adoption
    of its neighbors, so the result does not depend on agent order.
    """

    def __init__(self, network: SocialNetwork, params: MarketParams,
                 population_rng: np.random.Generator):
        if network.n == 0:
            raise ParameterError("empty network")
        self.network = network
        self.params = params
        self.n = network.n
        self.m_agent = population_rng.uniform(params.m_low, params.m_high, size=self.n)
        # heterogeneous initial perceptions keep the population from acting in
        # lockstep; the spread is clipped so the configured mean is preserved
        def draw(center):
            half = min(params.perception_spread, center)
            return population_rng.uniform(center - half, center + half, size=self.n)
        self.i_ad = draw(params.i_ad)
        self.i_pm = draw(params.i_pm)
        self.i_ft = draw(params.i_ft)
        self.adopted = np.full(self.n, NO_BRAND, dtype=np.int8)
        self.marketing = MarketingState()
        self.shares = np.zeros(2)
        self._degrees = np.maximum(network.degrees, 1)

    def neighbor_influence(self) -> np.ndarray:
        """Fraction of each agent's neighbors adopting each brand, shape (n, 2)."""
        inf = np.zeros((self.n, 2))
        neighbor_brand = self.adopted[self.network.indices]
        for b in (0, 1):
            counts = np.add.reduceat((neighbor_brand == b).astype(np.int64),
                                     self.network.indptr[:-1])
            inf[:, b] = counts / self._degrees
        return inf

    def step(self, prices, rng: np.random.Generator,
             mirror: bool = False) -> np.ndarray:
        """Advance one day; returns the two market shares (they sum to 1).

        ``mirror`` flips the interpretation of tie-break draws, which is the
        documented label transposition that makes brand-swapped runs mirror
        exactly.
        """
        p = self.params
        mk = self.marketing
        prices = np.asarray(prices, dtype=float)

        mk.ad_spend, mk.pm_spend, mk.spend_rate = marketing_spend(
            mk.mb, mk.ad, mk.pm, p.k, p.adj_time_ms)
        mk.force = marketing_force(mk.ad, mk.pm, mk.inter, p.w1, p.w2, p.w3)
        new_inter = update_costate(mk.inter, p.rho, p.delta1, p.delta2,
                                   mk.total_force, prices, mk.pm, dt=1.0)
        mk.inter = np.clip(new_inter, -p.inter_cap, p.inter_cap)
        mk.total_force = float(mk.force.sum())

        inf = self.neighbor_influence()
        price_sum = prices.sum() if p.price_sum_mode == "sum" else prices.mean()
        # per-agent, per-brand scores via broadcasting
        sens_p = price_sensitivity(prices[None, :], mk.pm[None, :], price_sum,
                                   p.s, self.m_agent[:, None])
        sus_ad, sens_pm, ft = update_perceptions(
            mk.force[None, :], self.i_ad[:, None], self.i_pm[:, None],
            self.i_ft[:, None])
        scores = motivation(sens_p, prices[None, :], mk.pm[None, :],
                            sus_ad, mk.ad[None, :], sens_pm, ft, inf)

        diff = scores[:, 0] - scores[:, 1]
        choice = np.where(diff > 0, 0, 1).astype(np.int8)
        tied = diff == 0
        if tied.any():
            draws = rng.integers(0, 2, size=int(tied.sum())).astype(np.int8)
            if mirror:
                draws = 1 - draws
            choice[tied] = draws
        self.adopted = choice
        self.shares = np.array([(choice == 0).mean(), (choice == 1).mean()])
        return self.shares.copy()
