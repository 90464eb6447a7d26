"""Physical and utility model for a load-coupled downlink HetNet.

Everything here is a pure function of immutable inputs: average SINR under
load-scaled interference, effective user rates, the priority-weighted log
utility, the closed-form priority-proportional resource split, and the
on/off load rule for a fixed association.

Powers are watts throughout; dBm exists only at the config boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveRate

# Utility logs are taken on rates expressed in Mbit/s.  This constant fixes
# the numeric scale of all reported utilities; change it only deliberately.
RATE_UNIT_SCALE = 1e6
RATE_UNIT_NAME = "Mbit/s"

TIERS = ("macro", "pico", "femto")


@dataclass(frozen=True)
class Scenario:
    """Immutable network snapshot.

    gains[i, j] is the linear power gain from BS i to user j (> 0),
    max_power[i] the per-resource-block power cap in watts, priorities[j]
    the positive utility weight of user j, noise the per-block AWGN power
    in watts, rb_count/rb_bandwidth the block grid (count, Hz).
    """

    gains: np.ndarray
    max_power: np.ndarray
    priorities: np.ndarray
    noise: float
    rb_count: int
    rb_bandwidth: float
    tiers: tuple[str, ...]

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=float)
        max_power = np.asarray(self.max_power, dtype=float)
        priorities = np.asarray(self.priorities, dtype=float)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "max_power", max_power)
        object.__setattr__(self, "priorities", priorities)
        if gains.ndim != 2:
            raise ValueError("gains must be an (I, J) matrix")
        if not (np.isfinite(gains).all() and (gains > 0).all()):
            raise ValueError("all gains must be finite and strictly positive")
        if not (max_power > 0).all():
            raise ValueError("max powers must be positive")
        if not (priorities > 0).all():
            raise ValueError("priorities must be positive")
        if not self.noise > 0:
            raise ValueError("noise power must be positive")
        if self.rb_count < 1 or self.rb_bandwidth <= 0:
            raise ValueError("resource-block grid must be positive")
        if len(self.tiers) != gains.shape[0]:
            raise ValueError("one tier label per BS required")
        for t in self.tiers:
            if t not in TIERS:
                raise ValueError(f"unknown tier {t!r}")

    @property
    def num_bs(self) -> int:
        return self.gains.shape[0]

    @property
    def num_users(self) -> int:
        return self.gains.shape[1]

    @property
    def bandwidth_total(self) -> float:
        """K*B in Hz, the factor multiplying spectral efficiency in rates."""
        return self.rb_count * self.rb_bandwidth

    def equals(self, other: "Scenario") -> bool:
        return (
            np.array_equal(self.gains, other.gains)
            and np.array_equal(self.max_power, other.max_power)
            and np.array_equal(self.priorities, other.priorities)
            and self.noise == other.noise
            and self.rb_count == other.rb_count
            and self.rb_bandwidth == other.rb_bandwidth
            and self.tiers == other.tiers
        )


@dataclass(frozen=True)
class Association:
    """One serving BS per user, stored as an index vector.

    The index form makes the one-BS-per-user constraint structural; the
    boolean matrix view is available for code written against x[i][j].
    """

    serving: np.ndarray  # (J,) int, serving[j] = index of the serving BS

    def __post_init__(self):
        serving = np.asarray(self.serving, dtype=int)
        object.__setattr__(self, "serving", serving)
        if serving.ndim != 1:
            raise ValueError("serving must be a vector with one entry per user")
        if (serving < 0).any():
            raise ValueError("serving indices must be nonnegative")

    @property
    def num_users(self) -> int:
        return self.serving.shape[0]

    def matrix(self, num_bs: int) -> np.ndarray:
        """Boolean x with x[i, j] true iff BS i serves user j."""
        if (self.serving >= num_bs).any():
            raise ValueError("serving index out of range")
        x = np.zeros((num_bs, self.num_users), dtype=bool)
        x[self.serving, np.arange(self.num_users)] = True
        return x

    def serving_sets(self, num_bs: int) -> list[np.ndarray]:
        """User index arrays J_i, one per BS (possibly empty)."""
        order = np.argsort(self.serving, kind="stable")
        return [order[self.serving[order] == i] for i in range(num_bs)]


@dataclass
class NetworkState:
    """Per-BS loads and powers plus the per-user resource fractions.

    p_user is populated only after per-cell unequal power allocation; until
    then every user of BS i transmits at p[i].
    """

    load: np.ndarray  # (I,) in [0, 1]
    power: np.ndarray  # (I,) watts
    fractions: np.ndarray  # (I, J) in [0, 1]
    p_user: np.ndarray | None = None  # (I, J) watts, optional

    def copy(self) -> "NetworkState":
        return NetworkState(
            load=self.load.copy(),
            power=self.power.copy(),
            fractions=self.fractions.copy(),
            p_user=None if self.p_user is None else self.p_user.copy(),
        )


@dataclass(frozen=True)
class UtilityValue:
    """Priority-weighted sum of log2 user rates, rates in Mbit/s."""

    value: float
    rate_unit: str = RATE_UNIT_NAME


def sinr_matrix(scenario: Scenario, load: np.ndarray, power: np.ndarray) -> np.ndarray:
    """Average SINR of every (BS, user) link under load-scaled interference.

    eta[i, j] = p_i g_ij / (sum_{k != i} d_k p_k g_kj + noise).  The
    denominator is at least the noise power, so the result is always finite.
    """
    load = np.asarray(load, dtype=float)
    power = np.asarray(power, dtype=float)
    weighted = (load * power)[:, None] * scenario.gains  # (I, J)
    total = weighted.sum(axis=0, keepdims=True) + scenario.noise
    denom = total - weighted  # excludes the serving BS row-wise
    # An interferer's own load does not scale its serving link: use raw p_i.
    return power[:, None] * scenario.gains / denom


def sinr(scenario: Scenario, state: NetworkState, i: int, j: int) -> float:
    """Scalar view of sinr_matrix for one link."""
    return float(sinr_matrix(scenario, state.load, state.power)[i, j])


def user_rates(
    scenario: Scenario, state: NetworkState, association: Association
) -> np.ndarray:
    """Effective rate of every user in bit/s.

    r_j = K*B * sum_i y_ij log2(1 + eta_ij); only the serving term of the
    sum is nonzero for a consistent state.  With p_user present the SINR of
    the serving link uses the per-user power against unchanged average
    interference from other cells.
    """
    eta = sinr_matrix(scenario, state.load, state.power)
    if state.p_user is not None:
        base = np.where(state.power[:, None] > 0, state.power[:, None], 1.0)
        eta = eta * (state.p_user / base)
    per_link = scenario.bandwidth_total * state.fractions * np.log2(1.0 + eta)
    return per_link.sum(axis=0)


def user_rate(
    scenario: Scenario, state: NetworkState, association: Association, j: int
) -> float:
    return float(user_rates(scenario, state, association)[j])


def network_utility(
    scenario: Scenario, state: NetworkState, association: Association
) -> UtilityValue:
    """Evaluate sum_j w_j log2(r_j / 1 Mbit/s) for the given state.

    Raises NonPositiveRate when a served user has zero rate, which signals
    an infeasible state rather than a finite utility.
    """
    rates = user_rates(scenario, state, association)
    if (rates <= 0).any():
        bad = int(np.argmax(rates <= 0))
        raise NonPositiveRate(f"user {bad} has nonpositive rate; utility is -inf")
    value = float(np.sum(scenario.priorities * np.log2(rates / RATE_UNIT_SCALE)))
    return UtilityValue(value=value)


def opt_resource_allocation(
    association: Association, loads: np.ndarray, priorities: np.ndarray, num_bs: int
) -> np.ndarray:
    """Priority-proportional optimal split of each BS's load among its users.

    y[i, j] = w_j d_i / (sum of priorities served by i) on serving links,
    zero elsewhere; a zero-load BS allocates nothing by convention.
    """
    loads = np.asarray(loads, dtype=float)
    priorities = np.asarray(priorities, dtype=float)
    y = np.zeros((num_bs, association.num_users))
    serving = association.serving
    mass = np.bincount(serving, weights=priorities, minlength=num_bs)
    cols = np.arange(association.num_users)
    denom = mass[serving]
    y[serving, cols] = priorities * loads[serving] / denom
    return y


def derive_load_from_association(association: Association, num_bs: int) -> np.ndarray:
    """Full load where a BS serves anyone, zero load otherwise."""
    counts = np.bincount(association.serving, minlength=num_bs)
    return (counts > 0).astype(float)


def weighted_utility(
    scenario: Scenario,
    association: Association,
    load: np.ndarray,
    power: np.ndarray,
) -> float:
    """Association-form utility with the proportional split folded in.

    Equals network_utility evaluated at the closed-form fractions:
    sum_ij w_j x_ij log2(KB' w_j d_i log2(1+eta_ij) / N_i) with N_i the
    served priority mass and KB' = K*B scaled to Mbit/s.  Empty BSs follow
    the 0*log(0/0) = 0 convention; a served user on a zero-load or
    zero-power BS makes the value -inf.
    """
    load = np.asarray(load, dtype=float)
    power = np.asarray(power, dtype=float)
    serving = association.serving
    w = scenario.priorities
    eta = sinr_matrix(scenario, load, power)
    kb = scenario.bandwidth_total / RATE_UNIT_SCALE
    mass = np.bincount(serving, weights=w, minlength=scenario.num_bs)
    cols = np.arange(association.num_users)
    inner = (
        kb
        * w
        * load[serving]
        * np.log2(1.0 + eta[serving, cols])
        / mass[serving]
    )
    if (inner <= 0).any():
        return float("-inf")
    return float(np.sum(w * np.log2(inner)))


def state_from_association(
    scenario: Scenario,
    association: Association,
    power: np.ndarray | None = None,
) -> NetworkState:
    """Assemble the canonical state: on/off loads and proportional fractions."""
    load = derive_load_from_association(association, scenario.num_bs)
    if power is None:
        power = scenario.max_power.copy()
    power = np.where(load > 0, power, 0.0)
    fractions = opt_resource_allocation(
        association, load, scenario.priorities, scenario.num_bs
    )
    return NetworkState(load=load, power=np.asarray(power, dtype=float), fractions=fractions)


def utility_upper_bound(scenario: Scenario) -> float:
    """Closed-form cap on any achievable utility for this snapshot.

    Sum over links of w_j log2(KB' w_j / min_l w_l * log2(1 + P_i g_ij /
    noise)), with negative link terms clipped at zero so the expression
    stays a valid bound when some links are too weak to contribute.
    """
    w = scenario.priorities
    kb = scenario.bandwidth_total / RATE_UNIT_SCALE
    snr = scenario.max_power[:, None] * scenario.gains / scenario.noise
    inner = kb * w[None, :] / w.min() * np.log2(1.0 + snr)
    terms = w[None, :] * np.log2(inner)
    return float(np.clip(terms, 0.0, None).sum())
