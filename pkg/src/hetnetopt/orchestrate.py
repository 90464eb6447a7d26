"""Algorithm pipelines, the alternating outer loop, and Monte-Carlo campaigns.

The outer loop alternates the association solve (at the previous loads and
powers) with the load/power solve (at the new association), warm-starting
each from the incumbent so the objective trace is monotone by construction.
Campaigns rerun the pipelines on per-seed snapshots shared across
algorithms and aggregate utilities, pooled rate samples, CDFs, quantile
gains and per-tier statistics.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .association import (
    DgpOptions,
    compute_coefficients,
    dgp_associate,
    max_sinr_associate,
)
from .errors import EmptySamples, DegenerateQuantile, InvariantViolation, UnknownAlgorithm
from .icupa import IcupaOptions, icupa_all
from .loadpower import LdpcOptions, ldpc_solve
from .model import (
    Association,
    NetworkState,
    Scenario,
    network_utility,
    state_from_association,
    user_rates,
    utility_upper_bound,
    weighted_utility,
)
from .scenario import ScenarioConfig, generate_scenario

ALGORITHMS = ("msinr-mp", "dgp-mp", "iulp", "msinr-mp+icupa", "iulp+icupa")

# Outer-loop objective values may dip by at most this much (pure roundoff).
MONOTONE_SLACK = 1e-9


@dataclass
class IulpOptions:
    xi: float = 1e-3  # relative objective-change tolerance
    t_max: int = 20
    dgp: DgpOptions = field(default_factory=DgpOptions)
    ldpc: LdpcOptions = field(default_factory=lambda: LdpcOptions(dual_tol=1e-4, max_iter=4000))
    icupa: IcupaOptions = field(default_factory=IcupaOptions)

    def __post_init__(self):
        if self.xi <= 0 or self.t_max < 1:
            raise ValueError("xi must be positive and t_max at least 1")


@dataclass
class RunReport:
    algorithm: str
    utility: float
    utility_trace: list  # weighted objective per outer iteration, V(0) first
    rates: np.ndarray  # (J,) bit/s
    serving: np.ndarray  # (J,)
    load: np.ndarray
    power: np.ndarray
    p_user: np.ndarray | None
    tier_user_counts: dict
    tier_powers: dict
    outer_iterations: int
    stopped_by: str  # "xi", "tmax", or "direct" for one-shot pipelines
    iteration_counters: dict
    flags: list
    utility_bound: float
    wall_clock: float  # seconds; excluded from serialized reports


def _tier_stats(scenario: Scenario, association: Association, state: NetworkState):
    counts: dict = {}
    powers: dict = {}
    served = np.bincount(association.serving, minlength=scenario.num_bs)
    for tier in ("macro", "pico", "femto"):
        idx = [i for i, t in enumerate(scenario.tiers) if t == tier]
        if not idx:
            continue
        counts[tier] = int(served[idx].sum())
        powers[tier] = float(np.mean(state.power[idx]))
    return counts, powers


def _finish_report(
    scenario, association, state, algo, trace, outer, stopped_by, counters, flags, t0
):
    rates = user_rates(scenario, state, association)
    utility = network_utility(scenario, state, association).value
    counts, powers = _tier_stats(scenario, association, state)
    bound = utility_upper_bound(scenario)
    if utility > bound + 1e-6:
        raise InvariantViolation(f"utility {utility} exceeds closed-form bound {bound}")
    return RunReport(
        algorithm=algo,
        utility=utility,
        utility_trace=list(trace),
        rates=rates,
        serving=association.serving.copy(),
        load=state.load.copy(),
        power=state.power.copy(),
        p_user=None if state.p_user is None else state.p_user.copy(),
        tier_user_counts=counts,
        tier_powers=powers,
        outer_iterations=outer,
        stopped_by=stopped_by,
        iteration_counters=counters,
        flags=list(flags),
        utility_bound=bound,
        wall_clock=time.perf_counter() - t0,
    )


def iulp(scenario: Scenario, options: IulpOptions | None = None) -> RunReport:
    """Alternate association and load/power solves until the objective settles.

    Warm start: max-SINR association with every BS fully loaded at maximum
    power, which makes the first association solve identical to the
    fixed-max-power association pipeline and the trace monotone end to end.
    """
    opts = options or IulpOptions()
    t0 = time.perf_counter()
    ones = np.ones(scenario.num_bs)
    assoc = max_sinr_associate(scenario, ones, scenario.max_power)
    d_prev = ones.copy()
    p_prev = scenario.max_power.copy()
    v_prev = weighted_utility(scenario, assoc, d_prev, p_prev)
    trace = [v_prev]
    counters = {"dgp_iterations": [], "ldpc_dual_iterations": [], "ldpc_polish_iterations": []}
    flags: list = []
    stopped_by = "tmax"
    outer = opts.t_max
    state = state_from_association(scenario, assoc)
    for t in range(1, opts.t_max + 1):
        coeff = compute_coefficients(scenario, d_prev, p_prev)
        dgp = dgp_associate(coeff, scenario.priorities, opts.dgp, incumbent=assoc.serving)
        assoc = dgp.association
        counters["dgp_iterations"].append(dgp.duals.iterations)
        if not dgp.converged:
            flags.append(f"dgp-flagged@{t}")

        ldpc = ldpc_solve(scenario, assoc, opts.ldpc, warm_power=p_prev)
        state = ldpc.state
        counters["ldpc_dual_iterations"].append(ldpc.dual_iterations)
        counters["ldpc_polish_iterations"].append(ldpc.polish_iterations)
        if "non-convergence" in ldpc.flags:
            flags.append(f"ldpc-flagged@{t}")

        v_now = weighted_utility(scenario, assoc, state.load, state.power)
        if v_now < v_prev - MONOTONE_SLACK:
            raise InvariantViolation(
                f"objective decreased at outer iteration {t}: {v_prev} -> {v_now}"
            )
        trace.append(v_now)
        denom = max(abs(v_prev), 1e-12)
        d_prev, p_prev = state.load.copy(), state.power.copy()
        if abs(v_now - v_prev) / denom < opts.xi:
            stopped_by = "xi"
            outer = t
            v_prev = v_now
            break
        v_prev = v_now
    return _finish_report(
        scenario, assoc, state, "iulp", trace, outer, stopped_by, counters, flags, t0
    )


def run_algorithm(
    scenario: Scenario, algo_id: str, options: IulpOptions | None = None
) -> RunReport:
    """Execute one named pipeline on one snapshot."""
    opts = options or IulpOptions()
    if algo_id not in ALGORITHMS:
        raise UnknownAlgorithm(f"{algo_id!r}; expected one of {ALGORITHMS}")
    t0 = time.perf_counter()
    ones = np.ones(scenario.num_bs)

    if algo_id in ("msinr-mp", "msinr-mp+icupa"):
        assoc = max_sinr_associate(scenario, ones, scenario.max_power)
        state = state_from_association(scenario, assoc)
        counters: dict = {}
        flags: list = []
    elif algo_id == "dgp-mp":
        coeff = compute_coefficients(scenario, ones, scenario.max_power)
        dgp = dgp_associate(coeff, scenario.priorities, opts.dgp)
        assoc = dgp.association
        state = state_from_association(scenario, assoc)
        counters = {"dgp_iterations": [dgp.duals.iterations], "dgp_gap": dgp.gap}
        flags = [] if dgp.converged else ["dgp-flagged"]
    elif algo_id in ("iulp", "iulp+icupa"):
        base = iulp(scenario, opts)
        if algo_id == "iulp":
            return base
        assoc = Association(serving=base.serving)
        state = state_from_association(scenario, assoc, base.power)
        counters = dict(base.iteration_counters)
        flags = list(base.flags)
        new_state, cell_solutions = icupa_all(scenario, assoc, state, opts.icupa)
        counters["icupa_iterations"] = [sol.iterations for sol in cell_solutions]
        if any(not sol.converged for sol in cell_solutions):
            flags.append("icupa-flagged")
        return _finish_report(
            scenario,
            assoc,
            new_state,
            algo_id,
            base.utility_trace,
            base.outer_iterations,
            base.stopped_by,
            counters,
            flags,
            t0,
        )
    else:  # pragma: no cover
        raise UnknownAlgorithm(algo_id)

    if algo_id.endswith("+icupa"):
        new_state, cell_solutions = icupa_all(scenario, assoc, state, opts.icupa)
        counters["icupa_iterations"] = [sol.iterations for sol in cell_solutions]
        if any(not sol.converged for sol in cell_solutions):
            flags.append("icupa-flagged")
        state = new_state
    return _finish_report(
        scenario, assoc, state, algo_id, [], 1, "direct", counters, flags, t0
    )


# --- metrics -------------------------------------------------------------------

def empirical_cdf(samples, grid) -> np.ndarray:
    """Right-continuous empirical distribution evaluated on a grid."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise EmptySamples("empirical CDF of an empty sample set")
    sorted_samples = np.sort(samples)
    return np.searchsorted(sorted_samples, np.asarray(grid, dtype=float), side="right") / samples.size


def quantile(samples, p: float) -> float:
    """Linear-interpolation empirical quantile."""
    return float(np.quantile(np.asarray(samples, dtype=float), p, method="linear"))


def rate_gain(samples_x, samples_base, p: float) -> float:
    """Ratio of the p-quantiles of two rate sample sets."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be inside (0, 1)")
    base = quantile(samples_base, p)
    if base <= 0:
        raise DegenerateQuantile(f"baseline quantile at p={p} is nonpositive")
    return quantile(samples_x, p) / base


def per_tier_stats(reports: list) -> dict:
    """Mean served-user count and mean transmit power per tier."""
    if not reports:
        raise EmptySamples("no reports to aggregate")
    tiers = sorted({t for r in reports for t in r.tier_user_counts})
    out = {}
    for tier in tiers:
        out[tier] = {
            "mean_users": float(np.mean([r.tier_user_counts.get(tier, 0) for r in reports])),
            "mean_power_w": float(np.mean([r.tier_powers.get(tier, 0.0) for r in reports])),
        }
    return out


@dataclass
class CampaignSummary:
    config: ScenarioConfig
    algorithms: list
    n_realizations: int
    base_seed: int
    utilities: dict  # algo -> (n,) array of per-seed utilities
    rates: dict  # algo -> pooled (n*J,) rate samples, bit/s
    tier_stats: dict  # algo -> {tier: {mean_users, mean_power_w}}
    outer_iterations: dict  # algo -> list (iulp-family only)
    stopped_by: dict  # algo -> list
    cdf_grid: np.ndarray
    cdfs: dict  # algo -> fractions on cdf_grid
    gain_levels: np.ndarray
    rate_gains: dict  # algo -> gains vs the max-SINR baseline
    mean_utility: dict
    std_utility: dict
    flags: dict

    def utility_ordering_ok(self, lo: str, hi: str, slack: float = 1e-9) -> bool:
        """True when hi's per-seed utility dominates lo's everywhere."""
        return bool(np.all(self.utilities[hi] >= self.utilities[lo] - slack))


def monte_carlo(
    config: ScenarioConfig,
    algos: list,
    n_realizations: int,
    base_seed: int,
    options: IulpOptions | None = None,
    gain_levels: np.ndarray | None = None,
) -> CampaignSummary:
    """Paired Monte-Carlo campaign: same snapshot per seed for every algorithm."""
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    for algo in algos:
        if algo not in ALGORITHMS:
            raise UnknownAlgorithm(algo)
    opts = options or IulpOptions()
    utilities = {a: [] for a in algos}
    rates = {a: [] for a in algos}
    reports = {a: [] for a in algos}
    outer = {a: [] for a in algos}
    stopped = {a: [] for a in algos}
    flags = {a: [] for a in algos}
    for k in range(n_realizations):
        cfg_k = replace(config, rng_seed=base_seed + k)
        scenario, _ = generate_scenario(cfg_k)
        for algo in algos:
            rep = run_algorithm(scenario, algo, opts)
            utilities[algo].append(rep.utility)
            rates[algo].append(rep.rates)
            reports[algo].append(rep)
            outer[algo].append(rep.outer_iterations)
            stopped[algo].append(rep.stopped_by)
            if rep.flags:
                flags[algo].append({"seed": base_seed + k, "flags": rep.flags})

    pooled = {a: np.concatenate(rates[a]) for a in algos}
    all_rates = np.concatenate(list(pooled.values()))
    grid = np.quantile(all_rates, np.linspace(0.0, 1.0, 201))
    cdfs = {a: empirical_cdf(pooled[a], grid) for a in algos}
    if gain_levels is None:
        gain_levels = np.round(np.arange(0.05, 0.96, 0.05), 2)
    gains = {}
    if "msinr-mp" in algos:
        for a in algos:
            if a == "msinr-mp":
                continue
            gains[a] = np.array(
                [rate_gain(pooled[a], pooled["msinr-mp"], p) for p in gain_levels]
            )
    return CampaignSummary(
        config=config,
        algorithms=list(algos),
        n_realizations=n_realizations,
        base_seed=base_seed,
        utilities={a: np.asarray(utilities[a]) for a in algos},
        rates=pooled,
        tier_stats={a: per_tier_stats(reports[a]) for a in algos},
        outer_iterations=outer,
        stopped_by=stopped,
        cdf_grid=grid,
        cdfs=cdfs,
        gain_levels=np.asarray(gain_levels),
        rate_gains=gains,
        mean_utility={a: float(np.mean(utilities[a])) for a in algos},
        std_utility={a: float(np.std(utilities[a])) for a in algos},
        flags=flags,
    )
