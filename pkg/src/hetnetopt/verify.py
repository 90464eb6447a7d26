"""Built-in oracle suites behind the `verify` CLI command.

Each check pits a solver against an independent reference (enumeration,
grid search, a second implementation) and prints one ok/FAIL line.  The
full acceptance evidence lives in the test suite; this command is the
operational smoke check.
"""

from __future__ import annotations

import dataclasses
import heapq

import numpy as np

from .association import compute_coefficients, dgp_associate, exhaustive_associate
from .icupa import CellProblem, cell_utility, equal_power_cell_utility, icupa_solve_cell
from .loadpower import binary_load_grid_oracle, ldpc_solve, pga_solve, LdpcOptions
from .model import Association, opt_resource_allocation
from .orchestrate import empirical_cdf, iulp, run_algorithm
from .scenario import ScenarioConfig, generate_scenario


def greedy_simplex_argmax(priorities: np.ndarray, steps: int) -> np.ndarray:
    """Exact argmax of sum_j w_j log2(y_j) over the discrete simplex.

    Marginal (greedy) allocation of `steps` quanta is optimal for separable
    concave objectives, so this enumerates the same optimum a full grid
    search over the step-1/steps simplex would find.
    """
    n = priorities.size
    counts = np.ones(n, dtype=int)  # log2(0) is -inf: every user needs one
    # max-heap on the marginal gain w*(log2(c+1)-log2(c))
    heap = [(-w * np.log2(2.0), j) for j, w in enumerate(priorities)]
    heapq.heapify(heap)
    for _ in range(steps - n):
        gain, j = heapq.heappop(heap)
        counts[j] += 1
        nxt = priorities[j] * (np.log2(counts[j] + 1) - np.log2(counts[j]))
        heapq.heappush(heap, (-nxt, j))
    return counts / steps


def hotspot_scenario(seed: int, num_bs: int = 3, num_users: int = 6):
    cfg = ScenarioConfig(
        macro_count=0,
        pico_count=num_bs,
        femto_count=0,
        user_count=num_users,
        high_priority_count=2,
        cell_radius_m=400.0,
        pico_offset_m=200.0,
        rng_seed=seed,
        user_placement="hotspot",
        hotspot_radius_m=40.0,
        shadow_std_db=6.0,
        power_split_across_blocks=False,
    )
    return generate_scenario(cfg)[0]


def small_pair_scenario(seed: int):
    cfg = ScenarioConfig(
        macro_count=0,
        pico_count=2,
        femto_count=0,
        user_count=4,
        high_priority_count=1,
        cell_radius_m=300.0,
        pico_offset_m=150.0,
        rng_seed=seed,
        power_split_across_blocks=False,
    )
    return generate_scenario(cfg)[0]


def spread_association(scenario) -> Association:
    """Best-gain association adjusted so every BS serves someone."""
    serving = np.argmax(scenario.gains, axis=0)
    for i in range(scenario.num_bs):
        if not (serving == i).any():
            rel = scenario.gains[i] / scenario.gains[serving, np.arange(scenario.num_users)]
            serving[int(np.argmax(rel))] = i
    return Association(serving=serving)


def check_allocation_oracle(n_draws: int) -> tuple[bool, str]:
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(n_draws):
        w = rng.uniform(0.5, 3.0, size=4)
        assoc = Association(serving=np.zeros(4, dtype=int))
        y = opt_resource_allocation(assoc, np.ones(1), w, 1)[0]
        y_grid = greedy_simplex_argmax(w, 1000)
        worst = max(worst, float(np.abs(y - y_grid).max()))
    return worst <= 2e-3, f"worst component error {worst:.2e}"


def check_dgp(n_instances: int) -> tuple[bool, str]:
    worst_diff, worst_gap = 0.0, 0.0
    for seed in range(n_instances):
        s = hotspot_scenario(seed)
        ones = np.ones(s.num_bs)
        coeff = compute_coefficients(s, ones, s.max_power)
        res = dgp_associate(coeff, s.priorities)
        _, best = exhaustive_associate(s, ones, s.max_power)
        worst_diff = max(worst_diff, abs(best - res.utility))
        worst_gap = max(worst_gap, res.gap)
    ok = worst_diff <= 1e-4 and worst_gap <= 1e-5
    return ok, f"vs exhaustive {worst_diff:.2e}, gap {worst_gap:.2e}"


def check_ldpc(n_instances: int) -> tuple[bool, str]:
    worst_gap, worst_kkt, worst_pga = -np.inf, 0.0, 0.0
    for seed in range(n_instances):
        s = small_pair_scenario(seed)
        assoc = spread_association(s)
        res = ldpc_solve(s, assoc)
        res_dual = ldpc_solve(s, assoc, LdpcOptions(polish=False))
        _, u_pga, _ = pga_solve(s, assoc)
        _, _, u_grid = binary_load_grid_oracle(s, assoc, 0.1, 60)
        worst_gap = max(worst_gap, u_grid - res.utility)
        worst_kkt = max(worst_kkt, res.kkt_residuals["overall"])
        worst_pga = max(worst_pga, abs(res_dual.utility - u_pga))
    ok = worst_gap <= 1e-2 and worst_kkt <= 1e-6 and worst_pga <= 1e-3
    return ok, f"grid {worst_gap:.2e}, kkt {worst_kkt:.2e}, dual-vs-pga {worst_pga:.2e}"


def check_icupa(n_cells: int) -> tuple[bool, str]:
    rng = np.random.default_rng(5)
    worst_kkt = 0.0
    improved = 0
    for _ in range(n_cells):
        n = int(rng.integers(2, 6))
        cell = CellProblem(
            bs_index=0,
            users=np.arange(n),
            priorities=rng.choice([1.0, 2.0], size=n),
            gains=10 ** rng.uniform(-14, -11, size=n),
            interference=10 ** rng.uniform(-14, -12, size=n),
            budget=float(10 ** rng.uniform(-0.5, 1.0)),
        )
        sol = icupa_solve_cell(cell)
        worst_kkt = max(worst_kkt, sol.kkt_residuals["overall"])
        if cell_utility(cell, sol.fractions, sol.shares) > equal_power_cell_utility(cell) + 1e-9:
            improved += 1
    ok = worst_kkt <= 1e-6 and improved >= int(0.9 * n_cells)
    return ok, f"kkt {worst_kkt:.2e}, improved {improved}/{n_cells}"


def check_iulp(n_seeds: int) -> tuple[bool, str]:
    violations = 0
    capped = 0
    for seed in range(n_seeds):
        cfg = ScenarioConfig(rng_seed=seed)
        s, _ = generate_scenario(cfg)
        rep = iulp(s)
        trace = np.asarray(rep.utility_trace)
        if (np.diff(trace) < -1e-9).any():
            violations += 1
        if rep.stopped_by != "xi":
            capped += 1
    ok = violations == 0 and capped == 0
    return ok, f"monotone violations {violations}, hit t_max {capped}"


def check_cdf() -> tuple[bool, str]:
    rng = np.random.default_rng(3)
    samples = rng.exponential(1.0, size=500)
    grid = np.sort(rng.uniform(0, 4, size=50))
    ours = empirical_cdf(samples, grid)
    # independent implementation: explicit counting
    ref = np.array([(samples <= g).mean() for g in grid])
    ok = np.array_equal(ours, ref)
    return ok, "matches counting implementation" if ok else "mismatch"


def run_all(fast: bool = False) -> bool:
    scale = 0.3 if fast else 1.0
    checks = [
        ("theorem1-allocation", lambda: check_allocation_oracle(max(5, int(50 * scale)))),
        ("dgp-vs-exhaustive", lambda: check_dgp(max(4, int(20 * scale)))),
        ("ldpc-oracles", lambda: check_ldpc(max(3, int(10 * scale)))),
        ("icupa-cells", lambda: check_icupa(max(10, int(50 * scale)))),
        ("iulp-monotone", lambda: check_iulp(max(3, int(10 * scale)))),
        ("cdf-dual-implementation", check_cdf),
    ]
    all_ok = True
    for name, fn in checks:
        ok, detail = fn()
        print(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
        all_ok &= ok
    return all_ok
