"""Priority-weighted utility optimization for load-coupled HetNets.

Library layout: `model` holds the physical and utility primitives,
`scenario` generation and file I/O, `association` the dual association
solver with its baselines and oracle, `loadpower` the load/power solver,
`icupa` the per-cell post-optimization, `orchestrate` the outer loop,
pipelines and campaign machinery, `reports` serialization, and `cli` the
command-line front end.
"""

from .model import (
    Association,
    NetworkState,
    Scenario,
    UtilityValue,
    derive_load_from_association,
    network_utility,
    opt_resource_allocation,
    sinr,
    sinr_matrix,
    user_rate,
    user_rates,
    utility_upper_bound,
    weighted_utility,
)
from .scenario import (
    Placement,
    ScenarioConfig,
    dbm_to_watt,
    generate_scenario,
    load_scenario,
    pathloss_db,
    save_scenario,
)
from .association import (
    DgpOptions,
    compute_coefficients,
    dgp_associate,
    dual_objective,
    exhaustive_associate,
    max_sinr_associate,
)
from .loadpower import (
    LdpcOptions,
    binary_load_grid_oracle,
    f_inverse,
    f_of,
    ldpc_solve,
    pga_solve,
)
from .icupa import (
    CellProblem,
    IcupaOptions,
    fbar_of,
    icupa_all,
    icupa_solve_cell,
    solve_y_bisection,
)
from .orchestrate import (
    ALGORITHMS,
    CampaignSummary,
    IulpOptions,
    RunReport,
    empirical_cdf,
    iulp,
    monte_carlo,
    per_tier_stats,
    rate_gain,
    run_algorithm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
