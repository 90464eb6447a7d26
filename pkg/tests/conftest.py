import hypothesis
import numpy as np
import pytest

from hetnetopt.model import Association, Scenario
from hetnetopt.scenario import ScenarioConfig, generate_scenario

hypothesis.settings.register_profile("ci", max_examples=60, deadline=None)
hypothesis.settings.load_profile("ci")


def hotspot_scenario(seed: int, num_bs: int = 3, num_users: int = 6) -> Scenario:
    """Clustered drop where every BS anchors users; the association dual is tight."""
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


def small_pair_scenario(seed: int) -> Scenario:
    """Two pico BSs, four users; the load/power test bed."""
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


def spread_association(scenario: Scenario) -> Association:
    """Best-gain serving adjusted so every BS serves at least one user."""
    serving = np.argmax(scenario.gains, axis=0)
    for i in range(scenario.num_bs):
        if not (serving == i).any():
            rel = scenario.gains[i] / scenario.gains[serving, np.arange(scenario.num_users)]
            serving[int(np.argmax(rel))] = i
    return Association(serving=serving)


def toy_scenario(gains, power, priorities, noise=1.0, k=1, b=1.0, tiers=None):
    gains = np.asarray(gains, dtype=float)
    if tiers is None:
        tiers = ("macro",) * gains.shape[0]
    return Scenario(
        gains=gains,
        max_power=np.asarray(power, dtype=float),
        priorities=np.asarray(priorities, dtype=float),
        noise=noise,
        rb_count=k,
        rb_bandwidth=b,
        tiers=tiers,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
