import numpy as np
import pytest

from iescreen import TrialScenario

RR_POS_FIG1 = 13 / 15  # 650/750


@pytest.fixture
def fig1_scenario() -> TrialScenario:
    return TrialScenario(total_n=100_000, control_fraction=0.5, p0=0.02, rr=0.9,
                         p_m=0.05, rr_neg=1.0, rr_pos=RR_POS_FIG1)


def random_feasible_scenarios(count: int, seed: int = 1234) -> list[TrialScenario]:
    """Seeded stream of feasible scenarios with well-separated subgroup effects."""
    from iescreen import is_feasible

    rng = np.random.default_rng(seed)
    out: list[TrialScenario] = []
    while len(out) < count:
        s = TrialScenario(
            total_n=float(rng.integers(5_000, 500_000)),
            control_fraction=float(rng.uniform(0.3, 0.7)),
            p0=float(rng.uniform(0.005, 0.2)),
            rr=float(rng.uniform(0.5, 1.4)),
            p_m=float(rng.uniform(0.02, 0.9)),
            rr_neg=float(rng.uniform(0.7, 1.3)),
            rr_pos=float(rng.uniform(0.3, 1.5)),
        )
        if abs(s.rr_neg - s.rr_pos) < 0.05 or abs(s.rr - 1.0) < 0.02:
            continue
        if is_feasible(s):
            out.append(s)
    return out
