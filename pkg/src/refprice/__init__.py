"""Thompson pricing under reference effects: demand models, conjugate
posterior, episode planner, pricing strategies and a Monte-Carlo regret
harness."""

__version__ = "0.1.0"

from ._kernels import USING_NUMBA
from .harness import (ExperimentConfig, LaunchEvent, RegretTrace,
                      evaluate_regret, optimal_value, regret_bound,
                      run_async, run_episode, substream)
from .model import (ContractViolation, ModelSpec, Observation, Params,
                    Variant, advance_state, empty_state, episode_value,
                    expected_demand, featurize, pack_params, sample_demand,
                    unpack_params)
from .planner import (QuadraticProgram, SolveOptions, SolveReport,
                      build_quadratic, grid_oracle, is_nsd, plan,
                      plan_report, solve_box_qp)
from .posterior import (GaussianBelief, belief_from_snapshot,
                        belief_to_snapshot, posterior_mean, posterior_sample,
                        posterior_update)
from .strategies import (StrategyConfig, make_strategy, myopic_price,
                         sample_nsd_plan)

__all__ = [
    "USING_NUMBA", "ExperimentConfig", "LaunchEvent", "RegretTrace",
    "evaluate_regret", "optimal_value", "regret_bound", "run_async",
    "run_episode", "substream", "ContractViolation", "ModelSpec",
    "Observation", "Params", "Variant", "advance_state", "empty_state",
    "episode_value", "expected_demand", "featurize", "pack_params",
    "sample_demand", "unpack_params", "QuadraticProgram", "SolveOptions",
    "SolveReport", "build_quadratic", "grid_oracle", "is_nsd", "plan",
    "plan_report", "solve_box_qp", "GaussianBelief", "belief_from_snapshot",
    "belief_to_snapshot", "posterior_mean", "posterior_sample",
    "posterior_update", "StrategyConfig", "make_strategy", "myopic_price",
    "sample_nsd_plan",
]
