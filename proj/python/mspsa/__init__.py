"""Online learning and optimization of Markov jump affine models.

The heavy lifting lives in the compiled extension; this package re-exports
its surface: model types, the known-model oracle, the episode runner, and
the experiment harness.
"""

from ._core import (  # noqa: F401
    AffineState,
    ConfigError,
    FeasibleBox,
    JumpAffineModel,
    MarkovChain,
    Objective,
    SingularMixtureError,
    __version__,
    brute_force_optimum,
    emit_config_json,
    expected_gradient_term,
    optimal_input_qr,
    optimal_input_rm,
    project,
    run_episode,
    run_experiment_file,
    run_experiment_json,
    stage_cost_qr,
    stage_cost_rm,
    stage_regret_qr,
    stage_regret_rm,
    validate_config_file,
    validate_model,
)
