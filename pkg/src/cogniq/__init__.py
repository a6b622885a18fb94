"""Negotiation-free channel selection by two Boltzmann Q-learners over two
channels: stochastic simulation, mean-field ODE analysis, Lyapunov-based
convergence checks, and a reproducible experiment harness."""

from .game import (
    Channel,
    JointAction,
    RewardMatrix,
    RewardSample,
    UserId,
    nash_equilibria,
    realize_rewards,
)
from .policy import (
    PolicyParams,
    UserQ,
    boltzmann_channel1,
    channel1_probability,
    channel_probability,
    expected_reward,
    sample_action,
)
from .learner import (
    LearnerConfig,
    QState,
    StepSchedule,
    play_round,
    q_update,
    step_size,
)
from .dynamics import (
    ConvergenceError,
    LyapunovReport,
    MeanField,
    Region,
    StationaryResult,
    classify_region,
    g,
    lyapunov,
    opponent_mix_matrix,
    rescale_rewards_below,
    solve_stationary,
)
from .ode import OdeConfig, OdeTrace, integrate, lyapunov_monotone, write_ode_trace_csv
from .harness import (
    DelayCdf,
    ExperimentConfig,
    FluctuationResult,
    RunResult,
    Trajectory,
    TrajectoryRecord,
    config_from_dict,
    config_from_json,
    delay_cdf,
    fluctuation_study,
    run_many,
    run_once,
    steady_state_stats,
    sweep,
    write_delay_cdf_csv,
    write_trajectory_csv,
)

__version__ = "0.1.0"
