"""The price of staying adaptive.

A vanishing step size freezes the learners into their equilibrium, which is
ideal in a stationary world but leaves them unable to react if conditions
change. Flooring the step size (alpha >= 0.4) and the exploration
probability (>= 0.2) keeps them adaptive, at the cost of persistent
steady-state fluctuation. This script contrasts the two schedules on the
same random seed.

Run:  python3 demos/06_fluctuation_floors.py
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cogniq import (
    ExperimentConfig,
    PolicyParams,
    QState,
    RewardMatrix,
    StepSchedule,
    fluctuation_study,
    run_once,
    steady_state_stats,
)

OUT = pathlib.Path(__file__).parent / "output"


def main():
    common = dict(
        rewards=RewardMatrix(1.0, 1.0, 1.0, 1.0),
        horizon=5000,
        num_runs=1,
        master_seed=17,
        q_init_mode="fixed",
        q_init=QState(0.5, 0.5, 0.5, 0.5),
    )
    floored = ExperimentConfig(
        policy=PolicyParams(gamma=0.1, explore_floor=0.2),
        schedule=StepSchedule("floored", alpha0=1.0, floor=0.4),
        **common,
    )
    vanishing = ExperimentConfig(
        policy=PolicyParams(gamma=0.1),
        schedule=StepSchedule("vanishing", alpha0=1.0),
        **common,
    )

    study = fluctuation_study(floored)
    base = run_once(vanishing, 0)
    base_mean, base_std = steady_state_stats(base)

    print(f"floored : steady-state p_A1 mean {study.p_mean:.3f}, std {study.p_std:.4f}")
    print(f"vanishing: steady-state p_A1 mean {base_mean:.3f}, std {base_std:.4f}")
    print(f"fluctuation ratio: {study.p_std / max(base_std, 1e-300):.1f}x")

    OUT.mkdir(exist_ok=True)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True, sharey=True)
    t = study.run.trajectory.t
    ax1.plot(t, study.run.trajectory.p_a1, lw=0.5)
    ax1.set_title("Floors on (alpha >= 0.4, explore >= 0.2): persistent fluctuation")
    ax1.set_ylabel("P(A picks channel 1)")
    ax2.plot(base.trajectory.t, base.trajectory.p_a1, lw=0.5)
    ax2.set_title("Vanishing step, no floor: probabilities lock in")
    ax2.set_ylabel("P(A picks channel 1)")
    ax2.set_xlabel("round")

    path = OUT / "fluctuation_floors.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
