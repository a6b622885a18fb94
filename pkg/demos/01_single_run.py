"""One learning run, watched closely.

Two users repeatedly pick one of two channels. A collision pays both zero;
having a channel to yourself pays that channel's reward. Each user runs
Boltzmann-exploration Q-learning with a vanishing step size and never sees
the other's choices, yet the pair settles into opposite channels within a
few dozen rounds. This script runs one seeded experiment and plots how the
channel-1 probabilities of both users separate.

Run:  python3 demos/01_single_run.py
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from cogniq import (
    ExperimentConfig,
    PolicyParams,
    RewardMatrix,
    StepSchedule,
    run_once,
)

OUT = pathlib.Path(__file__).parent / "output"


def main():
    cfg = ExperimentConfig(
        rewards=RewardMatrix(1.0, 1.0, 1.0, 1.0),
        policy=PolicyParams(gamma=0.1),
        schedule=StepSchedule("vanishing", alpha0=1.0),
        horizon=200,
        num_runs=1,
        master_seed=2024,
    )
    result = run_once(cfg, run_index=0)
    traj = result.trajectory

    print(f"learning delay: round {result.learning_delay}")
    print(f"terminal region: {result.terminal_region.value}")
    print(f"collisions over {cfg.horizon} rounds: {result.collision_count}")
    q = result.terminal_q
    print(f"terminal Q: A=({q.q_a1:.3f}, {q.q_a2:.3f})  B=({q.q_b1:.3f}, {q.q_b2:.3f})")

    OUT.mkdir(exist_ok=True)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(traj.t, traj.p_a1, label="user A")
    ax1.plot(traj.t, traj.p_b1, label="user B")
    ax1.axhline(0.95, color="gray", ls=":", lw=0.8)
    ax1.axhline(0.05, color="gray", ls=":", lw=0.8)
    ax1.set_ylabel("P(channel 1)")
    ax1.legend()
    ax1.set_title("Channel-1 probabilities separate without any negotiation")

    ax2.plot(traj.t, traj.q[:, 0], label="Q_A1")
    ax2.plot(traj.t, traj.q[:, 1], label="Q_A2")
    ax2.plot(traj.t, traj.q[:, 2], label="Q_B1")
    ax2.plot(traj.t, traj.q[:, 3], label="Q_B2")
    ax2.set_xlabel("round")
    ax2.set_ylabel("Q value")
    ax2.legend(ncol=2)

    path = OUT / "single_run.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
