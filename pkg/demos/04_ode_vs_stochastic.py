"""The deterministic skeleton under the noise.

Averaging the stochastic Q-update over the action sampling gives an ordinary
differential equation qdot = g(q) = A(q) r - q, where A(q) holds the
opponent's channel probabilities. This script integrates that mean-field flow
from one initial state and overlays it on a band of stochastic runs started
from the same state: the noisy runs track the flow and commit to the same
equilibrium.

Run:  python3 demos/04_ode_vs_stochastic.py
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cogniq import (
    ExperimentConfig,
    MeanField,
    OdeConfig,
    PolicyParams,
    QState,
    RewardMatrix,
    StepSchedule,
    integrate,
    run_many,
)

OUT = pathlib.Path(__file__).parent / "output"


def main():
    rewards = RewardMatrix(1.0, 1.0, 1.0, 1.0)
    q0 = QState(0.7, 0.3, 0.4, 0.6)
    mf = MeanField(rewards, gamma=0.1)

    trace = integrate(q0, mf, OdeConfig())
    print(f"ode: {len(trace)} records, reason={trace.reason}, "
          f"terminal region {trace.regions[-1].value}")

    cfg = ExperimentConfig(
        rewards=rewards,
        policy=PolicyParams(gamma=0.1),
        schedule=StepSchedule("vanishing", alpha0=1.0),
        horizon=300,
        num_runs=200,
        master_seed=3,
        q_init_mode="fixed",
        q_init=q0,
    )
    results = run_many(cfg, workers=4)
    agree = np.mean([r.terminal_region is trace.regions[-1] for r in results])
    print(f"stochastic runs ending in the ode's terminal region: {agree:.0%}")

    # In the stochastic process, round t uses step alpha0/t, so the matched
    # flow time is the partial harmonic sum up to t.
    flow_time = np.cumsum(1.0 / np.arange(1, cfg.horizon + 1))
    qa1 = np.stack([r.trajectory.q[:, 0] for r in results])

    OUT.mkdir(exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 5))
    lo, hi = np.percentile(qa1, [10, 90], axis=0)
    ax.fill_between(flow_time, lo, hi, alpha=0.3, label="stochastic 10-90%")
    ax.plot(flow_time, np.mean(qa1, axis=0), lw=1.0, label="stochastic mean")
    ax.plot(trace.times, trace.states[:, 0], "k--", lw=1.5, label="mean-field ODE")
    ax.set_xlim(0, min(flow_time[-1], trace.times[-1]))
    ax.set_xlabel("flow time (sum of step sizes)")
    ax.set_ylabel(r"$Q_{A1}$")
    ax.set_title("Noisy Q-learning rides the mean-field flow")
    ax.legend()

    path = OUT / "ode_vs_stochastic.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
