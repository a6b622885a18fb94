"""The preference plane and why coordination is transient.

The state of the pair can be summarized by two ratios, mu_A = Q_A1/Q_A2 and
mu_B = Q_B1/Q_B2. The plane splits into four quadrants: in I and III the
users prefer opposite channels (no collisions), in II and IV they prefer the
same one (constant collisions). This script scatters many runs on the plane
at a few points in time: mass drains out of II and IV into I and III and
stays there.

Run:  python3 demos/02_preference_plane.py
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cogniq import (
    ExperimentConfig,
    PolicyParams,
    RewardMatrix,
    StepSchedule,
    run_many,
)

OUT = pathlib.Path(__file__).parent / "output"
SNAPSHOTS = (1, 10, 50, 400)


def main():
    cfg = ExperimentConfig(
        rewards=RewardMatrix(1.0, 1.0, 1.0, 1.0),
        policy=PolicyParams(gamma=0.1),
        schedule=StepSchedule("vanishing", alpha0=1.0),
        horizon=400,
        num_runs=400,
        master_seed=7,
    )
    results = run_many(cfg, workers=4)

    OUT.mkdir(exist_ok=True)
    fig, axes = plt.subplots(1, len(SNAPSHOTS), figsize=(4 * len(SNAPSHOTS), 4),
                             sharex=True, sharey=True)
    for ax, t in zip(axes, SNAPSHOTS):
        mu_a = np.array([r.trajectory.mu_a[t - 1] for r in results])
        mu_b = np.array([r.trajectory.mu_b[t - 1] for r in results])
        # clip for display only; the dynamics push ratios to 0 or infinity
        ax.scatter(np.clip(mu_a, 1e-3, 1e3), np.clip(mu_b, 1e-3, 1e3), s=6, alpha=0.5)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.axhline(1.0, color="gray", lw=0.8)
        ax.axvline(1.0, color="gray", lw=0.8)
        ax.set_title(f"round {t}")
        ax.set_xlabel(r"$\mu_A$")
        same = np.mean(((mu_a > 1) & (mu_b > 1)) | ((mu_a < 1) & (mu_b < 1)))
        ax.text(0.05, 0.92, f"colliding: {same:.0%}", transform=ax.transAxes)
    axes[0].set_ylabel(r"$\mu_B$")
    fig.suptitle("Runs drain out of the colliding quadrants (upper right, lower left)")

    path = OUT / "preference_plane.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    print(f"wrote {path}")

    terminal = [r.terminal_region.value for r in results]
    for name in ("I", "II", "III", "IV", "Boundary"):
        count = terminal.count(name)
        if count:
            print(f"terminal region {name:>8}: {count:4d} runs")


if __name__ == "__main__":
    main()
