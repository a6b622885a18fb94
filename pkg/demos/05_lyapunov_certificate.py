"""A convergence certificate for the mean-field flow.

V(q) = ||g(q)||^2 is a Lyapunov candidate: at stationary points it is zero,
and its derivative along the flow assembles from four coefficients
C11..C22 built out of the softmax kernels. When every reward sits below
2*gamma, each coefficient is below 2 and dV/dt is strictly negative away
from stationary points. Rewards rarely satisfy that out of the box, so
rescale_rewards_below shrinks them (and the start state) first. This script
shows V decaying monotonically on rescaled problems and prints the
coefficient bound at a few random states.

Run:  python3 demos/05_lyapunov_certificate.py
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cogniq import (
    MeanField,
    OdeConfig,
    QState,
    RewardMatrix,
    integrate,
    lyapunov,
    lyapunov_monotone,
    rescale_rewards_below,
)

OUT = pathlib.Path(__file__).parent / "output"


def main():
    rng = np.random.default_rng(5)
    OUT.mkdir(exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 5))

    for i in range(8):
        rewards = RewardMatrix(*rng.uniform(0.5, 2.0, 4))
        mf = MeanField(rewards, gamma=0.1)
        q0 = QState(*(rng.random(4) * rewards.as_vector()))
        mf_s, q0_s, c = rescale_rewards_below(mf, q0)
        trace = integrate(q0_s, mf_s, OdeConfig())
        assert lyapunov_monotone(trace, mf_s)
        ax.semilogy(trace.times, np.maximum(trace.lyapunov, 1e-20), lw=1.0)
        report = lyapunov(q0_s, mf_s)
        print(f"trace {i}: scale c={c:.3f}, max C coefficient "
              f"{report.c_coeffs.max():.3f} (< 2), "
              f"dV/dt at start {report.dv_dt_analytic:+.3e}")

    ax.set_xlabel("flow time")
    ax.set_ylabel(r"$V = \Vert g(q)\Vert^2$")
    ax.set_title("After rescaling rewards below 2$\\gamma$, V only ever decreases")

    path = OUT / "lyapunov_certificate.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
