"""Monte Carlo experiment harness: seeded runs, learning-delay metrics,
empirical CDFs with explicit censoring, parameter sweeps, and CSV export.

Seeding contract: the stream of run ``i`` in grid cell ``g`` is
``Philox(SeedSequence(master_seed, spawn_key=(g, i)))``, so runs are
independent, order-insensitive, and safe to execute concurrently. Each run
consumes 4 uniforms for a random initial state (none for a fixed one) and then
exactly 2 uniforms per round (user A first, then B).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from .game import Channel, JointAction, RewardMatrix, RewardSample
from .dynamics import Region, classify_region
from .learner import QState, StepSchedule
from .policy import PolicyParams

TRAJECTORY_HEADER = (
    "t,q_a1,q_a2,q_b1,q_b2,mu_a,mu_b,p_a1,p_b1,"
    "action_a,action_b,reward_a,reward_b,region"
)

_REGION_CODES = {Region.I: 1, Region.II: 2, Region.III: 3, Region.IV: 4, Region.BOUNDARY: 5}
_CODE_REGIONS = {v: k for k, v in _REGION_CODES.items()}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run depends on; outputs are a pure function of this."""

    rewards: RewardMatrix
    policy: PolicyParams
    schedule: StepSchedule
    horizon: int
    num_runs: int
    master_seed: int
    q_init_mode: str = "uniform_random"
    q_init: QState | None = None
    delay_threshold: float = 0.95

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon!r}")
        if self.num_runs < 1:
            raise ValueError(f"num_runs must be >= 1, got {self.num_runs!r}")
        if not (0.5 < self.delay_threshold < 1.0):
            raise ValueError(
                f"delay_threshold must lie in (0.5, 1), got {self.delay_threshold!r}"
            )
        if self.q_init_mode not in ("uniform_random", "fixed"):
            raise ValueError(
                f"q_init_mode must be 'uniform_random' or 'fixed', got {self.q_init_mode!r}"
            )
        if (self.q_init_mode == "fixed") != (self.q_init is not None):
            raise ValueError("q_init must be given exactly when q_init_mode is 'fixed'")


_CONFIG_KEYS = {
    "r_a1", "r_a2", "r_b1", "r_b2",
    "gamma", "explore_floor",
    "schedule", "alpha0", "alpha_floor", "index_by_selection",
    "horizon", "num_runs", "master_seed",
    "q_init_mode", "q_init", "delay_threshold",
}

_REQUIRED_KEYS = {
    "r_a1", "r_a2", "r_b1", "r_b2", "gamma", "schedule", "alpha0",
    "horizon", "num_runs", "master_seed",
}


def config_from_dict(d: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a flat mapping (the JSON config schema).

    Unknown keys are rejected by name; missing required keys likewise.
    """
    unknown = sorted(set(d) - _CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
    missing = sorted(_REQUIRED_KEYS - set(d))
    if missing:
        raise ValueError(f"missing config key(s): {', '.join(missing)}")
    q_init = d.get("q_init")
    if q_init is not None:
        if len(q_init) != 4:
            raise ValueError("q_init must hold 4 values (q_a1, q_a2, q_b1, q_b2)")
        q_init = QState(*(float(x) for x in q_init))
    return ExperimentConfig(
        rewards=RewardMatrix(float(d["r_a1"]), float(d["r_a2"]),
                             float(d["r_b1"]), float(d["r_b2"])),
        policy=PolicyParams(float(d["gamma"]), float(d.get("explore_floor", 0.0))),
        schedule=StepSchedule(
            kind=str(d["schedule"]),
            alpha0=float(d["alpha0"]),
            floor=float(d.get("alpha_floor", 0.0)),
            index_by_selection=bool(d.get("index_by_selection", False)),
        ),
        horizon=int(d["horizon"]),
        num_runs=int(d["num_runs"]),
        master_seed=int(d["master_seed"]),
        q_init_mode=str(d.get("q_init_mode", "uniform_random")),
        q_init=q_init,
        delay_threshold=float(d.get("delay_threshold", 0.95)),
    )


def config_from_json(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    return config_from_dict(doc)


@dataclass(frozen=True)
class TrajectoryRecord:
    t: int
    q: QState
    mu_a: float
    mu_b: float
    p_a1: float
    p_b1: float
    actions: JointAction
    rewards: RewardSample
    region: Region


@dataclass
class Trajectory:
    """Column-oriented per-round log. Row t holds the state the round was
    played from, the action probabilities used for sampling (floor applied),
    the sampled actions, and the realized rewards."""

    t: np.ndarray
    q: np.ndarray           # (N, 4)
    mu_a: np.ndarray
    mu_b: np.ndarray
    p_a1: np.ndarray
    p_b1: np.ndarray
    action_a: np.ndarray    # channel numbers, 1 or 2
    action_b: np.ndarray
    reward_a: np.ndarray
    reward_b: np.ndarray
    region: np.ndarray      # codes, see _REGION_CODES

    def __len__(self):
        return len(self.t)

    def records(self):
        for i in range(len(self.t)):
            yield TrajectoryRecord(
                t=int(self.t[i]),
                q=QState.from_array(self.q[i]),
                mu_a=float(self.mu_a[i]),
                mu_b=float(self.mu_b[i]),
                p_a1=float(self.p_a1[i]),
                p_b1=float(self.p_b1[i]),
                actions=JointAction(Channel(int(self.action_a[i])),
                                    Channel(int(self.action_b[i]))),
                rewards=RewardSample(float(self.reward_a[i]), float(self.reward_b[i])),
                region=_CODE_REGIONS[int(self.region[i])],
            )

    def to_csv(self, path):
        write_trajectory_csv(path, self)


@dataclass
class RunResult:
    run_index: int
    trajectory: Trajectory | None
    learning_delay: int | None
    terminal_region: Region
    terminal_q: QState
    collision_count: int


def _run_rng(master_seed: int, run_index: int, grid_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(grid_index, run_index))
    return np.random.Generator(np.random.Philox(ss))


def _classify_fast(qa1, qa2, qb1, qb2):
    if (qa1 == 0.0 and qa2 == 0.0) or (qb1 == 0.0 and qb2 == 0.0):
        return 5
    mu_a = qa1 / qa2 if qa2 != 0.0 else math.inf
    mu_b = qb1 / qb2 if qb2 != 0.0 else math.inf
    if mu_a == 1.0 or mu_b == 1.0:
        return 5
    if mu_a > 1.0:
        return 2 if mu_b > 1.0 else 1
    return 3 if mu_b > 1.0 else 4


def run_once(
    cfg: ExperimentConfig,
    run_index: int,
    grid_index: int = 0,
    keep_trajectory: bool = True,
    stop_at_delay: bool = False,
) -> RunResult:
    """Execute one seeded run of `horizon` learning rounds.

    The inner loop mirrors learner.play_round operation-for-operation (same
    float expressions, same RNG consumption); test_harness pins the bit-exact
    equivalence. The learning delay is the first round whose pre-update state
    puts one user's channel-1 probability above the threshold and the other's
    below its complement (either orientation). With stop_at_delay the run ends
    at that round, which leaves delay statistics unchanged but truncates the
    trajectory; censored runs still play the full horizon.
    """
    rng = _run_rng(cfg.master_seed, run_index, grid_index)
    r_max = cfg.rewards.r_max
    if cfg.q_init_mode == "uniform_random":
        qa1, qa2, qb1, qb2 = (float(x) * r_max for x in rng.random(4))
    else:
        qi = cfg.q_init
        qa1, qa2, qb1, qb2 = qi.q_a1, qi.q_a2, qi.q_b1, qi.q_b2
    u = rng.random(2 * cfg.horizon)

    gamma = cfg.policy.gamma
    floor = cfg.policy.explore_floor
    hi_p = 1.0 - floor
    r_a1, r_a2 = cfg.rewards.r_a1, cfg.rewards.r_a2
    r_b1, r_b2 = cfg.rewards.r_b1, cfg.rewards.r_b2
    alpha0 = cfg.schedule.alpha0
    alpha_floor = cfg.schedule.floor if cfg.schedule.kind == "floored" else 0.0
    by_selection = cfg.schedule.index_by_selection
    n_a1 = n_a2 = n_b1 = n_b2 = 0
    thr = cfg.delay_threshold
    thr_lo = 1.0 - thr
    horizon = cfg.horizon
    exp = math.exp

    if keep_trajectory:
        col_t = np.empty(horizon, dtype=np.int64)
        col_q = np.empty((horizon, 4))
        col_mu_a = np.empty(horizon)
        col_mu_b = np.empty(horizon)
        col_pa = np.empty(horizon)
        col_pb = np.empty(horizon)
        col_aa = np.empty(horizon, dtype=np.int8)
        col_ab = np.empty(horizon, dtype=np.int8)
        col_ra = np.empty(horizon)
        col_rb = np.empty(horizon)
        col_reg = np.empty(horizon, dtype=np.int8)

    delay = None
    collisions = 0
    played = 0
    for t in range(1, horizon + 1):
        # Boltzmann channel-1 probabilities; must mirror policy.boltzmann_channel1.
        m = qa1 if qa1 > qa2 else qa2
        e1 = exp((qa1 - m) / gamma)
        e2 = exp((qa2 - m) / gamma)
        pa1 = e1 / (e1 + e2)
        m = qb1 if qb1 > qb2 else qb2
        e1 = exp((qb1 - m) / gamma)
        e2 = exp((qb2 - m) / gamma)
        pb1 = e1 / (e1 + e2)
        if floor > 0.0:
            pa1 = min(max(pa1, floor), hi_p)
            pb1 = min(max(pb1, floor), hi_p)

        if delay is None and ((pa1 > thr and pb1 < thr_lo) or (pb1 > thr and pa1 < thr_lo)):
            delay = t
            if stop_at_delay:
                break

        a1 = u[2 * t - 2] < pa1
        b1 = u[2 * t - 1] < pb1
        collided = a1 == b1
        if collided:
            collisions += 1
            ra = rb = 0.0
        else:
            ra = r_a1 if a1 else r_a2
            rb = r_b1 if b1 else r_b2

        if keep_trajectory:
            i = t - 1
            col_t[i] = t
            col_q[i, 0] = qa1
            col_q[i, 1] = qa2
            col_q[i, 2] = qb1
            col_q[i, 3] = qb2
            col_mu_a[i] = qa1 / qa2 if qa2 != 0.0 else math.inf
            col_mu_b[i] = qb1 / qb2 if qb2 != 0.0 else math.inf
            col_pa[i] = pa1
            col_pb[i] = pb1
            col_aa[i] = 1 if a1 else 2
            col_ab[i] = 1 if b1 else 2
            col_ra[i] = ra
            col_rb[i] = rb
            col_reg[i] = _classify_fast(qa1, qa2, qb1, qb2)

        if by_selection:
            if a1:
                n_a1 += 1
                t_a = n_a1
            else:
                n_a2 += 1
                t_a = n_a2
            if b1:
                n_b1 += 1
                t_b = n_b1
            else:
                n_b2 += 1
                t_b = n_b2
        else:
            t_a = t_b = t
        alpha_a = alpha0 / t_a
        if alpha_a < alpha_floor:
            alpha_a = alpha_floor
        alpha_b = alpha0 / t_b
        if alpha_b < alpha_floor:
            alpha_b = alpha_floor

        if a1:
            qa1 = (1.0 - alpha_a) * qa1 + alpha_a * ra
        else:
            qa2 = (1.0 - alpha_a) * qa2 + alpha_a * ra
        if b1:
            qb1 = (1.0 - alpha_b) * qb1 + alpha_b * rb
        else:
            qb2 = (1.0 - alpha_b) * qb2 + alpha_b * rb
        played = t

    trajectory = None
    if keep_trajectory:
        n = played
        trajectory = Trajectory(
            t=col_t[:n], q=col_q[:n], mu_a=col_mu_a[:n], mu_b=col_mu_b[:n],
            p_a1=col_pa[:n], p_b1=col_pb[:n], action_a=col_aa[:n], action_b=col_ab[:n],
            reward_a=col_ra[:n], reward_b=col_rb[:n], region=col_reg[:n],
        )
    terminal_q = QState(qa1, qa2, qb1, qb2)
    return RunResult(
        run_index=run_index,
        trajectory=trajectory,
        learning_delay=delay,
        terminal_region=classify_region(terminal_q),
        terminal_q=terminal_q,
        collision_count=collisions,
    )


def run_many(
    cfg: ExperimentConfig,
    workers: int = 1,
    grid_index: int = 0,
    keep_trajectory: bool = True,
    stop_at_delay: bool = False,
) -> list[RunResult]:
    """All runs of a config, ordered by run index regardless of worker count.

    workers=0 means one worker per CPU. Runs share no mutable state, so the
    result list is identical for any degree of parallelism.
    """
    import os

    if workers == 0:
        workers = os.cpu_count() or 1
    indices = range(cfg.num_runs)

    def job(i):
        return run_once(cfg, i, grid_index=grid_index,
                        keep_trajectory=keep_trajectory, stop_at_delay=stop_at_delay)

    if workers <= 1:
        return [job(i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, indices))


@dataclass
class DelayCdf:
    """Empirical CDF of learning delays over all runs. The denominator counts
    censored (never-completed) runs too, so the CDF saturates at
    1 - censored_fraction; censored mass is reported, never dropped."""

    delays: np.ndarray            # sorted unique delay values of completed runs
    cdf: np.ndarray               # cumulative fraction of ALL runs at each delay
    censored_fraction: float
    num_runs: int
    completed_delays: np.ndarray  # full sorted multiset of completed delays

    def evaluate(self, x: float) -> float:
        idx = np.searchsorted(self.delays, x, side="right")
        return float(self.cdf[idx - 1]) if idx > 0 else 0.0

    def median(self) -> int | None:
        """Smallest delay reached by at least half of all runs; None when the
        completed mass never gets there."""
        idx = np.searchsorted(self.cdf, 0.5, side="left")
        return int(self.delays[idx]) if idx < len(self.delays) else None

    def mean(self) -> float | None:
        """Mean delay over completed runs only."""
        if len(self.completed_delays) == 0:
            return None
        return float(np.mean(self.completed_delays))

    def to_csv(self, path):
        write_delay_cdf_csv(path, self)


def delay_cdf(results) -> DelayCdf:
    """Empirical delay CDF of a run set; rejects an empty collection."""
    results = list(results)
    if not results:
        raise ValueError("delay_cdf needs at least one run result")
    total = len(results)
    completed = np.sort(np.array(
        [r.learning_delay for r in results if r.learning_delay is not None], dtype=np.int64
    ))
    values, counts = np.unique(completed, return_counts=True)
    cdf = np.cumsum(counts) / total
    return DelayCdf(
        delays=values,
        cdf=cdf,
        censored_fraction=(total - len(completed)) / total,
        num_runs=total,
        completed_delays=completed,
    )


@dataclass
class FluctuationResult:
    run: RunResult
    p_mean: float
    p_std: float


def steady_state_stats(result: RunResult) -> tuple[float, float]:
    """Mean and standard deviation of A's channel-1 probability over the final
    half of the recorded rounds."""
    if result.trajectory is None:
        raise ValueError("run was executed without a trajectory")
    p = result.trajectory.p_a1
    tail = p[len(p) // 2:]
    return float(np.mean(tail)), float(np.std(tail))


def fluctuation_study(cfg: ExperimentConfig, run_index: int = 0) -> FluctuationResult:
    """Steady-state fluctuation of a run with floored step size and floored
    exploration; meaningless (and rejected) without both floors."""
    if cfg.schedule.kind != "floored" or cfg.schedule.floor <= 0.0:
        raise ValueError("fluctuation study requires a floored step schedule")
    if cfg.policy.explore_floor <= 0.0:
        raise ValueError("fluctuation study requires a positive exploration floor")
    result = run_once(cfg, run_index, keep_trajectory=True)
    p_mean, p_std = steady_state_stats(result)
    return FluctuationResult(run=result, p_mean=p_mean, p_std=p_std)


def sweep(
    cfg: ExperimentConfig,
    alpha0_grid,
    gamma_grid,
    workers: int = 1,
) -> dict[tuple[float, float], DelayCdf]:
    """Delay CDF per (alpha0, gamma) grid cell.

    Cells share the master seed but use distinct substreams via the cell's
    grid index, so adding cells never perturbs existing ones.
    """
    alpha0_grid = list(alpha0_grid)
    gamma_grid = list(gamma_grid)
    if not alpha0_grid or not gamma_grid:
        raise ValueError("parameter grid must be nonempty")
    out = {}
    for grid_index, (alpha0, gamma) in enumerate(product(alpha0_grid, gamma_grid)):
        cell_cfg = replace(
            cfg,
            schedule=replace(cfg.schedule, alpha0=alpha0),
            policy=replace(cfg.policy, gamma=gamma),
        )
        results = run_many(cell_cfg, workers=workers, grid_index=grid_index,
                           keep_trajectory=False, stop_at_delay=True)
        out[(alpha0, gamma)] = delay_cdf(results)
    return out


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest round-trip representation
    return repr(float(x))


def write_trajectory_csv(path, trajectory: Trajectory):
    """Trajectory CSV: UTF-8, LF endings, full double precision."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(TRAJECTORY_HEADER + "\n")
        for i in range(len(trajectory)):
            row = (
                str(int(trajectory.t[i])),
                _fmt(trajectory.q[i, 0]), _fmt(trajectory.q[i, 1]),
                _fmt(trajectory.q[i, 2]), _fmt(trajectory.q[i, 3]),
                _fmt(trajectory.mu_a[i]), _fmt(trajectory.mu_b[i]),
                _fmt(trajectory.p_a1[i]), _fmt(trajectory.p_b1[i]),
                str(int(trajectory.action_a[i])), str(int(trajectory.action_b[i])),
                _fmt(trajectory.reward_a[i]), _fmt(trajectory.reward_b[i]),
                _CODE_REGIONS[int(trajectory.region[i])].value,
            )
            f.write(",".join(row) + "\n")


def read_trajectory_csv(path) -> Trajectory:
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != TRAJECTORY_HEADER:
            raise ValueError(f"unexpected trajectory header: {header!r}")
        rows = [line.rstrip("\n").split(",") for line in f if line.strip()]
    n = len(rows)
    traj = Trajectory(
        t=np.array([int(r[0]) for r in rows], dtype=np.int64),
        q=np.array([[float(r[1]), float(r[2]), float(r[3]), float(r[4])] for r in rows])
        if n else np.empty((0, 4)),
        mu_a=np.array([float(r[5]) for r in rows]),
        mu_b=np.array([float(r[6]) for r in rows]),
        p_a1=np.array([float(r[7]) for r in rows]),
        p_b1=np.array([float(r[8]) for r in rows]),
        action_a=np.array([int(r[9]) for r in rows], dtype=np.int8),
        action_b=np.array([int(r[10]) for r in rows], dtype=np.int8),
        reward_a=np.array([float(r[11]) for r in rows]),
        reward_b=np.array([float(r[12]) for r in rows]),
        region=np.array([_REGION_CODES[Region(r[13])] for r in rows], dtype=np.int8),
    )
    return traj


def write_delay_cdf_csv(path, cdf: DelayCdf):
    """Delay-CDF CSV with the censored fraction on a trailing comment line."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("delay,cdf\n")
        for d, c in zip(cdf.delays, cdf.cdf):
            f.write(f"{int(d)},{_fmt(c)}\n")
        f.write(f"# censored,{_fmt(cdf.censored_fraction)}\n")
