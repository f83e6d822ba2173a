"""Heterogeneous field simulation: N plants on a grid under a dose policy.

Each plant gets its own parameter set, drawn from per-plant RNG
substreams around the nominal values, and is integrated independently
between application epochs. At every epoch the policy observes the
current shoot outputs (optionally noised) and resets each plant's
piecewise-constant nitrogen dose.

Integration is vectorized across plants but uses the exact flux
arithmetic of the scalar integrator, so a field run reproduces the
per-plant `integrate` results bit for bit and is independent of any
worker-thread count.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .control import ActuationSchedule, ControlPolicy, apply_policy, observe
from .integrator import EnvSchedule, GRID_TOL, Trajectory, n_steps_exact, step_values
from .model import B_EPS, PARAM_NAMES, PlantParams, PlantState, _flux_core

# Light level calibrated so the nominal uncontrolled field reaches a
# mean dry shoot biomass around 40 g by day 50 (see shipped configs).
DEFAULT_LIGHT = 530.0
DEFAULT_TEMPERATURE = 22.0
DEFAULT_U_BAR = 0.075
DEFAULT_INITIAL_STATE = PlantState(b=0.005, c=0.001, n=0.0001)


class ConfigError(ValueError):
    """Invalid configuration (bad file, bad value, inconsistent sections)."""


@dataclass(frozen=True)
class FieldConfig:
    """Everything needed to reproduce one field scenario."""

    n_plants: int = 100
    grid_rows: int = 10
    grid_cols: int = 10
    nominal_params: PlantParams = None
    perturbation_frac: float = 0.05
    seed: int = 0
    s0: PlantState = DEFAULT_INITIAL_STATE
    env: EnvSchedule = None
    season_days: float = 50.0
    dt: float = 0.01
    u_bar: float = DEFAULT_U_BAR
    rejection_percentile: float = 10.0

    def __post_init__(self) -> None:
        if self.nominal_params is None:
            from .model import NOMINAL_PARAMS

            object.__setattr__(self, "nominal_params", NOMINAL_PARAMS)
        if self.env is None:
            object.__setattr__(self, "env", EnvSchedule.constant(DEFAULT_TEMPERATURE, DEFAULT_LIGHT))
        if self.n_plants < 1:
            raise ConfigError(f"n_plants must be positive, got {self.n_plants}")
        if self.grid_rows * self.grid_cols != self.n_plants:
            raise ConfigError(
                f"grid {self.grid_rows}x{self.grid_cols} does not hold {self.n_plants} plants"
            )
        if not 0.0 <= self.perturbation_frac < 0.5:
            raise ConfigError(f"perturbation_frac must lie in [0, 0.5), got {self.perturbation_frac}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if self.season_days <= 0.0:
            raise ConfigError(f"season_days must be positive, got {self.season_days}")
        if self.dt <= 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.u_bar < 0.0:
            raise ConfigError(f"u_bar must be nonnegative, got {self.u_bar}")
        if not 0.0 <= self.rejection_percentile <= 100.0:
            raise ConfigError(f"rejection_percentile must lie in [0, 100], got {self.rejection_percentile}")


def sample_params(nominal: PlantParams, frac: float, seed: int, plant_index: int) -> PlantParams:
    """Draw one plant's parameters around the nominal values.

    Each parameter is Normal(nominal, (frac * nominal)^2) from a
    substream keyed by (seed, plant_index), so adding plants never
    reshuffles earlier draws. Draws violating the parameter invariants
    (positivity, psi in (0, 1)) are redrawn rather than clamped, to
    avoid piling probability on the bounds.
    """
    if frac < 0.0:
        raise ConfigError(f"perturbation fraction must be nonnegative, got {frac}")
    if frac == 0.0:
        return nominal
    rng = np.random.default_rng(np.random.SeedSequence([seed, plant_index]))
    values = {}
    for name in PARAM_NAMES:
        mean = getattr(nominal, name)
        for attempt in range(100):
            draw = float(rng.normal(mean, frac * mean))
            if draw > 0.0 and (name != "psi" or draw < 1.0):
                values[name] = draw
                break
        else:
            raise ConfigError(f"could not draw a valid value for {name} after 100 attempts")
    return PlantParams(**values)


def neighbors(plant_index: int, grid_rows: int, grid_cols: int) -> list:
    """Moore neighborhood (adjacent + diagonal, no wraparound) as sorted indices."""
    n = grid_rows * grid_cols
    if not 0 <= plant_index < n:
        raise IndexError(f"plant index {plant_index} out of range for {grid_rows}x{grid_cols} grid")
    row, col = divmod(plant_index, grid_cols)
    out = []
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            r, c = row + dr, col + dc
            if 0 <= r < grid_rows and 0 <= c < grid_cols:
                out.append(r * grid_cols + c)
    return sorted(out)


def grid_topology(grid_rows: int, grid_cols: int) -> tuple:
    """Neighbor index arrays for every plant on the grid."""
    return tuple(
        np.array(neighbors(i, grid_rows, grid_cols), dtype=int)
        for i in range(grid_rows * grid_cols)
    )


def rejection_threshold(final_outputs, percentile: float) -> float:
    """Linear-interpolation percentile of the final shoot-output vector."""
    y = np.asarray(final_outputs, dtype=float)
    if y.size == 0:
        raise ValueError("final outputs must be nonempty")
    return float(np.percentile(y, percentile, method="linear"))


@dataclass(frozen=True)
class FieldTrajectory:
    """Per-plant state histories plus the applied-nitrogen ledger.

    ``applied_u[e, i]`` is the dose set for plant i at application epoch
    e; ``hold_days[e]`` is how long that dose was held (until the next
    epoch or season end), which duration-weights nitrogen totals.
    """

    config: FieldConfig
    times: np.ndarray
    states: np.ndarray  # (n_plants, n_times, 3)
    outputs: np.ndarray  # (n_plants, n_times)
    application_times: np.ndarray
    applied_u: np.ndarray  # (n_epochs, n_plants)
    hold_days: np.ndarray
    plant_params: tuple = dataclass_field(repr=False, default=())

    @property
    def n_plants(self) -> int:
        return self.outputs.shape[0]

    @property
    def final_outputs(self) -> np.ndarray:
        return self.outputs[:, -1].copy()

    def total_nitrogen(self) -> float:
        """Total grams of nitrogen availability, duration-weighted in days."""
        return float((self.applied_u.sum(axis=1) * self.hold_days).sum())

    def plant_trajectory(self, i: int) -> Trajectory:
        return Trajectory(
            times=self.times.copy(),
            states=self.states[i].copy(),
            outputs=self.outputs[i].copy(),
        )

    def u_at_times(self, times: np.ndarray) -> np.ndarray:
        """Applied dose per plant at each query time, shape (n_plants, len(times))."""
        idx = np.searchsorted(self.application_times, times, side="right") - 1
        u = np.empty((self.n_plants, len(times)))
        for j, e in enumerate(idx):
            u[:, j] = self.config.u_bar if e < 0 else self.applied_u[e]
        return u


def _validate_schedule(cfg: FieldConfig, schedule: ActuationSchedule) -> np.ndarray:
    if schedule.interval_days < cfg.dt - GRID_TOL:
        raise ConfigError(
            f"application interval {schedule.interval_days} is shorter than dt={cfg.dt}"
        )
    app_times = schedule.times_within(cfg.season_days)
    for t in app_times:
        snapped = round(t / cfg.dt) * cfg.dt
        if abs(snapped - t) > GRID_TOL:
            raise ConfigError(
                f"application time t={t} is off the dt={cfg.dt} step grid; "
                "choose an interval that is a multiple of dt"
            )
    return app_times


def simulate_field(
    cfg: FieldConfig,
    policy: ControlPolicy,
    schedule: ActuationSchedule,
    plant_params: tuple = None,
) -> FieldTrajectory:
    """Simulate every plant through the season under the given policy.

    Time marches in application epochs. At each application time the
    policy observes the current outputs (noised when the policy says so)
    and fixes each plant's dose until the next application; between
    applications the plants evolve independently on a shared RK4 step
    grid. The result is deterministic for a given config, policy, and
    schedule.

    ``plant_params`` overrides the seeded per-plant parameter draws,
    e.g. to replay a recorded field or relabel plants.
    """
    app_times = _validate_schedule(cfg, schedule)
    n = cfg.n_plants
    if plant_params is None:
        params = tuple(
            sample_params(cfg.nominal_params, cfg.perturbation_frac, cfg.seed, i) for i in range(n)
        )
    else:
        params = tuple(plant_params)
        if len(params) != n:
            raise ConfigError(f"plant_params has {len(params)} entries for {n} plants")
    pmat = np.array([p.as_array() for p in params])
    cols = {name: pmat[:, j].copy() for j, name in enumerate(PARAM_NAMES)}
    psi = cols["psi"]

    total_steps = n_steps_exact(cfg.season_days, cfg.dt)
    times = cfg.dt * np.arange(total_steps + 1)
    T_steps = step_values(cfg.env.temperature, times[:-1])
    I_steps = step_values(cfg.env.light, times[:-1])

    states = np.empty((n, total_steps + 1, 3))
    B = np.full(n, max(cfg.s0.b, B_EPS))
    C = np.full(n, cfg.s0.c)
    N = np.full(n, cfg.s0.n)
    states[:, 0, 0] = B
    states[:, 0, 1] = C
    states[:, 0, 2] = N

    app_steps = [int(s) for s in np.rint(app_times / cfg.dt)]
    applied_u = np.empty((len(app_times), n))
    hold_days = np.empty(len(app_times))
    topology = grid_topology(cfg.grid_rows, cfg.grid_cols) if policy.variant == "local" else None

    # Baseline dose before the first application (only reached when the
    # schedule starts after day zero).
    if app_steps[0] > 0:
        u = np.full(n, cfg.u_bar)
        _advance(B, C, N, u, cols, T_steps, I_steps, cfg.dt, 0, app_steps[0], states)

    for epoch, start in enumerate(app_steps):
        y = psi * B
        seen = observe(y, policy.noise_frac, cfg.seed, epoch)
        u = apply_policy(policy, seen, topology)
        applied_u[epoch] = u
        if epoch + 1 < len(app_times):
            stop = app_steps[epoch + 1]
            hold_days[epoch] = app_times[epoch + 1] - app_times[epoch]
        else:
            stop = total_steps
            hold_days[epoch] = cfg.season_days - app_times[epoch]
        _advance(B, C, N, u, cols, T_steps, I_steps, cfg.dt, start, stop, states)

    outputs = psi[:, None] * states[:, :, 0]
    return FieldTrajectory(
        config=cfg,
        times=times,
        states=states,
        outputs=outputs,
        application_times=np.asarray(app_times, dtype=float),
        applied_u=applied_u,
        hold_days=hold_days,
        plant_params=params,
    )


def _advance(B, C, N, u, cols, T_steps, I_steps, dt, start, stop, states) -> None:
    """RK4-step all plants in place from step `start` to `stop`, recording each step.

    Mirrors the scalar integrator arithmetic exactly (same expression
    trees, projection as elementwise maxima) so per-plant rows match
    `integrate` bit for bit.
    """
    k = cols["k"]
    k_l = cols["k_l"]
    k_ml = cols["k_ml"]
    sigma_c = cols["sigma_c"]
    sigma_n = cols["sigma_n"]
    v = cols["v"]
    j_c = cols["j_c"]
    j_n = cols["j_n"]
    psi = cols["psi"]
    T_op = cols["T_op"]
    theta_c = cols["theta_c"]
    theta_n = cols["theta_n"]
    half = 0.5 * dt
    sixth = dt / 6.0

    b, c, n = B, C, N
    T_list = T_steps.tolist()
    I_list = I_steps.tolist()
    for i in range(start, stop):
        # temperature response per plant (T_op varies across the field)
        R = np.maximum(0.0, (T_op - np.abs(T_op - T_list[i])) / T_op)
        I = I_list[i]

        g, l, cc, cn, ac, an = _flux_core(
            b, c, n, u, R, I, k, k_l, k_ml, sigma_c, sigma_n, v, j_c, j_n, psi, theta_c, theta_n
        )
        kb1 = g - l
        kc1 = ac - cc
        kn1 = an - cn

        b2 = np.maximum(b + half * kb1, B_EPS)
        c2 = np.maximum(c + half * kc1, 0.0)
        n2 = np.maximum(n + half * kn1, 0.0)
        g, l, cc, cn, ac, an = _flux_core(
            b2, c2, n2, u, R, I, k, k_l, k_ml, sigma_c, sigma_n, v, j_c, j_n, psi, theta_c, theta_n
        )
        kb2 = g - l
        kc2 = ac - cc
        kn2 = an - cn

        b3 = np.maximum(b + half * kb2, B_EPS)
        c3 = np.maximum(c + half * kc2, 0.0)
        n3 = np.maximum(n + half * kn2, 0.0)
        g, l, cc, cn, ac, an = _flux_core(
            b3, c3, n3, u, R, I, k, k_l, k_ml, sigma_c, sigma_n, v, j_c, j_n, psi, theta_c, theta_n
        )
        kb3 = g - l
        kc3 = ac - cc
        kn3 = an - cn

        b4 = np.maximum(b + dt * kb3, B_EPS)
        c4 = np.maximum(c + dt * kc3, 0.0)
        n4 = np.maximum(n + dt * kn3, 0.0)
        g, l, cc, cn, ac, an = _flux_core(
            b4, c4, n4, u, R, I, k, k_l, k_ml, sigma_c, sigma_n, v, j_c, j_n, psi, theta_c, theta_n
        )
        kb4 = g - l
        kc4 = ac - cc
        kn4 = an - cn

        b = np.maximum(b + sixth * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4), B_EPS)
        c = np.maximum(c + sixth * (kc1 + 2.0 * kc2 + 2.0 * kc3 + kc4), 0.0)
        n = np.maximum(n + sixth * (kn1 + 2.0 * kn2 + 2.0 * kn3 + kn4), 0.0)
        states[:, i + 1, 0] = b
        states[:, i + 1, 1] = c
        states[:, i + 1, 2] = n

    B[:] = b
    C[:] = c
    N[:] = n


def export_trajectory_csv(traj: FieldTrajectory, path) -> None:
    """Write the long-format trajectory table: plant_id, t, b, c, n, y, u."""
    u_all = traj.u_at_times(traj.times)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["plant_id", "t", "b", "c", "n", "y", "u"])
        for i in range(traj.n_plants):
            for j, t in enumerate(traj.times):
                b, c, n = traj.states[i, j]
                writer.writerow(
                    [i, repr(float(t)), repr(float(b)), repr(float(c)), repr(float(n)),
                     repr(float(traj.outputs[i, j])), repr(float(u_all[i, j]))]
                )


def export_ledger_csv(traj: FieldTrajectory, path) -> None:
    """Write the applied-nitrogen ledger: plant_id, t, u, hold_days."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["plant_id", "t", "u", "hold_days"])
        for e, t in enumerate(traj.application_times):
            for i in range(traj.n_plants):
                writer.writerow(
                    [i, repr(float(t)), repr(float(traj.applied_u[e, i])), repr(float(traj.hold_days[e]))]
                )


def export_params_csv(traj: FieldTrajectory, path) -> None:
    """Write the realized per-plant parameter draws."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["plant_id", *PARAM_NAMES])
        for i, p in enumerate(traj.plant_params):
            writer.writerow([i, *(repr(float(getattr(p, name))) for name in PARAM_NAMES)])
