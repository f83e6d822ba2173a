"""Deterministic fixed-step integration of one plant under piecewise-constant inputs.

Classical fourth-order Runge-Kutta with a fixed step keeps runs
bit-reproducible across platforms; the dynamics are smooth and
non-stiff at nominal parameter values, so no adaptive stepping is
needed. Input and environment breakpoints must land on the step grid
so control switching times are exact.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .model import B_EPS, EnvPoint, PlantParams, PlantState, _flux_core, temperature_response

# Maximum misalignment (days) tolerated when snapping times to the step grid.
GRID_TOL = 1e-9


@dataclass(frozen=True)
class PiecewiseConstantSignal:
    """Right-continuous step signal: values[i] holds on [breakpoints[i], breakpoints[i+1]).

    The last value extends to +infinity. Evaluation before the first
    breakpoint is an error.
    """

    breakpoints: tuple
    values: tuple

    def __post_init__(self) -> None:
        bp = tuple(float(t) for t in self.breakpoints)
        vals = tuple(float(x) for x in self.values)
        if len(bp) == 0:
            raise ValueError("signal needs at least one breakpoint")
        if len(vals) != len(bp):
            raise ValueError(f"expected one value per interval ({len(bp)}), got {len(vals)}")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly ascending")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value: float, t_start: float = 0.0) -> "PiecewiseConstantSignal":
        return cls(breakpoints=(t_start,), values=(value,))

    def value_at(self, t: float) -> float:
        idx = bisect_right(self.breakpoints, t) - 1
        if idx < 0:
            raise ValueError(f"signal is undefined before t={self.breakpoints[0]} (asked for {t})")
        return self.values[idx]


@dataclass(frozen=True)
class EnvSchedule:
    """Temperature and light as piecewise-constant signals."""

    temperature: PiecewiseConstantSignal
    light: PiecewiseConstantSignal

    @classmethod
    def constant(cls, T: float, I: float) -> "EnvSchedule":
        if I < 0.0:
            raise ValueError(f"light intensity must be nonnegative, got {I!r}")
        return cls(
            temperature=PiecewiseConstantSignal.constant(T),
            light=PiecewiseConstantSignal.constant(I),
        )

    def value_at(self, t: float) -> EnvPoint:
        return EnvPoint(T=self.temperature.value_at(t), I=self.light.value_at(t))


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution: times (days), states (n_times, 3), shoot outputs (g)."""

    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray

    def final_state(self) -> PlantState:
        b, c, n = self.states[-1]
        return PlantState(float(b), float(c), float(n))

    def final_output(self) -> float:
        return float(self.outputs[-1])

    def state_at_index(self, i: int) -> PlantState:
        b, c, n = self.states[i]
        return PlantState(float(b), float(c), float(n))


def n_steps_exact(span: float, dt: float) -> int:
    """Number of dt steps spanning `span`, requiring near-exact divisibility."""
    steps = int(round(span / dt))
    if steps < 1 or abs(steps * dt - span) > GRID_TOL * max(1.0, abs(span)):
        raise ValueError(f"step dt={dt} does not divide the interval of {span} days")
    return steps


def _check_grid_alignment(signal: PiecewiseConstantSignal, t0: float, t1: float, dt: float, what: str) -> None:
    for bp in signal.breakpoints:
        if bp <= t0 or bp >= t1:
            continue
        snapped = round((bp - t0) / dt) * dt + t0
        if abs(snapped - bp) > GRID_TOL:
            raise ValueError(
                f"{what} breakpoint at t={bp} is off the dt={dt} step grid by {abs(snapped - bp):.3g} days"
            )


def step_values(signal: PiecewiseConstantSignal, times: np.ndarray) -> np.ndarray:
    """Signal value on each step [t_i, t_{i+1}), evaluated at the left endpoints."""
    idx = np.searchsorted(signal.breakpoints, times, side="right") - 1
    if np.any(idx < 0):
        raise ValueError(f"signal is undefined before t={signal.breakpoints[0]}")
    return np.asarray(signal.values, dtype=float)[idx]


def integrate(
    p: PlantParams,
    s0: PlantState,
    u_signal: PiecewiseConstantSignal,
    env: EnvSchedule,
    t0: float,
    t1: float,
    dt: float,
    b_eps: float = B_EPS,
) -> Trajectory:
    """Integrate one plant from t0 to t1 with fixed RK4 steps of size dt.

    After every step (and before every stage evaluation) the state is
    projected onto b >= b_eps, c >= 0, n >= 0; excursions are O(dt^5) so
    projection is benign and keeps the order-preservation property.
    Returns the trajectory sampled at every step boundary. Deterministic:
    identical inputs give bit-identical outputs.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if t1 <= t0:
        raise ValueError(f"t1={t1} must exceed t0={t0}")
    steps = n_steps_exact(t1 - t0, dt)
    _check_grid_alignment(u_signal, t0, t1, dt, "input")
    _check_grid_alignment(env.temperature, t0, t1, dt, "temperature")
    _check_grid_alignment(env.light, t0, t1, dt, "light")

    times = t0 + dt * np.arange(steps + 1)
    u_steps = step_values(u_signal, times[:-1])
    T_steps = step_values(env.temperature, times[:-1])
    I_steps = step_values(env.light, times[:-1])
    if np.any(u_steps < 0.0):
        raise ValueError("nitrogen input signal must be nonnegative")

    states = np.empty((steps + 1, 3))
    k, k_l, k_ml, sigma_c, sigma_n, v, j_c, j_n, psi, theta_c, theta_n = (
        p.k, p.k_l, p.k_ml, p.sigma_c, p.sigma_n, p.v, p.j_c, p.j_n, p.psi, p.theta_c, p.theta_n,
    )
    T_op = p.T_op
    half = 0.5 * dt
    sixth = dt / 6.0

    b, c, n = s0.b, s0.c, s0.n
    if b < b_eps:
        b = b_eps
    states[0] = (b, c, n)

    # Plain python floats in the inner loop: numpy scalars carry real
    # per-operation overhead at this call density.
    u_list = u_steps.tolist()
    T_list = T_steps.tolist()
    I_list = I_steps.tolist()

    for i in range(steps):
        u = u_list[i]
        R = temperature_response(T_list[i], T_op)
        I = I_list[i]

        g, l, cc, cn, ac, an = _flux_core(
            b, c, n, u, R, I, k, k_l, k_ml, sigma_c, sigma_n, v, j_c, j_n, psi, theta_c, theta_n
        )
        kb1 = g - l
        kc1 = ac - cc
        kn1 = an - cn

        b2 = b + half * kb1
        c2 = c + half * kc1
        n2 = n + half * kn1
        if b2 < b_eps:
            b2 = b_eps
        if c2 < 0.0:
            c2 = 0.0
        if n2 < 0.0:
            n2 = 0.0
        g, l, cc, cn, ac, an = _flux_core(
            b2, c2, n2, u, R, I, k, k_l, k_ml, sigma_c, sigma_n, v, j_c, j_n, psi, theta_c, theta_n
        )
        kb2 = g - l
        kc2 = ac - cc
        kn2 = an - cn

        b3 = b + half * kb2
        c3 = c + half * kc2
        n3 = n + half * kn2
        if b3 < b_eps:
            b3 = b_eps
        if c3 < 0.0:
            c3 = 0.0
        if n3 < 0.0:
            n3 = 0.0
        g, l, cc, cn, ac, an = _flux_core(
            b3, c3, n3, u, R, I, k, k_l, k_ml, sigma_c, sigma_n, v, j_c, j_n, psi, theta_c, theta_n
        )
        kb3 = g - l
        kc3 = ac - cc
        kn3 = an - cn

        b4 = b + dt * kb3
        c4 = c + dt * kc3
        n4 = n + dt * kn3
        if b4 < b_eps:
            b4 = b_eps
        if c4 < 0.0:
            c4 = 0.0
        if n4 < 0.0:
            n4 = 0.0
        g, l, cc, cn, ac, an = _flux_core(
            b4, c4, n4, u, R, I, k, k_l, k_ml, sigma_c, sigma_n, v, j_c, j_n, psi, theta_c, theta_n
        )
        kb4 = g - l
        kc4 = ac - cc
        kn4 = an - cn

        b = b + sixth * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4)
        c = c + sixth * (kc1 + 2.0 * kc2 + 2.0 * kc3 + kc4)
        n = n + sixth * (kn1 + 2.0 * kn2 + 2.0 * kn3 + kn4)
        if b < b_eps:
            b = b_eps
        if c < 0.0:
            c = 0.0
        if n < 0.0:
            n = 0.0
        states[i + 1] = (b, c, n)

    outputs = psi * states[:, 0]
    return Trajectory(times=times, states=states, outputs=outputs)
