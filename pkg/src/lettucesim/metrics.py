"""End-of-season statistics and scenario comparison.

Summaries use population variance (the field is a full census, not a
sample) and duration-weighted nitrogen totals from the application
ledger. Aggregation order is fixed so results are identical across
platforms and worker counts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .field import FieldTrajectory, rejection_threshold
from .integrator import EnvSchedule, PiecewiseConstantSignal, Trajectory, integrate
from .model import PlantState


@dataclass(frozen=True)
class ScenarioSummary:
    """Harvest statistics for one simulated scenario."""

    name: str
    n_plants: int
    mean: float
    variance: float
    threshold: float
    fraction_above_threshold: float
    total_nitrogen: float
    five_number: tuple  # (min, q1, median, q3, max)
    hist_edges: tuple
    hist_counts: tuple
    final_outputs: tuple  # kept so reports can re-evaluate against other thresholds

    def to_json(self) -> str:
        doc = {
            "name": self.name,
            "n_plants": self.n_plants,
            "mean": self.mean,
            "variance": self.variance,
            "threshold": self.threshold,
            "fraction_above_threshold": self.fraction_above_threshold,
            "total_nitrogen": self.total_nitrogen,
            "five_number": list(self.five_number),
            "hist_edges": list(self.hist_edges),
            "hist_counts": list(self.hist_counts),
            "final_outputs": list(self.final_outputs),
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSummary":
        doc = json.loads(text)
        return cls(
            name=doc["name"],
            n_plants=int(doc["n_plants"]),
            mean=float(doc["mean"]),
            variance=float(doc["variance"]),
            threshold=float(doc["threshold"]),
            fraction_above_threshold=float(doc["fraction_above_threshold"]),
            total_nitrogen=float(doc["total_nitrogen"]),
            five_number=tuple(doc["five_number"]),
            hist_edges=tuple(doc["hist_edges"]),
            hist_counts=tuple(doc["hist_counts"]),
            final_outputs=tuple(doc["final_outputs"]),
        )


def summarize(
    traj: FieldTrajectory,
    threshold: float = None,
    bins: int = 20,
    name: str = "scenario",
    bin_range: tuple = None,
) -> ScenarioSummary:
    """Reduce a field trajectory to its harvest statistics.

    ``threshold`` defaults to this run's own rejection percentile.
    ``bin_range`` overrides the histogram extent so paired scenarios can
    share bins.
    """
    final = traj.final_outputs
    if final.size == 0:
        raise ValueError("trajectory has no plants")
    if threshold is None:
        threshold = rejection_threshold(final, traj.config.rejection_percentile)
    counts, edges = np.histogram(final, bins=bins, range=bin_range)
    return ScenarioSummary(
        name=name,
        n_plants=int(final.size),
        mean=float(final.mean()),
        variance=float(final.var()),
        threshold=float(threshold),
        fraction_above_threshold=float((final >= threshold).mean()),
        total_nitrogen=traj.total_nitrogen(),
        five_number=tuple(float(q) for q in np.percentile(final, [0, 25, 50, 75, 100])),
        hist_edges=tuple(float(e) for e in edges),
        hist_counts=tuple(int(c) for c in counts),
        final_outputs=tuple(float(y) for y in final),
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Relative statistics of one scenario against a baseline."""

    base_name: str
    other_name: str
    variance_ratio: float
    fraction_delta: float
    nitrogen_ratio: float


def compare(base: ScenarioSummary, other: ScenarioSummary) -> ComparisonReport:
    """Variance, yield-fraction, and nitrogen ratios of `other` against `base`.

    The yield fraction of `other` is re-evaluated against the baseline
    threshold so the delta compares like with like.
    """
    other_fraction = float(
        (np.asarray(other.final_outputs) >= base.threshold).mean()
    )
    return ComparisonReport(
        base_name=base.name,
        other_name=other.name,
        variance_ratio=other.variance / base.variance,
        fraction_delta=other_fraction - base.fraction_above_threshold,
        nitrogen_ratio=other.total_nitrogen / base.total_nitrogen,
    )


@dataclass(frozen=True)
class DoseResponseTable:
    """Final structural biomass on a (parameter set) x (constant dose) grid."""

    u_grid: np.ndarray
    final_b: np.ndarray  # (n_param_sets, n_doses)

    def monotone_rows(self, tol_rel: float = 1e-9) -> np.ndarray:
        """True per row when final biomass never decreases as the dose grows."""
        scale = np.abs(self.final_b).max(axis=1, keepdims=True)
        return np.all(np.diff(self.final_b, axis=1) >= -tol_rel * scale, axis=1)


def dose_response_sweep(
    param_sets,
    u_grid,
    day: float = 50.0,
    env: EnvSchedule = None,
    s0: PlantState = None,
    dt: float = 0.01,
) -> DoseResponseTable:
    """Final biomass at a fixed day under each constant nitrogen level.

    Cooperativity predicts every row is monotone nondecreasing in the
    dose regardless of the parameter perturbations.
    """
    from .field import DEFAULT_INITIAL_STATE, DEFAULT_LIGHT, DEFAULT_TEMPERATURE

    u_grid = np.asarray(u_grid, dtype=float)
    if u_grid.size == 0:
        raise ValueError("dose grid must be nonempty")
    if np.any(np.diff(u_grid) <= 0.0) or np.any(u_grid < 0.0):
        raise ValueError("dose grid must be ascending and nonnegative")
    if env is None:
        env = EnvSchedule.constant(DEFAULT_TEMPERATURE, DEFAULT_LIGHT)
    if s0 is None:
        s0 = DEFAULT_INITIAL_STATE

    final_b = np.empty((len(param_sets), u_grid.size))
    for pi, p in enumerate(param_sets):
        for ui, u in enumerate(u_grid):
            traj = integrate(
                p, s0, PiecewiseConstantSignal.constant(float(u)), env, 0.0, day, dt
            )
            final_b[pi, ui] = traj.states[-1, 0]
    return DoseResponseTable(u_grid=u_grid, final_b=final_b)


def mean_output_curve(traj: FieldTrajectory) -> Trajectory:
    """Field-mean state and output over time, for shape diagnostics."""
    return Trajectory(
        times=traj.times.copy(),
        states=traj.states.mean(axis=0),
        outputs=traj.outputs.mean(axis=0),
    )
