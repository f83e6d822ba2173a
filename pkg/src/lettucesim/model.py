"""Single-plant lettuce growth model.

The plant is reduced to three compartments, all in grams of dry mass:
structural biomass ``b``, a carbon store ``c``, and a nitrogen store
``n``. Soil nitrogen availability ``u`` is the controllable input,
temperature ``T`` and light ``I`` are environmental disturbances, and
the marketable output is the shoot portion ``psi * b``. All rates are
per day.

The right-hand side is assembled from six flux terms: structural
growth, litter loss, carbon and nitrogen consumption by growth,
photosynthesis, and root nitrogen uptake. On the positive orthant the
system is cooperative: every off-diagonal entry of the state Jacobian
and every entry of the input Jacobian is nonnegative, so raising the
nitrogen input can never lower the output. ``check_cooperativity``
verifies this numerically on sampled states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Numerical floor for structural biomass; several fluxes divide by b.
B_EPS = 1e-6

PARAM_NAMES = (
    "k",
    "k_l",
    "k_ml",
    "sigma_c",
    "sigma_n",
    "v",
    "j_c",
    "j_n",
    "psi",
    "T_op",
    "theta_c",
    "theta_n",
)


@dataclass(frozen=True)
class PlantParams:
    """Growth parameters for one plant.

    Attributes:
        k: structural growth rate (1/day).
        k_l: litter loss rate (1/day).
        k_ml: litter saturation mass (g).
        sigma_c: carbon assimilation rate per light unit per day.
        sigma_n: nitrogen assimilation rate (1/(g day)).
        v: self-shading saturation mass (g).
        j_c: carbon product-inhibition constant (dimensionless).
        j_n: nitrogen product-inhibition constant (dimensionless).
        psi: shoot fraction of structural biomass, in (0, 1).
        T_op: optimal temperature (deg C).
        theta_c: carbon contribution rate (dimensionless).
        theta_n: nitrogen contribution rate (dimensionless).

    All fields must be strictly positive; invalid values raise
    ``ValueError`` on construction.
    """

    k: float
    k_l: float
    k_ml: float
    sigma_c: float
    sigma_n: float
    v: float
    j_c: float
    j_n: float
    psi: float
    T_op: float
    theta_c: float
    theta_n: float

    def __post_init__(self) -> None:
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ValueError(f"parameter {name} must be a finite number, got {value!r}")
            if value <= 0.0:
                raise ValueError(f"parameter {name} must be strictly positive, got {value!r}")
        if not 0.0 < self.psi < 1.0:
            raise ValueError(f"psi must lie strictly inside (0, 1), got {self.psi!r}")

    def as_array(self) -> np.ndarray:
        """Parameter values as a 12-vector in canonical field order."""
        return np.array([getattr(self, name) for name in PARAM_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values) -> "PlantParams":
        vals = [float(x) for x in values]
        if len(vals) != len(PARAM_NAMES):
            raise ValueError(f"expected {len(PARAM_NAMES)} parameter values, got {len(vals)}")
        return cls(**dict(zip(PARAM_NAMES, vals)))


# Nominal iceberg-lettuce parameter set used by the shipped scenarios.
NOMINAL_PARAMS = PlantParams(
    k=1000.0,
    k_l=0.149,
    k_ml=0.0221,
    sigma_c=0.260,
    sigma_n=70.0,
    v=0.0620,
    j_c=0.144,
    j_n=0.115,
    psi=0.718,
    T_op=22.0,
    theta_c=6.89e-2,
    theta_n=5.57e-6,
)


@dataclass(frozen=True)
class PlantState:
    """Compartment state (b, c, n) in grams of dry mass."""

    b: float
    c: float
    n: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.b) or self.b < B_EPS:
            raise ValueError(f"b must be >= {B_EPS}, got {self.b!r}")
        if not math.isfinite(self.c) or self.c < 0.0:
            raise ValueError(f"c must be nonnegative, got {self.c!r}")
        if not math.isfinite(self.n) or self.n < 0.0:
            raise ValueError(f"n must be nonnegative, got {self.n!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.b, self.c, self.n], dtype=float)


@dataclass(frozen=True)
class EnvPoint:
    """Environmental disturbances: temperature (deg C) and light intensity."""

    T: float
    I: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.T):
            raise ValueError(f"T must be finite, got {self.T!r}")
        if not math.isfinite(self.I) or self.I < 0.0:
            raise ValueError(f"I must be nonnegative, got {self.I!r}")


def temperature_response(T: float, T_op: float) -> float:
    """Unit triangle response centered on T_op, clamped to [0, 1].

    The raw triangle goes negative outside (0, 2*T_op); clamping at zero
    keeps growth from reversing at extreme temperatures.
    """
    return max(0.0, (T_op - abs(T_op - T)) / T_op)


def _flux_core(b, c, n, u, R, I, k, k_l, k_ml, sigma_c, sigma_n, v, j_c, j_n, psi, theta_c, theta_n):
    """All six fluxes at once from raw values.

    Pure arithmetic with no branching so the same code serves python
    floats (scalar integration) and numpy arrays (whole-field
    integration) with bit-identical results. ``R`` is the precomputed
    temperature response; callers must guarantee b >= B_EPS.

    Returns (growth, litter, consume_c, consume_n, assim_c, assim_n).
    """
    shoot = psi * b
    root = (1.0 - psi) * b
    growth = k * R * (c / b) * (n / b) * b
    litter = k_l * b / (1.0 + k_ml / b)
    consume_c = theta_c * k * R * c
    consume_n = theta_n * k * R * n
    assim_c = sigma_c * shoot * I / ((1.0 + shoot / v) * (1.0 + c / (shoot * j_c)))
    assim_n = sigma_n * root * u / ((1.0 + root / v) * (1.0 + n / (root * j_n)))
    return growth, litter, consume_c, consume_n, assim_c, assim_n


def _param_values(p: PlantParams) -> tuple:
    """Positional parameter tuple matching the _flux_core signature tail."""
    return (p.k, p.k_l, p.k_ml, p.sigma_c, p.sigma_n, p.v, p.j_c, p.j_n, p.psi, p.theta_c, p.theta_n)


def _require_b(b: float) -> None:
    if b < B_EPS:
        raise ValueError(f"b={b!r} is below the numerical floor {B_EPS}")


def growth_flux(s: PlantState, T: float, p: PlantParams) -> float:
    """Structural growth rate (g/day), proportional to both store concentrations."""
    _require_b(s.b)
    R = temperature_response(T, p.T_op)
    return _flux_core(s.b, s.c, s.n, 0.0, R, 0.0, *_param_values(p))[0]


def litter_loss(b: float, p: PlantParams) -> float:
    """Biomass loss rate (g/day); linear for large b, vanishing as b -> 0."""
    if b < 0.0:
        raise ValueError(f"b must be nonnegative, got {b!r}")
    if b == 0.0:
        return 0.0
    return p.k_l * b / (1.0 + p.k_ml / b)


def carbon_consumption(s: PlantState, T: float, p: PlantParams) -> float:
    """Carbon drawn from the store by structural growth (g/day)."""
    _require_b(s.b)
    R = temperature_response(T, p.T_op)
    return _flux_core(s.b, s.c, s.n, 0.0, R, 0.0, *_param_values(p))[2]


def nitrogen_consumption(s: PlantState, T: float, p: PlantParams) -> float:
    """Nitrogen drawn from the store by structural growth (g/day)."""
    _require_b(s.b)
    R = temperature_response(T, p.T_op)
    return _flux_core(s.b, s.c, s.n, 0.0, R, 0.0, *_param_values(p))[3]


def photosynthesis(s: PlantState, I: float, p: PlantParams) -> float:
    """Carbon inflow (g/day): proportional to light and shoot mass, with
    self-shading and store-inhibition saturation."""
    _require_b(s.b)
    if I < 0.0:
        raise ValueError(f"light intensity must be nonnegative, got {I!r}")
    return _flux_core(s.b, s.c, s.n, 0.0, 1.0, I, *_param_values(p))[4]


def nitrogen_uptake(s: PlantState, u: float, p: PlantParams) -> float:
    """Nitrogen inflow (g/day): proportional to soil availability and root
    mass, with the same two saturation mechanisms as photosynthesis."""
    _require_b(s.b)
    if u < 0.0:
        raise ValueError(f"nitrogen availability must be nonnegative, got {u!r}")
    return _flux_core(s.b, s.c, s.n, u, 1.0, 0.0, *_param_values(p))[5]


def rhs(s: PlantState, u: float, env: EnvPoint, p: PlantParams) -> np.ndarray:
    """Time derivative (db, dc, dn) in g/day."""
    _require_b(s.b)
    if u < 0.0:
        raise ValueError(f"nitrogen availability must be nonnegative, got {u!r}")
    R = temperature_response(env.T, p.T_op)
    growth, litter, consume_c, consume_n, assim_c, assim_n = _flux_core(
        s.b, s.c, s.n, u, R, env.I, *_param_values(p)
    )
    return np.array([growth - litter, assim_c - consume_c, assim_n - consume_n])


def output(s: PlantState, p: PlantParams) -> float:
    """Shoot dry biomass y = psi * b (g), the marketable output."""
    return p.psi * s.b


def output_matrix(p: PlantParams) -> np.ndarray:
    """Row vector mapping state to output: y = [psi, 0, 0] @ (b, c, n)."""
    return np.array([p.psi, 0.0, 0.0])


def jacobian_state(s: PlantState, u: float, env: EnvPoint, p: PlantParams) -> np.ndarray:
    """Analytic 3x3 Jacobian of rhs with respect to (b, c, n)."""
    _require_b(s.b)
    b, c, n = s.b, s.c, s.n
    R = temperature_response(env.T, p.T_op)
    kR = p.k * R
    gamma = 1.0 - p.psi

    # Row b: growth minus litter.
    dG_db = -kR * c * n / (b * b)
    dL_db = p.k_l * b * (b + 2.0 * p.k_ml) / (b + p.k_ml) ** 2
    dG_dc = kR * n / b
    dG_dn = kR * c / b

    # Row c: photosynthesis minus carbon consumption. Written from the
    # cleared form A_c = sigma_c*I*v*j_c*psi^2*b^2 / ((v+psi*b)(c+j_c*psi*b)).
    v_ = p.v
    shoot = p.psi * b
    den_c = v_ + shoot
    inh_c = c + p.j_c * shoot
    dAc_db = (
        p.sigma_c * env.I * v_ * p.j_c * p.psi**2 * b
        * (2.0 * c * v_ + b * c * p.psi + b * v_ * p.j_c * p.psi)
        / (inh_c**2 * den_c**2)
    )
    dAc_dc = -p.sigma_c * env.I * v_ * p.j_c * p.psi**2 * b * b / (den_c * inh_c**2)

    # Row n: uptake minus nitrogen consumption, same structure with the
    # root fraction gamma and the input u in place of psi and I.
    root = gamma * b
    den_n = v_ + root
    inh_n = n + p.j_n * root
    dAn_db = (
        p.sigma_n * u * v_ * p.j_n * gamma**2 * b
        * (2.0 * n * v_ + b * n * gamma + b * v_ * p.j_n * gamma)
        / (inh_n**2 * den_n**2)
    )
    dAn_dn = -p.sigma_n * u * v_ * p.j_n * gamma**2 * b * b / (den_n * inh_n**2)

    return np.array(
        [
            [dG_db - dL_db, dG_dc, dG_dn],
            [dAc_db, dAc_dc - p.theta_c * kR, 0.0],
            [dAn_db, 0.0, dAn_dn - p.theta_n * kR],
        ]
    )


def jacobian_input(s: PlantState, u: float, env: EnvPoint, p: PlantParams) -> np.ndarray:
    """Analytic gradient of rhs with respect to the nitrogen input u.

    Uptake is linear in u, so the only nonzero entry is A_n / u.
    """
    _require_b(s.b)
    gamma = 1.0 - p.psi
    root = gamma * s.b
    dAn_du = p.sigma_n * p.v * p.j_n * gamma**2 * s.b * s.b / ((p.v + root) * (s.n + p.j_n * root))
    return np.array([0.0, 0.0, dAn_du])


@dataclass(frozen=True)
class CooperativityReport:
    """Result of a sampled monotonicity check.

    ``violations`` holds up to ``max_recorded`` offending samples as
    (kind, state, u, value) tuples; ``violation_count`` is the full
    count. ``min_offdiagonal`` is the smallest off-diagonal state
    Jacobian entry seen, a margin indicator for the sign conditions.
    """

    sample_count: int
    seed: int
    violation_count: int
    violations: tuple
    min_offdiagonal: float
    min_input_gradient: float
    min_flux: float
    output_map_nonnegative: bool

    @property
    def passed(self) -> bool:
        return self.violation_count == 0 and self.output_map_nonnegative


# Off-diagonal positions of the 3x3 state Jacobian.
_OFF_DIAGONAL = ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))

_FLUX_LABELS = ("growth", "litter", "consume_c", "consume_n", "assim_c", "assim_n")


def check_cooperativity(
    p: PlantParams,
    env: EnvPoint,
    sample_count: int = 1000,
    seed: int = 0,
    state_box=((1e-4, 1e3), (1e-8, 1e2), (1e-8, 1e2)),
    u_box=(1e-8, 1.0),
    max_recorded: int = 100,
) -> CooperativityReport:
    """Sample states log-uniformly and test the monotonicity sign conditions.

    Checks, at every sample: (i) off-diagonal state-Jacobian entries are
    nonnegative, (ii) the input Jacobian is elementwise nonnegative,
    (iii) the output map is nonnegative, and (iv) all six fluxes are
    nonnegative. Violations are reported, never raised, so the check can
    be pointed at deliberately corrupted parameter sets.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    rng = np.random.default_rng(seed)
    lo = np.log([state_box[0][0], state_box[1][0], state_box[2][0], u_box[0]])
    hi = np.log([state_box[0][1], state_box[1][1], state_box[2][1], u_box[1]])
    draws = np.exp(rng.uniform(lo, hi, size=(sample_count, 4)))

    violations = []
    violation_count = 0
    min_offdiag = math.inf
    min_dinput = math.inf
    min_flux = math.inf
    R = temperature_response(env.T, p.T_op)
    pv = _param_values(p)

    def record(kind, state, u, value):
        nonlocal violation_count
        violation_count += 1
        if len(violations) < max_recorded:
            violations.append((kind, state, u, value))

    for b, c, n, u in draws:
        b = max(b, B_EPS)
        state = PlantState(b, c, n)
        J = jacobian_state(state, u, env, p)
        for i, j in _OFF_DIAGONAL:
            entry = J[i, j]
            min_offdiag = min(min_offdiag, entry)
            if entry < 0.0:
                record(f"offdiagonal[{i},{j}]", (b, c, n), u, entry)
        Ju = jacobian_input(state, u, env, p)
        low = float(Ju.min())
        min_dinput = min(min_dinput, low)
        if low < 0.0:
            record("input_gradient", (b, c, n), u, low)
        for label, flux in zip(_FLUX_LABELS, _flux_core(b, c, n, u, R, env.I, *pv)):
            min_flux = min(min_flux, flux)
            if flux < 0.0:
                record(f"flux:{label}", (b, c, n), u, flux)

    output_ok = bool(np.all(output_matrix(p) >= 0.0))
    if not output_ok:
        record("output_map", None, None, float(output_matrix(p).min()))

    return CooperativityReport(
        sample_count=sample_count,
        seed=seed,
        violation_count=violation_count,
        violations=tuple(violations),
        min_offdiagonal=min_offdiag,
        min_input_gradient=min_dinput,
        min_flux=min_flux,
        output_map_nonnegative=output_ok,
    )
