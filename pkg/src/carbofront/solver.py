"""Time integration of the front-fixed coupled system.

On the unit domain the two fields obey

    w_t = (kappa / s^2) w_yy + (sdot / s) y w_y +- f(u, v)

with a pinned Dirichlet value at y = 0, a flux condition at y = 1 that
absorbs the moving-front kinetics, and the front ODE sdot = psi(u at y=1).

One step solves both fields with theta-weighted implicit transport (two
tridiagonal systems) inside a Picard loop that refreshes the front position,
the front speed, and the lagged reaction/boundary nonlinearities until
self-consistent.  The advection coefficient (sdot/s) y is nonnegative, so
the upwind stencil leans on the node above; together with theta = 1 this
keeps the system matrix an M-matrix and the fields inside the comparison
bounds.  The flux row eliminates a second-order ghost node, which keeps the
matrix tridiagonal.

Numerical hot loops live in _kernels (numba); this module owns the data
model and the run orchestration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import (
    CheckpointLookupError,
    InvalidParameterError,
    NumericalBlowupError,
    ScenarioValidationError,
    StepFailureError,
)
from .model import Scenario, boundary_eval, psi_eval, validate_scenario
from .transform import FixedGrid, to_fixed

__all__ = [
    "State",
    "StepControl",
    "Trajectory",
    "BoundsWitness",
    "INTEGRAL_KEYS",
    "initialize",
    "advance",
    "run",
    "front_speed",
]

# Time-integral accumulators carried along a run (all start at 0):
#   iu_front, iv_front   int u(tau, s(tau)) dtau and the v analogue
#   ig, ih               int g dtau, int h dtau
#   diss_u, diss_v       int int |u_x|^2 dx dtau (physical-domain gradients)
#   react_q              int int |gamma v - u|^(q+1) dx dtau
#   e_*                  boundary/forcing terms of the integrated energy
#                        inequality (see diagnostics.energy_inequality_check)
INTEGRAL_KEYS = (
    "iu_front", "iv_front", "ig", "ih",
    "diss_u", "diss_v", "react_q",
    "e_psi", "e_sprime", "e_gp", "e_hp", "e_phig", "e_phih", "e_front",
)
_NINT = len(INTEGRAL_KEYS)

_RETRY_CAP = 8  # maximum dt halvings for a single step

_NO_TABLE = (np.array([0.0, 1.0]), np.array([0.0, 0.0]))


def _phys_args(scenario: Scenario) -> tuple:
    """Scenario constants in the layout the numba kernels expect."""
    p = scenario.params
    phi = scenario.phi
    m = scenario.truncation_m if scenario.truncation_m is not None else -1.0
    if phi.family == "power_law":
        fam, tab_r, tab_phi = 0, *_NO_TABLE
    else:
        fam, tab_r, tab_phi = 1, np.asarray(phi.r_samples, float), np.asarray(phi.phi_samples, float)
    return (p.kappa0, scenario.psi.p, p.kappa1, p.kappa2, p.gamma, float(m),
            fam, phi.a, phi.b, phi.q, tab_r, tab_phi)


@dataclass(frozen=True)
class State:
    """Discrete snapshot: time, front position/speed, unit-grid fields."""

    t: float
    s: float
    sdot: float
    u_bar: np.ndarray
    v_bar: np.ndarray


@dataclass(frozen=True)
class StepControl:
    """Discretization and iteration parameters for advance/run."""

    dt: float
    picard_tol: float = 1e-8
    picard_max: int = 25
    upwind: bool = True
    theta: float = 1.0

    def __post_init__(self):
        if not self.dt > 0.0:
            raise InvalidParameterError(f"dt must be positive, got {self.dt}")
        if not self.picard_tol > 0.0:
            raise InvalidParameterError(f"picard_tol must be positive, got {self.picard_tol}")
        if self.picard_max < 1:
            raise InvalidParameterError(f"picard_max must be >= 1, got {self.picard_max}")
        if not 0.5 <= self.theta <= 1.0:
            raise InvalidParameterError(f"theta must lie in [0.5, 1], got {self.theta}")


@dataclass
class BoundsWitness:
    """Running extrema of both fields over every accepted step, with locations."""

    u_min: float = np.inf
    u_max: float = -np.inf
    v_min: float = np.inf
    v_max: float = -np.inf
    u_min_at: tuple[float, float] = (0.0, 0.0)  # (t, y)
    u_max_at: tuple[float, float] = (0.0, 0.0)
    v_min_at: tuple[float, float] = (0.0, 0.0)
    v_max_at: tuple[float, float] = (0.0, 0.0)

    def update(self, state: "State", y: np.ndarray) -> None:
        for name, w in (("u", state.u_bar), ("v", state.v_bar)):
            lo_i, hi_i = int(np.argmin(w)), int(np.argmax(w))
            if w[lo_i] < getattr(self, f"{name}_min"):
                setattr(self, f"{name}_min", float(w[lo_i]))
                setattr(self, f"{name}_min_at", (state.t, float(y[lo_i])))
            if w[hi_i] > getattr(self, f"{name}_max"):
                setattr(self, f"{name}_max", float(w[hi_i]))
                setattr(self, f"{name}_max_at", (state.t, float(y[hi_i])))


@dataclass
class Trajectory:
    """Checkpoint time series plus running integrals and sparse snapshots.

    Checkpoint arrays are aligned: row k describes the state at t[k].  The
    ``integrals`` matrix holds the accumulators of INTEGRAL_KEYS sampled at
    the same instants.  ``moment`` is int_0^s x (u + v) dx, ``l2_ug`` and
    ``l2_vh`` are int_0^s |u - g(t)|^2 dx and the v/h analogue; all spatial
    quadrature is trapezoid on the unit grid.
    """

    scenario: Scenario
    grid: FixedGrid
    t: np.ndarray
    s: np.ndarray
    sdot: np.ndarray
    u_min: np.ndarray
    u_max: np.ndarray
    v_min: np.ndarray
    v_max: np.ndarray
    u_front: np.ndarray
    v_front: np.ndarray
    moment: np.ndarray
    l2_ug: np.ndarray
    l2_vh: np.ndarray
    integrals: np.ndarray  # shape (len(t), len(INTEGRAL_KEYS))
    snapshots: list[State]
    worst: BoundsWitness
    has_integrals: bool = True
    complete: bool = True
    failure: str = ""

    def integral(self, key: str) -> np.ndarray:
        if not self.has_integrals:
            raise InvalidParameterError("this trajectory was produced without integral tracking")
        return self.integrals[:, INTEGRAL_KEYS.index(key)]

    def index_of_time(self, t: float) -> int:
        hits = np.nonzero(np.isclose(self.t, t, rtol=1e-9, atol=1e-9))[0]
        if hits.size == 0:
            raise CheckpointLookupError(f"t={t} is not a checkpoint time")
        return int(hits[0])

    def __len__(self) -> int:
        return len(self.t)


def front_speed(state: State, psi) -> float:
    """Kinetic front speed psi(u at y=1); equals state.sdot after any advance."""
    return psi_eval(psi, state.u_bar[-1])


def _require_valid(scenario: Scenario) -> None:
    report = validate_scenario(scenario)
    if not report.ok:
        raise ScenarioValidationError(report.failures)


def initialize(scenario: Scenario, grid: FixedGrid, control: StepControl) -> State:
    """Build the t=0 state: transformed initial profiles, pinned boundary nodes."""
    _require_valid(scenario)
    init = scenario.initial
    u_bar = to_fixed(init.sample_points("u"), init.u0_samples, init.s0, grid)
    v_bar = to_fixed(init.sample_points("v"), init.v0_samples, init.s0, grid)
    g0, h0 = boundary_eval(scenario.boundary, 0.0)
    u_bar[0], v_bar[0] = g0, h0
    sdot = psi_eval(scenario.psi, u_bar[-1])
    return State(t=0.0, s=init.s0, sdot=sdot, u_bar=u_bar, v_bar=v_bar)


def advance(state: State, scenario: Scenario, control: StepControl,
            dt: Optional[float] = None) -> State:
    """One accepted step of size dt (defaults to control.dt).

    Picard loop: seed the new front explicitly, then repeatedly (a) rebuild
    both implicit systems with the iterate's front position/speed and lagged
    reaction and kinetic terms, (b) solve, (c) recompute the front from the
    fresh boundary value, until the relative change of (s, u, v) drops below
    picard_tol.  Raises StepFailureError when the cap is hit and
    NumericalBlowupError on non-finite values.
    """
    dt = control.dt if dt is None else dt
    t_new = state.t + dt
    g_new, h_new = boundary_eval(scenario.boundary, t_new)

    u_new, v_new, s_new, status, change, iters = K.step_kernel(
        state.u_bar, state.v_bar, state.s, state.sdot,
        dt, control.theta, control.upwind,
        *_phys_args(scenario),
        float(g_new), float(h_new), control.picard_tol, control.picard_max,
    )
    if status == K.STEP_BLOWUP:
        raise NumericalBlowupError(t_new)
    if status == K.STEP_NO_CONVERGENCE:
        raise StepFailureError(change, iters)

    sdot_new = psi_eval(scenario.psi, u_new[-1])  # == (s_new - s)/dt by the last recompute
    return State(t=t_new, s=s_new, sdot=sdot_new, u_bar=u_new, v_bar=v_new)


# ---------------------------------------------------------------------------
# trajectory assembly
# ---------------------------------------------------------------------------

class _TrajectoryBuilder:
    def __init__(self, scenario: Scenario, grid: FixedGrid, track_integrals: bool = True,
                 snapshot_stride: int = 1):
        self.scenario = scenario
        self.grid = grid
        self.track = track_integrals
        self.stride = max(1, snapshot_stride)
        self.rows: list[tuple] = []
        self.integral_rows: list[np.ndarray] = []
        self.snapshots: list[State] = []
        self.acc = np.zeros(_NINT)
        self.prev_integrands: Optional[np.ndarray] = None
        self._last_scalars: Optional[np.ndarray] = None
        self.worst = BoundsWitness()
        self._y = np.asarray(grid.nodes)
        self._phys = _phys_args(scenario)

    def _measure(self, state: State):
        bd = self.scenario.boundary
        g_t, h_t = boundary_eval(bd, state.t)
        return K.measure_kernel(
            state.u_bar, state.v_bar, state.s, state.sdot,
            float(g_t), float(h_t),
            float(bd.g.derivative(state.t)), float(bd.h.derivative(state.t)),
            bd.g_star, bd.h_star, *self._phys,
        )

    def observe_initial(self, state: State) -> None:
        integrands, scalars = self._measure(state)
        self.prev_integrands = integrands
        self._last_scalars = scalars
        self.worst.update(state, self._y)
        self._record(state)

    def observe_step(self, state: State, dt: float) -> None:
        integrands, self._last_scalars = self._measure(state)
        if self.track:
            self.acc += 0.5 * dt * (self.prev_integrands + integrands)
        self.prev_integrands = integrands
        self.worst.update(state, self._y)

    def checkpoint(self, state: State) -> None:
        self._record(state)

    def _record(self, state: State) -> None:
        self.rows.append((state.t, state.s, state.sdot) + tuple(self._last_scalars))
        self.integral_rows.append(self.acc.copy())
        if (len(self.rows) - 1) % self.stride == 0:
            self.snapshots.append(State(state.t, state.s, state.sdot,
                                        state.u_bar.copy(), state.v_bar.copy()))

    @property
    def last_checkpoint_t(self) -> float:
        return self.rows[-1][0] if self.rows else -np.inf

    def finalize(self, complete: bool = True, failure: str = "") -> Trajectory:
        cols = np.array(self.rows, dtype=float).T
        return Trajectory(
            scenario=self.scenario, grid=self.grid,
            t=cols[0], s=cols[1], sdot=cols[2],
            u_min=cols[3], u_max=cols[4], v_min=cols[5], v_max=cols[6],
            u_front=cols[7], v_front=cols[8],
            moment=cols[9], l2_ug=cols[10], l2_vh=cols[11],
            integrals=np.array(self.integral_rows),
            snapshots=self.snapshots, worst=self.worst,
            has_integrals=self.track, complete=complete, failure=failure,
        )


def run(scenario: Scenario, grid: FixedGrid, control: StepControl, horizon: float,
        checkpoint_every: float = 1.0, snapshot_stride: int = 1) -> Trajectory:
    """Advance from t=0 to the horizon, recording checkpoints and integrals.

    On a Picard step failure the step is retried with halved dt (up to
    8 halvings); the step size then relaxes back toward the nominal value.
    Exhausting the retries ends the run early with the partial trajectory
    flagged incomplete.  Blowups propagate.
    """
    if horizon < 0.0:
        raise InvalidParameterError(f"horizon must be >= 0, got {horizon}")
    if checkpoint_every <= 0.0:
        raise InvalidParameterError(f"checkpoint_every must be positive, got {checkpoint_every}")

    state = initialize(scenario, grid, control)
    builder = _TrajectoryBuilder(scenario, grid, snapshot_stride=snapshot_stride)
    builder.observe_initial(state)

    dt_nominal = control.dt
    dt = dt_nominal
    next_cp = checkpoint_every
    eps = 1e-12 * max(1.0, horizon)
    complete, failure = True, ""

    while state.t < horizon - eps:
        dt_eff = min(dt, horizon - state.t)
        halvings = 0
        while True:
            try:
                new_state = advance(state, scenario, control, dt=dt_eff)
                break
            except StepFailureError as err:
                halvings += 1
                if halvings > _RETRY_CAP:
                    complete = False
                    failure = (f"step at t={state.t:.6g} failed after "
                               f"{_RETRY_CAP} dt halvings: {err}")
                    new_state = None
                    break
                dt_eff *= 0.5
        if new_state is None:
            break

        builder.observe_step(new_state, new_state.t - state.t)
        state = new_state
        dt = min(dt_eff * 2.0, dt_nominal)

        if state.t >= next_cp - eps:
            builder.checkpoint(state)
            while next_cp <= state.t + eps:
                next_cp += checkpoint_every

    if builder.last_checkpoint_t < state.t - eps:
        builder.checkpoint(state)
    return builder.finalize(complete=complete, failure=failure)
