"""Physical model for the 1D carbonation front problem.

Two diffusing CO2 concentrations u (dissolved) and v (gaseous) exchange mass
through a monotone nonlinearity applied to the disequilibrium gamma*v - u,
while the carbonated region [0, s(t)] grows with front speed
psi(u at the front) = kappa0 * (positive part)^p.

This module owns the data objects (constants, nonlinearities, boundary and
initial data), their admissibility checks, and a flat key=value scenario
file format.  Everything is immutable after construction; solvers refuse
scenarios that fail :func:`validate_scenario`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "ModelParams",
    "FrontSpeedPsi",
    "NonlinearityPhi",
    "ExpProfile",
    "BoundaryData",
    "InitialData",
    "Scenario",
    "AssumptionFailure",
    "ValidationReport",
    "psi_eval",
    "phi_eval",
    "phi_m_eval",
    "f_eval",
    "boundary_eval",
    "comparison_bounds",
    "validate_scenario",
    "scenario_to_text",
    "scenario_from_text",
]

# Relative tolerance for the Henry equilibrium compatibility gamma*h_star == g_star.
_HENRY_RTOL = 1e-12
# Sign-symmetric sampling grid used to spot-check nonlinearity properties.
_PHI_SAMPLE_GRID = np.linspace(-10.0, 10.0, 201)


@dataclass(frozen=True)
class ModelParams:
    """Physical constants: front-speed coefficient, diffusivities, Henry coefficient.

    kappa0 = 0 is admitted so frozen-front studies can run, but it voids the
    sqrt-t law hypotheses; validation reports it as a warning, not a failure.
    """

    kappa0: float
    kappa1: float
    kappa2: float
    gamma: float


@dataclass(frozen=True)
class FrontSpeedPsi:
    """Front kinetics psi(r) = kappa0 * (max(r, 0))**p, p >= 1."""

    params: ModelParams
    p: float = 1.0


@dataclass(frozen=True)
class NonlinearityPhi:
    """Monotone exchange nonlinearity.

    Built-in family (``family="power_law"``)::

        phi(r) = a*r + b*sign(r)*|r|**q      a >= 0, b > 0, q >= 1

    which is odd, increasing, locally Lipschitz, and coercive with
    phi(r)*r >= b*|r|**(1+q).  A tabulated monotone function may be supplied
    instead (``family="tabulated"`` with ``r_samples``/``phi_samples``); its
    exponent q and coercivity constant c_phi are caller-asserted and only
    spot-checked by validation.
    """

    family: str = "power_law"
    a: float = 0.0
    b: float = 1.0
    q: float = 1.0
    r_samples: Optional[np.ndarray] = None
    phi_samples: Optional[np.ndarray] = None
    c_phi_assert: Optional[float] = None

    @property
    def c_phi(self) -> float:
        if self.family == "power_law":
            return self.b
        if self.c_phi_assert is None:
            raise InvalidParameterError("tabulated nonlinearity needs an asserted c_phi")
        return self.c_phi_assert


@dataclass(frozen=True)
class ExpProfile:
    """Time profile c_inf + amp * exp(-lam * t) with asymptote c_inf."""

    cinf: float
    amp: float = 0.0
    lam: float = 0.0

    def value(self, t):
        return self.cinf + self.amp * np.exp(-self.lam * np.asarray(t, dtype=float))

    def derivative(self, t):
        return -self.lam * self.amp * np.exp(-self.lam * np.asarray(t, dtype=float))

    @property
    def asymptote(self) -> float:
        return self.cinf if (self.lam > 0.0 or self.amp == 0.0) else self.cinf + self.amp

    @property
    def inf(self) -> float:
        # monotone in t: extremes sit at t=0 or t=inf
        return min(self.cinf + self.amp, self.asymptote)

    @property
    def sup(self) -> float:
        return max(self.cinf + self.amp, self.asymptote)


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet data g (dissolved) and h (gaseous) at x = 0."""

    g: ExpProfile
    h: ExpProfile

    @property
    def g_star(self) -> float:
        return self.g.asymptote

    @property
    def h_star(self) -> float:
        return self.h.asymptote

    @property
    def g0(self) -> float:
        """Certified lower bound of g over [0, inf)."""
        return self.g.inf


@dataclass(frozen=True)
class InitialData:
    """Initial front position and nonnegative sampled profiles on [0, s0].

    Samples sit at equispaced abscissae ``linspace(0, s0, len(samples))`` and
    are interpolated piecewise linearly.  A single sample means a constant
    profile.
    """

    s0: float
    u0_samples: np.ndarray
    v0_samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u0_samples", np.atleast_1d(np.asarray(self.u0_samples, dtype=float)))
        object.__setattr__(self, "v0_samples", np.atleast_1d(np.asarray(self.v0_samples, dtype=float)))

    def sample_points(self, which: str) -> np.ndarray:
        n = len(self.u0_samples if which == "u" else self.v0_samples)
        if n == 1:
            return np.array([0.0])
        return np.linspace(0.0, self.s0, n)

    def u0(self, x):
        return np.interp(x, self.sample_points("u"), self.u0_samples)

    def v0(self, x):
        return np.interp(x, self.sample_points("v"), self.v0_samples)

    @property
    def sup_u0(self) -> float:
        return float(np.max(self.u0_samples))

    @property
    def sup_v0(self) -> float:
        return float(np.max(self.v0_samples))


@dataclass(frozen=True)
class Scenario:
    """A full problem instance; pass through validate_scenario before solving."""

    params: ModelParams
    psi: FrontSpeedPsi
    phi: NonlinearityPhi
    boundary: BoundaryData
    initial: InitialData
    truncation_m: Optional[float] = None

    def with_truncation(self, m: Optional[float]) -> "Scenario":
        return replace(self, truncation_m=m)


# ---------------------------------------------------------------------------
# pointwise evaluations
# ---------------------------------------------------------------------------

def psi_eval(psi: FrontSpeedPsi, r):
    """Front speed kappa0 * (positive part of r)**p; always >= 0."""
    rp = np.maximum(np.asarray(r, dtype=float), 0.0)
    out = psi.params.kappa0 * rp**psi.p
    return float(out) if np.isscalar(r) or np.ndim(r) == 0 else out


def phi_eval(phi: NonlinearityPhi, r):
    """Evaluate the exchange nonlinearity at (array of) disequilibrium r."""
    r = np.asarray(r, dtype=float)
    if phi.family == "power_law":
        out = phi.a * r + phi.b * np.sign(r) * np.abs(r) ** phi.q
    elif phi.family == "tabulated":
        out = np.interp(r, phi.r_samples, phi.phi_samples)
    else:
        raise InvalidParameterError(f"unknown nonlinearity family {phi.family!r}")
    return float(out) if np.ndim(out) == 0 else out


def phi_m_eval(phi: NonlinearityPhi, m: float, r):
    """Cutoff version: phi frozen at phi(+-m) outside [-m, m].

    Agrees with phi exactly on [-m, m]; requires m > 0.
    """
    if not m > 0.0:
        raise InvalidParameterError(f"truncation cutoff must be positive, got {m}")
    return phi_eval(phi, np.clip(r, -m, m))


def f_eval(scenario: Scenario, u, v):
    """Exchange rate f(u, v) = phi(gamma*v - u), truncated if the scenario asks."""
    r = scenario.params.gamma * np.asarray(v, dtype=float) - np.asarray(u, dtype=float)
    if scenario.truncation_m is not None:
        return phi_m_eval(scenario.phi, scenario.truncation_m, r)
    return phi_eval(scenario.phi, r)


def boundary_eval(boundary: BoundaryData, t: float):
    """Dirichlet pair (g(t), h(t)); t must be >= 0."""
    if np.any(np.asarray(t) < 0.0):
        raise InvalidParameterError(f"boundary data queried at negative time t={t}")
    return boundary.g.value(t), boundary.h.value(t)


def comparison_bounds(scenario: Scenario) -> tuple[float, float]:
    """Smallest constant pair (u_star, v_star) with u_star = gamma*v_star that
    dominates the initial profiles and the boundary data.

    Solutions stay trapped in [0, u_star] x [0, v_star]; the pair feeds the
    bounds diagnostic and the truncation-irrelevance threshold.
    """
    gamma = scenario.params.gamma
    u_star = max(
        scenario.initial.sup_u0,
        scenario.boundary.g.sup,
        gamma * scenario.initial.sup_v0,
        gamma * scenario.boundary.h.sup,
    )
    return u_star, u_star / gamma


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionFailure:
    assumption: str  # "A1" | "A2" | "A3" | "params"
    message: str
    value: Optional[float] = None

    def __str__(self):
        tail = f" (value {self.value!r})" if self.value is not None else ""
        return f"({self.assumption}) {self.message}{tail}"


@dataclass(frozen=True)
class ValidationReport:
    failures: tuple[AssumptionFailure, ...]
    warnings: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        if self.ok:
            lines = ["valid"]
        else:
            lines = [str(f) for f in self.failures]
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines)


def _check_phi(phi: NonlinearityPhi, fails: list[AssumptionFailure]) -> None:
    if phi.family == "power_law":
        if phi.a < 0.0:
            fails.append(AssumptionFailure("A1", "linear coefficient a must be >= 0", phi.a))
        if not phi.b > 0.0:
            fails.append(AssumptionFailure("A1", "power coefficient b must be > 0", phi.b))
        if not phi.q >= 1.0:
            fails.append(AssumptionFailure("A1", "exponent q must be >= 1", phi.q))
        if fails:
            return
    elif phi.family == "tabulated":
        if phi.r_samples is None or phi.phi_samples is None:
            fails.append(AssumptionFailure("A1", "tabulated nonlinearity needs r/phi samples"))
            return
        if not phi.q >= 1.0:
            fails.append(AssumptionFailure("A1", "exponent q must be >= 1", phi.q))
        if phi.c_phi_assert is None or not phi.c_phi_assert > 0.0:
            fails.append(AssumptionFailure("A1", "tabulated nonlinearity needs c_phi > 0", phi.c_phi_assert))
        if np.any(np.diff(phi.phi_samples) < 0.0):
            fails.append(AssumptionFailure("A1", "tabulated values must be nondecreasing"))
        if fails:
            return
    else:
        fails.append(AssumptionFailure("A1", f"unknown nonlinearity family {phi.family!r}"))
        return

    # sampled spot-checks on a sign-symmetric grid
    vals = phi_eval(phi, _PHI_SAMPLE_GRID)
    if abs(phi_eval(phi, 0.0)) > 1e-12:
        fails.append(AssumptionFailure("A1", "phi(0) must vanish", phi_eval(phi, 0.0)))
    if np.any(np.diff(vals) < -1e-12):
        fails.append(AssumptionFailure("A1", "phi must be nondecreasing"))
    coercive = vals * _PHI_SAMPLE_GRID - phi.c_phi * np.abs(_PHI_SAMPLE_GRID) ** (1.0 + phi.q)
    worst = float(np.min(coercive))
    if worst < -1e-12:
        fails.append(AssumptionFailure("A1", "coercivity phi(r)*r >= c_phi*|r|^(1+q) fails", worst))


def validate_scenario(scenario: Scenario) -> ValidationReport:
    """Check every admissibility condition on the scenario's data.

    Returns a structured report instead of raising; each failure names the
    violated assumption (A1: nonlinearity, A2: boundary data, A3: initial
    data, params: constant ranges) together with the offending value.
    """
    fails: list[AssumptionFailure] = []
    warns: list[str] = []
    p = scenario.params

    if p.kappa0 < 0.0:
        fails.append(AssumptionFailure("params", "kappa0 must be >= 0", p.kappa0))
    elif p.kappa0 == 0.0:
        warns.append("kappa0 = 0 freezes the front; sqrt-t law hypotheses are void")
    if not p.kappa1 > 0.0:
        fails.append(AssumptionFailure("params", "kappa1 must be > 0", p.kappa1))
    if not p.kappa2 > 0.0:
        fails.append(AssumptionFailure("params", "kappa2 must be > 0", p.kappa2))
    if not p.gamma > 0.0:
        fails.append(AssumptionFailure("params", "gamma must be > 0", p.gamma))
    if not scenario.psi.p >= 1.0:
        fails.append(AssumptionFailure("params", "front exponent p must be >= 1", scenario.psi.p))

    _check_phi(scenario.phi, fails)

    bd = scenario.boundary
    for name, prof in (("g", bd.g), ("h", bd.h)):
        if prof.lam < 0.0:
            fails.append(AssumptionFailure("A2", f"{name}.lambda must be >= 0", prof.lam))
        if prof.lam == 0.0 and prof.amp != 0.0:
            fails.append(AssumptionFailure(
                "A2", f"{name} - {name}_star is not integrable (lambda = 0 with amp != 0)", prof.amp))
    if not bd.g0 > 0.0:
        fails.append(AssumptionFailure("A2", "g must stay >= g0 > 0", bd.g0))
    if bd.h.inf < 0.0:
        fails.append(AssumptionFailure("A2", "h must stay >= 0", bd.h.inf))
    if not bd.g_star > 0.0:
        fails.append(AssumptionFailure("A2", "g_star must be positive", bd.g_star))
    if not bd.h_star > 0.0:
        fails.append(AssumptionFailure("A2", "h_star must be positive", bd.h_star))
    else:
        mismatch = abs(p.gamma * bd.h_star - bd.g_star) / max(abs(bd.g_star), 1e-300)
        if mismatch > _HENRY_RTOL:
            fails.append(AssumptionFailure(
                "A2", "Henry compatibility gamma*h_star = g_star violated", p.gamma * bd.h_star - bd.g_star))

    init = scenario.initial
    if not init.s0 > 0.0:
        fails.append(AssumptionFailure("A3", "initial front position s0 must be > 0", init.s0))
    for name, samples in (("u0", init.u0_samples), ("v0", init.v0_samples)):
        if samples.size == 0:
            fails.append(AssumptionFailure("A3", f"{name} needs at least one sample"))
            continue
        if not np.all(np.isfinite(samples)):
            fails.append(AssumptionFailure("A3", f"{name} contains non-finite samples"))
        elif np.min(samples) < 0.0:
            fails.append(AssumptionFailure("A3", f"{name} must be nonnegative", float(np.min(samples))))

    if scenario.truncation_m is not None and not scenario.truncation_m > 0.0:
        fails.append(AssumptionFailure("params", "truncation cutoff m must be > 0", scenario.truncation_m))

    return ValidationReport(tuple(fails), tuple(warns))


# ---------------------------------------------------------------------------
# flat key=value serialization
# ---------------------------------------------------------------------------

_SCALAR_KEYS = {
    "kappa0", "kappa1", "kappa2", "gamma", "p",
    "phi.a", "phi.b", "phi.q",
    "g.cinf", "g.amp", "g.lambda",
    "h.cinf", "h.amp", "h.lambda",
    "s0", "m",
}
_ARRAY_KEYS = {"u0", "v0"}


def scenario_to_text(scenario: Scenario) -> str:
    """Serialize a built-in-family scenario to the flat key=value format."""
    if scenario.phi.family != "power_law":
        raise InvalidParameterError("only the power-law nonlinearity family is serializable")
    p, bd, init = scenario.params, scenario.boundary, scenario.initial
    lines = [
        f"kappa0 = {p.kappa0!r}",
        f"kappa1 = {p.kappa1!r}",
        f"kappa2 = {p.kappa2!r}",
        f"gamma = {p.gamma!r}",
        f"p = {scenario.psi.p!r}",
        f"phi.a = {scenario.phi.a!r}",
        f"phi.b = {scenario.phi.b!r}",
        f"phi.q = {scenario.phi.q!r}",
        f"g.cinf = {bd.g.cinf!r}",
        f"g.amp = {bd.g.amp!r}",
        f"g.lambda = {bd.g.lam!r}",
        f"h.cinf = {bd.h.cinf!r}",
        f"h.amp = {bd.h.amp!r}",
        f"h.lambda = {bd.h.lam!r}",
        f"s0 = {init.s0!r}",
        "u0 = " + " ".join(repr(x) for x in init.u0_samples),
        "v0 = " + " ".join(repr(x) for x in init.v0_samples),
    ]
    if scenario.truncation_m is not None:
        lines.append(f"m = {scenario.truncation_m!r}")
    return "\n".join(lines) + "\n"


def scenario_from_text(text: str) -> Scenario:
    """Parse the flat key=value scenario format (see scenario_to_text)."""
    scalars: dict[str, float] = {}
    arrays: dict[str, np.ndarray] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().removesuffix("[]")
        value = value.strip()
        if key in _ARRAY_KEYS:
            parts = value.replace(",", " ").split()
            try:
                arrays[key] = np.array([float(x) for x in parts], dtype=float)
            except ValueError as exc:
                raise InvalidParameterError(f"line {lineno}: bad array for {key}: {exc}") from None
        elif key in _SCALAR_KEYS:
            try:
                scalars[key] = float(value)
            except ValueError:
                raise InvalidParameterError(f"line {lineno}: bad number for {key}: {value!r}") from None
        else:
            raise InvalidParameterError(f"line {lineno}: unknown key {key!r}")

    missing = ({"kappa0", "kappa1", "kappa2", "gamma", "s0"} - scalars.keys()) | (_ARRAY_KEYS - arrays.keys())
    if missing:
        raise InvalidParameterError(f"scenario file missing keys: {sorted(missing)}")

    params = ModelParams(
        kappa0=scalars["kappa0"], kappa1=scalars["kappa1"],
        kappa2=scalars["kappa2"], gamma=scalars["gamma"],
    )
    return Scenario(
        params=params,
        psi=FrontSpeedPsi(params=params, p=scalars.get("p", 1.0)),
        phi=NonlinearityPhi(a=scalars.get("phi.a", 0.0), b=scalars.get("phi.b", 1.0), q=scalars.get("phi.q", 1.0)),
        boundary=BoundaryData(
            g=ExpProfile(scalars.get("g.cinf", 1.0), scalars.get("g.amp", 0.0), scalars.get("g.lambda", 0.0)),
            h=ExpProfile(scalars.get("h.cinf", 1.0), scalars.get("h.amp", 0.0), scalars.get("h.lambda", 0.0)),
        ),
        initial=InitialData(s0=scalars["s0"], u0_samples=arrays["u0"], v0_samples=arrays["v0"]),
        truncation_m=scalars.get("m"),
    )
