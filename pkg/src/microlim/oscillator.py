"""Wave equation semi-discretized in space as a chain of coupled oscillators.

Each lattice site carries a particle of mass M; nearest neighbours are
coupled by springs of constant k = M c^2/dx^2, so the site accelerations
are exactly the central second difference of the displacement field.
Time integration is velocity Verlet (kick-drift-kick): explicit, second
order, time reversible, with the well-known bounded energy error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from .errors import UnstableStep

__all__ = [
    "ChainBoundary",
    "ChainParams",
    "ChainState",
    "accelerations",
    "integrate",
    "energy",
    "momentum",
    "mode_state",
    "omega_theory",
    "EnergyDrift",
    "energy_drift",
    "DispersionResult",
    "measure_dispersion",
]


class ChainBoundary(Enum):
    PERIODIC = "periodic"
    FIXED_ENDS = "fixed-ends"


@dataclass(frozen=True)
class ChainParams:
    c: float  # wave speed
    dx: float
    mass: float = 1.0
    n_sites: int = 3
    boundary: ChainBoundary = ChainBoundary.PERIODIC

    def __post_init__(self):
        if self.c <= 0 or self.dx <= 0 or self.mass <= 0:
            raise ValueError("c, dx and mass must be positive")
        if self.n_sites < 3:
            raise ValueError("chain needs at least 3 sites")

    @property
    def spring_constant(self) -> float:
        return self.mass * self.c ** 2 / self.dx ** 2

    @property
    def max_stable_dt(self) -> float:
        """The chain's highest frequency is 2c/dx; dt must stay below dx/c."""
        return self.dx / self.c


@dataclass(frozen=True)
class ChainState:
    u: np.ndarray  # displacements
    v: np.ndarray  # velocities
    time: float = 0.0

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        v = np.array(self.v, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise ValueError("u and v must be 1-d arrays of equal length")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def rest(cls, n_sites: int) -> "ChainState":
        return cls(np.zeros(n_sites), np.zeros(n_sites))


def accelerations(state: ChainState, params: ChainParams) -> np.ndarray:
    """a_m = (c/dx)^2 (u_{m+1} - 2 u_m + u_{m-1}); clamped sites stay put."""
    u = state.u
    factor = (params.c / params.dx) ** 2
    if params.boundary is ChainBoundary.PERIODIC:
        return factor * (np.roll(u, -1) - 2 * u + np.roll(u, 1))
    a = np.zeros_like(u)
    a[1:-1] = factor * (u[2:] - 2 * u[1:-1] + u[:-2])
    return a


def _clamp(u: np.ndarray, v: np.ndarray, params: ChainParams) -> None:
    if params.boundary is ChainBoundary.FIXED_ENDS:
        u[0] = u[-1] = 0.0
        v[0] = v[-1] = 0.0


def integrate(
    state: ChainState, params: ChainParams, dt: float, n_steps: int
) -> ChainState:
    """Advance by velocity Verlet; rejects dt at or beyond the stability bound."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt >= params.max_stable_dt:
        raise UnstableStep(
            f"dt = {dt} is not below the stability bound dx/c = {params.max_stable_dt}"
        )
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    u = np.array(state.u, dtype=float)
    v = np.array(state.v, dtype=float)
    _clamp(u, v, params)
    a = accelerations(ChainState(u, v), params)
    for _ in range(n_steps):
        v += 0.5 * dt * a
        u += dt * v
        _clamp(u, v, params)
        a = accelerations(ChainState(u, v), params)
        v += 0.5 * dt * a
        _clamp(u, v, params)
    return ChainState(u, v, state.time + n_steps * dt)


def energy(state: ChainState, params: ChainParams) -> float:
    """Kinetic plus spring energy, sum of 1/2 M v^2 + 1/2 k (u_{m+1}-u_m)^2."""
    kinetic = 0.5 * params.mass * float(np.sum(state.v ** 2))
    if params.boundary is ChainBoundary.PERIODIC:
        stretch = np.roll(state.u, -1) - state.u
    else:
        stretch = state.u[1:] - state.u[:-1]
    spring = 0.5 * params.spring_constant * float(np.sum(stretch ** 2))
    return kinetic + spring


def momentum(state: ChainState, params: ChainParams) -> float:
    return params.mass * float(np.sum(state.v))


def mode_state(params: ChainParams, mode: int, amplitude: float = 1.0) -> ChainState:
    """A single Fourier mode u_m = A sin(2 pi q m / N) at rest."""
    m = np.arange(params.n_sites)
    u = amplitude * np.sin(2 * math.pi * mode * m / params.n_sites)
    return ChainState(u, np.zeros(params.n_sites))


def omega_theory(params: ChainParams, mode: int) -> float:
    """Normal-mode angular frequency 2 (c/dx) |sin(pi q / N)| (periodic chain)."""
    return 2 * params.c / params.dx * abs(math.sin(math.pi * mode / params.n_sites))


@dataclass(frozen=True)
class EnergyDrift:
    """Secular drift vs bounded oscillation of the measured energy.

    Velocity Verlet conserves a shadow energy: the measured energy
    oscillates with amplitude O((omega dt)^2) but has no trend.  The
    secular component compares window means at both ends of the run so the
    oscillation averages out.
    """

    secular: float  # |mean(last window) - mean(first window)| / E0
    oscillation: float  # max |E - E0| / E0


def energy_drift(
    state: ChainState, params: ChainParams, dt: float, n_steps: int, *, window: int = 2560
) -> EnergyDrift:
    e0 = energy(state, params)
    if e0 == 0:
        raise ValueError("initial energy must be nonzero")
    energies = [e0]
    s = state
    for _ in range(n_steps):
        s = integrate(s, params, dt, 1)
        energies.append(energy(s, params))
    series = np.array(energies)
    window = min(window, len(series) // 2)
    secular = abs(float(series[-window:].mean() - series[:window].mean())) / e0
    oscillation = float(np.max(np.abs(series - e0))) / e0
    return EnergyDrift(secular=secular, oscillation=oscillation)


@dataclass(frozen=True)
class DispersionResult:
    mode: int
    omega_measured: float
    omega_theory: float

    @property
    def rel_err(self) -> float:
        return abs(self.omega_measured - self.omega_theory) / self.omega_theory


def measure_dispersion(
    params: ChainParams,
    mode: int,
    *,
    dt: Optional[float] = None,
    n_periods: float = 3.0,
) -> DispersionResult:
    """Excite one mode, track its amplitude, and fit the frequency from the
    zero crossings (linear interpolation between samples)."""
    if params.boundary is not ChainBoundary.PERIODIC:
        raise ValueError("dispersion measurement assumes a periodic chain")
    if not (0 < mode < params.n_sites):
        raise ValueError("mode must lie strictly between 0 and N")
    omega = omega_theory(params, mode)
    if dt is None:
        dt = 0.1 * params.max_stable_dt
    n_steps = int(math.ceil(n_periods * 2 * math.pi / (omega * dt)))

    m = np.arange(params.n_sites)
    shape = np.sin(2 * math.pi * mode * m / params.n_sites)
    norm = float(np.dot(shape, shape))
    state = ChainState(shape, np.zeros(params.n_sites))

    amplitudes = [1.0]
    for _ in range(n_steps):
        state = integrate(state, params, dt, 1)
        amplitudes.append(float(np.dot(state.u, shape)) / norm)

    crossings = []
    for k in range(len(amplitudes) - 1):
        a, b = amplitudes[k], amplitudes[k + 1]
        if a == 0.0:
            crossings.append(k * dt)
        elif a * b < 0:
            crossings.append((k + a / (a - b)) * dt)
    if len(crossings) < 2:
        raise ValueError("not enough zero crossings to fit a frequency")
    spans = np.diff(crossings)
    omega_measured = math.pi / float(np.mean(spans))
    return DispersionResult(mode=mode, omega_measured=omega_measured, omega_theory=omega)
