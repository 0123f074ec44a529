"""
Time integration of u_t = -i Lap u + i sign |u|^{2p} u on the torus.
Strang splitting with exact sub-flows, an integrating-factor RK4 reference,
the conserved quantities and a trajectory record with norm telemetry.
"""

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

import config
from diagonalizer import Diagonalizer, DiagonalizerParams
from exceptions import ConfigError, PaddingError
from fourier_core import (
    FourierField, NormParams, from_grid, norm, project, to_grid
)
from paradiff import CutoffSpec

logger = logging.getLogger(__name__)

SCHEMES = ('strang', 'rk4')
STATUSES = ('completed', 'escaped', 'numeric_abort')
TELEMETRY_COLUMNS = (
    't', 'mass', 'hamiltonian', 'l2', 'w_s0', 'w_s1', 'w_s', 'hs1', 'hs', 'E_s',
    'escape_flag', 'tail_fraction',
)


@dataclass
class SolverConfig:
    """
    Integrator settings.

    dealias=True integrates the equation projected to the base lattice, so the
    state never leaves |j|_inf <= K; dealias=False keeps the full padded grid.
    """

    dt: float = 1e-3
    t_end: float = 0.0
    scheme: str = config.DEFAULT_SCHEME
    sign: int = 1
    p: int = 1
    observe_every: int = 1
    dealias: bool = True
    guard: float = config.DEFAULT_GUARD

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ConfigError(f"t_end must be >= 0, got {self.t_end}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.sign not in (1, -1):
            raise ConfigError(f"sign must be +1 or -1, got {self.sign}")
        if int(self.p) != self.p or self.p < 1:
            raise ConfigError(f"p must be a positive integer, got {self.p}")
        if int(self.observe_every) != self.observe_every or self.observe_every < 1:
            raise ConfigError(f"observe_every must be a positive integer, got {self.observe_every}")
        if not self.guard > 0:
            raise ConfigError(f"guard must be positive, got {self.guard}")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class NormSet:
    """
    Regularity ladder and weight floor used for telemetry.

    N is the diagonalizer threshold for E_s; None disables the correction so
    that w = u.
    """

    s0: float
    s1: float
    s: float
    R: float
    N: Optional[float] = None
    cutoff: CutoffSpec = field(default_factory=CutoffSpec)

    def params(self, s):
        return NormParams(s, self.R)


def _linear_phase(u, dt):
    # exact flow of u_t = -i Lap u: u_hat(j) -> exp(i|j|^2 dt) u_hat(j)
    return FourierField(u.spec, u.coeffs * np.exp(1j * dt * u.sq_norms()))


def _phase_on_grid(u, dt, p, sign):
    values = to_grid(u, u.spec.grid_size)
    values = values * np.exp(1j * sign * dt * np.abs(values) ** (2 * p))
    return from_grid(values, u.spec, u.spec.grid_extent)


def _nonlinear_term(u, p, sign):
    values = to_grid(u, u.spec.grid_size)
    return from_grid(1j * sign * np.abs(values) ** (2 * p) * values, u.spec, u.spec.grid_extent)


def _finish(u, dealias):
    return u.resize(u.spec.K) if dealias else u


def _galerkin_phase(u, dt, p, sign):
    """
    Nonlinear sub-flow of the projected equation v' = i sign P(|v|^{2p} v).

    With g = (|u|^{2p} + |v|^{2p})/2 on the grid, the grid mean of g acts as an
    exact phase and its fluctuation g' is advanced by the Cayley step
    y = u + (i theta/2) P g'(u + y), solved by fixed-point iteration. The map is
    symmetric in (u, v), keeps the L2 norm, and is exact on plane waves.
    """
    n = u.spec.grid_size
    theta = sign * dt
    g_start = np.abs(to_grid(u, n)) ** (2 * p)
    scale = max(float(np.linalg.norm(u.coeffs)), np.finfo(float).tiny)
    y = u
    previous = None
    for iteration in range(1, config.GALERKIN_PHASE_MAX_ITERATIONS + 1):
        g = 0.5 * (g_start + np.abs(to_grid(y, n)) ** (2 * p))
        both = to_grid(u + y, n)
        y_next = u + (0.5j * theta) * from_grid((g - g.mean()) * both, u.spec, u.extent)
        step = float(np.linalg.norm(y_next.coeffs - y.coeffs))
        y = y_next
        if step <= config.GALERKIN_PHASE_TOL * scale:
            break
        if previous is not None and step >= previous and step <= 1e3 * config.GALERKIN_PHASE_TOL * scale:
            # increments have reached round-off
            break
        previous = step
    else:
        logger.debug("projected phase stopped after %d iterations, increment %.3e", iteration, step)
    g = 0.5 * (g_start + np.abs(to_grid(y, n)) ** (2 * p))
    return FourierField(u.spec, y.coeffs * np.exp(1j * theta * g.mean()))


def strang_step(u, dt, p, sign=1, dealias=True):
    """
    One Strang step: half linear flow, nonlinear sub-flow, half linear flow.

    With dealias=True the state stays on the base lattice and the nonlinear
    sub-flow is the symmetric projected step of _galerkin_phase. Otherwise the
    exact pointwise phase runs on the padded grid.

    Args:
        u (FourierField): Current state
        dt (float): Step size
        p (int): Power of the nonlinearity
        sign (int): +1 or -1
        dealias (bool): Integrate the lattice-projected equation

    Returns:
        FourierField: State after dt
    """
    if dealias:
        half = _linear_phase(u.resize(u.spec.K), dt / 2.0)
        mixed = _galerkin_phase(half, dt, p, sign)
    else:
        mixed = _phase_on_grid(_linear_phase(u, dt / 2.0), dt, p, sign)
    return _linear_phase(mixed, dt / 2.0)


def rk4_step(u, dt, p, sign=1, dealias=True):
    """
    Integrating-factor RK4 step; the linear part is propagated exactly.
    """
    if not dealias:
        u = u.resize(u.spec.grid_extent)

    def rhs(v):
        return _finish(_nonlinear_term(v, p, sign), dealias)

    half = dt / 2.0
    k1 = rhs(u)
    k2 = rhs(_linear_phase(u + half * k1, half))
    k3 = rhs(_linear_phase(u, half) + half * k2)
    k4 = rhs(_linear_phase(u, dt) + dt * _linear_phase(k3, half))
    increment = _linear_phase(k1, dt) + 2.0 * _linear_phase(k2 + k3, half) + k4
    return _linear_phase(u, dt) + (dt / 6.0) * increment


STEPPERS = {
    'strang': strang_step,
    'rk4': rk4_step,
}


def mass(u):
    """||u||^2_{L2} = sum_j |u_hat(j)|^2."""
    return float(np.sum(np.abs(u.coeffs) ** 2))


def hamiltonian(u, p, sign=1, collocation=False):
    """
    ||grad u||^2_{L2} + sign/(p+1) * mean |u|^{2p+2}.

    The potential term is a grid mean, exact while the grid outruns the
    (2p+2)-fold product support. collocation=True accepts the aliased mean on
    the padded grid, which is what the padded scheme sees.

    Raises:
        PaddingError: If the synthesis grid is too coarse for the potential
    """
    n = u.spec.grid_size
    support = (2 * p + 2) * u.extent
    if support >= n and not collocation:
        required = math.ceil((support + 1) / (2 * u.spec.K + 1))
        raise PaddingError(f"potential term needs a grid finer than {support} points",
                           required_pad_factor=required)
    kinetic = float(np.sum(u.sq_norms() * np.abs(u.coeffs) ** 2))
    potential = float(np.mean(np.abs(to_grid(u, n)) ** (2 * p + 2)))
    return kinetic + sign * potential / (p + 1)


def tail_fraction(u):
    """Share of L2 mass above |j| = K/2."""
    total = mass(u)
    if total == 0:
        return 0.0
    return mass(project(u, u.spec.K / 2.0, 'high')) / total


@dataclass
class Trajectory:
    """
    Observed states with one telemetry row per state.
    """

    solver: SolverConfig
    norms: NormSet
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    status: str = 'completed'
    escape_time: Optional[float] = None

    def column(self, name):
        return np.array([row[name] for row in self.rows], dtype=np.float64)

    @property
    def columns(self):
        return tuple(self.rows[0].keys()) if self.rows else TELEMETRY_COLUMNS

    def mass_drift(self):
        """Maximal relative deviation of the mass from its initial value."""
        masses = self.column('mass')
        if masses.size == 0 or masses[0] == 0:
            return 0.0
        return float(np.max(np.abs(masses - masses[0])) / masses[0])

    def metadata(self):
        return {
            'solver': self.solver.to_dict(),
            'norms': {'s0': self.norms.s0, 's1': self.norms.s1, 's': self.norms.s,
                      'R': self.norms.R, 'N': self.norms.N,
                      'cutoff': {'eps': self.norms.cutoff.eps, 'profile': self.norms.cutoff.profile}},
            'lattice': self.states[0].spec.to_dict() if self.states else None,
            'status': self.status,
            'escape_time': self.escape_time,
            'mass_drift': self.mass_drift(),
        }

    def to_csv(self, path, extra_metadata=None):
        """
        Write the telemetry CSV and a JSON sidecar next to it.

        Returns:
            tuple: (csv path, sidecar path)
        """
        path = str(path)
        with open(path, 'w', newline='') as f:
            writer = csv.DictWriter(f, fieldnames=list(TELEMETRY_COLUMNS))
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: repr(float(v)) if k != 'escape_flag' else int(v)
                                 for k, v in row.items()})
        sidecar = path.rsplit('.', 1)[0] + '.json'
        meta = self.metadata()
        meta.update(extra_metadata or {})
        with open(sidecar, 'w') as f:
            json.dump(meta, f, indent=2)
        return path, sidecar


def read_telemetry(path):
    """Load a telemetry CSV written by Trajectory.to_csv into a dict of arrays."""
    with open(str(path), 'r', newline='') as f:
        rows = list(csv.DictReader(f))
    return {name: np.array([float(r[name]) for r in rows]) for name in TELEMETRY_COLUMNS}


def telemetry_row(u, t, solver, norms, escaped=False):
    """One row of the telemetry table for state u at time t."""
    hs_params = norms.params(norms.s)
    if norms.N is None:
        energy = norm(u, 'weighted', hs_params) ** 2
    else:
        params = DiagonalizerParams(N=norms.N, cutoff=norms.cutoff, norm=hs_params)
        # padded states carry modes past K; the symbol c is built from the base lattice
        base = u.resize(min(u.extent, u.spec.K))
        energy = Diagonalizer(base, solver.p, params).modified_energy()
    try:
        ham = hamiltonian(u, solver.p, solver.sign)
    except PaddingError:
        ham = hamiltonian(u, solver.p, solver.sign, collocation=True)
    return {
        't': float(t),
        'mass': mass(u),
        'hamiltonian': ham,
        'l2': norm(u, 'L2'),
        'w_s0': norm(u, 'weighted', norms.params(norms.s0)),
        'w_s1': norm(u, 'weighted', norms.params(norms.s1)),
        'w_s': norm(u, 'weighted', hs_params),
        'hs1': norm(u, 'Hs_sum', norms.params(norms.s1)),
        'hs': norm(u, 'Hs_sum', hs_params),
        'E_s': energy,
        'escape_flag': bool(escaped),
        'tail_fraction': tail_fraction(u),
    }


def integrate(u0, solver, norms, escape_radius=None):
    """
    Integrate from u0 to solver.t_end, observing every solver.observe_every steps.

    The run stops early when |u|_{s0,R} exceeds solver.guard or, if given,
    |u|_{s1,R} exceeds escape_radius; the escape time is recorded. Non-finite
    coefficients stop the run with status 'numeric_abort' and keep the last
    valid state.

    Args:
        u0 (FourierField): Initial state
        solver (SolverConfig): Integrator settings
        norms (NormSet): Telemetry norms
        escape_radius (float): Optional ball radius in the s1 norm

    Returns:
        Trajectory: Observed states and telemetry
    """
    step = STEPPERS[solver.scheme]
    traj = Trajectory(solver=solver, norms=norms)
    n_steps = int(math.ceil(solver.t_end / solver.dt - 1e-9)) if solver.t_end > 0 else 0

    def escaped(v):
        if norm(v, 'weighted', norms.params(norms.s0)) > solver.guard:
            return True
        return escape_radius is not None and norm(v, 'weighted', norms.params(norms.s1)) > escape_radius

    def observe(v, t, flag=False):
        traj.times.append(t)
        traj.states.append(v)
        traj.rows.append(telemetry_row(v, t, solver, norms, flag))

    u = u0
    t = 0.0
    observe(u, t, escaped(u))
    if traj.rows[0]['escape_flag']:
        traj.status, traj.escape_time = 'escaped', 0.0
        return traj

    logger.info("integrating %d %s steps of dt=%g (p=%d, sign=%+d, dealias=%s)",
                n_steps, solver.scheme, solver.dt, solver.p, solver.sign, solver.dealias)
    for n in range(1, n_steps + 1):
        dt = min(solver.dt, solver.t_end - t)
        candidate = step(u, dt, solver.p, solver.sign, solver.dealias)
        if not np.all(np.isfinite(candidate.coeffs)):
            logger.error("non-finite state at t=%.6g; keeping last valid state", t + dt)
            traj.status = 'numeric_abort'
            if traj.times[-1] != t:
                observe(u, t)
            return traj
        u = candidate
        t = n * solver.dt if n < n_steps else solver.t_end
        if escaped(u):
            traj.status, traj.escape_time = 'escaped', t
            observe(u, t, True)
            logger.info("escape at t=%.6g after %d steps", t, n)
            return traj
        if n % solver.observe_every == 0 or n == n_steps:
            observe(u, t)

    drift = traj.mass_drift()
    if drift > config.MASS_DRIFT_WARN:
        logger.warning("relative mass drift %.3e over the run (dealias=%s)", drift, solver.dealias)
    return traj
