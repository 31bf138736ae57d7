"""Time evolution: a generic Schroedinger integrator and the analytic squeeze backend."""

from __future__ import annotations

import cmath
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm

from . import hilbert
from .errors import DimensionMismatch, RegimeWarning, StabilityViolation, TruncationError, TruncationWarning
from .hilbert import LEAKAGE_TOL, StateVector
from .model import EffectiveParams

log = logging.getLogger(__name__)

STABILITY_LIMIT = 0.05
NORM_TOL = 1e-9

Hamiltonian = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class EvolutionConfig:
    """Integrator settings.

    ``dt=None`` picks the largest step allowed by the stability guard
    ``dt * ||H||_inf <= step_limit`` that divides ``t_final`` evenly. With
    ``method="adaptive"``, ``dt`` is the initial step and records are taken at
    multiples of ``record_every * dt``.
    """

    t_final: float
    dt: Optional[float] = None
    method: str = "rk4"
    record_every: int = 1
    tol: float = 1e-11
    step_limit: float = STABILITY_LIMIT
    leak_tol: float = LEAKAGE_TOL
    on_leak: str = "raise"

    def __post_init__(self):
        if self.method not in ("rk4", "adaptive"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.on_leak not in ("raise", "warn"):
            raise ValueError("on_leak must be 'raise' or 'warn'")
        if self.t_final < 0:
            raise ValueError("t_final must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.step_limit > STABILITY_LIMIT:
            raise ValueError(f"step_limit may not exceed {STABILITY_LIMIT}")


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    dt: float
    steps: int
    max_norm_correction: float
    max_leakage: float
    valid: bool = True
    notes: list = field(default_factory=list)

    @property
    def final(self) -> StateVector:
        return self.states[-1]


def _matvec(hamiltonian) -> Callable[[float, np.ndarray], np.ndarray]:
    apply = getattr(hamiltonian, "apply", None)
    if apply is not None:
        return apply
    return lambda t, y: hamiltonian(t) @ y


def _norm_bound(hamiltonian, t: float) -> float:
    bound = getattr(hamiltonian, "norm_bound", None)
    if bound is not None:
        return bound(t)
    return float(np.max(np.sum(np.abs(hamiltonian(t)), axis=1)))


def max_norm_bound(hamiltonian, t_final: float, samples: int = 9) -> float:
    """Row-sum bound of H(t), maximized over a uniform grid on [0, t_final]."""
    return max(_norm_bound(hamiltonian, t) for t in np.linspace(0.0, t_final, samples))


def _rk4_step(f, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + h / 2, y + (h / 2) * k1)
    k3 = f(t + h / 2, y + (h / 2) * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


class _Recorder:
    def __init__(self, psi0: StateVector, cfg: EvolutionConfig):
        self.basis = psi0.basis
        self.composite = psi0.composite
        self.cfg = cfg
        self.times = []
        self.states = []
        self.max_leak = 0.0
        self.valid = True
        self.notes = []

    def __call__(self, t: float, y: np.ndarray) -> None:
        state = StateVector(y, self.basis, self.composite)
        leak = state.tail_probability()
        self.max_leak = max(self.max_leak, leak)
        if leak >= self.cfg.leak_tol and self.valid:
            msg = (
                f"Fock-tail leakage {leak:.3e} >= {self.cfg.leak_tol:.1e} at t={t:.6e} s "
                f"(n_max={self.basis.n_max})"
            )
            if self.cfg.on_leak == "raise":
                raise TruncationError(msg)
            warnings.warn(msg, TruncationWarning, stacklevel=3)
            self.valid = False
            self.notes.append(msg)
        self.times.append(t)
        self.states.append(state)


def evolve_td(psi0: StateVector, hamiltonian: Hamiltonian, cfg: EvolutionConfig) -> Trajectory:
    """Integrate i d|psi>/dt = H(t)|psi> from t=0 to cfg.t_final.

    ``hamiltonian`` is any callable t -> dense matrix; objects that also expose
    ``apply(t, y)`` (see ``model.DrivenHamiltonian``) are integrated without
    forming H(t). The state is renormalized after every step and the largest
    correction is reported on the returned trajectory.
    """
    if abs(psi0.norm() - 1) > NORM_TOL:
        raise ValueError(f"initial state not normalized (norm={psi0.norm():.12f})")
    bound = max_norm_bound(hamiltonian, cfg.t_final)
    h_mat_dim = hamiltonian(0.0).shape[0] if not hasattr(hamiltonian, "dim") else hamiltonian.dim
    if h_mat_dim != psi0.dim:
        raise DimensionMismatch(f"Hamiltonian dim {h_mat_dim} != state dim {psi0.dim}")

    dt_max = math.inf if bound == 0 else cfg.step_limit / bound
    if cfg.dt is None:
        n_steps = max(1, math.ceil(cfg.t_final / dt_max)) if cfg.t_final > 0 else 0
        dt = cfg.t_final / n_steps if n_steps else 0.0
    else:
        dt = cfg.dt
        if dt <= 0:
            raise ValueError("dt must be > 0")
        if dt * bound > cfg.step_limit * (1 + 1e-12):
            raise StabilityViolation(
                f"dt*||H|| = {dt * bound:.3g} exceeds {cfg.step_limit} (need dt <= {dt_max:.3e} s)"
            )
    mv = _matvec(hamiltonian)

    def f(t, y):
        return -1j * mv(t, y)

    record = _Recorder(psi0, cfg)
    y = psi0.amplitudes.astype(complex).copy()
    record(0.0, y)
    if cfg.t_final == 0:
        return Trajectory(np.array(record.times), record.states, dt, 0, 0.0, record.max_leak,
                          record.valid, record.notes)

    if cfg.method == "rk4":
        n_steps = round(cfg.t_final / dt)
        if not math.isclose(n_steps * dt, cfg.t_final, rel_tol=1e-9):
            raise ValueError("dt must divide t_final into an integer number of steps")
        dt = cfg.t_final / n_steps
        max_corr = 0.0
        for k in range(n_steps):
            t = k * dt
            y = _rk4_step(f, t, y, dt)
            nrm = np.linalg.norm(y)
            max_corr = max(max_corr, abs(nrm - 1))
            y /= nrm
            if (k + 1) % cfg.record_every == 0 or k + 1 == n_steps:
                record((k + 1) * dt, y)
        steps = n_steps
    else:
        y, steps, max_corr = _adaptive(f, y, dt, dt_max, cfg, record)

    if max_corr > NORM_TOL:
        log.warning("largest per-step renormalization %.3e exceeds %.0e", max_corr, NORM_TOL)
    else:
        log.debug("largest per-step renormalization %.3e", max_corr)
    return Trajectory(np.array(record.times), record.states, dt, steps, max_corr,
                      record.max_leak, record.valid, record.notes)


def _adaptive(f, y, dt, dt_max, cfg: EvolutionConfig, record):
    """Step-doubling RK4: accept when one step and two half steps agree to cfg.tol."""
    interval = cfg.record_every * dt
    targets = list(np.arange(1, math.floor(cfg.t_final / interval + 1e-9) + 1) * interval)
    if not targets or not math.isclose(targets[-1], cfg.t_final, rel_tol=1e-9):
        targets.append(cfg.t_final)
    t, h, steps, max_corr = 0.0, dt, 0, 0.0
    for target in targets:
        while t < target * (1 - 1e-14):
            h = min(h, dt_max, target - t)
            big = _rk4_step(f, t, y, h)
            half = _rk4_step(f, t, y, h / 2)
            small = _rk4_step(f, t + h / 2, half, h / 2)
            err = np.linalg.norm(small - big) / 15
            if err > cfg.tol and h > 1e-300:
                h *= max(0.2, 0.9 * (cfg.tol / err) ** 0.2)
                continue
            t += h
            nrm = np.linalg.norm(small)
            max_corr = max(max_corr, abs(nrm - 1))
            y = small / nrm
            steps += 1
            grow = 2.0 if err == 0 else min(2.0, 0.9 * (cfg.tol / err) ** 0.2)
            h *= max(grow, 0.2)
        t = target
        record(t, y)
    return y, steps, max_corr


def step_halving_error(psi0: StateVector, hamiltonian: Hamiltonian, cfg: EvolutionConfig) -> float:
    """Largest state difference between runs at dt and dt/2 (fixed-step RK4).

    Both runs record at the same instants; useful as a convergence audit.
    """
    coarse = evolve_td(psi0, hamiltonian, cfg)
    fine_cfg = EvolutionConfig(cfg.t_final, dt=coarse.dt / 2, method="rk4",
                               record_every=2 * cfg.record_every, leak_tol=cfg.leak_tol,
                               on_leak=cfg.on_leak, step_limit=cfg.step_limit)
    fine = evolve_td(psi0, hamiltonian, fine_cfg)
    return max(
        float(np.linalg.norm(a.amplitudes - b.amplitudes))
        for a, b in zip(coarse.states, fine.states)
    )


# -- squeeze transforms -----------------------------------------------------

def _wrap(angle: float) -> float:
    """Map an angle into (-pi, pi]."""
    wrapped = math.remainder(angle, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


@dataclass(frozen=True)
class SqueezeTransform:
    """Squeeze S(r e^{i phi}) followed by a phase rotation exp(-i rotation a^dag a).

    S(zeta) = exp[(zeta* a^2 - zeta a^dag^2) / 2]. A negative ``r`` is folded
    into the angle. Bogoliubov coefficients satisfy U^dag a U = mu a + nu a^dag.
    """

    r: float
    phi: float = 0.0
    rotation: float = 0.0

    def __post_init__(self):
        r, phi = float(self.r), float(self.phi)
        if r < 0:
            r, phi = -r, phi + math.pi
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "phi", _wrap(phi))
        object.__setattr__(self, "rotation", float(self.rotation))

    @property
    def zeta(self) -> complex:
        return self.r * cmath.exp(1j * self.phi)

    def bogoliubov(self) -> tuple[complex, complex]:
        mu = cmath.exp(-1j * self.rotation) * math.cosh(self.r)
        nu = -cmath.exp(1j * (self.phi - self.rotation)) * math.sinh(self.r)
        return mu, nu

    @classmethod
    def from_bogoliubov(cls, mu: complex, nu: complex) -> "SqueezeTransform":
        r = math.asinh(abs(nu))
        rotation = -cmath.phase(mu)
        phi = cmath.phase(-nu) + rotation if abs(nu) > 0 else 0.0
        return cls(r, phi, _wrap(rotation))

    def then(self, other: "SqueezeTransform") -> "SqueezeTransform":
        """The transform that applies ``self`` first and ``other`` second."""
        mu2, nu2 = self.bogoliubov()
        mu1, nu1 = other.bogoliubov()
        return SqueezeTransform.from_bogoliubov(
            mu1 * mu2 + nu1 * nu2.conjugate(), mu1 * nu2 + nu1 * mu2.conjugate()
        )

    def inverse(self) -> "SqueezeTransform":
        mu, nu = self.bogoliubov()
        # inverse Bogoliubov map of [[mu, nu], [nu*, mu*]] with |mu|^2 - |nu|^2 = 1
        return SqueezeTransform.from_bogoliubov(mu.conjugate(), -nu)


def analytic_squeeze(eff: EffectiveParams, t: float) -> SqueezeTransform:
    """Closed-form propagator of the resonant single-mode model.

    r = 2|xi| t and phi = pi/2 - theta. ``rotation = varpi * t`` is the free
    phase rotation that maps the interaction-picture state back to the
    Schroedinger picture of the mode Hamiltonian.
    """
    if not eff.resonant:
        warnings.warn(
            f"analytic squeeze assumes the two-photon resonance; coupling parameter is {eff.p_coupling:.4g}",
            RegimeWarning,
            stacklevel=2,
        )
    return SqueezeTransform(2 * eff.xi_abs * t, math.pi / 2 - eff.theta, eff.varpi * t)


def squeeze_generator(basis: hilbert.FockBasis, zeta: complex) -> np.ndarray:
    """(zeta* a^2 - zeta a^dag^2) / 2, anti-Hermitian."""
    a = hilbert.annihilation(basis)
    a2 = a @ a
    return 0.5 * (np.conj(zeta) * a2 - zeta * a2.conj().T)


def squeeze_operator(basis: hilbert.FockBasis, s: SqueezeTransform) -> np.ndarray:
    """Truncated-space unitary for ``s`` (scaling-and-squaring Pade exponential)."""
    u = expm(squeeze_generator(basis, s.zeta))
    if s.rotation:
        u = np.exp(-1j * s.rotation * np.arange(basis.dim))[:, None] * u
    return u


def rotate(psi: StateVector, angle: float) -> StateVector:
    """exp(-i angle a^dag a) |psi>."""
    if psi.composite:
        raise DimensionMismatch("rotate() acts on Fock-only states")
    phases = np.exp(-1j * angle * np.arange(psi.basis.dim))
    return StateVector(phases * psi.amplitudes, psi.basis)


def apply_squeeze(psi: StateVector, s: SqueezeTransform, leak_tol: float = LEAKAGE_TOL,
                  on_leak: str = "raise") -> StateVector:
    if psi.composite:
        raise DimensionMismatch("apply_squeeze() acts on Fock-only states")
    out = StateVector(squeeze_operator(psi.basis, s) @ psi.amplitudes, psi.basis)
    leak = out.tail_probability()
    if leak >= leak_tol:
        msg = f"squeezed state puts {leak:.3e} probability in the top Fock levels (n_max={psi.basis.n_max})"
        if on_leak == "raise":
            raise TruncationError(msg)
        warnings.warn(msg, TruncationWarning, stacklevel=2)
    return out
