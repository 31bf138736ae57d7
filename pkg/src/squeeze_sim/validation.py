"""Invariant suite run by ``squeeze-sim validate``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import hilbert
from .analysis import OffResonantInputs, off_resonant_factor, quadrature_stats
from .dynamics import EvolutionConfig, SqueezeTransform, analytic_squeeze, apply_squeeze, evolve_td, rotate
from .hilbert import StateVector, hermiticity_residual
from .model import (
    SystemParams,
    derive_effective,
    effective_hamiltonian_full,
    effective_hamiltonian_mode,
    effective_hamiltonian_mode_td,
    full_hamiltonian,
    resonant_detuning,
)

REFERENCE_TIME = 2e-4
HERMITICITY_TOL = 1e-12
NORM_TOL = 1e-9
ORACLE_TOL = 1e-5
FLOOR_TOL = 1e-9
ROTATION_TOL = 1e-10
DISPLACEMENT_TOL = 1e-8
GROUP_TOL = 1e-6
IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: measured {self.measured:.3e}, tolerance {self.tolerance:.1e}{extra}"


def displace(psi: StateVector, beta: complex) -> StateVector:
    """exp(beta a^dag - beta* a)|psi> on the truncated space."""
    a = hilbert.annihilation(psi.basis)
    d = expm(beta * a.conj().T - np.conj(beta) * a)
    return StateVector(d @ psi.amplitudes, psi.basis)


def _check(name, measured, tol, detail="", below=True) -> CheckResult:
    ok = measured < tol if below else measured >= tol
    return CheckResult(name, bool(ok), float(measured), tol, detail)


def run_validation(p: SystemParams, alpha: complex = 1.0, t: float = REFERENCE_TIME) -> list[CheckResult]:
    """Evaluate every invariant on the given configuration.

    The drive is retuned to the two-photon resonance so that the analytic
    propagator applies. Raises TruncationError when the requested coherent
    amplitude does not fit the Fock cutoff.
    """
    p = p.replace(big_delta=resonant_detuning(p))
    basis = p.basis
    eff = derive_effective(p)
    inputs = [("vacuum", hilbert.vacuum(basis)), (f"coherent {alpha}", hilbert.coherent_state(basis, alpha))]
    results = []

    rng = np.random.default_rng(20031)
    times = [0.0, t, *rng.uniform(0, t, 3)]
    worst = max(
        hermiticity_residual(builder(x))
        for x in times
        for builder in (
            lambda x: full_hamiltonian(p, x, basis),
            lambda x: effective_hamiltonian_full(p, x, basis),
            lambda x: effective_hamiltonian_mode(eff, x, basis),
        )
    )
    results.append(_check("hermiticity", worst, HERMITICITY_TOL, "all three Hamiltonian builders"))

    h_mode = effective_hamiltonian_mode_td(eff, basis)
    s = analytic_squeeze(eff, t)
    norm_dev, corr, oracle, floor_gap = 0.0, 0.0, 0.0, math.inf
    for label, psi0 in inputs:
        traj = evolve_td(psi0, h_mode, EvolutionConfig(t, record_every=500, on_leak="warn"))
        norm_dev = max(norm_dev, max(abs(st.norm() - 1) for st in traj.states))
        corr = max(corr, traj.max_norm_correction)
        numeric = quadrature_stats(traj.final)
        exact = quadrature_stats(apply_squeeze(psi0, s, on_leak="warn"))
        oracle = max(oracle, abs(numeric.var_min - exact.var_min) / exact.var_min)
        for st in traj.states:
            q = quadrature_stats(st)
            floor_gap = min(floor_gap, q.var_min * q.var_max - 1 / 16)
    results.append(_check("unitarity", max(norm_dev, corr), NORM_TOL, "norm drift and per-step renormalization"))
    results.append(_check("oracle equivalence", oracle, ORACLE_TOL,
                          f"analytic squeeze vs RK4, r={s.r:.4f}"))
    results.append(_check("uncertainty floor", -floor_gap, FLOOR_TOL,
                          f"min(var_min*var_max) - 1/16 = {floor_gap:.3e}"))

    squeezed = apply_squeeze(hilbert.vacuum(basis), SqueezeTransform(0.5, 0.7))
    base = quadrature_stats(squeezed)
    rot = max(abs(quadrature_stats(rotate(squeezed, th)).var_min - base.var_min) for th in (0.3, 1.9, -2.4))
    results.append(_check("rotation invariance", rot, ROTATION_TOL))
    disp = abs(quadrature_stats(displace(squeezed, 0.5 - 0.3j)).var_min - base.var_min)
    results.append(_check("displacement invariance", disp, DISPLACEMENT_TOL))

    half = SqueezeTransform(0.5, 0.7)
    twice = apply_squeeze(apply_squeeze(hilbert.vacuum(basis), half), half)
    once = apply_squeeze(hilbert.vacuum(basis), SqueezeTransform(1.0, 0.7))
    a, b = quadrature_stats(twice), quadrature_stats(once)
    group = max(abs(a.var_min - b.var_min), abs(a.var_max - b.var_max))
    results.append(_check("squeeze group law", group, GROUP_TOL))

    ident = max(off_resonant_factor(OffResonantInputs(pc, eff.xi_abs), 0.0) for pc in (1.1, 2.0, 10.0, 100.0))
    results.append(_check("off-resonant t=0 identity", ident, IDENTITY_TOL, "r_off(0) for r0 = 0"))

    r_on = 2 * eff.xi_abs * t
    limit = max(
        abs(off_resonant_factor(OffResonantInputs(pc, eff.xi_abs), t) / r_on - 1) * pc**2 / 10
        for pc in (100.0, 1e3, 1e4)
    )
    results.append(_check("large-P limit", limit, 1.0, "|r_off/r_on - 1| relative to 10/P^2"))
    return results
