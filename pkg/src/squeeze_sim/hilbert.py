"""Truncated Fock-space linear algebra for one cavity mode and a three-level atom.

Composite states use level-major ordering: all Fock amplitudes of ``g``, then
``i``, then ``e``. A composite amplitude vector of length ``3 * dim`` is
therefore ``[psi_g, psi_i, psi_e]`` with each block indexed by photon number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln

from .errors import DimensionMismatch, TruncationError

LEVELS = ("g", "i", "e")

LEAKAGE_TOL = 1e-6
COHERENT_TAIL_TOL = 1e-10


@dataclass(frozen=True)
class FockBasis:
    n_max: int = 63

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def dim(self) -> int:
        return self.n_max + 1

    @property
    def composite_dim(self) -> int:
        return 3 * self.dim

    def top_levels(self) -> int:
        """Number of Fock levels in the top 10% of the truncated space."""
        return max(1, math.ceil(0.1 * self.dim))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes over either the bare Fock basis or atom (x) Fock."""

    amplitudes: np.ndarray
    basis: FockBasis
    composite: bool = False

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        expected = self.basis.composite_dim if self.composite else self.basis.dim
        if amps.shape != (expected,):
            raise DimensionMismatch(
                f"expected {expected} amplitudes, got shape {amps.shape}"
            )
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        return StateVector(self.amplitudes / self.norm(), self.basis, self.composite)

    def fock_probabilities(self) -> np.ndarray:
        """Photon-number distribution, traced over the atom for composite states."""
        p = np.abs(self.amplitudes) ** 2
        if self.composite:
            p = p.reshape(3, self.basis.dim).sum(axis=0)
        return p

    def tail_probability(self) -> float:
        """Probability carried by the top 10% of Fock levels."""
        p = self.fock_probabilities()
        return float(p[-self.basis.top_levels():].sum())

    def block(self, level: str) -> np.ndarray:
        """Unnormalized field amplitudes attached to one atomic level."""
        if not self.composite:
            raise DimensionMismatch("block() needs an atom (x) Fock state")
        k = _level_index(level)
        d = self.basis.dim
        return self.amplitudes[k * d:(k + 1) * d]

    def level_population(self, level: str) -> float:
        b = self.block(level)
        return float(np.vdot(b, b).real)

    def project(self, level: str) -> "StateVector":
        """Field state conditioned on finding the atom in ``level`` (renormalized)."""
        b = self.block(level)
        nrm = np.linalg.norm(b)
        if nrm == 0:
            raise ValueError(f"atomic level {level!r} has zero population")
        return StateVector(b / nrm, self.basis)


def _level_index(level: str) -> int:
    try:
        return LEVELS.index(level)
    except ValueError:
        raise ValueError(f"atomic level must be one of {LEVELS}, got {level!r}") from None


def annihilation(basis: FockBasis) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, basis.dim, dtype=float)), k=1).astype(complex)


def creation(basis: FockBasis) -> np.ndarray:
    return annihilation(basis).conj().T


def number(basis: FockBasis) -> np.ndarray:
    return np.diag(np.arange(basis.dim, dtype=float)).astype(complex)


def identity(basis: FockBasis) -> np.ndarray:
    return np.eye(basis.dim, dtype=complex)


def field_operator(op: np.ndarray) -> np.ndarray:
    """Lift a Fock-space operator to atom (x) Fock as I_atom (x) op."""
    return np.kron(np.eye(3), op)


def atomic_projector(k: str, l: str, basis: FockBasis) -> np.ndarray:
    """sigma_kl = |k><l| (x) I_field."""
    s = np.zeros((3, 3), dtype=complex)
    s[_level_index(k), _level_index(l)] = 1.0
    return np.kron(s, identity(basis))


def fock_state(basis: FockBasis, n: int) -> StateVector:
    if not 0 <= n <= basis.n_max:
        raise ValueError(f"Fock level {n} outside 0..{basis.n_max}")
    amps = np.zeros(basis.dim, dtype=complex)
    amps[n] = 1.0
    return StateVector(amps, basis)


def vacuum(basis: FockBasis) -> StateVector:
    return fock_state(basis, 0)


def coherent_state(basis: FockBasis, alpha: complex) -> StateVector:
    """Truncated, renormalized coherent state |alpha>.

    Raises TruncationError when ``|alpha|**2 > n_max / 4`` or when the
    discarded Poisson tail carries at least 1e-10 of the probability.
    """
    mean_n = abs(alpha) ** 2
    if mean_n > basis.n_max / 4:
        raise TruncationError(
            f"|alpha|^2 = {mean_n:g} exceeds n_max/4 = {basis.n_max / 4:g}"
        )
    # probability of photon numbers > n_max for a Poisson(|alpha|^2) distribution
    tail = float(gammainc(basis.n_max + 1, mean_n)) if mean_n > 0 else 0.0
    if tail >= COHERENT_TAIL_TOL:
        raise TruncationError(
            f"coherent state alpha={alpha} loses {tail:.3e} probability above n_max={basis.n_max}"
        )
    n = np.arange(basis.dim)
    amps = np.zeros(basis.dim, dtype=complex)
    if mean_n == 0:
        amps[0] = 1.0
    else:
        log_mod = -mean_n / 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
        amps = np.exp(log_mod) * np.exp(1j * n * np.angle(alpha))
    return StateVector(amps / np.linalg.norm(amps), basis)


def atom_field_state(level: str, field_state: StateVector) -> StateVector:
    """Product state |level> (x) |field>."""
    if field_state.composite:
        raise DimensionMismatch("field_state must be a bare Fock state")
    amps = np.zeros(field_state.basis.composite_dim, dtype=complex)
    d = field_state.basis.dim
    k = _level_index(level)
    amps[k * d:(k + 1) * d] = field_state.amplitudes
    return StateVector(amps, field_state.basis, composite=True)


def expectation(state: StateVector, op: np.ndarray) -> complex:
    """<psi|op|psi>."""
    op = np.asarray(op)
    if op.shape != (state.dim, state.dim):
        raise DimensionMismatch(
            f"operator shape {op.shape} does not match state dimension {state.dim}"
        )
    psi = state.amplitudes
    return complex(np.vdot(psi, op @ psi))


def hermiticity_residual(op: np.ndarray) -> float:
    """max|H - H^dagger| relative to max|H| (0 for the zero matrix)."""
    scale = np.max(np.abs(op))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(op - op.conj().T)) / scale)
