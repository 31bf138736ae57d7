"""Physical parameters, derived effective quantities and Hamiltonian builders.

All Hamiltonians are returned with hbar = 1, so matrix entries are angular
frequencies in s^-1. Three pictures are available:

* the full atom-field Hamiltonian in the frame where the cavity and atomic
  Bohr frequencies have been removed (atom (x) Fock, dim ``3 * (n_max + 1)``);
* the three-level effective Hamiltonian obtained after eliminating the fast
  atomic coherences (same space);
* the single-mode effective Hamiltonian acting on the field attached to the
  intermediate level ``|i>`` (Fock only), in the Schroedinger picture.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import hilbert
from .errors import ConfigError, DispersiveWarning, ProfileMissing
from .hilbert import FockBasis

DISPERSIVE_MARGIN = 10.0

CONFIG_KEYS = (
    "lambda_g_re",
    "lambda_g_im",
    "lambda_e_re",
    "lambda_e_im",
    "omega_rabi_re",
    "omega_rabi_im",
    "delta",
    "big_delta",
    "omega_cavity",
    "gamma_a",
    "gamma_c",
    "waist_m",
    "speed_mps",
    "n_max",
)


@dataclass(frozen=True)
class SystemParams:
    """Inputs of the driven three-level atom + cavity mode model (rates in s^-1).

    ``big_delta`` is the drive detuning, the drive frequency being
    ``2 * omega_cavity + big_delta``. ``waist_m`` and ``speed_mps`` describe the
    Gaussian transverse mode profile; both must be set for profile quantities.
    """

    lambda_g: complex
    lambda_e: complex
    omega_rabi: complex
    delta: float
    big_delta: float = 0.0
    omega_cavity: float = 0.0
    gamma_a: float = 0.0
    gamma_c: float = 0.0
    waist_m: Optional[float] = None
    speed_mps: Optional[float] = None
    n_max: int = 63

    def __post_init__(self):
        for name in ("lambda_g", "lambda_e", "omega_rabi"):
            value = complex(getattr(self, name))
            if not cmath.isfinite(value):
                raise ConfigError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        for name in ("delta", "big_delta", "omega_cavity", "gamma_a", "gamma_c"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.delta == 0:
            raise ConfigError("delta must be nonzero (dispersive detuning)")
        if self.gamma_a < 0 or self.gamma_c < 0:
            raise ConfigError("decay rates gamma_a, gamma_c must be >= 0")
        if self.waist_m is not None and not (math.isfinite(self.waist_m) and self.waist_m > 0):
            raise ConfigError("waist_m must be a positive length")
        if self.speed_mps is not None and not (math.isfinite(self.speed_mps) and self.speed_mps >= 0):
            raise ConfigError("speed_mps must be >= 0")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ConfigError("n_max must be an integer >= 1")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def basis(self) -> FockBasis:
        return FockBasis(self.n_max)

    @property
    def has_profile(self) -> bool:
        return self.waist_m is not None and self.speed_mps is not None

    def dispersive_ratio(self) -> float:
        """|delta| divided by the largest of |lambda_g|, |lambda_e|, |Omega|, |Delta|."""
        largest = max(abs(self.lambda_g), abs(self.lambda_e), abs(self.omega_rabi), abs(self.big_delta))
        return math.inf if largest == 0 else abs(self.delta) / largest

    def check_dispersive(self) -> Optional[str]:
        """Warn (DispersiveWarning) and return the message if the guard fails."""
        ratio = self.dispersive_ratio()
        if ratio >= DISPERSIVE_MARGIN:
            return None
        msg = (
            f"dispersive guard: |delta| is only {ratio:.3g}x the largest coupling/detuning "
            f"(need >= {DISPERSIVE_MARGIN:g}x); effective-model results are unreliable"
        )
        warnings.warn(msg, DispersiveWarning, stacklevel=2)
        return msg

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def to_mapping(self) -> dict:
        out = {
            "lambda_g_re": self.lambda_g.real,
            "lambda_g_im": self.lambda_g.imag,
            "lambda_e_re": self.lambda_e.real,
            "lambda_e_im": self.lambda_e.imag,
            "omega_rabi_re": self.omega_rabi.real,
            "omega_rabi_im": self.omega_rabi.imag,
            "delta": self.delta,
            "big_delta": self.big_delta,
            "omega_cavity": self.omega_cavity,
            "gamma_a": self.gamma_a,
            "gamma_c": self.gamma_c,
            "waist_m": self.waist_m,
            "speed_mps": self.speed_mps,
            "n_max": self.n_max,
        }
        return out

    @classmethod
    def from_mapping(cls, values: dict) -> "SystemParams":
        unknown = set(values) - set(CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        base = reference_params().to_mapping()
        base.update(values)
        return cls(
            lambda_g=complex(base["lambda_g_re"], base["lambda_g_im"]),
            lambda_e=complex(base["lambda_e_re"], base["lambda_e_im"]),
            omega_rabi=complex(base["omega_rabi_re"], base["omega_rabi_im"]),
            delta=base["delta"],
            big_delta=base["big_delta"],
            omega_cavity=base["omega_cavity"],
            gamma_a=base["gamma_a"],
            gamma_c=base["gamma_c"],
            waist_m=base["waist_m"],
            speed_mps=base["speed_mps"],
            n_max=base["n_max"],
        )


def reference_params() -> SystemParams:
    """Rydberg-atom / microwave-cavity parameter set used throughout the tests.

    lambda_g = lambda_e = Omega = 3e5 s^-1, delta = 15 lambda_g, drive tuned to
    the effective two-photon resonance (big_delta = 2 chi), open-cavity decay
    rates, 6 mm waist and an atom speed chosen so that the profile-corrected
    squeeze factor at a 0.2 ms transit is 0.4.
    """
    lam = 3e5
    delta = 15 * lam
    chi = 2 * (2 * lam**2) / delta
    xi_abs = 2 * lam**3 / delta**2
    waist = 6e-3
    speed = 2 * xi_abs * waist * math.sqrt(math.pi / 2) / 0.4
    return SystemParams(
        lambda_g=lam,
        lambda_e=lam,
        omega_rabi=lam,
        delta=delta,
        big_delta=2 * chi,
        omega_cavity=0.0,
        gamma_a=1e2,
        gamma_c=1e3,
        waist_m=waist,
        speed_mps=speed,
        n_max=63,
    )


# -- config files -----------------------------------------------------------

def _parse_value(key: str, raw: str, where: str):
    if raw.lower() in ("none", ""):
        if key in ("waist_m", "speed_mps"):
            return None
        raise ConfigError(f"{where}: {key} needs a value")
    try:
        if key == "n_max":
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {key} = {raw!r}") from None


def parse_config(text: str, source: str = "<config>") -> SystemParams:
    """Parse ``key = value`` lines; '#' starts a comment. Missing keys take reference values."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw, where)
    try:
        return SystemParams.from_mapping(values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> SystemParams:
    path = Path(path)
    return parse_config(path.read_text(), source=str(path))


def format_config(p: SystemParams) -> str:
    lines = []
    for key, value in p.to_mapping().items():
        if value is None:
            lines.append(f"{key} = none")
        elif key == "n_max":
            lines.append(f"{key} = {value}")
        else:
            lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"


def dump_config(p: SystemParams, path) -> None:
    Path(path).write_text(format_config(p))


def default_config_text() -> str:
    return resources.files("squeeze_sim").joinpath("data/default.cfg").read_text()


# -- effective quantities ---------------------------------------------------

@dataclass(frozen=True)
class EffectiveParams:
    """Quantities of the single-mode effective Hamiltonian.

    ``xi = |xi| exp(-i theta)``; ``p_coupling = 4|xi| / (2 chi - big_delta)``
    is infinite when the drive sits on the two-photon resonance.
    """

    chi: float
    varpi: float
    xi: complex
    nu: float
    big_delta: float
    p_coupling: float
    resonant: bool = field(default=False)

    @property
    def xi_abs(self) -> float:
        return abs(self.xi)

    @property
    def theta(self) -> float:
        return -cmath.phase(self.xi)

    def to_mapping(self) -> dict:
        d = asdict(self)
        d["xi_re"], d["xi_im"] = self.xi.real, self.xi.imag
        del d["xi"]
        d["xi_abs"] = self.xi_abs
        d["theta"] = self.theta
        return d


ELIMINATIONS = ("adiabatic", "perturbative")


def coupling_parameter(xi_abs: float, chi: float, big_delta: float) -> float:
    detuning = 2 * chi - big_delta
    scale = max(abs(2 * chi), abs(big_delta), 1e-300)
    if abs(detuning) <= 1e-12 * scale:
        return math.inf
    return 4 * xi_abs / detuning


def derive_effective(p: SystemParams, elimination: str = "adiabatic") -> EffectiveParams:
    """Dispersive shift, effective frequency and two-photon amplitude.

    ``elimination="adiabatic"`` gives chi = 2(|lg|^2 + |le|^2)/delta and
    xi = 2 Omega lg* le* / delta^2, the coefficients obtained by substituting
    the stationary coherences into the Hamiltonian. ``"perturbative"`` gives
    the second-order / third-order perturbation theory coefficients, which are
    half as large; these are the ones the full dynamics actually follow.
    """
    if elimination not in ELIMINATIONS:
        raise ValueError(f"elimination must be one of {ELIMINATIONS}")
    p.check_dispersive()
    factor = 2.0 if elimination == "adiabatic" else 1.0
    chi = factor * (abs(p.lambda_g) ** 2 + abs(p.lambda_e) ** 2) / p.delta
    xi = factor * p.omega_rabi * p.lambda_g.conjugate() * p.lambda_e.conjugate() / p.delta**2
    pc = coupling_parameter(abs(xi), chi, p.big_delta)
    return EffectiveParams(
        chi=chi,
        varpi=p.omega_cavity + chi,
        xi=complex(xi),
        nu=2 * p.omega_cavity + p.big_delta,
        big_delta=p.big_delta,
        p_coupling=pc,
        resonant=math.isinf(pc),
    )


def resonant_detuning(p: SystemParams, elimination: str = "adiabatic") -> float:
    """The drive detuning big_delta = 2 chi that puts the drive on resonance."""
    factor = 2.0 if elimination == "adiabatic" else 1.0
    return 2 * factor * (abs(p.lambda_g) ** 2 + abs(p.lambda_e) ** 2) / p.delta


# -- time-dependent Hamiltonians -------------------------------------------

Coefficient = Callable[[float], complex]


def _one(t: float) -> complex:
    return 1.0


class DrivenHamiltonian:
    """H(t) = static + sum_k [c_k(t) M_k + h.c.].

    Calling the object returns the dense matrix at time t; ``apply`` computes
    H(t) @ y without forming it, which is what the integrator uses.
    """

    def __init__(self, static: np.ndarray, drives=()):
        self.static = np.asarray(static, dtype=complex)
        self.drives = tuple((c, np.asarray(m, dtype=complex)) for c, m in drives)
        self._adjoints = tuple(m.conj().T.copy() for _, m in self.drives)
        self.dim = self.static.shape[0]

    def __call__(self, t: float) -> np.ndarray:
        h = self.static.copy()
        for c, m in self.drives:
            cm = c(t) * m
            h += cm + cm.conj().T
        return h

    def apply(self, t: float, y: np.ndarray) -> np.ndarray:
        out = self.static @ y
        for (c, m), m_dag in zip(self.drives, self._adjoints):
            ct = c(t)
            if ct != 0:
                out += ct * (m @ y) + np.conj(ct) * (m_dag @ y)
        return out

    def norm_bound(self, t: float) -> float:
        """Max absolute row sum of H(t), an upper bound on its spectral radius."""
        return float(np.max(np.sum(np.abs(self(t)), axis=1)))


def _rotating(freq: float, amplitude: complex = 1.0) -> Coefficient:
    def coef(t: float) -> complex:
        return amplitude * cmath.exp(-1j * freq * t)
    return coef


def full_hamiltonian_td(p: SystemParams, basis: Optional[FockBasis] = None,
                        transit: Optional[float] = None) -> DrivenHamiltonian:
    """Atom-field Hamiltonian in the frame rotating with the bare frequencies.

    H = lg a s_ig + le a s_ei + Omega e^{-i Delta t} s_eg + h.c. - delta (s_gg + s_ee).
    With ``transit`` set, both couplings carry the Gaussian profile factor of
    an atom crossing the mode in that time.
    """
    basis = basis or p.basis
    a = hilbert.field_operator(hilbert.annihilation(basis))
    s = lambda k, l: hilbert.atomic_projector(k, l, basis)  # noqa: E731
    static = -p.delta * (s("g", "g") + s("e", "e"))
    coupling = p.lambda_g * a @ s("i", "g") + p.lambda_e * a @ s("e", "i")
    drives = [(_rotating(p.big_delta), p.omega_rabi * s("e", "g"))]
    if transit is None:
        static = static + coupling + coupling.conj().T
    else:
        def f(t: float) -> complex:
            return profile_factor(p, t, transit)
        drives.append((f, coupling))
    return DrivenHamiltonian(static, drives)


def full_hamiltonian(p: SystemParams, t: float, basis: Optional[FockBasis] = None) -> np.ndarray:
    return full_hamiltonian_td(p, basis)(t)


def effective_hamiltonian_full_td(p: SystemParams, basis: Optional[FockBasis] = None) -> DrivenHamiltonian:
    """Three-level effective Hamiltonian after eliminating s_ig and s_ei.

    Operator ordering is already symmetrized in this form; the (2n+1) factor
    carries the vacuum contribution of that symmetrization.
    """
    basis = basis or p.basis
    s = lambda k, l: hilbert.atomic_projector(k, l, basis)  # noqa: E731
    a = hilbert.field_operator(hilbert.annihilation(basis))
    two_n_plus_1 = hilbert.field_operator(2 * hilbert.number(basis) + hilbert.identity(basis))
    lg2, le2 = abs(p.lambda_g) ** 2, abs(p.lambda_e) ** 2
    lsum = lg2 + le2
    d = p.delta
    gg, ii, ee = s("g", "g"), s("i", "i"), s("e", "e")
    eg = s("e", "g")
    lg_le = p.lambda_g * p.lambda_e

    static = -d * (gg + ee) - (two_n_plus_1 @ (lg2 * gg - lsum * ii + le2 * ee)) / d
    dressed_drive = p.omega_rabi * (eg - lsum / (2 * d**2) * two_n_plus_1 @ eg)
    two_photon_atomic = -(2 / d) * lg_le * (a @ a) @ eg
    two_photon_field = -(lg_le * p.omega_rabi.conjugate() / d**2) * (a @ a) @ (gg + ee - 2 * ii)
    drives = [
        (_rotating(p.big_delta), dressed_drive),
        (_one, two_photon_atomic),
        (_rotating(-p.big_delta), two_photon_field),
    ]
    return DrivenHamiltonian(static, drives)


def effective_hamiltonian_full(p: SystemParams, t: float, basis: Optional[FockBasis] = None) -> np.ndarray:
    return effective_hamiltonian_full_td(p, basis)(t)


def effective_hamiltonian_mode_td(eff: EffectiveParams, basis: FockBasis) -> DrivenHamiltonian:
    """varpi a^dag a + xi e^{-i nu t} a^dag^2 + h.c. on the Fock space."""
    ad = hilbert.creation(basis)
    static = eff.varpi * hilbert.number(basis)
    return DrivenHamiltonian(static, [(_rotating(eff.nu), eff.xi * (ad @ ad))])


def effective_hamiltonian_mode(eff: EffectiveParams, t: float, basis: FockBasis) -> np.ndarray:
    return effective_hamiltonian_mode_td(eff, basis)(t)


# -- Gaussian mode profile --------------------------------------------------

def require_profile(p: SystemParams) -> None:
    if not p.has_profile:
        raise ProfileMissing("waist_m and speed_mps must both be set for profile quantities")


def atom_position(p: SystemParams, t: float, transit: float) -> float:
    """Distance from the cavity axis, x(t) = v (t - transit/2)."""
    require_profile(p)
    if transit <= 0:
        raise ValueError("transit time must be > 0")
    return p.speed_mps * (t - transit / 2)


def profile_factor(p: SystemParams, t: float, transit: float) -> float:
    """Field envelope f = exp(-x^2 / w^2) seen by the atom at time t."""
    x = atom_position(p, t, transit)
    return math.exp(-(x / p.waist_m) ** 2)


def profile_coupling(p: SystemParams, t: float, transit: float) -> tuple[complex, complex]:
    f = profile_factor(p, t, transit)
    return p.lambda_g * f, p.lambda_e * f
