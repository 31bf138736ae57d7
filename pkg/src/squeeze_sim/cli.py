"""Batch command-line front end.

Every output file ``NAME.csv`` / ``NAME.json`` is written together with a
``NAME.manifest.json`` describing the run. Exit codes: 0 success, 1
physics/config error, 2 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, hilbert
from .analysis import (
    DecayInputs,
    decayed_squeeze_factor,
    decayed_variance,
    default_sweep_grid,
    fig2_sweep,
    profile_squeeze_factor,
    quadrature_stats,
    squeezing_percent,
)
from .dynamics import EvolutionConfig, analytic_squeeze, apply_squeeze, evolve_td, max_norm_bound
from .errors import PopulationWarning, SqueezeSimError
from .model import (
    ELIMINATIONS,
    SystemParams,
    default_config_text,
    derive_effective,
    effective_hamiltonian_mode_td,
    full_hamiltonian_td,
    load_config,
    parse_config,
    resonant_detuning,
)
from .validation import run_validation

CAVITY_PRESETS = {
    "open": {"gamma_c": 1e3, "gamma_a": 1e2},
    "closed": {"gamma_c": 10.0, "gamma_a": 5e3},
}
POPULATION_WARN = 0.9


def fmt(x: float) -> str:
    """Fixed 12-significant-digit scientific format."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.11e}"


def to_csv(columns: Sequence[str], rows: Sequence[Sequence[float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


@dataclass
class RunManifest:
    command: str
    output: str
    params: dict
    effective: dict
    version: str = __version__
    duration_s: float = 0.0
    warnings: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _json_safe(obj.item())
    return obj


def dump_json(data: dict) -> str:
    return json.dumps(_json_safe(data), indent=2, sort_keys=True) + "\n"


# -- run functions (no I/O) -------------------------------------------------

def parse_initial(spec: str) -> complex:
    """'vacuum' or 'coherent:<complex>' -> coherent amplitude."""
    if spec == "vacuum":
        return 0j
    if spec.startswith("coherent:"):
        try:
            return complex(spec.split(":", 1)[1].replace(" ", ""))
        except ValueError:
            pass
    raise argparse.ArgumentTypeError(f"initial state must be 'vacuum' or 'coherent:<alpha>', got {spec!r}")


def run_resonant(p: SystemParams, t_final: float, alpha: complex = 0j, backend: str = "analytic",
                 samples: int = 20, elimination: str = "adiabatic", keep_detuning: bool = False,
                 on_leak: str = "raise"):
    """Squeezing time series on the two-photon resonance.

    Returns (columns, rows, trajectory_rows, info). ``trajectory_rows`` holds
    (t, amplitudes, min_variance, r, phi) for the numerical backends.
    """
    if not keep_detuning:
        p = p.replace(big_delta=resonant_detuning(p, elimination))
    eff = derive_effective(p, elimination)
    basis = p.basis
    psi0 = hilbert.coherent_state(basis, alpha)
    samples = 1 if t_final == 0 else max(1, samples)
    columns = ["t", "r", "var_min", "squeezing_pct"]
    rows, traj_rows = [], []
    info = {"params": p, "effective": eff}

    if backend == "analytic":
        for t in np.linspace(0.0, t_final, samples + 1) if t_final > 0 else [0.0]:
            s = analytic_squeeze(eff, t)
            st = quadrature_stats(apply_squeeze(psi0, s, on_leak=on_leak))
            rows.append([t, s.r, st.var_min, st.squeezing_pct])
        return columns, rows, traj_rows, info

    if backend == "effective":
        h = effective_hamiltonian_mode_td(eff, basis)
        start = psi0
    elif backend == "full":
        h = full_hamiltonian_td(p, basis)
        start = hilbert.atom_field_state("i", psi0)
        columns.append("pop_i")
    else:
        raise ValueError(f"unknown backend {backend!r}")

    if t_final == 0:
        traj = evolve_td(start, h, EvolutionConfig(0.0, on_leak=on_leak))
        stride = 1
    else:
        dt_max = 0.05 / max_norm_bound(h, t_final)
        stride = max(1, math.ceil(t_final / dt_max / samples))
        dt = t_final / (stride * samples)
        traj = evolve_td(start, h, EvolutionConfig(t_final, dt=dt, record_every=stride, on_leak=on_leak))
    low_pop = None
    for t, state in zip(traj.times, traj.states):
        if state.composite:
            pop = state.level_population("i")
            field_state = state.project("i")
            if pop < POPULATION_WARN and low_pop is None:
                low_pop = (t, pop)
        else:
            field_state = state
        st = quadrature_stats(field_state)
        row = [t, st.r, st.var_min, st.squeezing_pct]
        if state.composite:
            row.append(pop)
        rows.append(row)
        traj_rows.append((t, field_state.amplitudes, st.var_min, st.r, st.squeeze_angle))
    if low_pop is not None:
        warnings.warn(
            f"intermediate-level population fell to {low_pop[1]:.3f} at t={low_pop[0]:.3e} s; "
            "results are conditioned on detecting the atom in |i>",
            PopulationWarning,
        )
    info["steps"] = traj.steps
    info["dt"] = traj.dt
    info["max_norm_correction"] = traj.max_norm_correction
    info["max_leakage"] = traj.max_leakage
    return columns, rows, traj_rows, info


def parse_grid(spec: str) -> np.ndarray:
    try:
        lo, hi, n = spec.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be 'lo:hi:n', got {spec!r}") from None


def resolve_jobs(flag: Optional[int]) -> int:
    env = os.environ.get("SQUEEZE_SIM_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise SqueezeSimError(f"SQUEEZE_SIM_JOBS must be an integer, got {env!r}") from None
    return max(1, flag or 1)


def run_offres(p: SystemParams, t: float, grid: Optional[np.ndarray] = None, jobs: int = 1,
               elimination: str = "adiabatic"):
    eff = derive_effective(p, elimination)
    if grid is None:
        grid = default_sweep_grid(eff)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = fig2_sweep(eff, t, grid, mapper=lambda f, xs: pool.map(f, xs, chunksize=8))
    else:
        rows = fig2_sweep(eff, t, grid)
    return eff, rows


def run_dissipation(p: SystemParams, t: float, cavity: str = "open", elimination: str = "adiabatic") -> dict:
    if cavity in CAVITY_PRESETS:
        p = p.replace(**CAVITY_PRESETS[cavity])
    elif cavity != "custom":
        raise ValueError(f"cavity must be open, closed or custom, got {cavity!r}")
    eff = derive_effective(p, elimination)
    inp = DecayInputs(p.gamma_a, p.gamma_c, eff.xi_abs, t)
    var = decayed_variance(inp)
    return {
        "cavity": cavity,
        "t": t,
        "gamma_a": p.gamma_a,
        "gamma_c": p.gamma_c,
        "xi_abs": eff.xi_abs,
        "r_on": 2 * eff.xi_abs * t,
        "r_tilde": decayed_squeeze_factor(inp),
        "variance": var,
        "squeezing_pct": squeezing_percent(var),
    }


def run_profile(p: SystemParams, tau: float, speed: Optional[float] = None,
                reference_tau: Optional[float] = None, elimination: str = "adiabatic") -> dict:
    if speed is not None:
        p = p.replace(speed_mps=speed)
    if reference_tau is not None and p.speed_mps is not None:
        p = p.replace(speed_mps=p.speed_mps * reference_tau / tau)
    eff = derive_effective(p, elimination)
    r_prime = profile_squeeze_factor(p, tau, elimination)
    var = math.exp(-2 * r_prime) / 4
    return {
        "tau": tau,
        "waist_m": p.waist_m,
        "speed_mps": p.speed_mps,
        "r_prime": r_prime,
        "r_on": 2 * eff.xi_abs * tau,
        "variance": var,
        "squeezing_pct": squeezing_percent(var),
    }


# -- command wrappers (I/O) -------------------------------------------------

class _Output:
    def __init__(self, out_dir: Path, command: str):
        self.dir = out_dir
        self.command = command
        self.files = []

    def write(self, name: str, text: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        path.write_text(text)
        self.files.append(name)
        return path


def _load(config: str) -> SystemParams:
    if config == "default":
        return parse_config(default_config_text(), source="<default>")
    return load_config(config)


def _manifest(out: _Output, name: str, p: SystemParams, elimination: str, started: float,
              caught: list, extra: Optional[dict] = None, effective=None) -> None:
    if effective is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            effective = derive_effective(p, elimination)
    m = RunManifest(
        command=out.command,
        output=name,
        params=p.to_mapping(),
        effective=effective.to_mapping(),
        duration_s=time.perf_counter() - started,
        warnings=_unique_warnings(caught),
        extra=extra or {},
    )
    stem = name.rsplit(".", 1)[0]
    out.write(f"{stem}.manifest.json", dump_json(asdict(m)))


def _unique_warnings(caught: list) -> list:
    seen = []
    for w in caught:
        text = f"{w.category.__name__}: {w.message}"
        if text not in seen:
            seen.append(text)
    return seen


def cmd_resonant(args, out: _Output, caught: list, started: float) -> int:
    p = _load(args.config)
    columns, rows, traj_rows, info = run_resonant(
        p, args.t_final, args.initial, args.backend, args.samples, args.elimination, args.keep_detuning,
        args.on_leak,
    )
    out.write("resonant.csv", to_csv(columns, rows))
    extra = {k: v for k, v in info.items() if k not in ("params", "effective")}
    extra.update(backend=args.backend, initial=args.initial, samples=args.samples)
    if args.trajectory and traj_rows:
        dim = len(traj_rows[0][1])
        cols = ["t"]
        if args.amplitudes:
            cols += [f"{part}_{n}" for n in range(dim) for part in ("re", "im")]
        cols += ["min_variance", "r_extracted", "phi_extracted"]
        body = []
        for t, amps, var, r, phi in traj_rows:
            row = [t]
            if args.amplitudes:
                row += [x for c in amps for x in (c.real, c.imag)]
            row += [var, r, phi]
            body.append(row)
        out.write("trajectory.csv", to_csv(cols, body))
        _manifest(out, "trajectory.csv", info["params"], args.elimination, started, caught, extra, info["effective"])
    _manifest(out, "resonant.csv", info["params"], args.elimination, started, caught, extra, info["effective"])
    final = rows[-1]
    print(f"t={fmt(final[0])} r={final[1]:.4f} var_min={final[2]:.4e} squeezing={final[3]:.1f}%")
    return 0


def cmd_offres(args, out: _Output, caught: list, started: float) -> int:
    p = _load(args.config)
    jobs = resolve_jobs(args.jobs)
    eff, rows = run_offres(p, args.t, args.grid, jobs, args.elimination)
    columns = ["delta_big", "p_coupling", "r_off", "r_on", "ratio"]
    out.write("fig2.csv", to_csv(columns, [[r.delta_big, r.p_coupling, r.r_off, r.r_on, r.ratio] for r in rows]))
    flagged = sum(r.flagged for r in rows)
    _manifest(out, "fig2.csv", p, args.elimination, started, caught,
              {"t": args.t, "points": len(rows), "flagged_rows": flagged, "jobs": jobs}, eff)
    print(f"{len(rows)} sweep points, {flagged} flagged")
    return 0


def cmd_dissipation(args, out: _Output, caught: list, started: float) -> int:
    p = _load(args.config)
    result = run_dissipation(p, args.t, args.cavity, args.elimination)
    out.write("dissipation.json", dump_json(result))
    _manifest(out, "dissipation.json", p.replace(gamma_a=result["gamma_a"], gamma_c=result["gamma_c"]),
              args.elimination, started, caught)
    print(f"r_tilde={result['r_tilde']:.4f} variance={result['variance']:.4e} "
          f"squeezing={result['squeezing_pct']:.1f}%")
    return 0


def cmd_profile(args, out: _Output, caught: list, started: float) -> int:
    p = _load(args.config)
    result = run_profile(p, args.tau, args.speed, args.reference_tau, args.elimination)
    out.write("profile.json", dump_json(result))
    _manifest(out, "profile.json", p.replace(speed_mps=result["speed_mps"]), args.elimination, started, caught)
    print(f"r_prime={result['r_prime']:.4f} variance={result['variance']:.4e} "
          f"squeezing={result['squeezing_pct']:.1f}% (flat profile r_on={result['r_on']:.4f})")
    return 0


def cmd_validate(args, out: _Output, caught: list, started: float) -> int:
    p = _load(args.config)
    results = run_validation(p, alpha=args.alpha)
    for res in results:
        print(res.line())
    report = {"passed": all(r.passed for r in results), "checks": [asdict(r) for r in results]}
    out.write("validate.json", dump_json(report))
    _manifest(out, "validate.json", p, "adiabatic", started, caught)
    return 0 if report["passed"] else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="squeeze-sim",
        description="Cavity-field squeezing by a driven three-level atom.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="config file (key = value lines) or 'default'")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--elimination", choices=ELIMINATIONS, default="adiabatic",
                        help="effective-coupling coefficients (default: adiabatic)")

    sp = sub.add_parser("resonant", help="squeezing time series on resonance")
    common(sp)
    sp.add_argument("--t-final", type=float, required=True, help="interaction time (s)")
    sp.add_argument("--initial", type=parse_initial, default=0j, help="vacuum | coherent:<alpha>")
    sp.add_argument("--backend", choices=("analytic", "effective", "full"), default="analytic")
    sp.add_argument("--samples", type=int, default=20, help="number of time intervals recorded")
    sp.add_argument("--keep-detuning", action="store_true",
                    help="use the config drive detuning instead of retuning to 2 chi")
    sp.add_argument("--on-leak", choices=("raise", "warn"), default="raise",
                    help="Fock-tail leakage above 1e-6: abort (default) or flag the run")
    sp.add_argument("--trajectory", action="store_true", help="also write trajectory.csv")
    sp.add_argument("--amplitudes", action="store_true", help="include amplitudes in trajectory.csv")
    sp.set_defaults(func=cmd_resonant)

    sp = sub.add_parser("offres", help="off/on-resonant squeeze-factor ratio versus detuning")
    common(sp)
    sp.add_argument("--t", type=float, required=True, help="interaction time (s)")
    sp.add_argument("--grid", type=parse_grid, default=None, help="detuning grid lo:hi:n in s^-1")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes (SQUEEZE_SIM_JOBS overrides)")
    sp.set_defaults(func=cmd_offres)

    sp = sub.add_parser("dissipation", help="squeezing with atomic decay and cavity damping")
    common(sp)
    sp.add_argument("--t", type=float, required=True, help="interaction time (s)")
    sp.add_argument("--cavity", choices=("open", "closed", "custom"), default="custom")
    sp.set_defaults(func=cmd_dissipation)

    sp = sub.add_parser("profile", help="squeezing with the Gaussian mode profile")
    common(sp)
    sp.add_argument("--tau", type=float, required=True, help="transit time (s)")
    sp.add_argument("--speed", type=float, default=None, help="override atom speed (m/s)")
    sp.add_argument("--reference-tau", type=float, default=None,
                    help="scale the speed by reference_tau / tau (fixed transit length)")
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("validate", help="run the invariant suite")
    common(sp)
    sp.add_argument("--alpha", type=complex, default=1.0, help="coherent amplitude used by the checks")
    sp.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = _Output(args.out, args.command)
    started = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            code = args.func(args, out, caught, started)
        except (SqueezeSimError, ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    for text in _unique_warnings(caught):
        print(f"warning: {text}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
