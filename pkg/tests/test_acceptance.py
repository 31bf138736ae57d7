"""Acceptance criteria, one test each, at the stated tolerances.

Each test records a PASS/FAIL line that is echoed in the terminal summary.
"""

import math
import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from squeeze_sim import analysis, hilbert
from squeeze_sim.analysis import OffResonantInputs, off_resonant_factor, quadrature_stats
from squeeze_sim.cli import run_dissipation, run_profile, run_resonant
from squeeze_sim.dynamics import EvolutionConfig, analytic_squeeze, apply_squeeze, evolve_td
from squeeze_sim.model import derive_effective, effective_hamiltonian_mode_td, reference_params
from squeeze_sim.validation import run_validation

T_REF = 2e-4


def _record(number, title, checks):
    """checks: list of (label, passed, detail). Returns overall pass flag."""
    ok = all(passed for _, passed, _ in checks)
    details = "; ".join(f"{label}: {detail}{'' if passed else ' [miss]'}" for label, passed, detail in checks)
    line = f"{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {details}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_criterion_1_ideal_resonant_run():
    p = reference_params()
    start = time.perf_counter()
    _, rows, _, _ = run_resonant(p, T_REF, backend="analytic", samples=1)
    elapsed = time.perf_counter() - start
    _, r, var, pct = rows[-1]
    ok = _record(1, "ideal resonant run", [
        ("r_on", abs(r - 1.0667) <= 1e-3, f"{r:.5f}"),
        ("var_min", abs(var / 2.95e-2 - 1) <= 0.02, f"{var:.4e}"),
        ("squeezing", abs(pct - 88) <= 1, f"{pct:.2f}%"),
        ("runtime", elapsed < 1.0, f"{elapsed * 1e3:.0f} ms"),
    ])
    assert ok


def test_criterion_2_oracle_equivalence():
    p = reference_params()
    eff = derive_effective(p)
    basis = p.basis
    h = effective_hamiltonian_mode_td(eff, basis)
    checks = []
    start = time.perf_counter()
    for t in (T_REF, 1.2 / (2 * eff.xi_abs)):
        for alpha in (0.0, 1.0):
            psi0 = hilbert.coherent_state(basis, alpha)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                traj = evolve_td(psi0, h, EvolutionConfig(t, record_every=10**6, on_leak="warn"))
                exact = apply_squeeze(psi0, analytic_squeeze(eff, t), on_leak="warn")
            num, ref = quadrature_stats(traj.final).var_min, quadrature_stats(exact).var_min
            rel = abs(num - ref) / ref
            r = 2 * eff.xi_abs * t
            checks.append((f"r={r:.3f} alpha={alpha:g}", rel < 1e-5,
                           f"rel diff {rel:.1e}, tail {traj.max_leakage:.1e}"))
    elapsed = time.perf_counter() - start
    checks.append(("runtime", elapsed < 10, f"{elapsed:.1f} s"))
    assert _record(2, "oracle equivalence", checks)


@pytest.mark.slow
def test_criterion_3_adiabatic_validation():
    p0 = reference_params()
    deviations = []
    checks = []
    start = time.perf_counter()
    for ratio in (15, 30):
        p = p0.replace(delta=ratio * abs(p0.lambda_g))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _, rows, _, info = run_resonant(p, T_REF, backend="full", samples=1, on_leak="warn")
        eff = info["effective"]
        full = rows[-1][2]
        predicted = math.exp(-4 * eff.xi_abs * T_REF) / 4
        dev = abs(full - predicted) / predicted
        deviations.append(dev)
        checks.append((f"delta={ratio}|lambda|", ratio != 15 or dev < 0.10,
                       f"full {full:.4e} vs effective {predicted:.4e}, deviation {dev:.1%}, pop_i {rows[-1][4]:.3f}"))
    elapsed = time.perf_counter() - start
    checks.append(("shrinks", deviations[1] < deviations[0], f"{deviations[0]:.1%} -> {deviations[1]:.1%}"))
    checks.append(("runtime", elapsed < 300, f"{elapsed:.0f} s"))
    assert _record(3, "adiabatic validation", checks)


def test_criterion_4_dissipation():
    p = reference_params()
    op = run_dissipation(p, T_REF, "open")
    cl = run_dissipation(p, T_REF, "closed")
    ok = _record(4, "dissipation formulas", [
        ("open variance", abs(op["variance"] / 6.99e-2 - 1) <= 0.01,
         f"{op['variance']:.4e} ({op['squeezing_pct']:.1f}%)"),
        ("closed variance", abs(cl["variance"] / 4.70e-2 - 1) <= 0.01,
         f"{cl['variance']:.4e} ({cl['squeezing_pct']:.1f}%)"),
        ("r_tilde", abs(op["r_tilde"] / 1.061 - 1) <= 0.005, f"{op['r_tilde']:.4f}"),
    ])
    assert ok


def test_criterion_5_off_resonant_suite():
    eff = derive_effective(reference_params())
    identity = max(off_resonant_factor(OffResonantInputs(pc, eff.xi_abs), 0.0) for pc in (1.1, 2, 10, 100))
    ratio = off_resonant_factor(OffResonantInputs(1e3, eff.xi_abs), T_REF) / (2 * eff.xi_abs * T_REF)
    inp = OffResonantInputs(1.5, eff.xi_abs)
    rs = np.array([off_resonant_factor(inp, t) for t in np.linspace(0, 5e-4, 100)])
    rows = analysis.fig2_sweep(eff, T_REF, analysis.default_sweep_grid(eff))
    ratios = np.array([r.ratio for r in rows])
    centre = int(np.argmax(ratios))
    rising = bool(np.all(np.diff(ratios[: centre + 1]) > 0) and np.all(np.diff(ratios[centre:]) < 0))
    shape = rising and ratios[centre] == 1.0 and not any(r.flagged for r in rows)
    ok = _record(5, "off-resonant suite", [
        ("(a) t=0 identity", identity < 1e-12, f"max r_off(0) {identity:.1e}"),
        ("(b) |P|=1e3 ratio", 0.999 <= ratio <= 1.001, f"{ratio:.7f}"),
        ("(c) monotone |P|=1.5", bool(np.all(np.diff(rs) >= 0)), f"r_off(5e-4)={rs[-1]:.4f}"),
        ("(d) sweep shape", shape, f"ratio {ratios[0]:.3f} at |P|=1.01 rising to {ratios[centre]:.3f}"),
    ])
    assert ok


def test_criterion_6_profile_correction():
    p = reference_params()
    v = analysis.speed_for_profile_factor(0.4, derive_effective(p).xi_abs, p.waist_m)
    first = run_profile(p, T_REF, speed=v)
    second = run_profile(p, 5e-4, speed=v, reference_tau=T_REF)
    ok = _record(6, "profile correction", [
        ("speed", abs(v - 100) < 1, f"{v:.3f} m/s"),
        ("r' at 2e-4 s", abs(first["r_prime"] / 0.40 - 1) <= 0.05, f"{first['r_prime']:.4f}"),
        ("variance", abs(first["variance"] / 1.1e-1 - 1) <= 0.05, f"{first['variance']:.4e}"),
        ("squeezing", abs(first["squeezing_pct"] - 55) <= 2, f"{first['squeezing_pct']:.1f}%"),
        ("r' at 5e-4 s", abs(second["r_prime"] - 1.0) <= 0.05, f"{second['r_prime']:.4f}"),
    ])
    assert ok


def test_criterion_7_property_suite():
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        results = run_validation(reference_params())
    elapsed = time.perf_counter() - start
    checks = [(r.name, r.passed, f"{r.measured:.1e}") for r in results]
    checks.append(("runtime", elapsed < 60, f"{elapsed:.1f} s"))
    assert _record(7, "property suite", checks)
