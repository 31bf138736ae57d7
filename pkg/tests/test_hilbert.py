import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from squeeze_sim import hilbert
from squeeze_sim.errors import DimensionMismatch, TruncationError
from squeeze_sim.hilbert import FockBasis


def test_annihilation_small():
    np.testing.assert_array_equal(hilbert.annihilation(FockBasis(1)), [[0, 1], [0, 0]])
    a = hilbert.annihilation(FockBasis(2))
    assert a[1, 2] == pytest.approx(1.41421356, abs=1e-8)
    assert a.shape == (3, 3)


def test_basis_rejects_zero_cutoff():
    with pytest.raises(ValueError):
        FockBasis(0)


def test_commutator_identity_below_cutoff():
    basis = FockBasis(32)
    a = hilbert.annihilation(basis)
    comm = a @ a.conj().T - a.conj().T @ a
    np.testing.assert_allclose(comm[:-1, :-1], np.eye(basis.dim - 1), atol=1e-12)
    # only the top level is affected by truncation
    assert comm[-1, -1] == pytest.approx(-basis.n_max)


def test_number_spectrum():
    basis = FockBasis(10)
    a = hilbert.annihilation(basis)
    np.testing.assert_allclose(np.diag(a.conj().T @ a).real, np.arange(11))


def test_coherent_vacuum():
    psi = hilbert.coherent_state(FockBasis(8), 0)
    np.testing.assert_array_equal(psi.amplitudes, hilbert.vacuum(FockBasis(8)).amplitudes)


def test_coherent_mean_field():
    basis = FockBasis(32)
    psi = hilbert.coherent_state(basis, 1.0)
    assert abs(hilbert.expectation(psi, hilbert.annihilation(basis)) - 1.0) < 1e-9


def test_coherent_photon_number():
    basis = FockBasis(64)
    psi = hilbert.coherent_state(basis, 2j)
    assert abs(hilbert.expectation(psi, hilbert.number(basis)) - 4.0) < 1e-8


@settings(max_examples=40, deadline=None)
@given(mod=st.floats(0, np.sqrt(63 / 4)), arg=st.floats(-np.pi, np.pi))
def test_coherent_is_eigenstate(mod, arg):
    basis = FockBasis(63)
    alpha = mod * np.exp(1j * arg)
    psi = hilbert.coherent_state(basis, alpha)
    residual = hilbert.annihilation(basis) @ psi.amplitudes - alpha * psi.amplitudes
    assert np.linalg.norm(residual) < 1e-7
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n_max, alpha", [(4, 2.0), (4, 1.0), (10, 1.8)])
def test_coherent_truncation_guard(n_max, alpha):
    with pytest.raises(TruncationError):
        hilbert.coherent_state(FockBasis(n_max), alpha)


def test_projector_actions():
    basis = FockBasis(5)
    g0 = hilbert.atom_field_state("g", hilbert.fock_state(basis, 0))
    out = hilbert.atomic_projector("g", "g", basis) @ g0.amplitudes
    np.testing.assert_array_equal(out, g0.amplitudes)

    i3 = hilbert.atom_field_state("i", hilbert.fock_state(basis, 3))
    e3 = hilbert.atom_field_state("e", hilbert.fock_state(basis, 3))
    np.testing.assert_array_equal(hilbert.atomic_projector("e", "i", basis) @ i3.amplitudes, e3.amplitudes)


def test_projector_completeness():
    basis = FockBasis(6)
    total = sum(hilbert.atomic_projector(k, k, basis) for k in hilbert.LEVELS)
    np.testing.assert_array_equal(total, np.eye(basis.composite_dim))
    # s_kl s_lk = s_kk
    for k in hilbert.LEVELS:
        for l in hilbert.LEVELS:
            prod = hilbert.atomic_projector(k, l, basis) @ hilbert.atomic_projector(l, k, basis)
            np.testing.assert_array_equal(prod, hilbert.atomic_projector(k, k, basis))


def test_projector_bad_level():
    with pytest.raises(ValueError):
        hilbert.atomic_projector("x", "g", FockBasis(2))


def test_level_major_ordering():
    basis = FockBasis(3)
    psi = hilbert.atom_field_state("e", hilbert.fock_state(basis, 2))
    assert np.argmax(np.abs(psi.amplitudes)) == 2 * basis.dim + 2
    assert psi.level_population("e") == pytest.approx(1.0)
    assert psi.level_population("i") == 0.0


def test_expectation_basics():
    basis = FockBasis(10)
    vac = hilbert.vacuum(basis)
    assert hilbert.expectation(vac, hilbert.number(basis)) == 0
    rng = np.random.default_rng(3)
    v = rng.normal(size=11) + 1j * rng.normal(size=11)
    psi = hilbert.StateVector(v / np.linalg.norm(v), basis)
    assert abs(hilbert.expectation(psi, np.eye(11)) - 1) < 1e-12
    h = rng.normal(size=(11, 11)) + 1j * rng.normal(size=(11, 11))
    h = h + h.conj().T
    assert abs(hilbert.expectation(psi, h).imag) < 1e-12


def test_expectation_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        hilbert.expectation(hilbert.vacuum(FockBasis(3)), np.eye(5))
    with pytest.raises(DimensionMismatch):
        hilbert.StateVector(np.ones(3), FockBasis(3))


def test_state_is_immutable():
    psi = hilbert.vacuum(FockBasis(3))
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 2


def test_tail_probability_uses_top_tenth():
    basis = FockBasis(63)
    assert basis.top_levels() == 7
    assert hilbert.fock_state(basis, 57).tail_probability() == 1.0
    assert hilbert.fock_state(basis, 56).tail_probability() == 0.0


def test_project_renormalizes():
    basis = FockBasis(4)
    amps = np.zeros(basis.composite_dim, complex)
    amps[basis.dim + 1] = 0.6
    amps[2 * basis.dim] = 0.8
    psi = hilbert.StateVector(amps, basis, composite=True)
    field = psi.project("i")
    assert field.norm() == pytest.approx(1.0)
    assert psi.level_population("i") == pytest.approx(0.36)
