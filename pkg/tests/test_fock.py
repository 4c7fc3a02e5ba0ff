import math

import numpy as np
import pytest

from kerrlep import (FockDensityMatrix, InvalidSpaceError, InvalidStateError,
                     SystemParams, TruncatedSpace, TruncationError,
                     cat_basis_params, reference_params)
from kerrlep import fock

# frozen: exp(-2 * 1.52^2)
OVERLAP_152 = 0.0098449169763924435


def test_annihilation_dim2():
    a = fock.annihilation(TruncatedSpace(2))
    assert np.array_equal(a, np.array([[0, 1], [0, 0]], dtype=complex))


def test_annihilation_matrix_element():
    a = fock.annihilation(TruncatedSpace(4))
    assert a[2, 3] == pytest.approx(math.sqrt(3.0), abs=1e-15)


def test_number_operator_eigenvalue():
    space = TruncatedSpace(8)
    n = fock.creation(space) @ fock.annihilation(space)
    basis3 = np.zeros(8, dtype=complex)
    basis3[3] = 1.0
    assert np.vdot(basis3, n @ basis3).real == pytest.approx(3.0, abs=1e-14)


def test_invalid_space():
    with pytest.raises(InvalidSpaceError):
        TruncatedSpace(1)
    with pytest.raises(InvalidSpaceError):
        TruncatedSpace(0)


def test_commutator_on_interior_block():
    space = TruncatedSpace(30)
    a = fock.annihilation(space)
    comm = a @ fock.creation(space) - fock.creation(space) @ a
    interior = comm[:29, :29] - np.eye(29)
    assert np.max(np.abs(interior)) <= 1e-12


def test_coherent_vacuum():
    space = TruncatedSpace(10)
    v = fock.coherent_state(0.0, space)
    expect = np.zeros(10)
    expect[0] = 1.0
    assert np.allclose(v, expect, atol=0)


def test_coherent_overlap_against_closed_form(space30):
    plus = fock.coherent_state(1.52, space30)
    minus = fock.coherent_state(-1.52, space30)
    overlap = abs(np.vdot(plus, minus))
    assert overlap == pytest.approx(OVERLAP_152, abs=1e-10)


def test_coherent_mean_photon_number(space30):
    v = fock.coherent_state(1.52, space30)
    n = fock.creation(space30) @ fock.annihilation(space30)
    assert np.vdot(v, n @ v).real == pytest.approx(1.52 ** 2, abs=1e-9)


def test_coherent_truncation_error_carries_required_dim():
    with pytest.raises(TruncationError) as err:
        fock.coherent_state(3.0, TruncatedSpace(12))
    need = err.value.required_dim
    assert need is not None and need > 12
    fock.coherent_state(3.0, TruncatedSpace(need))  # must now succeed
    assert fock.coherent_tail(3.0, need) < 1e-12


def test_cat_parity_support(space30):
    plus = fock.cat_state(1.52, +1, space30)
    minus = fock.cat_state(1.52, -1, space30)
    assert np.all(plus[1::2] == 0.0)
    assert np.all(minus[0::2] == 0.0)
    assert np.vdot(plus, minus) == 0.0           # disjoint support, exact
    assert abs(np.linalg.norm(plus) - 1.0) <= 1e-12
    assert abs(np.linalg.norm(minus) - 1.0) <= 1e-12


def test_cat_parity_eigenvalues(space30):
    pi_op = fock.parity_operator(space30)
    plus = fock.cat_state(1.52, +1, space30)
    minus = fock.cat_state(1.52, -1, space30)
    assert np.vdot(plus, pi_op @ plus).real == pytest.approx(1.0, abs=1e-14)
    assert np.vdot(minus, pi_op @ minus).real == pytest.approx(-1.0, abs=1e-14)


def test_parity_matrix_dim2():
    assert np.array_equal(fock.parity_operator(TruncatedSpace(2)),
                          np.diag([1.0 + 0j, -1.0 + 0j]))


def test_ladder_relations_on_cats(space30):
    alpha = 1.52
    params = SystemParams(delta=0.0, kerr=1.0, drive=alpha * alpha, kappa=0.0)
    cat = cat_basis_params(params)
    a = fock.annihilation(space30)
    plus = fock.cat_state(alpha, +1, space30)
    minus = fock.cat_state(alpha, -1, space30)
    # a|C+-> = alpha p^{+-1} |C-+>  holds as a vector identity
    assert np.linalg.norm(a @ plus - alpha * cat.p * minus) <= 1e-9
    assert np.linalg.norm(a @ minus - alpha / cat.p * plus) <= 1e-8
    # the raising relation holds only inside the encoded subspace: project first
    adag = fock.creation(space30)
    basis = np.stack([plus, minus])
    proj = basis.T @ (basis.conj() @ (adag @ plus))
    assert np.linalg.norm(proj - alpha / cat.p * minus) <= 1e-6
    proj = basis.T @ (basis.conj() @ (adag @ minus))
    assert np.linalg.norm(proj - alpha * cat.p * plus) <= 1e-6


def test_displacement_zero_is_identity(space30):
    d = fock.displacement(0.0, space30)
    assert np.array_equal(d, np.eye(30, dtype=complex))


def test_displaced_vacuum_is_coherent(space30):
    d = fock.displacement(1.0, space30)
    col = d[:, 0]
    assert np.max(np.abs(col - fock.coherent_state(1.0, space30))) <= 1e-10


def test_displacement_unitarity_pair():
    # Exact truncated matrix elements are unitary on the interior block; the
    # edge rows are inherently incomplete (only an expm of the truncated
    # generator would be globally unitary, at the price of wrong elements).
    space = TruncatedSpace(40)
    d = fock.displacement(1.52, space)
    prod = d @ fock.displacement(-1.52, space)
    assert np.max(np.abs(prod[:14, :14] - np.eye(14))) <= 1e-9
    assert np.max(np.abs(fock.displacement(-1.52, space) - d.conj().T)) <= 1e-10
    # operational unitarity on a state with ample headroom
    psi = fock.coherent_state(1.0, space)
    assert np.linalg.norm(d @ (fock.displacement(-1.52, space) @ psi) - psi) <= 1e-12


def test_displacement_complex_argument():
    space = TruncatedSpace(40)
    beta = 0.7 - 1.1j
    d = fock.displacement(beta, space)
    prod = d @ fock.displacement(-beta, space)
    assert np.max(np.abs(prod[:16, :16] - np.eye(16))) <= 1e-9
    psi = fock.coherent_state(0.9, space)
    assert np.linalg.norm(d @ (fock.displacement(-beta, space) @ psi) - psi) <= 1e-11


def test_displacement_truncation_guard():
    with pytest.raises(TruncationError) as err:
        fock.displacement(4.0, TruncatedSpace(12))
    assert err.value.required_dim is not None and err.value.required_dim > 12


def test_hamiltonian_hermitian(params, space30):
    h = fock.hamiltonian(params, space30)
    assert np.max(np.abs(h - h.conj().T)) <= 1e-12 * np.max(np.abs(h))


def test_hamiltonian_free_limit():
    # vanishing Kerr/drive leaves the detuning rotation only
    params = SystemParams(delta=1.0, kerr=1e-20, drive=1e-20, kappa=0.0)
    h = fock.hamiltonian(params, TruncatedSpace(6))
    assert np.allclose(np.diag(h).real, np.arange(6), atol=1e-12)
    off = h - np.diag(np.diag(h))
    assert np.max(np.abs(off)) <= 1e-18


def test_coherent_states_are_eigenstates_at_zero_detuning(space30):
    params = reference_params()
    h = fock.hamiltonian(params, space30)
    alpha = params.alpha
    for sign in (+1.0, -1.0):
        v = fock.coherent_state(sign * alpha, space30)
        hv = h @ v
        basis = np.stack([fock.coherent_state(alpha, space30),
                          fock.coherent_state(-alpha, space30)])
        # project out the manifold via least squares (the pair is not orthogonal)
        coeff, *_ = np.linalg.lstsq(basis.T, hv, rcond=None)
        residual = hv - basis.T @ coeff
        assert np.linalg.norm(residual) / np.linalg.norm(hv) < 0.05
        # energy expectation -K alpha^4
        energy = np.vdot(v, hv).real
        assert energy == pytest.approx(-params.kerr * alpha ** 4, rel=1e-6)


def test_hamiltonian_sandwich_truncation_convergence():
    params = reference_params()
    vals = []
    for dim in (30, 60):
        space = TruncatedSpace(dim)
        v = fock.coherent_state(params.alpha, space)
        vals.append(np.vdot(v, fock.hamiltonian(params, space) @ v).real)
    assert abs(vals[0] - vals[1]) <= 1e-8 * abs(vals[1])


def test_doubling_truncation_stability_of_scalars():
    results = []
    for dim in (30, 60):
        space = TruncatedSpace(dim)
        plus = fock.coherent_state(1.52, space)
        minus = fock.coherent_state(-1.52, space)
        n = fock.creation(space) @ fock.annihilation(space)
        results.append((abs(np.vdot(plus, minus)), np.vdot(plus, n @ plus).real))
    for a, b in zip(*results):
        assert abs(a - b) <= 1e-8 * max(abs(b), 1.0)


def test_density_matrix_validation():
    good = FockDensityMatrix.from_state(np.array([1.0, 1.0, 0.0]))
    assert good.dim == 3
    with pytest.raises(InvalidStateError):
        FockDensityMatrix(np.array([[0.7, 0.1], [0.3, 0.3]]))  # not Hermitian
    with pytest.raises(InvalidStateError):
        FockDensityMatrix(np.diag([0.7, 0.7]))                 # trace 1.4
    with pytest.raises(InvalidStateError):
        FockDensityMatrix(np.diag([1.5, -0.5]))                # negative weight


def test_displaced_parity_matches_operator_route(space30):
    rho = FockDensityMatrix.from_state(fock.cat_state(1.52, +1, space30)).matrix
    betas = np.array([0.3 + 0.2j, -0.8j, 1.1])
    fast = fock.displaced_parity_expectation(rho, betas)
    pi_op = fock.parity_operator(space30)
    for got, beta in zip(fast, betas):
        d = fock.displacement(beta, space30)
        direct = np.trace(d.conj().T @ rho @ d @ pi_op)
        assert got == pytest.approx(direct, abs=5e-11)
