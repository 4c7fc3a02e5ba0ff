import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kerrlep import (FockDensityMatrix, InvalidStateError, ProjectionError,
                     QubitDensityMatrix, UndefinedPhaseError, bloch,
                     phase_difference, project_to_cat_subspace,
                     uhlmann_fidelity, wigner)
from kerrlep import fock
from kerrlep.observables import GridSpec, default_grid, embed_in_fock

# frozen: off-diagonal of |alpha><alpha| in the cat basis, sqrt(1 - e^2) / 2
RHO_PM_COHERENT = 0.4999760610032394


def qubit(matrix) -> QubitDensityMatrix:
    return QubitDensityMatrix(np.asarray(matrix, dtype=np.complex128))


def test_projection_of_pure_cat(space30, cat):
    rho = FockDensityMatrix.from_state(fock.cat_state(cat.alpha, +1, space30))
    q, leakage = project_to_cat_subspace(rho, cat)
    assert leakage < 1e-10
    assert np.max(np.abs(q.matrix - np.diag([1.0, 0.0]))) < 1e-10


def test_projection_of_coherent_state(space30, cat):
    rho = FockDensityMatrix.from_state(fock.coherent_state(cat.alpha, space30))
    q, leakage = project_to_cat_subspace(rho, cat)
    assert leakage < 1e-9
    assert q.matrix[0, 1].real == pytest.approx(RHO_PM_COHERENT, abs=1e-9)


def test_projection_rejects_large_leakage(space30, cat):
    one = np.zeros(30)
    one[1] = 1.0
    rho = FockDensityMatrix.from_state(one)
    with pytest.raises(ProjectionError):
        project_to_cat_subspace(rho, cat)


def test_embed_project_round_trip(space30, cat):
    q0 = qubit([[0.6, 0.2 - 0.1j], [0.2 + 0.1j, 0.4]])
    lifted = embed_in_fock(q0, cat, space30)
    q1, leakage = project_to_cat_subspace(lifted, cat)
    assert leakage < 1e-10
    assert np.max(np.abs(q1.matrix - q0.matrix)) < 1e-10


def test_bloch_cardinal_states():
    s = 1.0 / math.sqrt(2.0)
    cases = [
        (np.diag([1.0, 0.0]), (0.0, 0.0, 1.0)),
        (np.diag([0.0, 1.0]), (0.0, 0.0, -1.0)),
        (np.outer([s, s], [s, s]), (1.0, 0.0, 0.0)),
        (np.outer([s, -s], [s, -s]), (-1.0, 0.0, 0.0)),
        (np.outer([s, 1j * s], np.conj([s, 1j * s])), (0.0, 1.0, 0.0)),
        (np.outer([s, -1j * s], np.conj([s, -1j * s])), (0.0, -1.0, 0.0)),
    ]
    for matrix, expected in cases:
        vec = bloch(qubit(matrix))
        assert vec == pytest.approx(expected, abs=1e-14)


def test_bloch_norm_guard():
    bad = QubitDensityMatrix.__new__(QubitDensityMatrix)
    object.__setattr__(bad, "matrix", np.array([[1.0, 0.9], [0.9, 0.0]], dtype=complex))
    with pytest.raises(InvalidStateError):
        bloch(bad)


def test_wigner_vacuum_origin(space30):
    vac = np.zeros(30)
    vac[0] = 1.0
    rho = FockDensityMatrix.from_state(vac)
    grid = GridSpec(halfwidth=3.0, points=41)
    w = wigner(rho, grid)
    origin = w.values[20, 20]
    assert origin == pytest.approx(2.0 / math.pi, abs=1e-10)


def test_wigner_cat_parity_at_origin(space30, cat):
    grid = GridSpec(halfwidth=cat.alpha + 4.0, points=41)
    for parity, sign in ((+1, +1.0), (-1, -1.0)):
        rho = FockDensityMatrix.from_state(fock.cat_state(cat.alpha, parity, space30))
        w = wigner(rho, grid)
        assert w.values[20, 20] == pytest.approx(sign * 2.0 / math.pi, abs=1e-9)


def test_wigner_normalization_and_refinement(space30, cat):
    rho = FockDensityMatrix.from_state(fock.cat_state(cat.alpha, +1, space30))
    coarse = wigner(rho, default_grid(cat.alpha, points=201))
    deficit = abs(coarse.integral() - 1.0)
    assert deficit < 5e-3
    fine = wigner(rho, default_grid(cat.alpha, points=401))
    assert abs(fine.integral() - 1.0) <= 0.5 * deficit + 1e-12


def test_wigner_warns_on_edge_weight():
    space = fock.TruncatedSpace(12)
    v = fock.coherent_state(2.4, fock.TruncatedSpace(40))[:12]
    rho = FockDensityMatrix.from_state(v, trace_tol=1.0)
    with pytest.warns(UserWarning, match="top Fock levels"):
        wigner(rho, GridSpec(halfwidth=3.0, points=5))


def test_fidelity_identity_and_orthogonal(space30):
    a = FockDensityMatrix.from_state(fock.coherent_state(1.2, space30))
    assert uhlmann_fidelity(a, a) == pytest.approx(1.0, abs=1e-10)
    e0, e1 = np.zeros(30), np.zeros(30)
    e0[0] = 1.0
    e1[1] = 1.0
    f = uhlmann_fidelity(FockDensityMatrix.from_state(e0),
                         FockDensityMatrix.from_state(e1))
    assert f == pytest.approx(0.0, abs=1e-12)


def test_fidelity_pure_state_overlap_oracle(rng):
    for _ in range(20):
        psi = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        phi = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        psi /= np.linalg.norm(psi)
        phi /= np.linalg.norm(phi)
        f = uhlmann_fidelity(np.outer(psi, psi.conj()), np.outer(phi, phi.conj()))
        assert f == pytest.approx(abs(np.vdot(psi, phi)) ** 2, abs=1e-10)


def test_fidelity_symmetric(rng):
    for _ in range(10):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        a = a @ a.conj().T
        a /= np.trace(a).real
        b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        b = b @ b.conj().T
        b /= np.trace(b).real
        assert uhlmann_fidelity(a, b) == pytest.approx(uhlmann_fidelity(b, a), abs=1e-9)


def test_fidelity_rejects_non_state():
    good = np.diag([0.5, 0.5]).astype(complex)
    bad = np.diag([1.5, -0.5]).astype(complex)
    with pytest.raises(InvalidStateError):
        uhlmann_fidelity(good, bad)
    with pytest.raises(ValueError):
        uhlmann_fidelity(good, np.eye(3) / 3.0)


def test_phase_difference_at_merged_eigenmatrix():
    ep_matrix = np.array([[0.0, 1.0j], [1.0, 0.0]])
    assert phase_difference(ep_matrix) == pytest.approx(math.pi / 2.0, abs=1e-12)


def test_phase_difference_wrapping():
    m = np.array([[0.0, np.exp(1j * 3.0)], [np.exp(-1j * 3.0), 0.0]])
    phi = phase_difference(m)
    assert 0.0 <= phi <= math.pi
    assert phi == pytest.approx(2 * math.pi - 6.0, abs=1e-12)


def test_phase_difference_undefined():
    with pytest.raises(UndefinedPhaseError):
        phase_difference(np.diag([1.0, -1.0]))


@settings(max_examples=60, deadline=None)
@given(theta=st.floats(min_value=0.0, max_value=2.0 * math.pi),
       a=st.floats(min_value=-math.pi, max_value=math.pi),
       b=st.floats(min_value=-math.pi, max_value=math.pi))
def test_phase_difference_gauge_invariance(theta, a, b):
    m = np.array([[0.0, 0.7 * np.exp(1j * a)], [1.3 * np.exp(1j * b), 0.0]])
    phi0 = phase_difference(m)
    phi1 = phase_difference(np.exp(1j * theta) * m)
    assert abs(phi0 - phi1) <= 1e-12 or abs(abs(phi0 - phi1) - 2 * math.pi) <= 1e-12


def test_wigner_csv_and_json_serialization(tmp_path, space30):
    vac = np.zeros(30)
    vac[0] = 1.0
    rho = FockDensityMatrix.from_state(vac)
    w = wigner(rho, GridSpec(halfwidth=1.0, points=3))
    csv_path = tmp_path / "w.csv"
    w.to_csv(csv_path, metadata={"state": "vacuum"})
    text = csv_path.read_text()
    assert text.startswith("# state = vacuum")
    assert "x,p,w" in text
    assert len(text.strip().splitlines()) == 4 + 9
    json_path = tmp_path / "w.json"
    w.to_json(json_path, metadata={"state": "vacuum"})
    import json

    data = json.loads(json_path.read_text())
    assert data["metadata"]["state"] == "vacuum"
    assert len(data["values"]) == 3


def test_wigner_real_for_random_mixed_state(rng):
    dim = 12
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = m @ m.conj().T
    rho /= np.trace(rho).real
    state = FockDensityMatrix(rho, trace_tol=1e-6, psd_tol=1e-6)
    w = wigner(state, GridSpec(halfwidth=2.5, points=31))
    assert np.all(np.isfinite(w.values))          # residue check passed inside


def test_fidelity_monotone_approach(rng):
    # contractivity sanity: fidelity to the fixed point never decreases
    # along a relaxation (checked on the reduced model elsewhere); here a
    # direct two-state sanity using interpolation toward the target
    target = np.diag([0.51, 0.49]).astype(complex)
    start = np.array([[0.51, 0.49], [0.49, 0.49]], dtype=complex)
    fids = []
    for lam in np.linspace(0.0, 1.0, 7):
        mix = (1 - lam) * start + lam * target
        fids.append(uhlmann_fidelity(mix, target))
    assert all(b >= a - 1e-12 for a, b in zip(fids, fids[1:]))
