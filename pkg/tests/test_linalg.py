import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmeasure import linalg as la
from qmeasure.exceptions import DomainError, ShapeError, ValidationError


def random_state(rng, d, k=None):
    shape = (d,) if k is None else (k, d)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def random_density(rng, d, k):
    g = rng.standard_normal((k, d, d)) + 1j * rng.standard_normal((k, d, d))
    rho = g @ np.conj(np.swapaxes(g, -1, -2))
    return rho / np.trace(rho, axis1=1, axis2=2).real[:, None, None]


# -- partial traces ---------------------------------------------------------------------

def test_partial_trace_product_state():
    psi = np.zeros(4, complex)
    psi[0] = 1
    rho = la.partial_trace_A(psi, (2, 2))
    np.testing.assert_allclose(rho, [[1, 0], [0, 0]], atol=1e-15)


def test_partial_trace_bell_state():
    psi = np.array([1, 0, 0, 1], complex) / np.sqrt(2)
    np.testing.assert_allclose(la.partial_trace_A(psi, (2, 2)), np.eye(2) / 2, atol=1e-15)


def test_partial_trace_shape_mismatch():
    with pytest.raises(ShapeError):
        la.partial_trace_A(np.ones(5) / np.sqrt(5), (2, 3))


def test_partial_trace_matches_einsum():
    rng = np.random.default_rng(1)
    psi = random_state(rng, 12, 50)
    c = psi.reshape(50, 3, 4)
    np.testing.assert_allclose(la.partial_trace_A(psi, (3, 4)), np.einsum("kij,klj->kil", c, c.conj()), atol=1e-14)
    np.testing.assert_allclose(la.partial_trace_S(psi, (3, 4)), np.einsum("kji,kjl->kil", c, c.conj()), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(m=st.integers(1, 5), n=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
def test_reduced_states_share_nonzero_spectrum(m, n, seed):
    psi = random_state(np.random.default_rng(seed), m * n)
    wa, _ = la.jacobi_eigh(la.partial_trace_A(psi, (m, n)))
    wb, _ = la.jacobi_eigh(la.partial_trace_S(psi, (m, n)))
    k = min(m, n)
    np.testing.assert_allclose(wa[:k], wb[:k], atol=1e-12)
    assert np.all(np.abs(wa[k:]) < 1e-12) and np.all(np.abs(wb[k:]) < 1e-12)
    la.validate_density_matrix(la.partial_trace_A(psi, (m, n)))


def test_composite_shape_rejects_nonpositive():
    with pytest.raises(ShapeError):
        la.CompositeShape(0, 2)
    assert la.CompositeShape(3, 4).dim == 12


# -- eigensolver ------------------------------------------------------------------------

def test_eig_diagonal():
    w, v = la.eig_hermitian(np.diag([0.7, 0.3]))
    np.testing.assert_allclose(w, [0.7, 0.3], atol=1e-15)
    np.testing.assert_allclose(np.abs(v), np.eye(2), atol=1e-15)


def test_eig_sigma_x_state():
    rho = 0.5 * (np.eye(2) + 0.6 * la.PAULI[0])
    w, _ = la.eig_hermitian(rho)
    np.testing.assert_allclose(w, [0.8, 0.2], atol=1e-15)


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        la.eig_hermitian(np.array([[0.5, 1.0], [0.0, 0.5]]))


def test_eig_reconstruction_many_random_psd():
    # 10^4 random PSD matrices, dimensions 1..8
    rng = np.random.default_rng(7)
    worst = 0.0
    for d in range(1, 9):
        rho = random_density(rng, d, 1250)
        w, v = la.jacobi_eigh(rho)
        rec = (v * w[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))
        worst = max(worst, np.max(np.abs(rec - rho)))
        eye = np.conj(np.swapaxes(v, -1, -2)) @ v
        assert np.max(np.abs(eye - np.eye(d))) < 1e-12
        assert np.all(np.diff(w, axis=1) <= 0)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(rho)[:, ::-1], atol=1e-13)
    assert worst < 1e-10


def test_eig_degenerate_and_zero():
    w, v = la.jacobi_eigh(np.zeros((3, 3)))
    np.testing.assert_array_equal(w, 0)
    w, _ = la.jacobi_eigh(np.eye(4) / 4)
    np.testing.assert_allclose(w, 0.25)


def test_eig_batch_shape():
    rng = np.random.default_rng(2)
    rho = random_density(rng, 3, 12).reshape(3, 4, 3, 3)
    w, v = la.jacobi_eigh(rho)
    assert w.shape == (3, 4, 3) and v.shape == (3, 4, 3, 3)


# -- spectra and entropy ----------------------------------------------------------------

def test_schmidt_examples():
    np.testing.assert_allclose(la.schmidt_spectrum(np.array([1, 0, 0, 0]), (2, 2)), [1, 0], atol=1e-15)
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    np.testing.assert_allclose(la.schmidt_spectrum(bell, (2, 2)), [0.5, 0.5], atol=1e-15)


def test_entropy_examples():
    assert la.entanglement_entropy([1.0, 0.0]) == 0.0
    assert la.entanglement_entropy([0.5, 0.5]) == pytest.approx(1.0, abs=1e-15)
    assert la.entanglement_entropy([0.25] * 4) == pytest.approx(2.0, abs=1e-15)
    assert la.entanglement_entropy([0.9, 0.1]) == pytest.approx(0.4689955935892812, abs=1e-15)


def test_entropy_clamps_rounding_noise():
    assert la.entanglement_entropy([1.0 + 5e-11, -5e-11]) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(DomainError):
        la.entanglement_entropy([1.1, -0.1])


def test_entropy_batched():
    out = la.entanglement_entropy(np.array([[1.0, 0.0], [0.5, 0.5]]))
    np.testing.assert_allclose(out, [0.0, 1.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=8).filter(lambda v: sum(v) > 1e-3),
       st.randoms(use_true_random=False))
def test_entropy_permutation_invariant_and_bounded(vals, rnd):
    lam = np.array(vals) / sum(vals)
    perm = lam.copy()
    rnd.shuffle(perm)
    h = la.entanglement_entropy(lam)
    assert h == pytest.approx(la.entanglement_entropy(perm), abs=1e-12)
    assert -1e-12 <= h <= np.log2(lam.size) + 1e-12


def test_validate_spectrum():
    la.validate_spectrum([0.3, 0.7])
    with pytest.raises(DomainError):
        la.validate_spectrum([0.3, 0.6])
    with pytest.raises(DomainError):
        la.validate_spectrum([1.2, -0.2])


def test_validate_pure_state():
    with pytest.raises(ValidationError):
        la.validate_pure_state([1.0, 1.0])
    la.validate_pure_state(np.array([1, 1j]) / np.sqrt(2))


def test_validate_density_matrix_rejects():
    with pytest.raises(ValidationError):
        la.validate_density_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(ValidationError):
        la.validate_density_matrix(np.diag([0.5, 0.4]))


# -- Bloch representation ---------------------------------------------------------------

def test_bloch_examples():
    np.testing.assert_allclose(la.density_from_bloch([0, 0, 0]), np.eye(2) / 2, atol=1e-15)
    np.testing.assert_allclose(la.density_from_bloch([0, 0, 1]), [[1, 0], [0, 0]], atol=1e-15)
    with pytest.raises(DomainError):
        la.density_from_bloch([0, 0, 1.5])
    with pytest.raises(ShapeError):
        la.bloch_from_density(np.eye(3) / 3)


def test_bloch_round_trip():
    rng = np.random.default_rng(3)
    r = rng.standard_normal((1000, 3))
    r *= (rng.random(1000) ** (1 / 3) / np.linalg.norm(r, axis=1))[:, None]
    rho = la.density_from_bloch(r)
    np.testing.assert_allclose(la.bloch_from_density(rho), r, atol=1e-15)
    w, _ = la.jacobi_eigh(rho)
    rad = np.linalg.norm(r, axis=1)
    np.testing.assert_allclose(w[:, 0] - w[:, 1], rad, atol=1e-13)


def test_trace_distance():
    assert la.trace_distance(np.diag([1.0, 0.0]), np.eye(2) / 2) == pytest.approx(0.5)
    assert la.trace_distance(np.eye(2) / 2, np.eye(2) / 2) == pytest.approx(0.0)
