import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from steerkit.linalg import (
    eig_max,
    eig_min,
    is_hermitian,
    kron,
    partial_trace,
    require_hermitian,
    trace_norm,
)
from steerkit.quantum import PAULI_X, PAULI_Y, PAULI_Z, max_entangled


def random_hermitian(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def test_eig_max_identity():
    val, vec = eig_max(np.eye(2, dtype=complex))
    assert val == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-12)


def test_eig_max_pauli_z():
    val, _ = eig_max(PAULI_Z)
    assert val == pytest.approx(1.0, abs=1e-12)


def test_eig_max_xyz_sum():
    # closed form: eigenvalues of n . sigma are +-|n|
    val, vec = eig_max(PAULI_X + PAULI_Y + PAULI_Z)
    assert val == pytest.approx(np.sqrt(3.0), rel=1e-10)
    h = PAULI_X + PAULI_Y + PAULI_Z
    assert np.linalg.norm(h @ vec - val * vec) <= 1e-9 * np.abs(h).max()


def test_eig_max_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eig_max(np.array([[0.0, 1.0], [0.0, 0.0]]))


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=2**31 - 1))
def test_eig_max_dominates_rayleigh(d, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, d)
    val, _ = eig_max(h)
    for _ in range(20):
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        v /= np.linalg.norm(v)
        assert val >= (v.conj() @ h @ v).real - 1e-10


def test_rayleigh_bulk():
    rng = np.random.default_rng(5)
    for d in range(2, 9):
        h = random_hermitian(rng, d)
        val, _ = eig_max(h)
        vs = rng.standard_normal((1000, d)) + 1j * rng.standard_normal((1000, d))
        vs /= np.linalg.norm(vs, axis=1, keepdims=True)
        rayleigh = np.einsum("ki,ij,kj->k", vs.conj(), h, vs).real
        assert np.all(val >= rayleigh - 1e-10)


def test_kron_basic():
    assert np.allclose(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert np.allclose(kron(PAULI_Z, PAULI_Z), np.diag([1.0, -1.0, -1.0, 1.0]))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_kron_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_hermitian(rng, 2) for _ in range(3))
    left = kron(kron(a, b), c)
    right = kron(a, kron(b, c))
    assert np.abs(left - right).max() <= 1e-14 * max(1.0, np.abs(left).max())


def test_partial_trace_max_entangled():
    phi = max_entangled(2)
    assert np.allclose(partial_trace(phi, (2, 2), over="A"), np.eye(2) / 2, atol=1e-12)
    assert np.allclose(partial_trace(phi, (2, 2), over="B"), np.eye(2) / 2, atol=1e-12)


def test_partial_trace_product():
    m = kron(PAULI_X, np.eye(2)) / 2
    assert np.allclose(partial_trace(m, (2, 2), over="B"), PAULI_X, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_partial_trace_of_kron(seed):
    rng = np.random.default_rng(seed)
    a = random_hermitian(rng, 2)
    b = random_hermitian(rng, 3)
    out = partial_trace(kron(a, b), (2, 3), over="B")
    assert np.abs(out - np.trace(b) * a).max() <= 1e-12 * max(1.0, np.abs(a).max())
    out_a = partial_trace(kron(a, b), (2, 3), over="A")
    assert np.abs(out_a - np.trace(a) * b).max() <= 1e-12 * max(1.0, np.abs(b).max())


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_partial_trace_preserves_trace(seed):
    rng = np.random.default_rng(seed)
    m = random_hermitian(rng, 6)
    for over in ("A", "B"):
        assert np.trace(partial_trace(m, (2, 3), over=over)) == pytest.approx(
            np.trace(m).real, abs=1e-12
        )


def test_partial_trace_dimension_mismatch():
    with pytest.raises(ValueError):
        partial_trace(np.eye(5), (2, 2), over="A")


def test_trace_norm_and_eig_min():
    h = np.diag([2.0, -3.0]).astype(complex)
    assert trace_norm(h) == pytest.approx(5.0, abs=1e-12)
    assert eig_min(h) == pytest.approx(-3.0, abs=1e-12)


def test_hermiticity_helpers():
    assert is_hermitian(PAULI_Y)
    assert not is_hermitian(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        require_hermitian(np.array([[0, 1], [0, 0]]), what="thing")
