import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from steerkit.quantum import (
    ImprecisionSpec,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    anticommuting_set,
    assemblage_from,
    bloch_of,
    check_anticommutators,
    check_imprecision,
    isotropic_state,
    max_entangled,
    observable_from_bloch,
)


def random_observable(rng, d=2):
    if d == 2:
        v = rng.standard_normal(3)
        return observable_from_bloch(v / np.linalg.norm(v))
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    signs = np.diag([(-1.0) ** k for k in range(d)]).astype(complex)
    return q @ signs @ q.conj().T


def test_observable_from_bloch_axes():
    assert np.allclose(observable_from_bloch([0, 0, 1]), PAULI_Z)
    n = np.ones(3) / np.sqrt(3)
    op = observable_from_bloch(n)
    vals = np.linalg.eigvalsh(op)
    assert np.allclose(vals, [-1.0, 1.0], atol=1e-12)


def test_observable_from_bloch_rejects_non_unit():
    with pytest.raises(ValueError):
        observable_from_bloch([0.5, 0, 0])


def test_tetrahedron_direction_roundtrip():
    n = np.array([1.0, -1.0, 1.0]) / np.sqrt(3.0)
    assert np.allclose(bloch_of(observable_from_bloch(n)), n, atol=1e-14)


@pytest.mark.parametrize("n", range(1, 9))
def test_anticommuting_set_shape_and_relations(n):
    ops = anticommuting_set(n)
    assert len(ops) == n
    d = ops[0].shape[0]
    assert d == 2 ** (n // 2)
    for j in range(n):
        assert np.abs(ops[j] @ ops[j] - np.eye(d)).max() <= 1e-12
        for k in range(j + 1, n):
            assert np.abs(ops[j] @ ops[k] + ops[k] @ ops[j]).max() <= 1e-12


def test_anticommuting_set_matches_reference_choices():
    x, y, z = anticommuting_set(3)
    assert np.allclose(x, PAULI_X) and np.allclose(y, PAULI_Y) and np.allclose(z, PAULI_Z)
    b = anticommuting_set(4)
    assert np.allclose(b[0], np.kron(PAULI_X, PAULI_X))
    assert np.allclose(b[1], np.kron(PAULI_Y, PAULI_X))
    assert np.allclose(b[2], np.kron(PAULI_Z, PAULI_X))
    assert np.allclose(b[3], np.kron(np.eye(2), PAULI_Y))


def test_max_entangled_correlators():
    phi = max_entangled(2)
    assert np.trace(np.kron(PAULI_Z, PAULI_Z) @ phi).real == pytest.approx(1.0, abs=1e-12)
    combo = (
        np.trace(np.kron(PAULI_X, PAULI_X) @ phi)
        - np.trace(np.kron(PAULI_Y, PAULI_Y) @ phi)
        + np.trace(np.kron(PAULI_Z, PAULI_Z) @ phi)
    ).real
    assert combo == pytest.approx(3.0, abs=1e-12)


@pytest.mark.parametrize("d", [2, 4, 8])
def test_max_entangled_transpose_rule(d):
    # <O1 (x) O2> = tr(O2 O1^T)/d on the maximally entangled state
    rng = np.random.default_rng(17 + d)
    phi = max_entangled(d)
    for _ in range(50):
        o1, o2 = random_observable(rng, d), random_observable(rng, d)
        lhs = np.trace(np.kron(o1, o2) @ phi).real
        rhs = np.trace(o2 @ o1.T).real / d
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_dim4_targets_self_correlate():
    phi = max_entangled(4)
    for b in anticommuting_set(4):
        val = np.trace(np.kron(b.T, b) @ phi).real
        assert val == pytest.approx(1.0, abs=1e-12)


def test_isotropic_state_limits():
    assert np.allclose(isotropic_state(1.0, 2), max_entangled(2), atol=1e-14)
    assert np.allclose(isotropic_state(0.0, 2), np.eye(4) / 4, atol=1e-14)
    rho = isotropic_state(0.3, 2)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-14)
    assert np.linalg.eigvalsh(rho)[0] >= -1e-14


def test_check_imprecision_exact_and_cone_edge():
    spec0 = ImprecisionSpec.uniform(0.0, 1)
    assert check_imprecision(PAULI_Z, PAULI_Z, spec0, (0, 0))
    eps = 0.01
    theta = np.arccos(1.0 - 2.0 * eps)  # (1 + cos theta)/2 = 1 - eps exactly
    lab = observable_from_bloch([np.sin(theta), 0.0, np.cos(theta)])
    spec = ImprecisionSpec.uniform(eps, 1)
    assert check_imprecision(lab, PAULI_Z, spec, (0, 0))
    tighter = ImprecisionSpec.uniform(eps * 0.999, 1)
    assert not check_imprecision(lab, PAULI_Z, tighter, (0, 0), atol=1e-12)


def test_check_imprecision_orthogonal_fails():
    spec = ImprecisionSpec.uniform(0.1, 1)
    # tr(X Z) = 0 < 2 - 0.4
    assert not check_imprecision(PAULI_X, PAULI_Z, spec, (0, 0))


def test_anticommutator_quantifier():
    spec = ImprecisionSpec.uniform(0.05, 3, quantifier="anticommutator")
    assert check_anticommutators([PAULI_X, PAULI_Y, PAULI_Z], spec)
    tilted = observable_from_bloch(np.array([1.0, 0.3, 0.0]) / np.linalg.norm([1.0, 0.3, 0.0]))
    assert not check_anticommutators([tilted, PAULI_Y, tilted], spec)


def test_assemblage_basic_cases():
    phi = max_entangled(2)
    asm = assemblage_from(phi, [PAULI_Z])
    assert np.allclose(asm.members[(0, 0)], np.diag([0.5, 0.0]), atol=1e-12)
    noise = assemblage_from(np.eye(4, dtype=complex) / 4, [PAULI_Z, PAULI_X])
    for key, sig in noise.members.items():
        assert np.allclose(sig, np.eye(2) / 4, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1), st.sampled_from([2, 4]))
def test_assemblage_invariants_random(seed, d):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d)
    v /= np.linalg.norm(v)
    state = np.outer(v, v.conj())
    alice = [random_observable(rng, d) for _ in range(3)]
    asm = assemblage_from(state, alice)
    asm.validate(atol=1e-10)  # no-signalling, PSD, normalization
