import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from steerkit.quantum import assemblage_from, isotropic_state, max_entangled, observable_from_bloch
from steerkit.witness import (
    dodecahedron_witness,
    enumerate_strategies,
    esi_witness,
    evaluate,
    family_witness,
    has_plateau,
    lhs_bound,
    make_witness,
    pauli_witness,
    quantum_value,
    s_matrix,
    s_matrix_is_projector,
    witness_from_json,
    witness_to_json,
    _family_alpha_profile,
    _tetrahedron_blochs,
)

GOLDEN = (3.0 + np.sqrt(5.0)) / 10.0


def tetrahedron_observables():
    return [observable_from_bloch(v) for v in _tetrahedron_blochs()]


class TestEsi:
    def test_lhs_bound(self):
        assert lhs_bound(esi_witness()) == pytest.approx(1.0, abs=1e-12)

    def test_three_classes(self):
        classes = enumerate_strategies(esi_witness())
        assert len(classes) == 3
        patterns = {c.abs_pattern for c in classes}
        assert (0.0, 0.0, 1.0) in patterns
        assert (0.5, 0.5, 0.5) in patterns
        assert (0.0, 0.0, 0.0) in patterns

    def test_class_representatives(self):
        # single-input classes carry the bound; the three-observable class sits
        # at sqrt(3)/2; all-equal outputs give zero
        classes = {c.abs_pattern: c for c in enumerate_strategies(esi_witness())}
        assert classes[(0.0, 0.0, 1.0)].value == pytest.approx(1.0, abs=1e-12)
        assert classes[(0.5, 0.5, 0.5)].value == pytest.approx(np.sqrt(3) / 2, abs=1e-12)
        assert classes[(0.0, 0.0, 0.0)].value == pytest.approx(0.0, abs=1e-12)
        assert classes[(0.0, 0.0, 1.0)].single_observable
        assert not classes[(0.5, 0.5, 0.5)].single_observable

    def test_strategy_expressions_match_sign_table(self):
        # (0,0,0,1) reduces to (B1 + B2 - B3)/2 and so on
        w = esi_witness()
        fc = w.full_correlation
        t = (1.0 - 2.0 * np.array([0, 0, 0, 1])) @ fc
        assert np.allclose(t, [0.5, 0.5, -0.5])
        t = (1.0 - 2.0 * np.array([0, 1, 1, 0])) @ fc
        assert np.allclose(t, [0.0, 0.0, 1.0])
        t = (1.0 - 2.0 * np.array([0, 0, 0, 0])) @ fc
        assert np.allclose(t, [0.0, 0.0, 0.0])

    def test_quantum_value(self):
        val, state, alice = quantum_value(esi_witness())
        assert val == pytest.approx(np.sqrt(3.0), abs=1e-10)
        assert evaluate(esi_witness(), state, alice) == pytest.approx(val, abs=1e-10)

    def test_has_plateau(self):
        assert has_plateau(esi_witness())

    def test_evaluate_isotropic_linearity(self):
        w = esi_witness()
        tet = tetrahedron_observables()
        for v in (1.0, 1.0 / np.sqrt(3.0), 0.42, 0.0):
            assert evaluate(w, isotropic_state(v, 2), tet) == pytest.approx(
                np.sqrt(3.0) * v, abs=1e-10
            )

    def test_zero_on_white_noise(self):
        w = esi_witness()
        assert evaluate(w, isotropic_state(0.0, 2), tetrahedron_observables()) == pytest.approx(
            0.0, abs=1e-12
        )


class TestPauli:
    def test_bound_and_value(self):
        w = pauli_witness()
        assert lhs_bound(w) == pytest.approx(1.0, abs=1e-12)
        assert quantum_value(w)[0] == pytest.approx(np.sqrt(3.0), abs=1e-12)

    def test_single_nontrivial_class(self):
        classes = enumerate_strategies(pauli_witness())
        assert len(classes) == 1
        assert classes[0].n_members == 8
        assert not classes[0].single_observable

    def test_no_plateau(self):
        assert not has_plateau(pauli_witness())

    def test_isotropic_threshold(self):
        # value sqrt(3) v crosses the bound 1 at v = 1/sqrt(3)
        w = pauli_witness()
        alice = [observable_from_bloch(v) for v in np.eye(3)]
        v = 1.0 / np.sqrt(3.0)
        assert evaluate(w, isotropic_state(v, 2), alice) == pytest.approx(1.0, abs=1e-10)


class TestFamily:
    def test_n3_equivalent_to_esi_under_relabeling(self):
        fc3 = family_witness(3).full_correlation
        target = esi_witness().full_correlation
        import itertools

        found = False
        for perm in itertools.permutations(range(4)):
            for flips in itertools.product((1.0, -1.0), repeat=4):
                cand = np.array([flips[i] * fc3[perm[i]] for i in range(4)])
                if np.allclose(cand, target, atol=1e-12):
                    found = True
                    break
            if found:
                break
        assert found

    def test_column_conditions(self):
        for n in (3, 4, 5, 6):
            fc = family_witness(n).full_correlation
            assert np.allclose(fc[:, 0], 1.0 / 2 ** (n - 1))
            assert np.allclose(fc[:, 1:].sum(axis=0), 0.0, atol=1e-15)

    def test_n4_has_seven_classes(self):
        classes = enumerate_strategies(family_witness(4))
        assert len(classes) == 7
        patterns = sorted(c.abs_pattern for c in classes)
        expected = sorted(
            [
                (0.0, 0.0, 0.0, 1.0),
                (0.25, 0.25, 0.25, 0.75),
                (0.0, 0.5, 0.5, 0.5),
                (0.0, 0.0, 0.5, 0.5),
                (0.25, 0.25, 0.25, 0.25),
                (0.0, 0.0, 0.0, 0.5),
                (0.0, 0.0, 0.0, 0.0),
            ]
        )
        assert patterns == expected

    @pytest.mark.parametrize("n,dim", [(3, 2), (4, 4), (5, 4), (6, 8)])
    def test_bounds_and_quantum_values(self, n, dim):
        w = family_witness(n)
        assert w.dim == dim
        assert lhs_bound(w) == pytest.approx(1.0, abs=1e-9)
        val, _, alice = quantum_value(w)
        assert val == pytest.approx(np.sqrt(n), abs=1e-9)
        for a in alice:
            assert np.abs(a @ a - np.eye(dim)).max() <= 1e-10

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_plateau_exists(self, n):
        assert has_plateau(family_witness(n))

    def test_single_observable_norms_saturate(self):
        for n in (3, 4, 5):
            classes = enumerate_strategies(family_witness(n))
            singles = [c for c in classes if c.single_observable]
            assert max(np.linalg.norm(c.t_vector) for c in singles) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_alpha_bound_dominates_other_classes(self, n):
        bound = np.sqrt(5.0 / 6.0 - 4.0 / (3.0 * 4 ** (n - 1)))
        for c in enumerate_strategies(family_witness(n)):
            if not c.single_observable:
                assert np.linalg.norm(c.t_vector) <= bound + 1e-12

    def test_alpha_profile_interior_below_one(self):
        for n in (3, 4, 5, 6, 7):
            profile = _family_alpha_profile(n)
            assert profile[0] == pytest.approx(1.0, abs=1e-12)
            assert np.all(profile[1:] < 1.0 - 1e-9)

    def test_enumeration_cap(self):
        w = family_witness(6)  # 32 inputs exceed the cap
        with pytest.raises(ValueError, match="enumeration refused"):
            enumerate_strategies(w)


class TestProjectorIdentity:
    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_s_squared_equals_nx_s(self, n):
        s = s_matrix(n)
        assert s.dtype.kind == "i"
        assert np.array_equal(s @ s, 2 ** (n - 1) * s)
        assert s_matrix_is_projector(n)


class TestDodecahedron:
    def test_lhs_bound_golden(self):
        assert lhs_bound(dodecahedron_witness()) == pytest.approx(GOLDEN, abs=1e-12)

    def test_quantum_value_one(self):
        val, _, _ = quantum_value(dodecahedron_witness())
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_no_plateau(self):
        assert not has_plateau(dodecahedron_witness())

    def test_attaining_class_uses_all_observables(self):
        classes = enumerate_strategies(dodecahedron_witness())
        beta = max(c.value for c in classes)
        for c in classes:
            if c.value >= beta - 1e-9:
                assert not c.single_observable


class TestBoundAttained:
    @pytest.mark.parametrize("name", ["esi", "pauli", "dodecahedron"])
    def test_bound_is_max_over_classes(self, name):
        w = make_witness(name)
        classes = enumerate_strategies(w)
        beta = lhs_bound(w)
        assert beta == pytest.approx(max(c.value for c in classes), abs=1e-12)
        assert all(c.value <= beta + 1e-12 for c in classes)

    @pytest.mark.parametrize("name", ["esi", "pauli", "dodecahedron"])
    def test_quantum_exceeds_lhs(self, name):
        w = make_witness(name)
        assert quantum_value(w)[0] > lhs_bound(w) + 1e-6


class TestJsonRoundtrip:
    @pytest.mark.parametrize("name", ["esi", "pauli", "dodecahedron"])
    def test_roundtrip(self, name):
        w = make_witness(name)
        w2 = witness_from_json(witness_to_json(w))
        assert np.allclose(w2.coeffs, w.coeffs, atol=1e-15)
        assert all(np.allclose(a, b, atol=1e-15) for a, b in zip(w2.targets, w.targets))
        assert w2.full_correlation is not None
        assert lhs_bound(w2) == pytest.approx(lhs_bound(w), abs=1e-12)

    def test_family_roundtrip(self):
        w = family_witness(4)
        w2 = witness_from_json(witness_to_json(w))
        assert np.allclose(w2.full_correlation, w.full_correlation)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_evaluate_matches_assemblage_contraction(seed):
    # evaluate() agrees with the direct assemblage formula on random models
    rng = np.random.default_rng(seed)
    w = esi_witness()
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    v /= np.linalg.norm(v)
    state = np.outer(v, v.conj())
    alice = []
    for _ in range(4):
        n = rng.standard_normal(3)
        alice.append(observable_from_bloch(n / np.linalg.norm(n)))
    asm = assemblage_from(state, alice)
    direct = sum(
        w.full_correlation[x, y] * asm.correlator(x, w.targets[y])
        for x in range(4)
        for y in range(3)
    )
    assert evaluate(w, state, alice) == pytest.approx(direct, abs=1e-10)
