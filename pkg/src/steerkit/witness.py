"""Steering witness construction, evaluation, and exact LHS analysis.

A witness is a coefficient tensor c[a, b, x, y] together with Bob's target
observables.  Every built-in witness is of full-correlation form,
c[a, b, x, y] = (-1)^(a+b) C[x, y], with C the full-correlation matrix, so a
deterministic strategy lambda of Alice reduces the witness to a single-party
expression sum_y t_y <B_y> with

    t_y = sum_x (-1)^(f_lambda(x)) C[x, y].

Strategies are grouped into classes by the multiset of |t_y| (and by the
class value when the targets are not pairwise anticommuting); the exact LHS
bound is the largest class value, computed as a largest-eigenvalue problem.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import eig_max, require_hermitian
from .quantum import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    anticommuting_set,
    assemblage_from,
    bloch_of,
    max_entangled,
    require_observable,
)

ENUMERATION_CAP = 24  # refuse enumeration beyond 2^24 strategies
CLASS_ROUND = 12  # strategy-class grouping key rounded to 1e-12
BETA_TIE_ATOL = 1e-9  # tolerance for "attains the LHS bound"

GOLDEN_RATIO = (1.0 + np.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class DeterministicStrategy:
    """Alice's response function: outputs[x] in {0, 1} for every input x."""

    outputs: tuple[int, ...]

    def signs(self) -> np.ndarray:
        return 1.0 - 2.0 * np.asarray(self.outputs, dtype=float)


@dataclass
class StrategyClass:
    t_vector: np.ndarray  # representative signed t
    value: float  # exact LHS value of the class, max_psi sum_y t_y <B_y>
    members: list[DeterministicStrategy]
    n_members: int

    @property
    def single_observable(self) -> bool:
        return int(np.sum(np.abs(self.t_vector) > 1e-12)) == 1

    @property
    def abs_pattern(self) -> tuple[float, ...]:
        return tuple(np.round(np.sort(np.abs(self.t_vector)), CLASS_ROUND))


@dataclass
class Witness:
    name: str
    coeffs: np.ndarray  # c[a, b, x, y]
    targets: list[np.ndarray]
    full_correlation: np.ndarray | None = None
    family_n: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.ndim != 4 or self.coeffs.shape[:2] != (2, 2):
            raise ValueError("coefficient tensor must have shape (2, 2, n_x, n_y)")
        self.targets = [require_observable(t) for t in self.targets]
        if len(self.targets) != self.coeffs.shape[3]:
            raise ValueError("number of targets must match n_y")
        if self.full_correlation is not None:
            fc = np.asarray(self.full_correlation, dtype=float)
            signs = np.array([[1.0, -1.0], [-1.0, 1.0]])
            rebuilt = np.einsum("ab,xy->abxy", signs, fc)
            if np.abs(rebuilt - self.coeffs).max() > 1e-12:
                raise ValueError("full-correlation matrix inconsistent with coefficient tensor")
            self.full_correlation = fc

    @property
    def n_x(self) -> int:
        return self.coeffs.shape[2]

    @property
    def n_y(self) -> int:
        return self.coeffs.shape[3]

    @property
    def dim(self) -> int:
        return self.targets[0].shape[0]

    def targets_anticommute(self, atol: float = 1e-10) -> bool:
        for j in range(self.n_y):
            for k in range(j + 1, self.n_y):
                ac = self.targets[j] @ self.targets[k] + self.targets[k] @ self.targets[j]
                if np.abs(ac).max() > atol:
                    return False
        return True

    def target_blochs(self) -> np.ndarray | None:
        if self.dim != 2:
            return None
        return np.array([bloch_of(t) for t in self.targets])


def _full_correlation_witness(name: str, fc: np.ndarray, targets, **meta) -> Witness:
    fc = np.asarray(fc, dtype=float)
    signs = np.array([[1.0, -1.0], [-1.0, 1.0]])
    coeffs = np.einsum("ab,xy->abxy", signs, fc)
    return Witness(name=name, coeffs=coeffs, targets=list(targets), full_correlation=fc, **meta)


def esi_witness() -> Witness:
    """Four-input, three-target witness with Pauli targets and LHS bound 1."""
    fc = 0.25 * np.array(
        [
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ]
    )
    return _full_correlation_witness("esi", fc, [PAULI_X, PAULI_Y, PAULI_Z])


def pauli_witness() -> Witness:
    """Three-input Pauli witness (1/sqrt3)(<A1 X> - <A2 Y> + <A3 Z>) <= 1."""
    fc = np.diag([1.0, -1.0, 1.0]) / np.sqrt(3.0)
    return _full_correlation_witness("pauli", fc, [PAULI_X, PAULI_Y, PAULI_Z])


def family_input_strings(n: int) -> np.ndarray:
    """Alice input strings (0, x_2, ..., x_n) as a (2^(n-1), n) bit array."""
    n_x = 2 ** (n - 1)
    bits = np.zeros((n_x, n), dtype=np.int64)
    idx = np.arange(n_x)
    for j in range(n - 1):
        bits[:, j + 1] = (idx >> j) & 1
    return bits


def family_witness(n: int) -> Witness:
    """Plateau-witness family: c_xy = (-1)^(x_y) / 2^(n-1), anticommuting targets."""
    if n < 3:
        raise ValueError("family witness needs n >= 3")
    bits = family_input_strings(n)
    fc = ((-1.0) ** bits) / 2 ** (n - 1)
    return _full_correlation_witness(f"family{n}", fc, anticommuting_set(n), family_n=n)


def dodecahedron_blochs() -> np.ndarray:
    """Ten unit Bloch vectors, one per antipodal vertex pair of the dodecahedron."""
    phi = GOLDEN_RATIO
    raw = []
    for signs in itertools.product((1.0, -1.0), repeat=2):
        raw.append((1.0, signs[0], signs[1]))
    raw += [(0.0, 1.0 / phi, phi), (0.0, 1.0 / phi, -phi)]
    raw += [(1.0 / phi, phi, 0.0), (1.0 / phi, -phi, 0.0)]
    raw += [(phi, 0.0, 1.0 / phi), (phi, 0.0, -1.0 / phi)]
    vecs = np.array(raw)
    return vecs / np.linalg.norm(vecs, axis=1, keepdims=True)


def dodecahedron_witness() -> Witness:
    """Ten-setting witness (1/10) sum_x <A_x B_x> with dodecahedron-vertex targets."""
    blochs = dodecahedron_blochs()
    fc = np.eye(10) / 10.0
    targets = [b[0] * PAULI_X + b[1] * PAULI_Y + b[2] * PAULI_Z for b in blochs]
    return _full_correlation_witness("dodecahedron", fc, targets)


def evaluate(w: Witness, state, alice_observables) -> float:
    """Witness value sum c[a,b,x,y] tr(sigma_{a|x} B_{b|y}) on a quantum model."""
    asm = assemblage_from(state, alice_observables)
    if asm.n_x != w.n_x:
        raise ValueError("number of Alice observables must match witness inputs")
    total = 0.0
    d = w.dim
    eye = np.eye(d)
    for y, targ in enumerate(w.targets):
        for b in (0, 1):
            el = (eye + (1 if b == 0 else -1) * targ) / 2
            for x in range(w.n_x):
                for a in (0, 1):
                    c = w.coeffs[a, b, x, y]
                    if c != 0.0:
                        total += c * np.trace(asm.members[(a, x)] @ el).real
    return float(total)


def _class_value(t: np.ndarray, w: Witness, blochs: np.ndarray | None) -> float:
    if blochs is not None:
        return float(np.linalg.norm(t @ blochs))
    if w.targets_anticommute():
        return float(np.linalg.norm(t))
    op = sum(ty * targ for ty, targ in zip(t, w.targets))
    return eig_max(op)[0]


def enumerate_strategies(w: Witness, keep_members_up_to: int = 1 << 16) -> list[StrategyClass]:
    """All deterministic strategies reduced to t-vectors and grouped into classes."""
    if w.full_correlation is None:
        raise ValueError("strategy enumeration needs a full-correlation witness")
    n_x = w.n_x
    if n_x > ENUMERATION_CAP:
        raise ValueError(f"enumeration refused: {n_x} inputs exceeds cap of {ENUMERATION_CAP}")
    fc = w.full_correlation
    blochs = w.target_blochs()
    anticommuting = w.targets_anticommute()

    n_strat = 1 << n_x
    keep_members = n_strat <= keep_members_up_to
    groups: dict[tuple, dict] = {}
    chunk = 1 << 20
    for start in range(0, n_strat, chunk):
        idx = np.arange(start, min(start + chunk, n_strat), dtype=np.int64)
        bits = (idx[:, None] >> np.arange(n_x)[None, :]) & 1
        signs = 1.0 - 2.0 * bits
        tmat = signs @ fc
        abs_sorted = np.round(np.sort(np.abs(tmat), axis=1), CLASS_ROUND)
        for row in range(tmat.shape[0]):
            t = tmat[row]
            key_abs = tuple(abs_sorted[row])
            if anticommuting or blochs is not None:
                # group first, compute value once per group
                key = key_abs if anticommuting else key_abs + (round(_class_value(t, w, blochs), CLASS_ROUND),)
            else:
                key = key_abs + (round(_class_value(t, w, blochs), CLASS_ROUND),)
            g = groups.get(key)
            if g is None:
                g = {"t": t.copy(), "n": 0, "members": []}
                groups[key] = g
            g["n"] += 1
            if keep_members:
                g["members"].append(DeterministicStrategy(tuple(int(b) for b in bits[row])))

    classes = []
    for g in groups.values():
        t = g["t"]
        classes.append(
            StrategyClass(
                t_vector=t,
                value=_class_value(t, w, blochs),
                members=g["members"],
                n_members=g["n"],
            )
        )
    classes.sort(key=lambda c: (-c.value, c.abs_pattern))
    return classes


def _family_alpha_profile(n: int) -> np.ndarray:
    """Upper bounds on ||t|| per mismatch count alpha = 0 .. n_X / 4 (family witness)."""
    n_x = 2 ** (n - 1)
    alphas = np.arange(0, n_x // 4 + 1)
    bounds = []
    for alpha in alphas:
        entries = [n_x - 2 * alpha, 2 * alpha, 2 * alpha]
        entries += [min(2 * alpha, 2 ** (n + 1 - y)) for y in range(4, n + 1)]
        bounds.append(np.linalg.norm(np.array(entries, dtype=float)) / n_x)
    return np.array(bounds)


def s_matrix(n: int) -> np.ndarray:
    """Integer matrix S[x, z] = sum_y (-1)^(x_y + z_y) over the family input strings."""
    bits = family_input_strings(n)
    signs = (-1) ** bits
    return signs @ signs.T


def s_matrix_is_projector(n: int) -> bool:
    """Exact integer check that S^2 = n_X S (S / n_X is a projector)."""
    s = s_matrix(n)
    n_x = 2 ** (n - 1)
    return bool(np.array_equal(s @ s, n_x * s))


def lhs_bound(w: Witness) -> float:
    """Tight LHS bound beta_0 = max over deterministic strategies of the class value."""
    if w.family_n is not None and w.n_x > ENUMERATION_CAP:
        # Symmetry-reduced route: S is n_X times a projector, so ||t|| <= 1 with
        # equality for the single-observable strategies f(x) = x_y.
        if not s_matrix_is_projector(w.family_n):
            raise ValueError("family structure check failed")
        return 1.0
    classes = enumerate_strategies(w)
    return max(c.value for c in classes)


def has_plateau(w: Witness) -> bool:
    """True iff every LHS-bound-attaining strategy class uses a single observable."""
    if w.family_n is not None and w.n_x > ENUMERATION_CAP:
        profile = _family_alpha_profile(w.family_n)
        # alpha = 0 is the single-observable class at norm 1; all other mismatch
        # counts must stay strictly below the bound.
        return bool(np.all(profile[1:] < 1.0 - 1e-12))
    classes = enumerate_strategies(w)
    beta = max(c.value for c in classes)
    attaining = [c for c in classes if c.value >= beta - BETA_TIE_ATOL]
    return all(c.single_observable for c in attaining)


def _tetrahedron_blochs() -> np.ndarray:
    return np.array(
        [
            [1.0, -1.0, 1.0],
            [1.0, 1.0, -1.0],
            [-1.0, -1.0, -1.0],
            [-1.0, 1.0, 1.0],
        ]
    ) / np.sqrt(3.0)


def quantum_value(w: Witness) -> tuple[float, np.ndarray, list[np.ndarray]]:
    """Quantum strategy (value, state, Alice observables) for the built-in witnesses.

    Family witnesses use A_x = (1/sqrt n) sum_j (-1)^(x_j) B_j^T with a
    maximally entangled state; generic witnesses fall back to a seesaw.
    """
    if w.family_n is not None:
        n = w.family_n
        bits = family_input_strings(n)
        alice = []
        for row in bits:
            op = sum(((-1.0) ** row[j]) * w.targets[j].T for j in range(n)) / np.sqrt(n)
            alice.append(op)
        state = max_entangled(w.dim)
        value = evaluate(w, state, alice)
        return value, state, alice
    if w.name == "esi":
        alice = [
            v[0] * PAULI_X + v[1] * PAULI_Y + v[2] * PAULI_Z for v in _tetrahedron_blochs()
        ]
        state = max_entangled(2)
        return evaluate(w, state, alice), state, alice
    if w.name == "pauli":
        alice = [PAULI_X, PAULI_Y, PAULI_Z]
        state = max_entangled(2)
        return evaluate(w, state, alice), state, alice
    if w.full_correlation is not None:
        # transpose strategy: A_x proportional to sign structure of row x
        alice = []
        for x in range(w.n_x):
            op = sum(w.full_correlation[x, y] * w.targets[y].T for y in range(w.n_y))
            val, _ = eig_max(op @ op)
            alice.append(op / np.sqrt(val) if val > 0 else w.targets[0].T)
        state = max_entangled(w.dim)
        try:
            return evaluate(w, state, alice), state, alice
        except ValueError:
            pass
    raise ValueError(f"no quantum construction available for witness {w.name!r}")


def witness_to_json(w: Witness) -> str:
    doc = {
        "name": w.name,
        "nX": w.n_x,
        "nY": w.n_y,
        "coeffs": w.coeffs.tolist(),
        "targets": [
            [[[float(z.real), float(z.imag)] for z in row] for row in t] for t in w.targets
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def witness_from_json(text: str) -> Witness:
    doc = json.loads(text)
    coeffs = np.asarray(doc["coeffs"], dtype=float)
    targets = []
    for t in doc["targets"]:
        mat = np.array([[complex(re, im) for re, im in row] for row in t])
        targets.append(require_hermitian(mat, atol=1e-10, what="target"))
    # recover the full-correlation matrix when the tensor has that shape
    fc = None
    cand = coeffs[0, 0]
    signs = np.array([[1.0, -1.0], [-1.0, 1.0]])
    if np.abs(np.einsum("ab,xy->abxy", signs, cand) - coeffs).max() <= 1e-12:
        fc = cand
    return Witness(
        name=doc["name"], coeffs=coeffs, targets=targets, full_correlation=fc
    )


BUILTIN_WITNESSES = {
    "esi": esi_witness,
    "pauli": pauli_witness,
    "dodecahedron": dodecahedron_witness,
}


def make_witness(name: str, n: int | None = None) -> Witness:
    """Witness catalog lookup: esi, pauli, dodecahedron, family (with n)."""
    if name in BUILTIN_WITNESSES:
        return BUILTIN_WITNESSES[name]()
    if name == "family":
        if n is None:
            raise ValueError("family witness needs n")
        return family_witness(n)
    if name.startswith("family"):
        return family_witness(int(name[len("family"):]))
    raise ValueError(f"unknown witness {name!r}")
