"""Quantum objects: observables, Bloch parametrization, anticommuting sets,
entangled states, assemblages, and imprecision constraints.

Conventions
-----------
- Binary observables have eigenvalues +-1; POVM elements are (1 + (-1)^a O)/2.
- Imprecision of a lab measurement relative to its target is quantified either
  by POVM-element fidelity, tr(B_lab[b] B_targ[b]) >= r (1 - eps_by) with r the
  target rank, or by the sup-norm of pairwise anticommutators of the lab set.
- For qubit observables the fidelity condition reads tr(B_targ B_lab) >= 2 - 4 eps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import as_operator, eig_min, kron, partial_trace, require_hermitian

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)

OBS_ATOL = 1e-10


def is_binary_observable(op, atol: float = OBS_ATOL) -> bool:
    """True when op is Hermitian with op^2 = identity within tolerance."""
    a = np.asarray(op)
    if not (a.ndim == 2 and a.shape[0] == a.shape[1]):
        return False
    if np.abs(a - a.conj().T).max() > atol:
        return False
    return np.abs(a @ a - np.eye(a.shape[0])).max() <= atol


def require_observable(op, atol: float = OBS_ATOL) -> np.ndarray:
    a = require_hermitian(op, atol=atol, what="observable")
    dev = np.abs(a @ a - np.eye(a.shape[0])).max()
    if dev > atol:
        raise ValueError(f"observable squared deviates from identity by {dev:.3e}")
    return a


def observable_from_bloch(n) -> np.ndarray:
    """Extremal qubit observable n . (X, Y, Z) for a unit Bloch vector n."""
    v = np.asarray(n, dtype=float)
    if v.shape != (3,):
        raise ValueError("Bloch vector must have three components")
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError(f"Bloch vector must be unit length, got norm {np.linalg.norm(v)!r}")
    return v[0] * PAULI_X + v[1] * PAULI_Y + v[2] * PAULI_Z


def bloch_of(op) -> np.ndarray:
    """Bloch vector of a qubit observable (inverse of observable_from_bloch)."""
    a = as_operator(op)
    if a.shape != (2, 2):
        raise ValueError("Bloch decomposition needs a 2x2 operator")
    return np.array([np.trace(a @ p).real / 2 for p in PAULIS])


def anticommuting_set(n: int) -> list[np.ndarray]:
    """n pairwise-anticommuting binary observables in dimension 2^floor(n/2).

    Deterministic construction: with m = floor(n/2) qubit factors, level L
    contributes 1^(x L) (x) P (x) X^(x m-1-L) for P in (X, Y, Z) at the first
    level and P in (Y, Z) afterwards.  This reproduces (X, Y, Z) for n = 3 and
    (XX, YX, ZX, 1Y) for n = 4.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    m = n // 2
    if m == 0:
        return [np.eye(1, dtype=complex)]
    ops: list[np.ndarray] = []
    for level in range(m):
        heads = (PAULI_X, PAULI_Y, PAULI_Z) if level == 0 else (PAULI_Y, PAULI_Z)
        for head in heads:
            factors = [PAULI_I] * level + [head] + [PAULI_X] * (m - 1 - level)
            op = factors[0]
            for f in factors[1:]:
                op = kron(op, f)
            ops.append(op)
    return ops[:n]


def max_entangled(d: int) -> np.ndarray:
    """Projector onto sum_k |kk> / sqrt(d)."""
    if d < 2:
        raise ValueError("d must be >= 2")
    psi = np.zeros(d * d, dtype=complex)
    for k in range(d):
        psi[k * d + k] = 1.0
    psi /= np.sqrt(d)
    return np.outer(psi, psi.conj())


def isotropic_state(v: float, d: int = 2) -> np.ndarray:
    """v |phi+><phi+| + (1 - v) 1/d^2 on C^d (x) C^d."""
    if not 0.0 <= v <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    return v * max_entangled(d) + (1.0 - v) * np.eye(d * d) / d**2


@dataclass(frozen=True)
class ImprecisionSpec:
    """Imprecision budget: quantifier plus per-(outcome, input) parameters."""

    quantifier: str  # "fidelity" or "anticommutator"
    eps: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.quantifier not in ("fidelity", "anticommutator"):
            raise ValueError(f"unknown quantifier {self.quantifier!r}")
        for key, val in self.eps.items():
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"eps{key} = {val} outside [0, 1]")

    @classmethod
    def uniform(cls, eps: float, n_y: int, quantifier: str = "fidelity") -> "ImprecisionSpec":
        return cls(quantifier, {(b, y): float(eps) for b in (0, 1) for y in range(n_y)})

    @classmethod
    def axes(cls, eps_by_axis, quantifier: str = "fidelity") -> "ImprecisionSpec":
        table = {}
        for y, e in enumerate(eps_by_axis):
            table[(0, y)] = float(e)
            table[(1, y)] = float(e)
        return cls(quantifier, table)

    def axis_eps(self, y: int) -> float:
        """Observable-level imprecision of measurement y (mean over outcomes)."""
        return 0.5 * (self.eps[(0, y)] + self.eps[(1, y)])

    @property
    def n_y(self) -> int:
        return 1 + max(y for (_, y) in self.eps)

    def axis_vector(self) -> np.ndarray:
        return np.array([self.axis_eps(y) for y in range(self.n_y)])


def check_imprecision(lab, targ, spec: ImprecisionSpec, by: tuple[int, int], atol: float = 1e-9) -> bool:
    """Is the (b, y) POVM element of lab within spec of the target element?"""
    lab = as_operator(lab)
    targ = require_observable(targ)
    if lab.shape != targ.shape:
        raise ValueError("lab and target dimensions differ")
    if spec.quantifier != "fidelity":
        raise ValueError("per-element check only applies to the fidelity quantifier")
    b, y = by
    d = lab.shape[0]
    r = d // 2
    sign = 1.0 if b == 0 else -1.0
    lab_el = (np.eye(d) + sign * lab) / 2
    targ_el = (np.eye(d) + sign * targ) / 2
    return np.trace(lab_el @ targ_el).real >= r * (1.0 - spec.eps[by]) - atol


def check_anticommutators(labs, spec: ImprecisionSpec, atol: float = 1e-9) -> bool:
    """Anticommutator quantifier: ||{B_y, B_y'}||_inf <= eps for every pair."""
    if spec.quantifier != "anticommutator":
        raise ValueError("set-level check only applies to the anticommutator quantifier")
    eps = max(spec.eps.values())
    for j in range(len(labs)):
        for k in range(j + 1, len(labs)):
            ac = labs[j] @ labs[k] + labs[k] @ labs[j]
            if np.abs(np.linalg.eigvalsh(ac)).max() > eps + atol:
                return False
    return True


@dataclass
class Assemblage:
    """Sub-normalized states sigma_{a|x} Bob holds after Alice's measurement."""

    members: dict[tuple[int, int], np.ndarray]
    n_a: int = 2

    @property
    def n_x(self) -> int:
        return 1 + max(x for (_, x) in self.members)

    @property
    def dim(self) -> int:
        return next(iter(self.members.values())).shape[0]

    def marginal(self, x: int = 0) -> np.ndarray:
        return sum(self.members[(a, x)] for a in range(self.n_a))

    def validate(self, atol: float = 1e-10) -> None:
        ref = self.marginal(0)
        if abs(np.trace(ref).real - 1.0) > atol:
            raise ValueError("assemblage marginal is not normalized")
        for (a, x), sig in self.members.items():
            require_hermitian(sig, atol=1e-10, what=f"sigma({a}|{x})")
            if eig_min(sig) < -atol:
                raise ValueError(f"sigma({a}|{x}) is not PSD")
        for x in range(1, self.n_x):
            if np.abs(self.marginal(x) - ref).max() > atol:
                raise ValueError("assemblage violates no-signalling")

    def correlator(self, x: int, bob_obs) -> float:
        """<A_x (x) B> = tr((sigma_0|x - sigma_1|x) B)."""
        diff = self.members[(0, x)] - self.members[(1, x)]
        return float(np.trace(diff @ bob_obs).real)


def assemblage_from(state, alice_observables) -> Assemblage:
    """Steering assemblage tr_A((A_{a|x} (x) 1) rho) for binary Alice observables."""
    rho = require_hermitian(state, atol=1e-10, what="state")
    obs = [require_observable(o) for o in alice_observables]
    if not obs:
        raise ValueError("need at least one Alice observable")
    da = obs[0].shape[0]
    if rho.shape[0] % da != 0:
        raise ValueError("state dimension incompatible with Alice observables")
    db = rho.shape[0] // da
    members = {}
    for x, a_obs in enumerate(obs):
        for a in (0, 1):
            el = (np.eye(da) + (1 if a == 0 else -1) * a_obs) / 2
            members[(a, x)] = partial_trace(kron(el, np.eye(db)) @ rho, (da, db), over="A")
    asm = Assemblage(members)
    asm.validate()
    return asm
