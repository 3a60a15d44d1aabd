"""Moment-matrix SDP relaxations with sampled dimension constraints.

A monomial list S is a set of words over labeled operators; the tracial
moment matrix is Gamma[u, v] = tr(u^dag v).  Random sampling of everything
except the fixed target observables produces moment-matrix samples; affine
combinations of a maximal linearly independent sample set, intersected with
the PSD cone, relax the set of dimension-d operator configurations.  The
fidelity conditions enter as linear inequality rows, the witness (or the
observed correlations, or Eve's guessing functional) as linear rows.

Sampled operators are extremal (pure states, projective labs); values and
constraints are linear in each operator separately, so convex aggregation
inside the affine span covers mixed states and non-projective POVMs, which
keeps every program here a valid relaxation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import NumericalFailure, partial_trace
from .quantum import ImprecisionSpec, max_entangled, observable_from_bloch
from .sdp import HermitianVar, SdpBlock, SdpProblem, sdp_solve
from .witness import DeterministicStrategy, StrategyClass, Witness, enumerate_strategies, lhs_bound

DEP_TOL = 1e-9  # relative residual below which a sample counts as dependent

Word = tuple[str, ...]


# ---------------------------------------------------------------------------
# monomial lists


@dataclass(frozen=True)
class MonomialList:
    """Ordered monomial words over labeled operators; includes all length-1 words."""

    words: tuple[Word, ...]
    kind: str  # "state" (single hidden state) or "assemblage"
    n_targets: int
    n_inputs: int = 0  # assemblage mode only
    exact_axes: tuple[int, ...] = ()  # measurements pinned to their targets

    @property
    def side(self) -> int:
        return len(self.words)

    def index(self, word: Word) -> int:
        return self.words.index(word)


def witness_monomials(n_targets: int, level: int = 1, exact_axes: tuple[int, ...] = ()) -> MonomialList:
    """Monomials over {1, sigma, target elements, lab elements}.

    Operators carry per-outcome labels: T{b}{y} and E{b}{y} are the POVM
    elements (1 + (-1)^b O)/2 of the target and lab observables.  Level 1 is
    the operator list itself (side 14 for three targets); the moment matrix
    then already contains every degree-2 moment.  Level k >= 2 appends all
    words up to length k over the non-identity operators.

    Axes listed in exact_axes have their lab measurement pinned to the target
    (imprecision zero): their lab words are omitted, which keeps the program
    strictly feasible.  The bound is unchanged: with the fidelity forced to
    one, the lab rows of any feasible moment matrix duplicate the target rows.
    """
    base = ["s"]
    base += [f"T{b}{y}" for y in range(n_targets) for b in (0, 1)]
    base += [f"E{b}{y}" for y in range(n_targets) for b in (0, 1) if y not in exact_axes]
    words: list[Word] = [("1",)] + [(u,) for u in base]
    if level >= 2:
        words += [(u, v) for u in base for v in base]
    if level >= 3:
        words += [(u, v, z) for u in base for v in base for z in base]
    return MonomialList(
        tuple(dict.fromkeys(words)), kind="state", n_targets=n_targets, exact_axes=tuple(sorted(exact_axes))
    )


def guessing_monomials(
    n_inputs: int, n_targets: int, level: int = 1, exact_axes: tuple[int, ...] = ()
) -> MonomialList:
    """Monomials over {1, assemblage members, target elements, lab elements}.

    Level 1 is the operator list itself (side 21 for 4 inputs and 3 targets):
    sig{a}{x} are the sub-normalized branch states, T{b}{y} / E{b}{y} the
    target and lab POVM elements.  Level 2 appends all length-2 words (side
    421), which is the documented high-accuracy randomness configuration.
    """
    sig = [f"sig{a}{x}" for x in range(n_inputs) for a in (0, 1)]
    targ = [f"T{b}{y}" for y in range(n_targets) for b in (0, 1)]
    lab = [f"E{b}{y}" for y in range(n_targets) for b in (0, 1) if y not in exact_axes]
    base = sig + targ + lab
    words: list[Word] = [("1",)] + [(u,) for u in base]
    if level == 2:  # member-lab products: the tilt-exploitation words
        words += [(s, e) for s in sig for e in lab]
    if level >= 3:
        words += [(u, v) for u in base for v in base]
    if level >= 4:
        words += [(u, v, z) for u in base for v in base for z in base]
    return MonomialList(
        tuple(dict.fromkeys(words)),
        kind="assemblage",
        n_targets=n_targets,
        n_inputs=n_inputs,
        exact_axes=tuple(sorted(exact_axes)),
    )


def spec_exact_axes(spec: ImprecisionSpec, n_targets: int) -> tuple[int, ...]:
    """Axes whose lab measurement is pinned to the target (zero imprecision)."""
    return tuple(
        y
        for y in range(n_targets)
        if spec.eps.get((0, y), 0.0) == 0.0 and spec.eps.get((1, y), 0.0) == 0.0
    )


# ---------------------------------------------------------------------------
# sampling


def _haar_pure(rng, d: int) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def _haar_unitary(rng, d: int) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _random_observable(rng, d: int) -> np.ndarray:
    if d == 2:
        v = rng.standard_normal(3)
        v /= np.linalg.norm(v)
        return observable_from_bloch(v)
    u = _haar_unitary(rng, d)
    signs = np.concatenate([np.ones(d // 2), -np.ones(d - d // 2)])
    return u @ np.diag(signs).astype(complex) @ u.conj().T


def _random_density(rng, d: int) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _sample_ops(rng, monomials: MonomialList, targets: list[np.ndarray], trial: int) -> dict[str, np.ndarray]:
    d = targets[0].shape[0]
    eye = np.eye(d, dtype=complex)
    ops: dict[str, np.ndarray] = {"1": eye}
    for y, t in enumerate(targets):
        ops[f"T0{y}"] = (eye + t) / 2
        ops[f"T1{y}"] = (eye - t) / 2
    for y in range(monomials.n_targets):
        if y in monomials.exact_axes:
            continue
        lab = _random_observable(rng, d)
        ops[f"E0{y}"] = (eye + lab) / 2
        ops[f"E1{y}"] = (eye - lab) / 2
    if monomials.kind == "state":
        ops["s"] = _haar_pure(rng, d)
        return ops
    # assemblage mode: alternate entangled-state draws with direct
    # no-signalling draws so the affine hull covers the full variety
    n_x = monomials.n_inputs
    if trial % 2 == 0:
        rho_ab = _haar_pure(rng, d * d)
        rho_b = partial_trace(rho_ab, (d, d), over="A")
        members = []
        for _ in range(n_x):
            a_obs = _random_observable(rng, d)
            el = (np.eye(d) + a_obs) / 2
            members.append(partial_trace(np.kron(el, np.eye(d)) @ rho_ab, (d, d), over="A"))
    else:
        rho_b = _random_density(rng, d)
        sq = _matrix_sqrt(rho_b)
        members = []
        for _ in range(n_x):
            u = _haar_unitary(rng, d)
            k = u @ np.diag(rng.uniform(0.0, 1.0, d)).astype(complex) @ u.conj().T
            members.append(sq @ k @ sq)
    for x in range(n_x):
        ops[f"sig0{x}"] = members[x]
        ops[f"sig1{x}"] = rho_b - members[x]
    return ops


def _matrix_sqrt(h: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def _monomial_stack(ops: dict[str, np.ndarray], words: tuple[Word, ...]) -> np.ndarray:
    mats = []
    for word in words:
        m = ops[word[0]]
        for label in word[1:]:
            m = m @ ops[label]
        mats.append(m.reshape(-1))
    return np.array(mats)


def _moment_matrix(ops: dict[str, np.ndarray], words: tuple[Word, ...], d: int) -> np.ndarray:
    stack = _monomial_stack(ops, words)
    return stack.conj() @ stack.T


@dataclass
class MomentBasis:
    """Orthonormalized span of sampled moment matrices.

    ``samples`` holds an orthonormal basis of the sampled span (orthonormal in
    the real vectorization), which keeps the downstream SDPs well conditioned.
    Assemblage-mode bases additionally carry localizing blocks
    L^{ax}[u, v] = tr(u^dag sigma_{a|x} v), sampled with the same coefficients;
    they impose positivity of the sub-normalized members, without which the
    branch programs are unbounded.  Interior points of the feasible region are
    tracked through the coordinates of two averages: ``c_generic`` (random
    labs, strictly positive definite combination) and ``c_pinned`` (labs equal
    to targets, unit fidelity).
    """

    monomials: MonomialList
    targets: list[np.ndarray]
    samples: np.ndarray  # (n_basis, side, side), complex Hermitian, orthonormal
    seed: int
    c_generic: np.ndarray | None = None
    c_pinned: np.ndarray | None = None
    indep_words: np.ndarray | None = None  # PSD-carrying word subset
    loc_samples: dict = field(default_factory=dict)  # (a, x) -> (n_basis, l, l)
    loc_indep: dict = field(default_factory=dict)  # (a, x) -> word subset

    @property
    def side(self) -> int:
        return self.monomials.side

    def psd_coeffs(self) -> list[np.ndarray]:
        """PSD block coefficients: principal submatrix on the independent words.

        Words linearly dependent on others in every sample (POVM completeness,
        no-signalling) make every span element singular; restricting the PSD
        constraint to an independent word subset is an exact congruence and
        restores a strictly feasible interior.
        """
        cached = getattr(self, "_psd_cache", None)
        if cached is not None:
            return cached
        if self.indep_words is None:
            out = list(self.samples)
        else:
            idx = self.indep_words
            out = [s[np.ix_(idx, idx)] for s in self.samples]
        object.__setattr__(self, "_psd_cache", out)
        return out

    def localizing_coeffs(self) -> list[list[np.ndarray]]:
        """Localizing PSD blocks (assemblage mode), on independent word subsets."""
        cached = getattr(self, "_loc_cache", None)
        if cached is not None:
            return cached
        out = []
        for key, arr in sorted(self.loc_samples.items()):
            idx = self.loc_indep[key]
            out.append([s[np.ix_(idx, idx)] for s in arr])
        object.__setattr__(self, "_loc_cache", out)
        return out

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.targets[0].shape[0]

    def rows(self, u: Word, v: Word) -> np.ndarray:
        """Per-basis-element values of the (u, v) moment entry (real part)."""
        i, j = self.monomials.index(u), self.monomials.index(v)
        return self.samples[:, i, j].real.copy()

    def weight_rows(self) -> np.ndarray:
        """Rows of the total weight tr(1)/d of the affine combination."""
        return self.rows(("1",), ("1",)) / self.d

    def interior_coords(self, spec: ImprecisionSpec) -> np.ndarray | None:
        """Coordinates of a strictly feasible unit-weight moment matrix.

        Blends the pinned average (fidelity one) with the generic average
        (positive definite) without leaving the fidelity region."""
        if self.c_generic is None or self.c_pinned is None:
            return None
        eps_active = [
            self.eps_margin(spec, b, y)
            for y in range(spec.n_y)
            if y not in self.monomials.exact_axes
            for b in (0, 1)
        ]
        if not eps_active:
            return None
        delta = 0.5 * min(1.0, min(eps_active))
        return (1.0 - delta) * self.c_pinned + delta * self.c_generic

    def eps_margin(self, spec: ImprecisionSpec, b: int, y: int) -> float:
        """Largest pinned/generic blend weight keeping fidelity (b, y) strict."""
        frow = self.rows((f"T{b}{y}",), (f"E{b}{y}",))
        fid_pin = float(frow @ self.c_pinned)
        fid_gen = float(frow @ self.c_generic)
        eps = spec.eps[(b, y)]
        drop = fid_pin - fid_gen
        if drop <= 0:
            return 1.0
        return max(0.0, eps / drop)


def _vectorize_parts(parts: list[np.ndarray]) -> np.ndarray:
    return np.concatenate(
        [np.concatenate([p.real.reshape(-1), p.imag.reshape(-1)]) for p in parts]
    )


def _loc_words(monomials: MonomialList) -> list[Word]:
    words: list[Word] = [("1",)]
    words += [(f"T0{y}",) for y in range(monomials.n_targets)]
    words += [(f"E0{y}",) for y in range(monomials.n_targets) if y not in monomials.exact_axes]
    return words


def _loc_keys(monomials: MonomialList) -> list[tuple[int, int]]:
    if monomials.kind != "assemblage":
        return []
    return [(a, x) for x in range(monomials.n_inputs) for a in (0, 1)]


def _sample_parts(
    ops: dict[str, np.ndarray], monomials: MonomialList, loc_words: list[Word]
) -> tuple[list[np.ndarray], np.ndarray, dict]:
    """Moment matrix plus localizing blocks; also their monomial-row stacks."""
    stack = _monomial_stack(ops, monomials.words)
    gamma = stack.conj() @ stack.T
    parts = [gamma]
    loc_stacks = {}
    for key in _loc_keys(monomials):
        a, x = key
        sig = ops[f"sig{a}{x}"]
        sq = _matrix_sqrt(sig)
        lstack = np.array([(sq @ _word_matrix(ops, wd)).reshape(-1) for wd in loc_words])
        parts.append(lstack.conj() @ lstack.T)
        loc_stacks[key] = lstack
    return parts, stack, loc_stacks


def _word_matrix(ops: dict[str, np.ndarray], word: Word) -> np.ndarray:
    m = ops[word[0]]
    for label in word[1:]:
        m = m @ ops[label]
    return m


def build_basis(
    monomials: MonomialList,
    targets: list[np.ndarray],
    seed: int = 2024,
    max_samples: int | None = None,
    dep_tol: float = DEP_TOL,
) -> MomentBasis:
    """Sample moment matrices until the next draw is linearly dependent."""
    rng = np.random.default_rng(seed)
    d = targets[0].shape[0]
    side = monomials.side
    cap = max_samples if max_samples is not None else max(side * side, 200)
    loc_words = _loc_words(monomials)
    loc_keys = _loc_keys(monomials)
    raw: list[list[np.ndarray]] = []
    stacks: list[np.ndarray] = []
    loc_stacks: dict = {key: [] for key in loc_keys}
    ortho: list[np.ndarray] = []
    for trial in range(cap + 1):
        ops = _sample_ops(rng, monomials, targets, trial)
        parts, stack, lstacks = _sample_parts(ops, monomials, loc_words)
        vec = _vectorize_parts(parts)
        norm = np.linalg.norm(vec)
        res = vec.copy()
        for q in ortho:
            res -= (q @ res) * q
        # second orthogonalization pass for numerical safety
        for q in ortho:
            res -= (q @ res) * q
        rnorm = np.linalg.norm(res)
        if rnorm < dep_tol * norm:
            break
        raw.append(parts)
        stacks.append(stack)
        for key in loc_keys:
            loc_stacks[key].append(lstacks[key])
        ortho.append(res / rnorm)
    else:
        raise NumericalFailure(f"moment basis did not close within {cap} samples")

    indep = _independent_word_subset(stacks)
    loc_indep = {key: _independent_word_subset(loc_stacks[key]) for key in loc_keys}

    def unvec(q: np.ndarray) -> list[np.ndarray]:
        out = []
        offset = 0
        for size in [side] + [len(loc_words)] * len(loc_keys):
            n = size * size
            out.append((q[offset : offset + n] + 1j * q[offset + n : offset + 2 * n]).reshape(size, size))
            offset += 2 * n
        return out

    element_parts = [unvec(q) for q in ortho]
    elements = np.array([p[0] for p in element_parts])
    loc_samples = {
        key: np.array([p[1 + k] for p in element_parts]) for k, key in enumerate(loc_keys)
    }

    def coords(parts: list[np.ndarray]) -> np.ndarray:
        v = _vectorize_parts(parts)
        return np.array([q @ v for q in ortho])

    generic_avg = [sum(p[k] for p in raw) / len(raw) for k in range(1 + len(loc_keys))]
    pin_rng = np.random.default_rng(seed + 1)
    pinned_mons = MonomialList(
        monomials.words,
        kind=monomials.kind,
        n_targets=monomials.n_targets,
        n_inputs=monomials.n_inputs,
        exact_axes=tuple(range(monomials.n_targets)),
    )
    n_pin = max(24, 2 * len(raw))
    pinned_sum = None
    eye = np.eye(d, dtype=complex)
    for trial in range(n_pin):
        ops = _sample_ops(pin_rng, pinned_mons, targets, trial)
        for y in range(monomials.n_targets):
            if y not in monomials.exact_axes:
                ops[f"E0{y}"] = (eye + targets[y]) / 2
                ops[f"E1{y}"] = (eye - targets[y]) / 2
        parts, _, _ = _sample_parts(ops, monomials, loc_words)
        if pinned_sum is None:
            pinned_sum = parts
        else:
            pinned_sum = [a + b for a, b in zip(pinned_sum, parts)]
    pinned_avg = [p / n_pin for p in pinned_sum]

    return MomentBasis(
        monomials,
        [t.copy() for t in targets],
        elements,
        seed,
        c_generic=coords(generic_avg),
        c_pinned=coords(pinned_avg),
        indep_words=indep,
        loc_samples=loc_samples,
        loc_indep=loc_indep,
    )


def _independent_word_subset(stacks: list[np.ndarray], tol: float = 1e-9) -> np.ndarray:
    """Maximal word subset whose monomial rows are independent in every sample."""
    from scipy.linalg import qr

    v = np.vstack([s.T for s in stacks])  # relations v: V @ v = 0 hold in all samples
    _, r, piv = qr(v, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > tol * diag[0])) if diag.size else 0
    return np.sort(piv[:rank])


# ---------------------------------------------------------------------------
# per-strategy witness bounds


def _strategy_t(w: Witness, strategy) -> np.ndarray:
    """Reduce a strategy (response function, class, or explicit t-vector) to t."""
    if isinstance(strategy, StrategyClass):
        return strategy.t_vector
    if isinstance(strategy, DeterministicStrategy):
        signs = strategy.signs()
    else:
        arr = np.asarray(strategy, dtype=float)
        if arr.shape == (w.n_y,):
            return arr
        signs = 1.0 - 2.0 * arr
    if w.full_correlation is None:
        raise ValueError("witness bounds need a full-correlation witness")
    return signs @ w.full_correlation


def _lab_diff_rows(basis: MomentBasis, u: Word, y: int) -> np.ndarray:
    """Rows of tr(u B_eps_y) for the lab observable, from its POVM elements.

    Axes pinned to their target fall back to the target observable's rows."""
    if y in basis.monomials.exact_axes:
        return basis.rows(u, (f"T0{y}",)) - basis.rows(u, (f"T1{y}",))
    return basis.rows(u, (f"E0{y}",)) - basis.rows(u, (f"E1{y}",))


def _fidelity_constraints(
    basis: MomentBasis, spec: ImprecisionSpec, weight_rows: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Rows for Gamma[T_by, E_by] >= (1 - eps_by) * weight.

    Returns (inequality rows in A s <= 0 form, equality rows).  Axes with
    exactly zero imprecision carry no rows: their lab words are pinned to the
    targets at the monomial level instead, which keeps the feasible set
    strictly solvable.
    """
    ineq, eq = [], []
    for y in range(spec.n_y):
        if y in basis.monomials.exact_axes:
            continue
        for b in (0, 1):
            row = basis.rows((f"T{b}{y}",), (f"E{b}{y}",)) - (1.0 - spec.eps[(b, y)]) * weight_rows
            if spec.eps[(b, y)] == 0.0:
                eq.append(row)
            else:
                ineq.append(-row)
    return ineq, eq


def witness_bound_sdp(
    w: Witness,
    strategy,
    spec: ImprecisionSpec,
    basis: MomentBasis,
    tol: float = 1e-8,
) -> float:
    """Upper bound on one strategy's fidelity-constrained witness value."""
    t = _strategy_t(w, strategy)
    m = basis.size
    obj = np.zeros(m)
    for y, ty in enumerate(t):
        if ty != 0.0:
            obj += ty * _lab_diff_rows(basis, ("s",), y)
    weight = basis.weight_rows()
    fid_ineq, fid_eq = _fidelity_constraints(basis, spec, weight)
    eq_rows = [weight] + fid_eq
    a_eq, b_eq = _independent_rows(np.array(eq_rows), np.array([1.0] + [0.0] * len(fid_eq)))
    ineq = (np.array(fid_ineq), np.zeros(len(fid_ineq))) if fid_ineq else None
    psd = basis.psd_coeffs()
    prob = SdpProblem(
        blocks=[SdpBlock(const=np.zeros(psd[0].shape, dtype=complex), coeffs=psd)],
        objective=obj,
        eq=(a_eq, b_eq),
        ineq=ineq,
        primal_start=basis.interior_coords(spec),
    )
    sol = sdp_solve(prob, tol=tol)
    if sol.status != "optimal":
        raise NumericalFailure(f"witness bound SDP failed for t={t}: {sol.status}")
    return sol.objective


def make_witness_basis(
    w: Witness, spec: ImprecisionSpec, level: int = 1, seed: int = 2024
) -> MomentBasis:
    """Moment basis matched to the witness targets and the spec's exact axes."""
    axes = spec_exact_axes(spec, w.n_y)
    return build_basis(witness_monomials(w.n_y, level=level, exact_axes=axes), w.targets, seed=seed)


def _compatible(basis: MomentBasis | None, spec: ImprecisionSpec, n_y: int) -> bool:
    return basis is not None and basis.monomials.exact_axes == spec_exact_axes(spec, n_y)


def witness_lhs_sdp(
    w: Witness,
    spec: ImprecisionSpec,
    basis: MomentBasis | None = None,
    tol: float = 1e-8,
    seed: int = 2024,
) -> float:
    """max over deterministic strategies of the per-strategy SDP bound."""
    if not _compatible(basis, spec, w.n_y):
        basis = make_witness_basis(w, spec, seed=seed)
    classes = enumerate_strategies(w)
    best = 0.0
    seen: set[tuple] = set()
    for cls in classes:
        for member in cls.members or [None]:
            t = cls.t_vector if member is None else _strategy_t(w, member)
            key = tuple(np.round(t, 12))
            if key in seen:
                continue
            seen.add(key)
            if not np.any(np.abs(t) > 1e-14):
                continue
            best = max(best, witness_bound_sdp(w, t, spec, basis, tol=tol))
    return best


def plateau_sdp(
    w: Witness,
    eps_x: float,
    eps_y: float,
    basis: MomentBasis | None = None,
    tol: float = 1e-7,
    hi: float = 0.05,
    seed: int = 2024,
) -> float:
    """Plateau length in eps_z at fixed (eps_x, eps_y), certified by the SDP bound.

    Bisection of the per-strategy bound maximum against beta_0; the basis is
    rebuilt to pin any axis held at zero imprecision.
    """
    beta0 = lhs_bound(w)
    slack = 1e-9
    probe = ImprecisionSpec.axes([eps_x, eps_y, hi])
    if not _compatible(basis, probe, w.n_y):
        basis = make_witness_basis(w, probe, seed=seed)

    def bound(eps_z: float) -> float:
        spec = ImprecisionSpec.axes([eps_x, eps_y, eps_z])
        return witness_lhs_sdp(w, spec, basis, seed=seed)

    if bound(hi) <= beta0 + slack:
        raise NumericalFailure(f"SDP bound does not exceed beta0 below eps_z = {hi}")
    lo, fhi = 0.0, hi
    while fhi - lo > tol:
        mid = 0.5 * (lo + fhi)
        if bound(mid) <= beta0 + slack:
            lo = mid
        else:
            fhi = mid
    return lo


def shared_plateau_sdp(
    w: Witness,
    basis: MomentBasis | None = None,
    tol: float = 1e-7,
    hi: float = 0.02,
    seed: int = 2024,
) -> float:
    """Plateau length along the shared-imprecision diagonal, certified by the SDP."""
    beta0 = lhs_bound(w)
    slack = 1e-9
    probe = ImprecisionSpec.uniform(hi, w.n_y)
    if not _compatible(basis, probe, w.n_y):
        basis = make_witness_basis(w, probe, seed=seed)

    def bound(eps: float) -> float:
        return witness_lhs_sdp(w, ImprecisionSpec.uniform(eps, w.n_y), basis, seed=seed)

    if bound(hi) <= beta0 + slack:
        raise NumericalFailure(f"SDP bound does not exceed beta0 below eps = {hi}")
    lo, fhi = 0.0, hi
    while fhi - lo > tol:
        mid = 0.5 * (lo + fhi)
        if bound(mid) <= beta0 + slack:
            lo = mid
        else:
            fhi = mid
    return lo


# ---------------------------------------------------------------------------
# correlation-level visibility


def _independent_rows(a: np.ndarray, b: np.ndarray, tol: float = 1e-11) -> tuple[np.ndarray, np.ndarray]:
    """Greedy maximal independent subset of equality rows (keeps cvxopt happy)."""
    keep: list[int] = []
    ortho: list[np.ndarray] = []
    for i in range(a.shape[0]):
        v = a[i].astype(float)
        r = v.copy()
        for q in ortho:
            r -= (q @ r) * q
        for q in ortho:
            r -= (q @ r) * q
        nr = np.linalg.norm(r)
        if nr > tol * max(1.0, np.linalg.norm(v)):
            keep.append(i)
            ortho.append(r / nr)
    return a[keep], b[keep]


def triangle_correlations() -> tuple[np.ndarray, list[np.ndarray]]:
    """p(a,b|x,y) for phi+ with both parties measuring the XZ-plane triangle."""
    blochs = np.array([[1.0, 0.0, 0.0], [-0.5, 0.0, np.sqrt(3) / 2], [-0.5, 0.0, -np.sqrt(3) / 2]])
    obs = [observable_from_bloch(v) for v in blochs]
    phi = max_entangled(2)
    p = np.zeros((2, 2, 3, 3))
    for x, ax in enumerate(obs):
        for y, by in enumerate(obs):
            corr = np.trace(np.kron(ax, by) @ phi).real
            for a in (0, 1):
                for b in (0, 1):
                    p[a, b, x, y] = (1.0 + (-1.0) ** (a + b) * corr) / 4.0
    return p, obs


def visibility_sdp(
    p_targ: np.ndarray,
    spec: ImprecisionSpec,
    basis: MomentBasis,
    tol: float = 1e-8,
) -> float:
    """Critical visibility: max v such that v p + (1-v)/4 admits an
    imprecision-constrained LHS model (per-strategy moment matrices)."""
    n_a, n_b, n_x, n_y = p_targ.shape
    if (n_a, n_b) != (2, 2):
        raise ValueError("visibility SDP expects binary outcomes")
    if basis.monomials.exact_axes != spec_exact_axes(spec, n_y):
        basis = build_basis(
            witness_monomials(n_y, level=1, exact_axes=spec_exact_axes(spec, n_y)),
            basis.targets,
            seed=basis.seed,
        )
    m = basis.size
    n_lam = 1 << n_x
    n_var = n_lam * m + 1  # branch coefficients plus v
    v_idx = n_lam * m

    weight = basis.weight_rows()
    srow = {y: _lab_diff_rows(basis, ("s",), y) for y in range(n_y)}

    eq_rows, eq_rhs = [], []
    for x in range(n_x):
        for y in range(n_y):
            for a in (0, 1):
                for b in (0, 1):
                    row = np.zeros(n_var)
                    for lam in range(n_lam):
                        if (lam >> x) & 1 != a:
                            continue
                        seg = slice(lam * m, (lam + 1) * m)
                        row[seg] += 0.5 * (weight + ((-1.0) ** b) * srow[y])
                    row[v_idx] = -(p_targ[a, b, x, y] - 0.25)
                    eq_rows.append(row)
                    eq_rhs.append(0.25)
    norm_row = np.zeros(n_var)
    for lam in range(n_lam):
        norm_row[lam * m : (lam + 1) * m] = weight
    eq_rows.append(norm_row)
    eq_rhs.append(1.0)

    ineq_rows, ineq_rhs = [], []
    fid_ineq, fid_eq = _fidelity_constraints(basis, spec, weight)
    for lam in range(n_lam):
        seg = slice(lam * m, (lam + 1) * m)
        for frow in fid_ineq:
            row = np.zeros(n_var)
            row[seg] = frow
            ineq_rows.append(row)
            ineq_rhs.append(0.0)
        for frow in fid_eq:
            row = np.zeros(n_var)
            row[seg] = frow
            eq_rows.append(row)
            eq_rhs.append(0.0)
    a_eq, b_eq = _independent_rows(np.array(eq_rows), np.array(eq_rhs))
    for sign, rhs in ((1.0, 1.0), (-1.0, 0.0)):
        row = np.zeros(n_var)
        row[v_idx] = sign
        ineq_rows.append(row)
        ineq_rhs.append(rhs)

    blocks = []
    psd = basis.psd_coeffs()
    zero = np.zeros(psd[0].shape, dtype=complex)
    for lam in range(n_lam):
        coeffs = [zero] * (lam * m) + psd + [zero] * ((n_lam - 1 - lam) * m) + [zero]
        blocks.append(SdpBlock(const=zero, coeffs=coeffs))

    obj = np.zeros(n_var)
    obj[v_idx] = 1.0
    prob = SdpProblem(
        blocks=blocks,
        objective=obj,
        eq=(a_eq, b_eq),
        ineq=(np.array(ineq_rows), np.array(ineq_rhs)),
    )
    sol = sdp_solve(prob, tol=tol)
    if sol.status != "optimal":
        raise NumericalFailure(f"visibility SDP failed: {sol.status}")
    return sol.objective


def visibility_assemblage_exact(alice_obs: list[np.ndarray]) -> float:
    """Ideal-measurement steering visibility of phi+ under the given Alice
    observables, via the standard LHS-decomposition SDP (the no-moment oracle)."""
    n_x = len(alice_obs)
    n_lam = 1 << n_x
    d = 2
    phi = max_entangled(d)
    iso_pure = {}
    iso_noise = {}
    from .quantum import assemblage_from

    asm_pure = assemblage_from(phi, alice_obs)
    asm_noise = assemblage_from(np.eye(4, dtype=complex) / 4, alice_obs)
    for key in asm_pure.members:
        iso_pure[key] = asm_pure.members[key]
        iso_noise[key] = asm_noise.members[key]

    hvars = [HermitianVar(d, k * d * d) for k in range(n_lam)]
    n_var = n_lam * d * d + 1
    v_idx = n_lam * d * d

    eq_rows, eq_rhs = [], []
    basis_units = hvars[0].basis
    for x in range(n_x):
        for a in (0, 1):
            for unit in basis_units:
                row = np.zeros(n_var)
                for lam in range(n_lam):
                    if (lam >> x) & 1 == a:
                        row[lam * d * d : (lam + 1) * d * d] += [
                            np.trace(unit @ bb).real for bb in basis_units
                        ]
                target = iso_pure[(a, x)] - iso_noise[(a, x)]
                row[v_idx] = -np.trace(unit @ target).real
                eq_rows.append(row)
                eq_rhs.append(np.trace(unit @ iso_noise[(a, x)]).real)
    a_eq, b_eq = _independent_rows(np.array(eq_rows), np.array(eq_rhs))

    blocks = []
    for lam in range(n_lam):
        coeffs = hvars[lam].coeff_columns(n_var)
        blocks.append(SdpBlock(const=np.zeros((d, d), dtype=complex), coeffs=coeffs))
    ineq_rows = np.zeros((2, n_var))
    ineq_rows[0, v_idx] = 1.0
    ineq_rows[1, v_idx] = -1.0
    obj = np.zeros(n_var)
    obj[v_idx] = 1.0
    prob = SdpProblem(blocks=blocks, objective=obj, eq=(a_eq, b_eq), ineq=(ineq_rows, np.array([1.0, 0.0])))
    sol = sdp_solve(prob, tol=1e-9)
    if sol.status != "optimal":
        raise NumericalFailure(f"assemblage visibility SDP failed: {sol.status}")
    return sol.objective


def visibility_plateau(
    p_targ: np.ndarray,
    basis: MomentBasis,
    v_ideal: float,
    tol: float = 1e-5,
    hi: float = 0.06,
    slack: float = 1e-4,
) -> float:
    """Largest shared eps with critical visibility still at the ideal value."""

    def exceeds(eps: float) -> bool:
        v = visibility_sdp(p_targ, ImprecisionSpec.uniform(eps, 3), basis)
        return v > v_ideal + slack

    if not exceeds(hi):
        raise NumericalFailure(f"visibility stays at the ideal value below eps = {hi}")
    lo, fhi = 0.0, hi
    while fhi - lo > tol:
        mid = 0.5 * (lo + fhi)
        if exceeds(mid):
            fhi = mid
        else:
            lo = mid
    return lo


# ---------------------------------------------------------------------------
# guessing probability and randomness


def _guess_patterns(n_x: int) -> list[tuple[int, ...]]:
    return [tuple((lam >> x) & 1 for x in range(n_x)) for lam in range(1 << n_x)]


def guessing_probability_exact(w: Witness, observed: float, tol: float = 1e-9) -> tuple[float, float]:
    """Eavesdropper guessing probability at ideal measurements (assemblage SDP).

    One sub-assemblage per deterministic guess pattern; the observed witness
    value enters as an equality on the convex combination.
    """
    if w.full_correlation is None:
        raise ValueError("guessing probability needs a full-correlation witness")
    n_x, n_y = w.n_x, w.n_y
    d = w.dim
    patterns = _guess_patterns(n_x)
    per_branch = (n_x + 1) * d * d  # sigma_{0|x} for each x, then the marginal
    n_var = len(patterns) * per_branch

    units = hermitian_units = HermitianVar(d, 0).basis
    blocks = []
    zero = np.zeros((d, d), dtype=complex)

    def var(lam: int, slot: int) -> HermitianVar:
        return HermitianVar(d, lam * per_branch + slot * d * d)

    for lam in range(len(patterns)):
        for x in range(n_x):
            sig = var(lam, x)
            blocks.append(SdpBlock(const=zero, coeffs=sig.coeff_columns(n_var)))
            rho = var(lam, n_x)
            diff = [rc - sc for rc, sc in zip(rho.coeff_columns(n_var), sig.coeff_columns(n_var))]
            blocks.append(SdpBlock(const=zero, coeffs=diff))

    norm_row = np.zeros(n_var)
    wit_row = np.zeros(n_var)
    obj = np.zeros(n_var)
    eye = np.eye(d, dtype=complex)
    for lam, pattern in enumerate(patterns):
        rho = var(lam, n_x)
        norm_row += rho.linear_row(eye, n_var)
        for x in range(n_x):
            sig = var(lam, x)
            for y in range(n_y):
                c = w.full_correlation[x, y]
                if c != 0.0:
                    wit_row += 2.0 * c * sig.linear_row(w.targets[y], n_var)
                    wit_row -= c * rho.linear_row(w.targets[y], n_var)
            if pattern[x] == 0:
                obj += sig.linear_row(eye, n_var) / n_x
            else:
                obj += (rho.linear_row(eye, n_var) - sig.linear_row(eye, n_var)) / n_x

    a_eq = np.vstack([norm_row, wit_row])
    # At the extreme quantum value the feasible set degenerates to a point;
    # stepping inward keeps the program solvable and only raises Pg (sound).
    for shift in (0.0, 1e-9, 1e-7):
        prob = SdpProblem(blocks=blocks, objective=obj, eq=(a_eq, np.array([1.0, observed - shift])))
        sol = sdp_solve(prob, tol=tol)
        if sol.status == "infeasible":
            return 0.0, np.inf
        if sol.status == "optimal":
            pg = min(1.0, sol.objective)
            return pg, -np.log2(pg)
    raise NumericalFailure(f"guessing SDP failed: {sol.status}")


def _branch_h_sdp(
    w: Witness,
    pattern: tuple[int, ...],
    tau: float,
    spec: ImprecisionSpec,
    basis: MomentBasis,
    tol: float = 1e-9,
) -> float:
    """max (guess + tau * witness) over one unit-weight branch moment matrix."""
    m = basis.size
    n_x, n_y = w.n_x, w.n_y
    weight = basis.weight_rows()
    obj = np.zeros(m)
    for x in range(n_x):
        obj += basis.rows(("1",), (f"sig{pattern[x]}{x}",)) / n_x
    for x in range(n_x):
        for y in range(n_y):
            c = w.full_correlation[x, y]
            if c != 0.0:
                for a in (0, 1):
                    sgn_a = 1.0 if a == 0 else -1.0
                    obj += tau * c * sgn_a * _lab_diff_rows(basis, (f"sig{a}{x}",), y)
    fid_ineq, fid_eq = _fidelity_constraints(basis, spec, weight)
    a_eq, b_eq = _independent_rows(
        np.array([weight] + fid_eq), np.array([1.0] + [0.0] * len(fid_eq))
    )
    blocks = [SdpBlock(const=np.zeros(basis.psd_coeffs()[0].shape, dtype=complex), coeffs=basis.psd_coeffs())]
    for loc in basis.localizing_coeffs():
        blocks.append(SdpBlock(const=np.zeros(loc[0].shape, dtype=complex), coeffs=loc))
    prob = SdpProblem(
        blocks=blocks,
        objective=obj,
        eq=(a_eq, b_eq),
        ineq=(np.array(fid_ineq), np.zeros(len(fid_ineq))) if fid_ineq else None,
        primal_start=basis.interior_coords(spec),
    )
    sol = sdp_solve(prob, tol=tol)
    if sol.status != "optimal":
        raise NumericalFailure(f"branch SDP failed (pattern={pattern}, tau={tau}): {sol.status}")
    return sol.objective


DEFAULT_TAU_GRID = tuple(
    np.concatenate(
        [
            np.linspace(0.0, 2.0, 41),
            np.geomspace(2.2, 110.0, 18),
        ]
    )
)


@dataclass
class GuessingEnvelope:
    """Supporting lines Pg <= H(tau) - tau W, one per tau; min over the grid
    is a certified upper bound on the guessing probability at witness value W."""

    taus: np.ndarray
    h_values: np.ndarray
    meta: dict = field(default_factory=dict)

    def pg(self, observed: float) -> float:
        return float(np.min(self.h_values - self.taus * observed))


def guessing_envelope(
    w: Witness,
    spec: ImprecisionSpec,
    basis: MomentBasis,
    taus=DEFAULT_TAU_GRID,
) -> GuessingEnvelope:
    patterns = _guess_patterns(w.n_x)
    taus = np.asarray(taus, dtype=float)
    h = np.empty(len(taus))
    for k, tau in enumerate(taus):
        h[k] = max(_branch_h_sdp(w, p, tau, spec, basis) for p in patterns)
    return GuessingEnvelope(taus=taus, h_values=h, meta={"side": basis.side, "n_basis": basis.size})


def guessing_probability(
    w: Witness,
    observed: float,
    spec: ImprecisionSpec,
    basis: MomentBasis | None = None,
    envelope: GuessingEnvelope | None = None,
) -> tuple[float, float]:
    """(P_g, R = -log2 P_g) at the observed witness value.

    Ideal measurements use the exact assemblage program; imprecise ones use
    the moment-matrix branch relaxation (upper bound on P_g, so R is a
    certified lower bound on the randomness).
    """
    eps_vec = spec.axis_vector() if spec.eps else np.zeros(w.n_y)
    beta_eps = 1.0  # plateau region: bound equals the ideal LHS bound
    if np.all(eps_vec == 0.0):
        pg, r = guessing_probability_exact(w, observed)
        return pg, r
    if envelope is None:
        if basis is None:
            raise ValueError("imprecise guessing needs a moment basis or an envelope")
        envelope = guessing_envelope(w, spec, basis)
    pg = min(1.0, envelope.pg(observed))
    if pg <= 0.0:
        raise NumericalFailure("envelope returned a nonpositive guessing probability")
    return pg, -np.log2(pg)
