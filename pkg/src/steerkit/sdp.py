"""Dense semidefinite programming layer.

Problems are stated over a real variable vector s of length m:

    maximize    objective . s
    subject to  const_k + sum_i s_i coeff_ik  >=  0   (PSD, one per block)
                A_eq s  = b_eq
                A_in s <= b_in

Blocks may be complex Hermitian; they are embedded as real symmetric
blocks [[Re, -Im], [Im, Re]] before being handed to the interior-point
solver (cvxopt conelp, dense primal-dual).  Problem sizes here stay small
(a few hundred variables, blocks below ~300), so dense factorization is
the right tool.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix as _cvxmat
from cvxopt import solvers as _cvxsolvers

from .linalg import NumericalFailure, require_hermitian

DEFAULT_TOL = 1e-8

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_FAILURE = "numerical-failure"


@dataclass
class SdpBlock:
    """One PSD constraint: const + sum_i s_i coeffs[i] >= 0."""

    const: np.ndarray
    coeffs: list[np.ndarray]

    @property
    def side(self) -> int:
        return self.const.shape[0]

    def validate(self, m: int) -> None:
        require_hermitian(self.const, atol=1e-10, what="block constant")
        if len(self.coeffs) != m:
            raise ValueError(f"block has {len(self.coeffs)} coefficient matrices, expected {m}")
        for c in self.coeffs:
            if c.shape != self.const.shape:
                raise ValueError("coefficient block shape mismatch")


@dataclass
class SdpProblem:
    blocks: list[SdpBlock]
    objective: np.ndarray
    eq: tuple[np.ndarray, np.ndarray] | None = None
    ineq: tuple[np.ndarray, np.ndarray] | None = None
    primal_start: np.ndarray | None = None  # strictly feasible variable guess

    @property
    def m(self) -> int:
        return len(self.objective)

    def validate(self) -> None:
        if self.m < 1:
            raise ValueError("need at least one variable")
        if not self.blocks:
            raise ValueError("need at least one PSD block")
        for b in self.blocks:
            b.validate(self.m)


@dataclass
class SdpSolution:
    status: str
    objective: float = np.nan
    variables: np.ndarray | None = None
    gap: float = np.nan
    info: dict = field(default_factory=dict)


def _embed_real(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding of a Hermitian matrix (PSD iff original is)."""
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def _feasible_start(problem, G, h, n_l, sides, a_eq, b_eq):
    """cvxopt primalstart from problem.primal_start, or None if not strict."""
    x0 = problem.primal_start
    if x0 is None:
        return None
    x0 = np.asarray(x0, dtype=float).copy()
    if a_eq is not None and len(b_eq):
        resid = a_eq @ x0 - b_eq
        if np.abs(resid).max() > 0:
            x0 -= np.linalg.lstsq(a_eq, resid, rcond=None)[0]
        if np.abs(a_eq @ x0 - b_eq).max() > 1e-11:
            return None
    s0 = h - G @ x0
    if n_l and s0[:n_l].min() <= 1e-12:
        return None
    offset = n_l
    for side in sides:
        block = s0[offset : offset + side * side].reshape(side, side, order="F")
        lam = np.linalg.eigvalsh((block + block.T) / 2)[0]
        if lam <= 1e-12:
            return None
        offset += side * side
    return {"x": _cvxmat(x0), "s": _cvxmat(s0)}


def _block_matrices(block: SdpBlock) -> tuple[np.ndarray, list[np.ndarray]]:
    mats = [block.const] + list(block.coeffs)
    if any(np.abs(m.imag).max() > 0 for m in mats):
        mats = [_embed_real(m) for m in mats]
    else:
        mats = [m.real for m in mats]
    return mats[0], mats[1:]


def sdp_solve(problem: SdpProblem, tol: float = DEFAULT_TOL) -> SdpSolution:
    """Solve the SDP; reported objective of a maximization within tol at optimum."""
    problem.validate()
    m = problem.m

    n_l = 0
    g_rows: list[np.ndarray] = []
    h_rows: list[np.ndarray] = []
    if problem.ineq is not None:
        a_in, b_in = problem.ineq
        a_in = np.atleast_2d(np.asarray(a_in, dtype=float))
        b_in = np.atleast_1d(np.asarray(b_in, dtype=float))
        n_l = a_in.shape[0]
        g_rows.append(a_in)
        h_rows.append(b_in)

    sides = []
    for block in problem.blocks:
        const, coeffs = _block_matrices(block)
        side = const.shape[0]
        sides.append(side)
        cols = np.empty((side * side, m))
        for i, c in enumerate(coeffs):
            cols[:, i] = -c.reshape(-1, order="F")
        g_rows.append(cols)
        h_rows.append(const.reshape(-1, order="F"))

    G = np.vstack(g_rows)
    h = np.concatenate(h_rows)
    c = -np.asarray(problem.objective, dtype=float)

    dims = {"l": n_l, "q": [], "s": sides}
    args = [_cvxmat(c), _cvxmat(G), _cvxmat(h), dims]
    a_eq = b_eq = None
    if problem.eq is not None:
        a_eq, b_eq = problem.eq
        a_eq = np.atleast_2d(np.asarray(a_eq, dtype=float))
        b_eq = np.atleast_1d(np.asarray(b_eq, dtype=float))
        args += [_cvxmat(a_eq), _cvxmat(b_eq)]

    kwargs = {}
    start = _feasible_start(problem, G, h, n_l, sides, a_eq, b_eq)
    if start is not None:
        kwargs["primalstart"] = start

    # Tolerance ladder: the tightest feasibility tolerance is not always
    # attainable on thin feasible regions; iterating past the attainable
    # accuracy makes the iterates diverge, so stop earlier and retry looser.
    base = {"show_progress": False, "abstol": 0.1 * tol, "reltol": 0.1 * tol}
    ladder = [
        {**base, "feastol": min(1e-9, tol), "maxiters": 60},
        {**base, "feastol": 1e-8, "maxiters": 60},
        {**base, "feastol": 1e-7, "abstol": tol, "reltol": tol, "maxiters": 100},
    ]
    sol = None
    info: dict = {}
    for opts in ladder:
        for kw in ([kwargs, {}] if kwargs else [{}]):
            try:
                cand = _cvxsolvers.conelp(*args, options=opts, **kw)
            except (ValueError, ZeroDivisionError, ArithmeticError) as exc:
                info = {"error": str(exc)}
                continue
            status = cand["status"]
            cinfo = {
                k: cand.get(k)
                for k in ("gap", "relative gap", "primal infeasibility", "dual infeasibility")
            }
            if status == "primal infeasible":
                return SdpSolution(status=STATUS_INFEASIBLE, info=cinfo)
            if status == "dual infeasible":
                return SdpSolution(status=STATUS_FAILURE, info={"unbounded": True, **cinfo})
            ok = status == "optimal"
            if status == "unknown" and cand["x"] is not None:
                gap = cand.get("gap") or np.inf
                pres = cand.get("primal infeasibility") or np.inf
                ok = gap <= tol and pres <= 10 * tol
            if ok and cand["x"] is not None:
                sol = cand
                info = cinfo
                break
            info = cinfo
        if sol is not None:
            break
    if sol is None:
        return SdpSolution(status=STATUS_FAILURE, info=info)

    x = np.array(sol["x"]).ravel()
    # Contract check: every PSD block stays above -tol at the returned point.
    for block in problem.blocks:
        total = block.const + sum(xi * ci for xi, ci in zip(x, block.coeffs))
        lam = float(np.linalg.eigvalsh((total + total.conj().T) / 2)[0])
        if lam < -10 * tol:
            return SdpSolution(status=STATUS_FAILURE, variables=x, info={"min_eig": lam, **info})

    return SdpSolution(
        status=STATUS_OPTIMAL,
        objective=float(np.dot(problem.objective, x)),
        variables=x,
        gap=float(sol.get("gap") or 0.0),
        info=info,
    )


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Real basis of d x d Hermitian matrices (diagonal, then re/im off-diagonal)."""
    basis: list[np.ndarray] = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = 1.0
            basis.append(e)
            f = np.zeros((d, d), dtype=complex)
            f[i, j] = -1j
            f[j, i] = 1j
            basis.append(f)
    return basis


class HermitianVar:
    """Helper bundling a Hermitian matrix variable expressed over hermitian_basis."""

    def __init__(self, d: int, offset: int):
        self.d = d
        self.offset = offset
        self.basis = hermitian_basis(d)
        self.size = len(self.basis)

    def coeff_columns(self, m: int) -> list[np.ndarray]:
        """Coefficient matrices of this variable inside a length-m variable vector."""
        cols = [np.zeros((self.d, self.d), dtype=complex) for _ in range(m)]
        for k, b in enumerate(self.basis):
            cols[self.offset + k] = b
        return cols

    def linear_row(self, op: np.ndarray, m: int) -> np.ndarray:
        """Row r with r.s = tr(op @ X) for X the matrix variable."""
        row = np.zeros(m)
        for k, b in enumerate(self.basis):
            row[self.offset + k] = np.trace(op @ b).real
        return row

    def value(self, s: np.ndarray) -> np.ndarray:
        x = np.zeros((self.d, self.d), dtype=complex)
        for k, b in enumerate(self.basis):
            x += s[self.offset + k] * b
        return x


__all__ = [
    "SdpBlock",
    "SdpProblem",
    "SdpSolution",
    "sdp_solve",
    "hermitian_basis",
    "HermitianVar",
    "NumericalFailure",
    "DEFAULT_TOL",
    "STATUS_OPTIMAL",
    "STATUS_INFEASIBLE",
    "STATUS_FAILURE",
]
