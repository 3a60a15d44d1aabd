"""Imprecision-plateau analysis along four routes.

For a strategy class with reduced expression sum_y t_y <B_y>, the value under
fidelity-constrained lab measurements is bounded by

    closed form   exact for three symmetric qubit cones,
                  f(eps) = (sqrt3/2)(1 + 2 sqrt(2 eps (1-eps)) - 2 eps);
    lemma         observable-level operator bound
                  <B_eps> <= (1+mu)<B_targ> + sqrt(mu^2 + 4 r eps (1+mu)),
                  minimized over mu >= -1 per coordinate;
    grid oracle   brute-force maximum over Bloch cones, via the support
                  function max_w sum_y t_y cos(max(0, angle(u_y, w) - theta_y));
    seesaw        alternating state / lab-measurement ascent (lower bound).

The plateau length along any sweep is the largest eps keeping the bound at
the ideal-measurement value beta_0 (within 1e-9), found by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .linalg import NumericalFailure, eig_max
from .quantum import ImprecisionSpec, bloch_of
from .sdp import HermitianVar, SdpBlock, SdpProblem, sdp_solve
from .witness import StrategyClass, Witness, enumerate_strategies

SQRT3 = np.sqrt(3.0)

F_EPS_DOMAIN_MAX = (3.0 - SQRT3) / 6.0


# ---------------------------------------------------------------------------
# closed forms


def f_eps(eps: float) -> float:
    """Three-cone bound (sqrt3/2)(1 + 2 sqrt(2 eps (1 - eps)) - 2 eps)."""
    if not 0.0 <= eps <= F_EPS_DOMAIN_MAX + 1e-15:
        raise ValueError(f"eps = {eps} outside [0, {F_EPS_DOMAIN_MAX}]")
    return 0.5 * SQRT3 * (1.0 + 2.0 * np.sqrt(2.0 * eps * (1.0 - eps)) - 2.0 * eps)


def epsilon_star_esi() -> float:
    """Plateau length of the four-input Pauli-target witness, in closed form."""
    value = 0.5 - 1.0 / (3.0 * SQRT3) - np.sqrt(5.0 / 6.0) / 3.0
    alt = (9.0 - 2.0 * SQRT3 - np.sqrt(30.0)) / 18.0
    assert abs(value - alt) < 1e-15
    assert abs(f_eps(value) - 1.0) < 1e-12
    return value


def anticommutator_plateau() -> float:
    """Plateau length 1/3 under the anticommutator-norm quantifier."""
    f = lambda e: np.sqrt(3.0 * (1.0 + e)) / 2.0
    star = 1.0 / 3.0
    assert abs(f(star) - 1.0) < 1e-12
    return star


def pauli_bound(eps: float) -> float:
    """Fidelity-constrained LHS bound of the three-input Pauli witness."""
    return 1.0 + 2.0 * np.sqrt(2.0 * eps * (1.0 - eps)) - 2.0 * eps


def f_tilde_n4(eps: float) -> float:
    """Tight bound for the three-observable class of the n=4 witness (rank-2 targets)."""
    if not 0.0 <= eps <= 0.5:
        raise ValueError("eps outside [0, 1/2]")
    return 0.5 * SQRT3 + np.sqrt(6.0) * np.sqrt(2.0 * eps * (1.0 - 2.0 * eps)) - 2.0 * SQRT3 * eps


def plateau_n4() -> float:
    """Per-qubit threshold for the n=4 witness: root of f_tilde(2 eps~) = 1.

    The closed form is (9 - 2 sqrt3 - sqrt30)/72 (approx 8.15e-4).  Note
    N4_NOTES: naive removal of the inner square root gives a different
    printed expression that does not solve the defining equation.
    """
    star = (9.0 - 2.0 * SQRT3 - np.sqrt(30.0)) / 72.0
    assert abs(f_tilde_n4(2.0 * star) - 1.0) < 1e-12
    return star


N4_NOTES = {
    "defining_equation": "f_tilde(2*eps_tilde) = 1",
    "closed_form": "(9 - 2*sqrt(3) - sqrt(30)) / 72",
    "inconsistent_variant": "(9 - 2*sqrt(3) - sqrt(3)) / 32",
    "note": "the variant expression evaluates to ~0.118 and does not solve the "
    "defining equation; the implementation uses the root of f_tilde = 1",
}


# ---------------------------------------------------------------------------
# generic 1-D searches


def golden_section(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200):
    """Minimize a unimodal function on [lo, hi]; returns (x, f(x))."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def bisect_root(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise NumericalFailure(f"root not bracketed on [{lo}, {hi}]: f = ({flo}, {fhi})")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0 or hi - lo < tol:
            return mid
        if flo * fmid < 0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def plateau_length(bound_fn, beta0: float, hi: float = 0.05, tol: float = 1e-10) -> float:
    """Largest eps with bound(eps) <= beta0 + 1e-9, bracketed on [0, hi]."""
    slack = 1e-9
    if bound_fn(hi) <= beta0 + slack:
        raise NumericalFailure(f"bound does not exceed beta0 below eps = {hi}")
    lo, fhi = 0.0, hi
    for _ in range(200):
        mid = 0.5 * (lo + fhi)
        if bound_fn(mid) <= beta0 + slack:
            lo = mid
        else:
            fhi = mid
        if fhi - lo < tol:
            break
    return lo


# ---------------------------------------------------------------------------
# lemma route


def lemma_operator_bound(eps_by: float, mu: float, r: int = 1) -> tuple[float, float]:
    """POVM-element operator bound: B <= scale * B_targ + shift * 1.

    scale = 1 + mu, shift = (sqrt(mu^2 + 4 r eps (1 + mu)) - mu) / 2.
    """
    if mu < -1.0:
        raise ValueError("mu must be >= -1")
    if not 0.0 <= eps_by <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    shift = 0.5 * (np.sqrt(mu * mu + 4.0 * r * eps_by * (1.0 + mu)) - mu)
    return 1.0 + mu, shift


def _lemma_value(t: np.ndarray, mus: np.ndarray, eps: np.ndarray, r: int, blochs, targets) -> float:
    """Observable-level lemma bound at fixed per-measurement mu."""
    scaled = t * (1.0 + mus)
    if blochs is not None:
        lead = float(np.linalg.norm(scaled @ blochs))
    else:
        op = sum(c * targ for c, targ in zip(scaled, targets))
        lead = eig_max(op)[0]
    pen = np.sqrt(mus * mus + 4.0 * r * eps * (1.0 + mus))
    return lead + float(np.abs(t) @ pen)


def lemma_strategy_bound(
    cls: StrategyClass | np.ndarray,
    spec: ImprecisionSpec,
    targets: list[np.ndarray],
    shared_mu: bool = False,
    tol: float = 1e-12,
) -> float:
    """Upper bound on a strategy class value, minimized over mu by coordinate descent."""
    t = cls.t_vector if isinstance(cls, StrategyClass) else np.asarray(cls, dtype=float)
    n_y = len(t)
    eps = np.array([spec.axis_eps(y) for y in range(n_y)])
    d = targets[0].shape[0]
    r = max(1, d // 2)
    blochs = np.array([bloch_of(targ) for targ in targets]) if d == 2 else None

    if not np.any(np.abs(t) > 1e-15):
        return 0.0

    if shared_mu:
        fn = lambda mu: _lemma_value(t, np.full(n_y, mu), eps, r, blochs, targets)
        _, val = golden_section(fn, -1.0, 2.0, tol=tol)
        return val

    mus = np.zeros(n_y)
    best = _lemma_value(t, mus, eps, r, blochs, targets)
    for _ in range(60):
        improved = 0.0
        for y in range(n_y):
            if abs(t[y]) < 1e-15:
                continue

            def fn(mu, y=y):
                trial = mus.copy()
                trial[y] = mu
                return _lemma_value(t, trial, eps, r, blochs, targets)

            mu_y, val = golden_section(fn, -1.0, 2.0, tol=tol)
            if val < best - 1e-16:
                improved += best - val
                best = val
                mus[y] = mu_y
        if improved < 1e-14:
            break
    return best


def lemma_witness_bound(w: Witness, spec: ImprecisionSpec, shared_mu: bool = False) -> float:
    """Fidelity-constrained LHS bound: max over strategy classes of the lemma bound."""
    classes = enumerate_strategies(w)
    return max(lemma_strategy_bound(c, spec, w.targets, shared_mu=shared_mu) for c in classes)


# ---------------------------------------------------------------------------
# grid oracle


def cone_support_value(blochs: np.ndarray, weights: np.ndarray, cone_cos: np.ndarray, w: np.ndarray) -> float:
    """sum_y weight_y * max over the cone around bloch_y of (b . w)."""
    w = w / np.linalg.norm(w)
    ang = np.arccos(np.clip(blochs @ w, -1.0, 1.0))
    theta_c = np.arccos(np.clip(cone_cos, -1.0, 1.0))
    return float(weights @ np.cos(np.maximum(0.0, ang - theta_c)))


def grid_oracle_cones(
    blochs: np.ndarray,
    weights: np.ndarray,
    cone_cos: np.ndarray,
    resolution: int = 2001,
    theta_range=(0.0, np.pi),
    phi_range=(0.0, 2.0 * np.pi),
) -> float:
    """Brute-force maximum of sum_y weight_y <B_y> over per-measurement Bloch cones.

    The inner lab optimization is solved in closed form on each cone, leaving a
    two-angle search over the common alignment direction, gridded and then
    polished with a derivative-free local pass.
    """
    thetas = np.linspace(theta_range[0], theta_range[1], resolution)
    phis = np.linspace(phi_range[0], phi_range[1], resolution)
    tg, pg = np.meshgrid(thetas, phis, indexing="ij")
    ws = np.stack(
        [np.sin(tg) * np.cos(pg), np.sin(tg) * np.sin(pg), np.cos(tg)], axis=-1
    ).reshape(-1, 3)
    ang = np.arccos(np.clip(ws @ blochs.T, -1.0, 1.0))
    theta_c = np.arccos(np.clip(cone_cos, -1.0, 1.0))
    vals = np.cos(np.maximum(0.0, ang - theta_c[None, :])) @ weights
    k = int(np.argmax(vals))
    t0, p0 = tg.reshape(-1)[k], pg.reshape(-1)[k]

    def neg(x):
        t, p = x
        w = np.array([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)])
        return -cone_support_value(blochs, weights, cone_cos, w)

    best = -neg((t0, p0))
    x = np.array([t0, p0])
    for _ in range(2):
        res = minimize(neg, x, method="Nelder-Mead", options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 4000})
        x = res.x
        best = max(best, -res.fun)
    return best


def grid_oracle_class2(spec: ImprecisionSpec, resolution: int = 2001) -> float:
    """Oracle for the three-Pauli-target class (B1 + B2 + B3)/2 under per-axis cones."""
    eps = np.array([spec.axis_eps(y) for y in range(3)])
    blochs = np.eye(3)
    cone_cos = 1.0 - 2.0 * eps
    return grid_oracle_cones(
        blochs,
        np.full(3, 0.5),
        cone_cos,
        resolution=resolution,
        theta_range=(0.0, np.pi / 2),
        phi_range=(0.0, np.pi / 2),
    )


# ---------------------------------------------------------------------------
# Taylor approximation


def taylor_plateau(eps_x: float, eps_y: float) -> float:
    """First-order approximation of the plateau length in eps_z at fixed (eps_x, eps_y).

    Uses the expansion of the cone-edge parametrization around the target
    directions; valid for small imprecision (inputs capped at 0.01).
    """
    if not (0.0 <= eps_x <= 0.01 and 0.0 <= eps_y <= 0.01):
        raise ValueError("taylor_plateau expects eps_x, eps_y in [0, 0.01]")
    ax, ay = 1.0 - 2.0 * eps_x, 1.0 - 2.0 * eps_y
    sz = (1.0 + np.sqrt(eps_x / 2.0) - np.sqrt(eps_y / 2.0)) / np.sqrt(2.0)
    cz = np.sqrt(1.0 - sz * sz)
    cos_tx = np.sqrt(eps_x * (2.0 - eps_x))
    cos_ty = np.sqrt(eps_y * (2.0 - eps_y))
    rx = np.sqrt(eps_x * (2.0 - 3.0 * eps_x))
    ry = np.sqrt(eps_y * (2.0 - 3.0 * eps_y))
    e1 = ax * cz + ay * sz + ry * cz + rx * sz
    e2 = 1.0 - 2.0 * (ax * ry + ay * rx + cos_tx * cos_ty)
    k = cos_tx + cos_ty
    d1 = k * k + e1 * e1
    d2 = k * e2
    d3 = e2 * e2 - 4.0 * e1 * e1
    disc = d2 * d2 - d1 * d3
    if disc < 0.0:
        raise NumericalFailure(f"negative discriminant {disc} in plateau expansion")
    az = (d2 + np.sqrt(disc)) / (2.0 * d1)
    return 0.5 * (1.0 - az)


# ---------------------------------------------------------------------------
# seesaw (heuristic lower bounds)


def _cone_project(direction: np.ndarray, axis: np.ndarray, cone_cos: float) -> np.ndarray:
    """Unit vector maximizing b . direction subject to b . axis >= cone_cos."""
    nd = np.linalg.norm(direction)
    if nd < 1e-300:
        return axis.copy()
    d = direction / nd
    if d @ axis >= cone_cos - 1e-15:
        return d
    perp = d - (d @ axis) * axis
    np_ = np.linalg.norm(perp)
    if np_ < 1e-14:
        # direction (anti)parallel to the axis: any edge point is optimal
        seed = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        perp = seed - (seed @ axis) * axis
        np_ = np.linalg.norm(perp)
    perp /= np_
    sin_c = np.sqrt(max(0.0, 1.0 - cone_cos * cone_cos))
    return cone_cos * axis + sin_c * perp


def seesaw_class_qubit(
    t: np.ndarray,
    target_blochs: np.ndarray,
    eps: np.ndarray,
    restarts: int = 32,
    seed: int = 7,
    stall: float = 1e-10,
) -> float:
    """Alternating ascent of sum_y t_y <B_y> over (state, cone-constrained labs)."""
    rng = np.random.default_rng(seed)
    axes = np.array([np.sign(ty) if ty != 0 else 1.0 for ty in t])[:, None] * target_blochs
    tt = np.abs(t)
    cone_cos = 1.0 - 2.0 * eps
    best = -np.inf
    for trial in range(restarts):
        if trial == 0:
            labs = axes.copy()
        else:
            labs = np.array(
                [_cone_project(ax + 0.3 * rng.standard_normal(3), ax, cc) for ax, cc in zip(axes, cone_cos)]
            )
        prev = -np.inf
        for _ in range(500):
            total = tt @ labs
            val = float(np.linalg.norm(total))
            if val - prev < stall:
                break
            prev = val
            psi = total / (np.linalg.norm(total) + 1e-300)
            labs = np.array([_cone_project(psi, ax, cc) for ax, cc in zip(axes, cone_cos)])
        best = max(best, prev)
    return best


def _split_observable(m: np.ndarray) -> np.ndarray:
    """Traceless projective observable maximizing tr(B m): +1 on the top half
    of m's eigenbasis, -1 on the bottom half."""
    d = m.shape[0]
    _, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    top = vecs[:, d // 2 :]
    bot = vecs[:, : d // 2]
    return top @ top.conj().T - bot @ bot.conj().T


def _lab_step(g: np.ndarray, targ: np.ndarray, fid_min: float) -> np.ndarray:
    """Best lab observable for effective operator g on the fidelity cone.

    Scans the Lagrangian family B(lam) = split(g + lam targ); the fidelity
    tr(B targ) grows with lam, so the constrained optimum sits at the smallest
    lam whose split observable satisfies tr(B targ) >= fid_min.
    """
    fid = lambda b: np.trace(b @ targ).real
    b0 = _split_observable(g)
    if fid(b0) >= fid_min - 1e-13:
        return b0
    lo, hi = 0.0, 1.0
    scale = max(np.abs(g).max(), 1e-12)
    for _ in range(80):
        if fid(_split_observable(g + hi * scale * targ)) >= fid_min:
            break
        hi *= 2.0
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if fid(_split_observable(g + mid * scale * targ)) >= fid_min:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15:
            break
    return _split_observable(g + hi * scale * targ)


def seesaw_class_general(
    t: np.ndarray,
    targets: list[np.ndarray],
    eps: np.ndarray,
    restarts: int = 8,
    seed: int = 7,
    stall: float = 1e-10,
) -> float:
    """Seesaw over (state, fidelity-constrained projective labs) in any even dimension.

    The lab step picks the best traceless projective observable on the cone
    tr(B B_targ) >= d (1 - 2 eps) via the Lagrangian eigen-split family; the
    state step is a largest-eigenvalue problem.
    """
    rng = np.random.default_rng(seed)
    d = targets[0].shape[0]
    fid = d * (1.0 - 2.0 * eps)
    best = -np.inf
    for trial in range(restarts):
        if trial == 0:
            labs = [targ.copy() for targ in targets]
        else:
            labs = []
            for k, targ in enumerate(targets):
                h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                h = (h + h.conj().T) / 8
                labs.append(_lab_step(targ + h, targ, fid[k]))
        prev = -np.inf
        for _ in range(300):
            op = sum(ty * lab for ty, lab in zip(t, labs))
            val, psi = eig_max((op + op.conj().T) / 2)
            if val - prev < stall:
                break
            prev = val
            rho = np.outer(psi, psi.conj())
            labs = [
                _lab_step(ty * rho, targ, f) if abs(ty) > 1e-14 else lab
                for ty, targ, f, lab in zip(t, targets, fid, labs)
            ]
        best = max(best, prev)
    return best


def seesaw(w: Witness, spec: ImprecisionSpec, restarts: int = 32, seed: int = 7) -> float:
    """Heuristic lower bound on the imprecise-measurement LHS value of a witness."""
    classes = enumerate_strategies(w)
    eps = np.array([spec.axis_eps(y) for y in range(w.n_y)])
    best = 0.0
    blochs = w.target_blochs()
    for cls in classes:
        t = cls.t_vector
        nz = np.abs(t) > 1e-14
        if not np.any(nz):
            continue
        if cls.single_observable:
            best = max(best, float(np.abs(t).max()))
            continue
        if blochs is not None:
            val = seesaw_class_qubit(t, blochs, eps, restarts=restarts, seed=seed)
        else:
            val = seesaw_class_general(t, w.targets, eps, restarts=max(2, restarts // 4), seed=seed)
        best = max(best, val)
    return best


# ---------------------------------------------------------------------------
# results container


@dataclass
class PlateauResult:
    epsilon_star: float
    method: str
    curve: list[tuple[float, float, float, float]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def curve_rows(self):
        for ex, ey, ez, bound in self.curve:
            yield {"eps_x": ex, "eps_y": ey, "eps_z": ez, "bound": bound, "method": self.method}
