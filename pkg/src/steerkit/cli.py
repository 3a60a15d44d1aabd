"""Command-line front end.

Subcommands: lhs, plateau, robustness, randomness.  Every output artifact
embeds a header with the tool version, seed, tolerances, and method, and all
floats are printed with 12 significant digits, so identical seed and
configuration reproduce byte-identical files.

Exit codes: 0 success, 2 infeasible / no violation, 1 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .linalg import NumericalFailure
from .quantum import ImprecisionSpec
from . import plateau as P
from . import relax as R
from . import robustness as RB
from .witness import (
    enumerate_strategies,
    has_plateau,
    lhs_bound,
    make_witness,
    quantum_value,
    witness_from_json,
    witness_to_json,
)


class NoViolation(RuntimeError):
    pass


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _header(args, method: str) -> list[str]:
    keys = ("seed", "tol", "eps", "eps_x", "eps_y", "eps_z", "level", "n")
    parts = [f"version={__version__}", f"method={method}"]
    for k in keys:
        if getattr(args, k, None) is not None:
            parts.append(f"{k}={_fmt(getattr(args, k))}")
    return [f"# {p}" for p in parts]


def _write_rows(args, method: str, columns: list[str], rows: list[dict]):
    lines = _header(args, method)
    if args.format == "json":
        payload = {
            "meta": {line[2:] for line in lines},
            "columns": columns,
            "rows": [[row[c] for c in columns] for row in rows],
        }
        payload["meta"] = sorted(payload["meta"])
        text = json.dumps(payload, indent=2) + "\n"
    else:
        out = lines + [",".join(columns)]
        for row in rows:
            out.append(",".join(_fmt(row[c]) for c in columns))
        text = "\n".join(out) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_witness(args):
    name = args.witness
    if name.endswith(".json") or "/" in name:
        return witness_from_json(Path(name).read_text())
    return make_witness(name, n=getattr(args, "n", None))


def _spec_from_args(args, n_y: int) -> ImprecisionSpec:
    if getattr(args, "eps_x", None) is not None or getattr(args, "eps_y", None) is not None or getattr(args, "eps_z", None) is not None:
        axes = [args.eps_x or 0.0, args.eps_y or 0.0, args.eps_z or 0.0]
        return ImprecisionSpec.axes(axes[:n_y])
    return ImprecisionSpec.uniform(args.eps or 0.0, n_y)


def cmd_lhs(args) -> int:
    w = _load_witness(args)
    spec = _spec_from_args(args, w.n_y)
    beta0 = lhs_bound(w)
    rows = [{"quantity": "beta0", "value": beta0}]
    eps_vec = spec.axis_vector()
    if np.any(eps_vec > 0):
        if args.method == "sdp":
            beta_eps = R.witness_lhs_sdp(w, spec, seed=args.seed)
        elif args.method == "seesaw":
            beta_eps = max(beta0, P.seesaw(w, spec, restarts=args.restarts, seed=args.seed))
        elif args.method == "closed-form" and w.name == "pauli" and len(set(eps_vec)) == 1:
            beta_eps = P.pauli_bound(eps_vec[0])
        elif args.method == "closed-form" and w.name == "esi" and len(set(eps_vec)) == 1:
            beta_eps = max(1.0, P.f_eps(eps_vec[0]))
        else:
            beta_eps = max(
                lemma for lemma in [P.lemma_witness_bound(w, spec)]
            )
        rows.append({"quantity": "beta_eps", "value": beta_eps})
    rows.append({"quantity": "quantum_value", "value": quantum_value(w)[0]})
    rows.append({"quantity": "has_plateau", "value": float(has_plateau(w))})
    rows.append({"quantity": "n_classes", "value": float(len(enumerate_strategies(w)))})
    _write_rows(args, args.method, ["quantity", "value"], rows)
    return 0


def cmd_plateau(args) -> int:
    w = _load_witness(args)
    method = args.method
    rows = []
    if method == "closed-form":
        if w.name == "esi":
            star = P.epsilon_star_esi()
        elif w.family_n == 4:
            star = P.plateau_n4()
        else:
            raise NumericalFailure(f"no closed-form plateau for witness {w.name!r}")
        rows.append({"eps_x": star, "eps_y": star, "eps_z": star, "bound": lhs_bound(w), "method": method})
    elif method == "taylor":
        if args.grid:
            lo, hi, n = args.grid
            for ex in np.linspace(lo, hi, int(n)):
                for ey in np.linspace(lo, hi, int(n)):
                    ez = P.taylor_plateau(ex, ey)
                    rows.append({"eps_x": ex, "eps_y": ey, "eps_z": ez, "bound": lhs_bound(w), "method": method})
        else:
            ez = P.taylor_plateau(args.eps_x or 0.0, args.eps_y or 0.0)
            rows.append({"eps_x": args.eps_x or 0.0, "eps_y": args.eps_y or 0.0, "eps_z": ez, "bound": lhs_bound(w), "method": method})
    elif method in ("grid", "lemma", "seesaw"):
        beta0 = lhs_bound(w)
        ex, ey = args.eps_x or 0.0, args.eps_y or 0.0

        def bound(ez: float) -> float:
            spec = ImprecisionSpec.axes([ex, ey, ez])
            if method == "grid":
                return P.grid_oracle_class2(spec, resolution=args.resolution)
            if method == "lemma":
                return P.lemma_witness_bound(w, spec)
            return P.seesaw(w, spec, restarts=args.restarts, seed=args.seed)

        star = P.plateau_length(bound, beta0, hi=0.05, tol=args.tol)
        rows.append({"eps_x": ex, "eps_y": ey, "eps_z": star, "bound": beta0, "method": method})
    elif method == "sdp":
        star = R.plateau_sdp(w, args.eps_x or 0.0, args.eps_y or 0.0, tol=args.tol, seed=args.seed)
        rows.append({"eps_x": args.eps_x or 0.0, "eps_y": args.eps_y or 0.0, "eps_z": star, "bound": lhs_bound(w), "method": method})
    else:
        raise ValueError(f"unknown plateau method {method!r}")
    _write_rows(args, method, ["eps_x", "eps_y", "eps_z", "bound", "method"], rows)
    return 0


def cmd_robustness(args) -> int:
    w = _load_witness(args)
    eps = args.eps or 0.0
    rows = []
    if args.theta_sweep:
        thetas = np.linspace(args.theta_min, np.pi / 4, args.samples)
        for th in thetas:
            if w.name == "esi":
                q = np.sqrt(2.0 - np.cos(4.0 * th))
                c = np.cos(2.0 * th)
                eta = RB.eta_crit_esi(th)
            elif w.family_n == 4:
                q, c = RB.n4_ansatz_values(th)
                eta = RB.eta_crit_n4(th)
            else:
                raise NumericalFailure(f"no theta sweep for witness {w.name!r}")
            rows.append({"parameter": th, "Q": q, "C": c, "eta_crit": eta, "eps": eps})
    else:
        if w.name == "esi":
            eta = RB.eta_crit_esi_at_eps(eps)
        elif w.name == "pauli":
            eta = RB.pauli_eta_search(eps, seed=args.seed)
        elif w.name == "dodecahedron":
            eta = RB.dodecahedron_eta(eps, seed=args.seed)
        elif w.family_n == 4:
            eta = RB.eta_crit_n4_limit()
        else:
            raise NumericalFailure(f"no robustness analysis for witness {w.name!r}")
        rows.append({"parameter": 0.0, "Q": float("nan"), "C": float("nan"), "eta_crit": eta, "eps": eps})
    _write_rows(args, "robustness", ["parameter", "Q", "C", "eta_crit", "eps"], rows)
    return 0


def cmd_randomness(args) -> int:
    w = _load_witness(args)
    eps = args.eps or 0.0
    spec = ImprecisionSpec.uniform(eps, w.n_y)
    if args.value is not None:
        values = [args.value]
    else:
        values = list(1.0 + (np.sqrt(3.0) - 1.0) * np.arange(1, args.samples + 1) / args.samples)
    rows = []
    if eps == 0.0:
        for v in values:
            pg, r = R.guessing_probability_exact(w, v)
            rows.append({"witness_value": v, "Pg": pg, "R": r})
    else:
        basis = R.build_basis(
            R.guessing_monomials(w.n_x, w.n_y, level=args.level), w.targets, seed=args.seed
        )
        env = R.guessing_envelope(w, spec, basis)
        for v in values:
            pg = min(1.0, env.pg(v))
            rows.append({"witness_value": v, "Pg": pg, "R": -np.log2(pg)})
    _write_rows(args, f"randomness-level{args.level}", ["witness_value", "Pg", "R"], rows)
    return 0


def cmd_export(args) -> int:
    w = _load_witness(args)
    text = witness_to_json(w)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return 0


def _apply_config(args, parser):
    """key=value config file; explicit flags win."""
    if not getattr(args, "config", None):
        return args
    overrides = {}
    for line in Path(args.config).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        overrides[key.strip().replace("-", "_")] = value.strip()
    defaults = parser.parse_args([a for a in sys.argv[1:2]])  # subcommand defaults
    for key, value in overrides.items():
        if hasattr(args, key) and getattr(args, key) == getattr(defaults, key, None):
            current = getattr(defaults, key, None)
            caster = float if isinstance(current, float) or current is None else type(current)
            try:
                setattr(args, key, caster(value))
            except (TypeError, ValueError):
                setattr(args, key, value)
    return args


def _grid_spec(text: str):
    lo, hi, n = text.split(":")
    return float(lo), float(hi), int(n)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steerkit", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("witness", help="esi | pauli | dodecahedron | family | path to a witness JSON file")
        p.add_argument("--n", type=int, default=None, help="family size (family witness only)")
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--eps-x", dest="eps_x", type=float, default=None)
        p.add_argument("--eps-y", dest="eps_y", type=float, default=None)
        p.add_argument("--eps-z", dest="eps_z", type=float, default=None)
        p.add_argument("--seed", type=int, default=2024)
        p.add_argument("--tol", type=float, default=1e-7)
        p.add_argument("--level", type=int, default=1, help="moment-matrix monomial level")
        p.add_argument("--restarts", type=int, default=32)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--config", default=None, help="key=value config file (flags override)")

    p_lhs = sub.add_parser("lhs", help="LHS bounds, quantum value, class census")
    common(p_lhs)
    p_lhs.add_argument("--method", choices=("closed-form", "lemma", "seesaw", "sdp"), default="closed-form")
    p_lhs.set_defaults(func=cmd_lhs)

    p_pl = sub.add_parser("plateau", help="plateau lengths along the chosen route")
    common(p_pl)
    p_pl.add_argument("--method", choices=("closed-form", "lemma", "taylor", "grid", "seesaw", "sdp"), default="closed-form")
    p_pl.add_argument("--grid", type=_grid_spec, default=None, metavar="LO:HI:N")
    p_pl.add_argument("--resolution", type=int, default=2001)
    p_pl.set_defaults(func=cmd_plateau)

    p_rb = sub.add_parser("robustness", help="critical detection efficiencies")
    common(p_rb)
    p_rb.add_argument("--theta-sweep", action="store_true")
    p_rb.add_argument("--theta-min", type=float, default=1e-3)
    p_rb.add_argument("--samples", type=int, default=20)
    p_rb.set_defaults(func=cmd_robustness)

    p_rn = sub.add_parser("randomness", help="certified randomness versus witness value")
    common(p_rn)
    p_rn.add_argument("--value", type=float, default=None)
    p_rn.add_argument("--samples", type=int, default=20)
    p_rn.set_defaults(func=cmd_randomness)

    p_ex = sub.add_parser("export", help="write a witness as JSON")
    common(p_ex)
    p_ex.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _apply_config(args, parser)
    try:
        return args.func(args)
    except NoViolation as exc:
        print(f"no violation: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
