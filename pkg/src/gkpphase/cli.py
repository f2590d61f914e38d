"""Command-line front end.

Subcommands: synth, verify-circuits, sweep, vacuum, moments, ft-bound,
twirl-density, cache.  Outputs are written atomically (temp file + rename),
carry a schema_version field, and are deterministic for a fixed
configuration and seed.  Exit codes: 0 success, 1 validation error,
2 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analytic, channel, fock, polyalg, symplectic
from .opcache import OperatorCache

SCHEMA_VERSION = 1


class NumericFailure(RuntimeError):
    pass


def _atomic_write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_json(args, payload: dict) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    _atomic_write(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _emit_csv(args, header: list[str], rows: list[list]) -> None:
    lines = [f"# schema_version={SCHEMA_VERSION}", ",".join(header)]
    for row in rows:
        lines.append(",".join("" if v is None else str(v) for v in row))
    _atomic_write(args.out, "\n".join(lines) + "\n")


def _load_config_defaults(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Apply key=value defaults from --config <file> [section per subcommand]."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2 :]
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    section = rest[0] if rest and not rest[0].startswith("-") else "global"
    injected: list[str] = []
    for sec in ("global", section):
        if cp.has_section(sec):
            for key, val in cp.items(sec):
                flag = f"--{key.replace('_', '-')}"
                if flag not in rest:
                    injected.extend([flag, val])
    if rest and not rest[0].startswith("-"):
        return [rest[0]] + injected + rest[1:]
    return injected + rest


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def _poly_json(poly: polyalg.RationalPolynomial) -> dict:
    return {
        "coefficients": poly.fraction_strings(),
        "pretty": str(poly),
        "degree": poly.degree,
    }


def _gate_name(level: int, n_qubits: int = 1) -> str:
    single = {1: "Z", 2: "S", 3: "T", 4: "T^(1/2)", 5: "T^(1/4)", 6: "T^(1/8)"}
    if n_qubits == 1:
        return single.get(level, f"Lambda_{level}")
    if n_qubits == 2 and level == 2:
        return "CS"
    if n_qubits == 3 and level == 1:
        return "CCZ"
    return f"C^{n_qubits-1}Lambda_{level}"


def cmd_synth(args) -> int:
    m = args.level
    if args.qubits > 1:
        start = polyalg.control_gate_start(args.qubits, m)
        outcome = polyalg.multivariate_reduce(start)
        terms = {
            ",".join(map(str, exp)): f"{c.numerator}/{c.denominator}"
            for exp, c in sorted(outcome.minimum.terms.items())
        }
        _emit_json(
            args,
            {
                "gate": _gate_name(m, args.qubits),
                "qubits": args.qubits,
                "level": m,
                "polynomial": terms,
                "degree": outcome.minimum.total_degree,
                "branch_log": [
                    {"monomial": list(e), "boundary": True} for e in outcome.tie_monomials
                ],
            },
        )
        return 0
    if args.start.startswith("lift:"):
        path = args.start.split(":", 1)[1]
        with open(path) as fh:
            data = json.load(fh)
        coeffs = [Fraction(c) for c in data["coefficients"]]
        prev = polyalg.RationalPolynomial(coeffs)
        start = polyalg.lift_representation(prev, m - 1)
    elif args.start == "power":
        start = polyalg.starting_representation(m)
    else:
        raise ValueError(f"unknown start spec {args.start!r}")
    outcome = polyalg.reduce(start)
    rep = outcome.minima[0]
    if not polyalg.verify_gate(rep, m):
        raise NumericFailure("reduced polynomial failed the gate phase check")
    # The same polynomial read with the half number operator as argument
    # implements the Hadamard-hierarchy gate of the same level (name only;
    # there is no biasing scheme, hence no channel support, for that family).
    h_alias = "H" if m == 1 else f"H^(1/{2 ** (m - 1)})"
    _emit_json(
        args,
        {
            "gate": _gate_name(m),
            "number_operator_alias": h_alias,
            "level": m,
            "polynomial": _poly_json(rep),
            "minima": [_poly_json(p) for p in outcome.minima],
            "tied": outcome.tied,
            "degree": rep.degree,
            "branch_log": [
                {"degree": s.degree, "multiplier": s.multiplier, "boundary": s.boundary}
                for s in outcome.branch_log
            ],
        },
    )
    return 0


# ---------------------------------------------------------------------------
# verify-circuits
# ---------------------------------------------------------------------------


def cmd_verify_circuits(args) -> int:
    checks = []

    def add(name, residual, tol):
        checks.append(
            {
                "name": name,
                "max_residual": float(residual),
                "tolerance": tol,
                "pass": bool(residual <= tol),
            }
        )

    add("q-steane-rewrite", symplectic.qsteane_identity_residual(), 1e-12)
    for lam in (0.5, 1.0, 2.0, 3.0, 7.0):
        add(f"rearrangement-lam={lam}", symplectic.morphing_identity_residual(lam), 1e-12)
    for lam in (1.0, 2.0, 3.0, 7.0):
        add(f"breeding-lam={lam}", symplectic.breeding_identity_residual(lam), 1e-12)

    # biasing_update against Schur-complement conditioning, both circuit forms
    worst = 0.0
    for lam in (0.5, 1.0, 2.0, 3.0, 7.0):
        delta = 0.21
        dq, dp = symplectic.biasing_update(delta, lam)
        state = symplectic.CovState(
            np.zeros(4), np.diag([delta**2, delta**2 / lam, delta**2, lam * delta**2])
        ).propagate(symplectic.cx(1.0, 0, 1, 2))
        cond, _ = symplectic.condition_on_homodyne(state, [1])
        worst = max(
            worst,
            abs(cond.Sigma[0, 0] - dq**2),
            abs(cond.Sigma[1, 1] - dp**2),
            abs(cond.Sigma[0, 1]),
        )
        state2 = symplectic.CovState(np.zeros(4), delta**2 * np.eye(4)).propagate(
            symplectic.cx(math.sqrt(lam), 0, 1, 2)
        )
        cond2, _ = symplectic.condition_on_homodyne(state2, [1])
        worst = max(worst, abs(cond2.Sigma[0, 0] - dq**2), abs(cond2.Sigma[1, 1] - dp**2))
    add("biasing-vs-conditioning", worst, 1e-12)

    rng = np.random.default_rng(args.seed)
    worst_rel = 0.0
    for _ in range(args.nogo_circuits):
        n_anc = int(rng.integers(1, 5))
        circ = symplectic.random_circuit(1 + n_anc, int(rng.integers(4, 12)), rng)
        for delta in (0.1, 0.25, 0.5):
            det = symplectic.nogo_check(circ, n_anc, delta)
            worst_rel = max(worst_rel, abs(det - delta**4) / delta**4)
    add(f"nogo-sweep-{args.nogo_circuits}-circuits", worst_rel, 1e-10)

    all_pass = all(c["pass"] for c in checks)
    _emit_json(args, {"checks": checks, "all_pass": all_pass})
    return 0 if all_pass else 2


# ---------------------------------------------------------------------------
# sweep / vacuum
# ---------------------------------------------------------------------------


def cmd_sweep(args) -> int:
    n_bars = []
    nb = args.nbar_min
    while nb <= args.nbar_max + 1e-9:
        n_bars.append(round(nb, 9))
        nb += args.nbar_step
    lams = np.linspace(args.lam_min, args.lam_max, args.lam_count).tolist()
    plan = fock.TruncationPlan(d_init=args.dinit, expand_factor=args.expand_factor)
    result = channel.sweep(
        [args.gate], n_bars, lams, plan,
        workers=args.workers, n_cut=args.ncut, cache_dir=args.cache_dir,
        precision=int(args.precision),
    )
    header = [
        "gate", "n_bar", "delta", "delta_db", "lam",
        "avg_infidelity", "t_state_infidelity", "boundary_flag",
    ]
    rows = []
    for r in result.rows:
        rows.append(
            [
                r.gate,
                f"{r.n_bar:.6g}",
                f"{r.delta:.12g}",
                f"{r.delta_db:.12g}",
                f"{r.lam:.12g}",
                f"{r.avg_infidelity:.12e}",
                "" if r.t_state_infidelity is None else f"{r.t_state_infidelity:.12e}",
                ("1" if r.boundary_flag else "0") if r.is_optimal else "",
            ]
        )
    _emit_csv(args, header, rows)
    return 0


def cmd_vacuum(args) -> int:
    cfg = channel.VacuumMethodConfig(
        delta=args.delta, grid=args.grid, postselect_fraction=args.postselect
    )
    res = channel.vacuum_state_method(cfg)
    _emit_csv(
        args,
        ["delta", "p", "infidelity", "acceptance_prob"],
        [[f"{args.delta:.12g}", f"{args.postselect:.12g}",
          f"{res.infidelity:.12e}", f"{res.acceptance_probability:.12e}"]],
    )
    return 0


# ---------------------------------------------------------------------------
# moments / ft-bound / twirl-density
# ---------------------------------------------------------------------------


def cmd_moments(args) -> int:
    poly, _ = channel.GATE_TABLE[args.gate]
    dq = args.delta / math.sqrt(args.lam)
    dp = args.delta * math.sqrt(args.lam)
    ms = analytic.moments(poly, dq, dp)
    _emit_json(
        args,
        {
            "gate": args.gate,
            "delta": args.delta,
            "lam": args.lam,
            "delta_q": dq,
            "delta_p": dp,
            "e_vq2": ms.e_vq2,
            "e_vp2": ms.e_vp2,
            "e_vqvp": ms.e_vqvp,
        },
    )
    return 0


def cmd_ft_bound(args) -> int:
    rows = []
    for delta in args.delta:
        b = analytic.ft_lower_bound(delta)
        rows.append(
            [f"{b.delta:.12g}", f"{b.lam_of_delta:.12g}",
             f"{b.f_lower_bound:.12e}", "1" if b.validity else "0"]
        )
    _emit_csv(args, ["delta", "lam_of_delta", "f_lower_bound", "validity"], rows)
    return 0


def cmd_twirl_density(args) -> int:
    dens = analytic.TwirledCubicDensity(args.delta, args.lam)
    vq = np.linspace(-args.span, args.span, args.points)
    vp = np.linspace(-args.span, args.span, args.points)
    rows = []
    for q in vq:
        vals = dens(np.full_like(vp, q), vp)
        for p, val in zip(vp, vals):
            rows.append([f"{q:.9g}", f"{p:.9g}", f"{val:.12e}"])
    _emit_csv(args, ["v_q", "v_p", "density"], rows)
    return 0


# ---------------------------------------------------------------------------
# cache
# ---------------------------------------------------------------------------


def cmd_cache(args) -> int:
    cache = OperatorCache(args.cache_dir)
    if args.action == "list":
        entries = [
            {
                "file": e.path.name,
                "kind": e.kind,
                "digest": e.digest_hex,
                "shape": list(e.shape),
                "bytes": e.nbytes,
            }
            for e in cache.entries()
        ]
        _emit_json(args, {"entries": entries, "count": len(entries)})
        return 0
    if args.action == "purge":
        n = cache.purge()
        _emit_json(args, {"purged": n})
        return 0
    if args.action == "prewarm":
        plan = fock.TruncationPlan(d_init=args.dinit, expand_factor=args.expand_factor)
        d_temp = plan.d_temp(plan.d_out)
        t0 = time.time()
        x = cache.get_or_create(
            "qeig-values", {"d": d_temp}, lambda: fock.q_eigensystem(d_temp)[0]
        )
        cache.get_or_create(
            "qeig-vectors", {"d": d_temp}, lambda: fock.q_eigensystem(d_temp)[1]
        )
        built = 2
        for nb in np.arange(args.nbar_min, args.nbar_max + 1e-9, args.nbar_step):
            for lam in np.linspace(args.lam_min, args.lam_max, args.lam_count):
                params = fock.GkpParams.from_n_bar(float(nb), float(lam))
                smear = channel.default_smear(params)
                key = {
                    "d": d_temp, "lam": round(float(lam), 12),
                    "delta": round(params.delta, 12), "n_cut": args.ncut,
                    "smear": "biased-auto",
                }
                def build(lam=lam, smear=smear):
                    g, h = fock.pauli_profiles(float(lam), smear, x, args.ncut)
                    return np.stack([g, h])
                cache.get_or_create("pauli-diag-zx", key, build)
                built += 1
        _emit_json(args, {"prewarmed": built, "seconds": time.time() - t0})
        return 0
    raise ValueError(f"unknown cache action {args.action!r}")


# ---------------------------------------------------------------------------
# parser / dispatch
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="gkpphase", description=__doc__)
    top.add_argument("--config", help="key=value config file with [global]/[subcommand] sections")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--cache-dir", default=None)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seed", type=int, default=12345)
        p.add_argument("--precision", choices=("64", "128"), default="128",
                       help="complex precision; 64 is a fast smoke mode")

    p = sub.add_parser("synth", help="minimal polynomial phase gate synthesis")
    common(p)
    p.add_argument("--level", type=int, required=True, help="hierarchy level m >= 1")
    p.add_argument("--qubits", type=int, default=1)
    p.add_argument("--start", default="power", help="power | lift:<poly.json>")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify-circuits", help="symplectic identity suite + no-go sweep")
    common(p)
    p.add_argument("--nogo-circuits", type=int, default=100)
    p.set_defaults(func=cmd_verify_circuits)

    p = sub.add_parser("sweep", help="(n_bar, lam) fidelity sweep for one gate")
    common(p)
    p.add_argument("--gate", required=True, choices=sorted(channel.GATE_TABLE))
    p.add_argument("--nbar-min", type=float, default=2.0)
    p.add_argument("--nbar-max", type=float, default=12.0)
    p.add_argument("--nbar-step", type=float, default=1.0)
    p.add_argument("--lam-min", type=float, default=1.0)
    p.add_argument("--lam-max", type=float, default=5.0)
    p.add_argument("--lam-count", type=int, default=16)
    p.add_argument("--dinit", type=int, default=256)
    p.add_argument("--expand-factor", type=int, default=3)
    p.add_argument("--ncut", type=int, default=59)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("vacuum", help="vacuum-state magic state baseline")
    common(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--grid", type=int, default=500)
    p.add_argument("--postselect", type=float, default=1.0)
    p.set_defaults(func=cmd_vacuum)

    p = sub.add_parser("moments", help="closed-form twirled error moments")
    common(p)
    p.add_argument("--gate", default="T3", choices=sorted(channel.GATE_TABLE))
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--lam", type=float, default=1.0)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("ft-bound", help="fault-tolerance fidelity lower bound")
    common(p)
    p.add_argument("--delta", type=float, nargs="+", required=True)
    p.set_defaults(func=cmd_ft_bound)

    p = sub.add_parser("twirl-density", help="cubic twirled density grid CSV")
    common(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--span", type=float, default=0.5)
    p.add_argument("--points", type=int, default=81)
    p.set_defaults(func=cmd_twirl_density)

    p = sub.add_parser("cache", help="operator cache maintenance")
    common(p)
    p.add_argument("action", choices=("list", "purge", "prewarm"))
    p.add_argument("--dinit", type=int, default=256)
    p.add_argument("--expand-factor", type=int, default=3)
    p.add_argument("--ncut", type=int, default=59)
    p.add_argument("--nbar-min", type=float, default=2.0)
    p.add_argument("--nbar-max", type=float, default=12.0)
    p.add_argument("--nbar-step", type=float, default=1.0)
    p.add_argument("--lam-min", type=float, default=1.0)
    p.add_argument("--lam-max", type=float, default=5.0)
    p.add_argument("--lam-count", type=int, default=16)
    p.set_defaults(func=cmd_cache)

    return top


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        argv = _load_config_defaults(parser, list(argv))
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericFailure, fock.TruncationLeakageError, analytic.AccuracyError,
            symplectic.SingularConditioningError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
