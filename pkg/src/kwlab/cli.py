"""Command-line front door: flat key=value configs, deterministic outputs.

Subcommands: solve | threshold | dingliu | family | diagnose | selftest.
Every run writes summary.json, an effective-config dump, and its field/CSV
artifacts under the output directory, and prints the summary as one JSON
line on stdout. Exit codes: 0 success, 1 operational error, 2 verdict
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, problem, serialize, solvers, spectral, threshold
from .domain import ScalarField, integrate, make_torus
from .errors import KWLabError
from .fields import named_field
from .problem import ProblemInstance
from .solvers import SolveReport, SolverOptions

MODES = ("solve", "threshold", "dingliu", "family", "diagnose", "selftest")

DEFAULTS = {
    "d": "2",
    "sizes": "",           # default filled from d: 64,64 or 16,16,16,16
    "lengths": "",
    "n": "",               # default d/2
    "field": "",
    "field_value": "",
    "field_offset": "0",
    "field_seed": "",
    "field_p": "",
    "field_shift_max_zero": "false",
    "alpha": "",
    "alphas": "",
    "s0": "-1.0",
    "tol": "",
    "residual_tol": "1e-10",
    "budget": "1.0",
    "count": "8",
    "start_alpha": "-0.01",
    "solver": "newton",
    "with_eigs": "false",
    "inject": "none",      # testing hook for negative controls: none|diverge_down|diverge_up
    "seed": "0",
    "out": "",
    "single_thread": "true",
}


def parse_config_file(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise KWLabError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _bool(s: str) -> bool:
    return s.strip().lower() in ("1", "true", "yes", "on")


def _int_list(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x.strip()]


def _float_list(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def validate(mode: str, cfg: dict[str, str]) -> list[str]:
    problems = []
    if mode != "selftest" and not cfg["field"]:
        problems.append("field: required (const|cos1|sin1|two_mode|random_fourier)")
    if mode == "solve" and not cfg["alpha"]:
        problems.append("alpha: required for mode=solve")
    if cfg["field"] == "const" and not cfg["field_value"]:
        problems.append("field_value: required for field=const")
    if cfg["field"] == "random_fourier":
        if not cfg["field_seed"]:
            problems.append("field_seed: required for field=random_fourier")
        if not cfg["field_p"]:
            problems.append("field_p: required for field=random_fourier")
    d = int(cfg["d"]) if cfg["d"] in ("2", "4") else None
    if d is None:
        problems.append("d: must be 2 or 4")
    return problems


def build_domain(cfg):
    d = int(cfg["d"])
    sizes = _int_list(cfg["sizes"]) if cfg["sizes"] else [64] * 2 if d == 2 else [16] * 4
    lengths = _float_list(cfg["lengths"]) if cfg["lengths"] else [1.0] * d
    return make_torus(d, sizes, lengths)


def build_field(cfg, domain) -> ScalarField:
    return named_field(
        domain,
        cfg["field"],
        value=float(cfg["field_value"]) if cfg["field_value"] else None,
        offset=float(cfg["field_offset"]),
        seed=int(cfg["field_seed"]) if cfg["field_seed"] else None,
        decay_p=float(cfg["field_p"]) if cfg["field_p"] else None,
        shift_max_zero=_bool(cfg["field_shift_max_zero"]),
    )


def _family_csv(
    members: list[SolveReport],
    insts: list[ProblemInstance],
    params: list[float],
    with_eigs: bool,
) -> str:
    lines = ["param,sup_norm_u,energy,defect,lambda_min"]
    for rep, inst, param in zip(members, insts, params):
        plan = spectral.get_plan(inst.domain)
        check = problem.integral_identity_defect(inst, rep.solution)
        lam = ""
        if with_eigs:
            lam_val = spectral.min_eigenvalue(
                plan, problem.stability_potential(inst, rep.solution), 1e-7
            )
            rep.min_eig = lam_val
            lam = repr(lam_val)
        energy = rep.energy.total if rep.energy is not None else ""
        lines.append(
            f"{param!r},{rep.solution.sup_norm!r},{energy!r},{check.defect!r},{lam}"
        )
    return "\n".join(lines) + "\n"


def _threshold_summary(rep: threshold.ThresholdReport) -> dict:
    return {
        "param": rep.param_name,
        "lo": rep.lo,
        "hi": rep.hi,
        "width": rep.width if np.isfinite(rep.lo) else None,
        "estimate": rep.estimate if np.isfinite(rep.lo) else None,
        "unbounded": rep.unbounded,
        "family_size": len(rep.family),
        "flags": rep.flags,
    }


def _injected_family(domain, sign: float, count: int) -> list[SolveReport]:
    """Synthetic divergent family u_k = sign·k (negative-control hook)."""
    out = []
    for k in range(count):
        u = ScalarField.constant(domain, sign * float(k))
        out.append(SolveReport(
            solution=u, converged=True, iterations=0, residual_history=[0.0],
            method="injected", alpha=-1.0 - k,
        ))
    return out


def run(mode: str, cfg: dict[str, str], outdir: Path) -> tuple[int, dict]:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "effective_config.txt").write_text(
        "".join(f"{k}={v}\n" for k, v in sorted({**cfg, "mode": mode}.items()))
    )
    summary: dict = {"mode": mode}

    if mode == "selftest":
        failures = _selftest()
        summary["checks_failed"] = failures
        code = 0 if not failures else 2
        return code, summary

    domain = build_domain(cfg)
    S = build_field(cfg, domain)
    n = int(cfg["n"]) if cfg["n"] else domain.d // 2
    rtol = float(cfg["residual_tol"])
    budget = float(cfg["budget"])
    with_eigs = _bool(cfg["with_eigs"])
    serialize.write_field(S, outdir / "S", label="S")
    summary["mean_S"] = integrate(S) / domain.volume

    if mode == "solve":
        inst = ProblemInstance(domain, S, float(cfg["alpha"]), n)
        if cfg["solver"] == "probe":
            verdict = threshold.probe_solvable(inst, budget, residual_tol=rtol)
            rep = verdict.report
            if rep is None:
                summary.update(converged=False, evidence=verdict.evidence)
                return 2, summary
        else:
            rep = solvers.newton_solve(inst, SolverOptions(residual_tol=rtol))
        serialize.write_report(rep, outdir / "solve")
        summary.update(serialize.report_summary(rep))
        check = problem.integral_identity_defect(inst, rep.solution)
        summary["defect"] = check.defect
        return (0 if rep.converged else 2), summary

    if mode == "threshold":
        tol = float(cfg["tol"]) if cfg["tol"] else 1e-3
        rep = threshold.find_alpha_star(
            S, n, domain, tol=tol, budget=budget, start_alpha=float(cfg["start_alpha"])
        )
        summary["threshold"] = _threshold_summary(rep)
        members = [r for _, r in rep.family]
        params = [a for a, _ in rep.family]
        insts = [ProblemInstance(domain, S, a, n) for a in params]
        (outdir / "family.csv").write_text(_family_csv(members, insts, params, with_eigs))
        for i, (_, member) in enumerate(rep.family):
            serialize.write_report(member, outdir / f"member_{i:03d}")
        return 0, summary

    if mode == "dingliu":
        g0 = named_field(
            domain, cfg["field"],
            value=float(cfg["field_value"]) if cfg["field_value"] else None,
            offset=float(cfg["field_offset"]),
            seed=int(cfg["field_seed"]) if cfg["field_seed"] else None,
            decay_p=float(cfg["field_p"]) if cfg["field_p"] else None,
            shift_max_zero=True,
        )
        tol = float(cfg["tol"]) if cfg["tol"] else 1e-2
        rep = threshold.ding_liu_lambda_star(g0, float(cfg["s0"]), domain, tol=tol, budget=budget)
        summary["threshold"] = _threshold_summary(rep)
        summary["lambda_range_upper"] = -g0.min
        members = [r for _, r in rep.family]
        params = [lam for lam, _ in rep.family]
        insts = [
            ProblemInstance(domain, ScalarField(domain, g0.values + lam), float(cfg["s0"]), 1)
            for lam in params
        ]
        (outdir / "family.csv").write_text(_family_csv(members, insts, params, with_eigs=False))
        for i, (lam, member) in enumerate(rep.family):
            serialize.write_report(member, outdir / f"member_{i:03d}")
        return 0, summary

    # family and diagnose share the family construction
    count = int(cfg["count"])
    if mode == "diagnose" and cfg["inject"] != "none":
        sign = -1.0 if cfg["inject"] == "diverge_down" else 1.0
        members = _injected_family(domain, sign, count)
        thr = None
    elif cfg["alphas"]:
        alphas = _float_list(cfg["alphas"])
        members = []
        warm = None
        for a in alphas:
            inst = ProblemInstance(domain, S, a, n)
            v = threshold.probe_solvable(inst, budget, warm_start=warm, residual_tol=rtol)
            if not v.solved:
                break
            members.append(v.report)
            warm = v.report.solution
        thr = None
    else:
        tol = float(cfg["tol"]) if cfg["tol"] else 1e-3
        thr = threshold.find_alpha_star(
            S, n, domain, tol=tol, budget=budget, start_alpha=float(cfg["start_alpha"])
        )
        summary["threshold"] = _threshold_summary(thr)
        if thr.unbounded:
            members = [r for _, r in thr.family]
        else:
            members = threshold.limit_family(S, n, domain, thr, count, budget=budget)

    summary["family_size"] = len(members)
    params = [rep.alpha for rep in members]
    insts = [ProblemInstance(domain, S, a, n) for a in params]
    (outdir / "family.csv").write_text(
        _family_csv(members, insts, params, with_eigs or mode == "diagnose")
    )
    for i, member in enumerate(members):
        serialize.write_report(member, outdir / f"member_{i:03d}")

    if mode == "family":
        return (0 if members else 2), summary

    # diagnose
    if not members:
        summary["error"] = "empty family"
        return 2, summary
    phi, K, m_minus = diagnostics.auto_cutoff_region(S)
    table = diagnostics.family_table(members, K, S, n)
    (outdir / "diagnostics.csv").write_text(table.to_csv())
    lower = diagnostics.check_lower_bound(members)
    supinf = diagnostics.sup_inf_track(members, K)
    verdicts = dict(table.verdicts)
    verdicts["lower_bound"] = lower.passed
    verdicts["sup_inf"] = supinf.passed
    cert_holds = None
    if thr is not None and not thr.unbounded:
        cert = diagnostics.apriori_c0_bound(S, thr.lo, phi, K, n)
        cert_holds = cert.check_family(members)
        verdicts["apriori_sup_bound"] = cert_holds
        summary["apriori_bound_on_sup_u"] = cert.bound_on_sup_u
    summary["verdicts"] = verdicts
    summary["A_observed"] = lower.A_observed
    (outdir / "verdicts.json").write_text(json.dumps(verdicts, indent=2) + "\n")
    return (0 if all(verdicts.values()) else 2), summary


def _selftest() -> list[str]:
    """Fast invariant sweep over the core operations."""
    failures = []

    def check(name, fn):
        try:
            if not fn():
                failures.append(name)
        except Exception as e:  # noqa: BLE001 - selftest reports, never raises
            failures.append(f"{name}: {e}")

    dom = make_torus(2, [32, 32], [1.0, 1.0])
    plan = spectral.get_plan(dom)
    x = dom.coords()
    sin1 = ScalarField(dom, np.broadcast_to(np.sin(2 * np.pi * x[0]), dom.sizes).copy())

    check("integrate_constant", lambda: abs(integrate(ScalarField.constant(dom, 3.0)) - 3.0) < 1e-12)
    check("laplacian_eigenfunction", lambda: (
        np.max(np.abs(spectral.laplacian(plan, sin1).values + 4 * np.pi**2 * sin1.values)) < 1e-9
    ))
    check("helmholtz_roundtrip", lambda: (
        np.max(np.abs(spectral.helmholtz_solve(
            plan, 2.0, ScalarField(dom, (4 * np.pi**2 + 2.0) * sin1.values)
        ).values - sin1.values)) < 1e-10
    ))

    def constant_solve():
        inst = ProblemInstance(dom, ScalarField.constant(dom, -2.0), -2.0, 1)
        rep = solvers.newton_solve(inst, SolverOptions(start="zero"))
        return rep.converged and rep.solution.sup_norm <= 1e-10

    check("constant_instance_solves_to_zero", constant_solve)

    def defect_zero():
        inst = ProblemInstance(dom, ScalarField.constant(dom, -2.0), -2.0, 1)
        u0 = ScalarField.constant(dom, 0.0)
        return problem.integral_identity_defect(inst, u0).defect == 0.0

    check("integral_identity_constant", defect_zero)

    def gradient_is_twice_residual():
        inst = ProblemInstance(dom, sin1, -1.0, 1)
        u = ScalarField(dom, 0.1 * np.cos(2 * np.pi * x[1]) * np.ones(dom.sizes))
        g = problem.energy_gradient(inst, u)
        r = problem.residual(inst, u)
        return np.max(np.abs(g.values - 2 * r.values)) <= 1e-14

    check("gradient_equals_twice_residual", gradient_is_twice_residual)

    def eig_constant_potential():
        V = ScalarField.constant(dom, 3.5)
        return abs(spectral.min_eigenvalue(plan, V, 1e-9) - 3.5) < 1e-8

    check("min_eigenvalue_constant_potential", eig_constant_potential)
    return failures


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kwlab",
        description="Numerical laboratory for -Δu + α = S·exp(2u/n) on flat tori",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--tol", default=None)
        p.add_argument("--single-thread", action="store_true")
        p.add_argument("overrides", nargs="*", metavar="KEY=VALUE",
                       help="override any config key")
    args = parser.parse_args(argv)

    try:
        cfg = dict(DEFAULTS)
        if args.config:
            cfg.update(parse_config_file(args.config))
        for item in args.overrides:
            if "=" not in item:
                raise KWLabError(f"override must be KEY=VALUE, got {item!r}")
            key, _, value = item.partition("=")
            if key not in DEFAULTS:
                raise KWLabError(f"unknown config key {key!r}")
            cfg[key] = value
        if args.seed is not None:
            cfg["seed"] = str(args.seed)
        if args.tol is not None:
            cfg["tol"] = args.tol
        if args.single_thread:
            cfg["single_thread"] = "true"
        if args.out:
            cfg["out"] = args.out

        violations = validate(args.mode, cfg)
        if violations:
            raise KWLabError("config validation failed: " + "; ".join(violations))

        outdir = Path(cfg["out"] or f"kwlab_out_{args.mode}")
        code, summary = run(args.mode, cfg, outdir)
        summary["exit_code"] = code
        line = json.dumps(summary, sort_keys=True)
        (outdir / "summary.json").write_text(line + "\n")
        print(line)
        return code
    except KWLabError as e:
        print(json.dumps({"error": str(e)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
