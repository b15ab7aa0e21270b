"""Batch command-line front end.

Subcommands: analyze, jordan, decay, semigroup, verify, simulate,
counterexample.  Every tolerance in the configuration record can be
overridden with ``--tol.<name> <value>``.  Exit codes: 0 all checks
passed (or not applicable), 1 verification failure, 2 usage or parse
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .candidates import self_check
from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import (
    ArgumentError,
    NumericalFailureError,
    OULabError,
    PreconditionError,
    SpecFileError,
    UnsupportedEngineError,
)
from .harmonic import (
    THEOREMS,
    affine_exclusions,
    convexity_check,
    harmonic_catalog,
    liouville_verdict,
    residual,
    semigroup_invariance,
)
from .jordan import jordan_real_form, quasi_constancy_check
from .operators import kalman_rank, spectral_bound
from .reports import (
    FAIL,
    NOT_APPLICABLE,
    PASS,
    RunManifest,
    VerificationReport,
    jsonable,
    manifest_timestamp,
    render_pretty,
    report_to_json,
    write_csv,
)
from .sampling import ball_points, probe_grid
from .sde import sample_endpoint, sample_path_ensemble
from .semigroup import (
    MonteCarlo,
    Quadrature,
    decay_norm,
    gramian,
    kwapien_check,
    semigroup_apply,
)
from .specio import load_candidates, load_operator, save_candidates

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _extract_tol_overrides(argv: list[str]):
    """Pull ``--tol.<name> value`` / ``--tol.<name>=value`` out of argv."""
    known = set(Tolerances.field_names())
    rest, overrides = [], {}
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg.startswith("--tol."):
            body = arg[len("--tol."):]
            if "=" in body:
                name, value = body.split("=", 1)
            else:
                name = body
                if i + 1 >= len(argv):
                    raise ArgumentError(f"--tol.{name} needs a value")
                i += 1
                value = argv[i]
            if name not in known:
                raise ArgumentError(
                    f"unknown tolerance {name!r}; known: {', '.join(sorted(known))}"
                )
            field_type = {f.name: f.type for f in dataclasses.fields(Tolerances)}[name]
            overrides[name] = int(value) if field_type == "int" else float(value)
        else:
            rest.append(arg)
        i += 1
    return rest, overrides


def _parse_vector(text: str, dim: int, what: str) -> np.ndarray:
    try:
        v = np.array([float(p) for p in text.replace(",", " ").split()])
    except ValueError as exc:
        raise ArgumentError(f"cannot parse {what} {text!r}: {exc}") from exc
    if v.size != dim:
        raise ArgumentError(f"{what} has {v.size} entries, operator dimension is {dim}")
    return v


def _parse_times(text: str) -> list[float]:
    """Comma list ('1,2,5') or range syntax ('1:100:1')."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) == 2:
            start, stop, step = parts[0], parts[1], 1.0
        elif len(parts) == 3:
            start, stop, step = parts
        else:
            raise ArgumentError(f"bad time range {text!r}; use start:stop[:step]")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [start + k * step for k in range(n)]
    return [float(p) for p in text.split(",") if p.strip()]


def _engine(args, tol: Tolerances, rank_hint: int, candidate=None):
    name = getattr(args, "engine", "auto") or "auto"
    if name == "auto":
        # saturating (erf-shaped) candidates defeat fixed-order polynomial
        # quadrature at wide noise; their natural engine is exact sampling
        saturating = candidate is not None and candidate.meta.get("type") == "bounded-1d"
        name = "mc" if (rank_hint > tol.quad_dim_max or saturating) else "quadrature"
    if name == "quadrature":
        return Quadrature(level=tol.gh_level)
    if name in ("mc", "montecarlo", "monte-carlo"):
        return MonteCarlo(n=args.samples, seed=args.seed, workers=args.threads)
    raise ArgumentError(f"unknown engine {name!r}; use quadrature, mc, or auto")


def _manifest(args, command: str, files: list[str], overrides: dict) -> RunManifest:
    return RunManifest(
        command=command,
        input_files=files,
        config_overrides=overrides,
        seed=getattr(args, "seed", None),
        tool_version=__version__,
        timestamp=manifest_timestamp(),
    )


def _emit(args, text: str):
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _manifest_lines(man: RunManifest) -> list[str]:
    return [
        f"# oulab {man.tool_version} | {man.command} | seed={man.seed} | {man.timestamp}",
        f"# inputs: {', '.join(man.input_files) if man.input_files else '-'}"
        + (f" | overrides: {man.config_overrides}" if man.config_overrides else ""),
    ]


# ----------------------------------------------------------------------
# subcommands


def cmd_analyze(args, tol: Tolerances, overrides: dict) -> int:
    spec = load_operator(args.operator, tol)
    man = _manifest(args, "analyze", [args.operator], overrides)
    kal = kalman_rank(spec, tol)
    sr = spectral_bound(spec.A, tol)
    dec = jordan_real_form(spec.A, tol)
    qpd = bool(np.linalg.eigvalsh(spec.Q)[0] > tol.stability_tol * max(1.0, np.linalg.norm(spec.Q, 2)))
    bounded_group = bool(dec.blocks) and all(
        b.kind in ("zero-simple", "pure-rotation") for b in dec.blocks
    )
    s_nonpos = sr.classification in ("critical", "strictly-stable")
    hyp = {
        "bounded-liouville": [("hypoelliptic", kal.hypoelliptic), ("s(A)<=0", s_nonpos)],
        "bounded-group-liouville": [
            ("Q positive definite", qpd),
            ("bounded drift group", bounded_group),
        ],
        "sublinear-liouville": [("hypoelliptic", kal.hypoelliptic), ("s(A)<=0", s_nonpos)],
        "exponential-growth-liouville": [
            ("Q positive definite", qpd),
            ("s(A)<=0", s_nonpos),
        ],
    }
    doc = {
        "manifest": man.to_dict(),
        "dim": spec.dim,
        "kalman": {"rank": kal.rank, "hypoelliptic": kal.hypoelliptic},
        "spectral": {
            "bound": sr.spectral_bound,
            "classification": sr.classification,
            "eigenvalues": [{"re": z.real, "im": z.imag} for z in sr.eigenvalues],
        },
        "jordan": {
            "unstable": dec.unstable,
            "blocks": dec.block_lines(),
            "residual": dec.residual,
            "cluster_radius": dec.cluster_radius,
        },
        "theorem_hypotheses": {
            name: {cond: bool(v) for cond, v in conds} for name, conds in hyp.items()
        },
    }
    if args.format == "structured":
        _emit(args, report_to_json(doc) + "\n")
    else:
        lines = _manifest_lines(man)
        lines.append(f"dim: {spec.dim}")
        lines.append(f"hypoelliptic: {'yes' if kal.hypoelliptic else 'no'} (rank {kal.rank} of {spec.dim})")
        lines.append(f"spectral bound: {sr.spectral_bound:.12g} ({sr.classification})")
        lines.append("blocks: " + ("<unstable: no taxonomy>" if dec.unstable else "; ".join(dec.block_lines())))
        lines.append("theorem hypotheses:")
        for name, conds in hyp.items():
            checks = ", ".join(f"{c} {'yes' if v else 'NO'}" for c, v in conds)
            applies = all(v for _, v in conds)
            lines.append(f"  {name}: {checks} -> {'applies' if applies else 'not applicable'}")
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_jordan(args, tol: Tolerances, overrides: dict) -> int:
    spec = load_operator(args.operator, tol)
    man = _manifest(args, "jordan", [args.operator], overrides)
    dec = jordan_real_form(spec.A, tol)
    doc = {
        "manifest": man.to_dict(),
        "unstable": dec.unstable,
        "blocks": dec.block_lines(),
        "residual": dec.residual,
        "cluster_radius": dec.cluster_radius,
        "cluster_gap": dec.cluster_gap,
        "P": dec.P.tolist(),
        "J": dec.J.tolist(),
    }
    if args.format == "structured":
        _emit(args, report_to_json(doc) + "\n")
    else:
        lines = _manifest_lines(man)
        if dec.unstable:
            lines.append("unstable spectrum: no block taxonomy (P = I, J = A)")
        else:
            lines.append("blocks: " + "; ".join(dec.block_lines()))
        lines.append(f"residual: {dec.residual:.6g} (relative Frobenius)")
        lines.append(f"cluster radius: {dec.cluster_radius:.6g}; inter-cluster gap: {dec.cluster_gap:.6g}")
        lines.append("P:")
        for row in dec.P:
            lines.append("  [" + ", ".join(f"{v: .12g}" for v in row) + "]")
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_decay(args, tol: Tolerances, overrides: dict) -> int:
    import warnings as _warnings

    from .exceptions import IllConditionedWarning

    spec = load_operator(args.operator, tol)
    man = _manifest(args, "decay", [args.operator], overrides)
    times = _parse_times(args.times)
    if not times or any(t <= 0 for t in times):
        raise ArgumentError("decay needs strictly positive times")
    rows = []
    values = []
    for t in times:
        with _warnings.catch_warnings(record=True) as caught:
            _warnings.simplefilter("always", IllConditionedWarning)
            val = decay_norm(spec, t, tol)
        flagged = any(issubclass(w.category, IllConditionedWarning) for w in caught)
        values.append(val)
        rows.append([t, val, "ill-conditioned" if flagged else ""])
    diffs = np.diff(values)
    monotone = bool(np.all(diffs < 1e-9))
    if args.format == "structured":
        doc = {
            "manifest": man.to_dict(),
            "monotone_decreasing": monotone,
            "rows": [{"t": r[0], "decay_norm": r[1], "warning": r[2]} for r in rows],
        }
        _emit(args, report_to_json(doc) + "\n")
    else:
        buf = io.StringIO()
        for line in _manifest_lines(man):
            buf.write(line + "\n")
        buf.write(f"# monotone_decreasing: {'yes' if monotone else 'no'}\n")
        write_csv(buf, ["t", "decay_norm", "warning"], rows)
        _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_semigroup(args, tol: Tolerances, overrides: dict) -> int:
    spec = load_operator(args.operator, tol)
    cands = load_candidates(args.candidates, spec.dim)
    man = _manifest(args, "semigroup", [args.operator, args.candidates], overrides)
    x = _parse_vector(args.x, spec.dim, "--x")
    engine = _engine(args, tol, spec.dim)
    lines = _manifest_lines(man)
    results = []
    for cand in cands:
        res = semigroup_apply(spec, cand.evaluate, x, args.t, engine, tol)
        ux = float(np.asarray(cand.evaluate(x[None, :])).ravel()[0])
        results.append(
            {
                "candidate": cand.name,
                "P_t_u": res.value,
                "stderr": res.stderr,
                "u": ux,
                "deviation": res.value - ux,
            }
        )
        lines.append(
            f"{cand.name}: P_t u = {res.value:.12g}"
            + (f" +- {res.stderr:.3g}" if res.stderr is not None else "")
            + f", u = {ux:.12g}, deviation = {res.value - ux:.3e}"
        )
    if args.format == "structured":
        _emit(args, report_to_json({"manifest": man.to_dict(), "t": args.t,
                                    "x": x.tolist(), "results": results}) + "\n")
    else:
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _gaussian_bumps(dim: int):
    """Two fixed non-negative test bumps used by the kwapien suite."""
    c1 = np.zeros(dim)
    c2 = np.full(dim, 0.7)

    def bump1(pts):
        d = np.asarray(pts, float) - c1
        return np.exp(-0.5 * np.einsum("...i,...i->...", d, d))

    def bump2(pts):
        d = np.asarray(pts, float) - c2
        return 0.75 * np.exp(-np.einsum("...i,...i->...", d, d) / 1.8) + 0.25 * np.exp(
            -0.5 * np.einsum("...i,...i->...", d + c2, d + c2) / 0.49
        )

    return [("gaussian-bump", bump1), ("gaussian-mixture-bump", bump2)]


def _gate_unforced(report: VerificationReport, cand, spec_facts: dict) -> VerificationReport:
    """Convexity and quasi-constancy are theorem conclusions, forced only for
    non-negative candidates on operators with controllable noise and a
    spectral bound <= 0.  When those hypotheses fail, a failing check is
    informational (it often demonstrates sharpness), not a defect."""
    if report.verdict != FAIL:
        return report
    reasons = []
    if not cand.non_negative:
        reasons.append("candidate is sign-indefinite")
    if not spec_facts["s_nonpositive"]:
        reasons.append("drift spectrum has positive real part")
    if not spec_facts["hypoelliptic"]:
        reasons.append("operator is not hypoelliptic")
    if not reasons:
        return report
    return VerificationReport(
        report.check_name,
        report.parameters,
        statistic=report.statistic,
        threshold=report.threshold,
        verdict=NOT_APPLICABLE,
        witnesses=report.witnesses,
        reason=(
            "; ".join(reasons)
            + ", so the property is not forced here; measured statistic "
            + f"{report.statistic:.6g}"
        ),
    )


def cmd_verify(args, tol: Tolerances, overrides: dict) -> int:
    spec = load_operator(args.operator, tol)
    files = [args.operator] + ([args.candidates] if args.candidates else [])
    man = _manifest(args, "verify", files, overrides)
    dec = jordan_real_form(spec.A, tol)
    sr = spectral_bound(spec.A, tol)
    spec_facts = {
        "s_nonpositive": sr.classification in ("critical", "strictly-stable"),
        "hypoelliptic": kalman_rank(spec, tol).hypoelliptic,
    }
    if args.candidates:
        cands = load_candidates(args.candidates, spec.dim)
        exclusions = []
    else:
        cands = harmonic_catalog(spec, dec, tol)
        exclusions = affine_exclusions(spec, tol)
    suites = (
        ["residual", "invariance", "convexity", "kwapien", "quasi"]
        if args.suite == "all"
        else [args.suite]
    )
    probe = probe_grid(spec.dim)
    x_grid = ball_points(spec.dim, 5, 2.0, seed=args.seed)
    t_grid = [0.5, 1.0, 2.0]
    engine = _engine(args, tol, spec.dim)
    sections = []
    failures = 0
    numerical = 0
    for cand in cands:
        reports: list[VerificationReport] = []
        sc = self_check(cand, probe, tol)
        reports.append(sc)
        if sc.verdict == FAIL:
            failures += 1
            sections.append({"candidate": cand.name, "reports": [r.to_dict() for r in reports],
                             "verdict": {"verdict": "skipped", "reason": "self-consistency failed"}})
            continue
        if "residual" in suites:
            reports.append(residual(spec, cand, probe, tol))
        if "invariance" in suites:
            cand_engine = _engine(args, tol, spec.dim, cand)
            reports.append(semigroup_invariance(spec, cand, x_grid, t_grid, cand_engine, tol))
        if "convexity" in suites:
            pair_pts = ball_points(spec.dim, 24, 3.0, seed=args.seed + 1)
            pair_dirs = ball_points(spec.dim, 24, 2.0, seed=args.seed + 2)
            pairs = list(zip(pair_pts, pair_dirs))
            reports.append(_gate_unforced(
                convexity_check(cand, pairs, "midpoint", tol=tol), cand, spec_facts))
            reports.append(_gate_unforced(
                convexity_check(cand, pairs[:12], "supporting-plane",
                                spec=spec, t_grid=[0.5, 1.0, 2.0, 5.0], tol=tol),
                cand, spec_facts))
        if "kwapien" in suites:
            if kalman_rank(spec, tol).hypoelliptic:
                fns = _gaussian_bumps(spec.dim)
                if cand.non_negative:
                    fns.append((cand.name, cand.evaluate))
                xs = ball_points(spec.dim, 4, 1.5, seed=args.seed + 3)
                shifts = ball_points(spec.dim, 4, 1.0, seed=args.seed + 4)
                worst = None
                for fname, f in fns:
                    for xx, aa in zip(xs, shifts):
                        rep = kwapien_check(spec, f, xx, aa, 1.0, engine, tol)
                        if worst is None or (rep.statistic or 0) < (worst.statistic or 0):
                            worst = VerificationReport(
                                rep.check_name,
                                dict(rep.parameters, f=fname),
                                statistic=rep.statistic,
                                threshold=rep.threshold,
                                verdict=rep.verdict,
                                witnesses=rep.witnesses,
                            )
                reports.append(worst)
            else:
                reports.append(VerificationReport(
                    "kwapien-two-sided-shift", {}, verdict=NOT_APPLICABLE,
                    reason="operator is not hypoelliptic"))
        if "quasi" in suites:
            reports.append(_gate_unforced(
                quasi_constancy_check(cand, dec, samples=256, radius=5.0, tol=tol,
                                      seed=args.seed + 5), cand, spec_facts))
        resid_rep = next((r for r in reports if r.check_name == "residual"), None)
        if resid_rep is not None and resid_rep.verdict == PASS:
            verdict = liouville_verdict(spec, cand, reports, tol)
            vdoc = {
                "verdict": verdict.verdict,
                "theorem": verdict.theorem,
                "note": verdict.note,
                "conditions": jsonable(verdict.conditions),
            }
        else:
            vdoc = {
                "verdict": "not-harmonic" if resid_rep is not None else "not-evaluated",
                "theorem": None,
            }
        failures += sum(1 for r in reports if not r.ok)
        sections.append({
            "candidate": cand.name,
            "reports": [r.to_dict() for r in reports],
            "verdict": vdoc,
            "_pretty": reports,
        })

    doc = {
        "manifest": man.to_dict(),
        "operator": {"file": args.operator, "dim": spec.dim},
        "suite": args.suite,
        "excluded_directions": exclusions,
        "candidates": [
            {k: v for k, v in s.items() if k != "_pretty"} for s in sections
        ],
    }
    if args.format == "structured":
        _emit(args, report_to_json(doc) + "\n")
    else:
        lines = _manifest_lines(man)
        lines.append(f"operator: {args.operator} (dim {spec.dim}); suite: {args.suite}")
        if exclusions:
            lines.append("excluded directions (nonzero residual witness):")
            for e in exclusions:
                lines.append(
                    f"  {e['direction']}: Lu = {e['Lu']:.12g} != 0 at x = "
                    + "[" + ", ".join(f"{v:.6g}" for v in e["witness_point"]) + "]"
                )
        for s in sections:
            lines.append(f"candidate {s['candidate']}:")
            lines.extend("  " + ln for ln in render_pretty(s.get("_pretty", [])))
            v = s["verdict"]
            if v.get("theorem"):
                lines.append(f"  verdict: {v['verdict']} via {v['theorem']}")
            else:
                lines.append(f"  verdict: {v['verdict']}")
        total = sum(len(s["reports"]) for s in sections)
        lines.append(
            f"summary: {total} checks, {failures} failing; "
            + ("ALL PASS" if failures == 0 else "FAILURES PRESENT")
        )
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK if failures == 0 else EXIT_VERIFICATION


def cmd_simulate(args, tol: Tolerances, overrides: dict) -> int:
    spec = load_operator(args.operator, tol)
    man = _manifest(args, "simulate", [args.operator], overrides)
    x = _parse_vector(args.x, spec.dim, "--x")
    t = args.t
    if t <= 0:
        raise ArgumentError("simulate needs t > 0")
    n = args.samples
    from .operators import matrix_exp

    mean_exact = matrix_exp(spec.A, t, tol) @ x
    degenerate = np.max(np.abs(spec.Q)) == 0.0
    Qt = None if degenerate else gramian(spec, t, "blockExp", tol).Qt
    buf = io.StringIO()
    for line in _manifest_lines(man):
        buf.write(line + "\n")
    if args.path_steps:
        grid = np.linspace(0.0, t, args.path_steps + 1)
        n_paths = min(n, args.max_paths)
        ens = sample_path_ensemble(spec, x, grid, n_paths, args.seed, tol)
        write_csv(
            buf,
            ["time"] + [f"x{i + 1}" for i in range(spec.dim)] + ["pathIndex"],
            [
                [grid[k]] + list(ens[p, k]) + [p]
                for p in range(n_paths)
                for k in range(grid.size)
            ],
        )
        samples = ens[:, -1, :]
    else:
        samples = sample_endpoint(spec, x, t, n, args.seed, tol)
        write_csv(
            buf,
            ["sampleIndex"] + [f"x{i + 1}" for i in range(spec.dim)],
            [[i] + list(row) for i, row in enumerate(samples)],
        )
    m = samples.shape[0]
    emp_mean = samples.mean(axis=0)
    summary = [f"# n = {m}, t = {t:g}"]
    if degenerate:
        dev = float(np.max(np.abs(samples - mean_exact)))
        summary.append(f"# deterministic dynamics (Q=0): max |X_t - e^(tA)x| = {dev:.3e}")
    else:
        se_mean = np.sqrt(np.diag(Qt) / m)
        z_mean = (emp_mean - mean_exact) / np.where(se_mean > 0, se_mean, 1.0)
        emp_cov = np.cov(samples.T, ddof=1).reshape(spec.dim, spec.dim)
        se_cov = np.sqrt((np.outer(np.diag(Qt), np.diag(Qt)) + Qt**2) / m)
        z_cov = (emp_cov - Qt) / np.where(se_cov > 0, se_cov, 1.0)
        summary.append(
            "# mean z-scores vs e^(tA)x: ["
            + ", ".join(f"{z:.3f}" for z in z_mean)
            + f"], max |z| = {np.max(np.abs(z_mean)):.3f}"
        )
        summary.append(f"# covariance z-scores vs Q_t: max |z| = {np.max(np.abs(z_cov)):.3f}")
    text = buf.getvalue() + "\n".join(summary) + "\n"
    _emit(args, text)
    return EXIT_OK


def cmd_counterexample(args, tol: Tolerances, overrides: dict) -> int:
    from .candidates import counterexample_1d
    from .operators import OperatorSpec

    man = _manifest(args, "counterexample", [], overrides)
    cand = counterexample_1d(args.a, args.q)
    spec = OperatorSpec([[args.q]], [[args.a]])
    grid = np.linspace(-5.0, 5.0, 101)[:, None]
    rep = residual(spec, cand, grid, tol)
    rng = float(np.sqrt(np.pi * args.q / args.a))
    lines = _manifest_lines(man)
    lines.append(
        f"bounded nonconstant solution for the 1D operator (q/2) u'' + a x u', a={args.a:g}, q={args.q:g}"
    )
    lines.append(f"range sup u - inf u = {rng:.12g}; 0 < u < {rng:.12g}")
    lines.append(f"max |Lu| on [-5,5] grid: {rep.statistic:.3e} (threshold {rep.threshold:.3e})")
    if args.out:
        save_candidates(args.out, [cand])
        lines.append(f"candidate written to {args.out}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if rep.verdict == PASS else EXIT_VERIFICATION


# ----------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="oulab",
        description=(
            "Numerical laboratory for degenerate Ornstein-Uhlenbeck operators. "
            "Any tolerance can be overridden with --tol.<name> <value>."
        ),
    )
    p.add_argument("--version", action="version", version=f"oulab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--format", choices=["pretty", "structured", "csv"], default="pretty")
        sp.add_argument("--out", help="write output to this file instead of stdout")
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="Monte Carlo worker shards (affects the sample streams)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--samples", type=int, default=100_000)
            sp.add_argument("--engine", choices=["auto", "quadrature", "mc"], default="auto")

    sp = sub.add_parser("analyze", help="structural report: controllability, spectrum, taxonomy")
    sp.add_argument("operator")
    common(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("jordan", help="real Jordan decomposition export")
    sp.add_argument("operator")
    common(sp)
    sp.set_defaults(func=cmd_jordan)

    sp = sub.add_parser("decay", help="table of ||Q_t^{-1/2} e^{tA}|| over times")
    sp.add_argument("operator")
    sp.add_argument("--times", default="1:100:1", help="comma list or start:stop[:step]")
    common(sp)
    sp.set_defaults(func=cmd_decay)

    sp = sub.add_parser("semigroup", help="evaluate P_t u(x) for candidates")
    sp.add_argument("operator")
    sp.add_argument("candidates")
    sp.add_argument("--x", required=True, help="evaluation point, comma separated")
    sp.add_argument("--t", type=float, required=True)
    common(sp)
    sp.set_defaults(func=cmd_semigroup)

    sp = sub.add_parser("verify", help="run verification suites on candidates")
    sp.add_argument("operator")
    sp.add_argument("candidates", nargs="?", default=None,
                    help="candidate file; omitted = generated catalog + exclusions")
    sp.add_argument("--suite", choices=["residual", "invariance", "convexity",
                                        "kwapien", "quasi", "all"], default="all")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("simulate", help="exact endpoint/path sampling with moment summary")
    sp.add_argument("operator")
    sp.add_argument("--x", required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--path-steps", type=int, default=0,
                    help="dump paths on a grid with this many steps instead of endpoints")
    sp.add_argument("--max-paths", type=int, default=10)
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("counterexample", help="emit the bounded nonconstant 1D solution")
    sp.add_argument("--a", type=float, default=1.0)
    sp.add_argument("--q", type=float, default=1.0)
    common(sp, seed=False)  # --out receives the candidate file
    sp.set_defaults(func=cmd_counterexample)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv, overrides = _extract_tol_overrides(argv)
        tol = DEFAULT_TOLERANCES.replace(**overrides)
    except (ArgumentError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args, tol, overrides)
    except (SpecFileError, ArgumentError, PreconditionError, UnsupportedEngineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OULabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION


if __name__ == "__main__":
    sys.exit(main())
