"""Verification of harmonic-function candidates and Liouville verdicts.

A candidate u is checked against the operator through its residual
L u = (1/2) tr(Q D^2 u) + <A x, D u>, through invariance under the
transition semigroup, through midpoint convexity and the propagated
supporting-plane inequality, and through the quasi-constancy structure of
the canonical coordinates.  The verdict assembler decides which
constancy theorem's machine-checkable hypotheses hold for the operator
and the candidate's growth class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .candidates import (
    HarmonicCandidate,
    affine_candidate,
    constant_candidate,
    counterexample_1d,
    quadratic_candidate,
)
from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import ArgumentError, PreconditionError
from .jordan import (
    NILPOTENT,
    PURE_ROTATION,
    ROTATION_NILPOTENT,
    STABLE,
    ZERO_SIMPLE,
    JordanDecomposition,
    jordan_real_form,
)
from .operators import OperatorSpec, kalman_rank, matrix_exp, spectral_bound
from .reports import FAIL, INCONCLUSIVE, PASS, VerificationReport
from .sampling import ball_points, probe_grid
from .semigroup import MonteCarlo, Quadrature, semigroup_apply

__all__ = [
    "residual",
    "semigroup_invariance",
    "convexity_check",
    "harmonic_catalog",
    "affine_exclusions",
    "gradient_growth_check",
    "liouville_verdict",
    "LiouvilleVerdict",
    "THEOREMS",
    "counterexample_1d",
]


def residual(
    spec: OperatorSpec,
    u: HarmonicCandidate,
    points,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> VerificationReport:
    """max |L u| over the probe points; pass iff below resid_tol * (1 + max|u|)."""
    pts = np.atleast_2d(np.asarray(points, float))
    if not np.all(np.isfinite(pts)):
        raise ArgumentError("probe points must be finite")
    vals = np.asarray(u.evaluate(pts), float)
    grads = np.atleast_2d(u.gradient(pts))
    hess = u.hessian(pts).reshape(len(pts), spec.dim, spec.dim)
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(grads)) and np.all(np.isfinite(hess))):
        bad = int(np.argmax(~np.isfinite(vals + grads.sum(1))))
        raise ArgumentError(f"candidate derivatives are non-finite at {pts[bad].tolist()}")
    lu = 0.5 * np.einsum("ij,kji->k", spec.Q, hess) + np.einsum(
        "ki,ki->k", pts @ spec.A.T, grads
    )
    stat = float(np.max(np.abs(lu)))
    threshold = tol.resid_tol * (1.0 + float(np.max(np.abs(vals))))
    i = int(np.argmax(np.abs(lu)))
    return VerificationReport(
        "residual",
        {"points": len(pts), "resid_tol": tol.resid_tol, "candidate": u.name},
        statistic=stat,
        threshold=threshold,
        verdict=PASS if stat <= threshold else FAIL,
        witnesses=[{"point": pts[i].tolist(), "Lu": float(lu[i])}],
    )


def semigroup_invariance(
    spec: OperatorSpec,
    u: HarmonicCandidate,
    x_grid,
    t_grid,
    engine=Quadrature(),
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> VerificationReport:
    """Check P_t u = u on a grid of points and times.

    Monte Carlo points pass when |P_t u(x) - u(x)| <= 4 * stderr; the
    quadrature engine uses the fixed quad_tol * (1 + |u(x)|) threshold.
    A diverging Monte Carlo average yields an inconclusive verdict.
    """
    if u.growth.kind not in ("bounded", "sublinear", "exponential"):
        return VerificationReport(
            "semigroup-invariance",
            {"candidate": u.name},
            verdict=INCONCLUSIVE,
            reason=f"growth kind {u.growth.kind!r} is outside the exponential class",
        )
    xs = np.atleast_2d(np.asarray(x_grid, float))
    worst = -np.inf
    witnesses = []
    params = {
        "candidate": u.name,
        "points": len(xs),
        "times": list(map(float, t_grid)),
        "engine": repr(engine),
    }
    for it, t in enumerate(t_grid):
        for ix, x in enumerate(xs):
            if isinstance(engine, MonteCarlo):
                eng = MonteCarlo(n=engine.n, seed=engine.seed + 7919 * it + 104729 * ix,
                                 workers=engine.workers)
            else:
                eng = engine
            res = semigroup_apply(spec, u.evaluate, x, float(t), eng, tol)
            target = float(np.asarray(u.evaluate(x[None, :])).ravel()[0])
            dev = abs(res.value - target)
            if res.stderr is not None:
                if not np.isfinite(res.value):
                    return VerificationReport(
                        "semigroup-invariance",
                        params,
                        verdict=INCONCLUSIVE,
                        reason=f"Monte Carlo average diverged at x={x.tolist()}, t={t}",
                    )
                allowance = 4.0 * res.stderr
            else:
                allowance = tol.quad_tol * (1.0 + abs(target))
            excess = dev - allowance
            if excess > worst:
                worst = excess
                witnesses = [
                    {
                        "x": x.tolist(),
                        "t": float(t),
                        "P_t_u": res.value,
                        "u": target,
                        "allowance": allowance,
                    }
                ]
    return VerificationReport(
        "semigroup-invariance",
        params,
        statistic=float(worst),
        threshold=0.0,
        verdict=PASS if worst <= 0.0 else FAIL,
        witnesses=witnesses,
    )


def convexity_check(
    u: HarmonicCandidate,
    point_pairs,
    mode: str = "midpoint",
    spec: OperatorSpec | None = None,
    t_grid=None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> VerificationReport:
    """Midpoint convexity or the propagated supporting-plane inequality.

    midpoint: (u(x+a) + u(x-a))/2 - u(x) >= 0 over the pairs.
    supporting-plane: u(x) >= u(x0) - Du(x0).x0 + Du(x0).e^{tA} x over the
    (x0, x) pairs and the time grid (requires ``spec``).
    """
    pairs = [(np.asarray(p, float).ravel(), np.asarray(q, float).ravel()) for p, q in point_pairs]
    if mode == "midpoint":
        margins = []
        for x, a in pairs:
            m = 0.5 * (
                float(u.evaluate((x + a)[None, :])[0])
                + float(u.evaluate((x - a)[None, :])[0])
            ) - float(u.evaluate(x[None, :])[0])
            margins.append((m, x, a))
        params = {"candidate": u.name, "pairs": len(pairs), "mode": mode}
    elif mode == "supporting-plane":
        if spec is None or t_grid is None:
            raise ArgumentError("supporting-plane mode needs spec and t_grid")
        margins = []
        for x0, x in pairs:
            u0 = float(u.evaluate(x0[None, :])[0])
            g0 = np.asarray(u.gradient(x0[None, :])).ravel()
            ux = float(u.evaluate(x[None, :])[0])
            for t in t_grid:
                rhs = u0 - float(g0 @ x0) + float(g0 @ (matrix_exp(spec.A, float(t), tol) @ x))
                margins.append((ux - rhs, x0, x))
        params = {
            "candidate": u.name,
            "pairs": len(pairs),
            "mode": mode,
            "times": list(map(float, t_grid)),
        }
    else:
        raise ArgumentError(f"unknown convexity mode {mode!r}")

    vals = np.array([m[0] for m in margins])
    scale = 1.0 + max(
        abs(float(u.evaluate(x[None, :])[0])) for x, _ in pairs
    )
    stat = float(np.min(vals))
    threshold = -tol.conv_tol * scale
    i = int(np.argmin(vals))
    _, wx, wa = margins[i]
    return VerificationReport(
        "convexity-" + mode,
        params,
        statistic=stat,
        threshold=threshold,
        verdict=PASS if stat >= threshold else FAIL,
        witnesses=[{"x": wx.tolist(), "second": wa.tolist(), "margin": stat}],
    )


# ----------------------------------------------------------------------
# catalog


def _null_space(M: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
    _, s, Vh = np.linalg.svd(M)
    if s.size == 0:
        return np.eye(M.shape[1])
    cut = s[0] * rel_tol
    k = int(np.count_nonzero(s <= cut)) + (M.shape[1] - len(s))
    return Vh[len(Vh) - k:].T if k else np.zeros((M.shape[1], 0))


def _sym_basis(n: int):
    basis = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            basis.append(E)
    return basis


def _invariant_quadratics(spec: OperatorSpec) -> list[np.ndarray]:
    """Symmetric M with A^T M + M A = 0 and tr(Q M) = 0, as a basis list."""
    n = spec.dim
    basis = _sym_basis(n)
    L = np.column_stack([(spec.A.T @ E + E @ spec.A).ravel() for E in basis])
    null = _null_space(L)
    if null.shape[1] == 0:
        return []
    # add the trace constraint within the kernel
    traces = np.array(
        [np.sum(spec.Q * sum(c * E for c, E in zip(col, basis))) for col in null.T]
    )
    tnull = _null_space(traces[None, :])
    out = []
    for coeffs in (null @ tnull).T:
        M = sum(c * E for c, E in zip(coeffs, basis))
        norm = np.linalg.norm(M)
        if norm > 1e-12:
            out.append(M / norm)
    return out


def harmonic_catalog(
    spec: OperatorSpec,
    dec: JordanDecomposition | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> list[HarmonicCandidate]:
    """Test functions adapted to the operator, all passing the residual check.

    Constants; affine u = <b, x> for b spanning ker(A^T); invariant
    quadratics u = x^T M x with A^T M + M A = 0 and tr(Q M) = 0; and, for
    real expanding eigenvalues of the drift with noise in the left
    eigendirection, the lifted bounded nonconstant 1D solution.
    """
    n = spec.dim
    out = [constant_candidate(1.0, n)]
    for b in _null_space(spec.A.T).T:
        out.append(affine_candidate(b))
    for M in _invariant_quadratics(spec):
        out.append(quadratic_candidate(M))
    # expanding real eigendirections of A^T carry a bounded nonconstant solution
    sr = spectral_bound(spec.A, tol)
    thresh = tol.stability_tol * (1.0 + np.linalg.norm(spec.A, 2))
    if sr.spectral_bound > thresh:
        w, V = np.linalg.eig(spec.A.T)
        for i in range(n):
            if abs(w[i].imag) <= thresh and w[i].real > thresh:
                b = np.real(V[:, i])
                nb = np.linalg.norm(b)
                if nb < 1e-12:
                    continue
                b = b / nb
                qb = float(b @ spec.Q @ b)
                if qb > thresh:
                    out.append(counterexample_1d(float(w[i].real), qb, direction=b))
    # the contract: every returned candidate passes the residual check
    pts = probe_grid(n)
    return [u for u in out if residual(spec, u, pts, tol).verdict == PASS]


def affine_exclusions(spec: OperatorSpec, tol: Tolerances = DEFAULT_TOLERANCES) -> list[dict]:
    """Coordinate directions that fail to be harmonic, with witnesses.

    For u = x_i the residual is <A x, e_i>; any direction with a nonzero
    row of A is excluded, and the witness point exhibits the nonzero value.
    """
    out = []
    pts = probe_grid(spec.dim)
    for i in range(spec.dim):
        row = spec.A[i, :]
        if np.linalg.norm(row) <= tol.resid_tol:
            continue
        vals = pts @ row
        j = int(np.argmax(np.abs(vals)))
        out.append(
            {
                "direction": f"x{i + 1}",
                "witness_point": pts[j].tolist(),
                "Lu": float(vals[j]),
            }
        )
    return out


def gradient_growth_check(
    u: HarmonicCandidate,
    radii,
    tol: Tolerances = DEFAULT_TOLERANCES,
    directions: int = 64,
    seed: int = 0,
) -> VerificationReport:
    """Fit max |Du| on spheres against c * exp(c r).

    Passes when some c <= c_max explains every sampled radius; the fitted
    (smallest feasible) c is reported.  Working in logs keeps overflowing
    gradients honest: an infinite sample can never be explained.
    """
    if u.growth.kind != "exponential":
        return VerificationReport(
            "gradient-growth",
            {"candidate": u.name},
            verdict=INCONCLUSIVE,
            reason=f"growth certificate is {u.growth.kind}, check targets the exponential class",
        )
    radii = [float(r) for r in radii]
    dirs = ball_points(u.dim, directions, 1.0, seed)
    norms = np.linalg.norm(dirs, axis=1)
    norms[norms == 0] = 1.0
    dirs = dirs / norms[:, None]
    log_g = []
    for r in radii:
        with np.errstate(over="ignore"):
            g = np.linalg.norm(np.atleast_2d(u.gradient(dirs * r)), axis=1)
        gmax = float(np.max(g))
        log_g.append(np.log(gmax) if gmax > 0 else -np.inf)

    def explains(c: float) -> bool:
        return all(
            lg <= np.log(c) + c * r for lg, r in zip(log_g, radii) if np.isfinite(lg)
        ) and not any(np.isinf(lg) and lg > 0 for lg in log_g)

    if any(np.isposinf(lg) for lg in log_g):
        fitted = np.inf
    elif explains(tol.c_max):
        lo, hi = 1e-12, tol.c_max
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if explains(mid):
                hi = mid
            else:
                lo = mid
        fitted = hi
    else:
        fitted = np.inf
    return VerificationReport(
        "gradient-growth",
        {"candidate": u.name, "radii": radii, "directions": directions, "c_max": tol.c_max},
        statistic=float(fitted),
        threshold=tol.c_max,
        verdict=PASS if fitted <= tol.c_max else FAIL,
        witnesses=[{"radius": r, "log_max_grad": float(lg)} for r, lg in zip(radii, log_g)],
    )


# ----------------------------------------------------------------------
# verdict assembly


THEOREMS = {
    "bounded-liouville": (
        "hypoelliptic operator: bounded harmonic functions are constant "
        "exactly when no drift eigenvalue has positive real part"
    ),
    "bounded-group-liouville": (
        "positive definite diffusion with a bounded drift group (drift "
        "diagonalizable, purely imaginary spectrum): non-negative harmonic "
        "functions are constant, no growth restriction"
    ),
    "sublinear-liouville": (
        "hypoelliptic operator, drift spectrum in the closed left half-plane: "
        "non-negative harmonic functions of sublinear growth are constant"
    ),
    "exponential-growth-liouville": (
        "positive definite diffusion, drift spectrum in the closed left "
        "half-plane: non-negative harmonic functions of at most exponential "
        "growth are constant"
    ),
    "quasi-constancy-reduction": (
        "under the exponential-growth hypotheses, non-negative harmonic "
        "functions are quasi-constant across nilpotent and rotation chains, "
        "which reduces constancy to the bounded-group case"
    ),
}


@dataclass(frozen=True)
class LiouvilleVerdict:
    verdict: str            # constant-forced | counterexample | outside-theorems
    theorem: str | None     # identifier from THEOREMS
    conditions: dict        # machine-checked structural facts
    note: str


def _q_positive_definite(spec: OperatorSpec, tol: Tolerances) -> bool:
    w = np.linalg.eigvalsh(0.5 * (spec.Q + spec.Q.T))
    return bool(w[0] > tol.stability_tol * max(1.0, w[-1]))


def _bounded_group(dec: JordanDecomposition) -> bool:
    if dec.unstable or not dec.blocks:
        return False
    return all(b.kind in (ZERO_SIMPLE, PURE_ROTATION) for b in dec.blocks)


def liouville_verdict(
    spec: OperatorSpec,
    u: HarmonicCandidate,
    evidence: list[VerificationReport],
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> LiouvilleVerdict:
    """Apply the weakest constancy theorem whose hypotheses are checkable.

    The checked facts are operator-level (positive definiteness of Q, the
    controllability rank, the sign of the spectral bound, boundedness of
    the drift group read off the block taxonomy) plus the candidate's
    growth certificate.  A constant-forced verdict is a class statement:
    the cited theorem forces constancy of non-negative harmonic functions
    in the candidate's growth class on this operator.  ``evidence`` must
    contain a passing residual report for the candidate.
    """
    resid_reports = [r for r in evidence if r.check_name == "residual"]
    if not resid_reports:
        raise PreconditionError("evidence must include a residual report")
    if not any(r.verdict == PASS for r in resid_reports):
        raise PreconditionError(
            "conflicting evidence: the candidate does not satisfy L u = 0, "
            "no Liouville verdict applies"
        )
    quasi_pass = any(
        r.check_name == "quasi-constancy" and r.verdict == PASS for r in evidence
    )
    sr = spectral_bound(spec.A, tol)
    kal = kalman_rank(spec, tol).hypoelliptic
    qpd = _q_positive_definite(spec, tol)
    try:
        dec = jordan_real_form(spec.A, tol)
        bgroup = _bounded_group(dec)
    except Exception:
        bgroup = False
    s_nonpos = sr.classification in ("critical", "strictly-stable")
    conditions = {
        "q_positive_definite": qpd,
        "hypoelliptic": kal,
        "spectral_bound": sr.spectral_bound,
        "spectral_bound_nonpositive": s_nonpos,
        "bounded_drift_group": bgroup,
        "growth_kind": u.growth.kind,
        "non_negative_declared": u.non_negative,
    }
    if s_nonpos:
        order = [
            ("bounded-liouville", kal and u.growth.kind == "bounded"),
            ("bounded-group-liouville", qpd and bgroup),
            ("sublinear-liouville", kal and u.growth.kind == "sublinear"),
            ("exponential-growth-liouville", qpd and u.growth.kind == "exponential"),
            ("quasi-constancy-reduction", qpd and quasi_pass),
        ]
        for name, fired in order:
            if fired:
                return LiouvilleVerdict(
                    verdict="constant-forced",
                    theorem=name,
                    conditions=conditions,
                    note=THEOREMS[name],
                )
        return LiouvilleVerdict(
            verdict="outside-theorems",
            theorem=None,
            conditions=conditions,
            note="no implemented constancy theorem covers this operator/growth pair",
        )
    # expanding drift: a residual-passing nonconstant candidate witnesses
    # sharpness of the spectral condition
    pts = probe_grid(spec.dim, radii=(1.0, 5.0))
    vals = np.asarray(u.evaluate(pts), float)
    rng_u = float(np.max(vals) - np.min(vals))
    conditions["candidate_range_on_probes"] = rng_u
    if rng_u > tol.nonconst_tol * (1.0 + float(np.max(np.abs(vals)))):
        return LiouvilleVerdict(
            verdict="counterexample",
            theorem="bounded-liouville",
            conditions=conditions,
            note=(
                "drift spectrum crosses into the right half-plane and the "
                "candidate is a nonconstant harmonic function, matching the "
                "sharpness direction of the bounded-function theorem"
            ),
        )
    return LiouvilleVerdict(
        verdict="outside-theorems",
        theorem=None,
        conditions=conditions,
        note="drift spectrum has positive real part; no constancy theorem applies",
    )
