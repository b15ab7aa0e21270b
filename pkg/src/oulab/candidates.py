"""Harmonic-function candidates with exact derivative callbacks.

A candidate is a scalar function together with closed-form gradient and
Hessian, a declared growth certificate, and a declared (spot-checked,
never proven) non-negativity flag.  All callbacks are vectorized over
leading axes: evaluate maps (..., N) -> (...,), gradient -> (..., N),
hessian -> (..., N, N).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import ArgumentError
from .operators import GrowthCertificate
from .reports import FAIL, PASS, VerificationReport

__all__ = [
    "HarmonicCandidate",
    "constant_candidate",
    "affine_candidate",
    "quadratic_candidate",
    "counterexample_1d",
    "self_check",
]


@dataclass(frozen=True)
class HarmonicCandidate:
    name: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    growth: GrowthCertificate
    non_negative: bool
    dim: int
    meta: dict = field(default_factory=dict)


def constant_candidate(value: float, dim: int) -> HarmonicCandidate:
    """u(x) = value."""
    value = float(value)

    def ev(x):
        x = np.asarray(x, float)
        return np.full(x.shape[:-1], value)

    def gr(x):
        x = np.asarray(x, float)
        return np.zeros(x.shape)

    def he(x):
        x = np.asarray(x, float)
        return np.zeros(x.shape + (dim,))

    return HarmonicCandidate(
        name=f"constant({value:g})",
        evaluate=ev,
        gradient=gr,
        hessian=he,
        growth=GrowthCertificate("bounded", c0=abs(value)),
        non_negative=value >= 0,
        dim=dim,
        meta={"type": "constant", "value": value},
    )


def affine_candidate(b, offset: float = 0.0) -> HarmonicCandidate:
    """u(x) = <b, x> + offset."""
    b = np.asarray(b, float).ravel()
    dim = b.size
    offset = float(offset)

    def ev(x):
        return np.asarray(x, float) @ b + offset

    def gr(x):
        x = np.asarray(x, float)
        return np.broadcast_to(b, x.shape).copy()

    def he(x):
        x = np.asarray(x, float)
        return np.zeros(x.shape + (dim,))

    c0 = max(1.0, float(np.linalg.norm(b)) + abs(offset))
    label = "[" + ", ".join(f"{v:g}" for v in b) + "]"
    if offset:
        label += f" + {offset:g}"
    return HarmonicCandidate(
        name=f"affine({label})",
        evaluate=ev,
        gradient=gr,
        hessian=he,
        growth=GrowthCertificate("exponential", c0=c0),
        non_negative=bool(np.all(b == 0) and offset >= 0),
        dim=dim,
        meta={"type": "affine", "b": b.tolist(), "offset": offset},
    )


def quadratic_candidate(M) -> HarmonicCandidate:
    """u(x) = x^T M x with symmetric M."""
    M = np.asarray(M, float)
    M = 0.5 * (M + M.T)
    dim = M.shape[0]

    def ev(x):
        x = np.asarray(x, float)
        return np.einsum("...i,ij,...j->...", x, M, x)

    def gr(x):
        return 2.0 * (np.asarray(x, float) @ M)

    def he(x):
        x = np.asarray(x, float)
        return np.broadcast_to(2.0 * M, x.shape + (dim,)).copy()

    norm_m = float(np.linalg.norm(M, 2))
    eigs = np.linalg.eigvalsh(M)
    rows = "; ".join(
        "[" + ", ".join(f"{v:g}" for v in row) + "]" for row in M
    )
    return HarmonicCandidate(
        name=f"quadratic({rows})",
        evaluate=ev,
        gradient=gr,
        hessian=he,
        growth=GrowthCertificate("exponential", c0=max(1.0, (2.0 * norm_m) ** (1.0 / 3.0))),
        non_negative=bool(eigs[0] >= -1e-12 * max(1.0, abs(eigs[-1]))),
        dim=dim,
        meta={"type": "quadratic", "M": M.tolist()},
    )


def counterexample_1d(a: float, q: float, direction=None) -> HarmonicCandidate:
    """Bounded nonconstant function killed by the 1D operator with an
    expanding drift:  (q/2) u'' + a x u' = 0,  a, q > 0.

    u(x) = integral_0^x exp(-a y^2 / q) dy + sqrt(pi q / a) / 2, which is
    strictly increasing with range (0, sqrt(pi q / a)).  With ``direction``
    equal to a unit vector b the candidate lifts to u(<b, x>) in dimension
    len(b); it is harmonic for any (Q, A) with A^T b = a b and b^T Q b = q.
    """
    if not (a > 0 and q > 0) or not (np.isfinite(a) and np.isfinite(q)):
        raise ArgumentError("counterexample_1d needs a > 0 and q > 0")
    if direction is None:
        direction = np.array([1.0])
    b = np.asarray(direction, float).ravel()
    dim = b.size
    alpha = np.sqrt(a / q)              # u'(s) = exp(-(alpha s)^2)
    amp = 0.5 * np.sqrt(np.pi) / alpha  # sqrt(pi q / a) / 2

    def s_of(x):
        return np.asarray(x, float) @ b

    def ev(x):
        s = s_of(x)
        return amp * (1.0 + special.erf(alpha * s))

    def gr(x):
        s = s_of(x)
        return np.exp(-((alpha * s) ** 2))[..., None] * b

    def he(x):
        s = s_of(x)
        w = -2.0 * alpha**2 * s * np.exp(-((alpha * s) ** 2))
        return w[..., None, None] * np.outer(b, b)

    return HarmonicCandidate(
        name=f"bounded-1d(a={a:g}, q={q:g})",
        evaluate=ev,
        gradient=gr,
        hessian=he,
        growth=GrowthCertificate("bounded", c0=2 * amp),
        non_negative=True,
        dim=dim,
        meta={"type": "bounded-1d", "a": float(a), "q": float(q), "direction": b.tolist()},
    )


def self_check(
    u: HarmonicCandidate,
    points: np.ndarray,
    tol: Tolerances = DEFAULT_TOLERANCES,
    h: float = 1e-5,
) -> VerificationReport:
    """Cross-check the exact derivatives against central differences.

    Gradient must match to 1e-6 relative, the Hessian to 1e-4; a declared
    non-negative candidate must be >= 0 at every probe point.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    n = u.dim
    grads = np.atleast_2d(u.gradient(pts))
    hess = u.hessian(pts).reshape(len(pts), n, n)
    scale_g = 1.0 + np.max(np.abs(grads))
    scale_h = 1.0 + np.max(np.abs(hess))

    worst = 0.0
    witness = None
    fd_grad = np.zeros_like(grads)
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        fd_grad[:, j] = (u.evaluate(pts + e) - u.evaluate(pts - e)) / (2 * h)
        gd = (np.atleast_2d(u.gradient(pts + e)) - np.atleast_2d(u.gradient(pts - e))) / (2 * h)
        err_h = np.max(np.abs(gd - hess[:, :, j])) / scale_h
        if err_h / 1e-4 > worst:
            worst = err_h / 1e-4
            witness = {"kind": "hessian", "column": j, "relative_error": float(err_h)}
    err_g = np.max(np.abs(fd_grad - grads), axis=1) / scale_g
    if np.max(err_g) / 1e-6 > worst:
        i = int(np.argmax(err_g))
        worst = float(np.max(err_g)) / 1e-6
        witness = {"kind": "gradient", "point": pts[i].tolist(), "relative_error": float(np.max(err_g))}

    asym = np.max(np.abs(hess - np.swapaxes(hess, 1, 2)))
    if asym > 1e-10 * scale_h:
        return VerificationReport(
            "candidate-self-consistency",
            {"points": len(pts), "fd_step": h},
            statistic=float(asym),
            threshold=1e-10 * scale_h,
            verdict=FAIL,
            witnesses=[{"kind": "hessian-asymmetry"}],
        )
    if u.non_negative:
        vals = u.evaluate(pts)
        vmin = float(np.min(vals))
        if vmin < -1e-12 * (1.0 + np.max(np.abs(vals))):
            i = int(np.argmin(vals))
            return VerificationReport(
                "candidate-self-consistency",
                {"points": len(pts), "fd_step": h},
                statistic=vmin,
                threshold=0.0,
                verdict=FAIL,
                witnesses=[{"kind": "negative-value", "point": pts[i].tolist(), "value": vmin}],
            )
    return VerificationReport(
        "candidate-self-consistency",
        {"points": len(pts), "fd_step": h},
        statistic=float(worst),
        threshold=1.0,
        verdict=PASS if worst <= 1.0 else FAIL,
        witnesses=[witness] if witness else [],
    )
