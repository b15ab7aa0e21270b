"""Operator data model and deterministic matrix analysis.

The central object is the pair (Q, A): a symmetric non-negative diffusion
matrix and a real drift matrix, defining the second-order operator

    L = (1/2) tr(Q D^2) + <A x, D>.

This module holds the pair itself plus the purely linear-algebraic layer:
controllability (Kalman) rank, spectral bound, matrix exponentials, and
linear changes of variables.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass

import numpy as np
import scipy.linalg

from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import (
    ArgumentError,
    InvalidOperatorError,
    NumericalFailureError,
    RangeOverflowError,
)

__all__ = [
    "OperatorSpec",
    "SpectralReport",
    "KalmanReport",
    "GrowthCertificate",
    "kalman_rank",
    "spectral_bound",
    "matrix_exp",
    "conjugate_operator",
    "scale_diffusion",
    "sym_sqrt_psd",
]

_EPS = np.finfo(float).eps


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _square(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ArgumentError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ArgumentError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Validated diffusion/drift pair (Q, A) of a common dimension.

    Q must be symmetric and non-negative definite within the tolerances of
    the supplied record; both matrices are stored as read-only copies, so
    instances are safe to share across threads.
    """

    Q: np.ndarray
    A: np.ndarray
    tol: InitVar[Tolerances] = DEFAULT_TOLERANCES

    def __post_init__(self, tol: Tolerances):
        Q = _square(self.Q, "Q")
        A = _square(self.A, "A")
        if Q.shape != A.shape:
            raise InvalidOperatorError(
                f"Q and A dimensions differ: {Q.shape} vs {A.shape}"
            )
        if Q.shape[0] < 1:
            raise InvalidOperatorError("dimension must be at least 1")
        scale = np.max(np.abs(Q))
        if scale > 0:
            asym = np.max(np.abs(Q - Q.T))
            if asym > tol.sym_tol * scale:
                raise InvalidOperatorError(
                    f"Q is not symmetric: max |Q_ij - Q_ji| = {asym:.3e} "
                    f"exceeds {tol.sym_tol:.1e} * max|Q| = {tol.sym_tol * scale:.3e}"
                )
            w = np.linalg.eigvalsh(0.5 * (Q + Q.T))
            lam_max = max(np.max(np.abs(w)), np.finfo(float).tiny)
            if w[0] < -tol.psd_tol * lam_max:
                raise InvalidOperatorError(
                    f"Q is not non-negative definite: min eigenvalue {w[0]:.3e}"
                )
        object.__setattr__(self, "Q", _freeze(Q))
        object.__setattr__(self, "A", _freeze(A))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def __repr__(self) -> str:  # arrays are small at desk scale
        return f"OperatorSpec(dim={self.dim}, Q={self.Q.tolist()}, A={self.A.tolist()})"


@dataclass(frozen=True, eq=False)
class SpectralReport:
    """Spectrum of the drift and its stability classification."""

    eigenvalues: np.ndarray
    spectral_bound: float
    classification: str  # strictly-stable | critical | unstable


@dataclass(frozen=True, eq=False)
class KalmanReport:
    """Numerical rank of [sqrt(Q), A sqrt(Q), ..., A^{N-1} sqrt(Q)]."""

    rank: int
    hypoelliptic: bool
    controllability_matrix: np.ndarray


@dataclass(frozen=True)
class GrowthCertificate:
    """Declared growth class of a scalar function.

    kind "bounded":     |u| <= c0 everywhere.
    kind "sublinear":   |u(x)| <= c0 * (1 + |x|^delta) with 0 <= delta < 1.
    kind "exponential": |u(x)| <= c0 * exp(c0 |x|) with c0 > 0.
    """

    kind: str
    c0: float = 1.0
    delta: float | None = None

    def __post_init__(self):
        if self.kind not in ("bounded", "sublinear", "exponential"):
            raise ArgumentError(f"unknown growth kind {self.kind!r}")
        if self.c0 < 0 or not np.isfinite(self.c0):
            raise ArgumentError("growth constant c0 must be finite and >= 0")
        if self.kind == "sublinear":
            if self.delta is None or not (0.0 <= self.delta < 1.0):
                raise ArgumentError("sublinear growth needs 0 <= delta < 1")
        if self.kind == "exponential" and self.c0 <= 0:
            raise ArgumentError("exponential growth needs c0 > 0")


def sym_sqrt_psd(Q, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Symmetric non-negative square root of a symmetric PSD matrix.

    Eigenvalues within ``psd_tol`` of zero from below are clamped to zero;
    more negative ones raise :class:`InvalidOperatorError`.
    """
    Q = _square(Q, "Q")
    if np.max(np.abs(Q - Q.T)) > tol.sym_tol * max(np.max(np.abs(Q)), 1e-300):
        raise InvalidOperatorError("matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (Q + Q.T))
    lam_max = max(np.max(np.abs(w)), np.finfo(float).tiny)
    if w[0] < -tol.psd_tol * lam_max:
        raise InvalidOperatorError(
            f"matrix is indefinite: min eigenvalue {w[0]:.3e}"
        )
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


def kalman_rank(spec: OperatorSpec, tol: Tolerances = DEFAULT_TOLERANCES) -> KalmanReport:
    """Numerical controllability rank of the pair (sqrt(Q), A).

    The block matrix [sqrt(Q), A sqrt(Q), ..., A^{N-1} sqrt(Q)] has full row
    rank exactly when the operator is hypoelliptic.  Singular values below
    ``N * eps * sigma_max * rank_slack`` count as zero.
    """
    n = spec.dim
    root = sym_sqrt_psd(spec.Q, tol)
    blocks = [root]
    for _ in range(n - 1):
        blocks.append(spec.A @ blocks[-1])
    K = np.hstack(blocks)
    s = np.linalg.svd(K, compute_uv=False)
    cut = n * _EPS * (s[0] if s.size else 0.0) * tol.rank_slack
    rank = int(np.count_nonzero(s > cut))
    return KalmanReport(rank=rank, hypoelliptic=(rank == n), controllability_matrix=K)


def spectral_bound(A, tol: Tolerances = DEFAULT_TOLERANCES) -> SpectralReport:
    """Eigenvalues of A, their maximal real part, and its sign class.

    The zero classification uses the threshold stability_tol * (1 + ||A||).
    """
    A = _square(A, "A")
    try:
        w = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(
            f"eigensolver failed on {A.shape[0]}x{A.shape[1]} matrix: {exc}",
            {"matrix": A.tolist()},
        ) from exc
    s = float(np.max(w.real))
    thresh = tol.stability_tol * (1.0 + np.linalg.norm(A, 2))
    if abs(s) <= thresh:
        cls = "critical"
    elif s > 0:
        cls = "unstable"
    else:
        cls = "strictly-stable"
    w = np.array(w)
    w.setflags(write=False)
    return SpectralReport(eigenvalues=w, spectral_bound=s, classification=cls)


def matrix_exp(A, t: float, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """exp(t A) by scaling-and-squaring with Pade approximants.

    Raises :class:`RangeOverflowError` when t * ||A|| pushes the result out
    of double range.
    """
    A = _square(A, "A")
    if not np.isfinite(t):
        raise ArgumentError("t must be finite")
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(A * float(t))
    if not np.all(np.isfinite(E)):
        raise RangeOverflowError(
            f"matrix exponential overflowed: t*||A|| = {abs(t) * np.linalg.norm(A, 2):.3e}",
            {"t": float(t)},
        )
    return E


def conjugate_operator(
    spec: OperatorSpec, P, tol: Tolerances = DEFAULT_TOLERANCES
) -> OperatorSpec:
    """Operator pair after the linear change of variables y = P x.

    (Q, A) becomes (P Q P^T, P A P^{-1}); the spectrum of the drift and the
    controllability verdict are preserved.
    """
    P = _square(P, "P")
    if P.shape != spec.A.shape:
        raise ArgumentError(f"P has shape {P.shape}, expected {spec.A.shape}")
    cond = np.linalg.cond(P)
    if not np.isfinite(cond) or cond > tol.cond_max:
        raise ArgumentError(
            f"P is singular or ill-conditioned: cond(P) = {cond:.3e} "
            f"exceeds {tol.cond_max:.1e}"
        )
    Qc = P @ spec.Q @ P.T
    Qc = 0.5 * (Qc + Qc.T)
    # A P^{-1} via a solve; X P = A  <=>  P^T X^T = A^T
    APinv = np.linalg.solve(P.T, spec.A.T).T
    return OperatorSpec(Qc, P @ APinv, tol)


def scale_diffusion(spec: OperatorSpec, delta: float) -> OperatorSpec:
    """Replace Q by delta * Q, delta > 0, keeping the drift."""
    if not np.isfinite(delta) or delta <= 0:
        raise ArgumentError(f"delta must be positive and finite, got {delta}")
    return OperatorSpec(delta * spec.Q, spec.A)
