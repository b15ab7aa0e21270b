"""Noise Gramian, Gaussian measures, the transition semigroup, and the
Gaussian inequalities built on them.

The Gramian Q_t = integral_0^t e^{sA} Q e^{sA^T} ds is computed by three
independent routes (a single 2N x 2N exponential, an adaptive matrix ODE
integration, and adaptive Gauss-Legendre panels) which are cross-checked in
the test suite.  The semigroup P_t f(x) = E f(e^{tA} x + y), y ~ N(0, Q_t),
is evaluated either by tensor Gauss-Hermite quadrature in whitened
coordinates or by exact-sampling Monte Carlo on counter-based streams.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import (
    ArgumentError,
    EvaluationError,
    IllConditionedWarning,
    NumericalFailureError,
    PreconditionError,
    UnsupportedEngineError,
)
from .operators import OperatorSpec, kalman_rank, matrix_exp
from .reports import FAIL, PASS, VerificationReport

__all__ = [
    "GaussianMeasure",
    "GramianResult",
    "Quadrature",
    "MonteCarlo",
    "gaussian_measure",
    "gramian",
    "gramian_measure",
    "decay_norm",
    "whitened_drift",
    "semigroup_apply",
    "kwapien_check",
    "exp_moment_bound_check",
]

_EPS = np.finfo(float).eps
GRAMIAN_METHODS = ("blockExp", "lyapunovODE", "quadrature")


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    """Gaussian measure with a factorized covariance.

    ``factor`` is N x r with factor @ factor.T = cov to working precision,
    r the numerical rank; sampling and whitening go through it, so a
    degenerate covariance never requires an inverse.
    """

    mean: np.ndarray
    cov: np.ndarray
    factor: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def rank(self) -> int:
        return self.factor.shape[1]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((n, self.rank))
        return self.mean + z @ self.factor.T


def gaussian_measure(mean, cov, tol: Tolerances = DEFAULT_TOLERANCES) -> GaussianMeasure:
    """Validate (mean, cov) and build the sampling factor by eigendecomposition."""
    mean = np.asarray(mean, float).ravel()
    cov = np.asarray(cov, float)
    if cov.shape != (mean.size, mean.size):
        raise ArgumentError(f"covariance shape {cov.shape} does not match dim {mean.size}")
    scale = max(np.max(np.abs(cov)), np.finfo(float).tiny)
    if np.max(np.abs(cov - cov.T)) > tol.sym_tol * scale:
        raise ArgumentError("covariance is not symmetric")
    w, V = np.linalg.eigh(0.5 * (cov + cov.T))
    lam_max = max(w[-1], np.finfo(float).tiny)
    if w[0] < -tol.psd_tol * lam_max:
        raise ArgumentError(f"covariance is indefinite: min eigenvalue {w[0]:.3e}")
    keep = w > lam_max * _EPS * len(w) * tol.rank_slack
    factor = V[:, keep] * np.sqrt(np.clip(w[keep], 0.0, None))
    for a in (mean, cov, factor):
        a.setflags(write=False)
    return GaussianMeasure(mean=mean, cov=cov, factor=factor)


@dataclass(frozen=True, eq=False)
class GramianResult:
    t: float
    Qt: np.ndarray
    method: str
    condition_number: float


def _gramian_block_exp(spec: OperatorSpec, t: float, tol: Tolerances) -> np.ndarray:
    """Single-exponential route.

    With M = [[A, Q], [0, -A^T]], the top-right block of e^{tM} equals
    H(t) = integral_0^t e^{(t-s)A} Q e^{-sA^T} ds, so Q_t = H(t) e^{tA^T}.
    For large t*||A|| the e^{-tA^T} corner overflows for stable drifts, so
    the routine computes a small-time Gramian and doubles it up through
    Q_{2t} = Q_t + e^{tA} Q_t e^{tA^T}.
    """
    n = spec.dim
    norm_a = np.linalg.norm(spec.A, 2)
    doublings = 0
    t_base = t
    while t_base * norm_a > 16.0 and doublings < 60:
        t_base /= 2.0
        doublings += 1
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = spec.A
    M[:n, n:] = spec.Q
    M[n:, n:] = -spec.A.T
    E = matrix_exp(M, t_base, tol)
    Qt = E[:n, n:] @ E[:n, :n].T  # e^{tA}^T appears as the (1,1) block transposed
    Qt = 0.5 * (Qt + Qt.T)
    if doublings:
        F = E[:n, :n]  # e^{t_base A}
        for _ in range(doublings):
            Qt = Qt + F @ Qt @ F.T
            Qt = 0.5 * (Qt + Qt.T)
            F = F @ F
    return Qt


def _gramian_ode(spec: OperatorSpec, t: float, tol: Tolerances) -> np.ndarray:
    n = spec.dim
    A, Q = spec.A, spec.Q

    def rhs(_, y):
        Ys = y.reshape(n, n)
        dy = Q + A @ Ys + Ys @ A.T
        return dy.ravel()

    scale = max(np.max(np.abs(Q)) * t, 1.0)
    sol = integrate.solve_ivp(
        rhs,
        (0.0, t),
        np.zeros(n * n),
        method="DOP853",
        rtol=tol.ode_rtol,
        atol=tol.ode_atol * scale,
        dense_output=False,
    )
    if not sol.success:
        raise NumericalFailureError(f"Gramian ODE integration failed: {sol.message}")
    Qt = sol.y[:, -1].reshape(n, n)
    return 0.5 * (Qt + Qt.T)


@functools.lru_cache(maxsize=32)
def _gl_nodes(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    return x, w


def _gramian_quadrature(spec: OperatorSpec, t: float, tol: Tolerances) -> np.ndarray:
    """Adaptive composite Gauss-Legendre on the defining integral."""
    A, Q = spec.A, spec.Q
    nodes, weights = _gl_nodes(16)

    def integral(panels: int) -> np.ndarray:
        total = np.zeros_like(Q)
        edges = np.linspace(0.0, t, panels + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            for x, w in zip(nodes, weights):
                E = matrix_exp(A, mid + half * x, tol)
                total += (w * half) * (E @ Q @ E.T)
        return total

    panels = max(1, int(np.ceil(t * max(np.linalg.norm(A, 2), 0.25) / 4.0)))
    prev = integral(panels)
    for _ in range(12):
        panels *= 2
        cur = integral(panels)
        if np.linalg.norm(cur - prev, "fro") <= tol.gram_quad_tol * max(
            np.linalg.norm(cur, "fro"), 1e-300
        ):
            prev = cur
            break
        prev = cur
    Qt = prev
    return 0.5 * (Qt + Qt.T)


def gramian(
    spec: OperatorSpec,
    t: float,
    method: str = "blockExp",
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> GramianResult:
    """Noise covariance Q_t accumulated over [0, t], by the chosen method."""
    if not (np.isfinite(t) and t > 0):
        raise ArgumentError(f"t must be positive and finite, got {t}")
    if method == "blockExp":
        Qt = _gramian_block_exp(spec, t, tol)
    elif method == "lyapunovODE":
        Qt = _gramian_ode(spec, t, tol)
    elif method == "quadrature":
        Qt = _gramian_quadrature(spec, t, tol)
    else:
        raise ArgumentError(f"unknown Gramian method {method!r}; use one of {GRAMIAN_METHODS}")
    w = np.linalg.eigvalsh(Qt)
    cond = float(w[-1] / w[0]) if w[0] > 0 else float("inf")
    Qt.setflags(write=False)
    return GramianResult(t=float(t), Qt=Qt, method=method, condition_number=cond)


def gramian_measure(spec: OperatorSpec, t: float, tol: Tolerances = DEFAULT_TOLERANCES) -> GaussianMeasure:
    """The centered Gaussian measure N(0, Q_t)."""
    res = gramian(spec, t, "blockExp", tol)
    return gaussian_measure(np.zeros(spec.dim), res.Qt, tol)


def whitened_drift(spec: OperatorSpec, t: float, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """The matrix Q_t^{-1/2} e^{tA} (inverse square root via eigh).

    Requires hypoellipticity, which makes Q_t positive definite for t > 0;
    eigenvalues at the conditioning floor trigger IllConditionedWarning.
    """
    if not kalman_rank(spec, tol).hypoelliptic:
        raise PreconditionError(
            "the controllability rank condition fails (the noise does not "
            "spread to all directions), so Q_t is singular and "
            "Q_t^{-1/2} e^{tA} is undefined"
        )
    if not (np.isfinite(t) and t > 0):
        raise ArgumentError(f"t must be positive and finite, got {t}")
    Qt = gramian(spec, t, "blockExp", tol).Qt
    w, V = np.linalg.eigh(Qt)
    floor = tol.inv_tol * max(w[-1], np.finfo(float).tiny)
    if w[0] < floor:
        warnings.warn(
            f"Q_t at t={t:g} is numerically singular (min eigenvalue "
            f"{w[0]:.3e} below floor {floor:.3e}); inverse square root clamped",
            IllConditionedWarning,
            stacklevel=2,
        )
    w = np.maximum(w, floor)
    inv_sqrt = (V / np.sqrt(w)) @ V.T
    return inv_sqrt @ matrix_exp(spec.A, t, tol)


def decay_norm(spec: OperatorSpec, t: float, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Spectral norm of Q_t^{-1/2} e^{tA}.

    Its decay to zero as t grows characterizes a drift spectrum confined to
    the closed left half-plane.
    """
    return float(np.linalg.norm(whitened_drift(spec, t, tol), 2))


# ----------------------------------------------------------------------
# semigroup engines


@dataclass(frozen=True)
class Quadrature:
    """Tensor Gauss-Hermite engine; ``level`` nodes per whitened dimension."""

    level: int = 40


@dataclass(frozen=True)
class MonteCarlo:
    """Exact-sampling engine on Philox substreams."""

    n: int = 100_000
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class SemigroupValue:
    value: float
    stderr: float | None


@functools.lru_cache(maxsize=16)
def _gh_nodes(level: int):
    # probabilists' nodes: integrate against the standard normal density
    from scipy import special

    x, w = special.roots_hermitenorm(level)
    return x, w / np.sqrt(2.0 * np.pi)


def _check_finite(vals: np.ndarray, points: np.ndarray, label: str):
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise EvaluationError(
            f"{label} returned a non-finite value at {points[i].tolist()}",
            point=points[i],
        )


def _tensor_nodes(rank: int, level: int):
    x, w = _gh_nodes(level)
    grids = np.meshgrid(*([x] * rank), indexing="ij")
    z = np.column_stack([g.ravel() for g in grids])
    weights = np.ones(z.shape[0])
    for k in range(rank):
        weights *= w[np.ravel(np.meshgrid(*([np.arange(level)] * rank), indexing="ij")[k])]
    return z, weights


def semigroup_apply(
    spec: OperatorSpec,
    f,
    x,
    t: float,
    engine=Quadrature(),
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> SemigroupValue:
    """P_t f(x): average of f over the time-t transition measure from x.

    ``f`` must accept an (m, N) array of points and return m values.
    t = 0 returns f(x) exactly.  The quadrature engine whitens the noise
    through the Gramian factor and applies a tensor Gauss-Hermite rule; it
    refuses factor ranks above ``quad_dim_max``.  The Monte Carlo engine
    averages f over exact Gaussian draws and reports a standard error.
    """
    x = np.asarray(x, float).ravel()
    if x.size != spec.dim:
        raise ArgumentError(f"point has dimension {x.size}, operator has {spec.dim}")
    if not np.isfinite(t) or t < 0:
        raise ArgumentError(f"t must be >= 0 and finite, got {t}")
    if t == 0:
        val = float(np.asarray(f(x[None, :])).ravel()[0])
        if not np.isfinite(val):
            raise EvaluationError(f"f returned a non-finite value at {x.tolist()}", point=x)
        return SemigroupValue(value=val, stderr=None)

    shift = matrix_exp(spec.A, t, tol) @ x
    measure = gramian_measure(spec, t, tol)

    if isinstance(engine, Quadrature):
        rank = measure.rank
        if rank > tol.quad_dim_max:
            raise UnsupportedEngineError(
                f"tensor quadrature in whitened dimension {rank} exceeds "
                f"quad_dim_max={tol.quad_dim_max}; use the Monte Carlo engine"
            )
        z, weights = _tensor_nodes(rank, engine.level)
        pts = shift + z @ measure.factor.T
        vals = np.asarray(f(pts), float).ravel()
        _check_finite(vals, pts, "integrand")
        return SemigroupValue(value=float(weights @ vals), stderr=None)

    if isinstance(engine, MonteCarlo):
        from .sampling import sharded_mean

        def draw_eval(rng, m):
            pts = shift + rng.standard_normal((m, measure.rank)) @ measure.factor.T
            vals = np.asarray(f(pts), float).ravel()
            _check_finite(vals, pts, "integrand")
            return vals

        mean, stderr, bad = sharded_mean(engine.n, engine.seed, draw_eval, engine.workers)
        return SemigroupValue(value=mean, stderr=stderr)

    raise ArgumentError(f"unknown engine {engine!r}")


def kwapien_check(
    spec: OperatorSpec,
    f,
    x,
    a,
    t: float,
    engine=Quadrature(),
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> VerificationReport:
    """Two-sided shift inequality for non-negative f:

        P_t f(x+a) + P_t f(x-a) >= 2 exp(-|Q_t^{-1/2} e^{tA} a|^2 / 2) P_t f(x).

    Monte Carlo evaluation uses common random numbers across the three
    shifted averages so the margin is not swamped by independent noise.
    """
    x = np.asarray(x, float).ravel()
    a = np.asarray(a, float).ravel()
    if not (np.isfinite(t) and t > 0):
        raise ArgumentError(f"t must be positive and finite, got {t}")
    W = whitened_drift(spec, t, tol)  # also enforces hypoellipticity
    c_t = float(np.exp(-0.5 * np.dot(W @ a, W @ a)))
    shift = matrix_exp(spec.A, t, tol) @ x
    shift_a = matrix_exp(spec.A, t, tol) @ a
    measure = gramian_measure(spec, t, tol)

    def three_means_quadrature(level):
        rank = measure.rank
        if rank > tol.quad_dim_max:
            raise UnsupportedEngineError(
                f"tensor quadrature in whitened dimension {rank} exceeds "
                f"quad_dim_max={tol.quad_dim_max}; use the Monte Carlo engine"
            )
        z, weights = _tensor_nodes(rank, level)
        noise = z @ measure.factor.T
        out = []
        for center in (shift + shift_a, shift - shift_a, shift):
            pts = center + noise
            vals = np.asarray(f(pts), float).ravel()
            _check_finite(vals, pts, "f")
            _check_nonneg(vals, pts)
            out.append(float(weights @ vals))
        return out, None

    def three_means_mc(eng: MonteCarlo):
        from .sampling import sharded_mean

        def draw_eval(rng, m):
            noise = rng.standard_normal((m, measure.rank)) @ measure.factor.T
            vals = []
            for center in (shift + shift_a, shift - shift_a, shift):
                pts = center + noise
                v = np.asarray(f(pts), float).ravel()
                _check_finite(v, pts, "f")
                _check_nonneg(v, pts)
                vals.append(v)
            # per-sample margin, common random numbers
            return vals[0] + vals[1] - 2.0 * c_t * vals[2]

        mean, stderr, _ = sharded_mean(eng.n, eng.seed, draw_eval, eng.workers)
        return mean, stderr

    if isinstance(engine, Quadrature):
        (plus, minus, center), _ = three_means_quadrature(engine.level)
        lhs = plus + minus
        rhs = 2.0 * c_t * center
        margin = lhs - rhs
        stderr = None
    elif isinstance(engine, MonteCarlo):
        margin, stderr = three_means_mc(engine)
        rhs = 2.0 * c_t * semigroup_apply(spec, f, x, t, engine, tol).value
    else:
        raise ArgumentError(f"unknown engine {engine!r}")

    threshold = -tol.kwapien_tol * (1.0 + abs(rhs))
    params = {
        "t": t,
        "x": x.tolist(),
        "a": a.tolist(),
        "C_t": c_t,
        "engine": repr(engine),
        "kwapien_tol": tol.kwapien_tol,
    }
    if stderr is not None:
        params["stderr"] = stderr
    return VerificationReport(
        "kwapien-two-sided-shift",
        params,
        statistic=float(margin),
        threshold=float(threshold),
        verdict=PASS if margin >= threshold else FAIL,
        witnesses=[] if margin >= threshold else [{"x": x.tolist(), "a": a.tolist(), "t": t}],
    )


def _check_nonneg(vals: np.ndarray, points: np.ndarray):
    if np.any(vals < -1e-12 * (1.0 + np.max(np.abs(vals)))):
        i = int(np.argmin(vals))
        raise PreconditionError(
            f"f must be non-negative; found f = {vals[i]:.3e} at {points[i].tolist()}"
        )


def exp_moment_bound_check(
    R,
    r: float,
    n: int,
    seed: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
    workers: int = 1,
) -> VerificationReport:
    """Monte Carlo check of the Gaussian exponential-moment chain

        E exp(r |y|) <= 2^dim * exp(dim * r^2 * ||R|| / 2),  y ~ N(0, R).

    Passes when estimate - 3 * stderr stays below the bound.
    """
    if r < 0 or not np.isfinite(r):
        raise ArgumentError("r must be >= 0 and finite")
    measure = gaussian_measure(np.zeros(np.asarray(R).shape[0]), R, tol)
    dim = measure.dim
    bound = float(2.0**dim * np.exp(0.5 * dim * r * r * np.linalg.norm(measure.cov, 2)))

    from .sampling import sharded_mean

    def draw_eval(rng, m):
        y = measure.sample(m, rng)
        return np.exp(r * np.linalg.norm(y, axis=1))

    mean, stderr, bad = sharded_mean(n, seed, draw_eval, workers)
    stat = mean - 3.0 * stderr
    params = {
        "r": r,
        "dim": dim,
        "n": n,
        "seed": seed,
        "estimate": mean,
        "stderr": stderr,
        "bound": bound,
        "non_finite_samples": bad,
    }
    return VerificationReport(
        "gaussian-exponential-moment-bound",
        params,
        statistic=float(stat),
        threshold=bound,
        verdict=PASS if stat <= bound else FAIL,
    )
