"""Tolerance configuration shared by every numerical routine.

The mathematics being verified is exact; every threshold below is an
artifact decision.  All of them live in this one frozen record, routines
take it as an explicit argument, and reports embed the values they used.
There is no mutable global state.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # operator validation
    sym_tol: float = 1e-10        # relative asymmetry allowed in Q
    psd_tol: float = 1e-10        # relative negative-eigenvalue slack for Q
    # numerical rank (controllability matrix, Gaussian factors)
    rank_slack: float = 1e3       # sigma < dim*eps*sigma_max*rank_slack -> zero
    # spectral classification; scaled by (1 + ||A||) where applied
    stability_tol: float = 1e-9
    # matrix exponential backward-error target (documentation of the method)
    exp_tol: float = 1e-13
    # conjugation
    cond_max: float = 1e12        # largest acceptable cond(P)
    # real Jordan decomposition
    jordan_tol: float = 1e-8      # relative Frobenius reconstruction residual
    cluster_tol: float = 1e-6     # base eigenvalue merge radius, times ||A||
    # quasi-constancy
    grad_tol: float = 1e-9
    # Gramian and decay norm
    inv_tol: float = 1e-13        # eigenvalue floor for Q_t^{-1/2}, times lambda_max
    gram_quad_tol: float = 1e-12  # panel-doubling stop for the integral method
    ode_rtol: float = 1e-11
    ode_atol: float = 1e-13
    # semigroup engines
    quad_dim_max: int = 4
    gh_level: int = 40            # Gauss-Hermite nodes per dimension
    quad_tol: float = 1e-8        # quadrature pass threshold in invariance checks
    # verification thresholds
    kwapien_tol: float = 1e-8
    resid_tol: float = 1e-10
    conv_tol: float = 1e-9
    c_max: float = 20.0           # gradient-growth fit ceiling
    nonconst_tol: float = 1e-6    # range needed to call a candidate nonconstant

    def replace(self, **overrides) -> "Tolerances":
        """Return a copy with the given fields overridden."""
        return dataclasses.replace(self, **overrides)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))


DEFAULT_TOLERANCES = Tolerances()
