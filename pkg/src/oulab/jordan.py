"""Real Jordan structure of the drift matrix and its block calculus.

A drift whose spectrum lies in the closed left half-plane splits, in a real
canonical basis, into a stable part, a zero part of simple eigenvalues,
nilpotent shift blocks, rotation blocks carrying nilpotent chains, and
simple plane rotations.  Computing that structure in floating point is
ill-posed: eigenvalues of a defective block scatter like eps^(1/k).  The
routine therefore searches a nested family of eigenvalue clusterings, from
the configured merge radius upward, and accepts the finest clustering whose
assembled P J P^{-1} actually reproduces A; the radius used and the
inter-cluster gap are reported on the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .candidates import HarmonicCandidate
from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import (
    AmbiguousStructureError,
    ArgumentError,
    NumericalFailureError,
)
from .operators import _square, matrix_exp
from .reports import FAIL, NOT_APPLICABLE, PASS, VerificationReport
from .sampling import ball_points

__all__ = [
    "STABLE",
    "ZERO_SIMPLE",
    "NILPOTENT",
    "ROTATION_NILPOTENT",
    "PURE_ROTATION",
    "JordanBlock",
    "JordanDecomposition",
    "jordan_real_form",
    "block_exponential",
    "resonance_times",
    "quasi_constancy_check",
]

_EPS = np.finfo(float).eps

STABLE = "stable"
ZERO_SIMPLE = "zero-simple"
NILPOTENT = "nilpotent"
ROTATION_NILPOTENT = "rotation-nilpotent"
PURE_ROTATION = "pure-rotation"


@dataclass(frozen=True, eq=False)
class JordanBlock:
    """One diagonal block of the canonical form.

    kind "stable":             arbitrary matrix with spectrum in Re < 0,
                               carried in ``content`` (real Schur form).
    kind "zero-simple":        zero matrix collecting all simple zeros.
    kind "nilpotent":          k x k shift block, k >= 2.
    kind "rotation-nilpotent": 2g x 2g block, rotation frequency d on the
                               2x2 diagonal cells, identity superdiagonal.
    kind "pure-rotation":      2 x 2 plane rotation generator, frequency h.
    """

    kind: str
    size: int
    offset: int
    k: int = 0
    d: float = 0.0
    g: int = 0
    h: float = 0.0
    content: np.ndarray | None = None

    def label(self) -> str:
        if self.kind == STABLE:
            return f"S({self.size})@offset {self.offset}"
        if self.kind == ZERO_SIMPLE:
            return f"E0({self.size})@offset {self.offset}"
        if self.kind == NILPOTENT:
            return f"J(0,{self.k})@offset {self.offset}"
        if self.kind == ROTATION_NILPOTENT:
            return f"J(0, d={self.d:g}, g={self.g})@offset {self.offset}"
        return f"E1(h={self.h:g})@offset {self.offset}"

    def matrix(self) -> np.ndarray:
        if self.kind == STABLE:
            return np.array(self.content, dtype=float)
        if self.kind == ZERO_SIMPLE:
            return np.zeros((self.size, self.size))
        if self.kind == NILPOTENT:
            return np.eye(self.k, k=1)
        if self.kind == ROTATION_NILPOTENT:
            rot = np.array([[0.0, self.d], [-self.d, 0.0]])
            return np.kron(np.eye(self.g), rot) + np.kron(np.eye(self.g, k=1), np.eye(2))
        return np.array([[0.0, self.h], [-self.h, 0.0]])


@dataclass(frozen=True, eq=False)
class JordanDecomposition:
    """Invertible P, block-diagonal J, and the classified block list.

    Satisfies A = P J P^{-1} up to the reported relative residual.  When
    ``unstable`` is set (spectral bound significantly positive) no taxonomy
    is attempted: P = I, J = A, and ``blocks`` is empty.
    """

    P: np.ndarray
    Pinv: np.ndarray
    J: np.ndarray
    blocks: tuple
    unstable: bool
    cluster_radius: float
    cluster_gap: float
    residual: float

    @property
    def dim(self) -> int:
        return self.J.shape[0]

    def block_lines(self) -> list[str]:
        return [b.label() for b in self.blocks]


class _StructureFailure(Exception):
    """Internal: one candidate clustering did not produce a valid form."""


# ----------------------------------------------------------------------
# clustering


def _nested_partitions(eigs: np.ndarray, base: float, cap: float):
    """Single-linkage partitions of the eigenvalue multiset, finest first.

    Returns a list of (radius, groups) with groups a list of index tuples.
    """
    n = len(eigs)
    dists = np.abs(eigs[:, None] - eigs[None, :])
    radii = [base] + sorted({float(d) for d in dists[np.triu_indices(n, 1)] if base < d <= cap})
    out = []
    prev = None
    for r in radii:
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i in range(n):
            for j in range(i + 1, n):
                if dists[i, j] <= r:
                    parent[find(i)] = find(j)
        groups = {}
        for i in range(n):
            groups.setdefault(find(i), []).append(i)
        part = tuple(sorted(tuple(g) for g in groups.values()))
        if part != prev:
            out.append((r, [tuple(g) for g in part]))
            prev = part
        if len(part) == 1:
            break
    return out


@dataclass
class _Unit:
    """One structural unit: either a real-eigenvalue cluster or a
    conjugate pair of clusters."""

    kind: str          # "stable" | "zero" | "rotation"
    indices: tuple     # all eigenvalue indices in the unit
    d: float = 0.0     # rotation frequency (kind == "rotation")
    mult: int = 0      # chain total: algebraic multiplicity over C for the
                       # relevant half (per-sign for rotation units)


def _classify_units(eigs: np.ndarray, groups: list, crit_tol: float):
    """Turn clusters into stable/zero/rotation units, or None if the
    partition implies an unstable or internally inconsistent structure."""
    remaining = {g: np.mean(eigs[list(g)]) for g in groups}
    units: list[_Unit] = []
    used = set()
    for g, mean in remaining.items():
        if g in used:
            continue
        if abs(mean.imag) <= crit_tol:
            used.add(g)
            re = mean.real
            if re < -crit_tol:
                units.append(_Unit("stable", g, mult=len(g)))
            elif re <= crit_tol:
                units.append(_Unit("zero", g, mult=len(g)))
            else:
                return None
            continue
        # find the conjugate cluster
        target = np.conj(mean)
        partner = min(
            (h for h in remaining if h not in used and h != g),
            key=lambda h: abs(remaining[h] - target),
            default=None,
        )
        if partner is None or abs(remaining[partner] - target) > max(crit_tol, 1e-8 * abs(mean)) * 10:
            return None
        used.add(g)
        used.add(partner)
        if len(partner) != len(g):
            return None
        re = mean.real
        d = abs(mean.imag)
        idx = tuple(sorted(g + partner))
        if re < -crit_tol:
            units.append(_Unit("stable", idx, mult=len(idx)))
        elif re <= crit_tol:
            if d <= crit_tol:
                return None
            units.append(_Unit("rotation", idx, d=d, mult=len(g)))
        else:
            return None
    # merge coincident critical units (equal snapped eigenvalue)
    merged: list[_Unit] = [u for u in units if u.kind == "stable"]
    zeros = [u for u in units if u.kind == "zero"]
    if zeros:
        idx = tuple(sorted(sum((u.indices for u in zeros), ())))
        merged.append(_Unit("zero", idx, mult=len(idx)))
    rots = sorted((u for u in units if u.kind == "rotation"), key=lambda u: u.d)
    i = 0
    while i < len(rots):
        j = i + 1
        cur = rots[i]
        while j < len(rots) and abs(rots[j].d - cur.d) <= crit_tol:
            both = tuple(sorted(cur.indices + rots[j].indices))
            dd = 0.5 * (cur.d + rots[j].d)
            cur = _Unit("rotation", both, d=dd, mult=cur.mult + rots[j].mult)
            j += 1
        merged.append(cur)
        i = j
    return merged


# ----------------------------------------------------------------------
# chain extraction


def _null_basis(M: np.ndarray, cut: float) -> np.ndarray:
    _, s, Vh = np.linalg.svd(M)
    k = int(np.count_nonzero(s < cut)) + (M.shape[0] - len(s))
    if k == 0:
        return np.zeros((M.shape[1], 0), dtype=M.dtype)
    return Vh[-k:].conj().T


def _jordan_chains(M: np.ndarray, mult: int, noise: float):
    """Jordan chains of the numerically nilpotent matrix M.

    Returns a list of chains, each bottom-first: [v1, ..., vk] with
    M v1 ~ 0 and M v_{j+1} = v_j.  Raises _StructureFailure when kernel
    growth is inconsistent with ``mult``.
    """
    n = M.shape[0]
    norm_m = max(1.0, np.linalg.norm(M, 2))
    kernels = []
    dims = [0]
    Mp = np.eye(n, dtype=M.dtype)
    q = None
    for j in range(1, mult + 1):
        Mp = Mp @ M
        cut = noise * n * norm_m ** (j - 1)
        K = _null_basis(Mp, cut)
        k = K.shape[1]
        if k > mult or (k <= dims[-1]):
            raise _StructureFailure(f"kernel growth stalled at power {j}")
        kernels.append(K)
        dims.append(k)
        if k == mult:
            q = j
            break
    if q is None:
        raise _StructureFailure("kernel never reached the cluster multiplicity")
    # chains of length >= j: c_j = dims[j] - dims[j-1]; must be non-increasing
    c = [dims[j] - dims[j - 1] for j in range(1, q + 1)]
    if any(c[j] > c[j - 1] for j in range(1, q)):
        raise _StructureFailure("non-monotone chain counts")

    tops: list[tuple[np.ndarray, int]] = []
    carried = np.zeros((n, 0), dtype=M.dtype)
    for j in range(q, 0, -1):
        need = c[j - 1] - carried.shape[1]
        if need < 0:
            raise _StructureFailure("chain bookkeeping mismatch")
        if need > 0:
            prev = kernels[j - 2] if j >= 2 else np.zeros((n, 0), dtype=M.dtype)
            span = np.hstack([prev, carried])
            Kj = kernels[j - 1]
            if span.shape[1]:
                Qs = scipy.linalg.orth(span)
                R = Kj - Qs @ (Qs.conj().T @ Kj)
            else:
                R = Kj
            U, s, _ = np.linalg.svd(R, full_matrices=False)
            if s.size < need or s[need - 1] < 1e-6:
                raise _StructureFailure("could not pick independent chain tops")
            new = U[:, :need]
            tops.extend((new[:, i], j) for i in range(need))
            carried = np.hstack([carried, new])
        if j > 1:
            carried = M @ carried
    chains = []
    for v, h in tops:
        chain = [v]
        for _ in range(h - 1):
            chain.append(M @ chain[-1])
        chains.append(list(reversed(chain)))
    return chains


def _canonical_phase(chain):
    """Deterministic sign/phase: bottom vector's largest entry made real
    and positive (keeps P reproducible across LAPACK phase choices)."""
    bottom = chain[0]
    i = int(np.argmax(np.abs(bottom)))
    pivot = bottom[i]
    if abs(pivot) == 0:
        return chain
    phase = pivot / abs(pivot)
    return [v / phase for v in chain]


def _realify(chain):
    """Complex chain at eigenvalue i*d -> real columns (Re, Im pairs)."""
    cols = []
    for w in chain:
        cols.append(np.real(w))
        cols.append(np.imag(w))
    return np.column_stack(cols)


# ----------------------------------------------------------------------
# assembly


def _assemble(A: np.ndarray, eigs: np.ndarray, units: list, radius: float, tol: Tolerances):
    n = A.shape[0]
    norm_a = float(np.linalg.norm(A, 2))
    fro_a = max(np.linalg.norm(A, "fro"), np.finfo(float).tiny)
    noise = _EPS * max(1.0, norm_a) * 1e4

    stable_units = [u for u in units if u.kind == "stable"]
    crit_units = [u for u in units if u.kind != "stable"]
    s_dim = sum(u.mult for u in stable_units)
    n_crit = n - s_dim

    pieces = []  # (sort_key, block kind, params, columns)

    if n_crit == 0:
        T, Z = scipy.linalg.schur(A, output="real")
        blocks = (JordanBlock(STABLE, n, 0, content=T),)
        return _finish(A, Z, T, blocks, radius, units, fro_a, tol)

    if s_dim > 0:
        stable_re = eigs[[i for u in stable_units for i in u.indices]].real
        crit_re = eigs[[i for u in crit_units for i in u.indices]].real
        theta = 0.5 * (float(np.max(stable_re)) + float(np.min(crit_re)))
        if np.max(stable_re) >= np.min(crit_re):
            raise _StructureFailure("stable and critical spectra interleave")
        Tc, Zc, sdim = scipy.linalg.schur(
            A, output="real", sort=lambda re, im: re > theta
        )
        if sdim != n_crit:
            raise _StructureFailure("critical subspace dimension mismatch")
        Vc = Zc[:, :n_crit]
        Bc = Tc[:n_crit, :n_crit]
        Ts, Zs, sdim_s = scipy.linalg.schur(
            A, output="real", sort=lambda re, im: re < theta
        )
        if sdim_s != s_dim:
            raise _StructureFailure("stable subspace dimension mismatch")
        pieces.append(((0, 0.0, 0), STABLE, {"content": Ts[:s_dim, :s_dim]}, Zs[:, :s_dim]))
    else:
        Vc = np.eye(n)
        Bc = A

    zero_1chains = []
    for u in crit_units:
        if u.kind == "zero":
            try:
                chains = _jordan_chains(Bc, u.mult, noise)
            except _StructureFailure:
                raise
            for chain in chains:
                chain = _canonical_phase(chain)
                cols = np.column_stack(chain).real
                cols = cols / max(np.max(np.abs(cols)), np.finfo(float).tiny)
                k = len(chain)
                if k == 1:
                    zero_1chains.append(cols)
                else:
                    pieces.append(((2, 0.0, k), NILPOTENT, {"k": k}, Vc @ cols))
        else:
            M = Bc.astype(complex) - 1j * u.d * np.eye(n_crit)
            chains = _jordan_chains(M, u.mult, noise)
            for chain in chains:
                chain = _canonical_phase(chain)
                cols = _realify(chain)
                cols = cols / max(np.max(np.abs(cols)), np.finfo(float).tiny)
                g = len(chain)
                if g == 1:
                    pieces.append(((4, u.d, 1), PURE_ROTATION, {"h": u.d}, Vc @ cols))
                else:
                    pieces.append(((3, u.d, g), ROTATION_NILPOTENT, {"d": u.d, "g": g}, Vc @ cols))
    if zero_1chains:
        cols = Vc @ np.hstack(zero_1chains)
        pieces.append(((1, 0.0, 0), ZERO_SIMPLE, {}, cols))

    # canonical ordering: stable, zero-simple, nilpotent (ascending k),
    # rotation-nilpotent (ascending g then d), pure rotations (ascending h)
    def key(p):
        cls, d, sz = p[0]
        if cls == 3:
            return (cls, sz, d)
        return (cls, d, sz)

    pieces.sort(key=key)

    blocks = []
    cols = []
    offset = 0
    for (_, kind, params, c) in pieces:
        size = c.shape[1]
        blocks.append(JordanBlock(kind, size, offset, **params))
        cols.append(c)
        offset += size
    P = np.hstack(cols)
    J = np.zeros((n, n))
    for b in blocks:
        J[b.offset : b.offset + b.size, b.offset : b.offset + b.size] = b.matrix()
    return _finish(A, P, J, tuple(blocks), radius, units, fro_a, tol)


def _finish(A, P, J, blocks, radius, units, fro_a, tol):
    n = A.shape[0]
    try:
        Pinv = np.linalg.solve(P, np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise _StructureFailure(f"singular transformation: {exc}")
    if not np.all(np.isfinite(Pinv)):
        raise _StructureFailure("non-finite inverse transformation")
    residual = float(np.linalg.norm(P @ J @ Pinv - A, "fro") / fro_a)
    centers = []
    for u in units:
        if u.kind == "rotation":
            centers.extend([1j * u.d, -1j * u.d])
        elif u.kind == "zero":
            centers.append(0.0 + 0.0j)
    # include stable boundary in the gap when present
    gap = np.inf
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            gap = min(gap, abs(centers[i] - centers[j]))
    for a in (P, J, Pinv):
        a.setflags(write=False)
    return JordanDecomposition(
        P=P,
        Pinv=Pinv,
        J=J,
        blocks=blocks,
        unstable=False,
        cluster_radius=float(radius),
        cluster_gap=float(gap),
        residual=residual,
    )


def jordan_real_form(A, tol: Tolerances = DEFAULT_TOLERANCES) -> JordanDecomposition:
    """Classified real Jordan decomposition of a drift matrix.

    Searches nested eigenvalue clusterings (see module docstring) and
    returns the finest one that reconstructs A within ``jordan_tol``.  A
    spectrum that is genuinely right of the imaginary axis yields the
    trivial decomposition flagged ``unstable``; an unresolvable structure
    raises :class:`AmbiguousStructureError` listing the clusterings tried.
    """
    A = _square(np.asarray(A, dtype=float), "A")
    n = A.shape[0]
    norm_a = float(np.linalg.norm(A, 2))
    scale = max(norm_a, np.finfo(float).tiny)
    try:
        eigs = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigensolver failed: {exc}") from exc
    crit_tol = tol.stability_tol * (1.0 + norm_a)

    base = tol.cluster_tol * scale
    cap = max(0.25 * scale, 10 * base)
    tried = []
    for radius, groups in _nested_partitions(eigs, base, cap):
        units = _classify_units(eigs, groups, crit_tol)
        tried.append(
            {
                "radius": radius,
                "clusters": [
                    sorted((complex(eigs[i]) for i in g), key=lambda z: (z.real, z.imag))
                    for g in groups
                ]
                if units is None
                else [
                    {"kind": u.kind, "d": u.d, "multiplicity": u.mult} for u in units
                ],
                "classified": units is not None,
            }
        )
        if units is None:
            continue
        try:
            dec = _assemble(A, eigs, units, radius, tol)
        except _StructureFailure:
            continue
        if dec.residual <= tol.jordan_tol:
            return dec
    if float(np.max(eigs.real)) > crit_tol:
        eye = np.eye(n)
        return JordanDecomposition(
            P=eye,
            Pinv=eye.copy(),
            J=A.copy(),
            blocks=(),
            unstable=True,
            cluster_radius=base,
            cluster_gap=float("nan"),
            residual=0.0,
        )
    raise AmbiguousStructureError(
        f"no eigenvalue clustering of the {n}x{n} drift produced a valid "
        f"real Jordan structure at jordan_tol={tol.jordan_tol:g}",
        candidates=tried,
    )


# ----------------------------------------------------------------------
# block calculus


def block_exponential(block: JordanBlock, t: float, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Closed-form exponential of one canonical block at time t."""
    if not np.isfinite(t):
        raise ArgumentError("t must be finite")
    if block.kind == STABLE:
        return matrix_exp(block.content, t, tol)
    if block.kind == ZERO_SIMPLE:
        return np.eye(block.size)
    if block.kind == NILPOTENT:
        k = block.k
        E = np.zeros((k, k))
        fact = 1.0
        for m in range(k):
            if m:
                fact *= m
            E += np.eye(k, k=m) * (t ** m / fact)
        return E
    if block.kind == ROTATION_NILPOTENT:
        g = block.g
        poly = np.zeros((g, g))
        fact = 1.0
        for m in range(g):
            if m:
                fact *= m
            poly += np.eye(g, k=m) * (t ** m / fact)
        c, s = np.cos(block.d * t), np.sin(block.d * t)
        rot = np.array([[c, s], [-s, c]])
        return np.kron(poly, rot)
    c, s = np.cos(block.h * t), np.sin(block.h * t)
    return np.array([[c, s], [-s, c]])


def resonance_times(d: float, phase: str, n_max: int) -> np.ndarray:
    """Times aligning a rotation of frequency d with a quarter or full turn.

    quarter: d*T_n = pi/2 + 2*pi*n;   full: d*T_n = 2*pi*n,  n = 0..n_max.
    """
    if d == 0 or not np.isfinite(d):
        raise ArgumentError("rotation frequency d must be nonzero")
    if phase not in ("quarter", "full"):
        raise ArgumentError(f"phase must be 'quarter' or 'full', got {phase!r}")
    if n_max < 0:
        raise ArgumentError("n_max must be >= 0")
    n = np.arange(n_max + 1, dtype=float)
    angles = (np.pi / 2 + 2 * np.pi * n) if phase == "quarter" else (2 * np.pi * n)
    return angles / d


def quasi_constancy_check(
    u: HarmonicCandidate,
    dec: JordanDecomposition,
    samples: int = 256,
    radius: float = 5.0,
    tol: Tolerances = DEFAULT_TOLERANCES,
    seed: int = 0,
) -> VerificationReport:
    """Check that u, read in the canonical coordinates, has vanishing
    partial derivatives in every non-terminal chain variable.

    For a nilpotent block of length k the first k-1 canonical coordinates
    are forbidden; for a rotation block with chain length g the first
    2g-2 are.  Sampling uses a deterministic low-discrepancy point set in
    the ball of the given radius.
    """
    params = {
        "samples": samples,
        "radius": radius,
        "seed": seed,
        "grad_tol": tol.grad_tol,
    }
    forbidden: list[int] = []
    for b in dec.blocks:
        if b.kind == NILPOTENT:
            forbidden.extend(range(b.offset, b.offset + b.k - 1))
        elif b.kind == ROTATION_NILPOTENT:
            forbidden.extend(range(b.offset, b.offset + 2 * b.g - 2))
    if not forbidden:
        reason = (
            "decomposition is unstable-flagged; no taxonomy"
            if dec.unstable
            else "no nilpotent or rotation-nilpotent blocks present"
        )
        return VerificationReport(
            "quasi-constancy", params, verdict=NOT_APPLICABLE, reason=reason
        )
    y = ball_points(dec.dim, samples, radius, seed)
    x = y @ dec.P.T              # u is evaluated in original coordinates
    grads = np.atleast_2d(u.gradient(x)) @ dec.P  # gradient of y -> u(P y)
    stat = float(np.max(np.abs(grads[:, forbidden])))
    denom = 1.0 + float(np.max(np.linalg.norm(grads, axis=1)))
    threshold = tol.grad_tol * denom
    i, j = np.unravel_index(np.argmax(np.abs(grads[:, forbidden])), grads[:, forbidden].shape)
    witness = {
        "canonical_point": y[i].tolist(),
        "point": x[i].tolist(),
        "coordinate": int(forbidden[j]),
        "partial": float(grads[i, forbidden[j]]),
    }
    return VerificationReport(
        "quasi-constancy",
        params,
        statistic=stat,
        threshold=threshold,
        verdict=PASS if stat <= threshold else FAIL,
        witnesses=[witness],
    )
