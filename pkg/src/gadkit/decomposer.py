"""Numerical GAD of a form from its Hankel matrices.

Pipeline: random coordinate change, multiplication matrices on a numerical
basis of the quotient algebra, Schur factorization with clustered and
reordered eigenvalues, local blocks, nil-indices, and a least-squares solve
for the weight polynomials.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.linalg import lapack, schur

from .apolarity import (
    DEFAULT_SVD_TOL,
    ContractError,
    DualSeries,
    QuotientBasis,
    apolar_norm,
    check_f,
    default_split,
    hankel_family,
    probe_and_rank,
)
from .invsystems import GAD, GADTerm, ell_rank
from .polycore import CoordChange, LinearForm, Poly, change_coords, monomials, poly_to_json

log = logging.getLogger(__name__)


class GADError(RuntimeError):
    exit_code = 10


class DegreeBoundError(GADError):
    """A nil-index implies a weight degree larger than the form's degree.

    ``details`` carries what was found before stopping: rank, multiplicities,
    nil-indices and the cluster supports in the original coordinates.
    """

    exit_code = 1

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


class LocalizationError(GADError):
    exit_code = 2


class ClusteringError(GADError):
    exit_code = 3


class NonNilpotentBlockError(ClusteringError):
    """A shifted local block never becomes nilpotent; usually a wrong clustering or rank."""


@dataclass(frozen=True)
class DecomposeOptions:
    svd_tol: float = DEFAULT_SVD_TOL
    cluster_tol: float = 1e-4
    nil_tol: float = 1e-6
    comm_tol: float = 1e-6
    retries: int = 5
    coord_trials: int = 5
    forced_rank: int | None = None
    forced_clusters: int | None = None
    split: int | None = None
    normalize_supports: bool = False
    accept_tol: float = 1e-6  # relative apolar error for accepting an unforced clustering
    nil_fallback: bool = False  # take nu = block size instead of failing on a non-nilpotent block
    orthogonal_coords: bool = True
    random_coords: bool = True  # False keeps the input coordinates (localization at x0 = 1)


@dataclass(frozen=True, eq=False)
class MultOps:
    r: int
    matrices: list[np.ndarray]  # M_1..M_n
    basis: QuotientBasis
    commutator: float  # max relative commutator norm
    conditioning: float  # condition number of the projected H0

    @property
    def n(self) -> int:
        return len(self.matrices)


@dataclass(frozen=True, eq=False)
class LocalBlockSet:
    sizes: list[int]
    blocks: list[list[np.ndarray]]  # blocks[i][j]: cluster i, variable j
    points: np.ndarray  # s x n
    schur_basis: np.ndarray
    triangular: np.ndarray  # reordered Schur form of the probe combination
    probe: np.ndarray  # coefficients of the combination
    nil_indices: list[int] = field(default_factory=list)

    @property
    def s(self) -> int:
        return len(self.sizes)


@dataclass(frozen=True, eq=False)
class DecompositionReport:
    gad: GAD
    rank: int
    multiplicities: list[int]
    nil_indices: list[int]
    error: float
    relative_error: float
    coord_change: CoordChange
    diagnostics: dict

    @property
    def degrees(self) -> list[int]:
        return [nu - 1 for nu in self.nil_indices]

    @property
    def supports(self) -> list[LinearForm]:
        return [t.ell for t in self.gad.terms]

    @property
    def weights(self) -> list[Poly]:
        return [t.omega for t in self.gad.terms]

    def to_dict(self) -> dict:
        return {
            "n": self.gad.n,
            "d": self.gad.d,
            "rank": self.rank,
            "multiplicities": list(self.multiplicities),
            "nil_indices": list(self.nil_indices),
            "degrees": self.degrees,
            "supports": [[[c.real, c.imag] for c in ell.coeffs] for ell in self.supports],
            "weights": [poly_to_json(w) for w in self.weights],
            "terms": self.gad.to_json()["terms"],
            "error": self.error,
            "relative_apolar_error": self.relative_error,
            "coord_change": [[[z.real, z.imag] for z in row] for row in self.coord_change.matrix],
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def mult_matrices(
    fs: DualSeries,
    d: int,
    c: int | None,
    rng: np.random.Generator,
    svd_tol: float = DEFAULT_SVD_TOL,
    forced_rank: int | None = None,
) -> MultOps:
    fam = hankel_family(fs, d, c)
    qb = probe_and_rank(fam, rng, svd_tol, forced_rank)
    if qb.rank == 0:
        raise LocalizationError("Hankel matrices have numerical rank 0")
    U, V = qb.left, qb.right
    reduced = [U.conj().T @ H @ V for H in fam.matrices]
    N0 = reduced[0]
    cond = np.linalg.cond(N0)
    if not np.isfinite(cond) or cond > 1 / svd_tol:
        raise LocalizationError(
            f"projected H0 is numerically singular (cond={cond:.3g}); re-randomize coordinates"
        )
    # diagonal similarity by the probe's singular values: same operators,
    # much less non-normal, which keeps the nilpotency test honest
    root = np.sqrt(qb.singular_values[: qb.rank])
    mats = [root[:, None] * np.linalg.solve(N0, Nj) / root[None, :] for Nj in reduced[1:]]
    comm = 0.0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            scale = np.linalg.norm(mats[i]) * np.linalg.norm(mats[j])
            if scale > 0:
                comm = max(comm, np.linalg.norm(mats[i] @ mats[j] - mats[j] @ mats[i]) / scale)
    return MultOps(qb.rank, mats, qb, float(comm), float(cond))


def cluster_eigs(
    values: Sequence[complex],
    forced_clusters: int | None = None,
    cluster_tol: float = 1e-4,
    abs_tol: float = 0.0,
) -> list[list[int]]:
    """Single-linkage clustering of points in the complex plane.

    Without a forced count, the dendrogram is cut at
    ``max(cluster_tol * max pairwise distance, abs_tol)``.  Clusters come back
    ordered by their smallest member index.
    """
    values = np.asarray(values, dtype=complex)
    m = len(values)
    if m == 0:
        raise ContractError("no values to cluster")
    if forced_clusters is not None and not 1 <= forced_clusters <= m:
        raise ContractError(f"cannot form {forced_clusters} clusters from {m} values")
    if m == 1:
        return [[0]]
    pts = np.column_stack([values.real, values.imag])
    Z = linkage(pts, method="single", metric="euclidean")
    if forced_clusters is not None:
        labels = fcluster(Z, t=forced_clusters, criterion="maxclust")
    else:
        spread = float(Z[-1, 2]) if len(Z) else 0.0
        maxdist = max(
            (abs(a - b) for i, a in enumerate(values) for b in values[i + 1 :]), default=0.0
        )
        threshold = max(cluster_tol * maxdist, abs_tol)
        if spread <= threshold:
            return [list(range(m))]
        labels = fcluster(Z, t=threshold, criterion="distance")
    groups: dict[int, list[int]] = {}
    for idx, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(idx)
    return sorted(groups.values(), key=min)


def _reorder_schur(T: np.ndarray, Q: np.ndarray, labels: list[int]):
    """Unitary swaps making equal labels contiguous on the diagonal of ``T``."""
    order = sorted(range(len(labels)), key=lambda i: (labels[i], i))
    current = list(range(len(labels)))  # current[p] = original diagonal index at p
    for target, orig in enumerate(order):
        pos = current.index(orig)
        if pos != target:
            T, Q, info = lapack.ztrexc(T, Q, pos + 1, target + 1)
            if info != 0:
                raise ClusteringError(f"Schur reordering failed (info={info})")
            current.insert(target, current.pop(pos))
    return T, Q


def _partition_labels(parts: list[list[int]], m: int) -> list[int]:
    labels = [0] * m
    for c, idx in enumerate(parts):
        for i in idx:
            labels[i] = c
    return labels


def _split_blocks(mats, Q, sizes):
    rotated = [Q.conj().T @ M @ Q for M in mats]
    blocks, points = [], []
    start = 0
    for mu in sizes:
        sl = slice(start, start + mu)
        blk = [R[sl, sl] for R in rotated]
        blocks.append(blk)
        points.append([np.trace(B) / mu for B in blk])
        start += mu
    return blocks, points


def _local_block_set(mops: MultOps, lam, T, Q, parts) -> LocalBlockSet:
    sizes = [len(p) for p in parts]
    T2, Q2 = _reorder_schur(np.array(T), np.array(Q), _partition_labels(parts, T.shape[0]))
    blocks, points = _split_blocks(mops.matrices, Q2, sizes)
    pts = np.array(points, dtype=complex).reshape(len(sizes), mops.n)
    return LocalBlockSet(sizes, blocks, pts, Q2, T2, lam)


def _probe_schur(mops: MultOps, rng: np.random.Generator):
    lam = rng.standard_normal(mops.n)
    Mbar = sum(l * M for l, M in zip(lam, mops.matrices))
    T, Q = schur(Mbar.astype(complex), output="complex")
    return lam, T, Q


def multiplicities(
    mops: MultOps,
    rng: np.random.Generator,
    forced_clusters: int | None = None,
    cluster_tol: float = 1e-4,
    retries: int = 5,
) -> LocalBlockSet:
    """Cluster the Schur eigenvalues of a random combination and split into local blocks.

    Two independent probes must agree on the cluster sizes; otherwise the
    pair is redrawn up to ``retries`` times.
    """
    for attempt in range(retries):
        lam, T, Q = _probe_schur(mops, rng)
        parts = cluster_eigs(np.diag(T), forced_clusters, cluster_tol)
        check = cluster_eigs(np.diag(_probe_schur(mops, rng)[1]), forced_clusters, cluster_tol)
        sizes = sorted(len(p) for p in parts)
        if sizes == sorted(len(p) for p in check):
            return _local_block_set(mops, lam, T, Q, parts)
        log.debug("cluster sizes disagree on attempt %d", attempt)
    raise ClusteringError(f"cluster sizes unstable after {retries} attempts")


def candidate_block_sets(
    mops: MultOps, rng: np.random.Generator, cluster_tol: float = 1e-4
) -> list[LocalBlockSet]:
    """Local block splittings of one probe, from a single cluster up to the gap-rule partition.

    Eigenvalues of a defective local block scatter like a root of the
    rounding error, often far beyond any fixed gap threshold, so coarser cuts
    of the single-linkage tree are offered first for validation.
    """
    lam, T, Q = _probe_schur(mops, rng)
    values = np.diag(T)
    finest = cluster_eigs(values, None, cluster_tol)
    cuts = [[list(range(len(values)))]]
    cuts += [cluster_eigs(values, k) for k in range(2, len(finest) + 1)]
    if cuts[-1] != finest:
        cuts.append(finest)
    return [_local_block_set(mops, lam, T, Q, parts) for parts in cuts]


def nil_index(
    blocks: Sequence[np.ndarray],
    point: Sequence[complex],
    rng: np.random.Generator,
    nil_tol: float = 1e-6,
    fallback: bool = False,
) -> int:
    """Smallest ``p`` with ``(sum_j lam_j (B_j - xi_j I))^p`` numerically zero, after scaling to unit norm."""
    mu = blocks[0].shape[0]
    lam = rng.standard_normal(len(blocks))
    N = sum(l * (B - x * np.eye(mu)) for l, B, x in zip(lam, blocks, point))
    if np.linalg.norm(N) <= nil_tol:
        return 1
    Nhat = N / np.linalg.norm(N, 2)
    P = Nhat
    for p in range(1, mu + 1):
        if np.linalg.norm(P) <= nil_tol:
            return p
        P = P @ Nhat
    if fallback:
        # noisy block: the nil-index of a size-mu block is at most mu
        return mu
    raise NonNilpotentBlockError(f"local block of size {mu} is not nilpotent after shifting")


def solve_weights(
    f: Poly, supports: Sequence[LinearForm], degrees: Sequence[int]
) -> tuple[list[Poly], float]:
    """Least-squares weights ``omega_i`` of degree ``k_i`` with ``f ~ sum omega_i ell_i^(d-k_i)``."""
    d = f.degree
    nv = f.nvars
    if any(k > d for k in degrees):
        raise ContractError("a weight degree exceeds the form degree")
    target = monomials(nv, d, homogeneous_only=True)
    cols, layout = [], []
    for ell, k in zip(supports, degrees):
        power = ell.as_poly() ** (d - k)
        basis = monomials(nv, k, homogeneous_only=True)
        for m in basis:
            cols.append((Poly(nv, {m: 1.0}) * power).to_vector(target))
        layout.append(basis)
    A = np.column_stack(cols)
    if np.any(np.linalg.norm(A, axis=0) == 0):
        raise ContractError("system has a zero column (zero support)")
    b = f.to_vector(target)
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    residual = float(np.linalg.norm(A @ x - b))
    out, start = [], 0
    for basis in layout:
        out.append(Poly.from_vector(nv, basis, x[start : start + len(basis)]))
        start += len(basis)
    return out, residual


def random_coord_change(nvars: int, rng: np.random.Generator, orthogonal: bool = True) -> CoordChange:
    while True:
        G = rng.standard_normal((nvars, nvars))
        if orthogonal:
            Qm, R = np.linalg.qr(G)
            G = Qm * np.sign(np.diag(R))
        if np.linalg.cond(G) < 1e8:
            return CoordChange(G)


def _finish(f: Poly, supports, ks, sizes, nus, phi, diagnostics, opts) -> DecompositionReport:
    d = f.degree
    weights, residual = solve_weights(f, supports, ks)
    if opts.normalize_supports:
        scaled_s, scaled_w = [], []
        for ell, w, k in zip(supports, weights, ks):
            s = np.linalg.norm(ell.array())
            scaled_s.append(LinearForm(tuple(ell.array() / s)))
            scaled_w.append(w * s ** (d - k))
        supports, weights = scaled_s, scaled_w
    terms = [GADTerm(w, ell) for w, ell in zip(weights, supports)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        gad = GAD(f.nvars - 1, d, terms)
    T = Poly.zero(f.nvars)
    for t in terms:
        T = T + t.omega * t.ell.as_poly() ** (d - t.k)
    diff = f - T
    err = diff.norm()
    rel = apolar_norm(diff) / apolar_norm(f)
    diagnostics = dict(diagnostics, residual=residual)
    return DecompositionReport(gad, sum(sizes), list(sizes), list(nus), err, rel, phi, diagnostics)


def _localize(
    f: Poly, opts: DecomposeOptions, rng: np.random.Generator
) -> tuple[CoordChange, MultOps]:
    """One random coordinate change and the multiplication matrices it yields."""
    if opts.random_coords:
        phi = random_coord_change(f.nvars, rng, opts.orthogonal_coords)
    else:
        phi = CoordChange.identity(f.nvars)
    c = opts.split if opts.split is not None else default_split(f.degree)
    fs = check_f(change_coords(f, phi))
    return phi, mult_matrices(fs, f.degree, c, rng, opts.svd_tol, opts.forced_rank)


def _assemble(f: Poly, phi: CoordChange, mops: MultOps, lbs: LocalBlockSet, rng, opts) -> DecompositionReport:
    d = f.degree
    nus = [nil_index(blk, pt, rng, opts.nil_tol, opts.nil_fallback) for blk, pt in zip(lbs.blocks, lbs.points)]
    ks = [nu - 1 for nu in nus]
    supports = []
    for pt in lbs.points:
        local = np.concatenate([[1.0], pt])
        supports.append(LinearForm(tuple(phi.inverse @ local)))
    if any(k > d for k in ks):
        details = {
            "rank": mops.r,
            "multiplicities": list(lbs.sizes),
            "nil_indices": nus,
            "points": lbs.points,
            "supports": [ell.array() for ell in supports],
        }
        raise DegreeBoundError(
            f"nil-index {max(nus)} implies a weight of degree {max(ks)} > d={d} "
            f"(rank {mops.r}, multiplicities {lbs.sizes})",
            details,
        )
    diagnostics = {
        "rank_singular_values": mops.basis.singular_values,
        "commutator": mops.commutator,
        "conditioning": mops.conditioning,
        "points": lbs.points,
    }
    try:
        return _finish(f, supports, ks, lbs.sizes, nus, phi, diagnostics, opts)
    except ContractError as exc:
        # e.g. a split cluster whose two points coincide numerically
        raise ClusteringError(f"clustering produced an invalid decomposition: {exc}") from exc


def _consistent(rep: DecompositionReport, opts: DecomposeOptions) -> bool:
    """Small reconstruction error and each term's l-rank equal to its cluster size."""
    if not rep.relative_error <= opts.accept_tol:
        return False
    for term, mu in zip(rep.gad.terms, rep.multiplicities):
        if term.omega.is_zero() or ell_rank(term.omega, term.ell, opts.accept_tol) != mu:
            return False
    return True


def gad_decompose(
    f: Poly,
    options: DecomposeOptions | None = None,
    rng: np.random.Generator | int | None = 0,
) -> DecompositionReport:
    """Decompose a homogeneous form as ``sum_i omega_i * ell_i^(d - k_i)``.

    Raises :class:`DegreeBoundError` when a recovered nil-index exceeds what
    the degree allows, :class:`LocalizationError` when every coordinate draw
    leaves the projected ``H0`` singular, and :class:`ClusteringError` when
    eigenvalue clusters are unstable or a local block is not nilpotent.

    Without a forced cluster count, cuts of the eigenvalue tree are tried
    from coarsest to finest and the first one whose decomposition reproduces
    ``f`` (within ``accept_tol``) with l-ranks matching the multiplicities is
    kept.  This runs for ``coord_trials`` random coordinate changes; the most
    accurate consistent result wins, then a degree-bound error, then the most
    accurate of the rest.
    """
    opts = options or DecomposeOptions()
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if f.is_zero() or not f.is_homogeneous:
        raise ContractError("input must be a nonzero homogeneous form")
    d = f.degree
    if d < 1:
        raise ContractError("degree must be >= 1")
    nv = f.nvars
    if d == 1 or nv == 1:
        # a linear form (or a univariate power) is its own single-term GAD
        ell = LinearForm(tuple(f.to_vector(monomials(nv, 1, True)))) if d == 1 else LinearForm((1.0,))
        phi = CoordChange.identity(nv)
        return _finish(f, [ell], [0], [1], [1], phi, {"rank_singular_values": []}, opts)

    reports: list[DecompositionReport] = []
    errors: list[GADError] = []
    draws = max(opts.coord_trials, 1) if opts.random_coords else 1
    for attempt in range(draws):
        try:
            phi, mops = _localize(f, opts, rng)
            reports.append(_decompose_local(f, phi, mops, rng, opts))
        except GADError as exc:
            log.debug("coordinate draw %d: %s", attempt, exc)
            errors.append(exc)
    good = [r for r in reports if r.diagnostics["consistent"]]
    if good:
        return min(good, key=lambda r: r.relative_error)
    bound = [e for e in errors if isinstance(e, DegreeBoundError)]
    if bound:
        raise bound[0]
    if reports:
        return min(reports, key=lambda r: r.relative_error)
    raise errors[0]


def _decompose_local(
    f: Poly, phi: CoordChange, mops: MultOps, rng: np.random.Generator, opts: DecomposeOptions
) -> DecompositionReport:
    """Finish one coordinate draw: pick the clustering, then nil-indices and weights."""
    if opts.forced_clusters is not None:
        lbs = multiplicities(mops, rng, opts.forced_clusters, opts.cluster_tol, opts.retries)
        rep = _assemble(f, phi, mops, lbs, rng, opts)
        rep.diagnostics["consistent"] = _consistent(rep, opts)
        return rep
    outcome: DecompositionReport | GADError | None = None
    first_error: GADError | None = None
    for lbs in candidate_block_sets(mops, rng, opts.cluster_tol):
        try:
            outcome = _assemble(f, phi, mops, lbs, rng, opts)
        except GADError as exc:
            first_error = first_error or exc
            outcome = exc
            continue
        if _consistent(outcome, opts):
            outcome.diagnostics["consistent"] = True
            return outcome
    # no cut validated: a degree-bound failure on a coarser cut wins over the finest cut's result
    if isinstance(first_error, DegreeBoundError):
        raise first_error
    if isinstance(outcome, GADError):
        raise outcome
    assert outcome is not None
    outcome.diagnostics["consistent"] = False
    return outcome


def analyze(
    f: Poly, options: DecomposeOptions | None = None, rng: np.random.Generator | int | None = 0
) -> tuple[MultOps, list[LocalBlockSet]]:
    """Multiplication matrices and candidate block splittings, for inspection."""
    opts = options or DecomposeOptions()
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    _, mops = _localize(f, opts, rng)
    return mops, candidate_block_sets(mops, rng, opts.cluster_tol)
