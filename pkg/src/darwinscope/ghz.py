"""Semi-GHZ / GHZ-like branch decompositions of a pure state w.r.t. a partition.

A decomposition writes ``|Psi> = sum_i alpha_i |psi_i^(1)>...|psi_i^(n)>`` with
one normalized vector per fraction and branch.  General (linearly independent)
decompositions can be verified; detection only covers the orthonormal class,
where every fraction's branch vectors are pairwise orthogonal.

Branch indices are 0-based positions; fractions follow the partition's
canonical order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.linalg import null_space

from .errors import EnumerationTooLargeError, InfeasibleBranchCountError, LayoutMismatchError, MalformedPartitionError
from .hilbert import DEFAULT_TOL, PureState, SystemLayout, Tolerances, bipartite_matrix, embed_product, random_orthonormal
from .partitions import DEFAULT_ENUMERATION_CAP, Partition, all_partitions, bell_number, mutually_comparable

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SemiGHZDecomposition:
    layout: SystemLayout
    partition: Partition
    coefficients: np.ndarray
    vectors: tuple[np.ndarray, ...]  # per fraction: (d_j, n_branches), columns are branch vectors
    orthonormal: bool = False

    def __post_init__(self):
        if self.partition.n_systems != self.layout.n_systems:
            raise LayoutMismatchError("partition and layout disagree on the number of systems")
        coeffs = np.asarray(self.coefficients, dtype=complex).reshape(-1)
        vecs = tuple(np.asarray(v, dtype=complex) for v in self.vectors)
        if len(vecs) != self.partition.n:
            raise LayoutMismatchError(f"{len(vecs)} vector sets for {self.partition.n} fractions")
        for f, v in zip(self.partition.fractions, vecs):
            if v.shape != (self.layout.dim_of(f), coeffs.size):
                raise LayoutMismatchError(f"vector block of shape {v.shape} for fraction {f}")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "vectors", vecs)

    @property
    def n_branches(self) -> int:
        return self.coefficients.size

    def branch_vector(self, i: int) -> np.ndarray:
        """Global unit product vector of branch ``i``."""
        return embed_product(self.layout, self.partition.fractions, [v[:, i] for v in self.vectors])

    def branch_vectors(self) -> np.ndarray:
        return np.column_stack([self.branch_vector(i) for i in range(self.n_branches)])

    def state_vector(self) -> np.ndarray:
        return self.branch_vectors() @ self.coefficients


@dataclass(frozen=True)
class VerificationReport:
    valid: bool
    reconstruction_error: float
    gram_ranks: tuple[int, ...]
    n_branches: int
    orthonormal: bool
    problems: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.valid


def verify_semi_ghz(
    state: PureState, dec: SemiGHZDecomposition, tol: float = 1e-8, policy: Tolerances = DEFAULT_TOL
) -> VerificationReport:
    """Check every decomposition invariant at tolerance ``tol``."""
    if state.layout != dec.layout:
        raise LayoutMismatchError(f"state layout {state.dims} vs decomposition layout {dec.layout.dims}")
    problems = []
    nb = dec.n_branches
    if nb < 2:
        problems.append(f"needs at least 2 branches, has {nb}")
    if nb and np.min(np.abs(dec.coefficients)) <= tol:
        problems.append("a branch coefficient vanishes")
    ranks = []
    max_overlap = 0.0
    for j, v in enumerate(dec.vectors, start=1):
        norms = np.linalg.norm(v, axis=0)
        if np.any(np.abs(norms - 1.0) > max(tol, policy.normalization)):
            problems.append(f"fraction {j}: branch vectors not normalized")
        s = np.linalg.svd(v, compute_uv=False)
        rank = int(np.sum(s > policy.rank))
        ranks.append(rank)
        if rank < nb:
            problems.append(f"fraction {j}: branch vectors not linearly independent (rank {rank} < {nb})")
        gram = v.conj().T @ v
        off = np.abs(gram - np.diag(np.diag(gram)))
        max_overlap = max(max_overlap, float(off.max()) if off.size else 0.0)
    if dec.orthonormal and max_overlap > max(tol, 1e-8):
        problems.append(f"orthonormal flag set but overlaps reach {max_overlap:.3g}")
    err = float(np.linalg.norm(state.amplitudes - dec.state_vector()))
    if err > tol:
        problems.append(f"reconstruction error {err:.3g} exceeds {tol:.3g}")
    if dec.orthonormal:
        weight = float(np.sum(np.abs(dec.coefficients) ** 2))
        if abs(weight - 1.0) > max(tol, policy.normalization):
            problems.append(f"orthonormal branches but sum |alpha|^2 = {weight!r}")
    return VerificationReport(not problems, err, tuple(ranks), nb, dec.orthonormal, tuple(problems))


def _fraction_axes(partition: Partition, fid0: int) -> list[int]:
    return [s - 1 for s in partition.fractions[fid0]]


def product_vectors_in_subspace(
    basis: np.ndarray,
    dims: tuple[int, int],
    count: int | None = None,
    tol: float = 1e-8,
    seed: int = 0,
    max_restarts: int | None = None,
    max_iters: int = 200,
) -> tuple[np.ndarray, np.ndarray] | None:
    """Find ``count`` orthonormal product vectors ``a_i (x) b_i`` inside span(``basis``).

    ``basis`` has orthonormal columns in ``C^(d1*d2)``.  Each vector is found
    by alternating rank-one ascent (project onto the subspace, take the leading
    singular pair) from seeded random starts; after each hit the search space
    shrinks to the orthogonal complement of the hit inside the subspace.
    Returns ``(A, B)`` with the factors as columns, or ``None`` once the
    restart budget (default ``64 * count``) is spent.
    """
    q = np.asarray(basis, dtype=complex)
    d1, d2 = dims
    if q.shape[0] != d1 * d2:
        raise LayoutMismatchError(f"basis rows {q.shape[0]} != {d1}*{d2}")
    count = q.shape[1] if count is None else count
    if count > q.shape[1]:
        return None
    budget = 64 * count if max_restarts is None else max_restarts
    rng = np.random.default_rng(seed)
    lefts, rights = [], []
    used = 0
    for _ in range(count):
        hit = None
        while hit is None and used < budget:
            used += 1
            c = rng.normal(size=q.shape[1]) + 1j * rng.normal(size=q.shape[1])
            hit = _rank_one_ascent(q, q @ c, d1, d2, tol, max_iters)
        if hit is None:
            return None
        u, v = hit
        lefts.append(u)
        rights.append(v)
        coords = q.conj().T @ np.kron(u, v)
        if q.shape[1] > 1:
            q = q @ null_space(coords.conj()[None, :])
    return np.column_stack(lefts), np.column_stack(rights)


def _rank_one_ascent(q, x, d1, d2, tol, max_iters):
    """Alternate projection onto span(q) and best rank-one approximation.

    Gives up after 5 consecutive steps that shrink the residual by less than
    0.1 %: the iterate sits at a non-product fixed point.
    """
    u_, _, vh = np.linalg.svd(x.reshape(d1, d2))
    u, v = u_[:, 0], vh[0]
    best, stall = np.inf, 0
    for _ in range(max_iters):
        p = np.kron(u, v)
        coords = q.conj().T @ p
        resid = float(np.linalg.norm(p - q @ coords))
        if resid <= tol:
            return u, v
        if resid > 0.999 * best:
            stall += 1
            if stall >= 5:
                return None
        else:
            stall = 0
        best = min(best, resid)
        u_, _, vh = np.linalg.svd((q @ coords).reshape(d1, d2))
        u, v = u_[:, 0], vh[0]
    return None


def _first_phase(v: np.ndarray, eps: float = 1e-10) -> complex:
    idx = np.flatnonzero(np.abs(v) > eps)
    if idx.size == 0:
        return 1.0
    x = v[idx[0]]
    return x / abs(x)


def canonical_form(dec: SemiGHZDecomposition) -> SemiGHZDecomposition:
    """Fix phases (first nonzero amplitude of each branch vector real positive) and order.

    Branches are sorted by descending ``|alpha|``; ties fall back to the
    positions of the leading amplitudes, then their values.
    """
    coeffs = dec.coefficients.copy()
    vecs = [v.copy() for v in dec.vectors]
    for i in range(dec.n_branches):
        for v in vecs:
            ph = _first_phase(v[:, i])
            v[:, i] = v[:, i] * np.conj(ph)
            coeffs[i] *= ph

    def key(i):
        lead = tuple(int(np.flatnonzero(np.abs(v[:, i]) > 1e-8)[0]) for v in vecs)
        vals = tuple(round(float(x), 8) for x in np.concatenate([v[:, i].real for v in vecs]))
        return (-round(float(abs(coeffs[i])), 8), lead, vals)

    order = sorted(range(dec.n_branches), key=key)
    return SemiGHZDecomposition(
        dec.layout, dec.partition, coeffs[order], tuple(v[:, order] for v in vecs), dec.orthonormal
    )


def _assemble(state: PureState, partition: Partition, vectors, tol: float) -> SemiGHZDecomposition | None:
    """Set coefficients by projection and accept if orthonormal with small residual."""
    layout = state.layout
    orth_tol = max(tol, 1e-8)
    for v in vectors:
        gram = v.conj().T @ v
        if np.max(np.abs(gram - np.eye(gram.shape[0]))) > orth_tol:
            return None
    tmp = SemiGHZDecomposition(layout, partition, np.zeros(vectors[0].shape[1]), tuple(vectors), True)
    branches = tmp.branch_vectors()
    coeffs = branches.conj().T @ state.amplitudes
    if np.min(np.abs(coeffs)) <= tol:
        return None
    resid = np.linalg.norm(state.amplitudes - branches @ coeffs)
    if resid > tol:
        return None
    return canonical_form(SemiGHZDecomposition(layout, partition, coeffs, tuple(vectors), True))


def detect_ghz(
    state: PureState,
    partition: Partition,
    tol: float = 1e-8,
    seed: int = 0,
    max_restarts: int | None = None,
    fallback: bool = True,
    policy: Tolerances = DEFAULT_TOL,
) -> SemiGHZDecomposition | None:
    """Find a GHZ-like (orthonormal) decomposition of ``state`` w.r.t. ``partition``.

    Returns ``None`` when no such decomposition with reconstruction residual
    ``<= tol`` is found.
    """
    layout = state.layout
    if partition.n_systems != layout.n_systems:
        raise LayoutMismatchError(f"partition over {partition.n_systems} systems, state over {layout.n_systems}")
    if partition.n < 2:
        raise MalformedPartitionError("detection needs a partition with at least 2 fractions")
    psi = state.tensor()
    n = partition.n

    # Every fraction's reduced operator must have the same rank r >= 2 and the same spectrum.
    spectra = []
    for j in range(n):
        s = np.linalg.svd(bipartite_matrix(psi, _fraction_axes(partition, j)), compute_uv=False)
        spectra.append(s)
    ranks = [int(np.sum(s > policy.rank)) for s in spectra]
    r = ranks[0]
    if r < 2 or any(k != r for k in ranks):
        return None
    weights = [s[:r] ** 2 for s in spectra]
    if max(np.max(np.abs(w - weights[0])) for w in weights) > 4 * tol + 1e-12:
        return None

    dims = [layout.dim_of(f) for f in partition.fractions]
    if n == 2:
        mat = bipartite_matrix(psi, _fraction_axes(partition, 0))
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        return _assemble(state, partition, [u[:, :r], vh[:r].T], tol)

    j1, j2 = sorted(range(n), key=lambda j: (dims[j], j))[:2]
    pair_axes = _fraction_axes(partition, j1) + _fraction_axes(partition, j2)
    mat = bipartite_matrix(psi, pair_axes)
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    support = u[:, s > policy.rank]
    if support.shape[1] != r:
        return None
    found = product_vectors_in_subspace(support, (dims[j1], dims[j2]), r, tol=tol, seed=seed, max_restarts=max_restarts)
    if found is None:
        if fallback:
            return _detect_by_fit(state, partition, r, tol, seed)
        return None
    a, b = found

    # Condition on each seed-pair branch; the remainder must factorize over the other fractions.
    rest_sys = [s for s in range(layout.n_systems) if s not in pair_axes]
    rest_dims = [layout.dims[s] for s in rest_sys]
    vectors: list[np.ndarray | None] = [None] * n
    vectors[j1], vectors[j2] = a, b
    conditional = np.stack([np.kron(a[:, i], b[:, i]).conj() @ mat for i in range(r)])
    for j in range(n):
        if j in (j1, j2):
            continue
        local_axes = [rest_sys.index(s) for s in _fraction_axes(partition, j)]
        cols = []
        for i in range(r):
            m = bipartite_matrix(conditional[i].reshape(rest_dims), local_axes)
            uu, ss, _ = np.linalg.svd(m, full_matrices=False)
            if ss.size > 1 and ss[1] > tol:
                return None
            cols.append(uu[:, 0])
        vectors[j] = np.column_stack(cols)
    return _assemble(state, partition, vectors, tol)


def _detect_by_fit(state, partition, r, tol, seed):
    from .approx import fit_ghz

    if r > min(state.layout.dim_of(f) for f in partition.fractions):
        return None
    fit = fit_ghz(state, partition, r, seed=seed, restarts=4)
    if fit.delta2 > 1e-6:
        return None
    log.debug("detect_ghz: product search stalled, trying fitted frame (delta2=%.3g)", fit.delta2)
    return _assemble(state, partition, list(fit.frame.vectors), tol)


@dataclass(frozen=True)
class BranchMatch:
    """Branch ``i`` of the first decomposition equals ``exp(1j*phases[i])`` times branch ``permutation[i]`` of the second."""

    permutation: tuple[int, ...]
    phases: np.ndarray = field(compare=False)
    max_residual: float = 0.0


def match_decompositions(
    da: SemiGHZDecomposition, db: SemiGHZDecomposition, tol: float = 1e-8
) -> BranchMatch | None:
    """Pair up the global branch product vectors of two decompositions of the same state."""
    if da.layout != db.layout:
        raise LayoutMismatchError("decompositions live on different layouts")
    if da.n_branches != db.n_branches:
        return None
    ba, bb = da.branch_vectors(), db.branch_vectors()
    overlap = ba.conj().T @ bb
    k = da.n_branches
    perm = [-1] * k
    taken = set()
    for flat in np.argsort(-np.abs(overlap), axis=None, kind="stable"):
        i, j = divmod(int(flat), k)
        if perm[i] < 0 and j not in taken:
            perm[i] = j
            taken.add(j)
    phases = np.array([-np.angle(overlap[i, perm[i]]) for i in range(k)])
    resid = max(
        float(np.linalg.norm(ba[:, i] - np.exp(1j * phases[i]) * bb[:, perm[i]])) for i in range(k)
    )
    if resid > tol:
        return None
    return BranchMatch(tuple(perm), phases, resid)


def binary_splits(fraction: tuple[int, ...]):
    """Unordered two-block splits of a fraction, smaller block first, then lexicographic."""
    k = len(fraction)
    for size in range(1, k // 2 + 1):
        for part in combinations(fraction, size):
            if 2 * size == k and fraction[0] not in part:
                continue
            yield part


def fine_grain(
    state: PureState, dec: SemiGHZDecomposition, tol: float = 1e-8, seed: int = 0
) -> SemiGHZDecomposition:
    """Split environment fractions while the state stays GHZ-like; returns the finest form reached.

    Fractions are tried smallest first; each step accepts the first binary split
    (in :func:`binary_splits` order) for which detection still succeeds.
    Without a marked system every fraction is eligible.
    """
    current = dec
    part = dec.partition
    while True:
        candidates = sorted(part.environment_ids, key=lambda f: (len(part.fraction(f)), f))
        refined = None
        for fid in candidates:
            frac = part.fraction(fid)
            if len(frac) < 2:
                continue
            for piece in binary_splits(frac):
                trial = part.split(fid, piece)
                found = detect_ghz(state, trial, tol=tol, seed=seed)
                if found is not None:
                    refined = found
                    break
            if refined is not None:
                break
        if refined is None:
            return current
        current, part = refined, refined.partition


@dataclass(frozen=True)
class ScanReport:
    reference: SemiGHZDecomposition | None = field(repr=False)
    enumerated: int
    comparable: int
    detected: int
    violations: tuple[str, ...]  # partitions whose decomposition does not match the reference


def etut_scan(
    state: PureState,
    partition: Partition,
    tol: float = 1e-8,
    match_tol: float = 1e-6,
    seed: int = 0,
    cap: int = DEFAULT_ENUMERATION_CAP,
    allow_large: bool = False,
) -> ScanReport:
    """Detect over every partition mutually comparable with ``partition`` and match each result to the reference.

    The reference is the decomposition detected w.r.t. ``partition`` itself;
    when none exists the scan is empty.  A marked system fraction is held fixed.
    """
    reference = detect_ghz(state, partition, tol=tol, seed=seed)
    if reference is None:
        return ScanReport(None, 0, 0, 0, ())
    fixed = partition.system_fraction
    free = partition.n_systems - (len(fixed) if fixed else 0)
    if free > cap and not allow_large:
        raise EnumerationTooLargeError(
            f"scanning {free} free systems visits Bell({free})={bell_number(free)} partitions, above the cap of {cap}"
        )
    enumerated = comparable = detected = 0
    violations = []
    for b in all_partitions(partition.n_systems, fixed):
        enumerated += 1
        if b.n < 3 or not mutually_comparable(partition, b):
            continue
        comparable += 1
        found = detect_ghz(state, b, tol=tol, seed=seed)
        if found is None:
            continue
        detected += 1
        if match_decompositions(reference, found, match_tol) is None:
            violations.append(str(b))
    return ScanReport(reference, enumerated, comparable, detected, tuple(violations))


def random_ghz(
    layout: SystemLayout, partition: Partition, n_branches: int, rng: np.random.Generator, coefficients=None
) -> SemiGHZDecomposition:
    """GHZ-like decomposition with Haar-random orthonormal frames and random (or given) coefficients."""
    dims = [layout.dim_of(f) for f in partition.fractions]
    if n_branches > min(dims):
        raise InfeasibleBranchCountError(f"{n_branches} branches do not fit fraction dims {dims}")
    if coefficients is None:
        coefficients = rng.uniform(0.2, 1.0, n_branches) * np.exp(2j * np.pi * rng.uniform(size=n_branches))
    c = np.asarray(coefficients, dtype=complex)
    c = c / np.linalg.norm(c)
    vecs = tuple(random_orthonormal(d, n_branches, rng) for d in dims)
    return SemiGHZDecomposition(layout, partition, c, vecs, True)
