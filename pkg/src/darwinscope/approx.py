"""Imperfect correlations: best GHZ-like frame for a partition and its deviation from a reference.

``delta2`` is the weight of a state outside the branch set ``{(x)_x phi_i^(x)}``
of a frame.  :func:`fit_ghz` minimizes it by alternating per-fraction updates;
:func:`epsilon_matrices` compares the fitted branches with a reference
decomposition, separating system and environment overlaps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentFailedError, InfeasibleBranchCountError, LayoutMismatchError, MalformedPartitionError
from .ghz import SemiGHZDecomposition
from .hilbert import PureState, SystemLayout, bipartite_matrix, embed_product, random_orthonormal
from .partitions import Partition


@dataclass(frozen=True, eq=False)
class ProductBasisFrame:
    """Per fraction, ``n_branches`` orthonormal columns; column ``i`` of every block forms branch ``i``."""

    layout: SystemLayout
    partition: Partition
    vectors: tuple[np.ndarray, ...]

    def __post_init__(self):
        vecs = tuple(np.asarray(v, dtype=complex) for v in self.vectors)
        if len(vecs) != self.partition.n:
            raise LayoutMismatchError(f"{len(vecs)} frames for {self.partition.n} fractions")
        k = vecs[0].shape[1]
        for f, v in zip(self.partition.fractions, vecs):
            d = self.layout.dim_of(f)
            if v.shape != (d, k):
                raise LayoutMismatchError(f"frame block {v.shape} for fraction {f} (dim {d})")
            if np.max(np.abs(v.conj().T @ v - np.eye(k))) > 1e-10:
                raise LayoutMismatchError(f"frame block for fraction {f} is not orthonormal")
        object.__setattr__(self, "vectors", vecs)

    @property
    def n_branches(self) -> int:
        return self.vectors[0].shape[1]

    def coordinates(self) -> np.ndarray:
        """Branch product vectors in the computational representation, one per column."""
        return np.column_stack(
            [
                embed_product(self.layout, self.partition.fractions, [v[:, i] for v in self.vectors])
                for i in range(self.n_branches)
            ]
        )


def delta2(state: PureState, frame: ProductBasisFrame) -> float:
    if state.layout != frame.layout:
        raise LayoutMismatchError(f"state dims {state.dims} vs frame dims {frame.layout.dims}")
    amps = frame.coordinates().conj().T @ state.amplitudes
    return float(min(1.0, max(0.0, 1.0 - np.sum(np.abs(amps) ** 2))))


@dataclass(frozen=True, eq=False)
class EpsilonMatrices:
    """Phase-stripped overlaps between reference branches (rows) and fitted branches (columns)."""

    permutation: tuple[int, ...]
    theta: np.ndarray
    eps: np.ndarray
    theta_s: np.ndarray
    eps_s: np.ndarray
    theta_sbar: np.ndarray
    eps_sbar: np.ndarray

    def consistency_error(self) -> float:
        """Max deviation of ``e^{i th}(1+eps)`` from the product of system and environment factors."""
        eye = np.eye(self.eps.shape[0])
        lhs = np.exp(1j * self.theta)[None, :] * (eye + self.eps)
        rhs = np.exp(1j * (self.theta_s + self.theta_sbar))[None, :] * (
            eye + eye * self.eps_s + eye * self.eps_sbar + self.eps_s * self.eps_sbar
        )
        return float(np.max(np.abs(lhs - rhs)))

    @property
    def max_abs_eps(self) -> float:
        return float(np.max(np.abs(self.eps)))

    @property
    def max_abs_eps_s_diag(self) -> float:
        return float(np.max(np.abs(np.diag(self.eps_s))))


@dataclass(frozen=True, eq=False)
class GhzFitResult:
    frame: ProductBasisFrame
    delta2: float
    coefficients: np.ndarray
    beta_weight: float
    converged: bool
    iterations: int
    restart_winner: int
    history: tuple[float, ...] = field(repr=False)
    monotone: bool = True
    epsilon: EpsilonMatrices | None = None

    @property
    def theta(self):
        return None if self.epsilon is None else self.epsilon.theta


def _fraction_tensor(state: PureState, partition: Partition) -> np.ndarray:
    """State as a tensor with one axis per fraction (canonical fraction order)."""
    axes = [s - 1 for f in partition.fractions for s in f]
    t = np.transpose(state.tensor(), axes)
    return t.reshape([state.layout.dim_of(f) for f in partition.fractions])


def _conditional(t: np.ndarray, frames: list[np.ndarray], x: int) -> np.ndarray:
    """Columns ``w_i = (<phi_i^(x')| for all x' != x) |Psi>``; shape (d_x, k)."""
    n = t.ndim
    ops: list = [t, list(range(n))]
    for y in range(n):
        if y != x:
            ops += [frames[y].conj(), [y, n]]
    return np.einsum(*ops, [x, n], optimize=True)


def _objective(t, frames) -> float:
    w = _conditional(t, frames, 0)
    c = np.sum(frames[0].conj() * w, axis=0)
    return float(np.sum(np.abs(c) ** 2))


def _run(t, frames, max_iters, conv_tol):
    """Minorize-maximize sweeps; returns (frames, history, converged, iterations, monotone)."""
    n = t.ndim
    frames = [f.copy() for f in frames]
    history = [_objective(t, frames)]
    monotone = True
    for it in range(1, max_iters + 1):
        for x in range(n):
            w = _conditional(t, frames, x)
            c = np.sum(frames[x].conj() * w, axis=0)
            u, _, vh = np.linalg.svd(w * c.conj()[None, :], full_matrices=False)
            frames[x] = u @ vh
        f = _objective(t, frames)
        prev = history[-1]
        history.append(f)
        if f < prev - 1e-12:
            monotone = False
        if abs(f - prev) <= conv_tol * max(f, 1e-300):
            return frames, history, True, it, monotone
    return frames, history, False, max_iters, monotone


def fit_ghz(
    state: PureState,
    partition: Partition,
    n_branches: int | None = None,
    seed: int = 0,
    restarts: int = 16,
    max_iters: int = 500,
    conv_tol: float = 1e-12,
    reference: SemiGHZDecomposition | None = None,
) -> GhzFitResult:
    """Frame of ``n_branches`` product branches maximizing the captured weight ``1 - delta2``.

    Restart 0 starts from the leading eigenvectors of each fraction's reduced
    operator, the others from seeded Haar-random frames.  The best run wins,
    earlier restarts breaking ties.  ``n_branches`` defaults to the branch
    count of ``reference``.
    """
    if n_branches is None:
        if reference is None:
            raise InfeasibleBranchCountError("give n_branches or a reference decomposition")
        n_branches = reference.n_branches
    if state.layout.n_systems != partition.n_systems:
        raise LayoutMismatchError("partition and state cover different systems")
    dims = [state.layout.dim_of(f) for f in partition.fractions]
    if n_branches < 2 or n_branches > min(dims):
        raise InfeasibleBranchCountError(
            f"branch count {n_branches} must lie in [2, {min(dims)}] for fraction dims {dims}"
        )
    t = _fraction_tensor(state, partition)
    rng = np.random.default_rng(seed)
    best = None
    for r in range(max(1, restarts)):
        if r == 0:
            init = []
            for x in range(t.ndim):
                u, _, _ = np.linalg.svd(bipartite_matrix(t, [x]), full_matrices=False)
                init.append(u[:, :n_branches])
        else:
            init = [random_orthonormal(d, n_branches, rng) for d in dims]
        frames, history, converged, iters, monotone = _run(t, init, max_iters, conv_tol)
        if best is None or history[-1] > best[1][-1]:
            best = (frames, history, converged, iters, monotone, r)
    frames, history, converged, iters, monotone, winner = best
    frame = ProductBasisFrame(state.layout, partition, tuple(frames))
    coeffs = frame.coordinates().conj().T @ state.amplitudes
    d2 = delta2(state, frame)
    result = GhzFitResult(frame, d2, coeffs, d2, converged, iters, winner, tuple(history), monotone)
    if reference is not None:
        result = GhzFitResult(
            frame, d2, coeffs, d2, converged, iters, winner, tuple(history), monotone,
            epsilon_matrices(reference, result),
        )
    return result


def _env_vectors(layout: SystemLayout, partition: Partition, blocks, k: int) -> np.ndarray:
    """Product of the environment-fraction vectors of each branch, on the environment systems in ascending order."""
    env_ids = partition.environment_ids
    env_sys = sorted(s for fid in env_ids for s in partition.fraction(fid))
    relabel = {s: i + 1 for i, s in enumerate(env_sys)}
    sub = SystemLayout(tuple(layout.dims[s - 1] for s in env_sys))
    groups = [[relabel[s] for s in partition.fraction(fid)] for fid in env_ids]
    return np.column_stack(
        [embed_product(sub, groups, [blocks[fid - 1][:, i] for fid in env_ids]) for i in range(k)]
    )


def _greedy_alignment(overlap: np.ndarray) -> list[int]:
    k = overlap.shape[0]
    perm = [-1] * k
    taken = set()
    for flat in np.argsort(-np.abs(overlap), axis=None, kind="stable"):
        i, j = divmod(int(flat), overlap.shape[1])
        if perm[i] < 0 and j not in taken:
            perm[i] = j
            taken.add(j)
    return perm


def _strip_phases(o: np.ndarray):
    theta = np.angle(np.diag(o))
    return theta, o * np.exp(-1j * theta)[None, :] - np.eye(o.shape[0])


def epsilon_matrices(reference: SemiGHZDecomposition, fit) -> EpsilonMatrices:
    """Overlap deviations between a reference decomposition and a fitted frame.

    ``fit`` is a :class:`GhzFitResult` or :class:`ProductBasisFrame`.  Both
    partitions must mark the same system fraction.  Fitted branches are
    reordered greedily by overlap magnitude; an assignment overlap below 0.5
    raises :class:`AlignmentFailedError`.
    """
    frame = fit.frame if isinstance(fit, GhzFitResult) else fit
    pa, pb = reference.partition, frame.partition
    if reference.layout != frame.layout:
        raise LayoutMismatchError("reference and fit live on different layouts")
    if pa.system is None or pb.system is None or pa.system_fraction != pb.system_fraction:
        raise MalformedPartitionError("both partitions must mark the same system fraction")
    k = reference.n_branches
    if frame.n_branches != k:
        raise AlignmentFailedError(f"branch counts differ: {k} vs {frame.n_branches}")
    overlap = reference.branch_vectors().conj().T @ frame.coordinates()
    perm = _greedy_alignment(overlap)
    if min(abs(overlap[i, perm[i]]) for i in range(k)) < 0.5:
        raise AlignmentFailedError("best branch assignment has an overlap below 0.5")
    overlap = overlap[:, perm]
    o_s = reference.vectors[pa.system - 1].conj().T @ frame.vectors[pb.system - 1][:, perm]
    env_a = _env_vectors(reference.layout, pa, reference.vectors, k)
    env_b = _env_vectors(frame.layout, pb, frame.vectors, k)[:, perm]
    o_sbar = env_a.conj().T @ env_b
    theta, eps = _strip_phases(overlap)
    theta_s, eps_s = _strip_phases(o_s)
    theta_sbar, eps_sbar = _strip_phases(o_sbar)
    return EpsilonMatrices(tuple(perm), theta, eps, theta_s, eps_s, theta_sbar, eps_sbar)
