"""Redundancy of system information in environment fragments.

Classical mutual information is evaluated from projective joint outcome
probabilities.  A fragment carries a perfect record of a pointer observable
when the fragment states conditioned on the pointer outcomes have pairwise
orthogonal supports (root fidelity ~ 0); for such fragments some fragment
observable reaches ``I = H(pointer)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import (
    DegeneratePointerError,
    EnumerationTooLargeError,
    InvalidFractionError,
    LayoutMismatchError,
    MalformedPartitionError,
    OverlappingSupportsError,
)
from .hilbert import HermitianObservable, PureState, bipartite_matrix, entropy_from_probabilities, partial_trace
from .partitions import Partition, set_partitions


@dataclass(frozen=True, eq=False)
class MeasurementDistribution:
    """Joint outcome probabilities ``p(S_i, F_j)`` (rows: S outcomes, columns: F outcomes)."""

    joint: np.ndarray

    def __post_init__(self):
        p = np.array(self.joint, dtype=float)
        if np.any(p < -1e-12):
            raise ValueError("negative joint probability")
        p[p < 0] = 0.0
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"joint probabilities sum to {p.sum()!r}")
        object.__setattr__(self, "joint", p)

    @property
    def p_s(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    @property
    def p_f(self) -> np.ndarray:
        return self.joint.sum(axis=0)

    def entropy_s(self) -> float:
        return entropy_from_probabilities(self.p_s)

    def entropy_f(self) -> float:
        return entropy_from_probabilities(self.p_f)

    def conditional_entropy_s_given_f(self) -> float:
        """H(S|F) = -sum_j p(F_j) sum_i p(S_i|F_j) log2 p(S_i|F_j)."""
        return entropy_from_probabilities(self.joint) - self.entropy_f()

    def mutual_information(self) -> float:
        return self.entropy_s() - self.conditional_entropy_s_given_f()


def joint_distribution(state: PureState, s_obs: HermitianObservable, f_obs: HermitianObservable) -> MeasurementDistribution:
    layout = state.layout
    if set(s_obs.targets) & set(f_obs.targets):
        raise OverlappingSupportsError(f"observables share systems {sorted(set(s_obs.targets) & set(f_obs.targets))}")
    for obs in (s_obs, f_obs):
        layout.check_subset(obs.targets)
        if layout.dim_of(obs.targets) != obs.dim:
            raise LayoutMismatchError(f"observable of dim {obs.dim} on systems {obs.targets}")
    axes = [s - 1 for s in s_obs.targets + f_obs.targets]
    rest = [a for a in range(layout.n_systems) if a not in axes]
    t = np.transpose(state.tensor(), axes + rest).reshape(s_obs.dim, f_obs.dim, -1)
    amp = np.einsum("as,bf,abr->sfr", s_obs.eigenvectors.conj(), f_obs.eigenvectors.conj(), t)
    probs = np.sum(np.abs(amp) ** 2, axis=2)
    gs, gf = s_obs.outcome_groups(), f_obs.outcome_groups()
    joint = np.array([[probs[np.ix_(a, b)].sum() for b in gf] for a in gs])
    return MeasurementDistribution(joint)


def mutual_information(state: PureState, s_obs: HermitianObservable, f_obs: HermitianObservable) -> float:
    """Classical mutual information I(S:F) = H(S) - H(S|F) in bits."""
    return joint_distribution(state, s_obs, f_obs).mutual_information()


class _Branches:
    """Environment vectors conditioned on each pointer outcome."""

    def __init__(self, state: PureState, pointer: HermitianObservable):
        if not pointer.nondegenerate:
            raise DegeneratePointerError("pointer observable must be nondegenerate")
        layout = state.layout
        targets = layout.check_subset(pointer.targets, proper=True)
        if layout.dim_of(targets) != pointer.dim:
            raise LayoutMismatchError(f"pointer of dim {pointer.dim} on systems {targets}")
        self.env = layout.complement(targets)
        self.env_dims = [layout.dims[s - 1] for s in self.env]
        mat = bipartite_matrix(state.tensor(), [s - 1 for s in targets])
        cond = pointer.eigenvectors.conj().T @ mat
        self.p = np.sum(np.abs(cond) ** 2, axis=1)
        self.active = [i for i in range(cond.shape[0]) if self.p[i] > 1e-14]
        self.vectors = {i: cond[i].reshape(self.env_dims) for i in self.active}
        self.h_pointer = entropy_from_probabilities(self.p)

    def blocks(self, fragment: Sequence[int]) -> dict[int, np.ndarray]:
        """Per outcome, the matrix M_i with rho_i^F = M_i M_i^dag / p_i."""
        axes = [self.env.index(s) for s in fragment]
        return {i: bipartite_matrix(v, axes) for i, v in self.vectors.items()}

    def root_fidelity(self, mi: np.ndarray, mj: np.ndarray, i: int, j: int) -> float:
        cross = mi.conj().T @ mj
        return float(np.sum(np.linalg.svd(cross, compute_uv=False)) / np.sqrt(self.p[i] * self.p[j]))

    def perfect_record(self, fragment: Sequence[int], tol: float) -> bool:
        if len(self.active) < 2:
            return False
        blocks = self.blocks(fragment)
        return all(self.root_fidelity(blocks[i], blocks[j], i, j) <= tol for i, j in combinations(self.active, 2))

    def best_information(self, fragment: Sequence[int], weights: np.ndarray) -> float:
        """I(pointer : F) maximized over two candidate fragment bases.

        The candidates are the eigenbasis of the fragment's reduced state and the
        eigenbasis of a generic weighted sum of the conditional states.
        """
        blocks = self.blocks(fragment)
        rhos = {i: m @ m.conj().T for i, m in blocks.items()}
        total = sum(rhos.values())
        mixed = sum(weights[i] * rhos[i] / self.p[i] for i in rhos)
        best = 0.0
        for op in (total, mixed):
            _, basis = np.linalg.eigh(op)
            joint = np.zeros((len(self.p), basis.shape[1]))
            for i, rho in rhos.items():
                joint[i] = np.real(np.einsum("ak,ab,bk->k", basis.conj(), rho, basis))
            joint[joint < 0] = 0.0
            joint /= joint.sum()
            dist = MeasurementDistribution(joint)
            best = max(best, dist.mutual_information())
        return best


@dataclass(frozen=True)
class RedundancyReport:
    pointer_targets: tuple[int, ...]
    delta: float
    r_delta: int
    fragments: tuple[tuple[int, ...], ...]
    n_env: int
    h_pointer: float
    search: str = "exhaustive"
    fragment_information: tuple[float, ...] = field(default=())

    def key_values(self) -> list[str]:
        frags = ";".join(",".join(str(s) for s in f) for f in self.fragments)
        return [
            f"R_delta={self.r_delta}",
            f"delta={self.delta!r}",
            f"n_fragments={len(self.fragments)}",
            f"fragments={frags}",
            f"H_pointer_bits={self.h_pointer:.16e}",
        ]


def redundancy(
    state: PureState,
    pointer: HermitianObservable,
    delta: float = 0.0,
    exhaustive_cap: int = 8,
    allow_greedy: bool = True,
    record_tol: float = 1e-8,
    seed: int = 0,
) -> RedundancyReport:
    """Largest number of disjoint environment fragments holding all but ``delta`` of the pointer information.

    For ``delta == 0`` a fragment qualifies when its pointer-conditioned states
    are perfectly distinguishable.  For ``delta > 0`` it qualifies when some
    fragment observable (searched over two candidate bases, see
    ``_Branches.best_information``) reaches ``I >= (1 - delta) H(pointer)``.
    Up to ``exhaustive_cap`` environment systems every fragmentation is tried
    in restricted-growth order; beyond that a greedy smallest-fragment-first
    packing is used and flagged as ``search="greedy"``.
    """
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    br = _Branches(state, pointer)
    if br.h_pointer <= 1e-12:
        raise DegeneratePointerError("pointer outcome is certain (H = 0); redundancy undefined")
    weights = np.random.default_rng(seed).uniform(1.0, 2.0, size=len(br.p))
    cache: dict[tuple[int, ...], float | bool] = {}

    def good(fragment: tuple[int, ...]) -> bool:
        if fragment not in cache:
            if delta == 0.0:
                cache[fragment] = br.perfect_record(fragment, record_tol)
            else:
                cache[fragment] = br.best_information(fragment, weights) >= (1.0 - delta) * br.h_pointer - 1e-12
        return bool(cache[fragment])

    n_env = len(br.env)
    if n_env <= exhaustive_cap:
        best_key, best = None, ()
        for blocks in set_partitions(br.env):
            chosen = tuple(b for b in blocks if good(b))
            key = (-len(chosen), sum(len(b) for b in chosen))
            if best_key is None or key < best_key:
                best_key, best = key, chosen
        search = "exhaustive"
    elif allow_greedy:
        best = _greedy_fragments(br.env, good)
        search = "greedy"
    else:
        raise EnumerationTooLargeError(
            f"{n_env} environment systems exceed the exhaustive cap {exhaustive_cap} and greedy search is disabled"
        )
    info = tuple(br.best_information(f, weights) for f in best)
    return RedundancyReport(pointer.targets, delta, len(best), best, n_env, br.h_pointer, search, info)


def _greedy_fragments(env: Sequence[int], good) -> tuple[tuple[int, ...], ...]:
    remaining = list(env)
    chosen = []
    while remaining and good(tuple(remaining)):
        for size in range(1, len(remaining) + 1):
            hit = next((c for c in combinations(remaining, size) if good(c)), None)
            if hit is not None:
                chosen.append(hit)
                remaining = [s for s in remaining if s not in hit]
                break
    return tuple(chosen)


def pointer_from_decomposition(dec, dim_check: bool = True) -> HermitianObservable:
    """Nondegenerate observable whose eigenbasis contains the system branch vectors of ``dec``.

    The decomposition's partition must mark a system fraction; missing basis
    vectors are completed from the orthogonal complement.
    """
    part = dec.partition
    if part.system is None:
        raise MalformedPartitionError("decomposition partition has no marked system fraction")
    v = dec.vectors[part.system - 1]
    d = v.shape[0]
    if v.shape[1] < d:
        q, _ = np.linalg.qr(np.hstack([v, np.eye(d)]))
        comp = q[:, v.shape[1]:d]
        comp = comp - v @ (v.conj().T @ comp)
        comp, _ = np.linalg.qr(comp)
        v = np.hstack([v, comp[:, : d - v.shape[1]]])
    return HermitianObservable.from_basis(part.system_fraction, v)


@dataclass(frozen=True)
class SbsReport:
    is_sbs: bool
    violations: tuple[tuple[int, int, int, float], ...]  # (fraction id, branch i, branch j, root fidelity)
    structure_error: float
    n_branches: int
    reasons: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.is_sbs


def _kron_ordered(blocks: Sequence[tuple[Sequence[int], np.ndarray]], dims_of: dict[int, int]) -> np.ndarray:
    """Tensor product of operators on disjoint system groups, reordered to ascending systems."""
    order = [s for sys, _ in blocks for s in sys]
    mat = np.ones((1, 1), dtype=complex)
    for _, m in blocks:
        mat = np.kron(mat, m)
    shape = [dims_of[s] for s in order]
    n = len(order)
    perm = list(np.argsort(order))
    t = mat.reshape(shape + shape).transpose(perm + [n + p for p in perm])
    d = mat.shape[0]
    return t.reshape(d, d)


def sbs_check(
    state: PureState,
    partition: Partition,
    pointer_basis,
    traced_fraction: int,
    tol: float = 1e-8,
) -> SbsReport:
    """Trace out one environment fraction and test for spectrum broadcast structure.

    ``pointer_basis`` is a matrix with the pointer states as columns (or a
    :class:`HermitianObservable`) on the marked system fraction.
    """
    layout = state.layout
    if partition.system is None:
        raise MalformedPartitionError("sbs_check needs a partition with a marked system fraction")
    if traced_fraction not in partition.environment_ids:
        raise InvalidFractionError(f"fraction {traced_fraction} is not an environment fraction of {partition}")
    if isinstance(pointer_basis, HermitianObservable):
        pointer = pointer_basis
    else:
        pointer = HermitianObservable.from_basis(partition.system_fraction, pointer_basis)
    if pointer.targets != partition.system_fraction:
        raise LayoutMismatchError("pointer basis must act on the marked system fraction")
    br = _Branches(state, pointer)
    reasons = []
    if len(br.active) < 2:
        reasons.append("fewer than 2 pointer branches carry weight")
    kept_env = [fid for fid in partition.environment_ids if fid != traced_fraction]
    violations = []
    cond_states: dict[int, dict[int, np.ndarray]] = {}
    for fid in kept_env:
        blocks = br.blocks(partition.fraction(fid))
        cond_states[fid] = {i: m @ m.conj().T / br.p[i] for i, m in blocks.items()}
        for i, j in combinations(br.active, 2):
            fid_ij = br.root_fidelity(blocks[i], blocks[j], i, j)
            if fid_ij > tol:
                violations.append((fid, i, j, fid_ij))
    keep = sorted(set(layout.systems) - set(partition.fraction(traced_fraction)))
    actual = partial_trace(state, keep).matrix
    dims_of = {s: layout.dims[s - 1] for s in layout.systems}
    claimed = np.zeros_like(actual)
    for i in br.active:
        e = pointer.eigenvectors[:, i]
        blocks = [(partition.system_fraction, br.p[i] * np.outer(e, e.conj()))]
        blocks += [(partition.fraction(fid), cond_states[fid][i]) for fid in kept_env]
        claimed += _kron_ordered(blocks, dims_of)
    err = float(np.linalg.norm(actual - claimed))
    if err > tol:
        reasons.append(f"reduced state deviates from the broadcast form by {err:.3g}")
    if violations:
        reasons.append(f"{len(violations)} fragment state pairs are not perfectly distinguishable")
    return SbsReport(not reasons, tuple(violations), err, len(br.active), tuple(reasons))
