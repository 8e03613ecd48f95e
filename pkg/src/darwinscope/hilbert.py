"""Dense tensor-algebra core.

States live on a :class:`SystemLayout`, an ordered list of local dimensions.
Elementary systems are labelled ``1..N``; system 1 is the most significant
index of the amplitude vector (row-major over ``dims``).  Every routine here is
a pure function of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateSetError,
    DimensionCapError,
    InvalidOperatorError,
    InvalidSubsetError,
    LayoutMismatchError,
    NullComponentError,
)


@dataclass(frozen=True)
class Tolerances:
    """Numeric policy shared by all modules."""

    orthonormal: float = 1e-10
    normalization: float = 1e-9
    rank: float = 1e-8
    negative_clamp: float = 1e-10
    zero_eigenvalue: float = 1e-12
    max_dim: int = 2**14
    max_density_dim: int = 2**12


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class SystemLayout:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1:
            raise LayoutMismatchError("layout needs at least one elementary system")
        if any(d < 2 for d in dims):
            raise LayoutMismatchError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def qubits(cls, n: int) -> "SystemLayout":
        return cls((2,) * n)

    @property
    def n_systems(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def systems(self) -> tuple[int, ...]:
        return tuple(range(1, self.n_systems + 1))

    def dim_of(self, systems: Iterable[int]) -> int:
        return int(np.prod([self.dims[s - 1] for s in systems], dtype=np.int64))

    def check_subset(self, systems: Iterable[int], *, proper: bool = False) -> tuple[int, ...]:
        """Validate a set of 1-based system labels and return it sorted."""
        subset = tuple(sorted(set(int(s) for s in systems)))
        if not subset:
            raise InvalidSubsetError("subset of elementary systems is empty")
        bad = [s for s in subset if s < 1 or s > self.n_systems]
        if bad:
            raise InvalidSubsetError(f"systems {bad} out of range 1..{self.n_systems}")
        if proper and len(subset) == self.n_systems:
            raise InvalidSubsetError("bipartition is trivial: subset covers every system")
        return subset

    def complement(self, systems: Iterable[int]) -> tuple[int, ...]:
        chosen = set(systems)
        return tuple(s for s in self.systems if s not in chosen)


def _as_layout(layout) -> SystemLayout:
    return layout if isinstance(layout, SystemLayout) else SystemLayout(tuple(layout))


@dataclass(frozen=True, eq=False)
class PureState:
    layout: SystemLayout
    amplitudes: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        layout = _as_layout(self.layout)
        object.__setattr__(self, "layout", layout)
        if layout.total_dim > self.tol.max_dim:
            raise DimensionCapError(
                f"total dimension {layout.total_dim} exceeds dense cap {self.tol.max_dim}"
            )
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != layout.total_dim:
            raise LayoutMismatchError(
                f"{amps.size} amplitudes for layout of dimension {layout.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > self.tol.normalization:
            raise InvalidOperatorError(f"state is not normalized (norm={norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, layout, vector, tol: Tolerances = DEFAULT_TOL) -> "PureState":
        """Build a state from an unnormalized vector."""
        vec = np.asarray(vector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm <= 1e-300:
            raise NullComponentError("cannot normalize the zero vector")
        return cls(_as_layout(layout), vec / norm, tol)

    @classmethod
    def product(cls, layout, factors: Sequence[np.ndarray]) -> "PureState":
        """Product of one local vector per elementary system."""
        vec = np.ones(1, dtype=complex)
        for f in factors:
            vec = np.kron(vec, np.asarray(f, dtype=complex))
        return cls.from_vector(layout, vec)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.layout.dims

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def inner(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def bipartite_matrix(tensor: np.ndarray, left_axes: Sequence[int]) -> np.ndarray:
    """Reshape a state tensor into a (left, rest) matrix; axes are 0-based."""
    left_axes = list(left_axes)
    rest = [a for a in range(tensor.ndim) if a not in left_axes]
    moved = np.transpose(tensor, left_axes + rest)
    d_left = int(np.prod([tensor.shape[a] for a in left_axes], dtype=np.int64))
    return moved.reshape(d_left, -1)


def embed_product(layout, groups: Sequence[Sequence[int]], vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Full amplitude vector of ``vectors[0] (x) vectors[1] (x) ...``.

    ``groups[j]`` lists the (ascending) systems that ``vectors[j]`` lives on.
    The groups must cover every system exactly once.
    """
    layout = _as_layout(layout)
    order = [s - 1 for g in groups for s in g]
    if sorted(order) != list(range(layout.n_systems)):
        raise InvalidSubsetError("groups must cover every system exactly once")
    vec = np.ones(1, dtype=complex)
    for v in vectors:
        vec = np.kron(vec, np.asarray(v, dtype=complex).reshape(-1))
    shape = [layout.dims[a] for a in order]
    tensor = vec.reshape(shape)
    return np.transpose(tensor, np.argsort(order)).reshape(-1)


def contract(state: PureState, systems: Sequence[int], vector: np.ndarray) -> np.ndarray:
    """Apply ``<vector|`` on ``systems``; returns the unnormalized remainder vector."""
    subset = state.layout.check_subset(systems, proper=True)
    mat = bipartite_matrix(state.tensor(), [s - 1 for s in subset])
    v = np.asarray(vector, dtype=complex).reshape(-1)
    if v.size != mat.shape[0]:
        raise LayoutMismatchError(f"vector of size {v.size} on subspace of dim {mat.shape[0]}")
    return v.conj() @ mat


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Density operator on the systems ``systems`` (labels of the parent layout)."""

    dims: tuple[int, ...]
    matrix: np.ndarray
    systems: tuple[int, ...] | None = None
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        systems = tuple(range(1, len(dims) + 1)) if self.systems is None else tuple(self.systems)
        if len(systems) != len(dims):
            raise InvalidSubsetError("one system label per local dimension required")
        object.__setattr__(self, "systems", systems)
        mat = np.array(self.matrix, dtype=complex)
        d = int(np.prod(dims, dtype=np.int64))
        if mat.shape != (d, d):
            raise InvalidOperatorError(f"matrix shape {mat.shape} does not match dims {dims}")
        herm_dev = np.max(np.abs(mat - mat.conj().T)) if d else 0.0
        if herm_dev > self.tol.orthonormal:
            raise InvalidOperatorError(f"operator is not Hermitian (deviation {herm_dev:.3g})")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > self.tol.normalization:
            raise InvalidOperatorError(f"trace {tr!r} differs from 1")
        lowest = np.linalg.eigvalsh(mat).min()
        if lowest < -self.tol.negative_clamp:
            raise InvalidOperatorError(f"negative eigenvalue {lowest:.3g}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_state(cls, state: PureState) -> "DensityOperator":
        a = state.amplitudes
        return cls(state.dims, np.outer(a, a.conj()), state.layout.systems)

    def eigenvalues(self) -> np.ndarray:
        ev = np.linalg.eigvalsh(self.matrix)
        ev[(ev < 0) & (ev >= -self.tol.negative_clamp)] = 0.0
        return ev

    def kron(self, other: "DensityOperator") -> "DensityOperator":
        n = len(self.dims)
        labels = tuple(range(1, n + len(other.dims) + 1))
        return DensityOperator(self.dims + other.dims, np.kron(self.matrix, other.matrix), labels)


def partial_trace(obj, keep: Iterable[int], tol: Tolerances = DEFAULT_TOL) -> DensityOperator:
    """Reduced density operator on ``keep`` (kept systems stay in ascending order)."""
    keep = tuple(sorted(set(int(s) for s in keep)))
    if isinstance(obj, PureState):
        layout = obj.layout
        keep = layout.check_subset(keep)
        d_keep = layout.dim_of(keep)
        if d_keep > tol.max_density_dim:
            raise DimensionCapError(f"reduced operator dimension {d_keep} exceeds cap")
        mat = bipartite_matrix(obj.tensor(), [s - 1 for s in keep])
        rho = mat @ mat.conj().T
        return DensityOperator(tuple(layout.dims[s - 1] for s in keep), _hermitize(rho), keep, tol)
    if isinstance(obj, DensityOperator):
        if not keep:
            raise InvalidSubsetError("subset of elementary systems is empty")
        missing = [s for s in keep if s not in obj.systems]
        if missing:
            raise InvalidSubsetError(f"systems {missing} not present in operator {obj.systems}")
        pos = {s: i for i, s in enumerate(obj.systems)}
        keep_ax = sorted(pos[s] for s in keep)
        n = len(obj.dims)
        t = obj.matrix.reshape(obj.dims + obj.dims)
        in_labels = list(range(n)) + [n + i if i in keep_ax else i for i in range(n)]
        out_labels = keep_ax + [n + i for i in keep_ax]
        red = np.einsum(t, in_labels, out_labels)
        dk = tuple(obj.dims[i] for i in keep_ax)
        d = int(np.prod(dk, dtype=np.int64))
        return DensityOperator(dk, _hermitize(red.reshape(d, d)), tuple(obj.systems[i] for i in keep_ax), tol)
    raise TypeError(f"cannot take partial trace of {type(obj).__name__}")


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def entropy_from_probabilities(p: np.ndarray) -> float:
    """Shannon entropy in bits; zero entries contribute nothing."""
    p = np.asarray(p, dtype=float).reshape(-1)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


@dataclass(frozen=True, eq=False)
class SchmidtResult:
    values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    rank: int
    entropy: float
    left: tuple[int, ...]
    right: tuple[int, ...]

    def reconstruct(self, layout) -> np.ndarray:
        """Amplitude vector rebuilt from the decomposition."""
        mat = (self.left_vectors * self.values) @ self.right_vectors.T
        layout = _as_layout(layout)
        shape = [layout.dims[s - 1] for s in self.left + self.right]
        order = [s - 1 for s in self.left + self.right]
        return np.transpose(mat.reshape(shape), np.argsort(order)).reshape(-1)


def schmidt(state: PureState, left: Iterable[int], rank_tol: float | None = None) -> SchmidtResult:
    """Schmidt decomposition across ``left`` versus the remaining systems."""
    layout = state.layout
    left = layout.check_subset(left, proper=True)
    right = layout.complement(left)
    rank_tol = DEFAULT_TOL.rank if rank_tol is None else rank_tol
    mat = bipartite_matrix(state.tensor(), [s - 1 for s in left])
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    rank = int(np.sum(s > rank_tol))
    return SchmidtResult(
        values=s,
        left_vectors=u,
        right_vectors=vh.T,
        rank=rank,
        entropy=entropy_from_probabilities(s**2),
        left=left,
        right=right,
    )


def von_neumann_entropy(rho, tol: Tolerances = DEFAULT_TOL) -> float:
    """-Tr rho log2 rho in bits."""
    if not isinstance(rho, DensityOperator):
        m = np.asarray(rho, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidOperatorError("density matrix must be square")
        rho = DensityOperator((m.shape[0],), m, tol=tol)
    ev = rho.eigenvalues()
    ev = ev[ev > tol.zero_eigenvalue]
    return max(0.0, float(-np.sum(ev * np.log2(ev))))


def _as_columns(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        return vectors.astype(complex)
    return np.column_stack([np.asarray(v, dtype=complex).reshape(-1) for v in vectors])


def dual_vector(vectors, k: int, det_tol: float = 1e-12) -> np.ndarray:
    """Unit vector orthogonal to every ``vectors[j]`` with ``j != k`` but not to ``vectors[k]``.

    ``vectors`` is a sequence of 1-D arrays or a matrix whose columns are the
    vectors; ``k`` is a 0-based position.
    """
    v = _as_columns(vectors)
    r = v.shape[1]
    if not 0 <= k < r:
        raise IndexError(f"k={k} out of range for {r} vectors")
    unit = v / np.linalg.norm(v, axis=0)
    gram = unit.conj().T @ unit
    if abs(np.linalg.det(gram)) <= det_tol:
        raise DegenerateSetError("vectors are linearly dependent (Gram determinant ~ 0)")
    e = np.zeros(r, dtype=complex)
    e[k] = 1.0
    out = unit @ np.linalg.solve(gram, e)
    return out / np.linalg.norm(out)


def project_component(state: PureState, subset: Iterable[int], vector: np.ndarray, null_tol: float = 1e-12) -> PureState:
    """Normalized ``(|v><v| (x) 1) |state>`` with ``v`` acting on ``subset``."""
    layout = state.layout
    subset = layout.check_subset(subset)
    v = np.asarray(vector, dtype=complex).reshape(-1)
    if v.size != layout.dim_of(subset):
        raise LayoutMismatchError(f"vector of size {v.size} on subspace of dim {layout.dim_of(subset)}")
    v = v / np.linalg.norm(v)
    rest = layout.complement(subset)
    mat = bipartite_matrix(state.tensor(), [s - 1 for s in subset])
    remainder = v.conj() @ mat
    norm = np.linalg.norm(remainder)
    if norm <= null_tol:
        raise NullComponentError("projection annihilates the state")
    if not rest:
        return PureState.from_vector(layout, v)
    amps = embed_product(layout, [subset, rest], [v, remainder / norm])
    return PureState.from_vector(layout, amps)


@dataclass(frozen=True, eq=False)
class HermitianObservable:
    """Observable on ``targets`` given by its eigenvalues and eigenvector columns."""

    targets: tuple[int, ...]
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        targets = tuple(sorted(int(t) for t in self.targets))
        if not targets or len(set(targets)) != len(targets):
            raise InvalidSubsetError("observable needs distinct target systems")
        object.__setattr__(self, "targets", targets)
        vals = np.asarray(self.eigenvalues, dtype=float).reshape(-1)
        vecs = np.asarray(self.eigenvectors, dtype=complex)
        if vecs.ndim != 2 or vecs.shape[0] != vecs.shape[1] or vecs.shape[1] != vals.size:
            raise InvalidOperatorError("need a square eigenvector matrix with one eigenvalue per column")
        dev = np.max(np.abs(vecs.conj().T @ vecs - np.eye(vals.size)))
        if dev > self.tol.orthonormal:
            raise InvalidOperatorError(f"eigenvectors not orthonormal (deviation {dev:.3g})")
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "eigenvectors", vecs)

    @classmethod
    def from_basis(cls, targets, basis, eigenvalues=None) -> "HermitianObservable":
        """Nondegenerate observable diagonal in ``basis`` (columns); default eigenvalues 0,1,2,..."""
        basis = _as_columns(basis)
        if eigenvalues is None:
            eigenvalues = np.arange(basis.shape[1], dtype=float)
        return cls(tuple(targets), eigenvalues, basis)

    @classmethod
    def computational(cls, targets, dim: int, eigenvalues=None) -> "HermitianObservable":
        return cls.from_basis(targets, np.eye(dim), eigenvalues)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def nondegenerate(self) -> bool:
        vals = np.sort(self.eigenvalues)
        return bool(np.all(np.diff(vals) > self.tol.normalization))

    def outcome_groups(self) -> list[list[int]]:
        """Eigenvector column indices grouped by (numerically) equal eigenvalue."""
        order = np.argsort(self.eigenvalues, kind="stable")
        groups: list[list[int]] = []
        last = None
        for idx in order:
            val = self.eigenvalues[idx]
            if last is None or val - last > self.tol.normalization:
                groups.append([int(idx)])
            else:
                groups[-1].append(int(idx))
            last = val
        return groups

    def matrix(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def random_orthonormal(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-random orthonormal columns in ``C^dim``."""
    z = rng.normal(size=(dim, count)) + 1j * rng.normal(size=(dim, count))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(layout, rng: np.random.Generator) -> PureState:
    layout = _as_layout(layout)
    return PureState.from_vector(layout, random_orthonormal(layout.total_dim, 1, rng)[:, 0])
