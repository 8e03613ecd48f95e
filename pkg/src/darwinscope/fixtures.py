"""Canonical worked examples and their expected properties.

``ambiguity4``
    Four-dimensional system (system 1) plus qubits alpha..delta (systems 2..5)
    in the state that has two GHZ-like forms, w.r.t. ``S:1|2,3|4,5`` and
    ``S:1|2,4|3,5``.
``fig1a``
    The six-system partition pair ``1|2,3,4|5,6`` / ``1|2,4|3,5,6``.
``footnote-overlap``
    Six- and seven-fraction partitions realizing a prescribed overlap
    structure with one elementary system per overlapping pair (21 systems).
``comdec``
    Qubit state built from degenerate two-qubit observables; GHZ-like only once
    the first two fractions are merged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .darwinism import redundancy
from .errors import DarwinscopeError
from .ghz import SemiGHZDecomposition, detect_ghz, match_decompositions, verify_semi_ghz
from .hilbert import HermitianObservable, PureState, SystemLayout, embed_product
from .partitions import (
    Partition,
    classify_relative,
    comparable_set,
    from_incidence,
    is_comparable,
    overlap_sets,
    pair_covers,
    sufficient_condition,
)

FIXTURE_NAMES = ("ambiguity4", "fig1a", "footnote-overlap", "comdec")

_S2 = 1 / np.sqrt(2)


@dataclass
class Fixture:
    name: str
    state: PureState | None
    partitions: dict[str, Partition]
    decompositions: dict[str, SemiGHZDecomposition] = field(default_factory=dict)
    manifest: dict[str, object] = field(default_factory=dict)
    checks: dict[str, Callable[[], object]] = field(default_factory=dict, repr=False)

    def check(self) -> list[tuple[str, object, object, bool]]:
        """Evaluate every manifest entry: (property, expected, actual, ok)."""
        rows = []
        for key, expected in self.manifest.items():
            actual = self.checks[key]()
            rows.append((key, expected, actual, actual == expected))
        return rows


def _bell(kind: str) -> np.ndarray:
    return {
        "phi+": np.array([1, 0, 0, 1]) * _S2,
        "phi-": np.array([1, 0, 0, -1]) * _S2,
        "psi+": np.array([0, 1, 1, 0]) * _S2,
        "psi-": np.array([0, 1, -1, 0]) * _S2,
        "ipsi-": np.array([0, -1j, 1j, 0]) * _S2,
    }[kind].astype(complex)


def ambiguity_decompositions() -> tuple[SemiGHZDecomposition, SemiGHZDecomposition]:
    """The two literal expansions of the ambiguity state (pointer basis = computational basis of S)."""
    layout = SystemLayout((4, 2, 2, 2, 2))
    pa = Partition.parse("S:1|2,3|4,5")
    pb = Partition.parse("S:1|2,4|3,5")
    rec_a = [_bell("phi+"), _bell("psi+"), _bell("ipsi-"), _bell("phi-")]
    dec_a = SemiGHZDecomposition(
        layout, pa, np.full(4, 0.5), (np.eye(4, dtype=complex), np.column_stack(rec_a), np.column_stack(rec_a)), True
    )
    sys_b = 0.5 * np.array(
        [[1, 1, -1, 1], [1, -1, 1, 1], [1, 1, 1, -1], [1, -1, -1, -1]], dtype=complex
    ).T  # column j = psi_j^S in the phi^S basis
    rec_b = [_bell("phi+"), _bell("phi-"), _bell("psi+"), _bell("psi-")]
    dec_b = SemiGHZDecomposition(
        layout, pb, np.full(4, 0.5), (sys_b, np.column_stack(rec_b), np.column_stack(rec_b)), True
    )
    return dec_a, dec_b


def ambiguity_state() -> PureState:
    dec_a, _ = ambiguity_decompositions()
    return PureState.from_vector(dec_a.layout, dec_a.state_vector())


def comdec_state(
    alpha: complex = 0.5,
    beta: complex = 0.5,
    n_extra: int = 2,
    fragment_states: list[tuple[np.ndarray, np.ndarray]] | None = None,
) -> PureState:
    """Qubits 1..4 form A1={1,2}, A2={3,4}; qubits 5.. carry |A_j> / |A_j'>.

    The result is normalized, so ``alpha`` and ``beta`` only fix relative weights.
    """
    if n_extra < 0:
        raise DarwinscopeError("n_extra must be >= 0")
    if fragment_states is None:
        fragment_states = [(np.array([1, 0]), np.array([0, 1]))] * n_extra
    if len(fragment_states) != n_extra:
        raise DarwinscopeError("need one (|A_j>, |A_j'>) pair per extra fraction")
    layout = SystemLayout((2,) * (4 + n_extra))
    k = np.eye(2)
    groups = [(s,) for s in range(1, 5 + n_extra)]

    def term(bits, extra):
        return embed_product(layout, groups, [k[b] for b in bits] + list(extra))

    first = [np.asarray(a, dtype=complex) for a, _ in fragment_states]
    second = [np.asarray(b, dtype=complex) for _, b in fragment_states]
    vec = alpha * (term((0, 0, 0, 0), first) + term((1, 1, 1, 1), first))
    vec = vec + beta * (term((0, 1, 0, 1), second) + term((1, 0, 1, 0), second))
    return PureState.from_vector(layout, vec)


FOOTNOTE_XI_AB = ((1, 2, 3), (1, 4, 5), (1, 6, 7), (2, 4, 5, 6), (2, 3, 5, 7), (3, 4, 6, 7))
FOOTNOTE_XI_BA = ((1, 2, 3), (1, 4, 5), (1, 5, 6), (2, 4, 6), (2, 4, 5), (3, 4, 6), (3, 5, 6))


def build_fixture(name: str, **params) -> Fixture:
    if name == "ambiguity4":
        return _ambiguity4(**params)
    if name == "fig1a":
        return _fig1a()
    if name == "footnote-overlap":
        return _footnote()
    if name == "comdec":
        return _comdec(**params)
    raise DarwinscopeError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURE_NAMES)}")


def _ambiguity4(tol: float = 1e-8, seed: int = 0) -> Fixture:
    dec_a, dec_b = ambiguity_decompositions()
    state = ambiguity_state()
    pa, pb = dec_a.partition, dec_b.partition
    fx = Fixture("ambiguity4", state, {"A": pa, "B": pb}, {"A": dec_a, "B": dec_b})

    def detected_match(part, literal):
        found = detect_ghz(state, part, tol=tol, seed=seed)
        return found is not None and match_decompositions(found, literal, tol) is not None

    pointer = HermitianObservable.computational((1,), 4, [1.0, 2.0, 3.0, 4.0])
    fx.manifest = {
        "literal_A_valid": True,
        "literal_B_valid": True,
        "detect_A_branches": 4,
        "detect_B_branches": 4,
        "detect_A_matches_literal": True,
        "detect_B_matches_literal": True,
        "classify_B_vs_A": "NonlocalOverlap",
        "classify_A_vs_B": "NonlocalOverlap",
        "literal_A_B_match": False,
        "B_in_comparable_set_of_A": False,
        "R0_pointer": 2,
    }
    fx.checks = {
        "literal_A_valid": lambda: verify_semi_ghz(state, dec_a, tol).valid,
        "literal_B_valid": lambda: verify_semi_ghz(state, dec_b, tol).valid,
        "detect_A_branches": lambda: _branches(detect_ghz(state, pa, tol=tol, seed=seed)),
        "detect_B_branches": lambda: _branches(detect_ghz(state, pb, tol=tol, seed=seed)),
        "detect_A_matches_literal": lambda: detected_match(pa, dec_a),
        "detect_B_matches_literal": lambda: detected_match(pb, dec_b),
        "classify_B_vs_A": lambda: classify_relative(pb, pa, system_fixed=True).kind.value,
        "classify_A_vs_B": lambda: classify_relative(pa, pb, system_fixed=True).kind.value,
        "literal_A_B_match": lambda: match_decompositions(dec_a, dec_b, 1e-6) is not None,
        "B_in_comparable_set_of_A": lambda: pb in set(comparable_set(pa)),
        "R0_pointer": lambda: redundancy(state, pointer).r_delta,
    }
    return fx


def _branches(dec):
    return None if dec is None else dec.n_branches


def _fig1a() -> Fixture:
    pa = Partition.parse("1|2,3,4|5,6")
    pb = Partition.parse("1|2,4|3,5,6")
    fx = Fixture("fig1a", None, {"A": pa, "B": pb})
    fx.manifest = {
        "B_comparable_to_A": True,
        "A_comparable_to_B": True,
        "B_to_A_witness": (1, 2),
        "xi_2_A_to_B": (2, 3),
        "pair_covers_A_B": True,
        "pair_covers_B_A": True,
        "sufficient_condition_B_to_A": False,
        "classify_B_vs_A": "Comparable",
    }
    fx.checks = {
        "B_comparable_to_A": lambda: is_comparable(pb, pa).value,
        "A_comparable_to_B": lambda: is_comparable(pa, pb).value,
        "B_to_A_witness": lambda: is_comparable(pb, pa).witness,
        "xi_2_A_to_B": lambda: overlap_sets(pa, pb)[1].members,
        "pair_covers_A_B": lambda: pair_covers(pa, pb).value,
        "pair_covers_B_A": lambda: pair_covers(pb, pa).value,
        "sufficient_condition_B_to_A": lambda: sufficient_condition(pa, pb),
        "classify_B_vs_A": lambda: classify_relative(pb, pa).kind.value,
    }
    return fx


def _footnote() -> Fixture:
    pa, pb = from_incidence(FOOTNOTE_XI_AB)
    fx = Fixture("footnote-overlap", None, {"A": pa, "B": pb})
    fx.manifest = {
        "n_systems": 21,
        "xi_A_to_B": FOOTNOTE_XI_AB,
        "xi_B_to_A": FOOTNOTE_XI_BA,
        "pair_covers_A_B": False,
        "pair_covers_B_A": False,
        "B_comparable_to_A": False,
        "A_comparable_to_B": False,
        "classify_B_vs_A": "OtherNonComparable",
    }
    fx.checks = {
        "n_systems": lambda: pa.n_systems,
        "xi_A_to_B": lambda: tuple(x.members for x in overlap_sets(pa, pb)),
        "xi_B_to_A": lambda: tuple(x.members for x in overlap_sets(pb, pa)),
        "pair_covers_A_B": lambda: pair_covers(pa, pb).value,
        "pair_covers_B_A": lambda: pair_covers(pb, pa).value,
        "B_comparable_to_A": lambda: is_comparable(pb, pa).value,
        "A_comparable_to_B": lambda: is_comparable(pa, pb).value,
        "classify_B_vs_A": lambda: classify_relative(pb, pa).kind.value,
    }
    return fx


def _comdec(alpha: complex = 0.5, beta: complex = 0.5, n_extra: int = 2, fragment_states=None, tol: float = 1e-8, seed: int = 0) -> Fixture:
    state = comdec_state(alpha, beta, n_extra, fragment_states)
    n = 4 + n_extra
    extra = "".join(f"|{s}" for s in range(5, n + 1))
    pa = Partition.parse("1,2|3,4" + extra, n)
    pb = Partition.parse("1,4|2,3" + extra, n)
    merged = pa.merge(1, 2)
    fx = Fixture("comdec", state, {"A": pa, "B": pb, "merged": merged})
    fx.manifest = {
        "detect_A": None,
        "detect_B": None,
        "detect_merged_branches": 2,
        "pair_covers_A_B": False,
        "pair_covers_B_A": False,
    }
    fx.checks = {
        "detect_A": lambda: _branches(detect_ghz(state, pa, tol=tol, seed=seed)),
        "detect_B": lambda: _branches(detect_ghz(state, pb, tol=tol, seed=seed)),
        "detect_merged_branches": lambda: _branches(detect_ghz(state, merged, tol=tol, seed=seed)),
        "pair_covers_A_B": lambda: pair_covers(pa, pb).value,
        "pair_covers_B_A": lambda: pair_covers(pb, pa).value,
    }
    return fx
