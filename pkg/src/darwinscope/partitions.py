"""Set-partition combinatorics over elementary systems.

A :class:`Partition` groups the systems ``1..N`` into disjoint, exhaustive
fractions.  Fractions are numbered ``1..n`` in canonical order (ascending by
smallest member), which is also the numbering used by overlap sets and
witnesses.  Predicates work on bitmasks internally; sizes here are tiny but the
exhaustive scans touch hundreds of thousands of pairs.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Iterator, Sequence

from .errors import EnumerationTooLargeError, LayoutMismatchError, MalformedPartitionError

DEFAULT_ENUMERATION_CAP = 10


def _mask(members: Iterable[int]) -> int:
    m = 0
    for s in members:
        m |= 1 << (s - 1)
    return m


@dataclass(frozen=True)
class Partition:
    """Disjoint exhaustive grouping of systems ``1..n_systems``.

    ``system`` optionally marks one fraction (1-based id) as the system of
    interest; the rest are environment fractions.  The constructor brings any
    input into canonical form and moves the marker along with its fraction.
    """

    fractions: tuple[tuple[int, ...], ...]
    n_systems: int
    system: int | None = None

    def __post_init__(self):
        raw = [tuple(int(s) for s in f) for f in self.fractions]
        marked = None if self.system is None else raw[self.system - 1] if 1 <= self.system <= len(raw) else None
        if self.system is not None and marked is None:
            raise MalformedPartitionError(f"system marker {self.system} does not name a fraction")
        seen: set[int] = set()
        for f in raw:
            if not f:
                raise MalformedPartitionError("empty fraction")
            for s in f:
                if s < 1 or s > self.n_systems:
                    raise MalformedPartitionError(f"system {s} out of range 1..{self.n_systems}")
                if s in seen:
                    raise MalformedPartitionError(f"system {s} appears in more than one fraction")
                seen.add(s)
        if len(seen) != self.n_systems:
            missing = sorted(set(range(1, self.n_systems + 1)) - seen)
            raise MalformedPartitionError(f"systems {missing} are not covered by any fraction")
        canon = sorted((tuple(sorted(f)) for f in raw), key=lambda f: f[0])
        object.__setattr__(self, "fractions", tuple(canon))
        if marked is not None:
            object.__setattr__(self, "system", canon.index(tuple(sorted(marked))) + 1)

    @classmethod
    def parse(cls, text: str, n_systems: int | None = None) -> "Partition":
        """Parse ``1|2,3,4|5,6`` (braces allowed, ``S:`` marks the system fraction)."""
        return canonicalize(text, n_systems)

    @property
    def n(self) -> int:
        return len(self.fractions)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(f) for f in self.fractions)

    @property
    def masks(self) -> tuple[int, ...]:
        return tuple(_mask(f) for f in self.fractions)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(range(1, self.n + 1))

    def fraction(self, fid: int) -> tuple[int, ...]:
        return self.fractions[fid - 1]

    def fraction_of(self, system: int) -> int:
        for i, f in enumerate(self.fractions, start=1):
            if system in f:
                return i
        raise MalformedPartitionError(f"system {system} not in partition")

    @property
    def system_fraction(self) -> tuple[int, ...] | None:
        return None if self.system is None else self.fractions[self.system - 1]

    @property
    def environment_ids(self) -> tuple[int, ...]:
        return tuple(i for i in self.ids if i != self.system)

    def with_system(self, fid: int | None) -> "Partition":
        return Partition(self.fractions, self.n_systems, fid)

    def merge(self, i: int, j: int) -> "Partition":
        """Unite fractions ``i`` and ``j``; the marker follows the system fraction."""
        if i == j:
            return self
        merged = tuple(sorted(self.fraction(i) + self.fraction(j)))
        rest = [f for k, f in enumerate(self.fractions, start=1) if k not in (i, j)]
        fracs = rest + [merged]
        system = None
        if self.system is not None:
            sysf = merged if self.system in (i, j) else self.system_fraction
            system = fracs.index(sysf) + 1
        return Partition(tuple(fracs), self.n_systems, system)

    def split(self, fid: int, part: Iterable[int]) -> "Partition":
        """Split fraction ``fid`` into ``part`` and its remainder."""
        part = tuple(sorted(part))
        whole = self.fraction(fid)
        other = tuple(s for s in whole if s not in part)
        if not part or not other or not set(part) <= set(whole):
            raise MalformedPartitionError(f"{part} is not a proper part of fraction {whole}")
        if fid == self.system:
            raise MalformedPartitionError("the system fraction is not split")
        fracs = [f for k, f in enumerate(self.fractions, start=1) if k != fid] + [part, other]
        sysf = self.system_fraction
        return Partition(tuple(fracs), self.n_systems, None if sysf is None else fracs.index(sysf) + 1)

    def __str__(self) -> str:
        parts = []
        for i, f in enumerate(self.fractions, start=1):
            body = ",".join(str(s) for s in f)
            parts.append(("S:" + body) if i == self.system else body)
        return "|".join(parts)


_FRACTION_RE = re.compile(r"^\{?\s*(\d+(\s*,\s*\d+)*)\s*\}?$")


def canonicalize(raw, n_systems: int | None = None) -> Partition:
    """Canonical :class:`Partition` from text or a list of fractions.

    ``n_systems`` defaults to the largest label present; gaps in coverage are
    reported as malformed.
    """
    system = None
    if isinstance(raw, Partition):
        return raw
    if isinstance(raw, str):
        text = raw.strip()
        if not text:
            raise MalformedPartitionError("empty partition string")
        fractions = []
        for k, chunk in enumerate(text.split("|"), start=1):
            chunk = chunk.strip()
            if chunk.upper().startswith("S:"):
                if system is not None:
                    raise MalformedPartitionError("more than one fraction marked as system")
                system = k
                chunk = chunk[2:].strip()
            m = _FRACTION_RE.match(chunk)
            if not m:
                raise MalformedPartitionError(f"cannot parse fraction {chunk!r}")
            fractions.append(tuple(int(x) for x in re.split(r"\s*,\s*", m.group(1))))
    else:
        fractions = [tuple(f) for f in raw]
    if not fractions or any(not f for f in fractions):
        raise MalformedPartitionError("partition needs nonempty fractions")
    if n_systems is None:
        n_systems = max(max(f) for f in fractions)
    return Partition(tuple(fractions), n_systems, system)


def _check_same(a: Partition, b: Partition) -> None:
    if a.n_systems != b.n_systems:
        raise LayoutMismatchError(f"partitions cover {a.n_systems} and {b.n_systems} systems")


def _xi_masks(a: Partition, b: Partition) -> list[int]:
    """xi_i^{a->b} for every fraction i of a, as bitmasks over b's fraction ids."""
    bm = b.masks
    out = []
    for am in a.masks:
        x = 0
        for j, m in enumerate(bm):
            if am & m:
                x |= 1 << j
        out.append(x)
    return out


def _members(mask: int) -> tuple[int, ...]:
    out = []
    j = 1
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return tuple(out)


@dataclass(frozen=True)
class OverlapSet:
    """xi_source^{A->B}: the fractions of the target partition that ``source`` overlaps."""

    source: int
    members: tuple[int, ...]


def overlap_sets(a: Partition, b: Partition) -> list[OverlapSet]:
    _check_same(a, b)
    return [OverlapSet(i, _members(x)) for i, x in enumerate(_xi_masks(a, b), start=1)]


@dataclass(frozen=True)
class Witnessed:
    """Boolean verdict with the first fraction pair (1-based) that establishes it."""

    value: bool
    witness: tuple[int, int] | None = None

    def __bool__(self) -> bool:
        return self.value


def _comparable_masks(xi: Sequence[int], full: int) -> tuple[int, int] | None:
    for j1 in range(len(xi)):
        x1 = xi[j1]
        for j2 in range(j1 + 1, len(xi)):
            x2 = xi[j2]
            if not (x1 & x2) and (x1 | x2) != full:
                return (j1 + 1, j2 + 1)
    return None


def is_comparable(b: Partition, a: Partition) -> Witnessed:
    """Is ``b`` comparable to ``a``?

    True iff two fractions of ``b`` have disjoint overlap sets in ``a`` whose
    union misses at least one fraction of ``a``.  Partitions with fewer than
    three fractions on either side can never satisfy this and give False.
    """
    _check_same(a, b)
    w = _comparable_masks(_xi_masks(b, a), (1 << a.n) - 1)
    return Witnessed(w is not None, w)


def mutually_comparable(a: Partition, b: Partition) -> bool:
    return bool(is_comparable(b, a)) and bool(is_comparable(a, b))


def sufficient_condition(a: Partition, b: Partition) -> bool:
    """Integer test ``m > Lb_min*(La_max - 1) + 1 and n > Lb_min + Lb_max`` for ``b`` comparable to ``a``."""
    _check_same(a, b)
    n, m = a.n, b.n
    lb_min, lb_max, la_max = min(b.sizes), max(b.sizes), max(a.sizes)
    return m > lb_min * (la_max - 1) + 1 and n > lb_min + lb_max


def pair_covers(a: Partition, b: Partition) -> Witnessed:
    """Does some pair of ``a``'s fractions jointly overlap every fraction of ``b``?"""
    _check_same(a, b)
    xi = _xi_masks(a, b)
    full = (1 << b.n) - 1
    for j1, j2 in combinations(range(len(xi)), 2):
        if xi[j1] | xi[j2] == full:
            return Witnessed(True, (j1 + 1, j2 + 1))
    return Witnessed(False, None)


class Relation(enum.Enum):
    COMPARABLE = "Comparable"
    NONLOCAL_OVERLAP = "NonlocalOverlap"
    OTHER_NON_COMPARABLE = "OtherNonComparable"


@dataclass(frozen=True)
class RelativeClassification:
    kind: Relation
    witness: tuple[int, int] | None = None

    def __post_init__(self):
        if (self.witness is not None) != (self.kind is Relation.COMPARABLE):
            raise ValueError("witness must be present exactly for Comparable")


def classify_relative(b: Partition, a: Partition, system_fixed: bool = False) -> RelativeClassification:
    """Classify ``b`` relative to ``a``.

    ``NonlocalOverlap`` means every environment fraction of ``b`` overlaps every
    environment fraction of ``a``.  Without ``system_fixed`` all fractions count
    as environment.  With it, both partitions must mark the same system
    fraction, and non-comparability coincides with ``NonlocalOverlap``.
    """
    _check_same(a, b)
    if system_fixed:
        if a.system is None or b.system is None:
            raise MalformedPartitionError("system_fixed requires a marked system fraction in both partitions")
        if a.system_fraction != b.system_fraction:
            raise MalformedPartitionError(
                f"marked system fractions differ: {a.system_fraction} vs {b.system_fraction}"
            )
    comp = is_comparable(b, a)
    if comp:
        kind = Relation.COMPARABLE
    else:
        a_env = [i - 1 for i in (a.environment_ids if system_fixed else a.ids)]
        b_env = [j - 1 for j in (b.environment_ids if system_fixed else b.ids)]
        env_mask = sum(1 << i for i in a_env)
        xi = _xi_masks(b, a)
        nonlocal_ = all(xi[j] & env_mask == env_mask for j in b_env)
        kind = Relation.NONLOCAL_OVERLAP if nonlocal_ else Relation.OTHER_NON_COMPARABLE
        if system_fixed and not nonlocal_:
            raise AssertionError(f"system-fixed partitions {b} / {a} violate the comparability dichotomy")
    return RelativeClassification(kind, comp.witness)


@lru_cache(maxsize=None)
def bell_number(n: int) -> int:
    """Number of set partitions of an n-element set (Bell triangle)."""
    if n == 0:
        return 1
    row = [1]
    for _ in range(n - 1):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[-1]


def restricted_growth_strings(n: int) -> Iterator[tuple[int, ...]]:
    """All restricted growth strings of length n in lexicographic order."""
    if n == 0:
        yield ()
        return
    a = [0] * n
    maxes = [0] * n  # maxes[i] = max(a[:i+1])
    while True:
        yield tuple(a)
        i = n - 1
        while i > 0 and a[i] > maxes[i - 1]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        maxes[i] = max(maxes[i - 1], a[i])
        for k in range(i + 1, n):
            a[k] = 0
            maxes[k] = maxes[i]


def set_partitions(elements: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Set partitions of ``elements`` in restricted-growth-string order.

    Blocks come out ordered by their first element, i.e. already canonical when
    ``elements`` is ascending.
    """
    elements = list(elements)
    for rgs in restricted_growth_strings(len(elements)):
        blocks: list[list[int]] = [[] for _ in range(max(rgs) + 1 if rgs else 0)]
        for e, b in zip(elements, rgs):
            blocks[b].append(e)
        yield tuple(tuple(b) for b in blocks)


def all_partitions(n_systems: int, fixed: Sequence[int] | None = None) -> Iterator[Partition]:
    """Every partition of ``1..n_systems``; with ``fixed``, that block is held as marked system fraction."""
    if fixed is None:
        for blocks in set_partitions(range(1, n_systems + 1)):
            yield Partition(blocks, n_systems)
        return
    fixed = tuple(sorted(fixed))
    free = [s for s in range(1, n_systems + 1) if s not in fixed]
    for blocks in set_partitions(free):
        fracs = (fixed,) + blocks
        yield Partition(fracs, n_systems, 1)


def comparable_set(
    a: Partition,
    require_fixed_system: bool | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
    allow_large: bool = False,
) -> Iterator[Partition]:
    """Stream every partition mutually comparable to ``a`` (``a`` included when it has >= 3 fractions).

    With ``require_fixed_system`` (default: whenever ``a`` marks a system
    fraction) only partitions that keep that fraction intact are considered.
    """
    if require_fixed_system is None:
        require_fixed_system = a.system is not None
    if require_fixed_system and a.system is None:
        raise MalformedPartitionError("require_fixed_system needs a marked system fraction")
    fixed = a.system_fraction if require_fixed_system else None
    free = a.n_systems - (len(fixed) if fixed else 0)
    if free > cap and not allow_large:
        raise EnumerationTooLargeError(
            f"enumerating partitions of {free} systems visits Bell({free})={bell_number(free)} "
            f"candidates, above the cap of {cap} systems"
        )
    for b in all_partitions(a.n_systems, fixed):
        if b.n >= 3 and mutually_comparable(a, b):
            yield b


def from_incidence(xi_ab: Sequence[Sequence[int]]) -> tuple[Partition, Partition]:
    """Realize an abstract overlap structure with one elementary system per incidence pair.

    ``xi_ab[i-1]`` lists the (1-based) B fractions that A fraction ``i``
    overlaps.  Systems are allocated in lexicographic (i, j) order.  Raises if
    the resulting canonical numbering of B differs from the labels given.
    """
    a_fracs: list[list[int]] = []
    b_members: dict[int, list[int]] = {}
    label = 0
    for row in xi_ab:
        frac = []
        for j in sorted(set(row)):
            label += 1
            frac.append(label)
            b_members.setdefault(j, []).append(label)
        a_fracs.append(frac)
    n_b = max(b_members)
    if sorted(b_members) != list(range(1, n_b + 1)):
        raise MalformedPartitionError("B fraction labels must be 1..m without gaps")
    b_fracs = [tuple(b_members[j]) for j in range(1, n_b + 1)]
    a = Partition(tuple(tuple(f) for f in a_fracs), label)
    b = Partition(tuple(b_fracs), label)
    if list(a.fractions) != [tuple(f) for f in a_fracs] or list(b.fractions) != b_fracs:
        raise MalformedPartitionError("incidence labels do not survive canonical ordering")
    return a, b
