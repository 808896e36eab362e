"""Spanoids: inference rules over [n], their span operator and set families.

Subsets of the ground set are held as integer bitmasks, element i (1-based)
on bit i-1. Public functions accept and return 1-based element labels.
"""
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Hashable, Iterable, Iterator, List, Optional, Sequence, Tuple

from spanoid_lab.errors import CapacityError, ConstructionError, ValidationError
from spanoid_lab.settings import get_settings

logger = logging.getLogger(__name__)

INTERSECTION = "intersection"
UNION = "union"


def full_mask(n: int) -> int:
    return (1 << n) - 1


def to_mask(subset: Iterable[int], n: Optional[int] = None) -> int:
    """Bitmask of a collection of 1-based elements"""
    mask = 0
    for element in subset:
        if element < 1 or (n is not None and element > n):
            raise ConstructionError(f"element {element} outside 1..{n}")
        mask |= 1 << (element - 1)
    return mask


def from_mask(mask: int) -> frozenset:
    return frozenset(i + 1 for i in iter_bits(mask))


def iter_bits(mask: int) -> Iterator[int]:
    """0-based positions of the set bits, ascending"""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def minimal_masks(masks: Iterable[int], nonempty: bool = True) -> List[int]:
    """Inclusion-minimal members, sorted ascending as integers"""
    kept: List[int] = []
    for mask in sorted(set(masks), key=lambda m: (m.bit_count(), m)):
        if nonempty and mask == 0:
            continue
        if not any(k & mask == k for k in kept):
            kept.append(mask)
    return sorted(kept)


def minimal_transversals(edges: Sequence[int]) -> List[int]:
    """All inclusion-minimal sets hitting every edge (Berge's incremental method)"""
    transversals = [0]
    for edge in minimal_masks(edges, nonempty=False):
        if edge == 0:
            return []
        grown = set()
        for t in transversals:
            if t & edge:
                grown.add(t)
            else:
                for bit in iter_bits(edge):
                    grown.add(t | (1 << bit))
        transversals = minimal_masks(grown, nonempty=False)
    return sorted(transversals)


class Spanoid:
    """A ground set [n] with inference rules (premise, conclusion).

    Rules are canonicalized to a sorted tuple of (premise mask, 0-based
    conclusion) pairs; reflexivity and monotonicity are properties of the
    span operator and are never stored. A spanoid built from an open basis
    (a family whose unions are exactly its open sets) keeps that basis so
    its minimal open sets stay available beyond the enumeration cap.
    """

    def __init__(self, n: int, rule_masks: Iterable[Tuple[int, int]], open_basis: Optional[Iterable[int]] = None,
                 name: Optional[str] = None):
        self.n = n
        self.full = full_mask(n)
        self.rule_masks: Tuple[Tuple[int, int], ...] = tuple(sorted(set(rule_masks)))
        self.open_basis: Optional[Tuple[int, ...]] = tuple(sorted(set(open_basis))) if open_basis is not None else None
        self.name = name
        if self.empty_premise_rules:
            logger.warning(f"Spanoid {self.label} has {len(self.empty_premise_rules)} rule(s) with empty premise")

    @property
    def label(self) -> str:
        return self.name or f"<n={self.n}, {len(self.rule_masks)} rules>"

    @property
    def rules(self) -> List[Tuple[frozenset, int]]:
        """Stored rules as (premise, conclusion) with 1-based labels"""
        return [(from_mask(p), c + 1) for p, c in self.rule_masks]

    @property
    def empty_premise_rules(self) -> List[Tuple[frozenset, int]]:
        return [(frozenset(), c + 1) for p, c in self.rule_masks if p == 0]

    def span_mask(self, mask: int) -> int:
        """Least fixpoint of rule application containing `mask`"""
        current = mask
        pending = [r for r in self.rule_masks if not current >> r[1] & 1]
        changed = True
        while changed and pending:
            changed = False
            remaining = []
            for premise, conclusion in pending:
                if current >> conclusion & 1:
                    continue
                if premise & ~current == 0:
                    current |= 1 << conclusion
                    changed = True
                else:
                    remaining.append((premise, conclusion))
            pending = remaining
        return current

    def is_closed_mask(self, mask: int) -> bool:
        for premise, conclusion in self.rule_masks:
            if premise & ~mask == 0 and not mask >> conclusion & 1:
                return False
        return True

    def with_rules(self, extra: Iterable[Tuple[int, int]]) -> "Spanoid":
        return Spanoid(self.n, self.rule_masks + tuple(extra), name=None)

    def __eq__(self, other) -> bool:
        return isinstance(other, Spanoid) and (self.n, self.rule_masks) == (other.n, other.rule_masks)

    def __hash__(self) -> int:
        return hash((self.n, self.rule_masks))

    def __repr__(self) -> str:
        return f"Spanoid({self.label})"


@dataclass(frozen=True)
class SetFamily:
    """Duplicate-free family of subsets of [n], stored as sorted bitmasks"""

    n: int
    masks: Tuple[int, ...]
    tag: Optional[str] = None

    @classmethod
    def from_masks(cls, n: int, masks: Iterable[int], tag: Optional[str] = None) -> "SetFamily":
        family = cls(n, tuple(sorted(set(masks))), tag)
        family.validate()
        return family

    @classmethod
    def of(cls, n: int, subsets: Iterable[Iterable[int]], tag: Optional[str] = None) -> "SetFamily":
        return cls.from_masks(n, (to_mask(s, n) for s in subsets), tag)

    def validate(self) -> None:
        """Check the closure property the tag promises; raise with a witness pair"""
        full = full_mask(self.n)
        members = set(self.masks)
        if any(m & ~full for m in self.masks):
            raise ValidationError(f"family on n={self.n} has a member outside [n]")
        if self.tag == INTERSECTION:
            if full not in members:
                raise ValidationError("intersection-closed family must contain the ground set", witness=None)
            pair = _closure_witness(self.masks, members, lambda a, b: a & b)
            if pair:
                raise ValidationError(
                    f"family is not intersection-closed: {sorted(from_mask(pair[0]))} ∩ {sorted(from_mask(pair[1]))} missing",
                    witness=(from_mask(pair[0]), from_mask(pair[1])))
        elif self.tag == UNION:
            pair = _closure_witness(self.masks, members, lambda a, b: a | b)
            if pair:
                raise ValidationError(
                    f"family is not union-closed: {sorted(from_mask(pair[0]))} ∪ {sorted(from_mask(pair[1]))} missing",
                    witness=(from_mask(pair[0]), from_mask(pair[1])))

    def __len__(self) -> int:
        return len(self.masks)

    def __iter__(self) -> Iterator[frozenset]:
        return (from_mask(m) for m in self.masks)

    def __contains__(self, subset) -> bool:
        mask = subset if isinstance(subset, int) else to_mask(subset, self.n)
        return mask in set(self.masks)

    def complements(self) -> "SetFamily":
        flipped = {INTERSECTION: UNION, UNION: INTERSECTION}.get(self.tag) if self.tag else None
        full = full_mask(self.n)
        return SetFamily(self.n, tuple(sorted(full & ~m for m in self.masks)), flipped)

    def minimal_members(self, nonempty: bool = True) -> "SetFamily":
        return SetFamily(self.n, tuple(minimal_masks(self.masks, nonempty)))


def _closure_witness(masks, members, op):
    for a, b in combinations(masks, 2):
        if op(a, b) not in members:
            return a, b
    return None


@dataclass(frozen=True)
class SetRepresentation:
    """Sets S_1..S_n over a universe [u] inducing a spanoid.

    Intersection flavor: A ⊨ i iff ∩_{j∈A} S_j ⊆ S_i.
    Union flavor: A ⊨ i iff S_i ⊆ ∪_{j∈A} S_j.
    """

    universe: int
    sets: Tuple[int, ...]
    flavor: str = INTERSECTION

    @property
    def n(self) -> int:
        return len(self.sets)

    def set_of(self, i: int) -> frozenset:
        return from_mask(self.sets[i - 1])

    def complement(self) -> "SetRepresentation":
        full = full_mask(self.universe)
        flavor = UNION if self.flavor == INTERSECTION else INTERSECTION
        return SetRepresentation(self.universe, tuple(full & ~s for s in self.sets), flavor)

    def infers(self, premise: Iterable[int], i: int) -> bool:
        """Whether the representation derives premise ⊨ i"""
        target = self.sets[i - 1]
        if self.flavor == INTERSECTION:
            meet = full_mask(self.universe)
            for j in premise:
                meet &= self.sets[j - 1]
            return meet & ~target == 0
        join = 0
        for j in premise:
            join |= self.sets[j - 1]
        return target & ~join == 0

    def to_spanoid(self) -> Spanoid:
        rep = self if self.flavor == UNION else self.complement()
        return from_union_family([from_mask(s) for s in rep.sets])


def new_spanoid(n: int, rules: Iterable[Tuple[Iterable[int], int]], name: Optional[str] = None) -> Spanoid:
    """Build a spanoid on [n] from (premise, conclusion) pairs with 1-based labels"""
    if not isinstance(n, int) or n < 1:
        raise ConstructionError(f"ground-set size must be a positive integer, got {n!r}")
    masks = []
    for index, (premise, conclusion) in enumerate(rules, start=1):
        premise = list(premise)
        bad = [e for e in premise if not 1 <= e <= n]
        if bad:
            raise ConstructionError(f"rule #{index} ({sorted(premise)} -> {conclusion}): premise element {bad[0]} outside 1..{n}")
        if not 1 <= conclusion <= n:
            raise ConstructionError(f"rule #{index} ({sorted(premise)} -> {conclusion}): conclusion outside 1..{n}")
        masks.append((to_mask(premise), conclusion - 1))
    return Spanoid(n, masks, name=name)


def span(sp: Spanoid, subset: Iterable[int]) -> frozenset:
    """Closure of `subset` under the rules of `sp`"""
    return from_mask(sp.span_mask(to_mask(subset, sp.n)))


def models(sp: Spanoid, premise: Iterable[int], i: int) -> bool:
    """premise ⊨ i, i.e. i lies in span(premise)"""
    if not 1 <= i <= sp.n:
        raise ConstructionError(f"element {i} outside 1..{sp.n}")
    return bool(sp.span_mask(to_mask(premise, sp.n)) >> (i - 1) & 1)


def check_enumerable(n: int, what: str = "closed-set enumeration") -> None:
    cap = get_settings().enum_cap
    if n > cap:
        raise CapacityError(
            f"{what} needs all 2^{n} subsets but the cap is n <= {cap}; "
            f"use span()/models() for pointwise queries or raise SPANOID_ENUM_CAP")


def closed_masks(sp: Spanoid) -> List[int]:
    check_enumerable(sp.n)
    logger.debug(f"Enumerating closed sets of {sp.label} over 2^{sp.n} subsets")
    return [mask for mask in range(sp.full + 1) if sp.is_closed_mask(mask)]


def closed_sets(sp: Spanoid) -> SetFamily:
    """All fixpoints of span; intersection-closed and containing [n]"""
    return SetFamily(sp.n, tuple(closed_masks(sp)), INTERSECTION)


def open_sets(sp: Spanoid) -> SetFamily:
    """Complements of the closed sets; union-closed and containing ∅"""
    return closed_sets(sp).complements()


def minimal_open_masks(sp: Spanoid) -> List[int]:
    if sp.open_basis is not None:
        return minimal_masks(sp.open_basis)
    full = sp.full
    return minimal_masks(full & ~c for c in closed_masks(sp))


def minimal_open_sets(sp: Spanoid) -> SetFamily:
    """Inclusion-minimal nonempty open sets"""
    return SetFamily(sp.n, tuple(minimal_open_masks(sp)))


def from_open_basis(n: int, basis: Iterable[int], name: Optional[str] = None) -> Spanoid:
    """Spanoid whose open sets are the unions of members of `basis`.

    For each element e the stored rules are its minimal premises: the
    minimal transversals of the minimal basis members containing e.
    """
    basis = sorted(set(b for b in basis if b))
    rules = []
    for e in range(n):
        containing = [b for b in basis if b >> e & 1]
        for premise in minimal_transversals(minimal_masks(containing)):
            if premise != 1 << e:
                rules.append((premise, e))
    return Spanoid(n, rules, open_basis=basis, name=name)


def from_closed_family(family: SetFamily) -> Spanoid:
    """The unique spanoid whose closed sets are `family`"""
    family = SetFamily(family.n, family.masks, INTERSECTION)
    family.validate()
    return from_open_basis(family.n, family.complements().masks)


def from_union_family(sets: Sequence[Iterable[Hashable]], name: Optional[str] = None) -> Spanoid:
    """Spanoid on [len(sets)] with A ⊨ i iff S_i ⊆ ∪_{j∈A} S_j"""
    sets = [frozenset(s) for s in sets]
    if not sets:
        raise ConstructionError("from_union_family needs at least one set")
    universe = set().union(*sets)
    try:
        ordered = sorted(universe)
    except TypeError:
        ordered = sorted(universe, key=repr)
    basis = []
    for u in ordered:
        basis.append(sum(1 << e for e, s in enumerate(sets) if u in s))
    return from_open_basis(len(sets), basis, name=name)


def set_representation(sp: Spanoid) -> SetRepresentation:
    """Intersection representation over the closed sets: S_i = {closed sets containing i}"""
    closed = closed_masks(sp)
    sets = []
    for e in range(sp.n):
        sets.append(sum(1 << k for k, c in enumerate(closed) if c >> e & 1))
    return SetRepresentation(len(closed), tuple(sets), INTERSECTION)


def union_representation(sp: Spanoid) -> SetRepresentation:
    """Union flavor: S_i = {open sets containing i}, the complement of set_representation"""
    return set_representation(sp).complement()


def intersection_dimension(rep: SetRepresentation) -> int:
    """Fewest sets whose intersection equals the intersection of all of them"""
    if rep.flavor == UNION:
        rep = rep.complement()
    target = full_mask(rep.universe)
    for s in rep.sets:
        target &= s
    for size in range(len(rep.sets) + 1):
        for chosen in combinations(rep.sets, size):
            meet = full_mask(rep.universe)
            for s in chosen:
                meet &= s
            if meet == target:
                return size
    return len(rep.sets)


def is_symmetric(sp: Spanoid) -> bool:
    """Every stored rule S ⊨ i with i ∉ S also yields S - s + i ⊨ s for each s ∈ S"""
    for premise, conclusion in sp.rule_masks:
        if premise >> conclusion & 1:
            continue
        for s in iter_bits(premise):
            swapped = (premise & ~(1 << s)) | (1 << conclusion)
            if not sp.span_mask(swapped) >> s & 1:
                return False
    return True


def free_spanoid(n: int) -> Spanoid:
    """No rules: every subset is closed"""
    return new_spanoid(n, [], name=f"free{n}")


def pentagon() -> Spanoid:
    """Five vertices of a cycle; each edge spans the opposite vertex"""
    rules = [({1, 2}, 4), ({2, 3}, 5), ({3, 4}, 1), ({4, 5}, 2), ({5, 1}, 3)]
    return new_spanoid(5, rules, name="pentagon")


def pentagon_union_sets() -> List[frozenset]:
    """S_i = {i+3, i+1} (mod 5): the union representation behind the pentagon code"""
    return [frozenset({(i + 2) % 5 + 1, i % 5 + 1}) for i in range(1, 6)]


def pentagon_union_representation() -> SetRepresentation:
    return SetRepresentation(5, tuple(to_mask(s) for s in pentagon_union_sets()), UNION)


XU_CLOSED_SETS = ((), (1,), (4,), (2, 4), (3, 4), (1, 2, 3, 4))


def xu_spanoid() -> Spanoid:
    """Four-element spanoid given by six closed sets; rank 2, yet rank of its tensor square is 3"""
    sp = from_closed_family(SetFamily.of(4, XU_CLOSED_SETS))
    sp.name = "xu"
    return sp


def uniform_matroid(k: int, n: int) -> Spanoid:
    """Every k-subset spans everything (the uniform matroid U(k, n) as a spanoid)"""
    if not 0 <= k <= n:
        raise ConstructionError(f"uniform matroid needs 0 <= k <= n, got k={k}, n={n}")
    rules = []
    for premise in combinations(range(1, n + 1), k):
        for i in range(1, n + 1):
            if i not in premise:
                rules.append((premise, i))
    return new_spanoid(n, rules, name=f"U({k},{n})")
