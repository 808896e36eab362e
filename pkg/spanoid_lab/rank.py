"""Exact spanoid rank.

Two engines share one contract. The hitting-set engine searches for the
smallest set meeting every minimal nonempty open set, starting from the
rounded-up cover LP bound. The direct engine grows candidate sets through
the span operator and needs no enumeration, so it also serves ground sets
beyond the enumeration cap. Both report the optimal witness with the
smallest bitmask, so the search fixes the largest element first and keeps
it as small as possible.
"""
import logging
import math
from dataclasses import InitVar, dataclass
from itertools import combinations
from typing import Dict, List, Optional, Tuple

from spanoid_lab.errors import BudgetError, CapacityError, DomainViolation, ValidationError
from spanoid_lab.relaxations import solve_cover
from spanoid_lab.settings import get_settings
from spanoid_lab.spanoid import (
    UNION,
    SetFamily,
    Spanoid,
    closed_masks,
    from_mask,
    iter_bits,
    minimal_open_masks,
)

logger = logging.getLogger(__name__)

HITTING_SET = "hitting-set"
DIRECT_SEARCH = "direct-search"
BRUTE_FORCE = "brute-force"


@dataclass(frozen=True)
class RankCertificate:
    """Rank with a spanning witness of that size, re-verified on construction"""

    rank: int
    witness: frozenset
    method: str
    spanoid: InitVar[Spanoid] = None

    def __post_init__(self, spanoid: Optional[Spanoid]):
        if len(self.witness) != self.rank:
            raise DomainViolation(f"rank witness has {len(self.witness)} elements, expected {self.rank}")
        if spanoid is not None:
            mask = sum(1 << (i - 1) for i in self.witness)
            if spanoid.span_mask(mask) != spanoid.full:
                raise DomainViolation(f"rank witness {sorted(self.witness)} does not span {spanoid.label}")


def _certificate(sp: Spanoid, mask: int, method: str) -> RankCertificate:
    return RankCertificate(mask.bit_count(), from_mask(mask), method, sp)


def greedy_spanning_set(sp: Spanoid) -> int:
    """Spanning set built by repeatedly adding the element with the largest span gain"""
    current = sp.span_mask(0)
    chosen = 0
    while current != sp.full:
        best = None
        for e in iter_bits(sp.full & ~current):
            grown = sp.span_mask(current | 1 << e)
            if best is None or grown.bit_count() > best[0]:
                best = (grown.bit_count(), e, grown)
        chosen |= 1 << best[1]
        current = best[2]
    return chosen


def brute_force_rank(sp: Spanoid) -> RankCertificate:
    """Smallest spanning subset by trying all subsets in order of size"""
    if sp.n > 12:
        raise CapacityError(f"brute-force rank is limited to n <= 12, got n={sp.n}")
    for size in range(sp.n + 1):
        spanning = [mask for mask in (sum(1 << e for e in chosen) for chosen in combinations(range(sp.n), size))
                    if sp.span_mask(mask) == sp.full]
        if spanning:
            return _certificate(sp, min(spanning), BRUTE_FORCE)
    raise DomainViolation(f"{sp.label}: the ground set does not span itself")


def minimum_hitting_set(sets: List[int], n: int, lower: int = 0, budget: Optional[int] = None) -> int:
    """Minimum-size set of elements meeting every mask in `sets`, smallest as a bitmask"""
    sets = sorted(set(sets))
    if not sets:
        return 0
    budget = budget or get_settings().rank_node_budget
    nodes = 0

    def packing(unhit: List[int]) -> int:
        used = 0
        count = 0
        for s in sorted(unhit, key=lambda m: (m.bit_count(), m)):
            if not s & used:
                used |= s
                count += 1
        return count

    # elements are chosen from the top down, each below the last one
    def search(chosen: int, below: int, unhit: List[int], left: int) -> Optional[int]:
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetError(f"hitting-set search exceeded {budget} nodes", lower=None, upper=None)
        if not unhit:
            return chosen
        if left == 0:
            return None
        allowed = (1 << below) - 1
        reachable = [s & allowed for s in unhit]
        if any(r == 0 for r in reachable) or packing(reachable) > left:
            return None
        first = max((r & -r).bit_length() - 1 for r in reachable)
        for e in range(first, below):
            bit = 1 << e
            if not any(s & bit for s in unhit):
                continue
            found = search(chosen | bit, e, [s for s in unhit if not s & bit], left - 1)
            if found is not None:
                return found
        return None

    size = max(lower, 1)
    while size <= n:
        try:
            found = search(0, n, sets, size)
        except BudgetError as e:
            raise BudgetError(str(e), lower=size, upper=None) from e
        if found is not None:
            return found
        logger.debug(f"No hitting set of size {size} ({nodes} nodes so far)")
        size += 1
    raise ValidationError("some set cannot be hit (it is empty)")


def _rank_hitting_set(sp: Spanoid) -> RankCertificate:
    if sp.span_mask(0) == sp.full:
        return _certificate(sp, 0, HITTING_SET)
    opens = minimal_open_masks(sp)
    lower = math.ceil(solve_cover(sp).value)
    mask = minimum_hitting_set(opens, sp.n, lower)
    return _certificate(sp, mask, HITTING_SET)


def _rank_direct(sp: Spanoid, lower: int = 0) -> RankCertificate:
    settings = get_settings()
    budget = settings.rank_node_budget
    full = sp.full
    n = sp.n
    upper_mask = greedy_spanning_set(sp)
    upper = upper_mask.bit_count()
    nodes = 0
    # (closure, remaining depth) -> largest element bound known to fail
    failed: Dict[Tuple[int, int], int] = {}
    heads = [(1 << b) - 1 for b in range(n + 1)]

    def search(closure: int, below: int, chosen: int, left: int) -> Optional[int]:
        nonlocal nodes
        if closure == full:
            return chosen
        if left == 0:
            return None
        nodes += 1
        if nodes > budget:
            raise BudgetError(f"rank search on {sp.label} exceeded {budget} nodes")
        key = (closure, left)
        known = failed.get(key)
        if known is not None and known >= below:
            return None
        if sp.span_mask(closure | heads[below]) != full:
            failed[key] = below
            return None
        for e in range(left - 1, below):
            if closure >> e & 1:
                continue
            found = search(sp.span_mask(closure | 1 << e), e, chosen | 1 << e, left - 1)
            if found is not None:
                return found
        failed[key] = below if known is None else max(known, below)
        return None

    base = sp.span_mask(0)
    for size in range(max(lower, 0), upper + 1):
        try:
            found = search(base, n, 0, size)
        except BudgetError as e:
            raise BudgetError(f"{e}; rank lies in [{size}, {upper}]", lower=size, upper=upper) from e
        if found is not None:
            logger.info(f"Rank of {sp.label} is {size} ({nodes} search nodes)")
            return _certificate(sp, found, DIRECT_SEARCH)
        logger.debug(f"{sp.label}: no spanning set of size {size}")
    raise DomainViolation(f"greedy spanning set of size {upper} was not found again by search")


def _minimal_opens_available(sp: Spanoid) -> bool:
    return sp.open_basis is not None or sp.n <= get_settings().enum_cap


def rank(sp: Spanoid, method: Optional[str] = None) -> RankCertificate:
    """Exact rank with a spanning witness.

    By default the hitting-set engine runs whenever minimal open sets are
    available and the direct engine otherwise.
    """
    settings = get_settings()
    if method is None:
        method = HITTING_SET if _minimal_opens_available(sp) else DIRECT_SEARCH
    if method == HITTING_SET:
        if not _minimal_opens_available(sp):
            raise CapacityError(f"minimal open sets of {sp.label} are not available beyond n = {settings.enum_cap}")
        return _rank_hitting_set(sp)
    if method == DIRECT_SEARCH:
        if sp.n > settings.rank_search_cap:
            upper = greedy_spanning_set(sp).bit_count()
            raise BudgetError(f"exact rank search is capped at n <= {settings.rank_search_cap}, got n={sp.n}",
                              lower=None, upper=upper)
        return _rank_direct(sp)
    if method == BRUTE_FORCE:
        return brute_force_rank(sp)
    raise ValidationError(f"unknown rank method {method!r}")


@dataclass(frozen=True)
class LogBound:
    closed_count: int
    value: float

    def dominates(self, r: int) -> bool:
        """Exact test of r <= log2(closed_count)"""
        return (1 << r) <= self.closed_count


def rank_log_bound(sp: Spanoid) -> LogBound:
    """log2 of the number of closed sets, an upper bound on rank"""
    count = len(closed_masks(sp))
    return LogBound(count, math.log2(count))


def frankl_max_frequency(family: SetFamily) -> Tuple[int, int, int]:
    """(element, count, N): the most frequent element over the N nonempty
    members of a union-closed family; ties go to the smallest element"""
    SetFamily(family.n, family.masks, UNION).validate()
    nonempty = [m for m in family.masks if m]
    if not nonempty:
        raise ValidationError("family has no nonempty member")
    counts = [0] * family.n
    for m in nonempty:
        for e in iter_bits(m):
            counts[e] += 1
    best = max(range(family.n), key=lambda e: (counts[e], -e))
    return best + 1, counts[best], len(nonempty)


def compare_open_families(s1: Spanoid, s2: Spanoid) -> Optional[frozenset]:
    """None when every open set of s1 is open in s2, else the first open set of s1 that is not"""
    if s1.n != s2.n:
        raise ValidationError(f"ground sets differ: {s1.n} vs {s2.n}")
    closed2 = set(closed_masks(s2))
    for closed in closed_masks(s1):
        if closed not in closed2:
            return from_mask(s1.full & ~closed)
    return None
