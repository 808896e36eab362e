"""Codes consistent with a spanoid.

A code is consistent when, for every stored rule (S, i), the symbols a
word carries on S determine its symbol at i. Codes built from a union
representation can stay lazy: their consistency is decided from the
representation itself.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import groupby, product
from typing import Iterator, List, Optional, Sequence, Tuple, Union

from spanoid_lab.errors import BudgetError, CapacityError, ConstructionError, RetriesExhausted, ValidationError
from spanoid_lab.lp import fmt_fraction
from spanoid_lab.relaxations import lp_cover_dual, lp_entropy
from spanoid_lab.seeds import task_rng
from spanoid_lab.settings import get_settings
from spanoid_lab.spanoid import (
    UNION,
    SetRepresentation,
    Spanoid,
    from_mask,
    iter_bits,
    pentagon_union_representation,
)

logger = logging.getLogger(__name__)

Word = Tuple[int, ...]


class Code:
    """Words of length n over symbols 0..s-1.

    Either `words` is a materialized sorted tuple, or the code is generated
    by a union representation with symbol width `ell`: the word of
    x ∈ {0,1}^U has at coordinate i the bits (x_u)_{u ∈ S_i} packed into one
    symbol, higher bits 0.
    """

    def __init__(self, n: int, s: int, words: Optional[Sequence[Word]] = None,
                 representation: Optional[SetRepresentation] = None, ell: Optional[int] = None):
        if s < 1:
            raise ConstructionError(f"alphabet size must be at least 1, got {s}")
        self.n = n
        self.s = s
        self.representation = representation
        self.ell = ell
        self.words: Optional[Tuple[Word, ...]] = None
        if words is not None:
            ordered = sorted(tuple(w) for w in words)
            for w in ordered:
                if len(w) != n:
                    raise ConstructionError(f"word {w} has length {len(w)}, expected {n}")
                if any(not 0 <= x < s for x in w):
                    raise ConstructionError(f"word {w} uses a symbol outside 0..{s - 1}")
            for a, b in zip(ordered, ordered[1:]):
                if a == b:
                    raise ConstructionError(f"duplicate word {a}")
            if s == 1 and len(ordered) > 1:
                raise ConstructionError("a one-symbol alphabet admits only the singleton code")
            self.words = tuple(ordered)
        elif representation is None:
            raise ConstructionError("a code needs words or a generating representation")

    @property
    def is_lazy(self) -> bool:
        return self.words is None

    @property
    def size(self) -> int:
        return len(self.words) if self.words is not None else 1 << self.representation.universe

    def word_of(self, x: int) -> Word:
        """Word generated by the universe assignment encoded in the bits of x"""
        return tuple(_pack(x, s) for s in self.representation.sets)

    def iter_words(self) -> Iterator[Word]:
        if self.words is not None:
            return iter(self.words)
        return (self.word_of(x) for x in range(self.size))

    def materialize(self) -> "Code":
        if self.words is not None:
            return self
        cap = get_settings().code_materialize_cap
        if self.representation.universe > cap:
            raise CapacityError(f"code has 2^{self.representation.universe} words; materialization cap is 2^{cap}")
        return Code(self.n, self.s, list(self.iter_words()))

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        kind = "lazy" if self.is_lazy else "explicit"
        return f"Code(n={self.n}, s={self.s}, size={self.size}, {kind})"


def _pack(x: int, subset: int) -> int:
    symbol = 0
    for k, u in enumerate(iter_bits(subset)):
        symbol |= (x >> u & 1) << k
    return symbol


def constant_code(n: int, s: int = 1) -> Code:
    return Code(n, s, [(0,) * n])


@dataclass(frozen=True)
class Violation:
    rule: Tuple[frozenset, int]
    first: Word
    second: Word

    def describe(self) -> str:
        premise, conclusion = self.rule
        return (f"rule {sorted(premise)} -> {conclusion}: words {list(self.first)} and {list(self.second)} "
                f"agree on the premise but differ at {conclusion}")


def check_consistent(sp: Spanoid, code: Code) -> Optional[Violation]:
    """None when `code` is consistent with every stored rule of `sp`,
    otherwise the first violating rule (canonical order) with a word pair"""
    if code.n != sp.n:
        raise ValidationError(f"code length {code.n} differs from ground-set size {sp.n}")
    if code.is_lazy:
        return _check_structural(sp, code)
    for premise, conclusion in sp.rule_masks:
        if premise >> conclusion & 1:
            continue
        positions = list(iter_bits(premise))

        def key(w, positions=positions):
            return tuple(w[p] for p in positions)

        for _, group in groupby(sorted(code.words, key=key), key=key):
            group = list(group)
            first = group[0]
            for other in group[1:]:
                if other[conclusion] != first[conclusion]:
                    return Violation((from_mask(premise), conclusion + 1), first, other)
    return None


def _check_structural(sp: Spanoid, code: Code) -> Optional[Violation]:
    """Representation codes: rule (S, i) holds iff S_i ⊆ ∪_{t∈S} S_t"""
    sets = code.representation.sets
    for premise, conclusion in sp.rule_masks:
        if premise >> conclusion & 1:
            continue
        covered = 0
        for t in iter_bits(premise):
            covered |= sets[t]
        missing = sets[conclusion] & ~covered
        if missing:
            u = missing & -missing
            return Violation((from_mask(premise), conclusion + 1), code.word_of(0), code.word_of(u))
    return None


def _primitive_root(s: int) -> Tuple[int, int]:
    """(b, k) with b**k == s and b not itself a perfect power"""
    for k in range(s.bit_length(), 0, -1):
        b = round(s ** (1 / k))
        for candidate in (b - 1, b, b + 1):
            if candidate >= 2 and candidate ** k == s:
                return candidate, k
    return s, 1


def code_dimension(code: Code) -> Union[Fraction, float]:
    """log_s |C|; an exact Fraction whenever |C| is a rational power of s"""
    size = code.size
    if code.s == 1:
        if size != 1:
            raise ValidationError("a one-symbol alphabet admits only the singleton code")
        return Fraction(0)
    if size == 1:
        return Fraction(0)
    base, k = _primitive_root(code.s)
    m, rest = 0, size
    while rest % base == 0:
        rest //= base
        m += 1
    if rest == 1:
        return Fraction(m, k)
    return math.log(size) / math.log(code.s)


def code_from_union_representation(rep: SetRepresentation, ell: int) -> Code:
    """The code over {0,1}^ell of a union representation, with dimension |U|/ell"""
    if rep.flavor != UNION:
        raise ConstructionError("code construction needs a union-flavor representation")
    if ell < 1:
        raise ConstructionError(f"symbol width must be positive, got {ell}")
    for i, s in enumerate(rep.sets, start=1):
        if s.bit_count() > ell:
            raise ConstructionError(f"set S_{i} has {s.bit_count()} elements, more than ell={ell}")
    used = 0
    for s in rep.sets:
        used |= s
    # drop universe points that no set uses; they would only repeat words
    position = {u: k for k, u in enumerate(iter_bits(used))}
    compact = tuple(sum(1 << position[u] for u in iter_bits(s)) for s in rep.sets)
    compact_rep = SetRepresentation(len(position), compact, UNION)
    code = Code(rep.n, 1 << ell, representation=compact_rep, ell=ell)
    if compact_rep.universe <= get_settings().code_materialize_cap:
        code = Code(rep.n, 1 << ell, list(code.iter_words()), representation=compact_rep, ell=ell)
    logger.debug(f"Union-representation code: {code!r}")
    return code


def pentagon_code() -> Code:
    """32 words over 4 symbols: coordinate i carries the bits on the vertices i-2 and i+1"""
    return code_from_union_representation(pentagon_union_representation(), 2)


def tensor_union_representation(rep1: SetRepresentation, rep2: SetRepresentation) -> SetRepresentation:
    """S_(i,j) = S_i × S'_j over U1 × U2, indexed row-major like the spanoid products"""
    if rep1.flavor != UNION or rep2.flavor != UNION:
        raise ConstructionError("tensoring needs union-flavor representations")
    u2 = rep2.universe
    sets = []
    for a in rep1.sets:
        for b in rep2.sets:
            sets.append(sum(1 << (x * u2 + y) for x in iter_bits(a) for y in iter_bits(b)))
    return SetRepresentation(rep1.universe * u2, tuple(sets), UNION)


def _multiset_representation(n: int, members: List[int]) -> SetRepresentation:
    """One universe bit per member h of H; S_i = {h : i ∈ h}"""
    sets = tuple(sum(1 << h for h, m in enumerate(members) if m >> e & 1) for e in range(n))
    return SetRepresentation(len(members), sets, UNION)


def build_cover_code(sp: Spanoid) -> Code:
    """Code of dimension LP-cover: optimal λ scaled by the LCM N of its denominators
    gives a multiset of minimal opens, one bit per copy, symbols of N bits"""
    dual = lp_cover_dual(sp)
    if not dual.weights:
        return constant_code(sp.n)
    scale = math.lcm(*(w.denominator for w in dual.weights.values()))
    members = []
    for mask, weight in sorted(dual.masks().items()):
        members.extend([mask] * int(weight * scale))
    code = code_from_union_representation(_multiset_representation(sp.n, members), scale)
    logger.info(f"Cover code for {sp.label}: {len(members)} bits, alphabet 2^{scale}, "
                f"dimension {fmt_fraction(Fraction(len(members), scale))}")
    return code


@dataclass
class SampledCode:
    code: Code
    attempts: int
    members: int
    max_load: int

    @property
    def dimension(self) -> Fraction:
        return Fraction(self.members, max(self.max_load, 1))


def load_limit(n: int) -> Optional[int]:
    """⌈e·ln n / ln ln n⌉, defined for n ≥ 3"""
    if n < 3:
        return None
    return math.ceil(math.e * math.log(n) / math.log(math.log(n)))


def sample_small_alphabet_code(sp: Spanoid, seed: int = 0, retries: Optional[int] = None) -> SampledCode:
    """Keep each minimal open S independently with probability λ_S; accept when
    at least half the cover value survives, no element is covered more than
    the load limit, and the induced code has dimension |H|/Δ(H) >= lp_cover/2"""
    retries = retries or get_settings().lcs_retries
    dual = lp_cover_dual(sp)
    if not dual.weights:
        return SampledCode(constant_code(sp.n), 1, 0, 0)
    rng = task_rng(seed)
    limit = load_limit(sp.n)
    weighted = sorted(dual.masks().items())
    best = None
    for attempt in range(1, retries + 1):
        members = [m for m, w in weighted if int(rng.integers(w.denominator)) < w.numerator]
        loads = [sum(1 for m in members if m >> e & 1) for e in range(sp.n)]
        max_load = max(loads) if members else 0
        if best is None or len(members) > best[0]:
            best = (len(members), max_load)
        dimension = Fraction(len(members), max(max_load, 1))
        if (2 * len(members) >= dual.value and 2 * dimension >= dual.value
                and (limit is None or max_load <= limit)):
            rep = _multiset_representation(sp.n, members)
            code = code_from_union_representation(rep, max(max_load, 1)) if members else constant_code(sp.n)
            logger.info(f"Small-alphabet code for {sp.label}: |H|={len(members)}, load {max_load}, attempt {attempt}")
            return SampledCode(code, attempt, len(members), max_load)
    raise RetriesExhausted(f"no acceptable sample for {sp.label} in {retries} attempts "
                           f"(best |H|={best[0]}, load {best[1]})", lower=best[0])


def _entropy_size_bound(value: Fraction, s: int) -> int:
    """Largest m with m^q <= s^p where value = p/q"""
    p, q = value.numerator, value.denominator
    target = s ** p
    m = int(round(s ** float(value)))
    while m ** q > target:
        m -= 1
    while (m + 1) ** q <= target:
        m += 1
    return m


def _compatibility(sp: Spanoid, words: List[Word]) -> List[int]:
    """Bitset of words that may share a code with each word"""
    everyone = (1 << len(words)) - 1
    clash = [0] * len(words)
    for premise, conclusion in sp.rule_masks:
        if premise >> conclusion & 1:
            continue
        positions = list(iter_bits(premise))
        groups = {}
        for k, w in enumerate(words):
            by_symbol = groups.setdefault(tuple(w[p] for p in positions), {})
            by_symbol[w[conclusion]] = by_symbol.get(w[conclusion], 0) | 1 << k
        for by_symbol in groups.values():
            if len(by_symbol) < 2:
                continue
            group = 0
            for members in by_symbol.values():
                group |= members
            for members in by_symbol.values():
                others = group & ~members
                for k in iter_bits(members):
                    clash[k] |= others
    return [everyone & ~clash[k] & ~(1 << k) for k in range(len(words))]


def _max_clique(adjacency: List[int], candidates: int, seed_clique: int, incumbent: int, upper: int,
                budget: int) -> int:
    best = incumbent
    nodes = 0

    def coloring(cand: int):
        order = []
        uncolored = cand
        color = 0
        while uncolored:
            color += 1
            q = uncolored
            while q:
                v = (q & -q).bit_length() - 1
                q &= ~adjacency[v] & ~(1 << v)
                uncolored &= ~(1 << v)
                order.append((v, color))
        return order

    def expand(clique: int, cand: int):
        nonlocal best, nodes
        nodes += 1
        if nodes > budget:
            raise BudgetError(f"code search exceeded {budget} nodes", lower=best.bit_count(), upper=upper)
        for v, color in reversed(coloring(cand)):
            if clique.bit_count() + color <= best.bit_count() or best.bit_count() >= upper:
                return
            grown = clique | 1 << v
            rest = cand & adjacency[v]
            if rest:
                expand(grown, rest)
            elif grown.bit_count() > best.bit_count():
                best = grown
            cand &= ~(1 << v)

    expand(seed_clique, candidates)
    return best


def max_consistent_code(sp: Spanoid, s: int, budget: Optional[int] = None) -> Code:
    """A maximum-cardinality code over s symbols consistent with `sp`.

    The entropy LP caps |C| at s^LPentropy. The incumbent is the better of
    the cover code (when its alphabet fits) and a greedy lexicographic code;
    when it does not meet the cap, a clique search over pairwise compatible
    words settles optimality. Symbol relabeling per coordinate preserves
    consistency, so the search fixes the all-zero word.
    """
    settings = get_settings()
    budget = budget or settings.code_search_budget
    if s == 1:
        return constant_code(sp.n, 1)
    if s ** sp.n > budget:
        raise BudgetError(f"max code search over {s}^{sp.n} words exceeds budget {budget}")
    words = list(product(range(s), repeat=sp.n))
    adjacency = _compatibility(sp, words)
    index = {w: k for k, w in enumerate(words)}

    greedy = 0
    allowed = (1 << len(words)) - 1
    while allowed:
        v = (allowed & -allowed).bit_length() - 1
        greedy |= 1 << v
        allowed &= adjacency[v]
    incumbent = greedy
    cover = build_cover_code(sp)
    if cover.s <= s and cover.size > incumbent.bit_count() and not cover.is_lazy:
        incumbent = sum(1 << index[w] for w in cover.words)

    upper = _entropy_size_bound(lp_entropy(sp).value, s)
    logger.info(f"Max code search for {sp.label} over {s} symbols: incumbent {incumbent.bit_count()}, bound {upper}")
    if incumbent.bit_count() < upper:
        incumbent = _max_clique(adjacency, adjacency[0], 1, incumbent, upper,
                                settings.code_node_budget)
    return Code(sp.n, s, [words[k] for k in iter_bits(incumbent)])
