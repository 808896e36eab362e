"""Products of spanoids on [n1] × [n2].

Pairs are flattened row-major, (i, j) -> (i-1)·n2 + j, with i from the
left factor.
"""
import logging
from dataclasses import dataclass
from itertools import product
from typing import Dict, Iterable, List, Tuple

from spanoid_lab.errors import ConstructionError, DomainViolation
from spanoid_lab.rank import compare_open_families
from spanoid_lab.spanoid import (
    Spanoid,
    check_enumerable,
    closed_masks,
    from_open_basis,
    iter_bits,
    minimal_masks,
    minimal_open_masks,
)

logger = logging.getLogger(__name__)

DOT = "dot"
TENSOR = "tensor"
SEMIDIRECT = "semidirect"
KINDS = (DOT, TENSOR, SEMIDIRECT)


def flat_index(i: int, j: int, n2: int) -> int:
    return (i - 1) * n2 + j


def pair_of(k: int, n2: int) -> Tuple[int, int]:
    return (k - 1) // n2 + 1, (k - 1) % n2 + 1


@dataclass
class ProductSpanoid:
    base: Spanoid
    kind: str
    left: Spanoid
    right: Spanoid

    def flatten(self, pairs: Iterable[Tuple[int, int]]) -> frozenset:
        return frozenset(flat_index(i, j, self.right.n) for i, j in pairs)

    def pairs(self, elements: Iterable[int]) -> List[Tuple[int, int]]:
        return sorted(pair_of(k, self.right.n) for k in elements)


def _grid(mask1: int, mask2: int, n2: int) -> int:
    """Bitmask of mask1 × mask2 in the flattened ground set"""
    out = 0
    for a in iter_bits(mask1):
        for b in iter_bits(mask2):
            out |= 1 << (a * n2 + b)
    return out


def _inferences(sp: Spanoid, derived: bool) -> List[Tuple[int, int]]:
    """Stored rules, or every inference A ⊨ i with i ∉ A when `derived`"""
    if not derived:
        return [(p, c) for p, c in sp.rule_masks if not p >> c & 1]
    check_enumerable(sp.n, "derived-inference instantiation")
    out = []
    for premise in range(sp.full + 1):
        for c in iter_bits(sp.span_mask(premise) & ~premise):
            out.append((premise, c))
    return out


def _schemata(s1: Spanoid, s2: Spanoid, whole_rows: bool, derived: bool) -> List[Tuple[int, int]]:
    """Rules A × row ⊨ (i, j) for A ⊨ i in s1 and {i} × B ⊨ (i, j) for B ⊨ j in s2.

    With `whole_rows` the left premises take every column (semidirect);
    otherwise only column j (tensor).
    """
    n1, n2 = s1.n, s2.n
    rules = []
    for premise, i in _inferences(s1, derived):
        for j in range(n2):
            row = s2.full if whole_rows else 1 << j
            rules.append((_grid(premise, row, n2), i * n2 + j))
    for premise, j in _inferences(s2, derived):
        for i in range(n1):
            rules.append((_grid(1 << i, premise, n2), i * n2 + j))
    return rules


def product_semidirect(s1: Spanoid, s2: Spanoid, derived: bool = False) -> ProductSpanoid:
    """A × [n2] ⊨ (i, j) for A ⊨ i, and {i} × B ⊨ (i, j) for B ⊨ j"""
    rules = _schemata(s1, s2, True, derived)
    base = Spanoid(s1.n * s2.n, rules, name=f"semidirect({s1.label},{s2.label})")
    logger.info(f"Built {base.label}: n={base.n}, {len(base.rule_masks)} rules")
    return ProductSpanoid(base, SEMIDIRECT, s1, s2)


def product_tensor(s1: Spanoid, s2: Spanoid, derived: bool = False) -> ProductSpanoid:
    """A × {j} ⊨ (i, j) for A ⊨ i, and {i} × B ⊨ (i, j) for B ⊨ j"""
    rules = _schemata(s1, s2, False, derived)
    base = Spanoid(s1.n * s2.n, rules, name=f"tensor({s1.label},{s2.label})")
    logger.info(f"Built {base.label}: n={base.n}, {len(base.rule_masks)} rules")
    return ProductSpanoid(base, TENSOR, s1, s2)


def _open_masks(sp: Spanoid) -> List[int]:
    return [sp.full & ~c for c in closed_masks(sp)]


def product_dot(s1: Spanoid, s2: Spanoid) -> ProductSpanoid:
    """The spanoid whose open sets are the unions of products A × B of open sets.

    The product opens form the open basis, so the minimal open sets stay
    available when n1·n2 is beyond the enumeration cap; they must be
    exactly the products of minimal open sets.
    """
    n2 = s2.n
    opens1 = [m for m in _open_masks(s1) if m]
    opens2 = [m for m in _open_masks(s2) if m]
    basis = [_grid(a, b, n2) for a, b in product(opens1, opens2)]
    base = from_open_basis(s1.n * n2, basis, name=f"dot({s1.label},{s2.label})")
    expected = sorted(_grid(a, b, n2) for a, b in product(minimal_open_masks(s1), minimal_open_masks(s2)))
    if minimal_masks(basis) != expected:
        raise DomainViolation(f"minimal open sets of {base.label} are not the products of minimal open sets")
    logger.info(f"Built {base.label}: n={base.n}, {len(basis)} basis opens, {len(base.rule_masks)} rules")
    return ProductSpanoid(base, DOT, s1, s2)


BUILDERS = {DOT: product_dot, TENSOR: product_tensor, SEMIDIRECT: product_semidirect}


def build_product(kind: str, s1: Spanoid, s2: Spanoid) -> ProductSpanoid:
    if kind not in BUILDERS:
        raise ConstructionError(f"unknown product kind {kind!r}; expected one of {KINDS}")
    return BUILDERS[kind](s1, s2)


def semidirect_power(sp: Spanoid, k: int) -> Spanoid:
    """Left-nested semidirect power: ((sp x sp) x ...) x sp with k factors."""
    if k < 1:
        raise ConstructionError(f"power must be at least 1, got {k}")
    if k == 1:
        return sp
    result = sp
    for _ in range(k - 1):
        result = product_semidirect(result, sp).base
    result.name = f"{sp.label}^{k}"
    return result


def open_family_inclusions(s1: Spanoid, s2: Spanoid) -> Dict[str, bool]:
    """Whether O(dot) ⊆ O(tensor) and O(tensor) ⊆ O(semidirect) for the pair"""
    check_enumerable(s1.n * s2.n, "open-family comparison")
    dot = product_dot(s1, s2).base
    tensor = product_tensor(s1, s2).base
    semidirect = product_semidirect(s1, s2).base
    return {
        "dot<=tensor": compare_open_families(dot, tensor) is None,
        "tensor<=semidirect": compare_open_families(tensor, semidirect) is None,
    }
