# spanoid_lab/__init__.py
"""
Spanoid Lab

Exact tools for spanoids, abstract inference systems over a ground set
[n] where rules S ⊨ i say that the elements of S determine i.

Features:
- Span, closed and open sets, intersection and union set representations
- Exact rank by hitting-set branch and bound or direct search
- Exact rational simplex with certified primal and dual solutions
- LP cover, its dual and the Shannon-type entropy LP
- Consistent codes: checking, cover codes, small alphabets, exhaustive search
- Dot, tensor and semidirect products
- Locally correctable spanoids, spread samplers and spanning-set algorithms
- A LangGraph acceptance pipeline behind `spanoid-lab paper repro`
"""

__version__ = "1.0.0"
__description__ = "Rank, LP relaxations, codes and products of spanoids"

from spanoid_lab.errors import (
    BudgetError,
    CapacityError,
    ConstructionError,
    DomainViolation,
    FormatError,
    SpanoidError,
    ValidationError,
)
from spanoid_lab.spanoid import (
    SetFamily,
    SetRepresentation,
    Spanoid,
    closed_sets,
    from_closed_family,
    from_union_family,
    minimal_open_sets,
    new_spanoid,
    open_sets,
    pentagon,
    set_representation,
    span,
    union_representation,
    xu_spanoid,
)
from spanoid_lab.rank import rank
from spanoid_lab.relaxations import lp_cover, lp_entropy
from spanoid_lab.codes import Code, build_cover_code, check_consistent, code_dimension
from spanoid_lab.products import product_dot, product_semidirect, product_tensor
from spanoid_lab.lcs import LcsInstance, hadamard_spanoid, random_qlcs, validate_lcs

__all__ = [
    "BudgetError",
    "CapacityError",
    "Code",
    "ConstructionError",
    "DomainViolation",
    "FormatError",
    "LcsInstance",
    "SetFamily",
    "SetRepresentation",
    "Spanoid",
    "SpanoidError",
    "ValidationError",
    "build_cover_code",
    "check_consistent",
    "closed_sets",
    "code_dimension",
    "from_closed_family",
    "from_union_family",
    "hadamard_spanoid",
    "lp_cover",
    "lp_entropy",
    "minimal_open_sets",
    "new_spanoid",
    "open_sets",
    "pentagon",
    "product_dot",
    "product_semidirect",
    "product_tensor",
    "random_qlcs",
    "rank",
    "set_representation",
    "span",
    "union_representation",
    "validate_lcs",
    "xu_spanoid",
]
