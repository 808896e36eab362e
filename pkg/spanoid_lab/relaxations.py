"""LP relaxations of spanoid rank: the fractional cover of minimal open sets,
its dual, and the entropy LP over monotone submodular set functions."""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Tuple

from spanoid_lab.errors import CapacityError, ConstructionError, DomainViolation
from spanoid_lab.lp import MAXIMIZE, MINIMIZE, LpSolution, RationalLP, fmt_fraction, solve_exact
from spanoid_lab.settings import get_settings
from spanoid_lab.spanoid import Spanoid, from_mask, iter_bits, minimal_open_masks

logger = logging.getLogger(__name__)

ELEMENTAL = "elemental"
FULL = "full"
BOTH = "both"


def _x(e: int) -> str:
    return f"x{e + 1}"


def _set_name(mask: int) -> str:
    return "{" + ",".join(str(i + 1) for i in iter_bits(mask)) + "}"


def cover_lp(sp: Spanoid, opens: Optional[List[int]] = None) -> RationalLP:
    """min Σ x_i subject to Σ_{i∈S} x_i ≥ 1 for every minimal open S"""
    opens = minimal_open_masks(sp) if opens is None else opens
    lp = RationalLP(MINIMIZE, name=f"cover[{sp.label}]")
    for e in range(sp.n):
        lp.add_variable(_x(e))
    lp.set_objective({_x(e): 1 for e in range(sp.n)})
    for mask in opens:
        lp.add_constraint({_x(e): 1 for e in iter_bits(mask)}, ">=", 1, name=f"hit{_set_name(mask)}")
    return lp


def cover_dual_lp(sp: Spanoid, opens: Optional[List[int]] = None) -> RationalLP:
    """max Σ λ_S subject to Σ_{S∋i} λ_S ≤ 1 for every element i"""
    opens = minimal_open_masks(sp) if opens is None else opens
    lp = RationalLP(MAXIMIZE, name=f"cover-dual[{sp.label}]")
    for mask in opens:
        lp.add_variable(f"l{_set_name(mask)}")
    lp.set_objective({f"l{_set_name(mask)}": 1 for mask in opens})
    for e in range(sp.n):
        lp.add_constraint({f"l{_set_name(m)}": 1 for m in opens if m >> e & 1}, "<=", 1, name=f"load{e + 1}")
    return lp


def solve_cover(sp: Spanoid) -> LpSolution:
    opens = minimal_open_masks(sp)
    if not opens:
        return LpSolution(Fraction(0), {_x(e): Fraction(0) for e in range(sp.n)})
    return solve_exact(cover_lp(sp, opens))


def lp_cover(sp: Spanoid) -> Fraction:
    """Fractional hitting number of the minimal nonempty open sets"""
    value = solve_cover(sp).value
    logger.info(f"LP cover of {sp.label}: {fmt_fraction(value)}")
    return value


@dataclass(frozen=True)
class CoverDual:
    value: Fraction
    weights: Dict[frozenset, Fraction]

    def masks(self) -> Dict[int, Fraction]:
        return {sum(1 << (i - 1) for i in s): w for s, w in self.weights.items()}


def lp_cover_dual(sp: Spanoid) -> CoverDual:
    """Optimal packing weights λ over the minimal open sets.

    Solved as its own program and required to match `lp_cover` exactly.
    """
    opens = minimal_open_masks(sp)
    if not opens:
        return CoverDual(Fraction(0), {})
    solution = solve_exact(cover_dual_lp(sp, opens))
    primal = solve_exact(cover_lp(sp, opens)).value
    if solution.value != primal:
        raise DomainViolation(f"cover LP of {sp.label}: primal {fmt_fraction(primal)} "
                              f"!= dual {fmt_fraction(solution.value)}")
    weights = {from_mask(m): solution.primal[f"l{_set_name(m)}"] for m in opens}
    return CoverDual(solution.value, {s: w for s, w in weights.items() if w})


class EntropyProfile:
    """A set function f on subsets of [n], keyed by bitmask"""

    def __init__(self, n: int, values: Dict[int, Fraction]):
        self.n = n
        self.values = dict(values)
        self.values.setdefault(0, Fraction(0))

    def __getitem__(self, subset) -> Fraction:
        mask = subset if isinstance(subset, int) else sum(1 << (i - 1) for i in subset)
        return self.values[mask]

    def check(self, sp: Spanoid) -> None:
        """Raise DomainViolation unless f is a normalized monotone submodular
        function that is constant along every derived inference of `sp`"""
        f = self.values
        full = (1 << self.n) - 1
        if f[0] != 0:
            raise DomainViolation("entropy profile: f(∅) != 0")
        for e in range(self.n):
            if f[1 << e] > 1:
                raise DomainViolation(f"entropy profile: f({{{e + 1}}}) > 1")
        for mask in range(full + 1):
            for i in range(self.n):
                bit = 1 << i
                if mask & bit:
                    continue
                if f[mask | bit] < f[mask]:
                    raise DomainViolation(f"entropy profile not monotone at {_set_name(mask)} + {i + 1}")
                for j in range(i + 1, self.n):
                    other = 1 << j
                    if mask & other:
                        continue
                    if f[mask | bit] + f[mask | other] < f[mask | bit | other] + f[mask]:
                        raise DomainViolation(f"entropy profile not submodular at {_set_name(mask)}, {i + 1}, {j + 1}")
            if f[sp.span_mask(mask)] != f[mask]:
                raise DomainViolation(f"entropy profile changes along span of {_set_name(mask)}")


@dataclass
class EntropyResult:
    value: Fraction
    profile: EntropyProfile
    mode: str


def _check_entropy_size(sp: Spanoid, mode: str) -> None:
    if mode not in (FULL, ELEMENTAL):
        raise ConstructionError(f"entropy mode must be 'full' or 'elemental', got {mode!r}")
    settings = get_settings()
    cap = settings.entropy_full_cap if mode == FULL else settings.entropy_elemental_cap
    if sp.n > cap:
        raise CapacityError(f"{mode} entropy LP needs 2^{sp.n} variables; cap is n <= {cap}")


def _shannon_rows(n: int, mode: str) -> Iterator[Tuple[List[int], List[int], str]]:
    """(plus masks, minus masks, name) of every '<= 0' row: the elemental
    inequalities, or all submodularity and monotonicity pairs"""
    full = (1 << n) - 1
    if mode == ELEMENTAL:
        for i in range(n):
            for j in range(i + 1, n):
                rest = full & ~(1 << i) & ~(1 << j)
                for k in _submasks(rest):
                    yield [k | 1 << i | 1 << j, k], [k | 1 << i, k | 1 << j], f"sub{i + 1},{j + 1}|{_set_name(k)}"
        for i in range(n):
            yield [full & ~(1 << i)], [full], f"mono{i + 1}"
    else:
        for a in range(1, full + 1):
            for b in range(a + 1, full + 1):
                if a & b in (a, b):
                    continue
                yield [a | b, a & b], [a, b], f"sub{_set_name(a)}{_set_name(b)}"
        for a in range(full + 1):
            for i in range(n):
                if not a >> i & 1:
                    yield [a], [a | 1 << i], f"mono{_set_name(a)}+{i + 1}"


def _combo(variable: Dict[int, str], plus: List[int], minus: List[int]) -> Dict[str, int]:
    """Signed sum of set variables; masks without a variable count as zero"""
    coefficients: Dict[str, int] = {}
    for sign, masks in ((1, plus), (-1, minus)):
        for m in masks:
            if m in variable:
                coefficients[variable[m]] = coefficients.get(variable[m], 0) + sign
    return {v: c for v, c in coefficients.items() if c}


def entropy_lp(sp: Spanoid, mode: str = ELEMENTAL) -> RationalLP:
    """max f([n]) over normalized monotone submodular f with f({i}) ≤ 1 and
    f(S ∪ {i}) = f(S) for each stored rule (S, i)"""
    _check_entropy_size(sp, mode)
    n = sp.n
    full = (1 << n) - 1
    lp = RationalLP(MAXIMIZE, name=f"entropy-{mode}[{sp.label}]")
    name = {mask: f"f{_set_name(mask)}" for mask in range(1, full + 1)}
    for mask in range(1, full + 1):
        lp.add_variable(name[mask])
    lp.set_objective({name[full]: 1})
    for e in range(n):
        lp.add_constraint({name[1 << e]: 1}, "<=", 1, name=f"unit{e + 1}")
    for plus, minus, row in _shannon_rows(n, mode):
        lp.add_constraint(_combo(name, plus, minus), "<=", 0, name=row)
    for premise, conclusion in sp.rule_masks:
        if premise >> conclusion & 1:
            continue
        lp.add_constraint(_combo(name, [premise | 1 << conclusion], [premise]), "=", 0,
                          name=f"rule{_set_name(premise)}->{conclusion + 1}")
    return lp


def _span_table(sp: Spanoid) -> List[int]:
    return [sp.span_mask(mask) for mask in range(sp.full + 1)]


def quotient_entropy_lp(sp: Spanoid, mode: str = ELEMENTAL) -> RationalLP:
    """The entropy LP over closed sets: one variable g(C) per closed C other
    than span(∅), with f(S) read as g(span S).

    Feasible f are constant along spans, so each row of the plain LP maps
    onto closed sets, the rule equalities vanish, and the optimum is the
    same. Rows that cancel out or repeat are dropped.
    """
    _check_entropy_size(sp, mode)
    closure = _span_table(sp)
    base = closure[0]
    if base == sp.full:
        raise DomainViolation(f"{sp.label} is spanned by the empty set; its entropy is 0")
    variable = {mask: f"f{_set_name(c)}" for mask, c in enumerate(closure) if c != base}
    lp = RationalLP(MAXIMIZE, name=f"entropy-{mode}-closed[{sp.label}]")
    for c in sorted(set(closure) - {base}):
        lp.add_variable(f"f{_set_name(c)}")
    lp.set_objective({variable[sp.full]: 1})
    seen = set()

    def add(coefficients: Dict[str, int], rhs: int, row: str) -> None:
        key = (frozenset(coefficients.items()), rhs)
        if coefficients and key not in seen:
            seen.add(key)
            lp.add_constraint(coefficients, "<=", rhs, name=row)

    for e in range(sp.n):
        add(_combo(variable, [1 << e], []), 1, f"unit{e + 1}")
    for plus, minus, row in _shannon_rows(sp.n, mode):
        add(_combo(variable, plus, minus), 0, row)
    logger.debug(f"Closed-set entropy LP for {sp.label}: {len(lp.variables)} variables, {len(lp.constraints)} rows")
    return lp


def _submasks(mask: int):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def _solve_entropy(sp: Spanoid, mode: str) -> EntropyResult:
    closure = _span_table(sp)
    base = closure[0]
    if base == sp.full:
        _check_entropy_size(sp, mode)
        value, primal = Fraction(0), {}
    else:
        solution = solve_exact(quotient_entropy_lp(sp, mode))
        value, primal = solution.value, solution.primal
    values = {mask: primal[f"f{_set_name(closure[mask])}"] if closure[mask] != base else Fraction(0)
              for mask in range(1, sp.full + 1)}
    logger.info(f"LP entropy ({mode}) of {sp.label}: {fmt_fraction(value)}")
    return EntropyResult(value, EntropyProfile(sp.n, values), mode)


def lp_entropy(sp: Spanoid, mode: str = ELEMENTAL) -> EntropyResult:
    """Entropy LP optimum and its terminal-vertex profile; mode 'both' solves
    both formulations and requires them to agree"""
    if mode == BOTH:
        elemental = _solve_entropy(sp, ELEMENTAL)
        full = _solve_entropy(sp, FULL)
        if elemental.value != full.value:
            raise DomainViolation(f"entropy LP of {sp.label}: elemental {fmt_fraction(elemental.value)} "
                                  f"!= full {fmt_fraction(full.value)}")
        return elemental
    return _solve_entropy(sp, mode)
