"""Exact rational linear programming.

Two-phase primal simplex over `fractions.Fraction` on a sparse tableau,
with Bland's rule for both entering and leaving choices. No floating point
is used anywhere in this module.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Tuple

from spanoid_lab.errors import ConstructionError, DomainViolation, InfeasibleError, UnboundedError

logger = logging.getLogger(__name__)

MAXIMIZE = "max"
MINIMIZE = "min"
RELATIONS = ("<=", ">=", "=")

ZERO = Fraction(0)


def fmt_fraction(value) -> str:
    """`p/q` in lowest terms, or `p` for integers"""
    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


@dataclass
class Constraint:
    coefficients: Dict[str, Fraction]
    relation: str
    rhs: Fraction
    name: str

    def lhs(self, values: Mapping[str, Fraction]) -> Fraction:
        return sum((c * values.get(v, ZERO) for v, c in self.coefficients.items()), ZERO)

    def holds(self, values: Mapping[str, Fraction]) -> bool:
        lhs = self.lhs(values)
        if self.relation == "<=":
            return lhs <= self.rhs
        if self.relation == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


class RationalLP:
    """A linear program with named variables and exact rational data"""

    def __init__(self, sense: str = MAXIMIZE, name: Optional[str] = None):
        if sense not in (MAXIMIZE, MINIMIZE):
            raise ConstructionError(f"LP sense must be 'max' or 'min', got {sense!r}")
        self.sense = sense
        self.name = name or "lp"
        self.variables: List[str] = []
        self.nonneg: Dict[str, bool] = {}
        self.objective: Dict[str, Fraction] = {}
        self.constraints: List[Constraint] = []

    def add_variable(self, name: str, nonneg: bool = True) -> str:
        if name in self.nonneg:
            raise ConstructionError(f"duplicate LP variable {name!r}")
        self.variables.append(name)
        self.nonneg[name] = nonneg
        return name

    def set_objective(self, coefficients: Mapping[str, object]) -> None:
        self.objective = {v: Fraction(c) for v, c in coefficients.items() if Fraction(c) != 0}
        self._check_known(self.objective, "objective")

    def add_constraint(self, coefficients: Mapping[str, object], relation: str, rhs, name: Optional[str] = None) -> Constraint:
        if relation not in RELATIONS:
            raise ConstructionError(f"unknown relation {relation!r}; expected one of {RELATIONS}")
        row = Constraint({v: Fraction(c) for v, c in coefficients.items() if Fraction(c) != 0}, relation,
                         Fraction(rhs), name or f"c{len(self.constraints)}")
        self._check_known(row.coefficients, row.name)
        self.constraints.append(row)
        return row

    def _check_known(self, coefficients, where: str) -> None:
        unknown = [v for v in coefficients if v not in self.nonneg]
        if unknown:
            raise ConstructionError(f"{where} uses undeclared variable {unknown[0]!r}")

    def objective_value(self, values: Mapping[str, Fraction]) -> Fraction:
        return sum((c * values.get(v, ZERO) for v, c in self.objective.items()), ZERO)

    def dump(self) -> str:
        """Human-readable rows with rational literals, in declaration order"""

        def terms(coefficients):
            parts = [f"{fmt_fraction(coefficients[v])} {v}" for v in self.variables if v in coefficients]
            return " + ".join(parts) if parts else "0"

        lines = [f"# {self.name}", f"{'maximize' if self.sense == MAXIMIZE else 'minimize'}: {terms(self.objective)}",
                 "subject to:"]
        for row in self.constraints:
            lines.append(f"  {row.name}: {terms(row.coefficients)} {row.relation} {fmt_fraction(row.rhs)}")
        free = [v for v in self.variables if not self.nonneg[v]]
        lines.append("bounds:")
        lines.append("  free: " + (" ".join(free) if free else "none"))
        return "\n".join(lines) + "\n"


@dataclass
class LpSolution:
    value: Fraction
    primal: Dict[str, Fraction]
    dual: Dict[str, Fraction] = field(default_factory=dict)
    pivots: int = 0
    dropped_rows: List[str] = field(default_factory=list)


class _Tableau:
    """Rows are sparse dicts column -> coefficient; each row has one basic column"""

    def __init__(self, n_columns: int):
        self.n_columns = n_columns
        self.rows: List[Dict[int, Fraction]] = []
        self.rhs: List[Fraction] = []
        self.basis: List[int] = []
        self.obj: Dict[int, Fraction] = {}
        self.obj_rhs = ZERO
        self.pivots = 0

    def pivot(self, r: int, col: int) -> None:
        row = self.rows[r]
        a = row[col]
        if a != 1:
            row = {j: v / a for j, v in row.items()}
            self.rows[r] = row
            self.rhs[r] /= a
        for i, other in enumerate(self.rows):
            if i != r:
                f = other.get(col)
                if f:
                    _axpy(other, row, -f)
                    self.rhs[i] -= f * self.rhs[r]
        f = self.obj.get(col)
        if f:
            _axpy(self.obj, row, -f)
            self.obj_rhs -= f * self.rhs[r]
        self.basis[r] = col
        self.pivots += 1

    def set_objective(self, costs: Mapping[int, Fraction]) -> None:
        """Install `maximize Σ costs[j] x_j` and price out the basic columns"""
        self.obj = {j: -c for j, c in costs.items() if c}
        self.obj_rhs = ZERO
        for r, b in enumerate(self.basis):
            f = self.obj.get(b)
            if f:
                _axpy(self.obj, self.rows[r], -f)
                self.obj_rhs -= f * self.rhs[r]

    def entering(self, forbidden) -> Optional[int]:
        candidates = [j for j, v in self.obj.items() if v < 0 and j not in forbidden]
        return min(candidates) if candidates else None

    def leaving(self, col: int) -> Optional[int]:
        best = None
        for r, row in enumerate(self.rows):
            a = row.get(col)
            if a is not None and a > 0:
                ratio = self.rhs[r] / a
                key = (ratio, self.basis[r])
                if best is None or key < best[0]:
                    best = (key, r)
        return None if best is None else best[1]

    def run(self, forbidden=frozenset()) -> Optional[int]:
        """Pivot to optimality; return the unbounded entering column if any"""
        while True:
            col = self.entering(forbidden)
            if col is None:
                return None
            r = self.leaving(col)
            if r is None:
                return col
            self.pivot(r, col)

    def values(self) -> Dict[int, Fraction]:
        return {b: self.rhs[r] for r, b in enumerate(self.basis)}


def _axpy(target: Dict[int, Fraction], source: Mapping[int, Fraction], f: Fraction) -> None:
    for j, v in source.items():
        new = target.get(j, ZERO) + f * v
        if new:
            target[j] = new
        else:
            target.pop(j, None)


def solve_exact(lp: RationalLP, check: bool = True) -> LpSolution:
    """Optimal value, primal point and row duals of `lp`.

    Duals follow the Lagrangian sign convention of the stated sense, so
    that Σ rhs·dual equals the optimum. With `check` the primal point,
    the dual point and strong duality are re-verified exactly.
    """
    # structural columns: nonneg variables get one, free variables two
    columns: List[Tuple[str, int]] = []
    for v in lp.variables:
        columns.append((v, 1))
        if not lp.nonneg[v]:
            columns.append((v, -1))
    col_of = {}
    for j, (v, sign) in enumerate(columns):
        col_of.setdefault(v, []).append((j, sign))
    n_struct = len(columns)

    sense_sign = 1 if lp.sense == MAXIMIZE else -1
    normalized = []
    seen = {}
    for index, row in enumerate(lp.constraints):
        coefficients = {}
        for v, c in row.coefficients.items():
            for j, sign in col_of[v]:
                coefficients[j] = c * sign
        flip = -1 if row.rhs < 0 else 1
        relation = row.relation
        if flip < 0:
            coefficients = {j: -c for j, c in coefficients.items()}
            relation = {"<=": ">=", ">=": "<=", "=": "="}[relation]
        key = (tuple(sorted(coefficients.items())), relation, row.rhs * flip)
        if key in seen:
            continue
        seen[key] = index
        normalized.append((index, coefficients, relation, row.rhs * flip, flip))

    tableau_rows = []
    identity_col = {}
    artificial = set()
    next_col = n_struct
    for index, coefficients, relation, rhs, flip in normalized:
        coefficients = dict(coefficients)
        if relation == "<=":
            coefficients[next_col] = Fraction(1)
            identity_col[index] = next_col
            basic = next_col
            next_col += 1
        else:
            if relation == ">=":
                coefficients[next_col] = Fraction(-1)
                next_col += 1
            coefficients[next_col] = Fraction(1)
            identity_col[index] = next_col
            artificial.add(next_col)
            basic = next_col
            next_col += 1
        tableau_rows.append((index, coefficients, rhs, basic))

    tab = _Tableau(next_col)
    row_index = []
    for index, coefficients, rhs, basic in tableau_rows:
        tab.rows.append(coefficients)
        tab.rhs.append(rhs)
        tab.basis.append(basic)
        row_index.append(index)
    flips = {index: flip for index, _, _, _, flip in normalized}
    names = [row.name for row in lp.constraints]

    if artificial:
        tab.set_objective({a: Fraction(-1) for a in artificial})
        tab.run()
        if tab.obj_rhs < 0:
            multipliers = []
            for index in range(len(lp.constraints)):
                col = identity_col.get(index)
                if col is None:
                    multipliers.append(ZERO)
                    continue
                y = tab.obj.get(col, ZERO) + (-1 if col in artificial else 0)
                multipliers.append(y * flips[index])
            rows = [names[i] for i, y in enumerate(multipliers) if y != 0]
            raise InfeasibleError(f"LP {lp.name} is infeasible (phase-one value {fmt_fraction(tab.obj_rhs)})",
                                  rows, multipliers)
        dropped = _drive_out_artificials(tab, artificial, row_index)
    else:
        dropped = []

    costs = {}
    for v, c in lp.objective.items():
        for j, sign in col_of[v]:
            costs[j] = sense_sign * c * sign
    tab.set_objective(costs)
    unbounded = tab.run(forbidden=artificial)
    if unbounded is not None:
        ray = _ray(tab, unbounded, columns, n_struct)
        raise UnboundedError(f"LP {lp.name} is unbounded along column {unbounded}", ray)

    basic_values = tab.values()
    primal = {v: ZERO for v in lp.variables}
    for j, (v, sign) in enumerate(columns):
        primal[v] += sign * basic_values.get(j, ZERO)
    value = lp.objective_value(primal)

    dual = {}
    for index, name in enumerate(names):
        col = identity_col.get(index)
        y = tab.obj.get(col, ZERO) if col is not None and index not in dropped else ZERO
        dual[name] = sense_sign * y * flips.get(index, 1)
    solution = LpSolution(value, primal, dual, tab.pivots, [names[i] for i in dropped])
    logger.debug(f"LP {lp.name}: optimum {fmt_fraction(value)} after {tab.pivots} pivots")
    if check:
        verify_solution(lp, solution)
    return solution


def _drive_out_artificials(tab: _Tableau, artificial, row_index: List[int]) -> List[int]:
    """Pivot zero-level artificials out of the basis; drop rows that are redundant"""
    dropped = []
    r = 0
    while r < len(tab.rows):
        if tab.basis[r] in artificial:
            candidates = [j for j, v in tab.rows[r].items() if j not in artificial and v != 0]
            if candidates:
                tab.pivot(r, min(candidates))
            else:
                dropped.append(row_index[r])
                logger.debug(f"Dropping redundant LP row {row_index[r]}")
                del tab.rows[r], tab.rhs[r], tab.basis[r], row_index[r]
                continue
        r += 1
    return dropped


def _ray(tab: _Tableau, col: int, columns, n_struct: int) -> Dict[str, Fraction]:
    direction = {col: Fraction(1)}
    for r, b in enumerate(tab.basis):
        a = tab.rows[r].get(col)
        if a:
            direction[b] = direction.get(b, ZERO) - a
    ray: Dict[str, Fraction] = {}
    for j, d in direction.items():
        if j < n_struct:
            v, sign = columns[j]
            ray[v] = ray.get(v, ZERO) + sign * d
    return {v: d for v, d in ray.items() if d}


def verify_solution(lp: RationalLP, solution: LpSolution) -> None:
    """Exact primal feasibility, dual feasibility and strong duality"""
    x = solution.primal
    for v in lp.variables:
        if lp.nonneg[v] and x[v] < 0:
            raise DomainViolation(f"LP {lp.name}: variable {v} = {fmt_fraction(x[v])} is negative")
    for row in lp.constraints:
        if not row.holds(x):
            raise DomainViolation(f"LP {lp.name}: primal point violates {row.name}")
    if lp.objective_value(x) != solution.value:
        raise DomainViolation(f"LP {lp.name}: reported value differs from c·x")

    y = solution.dual
    sense_sign = 1 if lp.sense == MAXIMIZE else -1
    for row in lp.constraints:
        signed = sense_sign * y[row.name]
        if (row.relation == "<=" and signed < 0) or (row.relation == ">=" and signed > 0):
            raise DomainViolation(f"LP {lp.name}: dual of {row.name} has the wrong sign")
    reduced = {v: ZERO for v in lp.variables}
    for row in lp.constraints:
        if y[row.name]:
            for v, c in row.coefficients.items():
                reduced[v] += c * y[row.name]
    for v in lp.variables:
        gap = sense_sign * (reduced[v] - lp.objective.get(v, ZERO))
        if (lp.nonneg[v] and gap < 0) or (not lp.nonneg[v] and gap != 0):
            raise DomainViolation(f"LP {lp.name}: dual constraint for {v} violated")
    dual_value = sum((row.rhs * y[row.name] for row in lp.constraints), ZERO)
    if dual_value != solution.value:
        raise DomainViolation(f"LP {lp.name}: strong duality fails "
                              f"({fmt_fraction(solution.value)} vs {fmt_fraction(dual_value)})")


def _solve_square(matrix: List[List[Fraction]], rhs: List[Fraction]) -> Optional[List[Fraction]]:
    n = len(matrix)
    a = [row[:] + [b] for row, b in zip(matrix, rhs)]
    for c in range(n):
        pivot = next((r for r in range(c, n) if a[r][c] != 0), None)
        if pivot is None:
            return None
        a[c], a[pivot] = a[pivot], a[c]
        p = a[c][c]
        a[c] = [v / p for v in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [v - f * w for v, w in zip(a[r], a[c])]
    return [a[r][n] for r in range(n)]


def brute_force_optimum(lp: RationalLP) -> Optional[Fraction]:
    """Optimum of a bounded LP in nonnegative variables by vertex enumeration.

    Returns None when no vertex is feasible. Exponential; meant as an
    oracle for small programs.
    """
    if not all(lp.nonneg.values()):
        raise ConstructionError("vertex enumeration needs nonnegative variables only")
    names = lp.variables
    k = len(names)
    hyperplanes = [([row.coefficients.get(v, ZERO) for v in names], row.rhs) for row in lp.constraints]
    for i in range(k):
        hyperplanes.append(([Fraction(int(i == j)) for j in range(k)], ZERO))
    best = None
    for chosen in combinations(hyperplanes, k):
        point = _solve_square([h[0] for h in chosen], [h[1] for h in chosen])
        if point is None:
            continue
        values = dict(zip(names, point))
        if any(p < 0 for p in point) or not all(row.holds(values) for row in lp.constraints):
            continue
        value = lp.objective_value(values)
        if best is None or (value > best if lp.sense == MAXIMIZE else value < best):
            best = value
    return best
