"""Seeded experiment drivers: random corpora, bound sandwiches, gap
amplification and the CSV rows of the randomized LCS runs."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, TypeVar, Union

import numpy as np

from spanoid_lab.codes import (
    Code,
    check_consistent,
    code_dimension,
    code_from_union_representation,
    tensor_union_representation,
)
from spanoid_lab.errors import DomainViolation
from spanoid_lab.lcs import (
    FixedSetsSampler,
    LcsInstance,
    graph_process_run,
    spanning_set_2lcs,
    spanning_set_qlcs,
)
from spanoid_lab.lp import MAXIMIZE, RationalLP, fmt_fraction
from spanoid_lab.products import semidirect_power
from spanoid_lab.rank import rank, rank_log_bound
from spanoid_lab.relaxations import lp_cover, lp_entropy
from spanoid_lab.seeds import task_rng
from spanoid_lab.spanoid import Spanoid, pentagon, pentagon_union_representation

logger = logging.getLogger(__name__)

R = TypeVar("R")


def fan_out(fn: Callable[..., R], tasks: Sequence, workers: int = 1) -> List[R]:
    """Apply fn to every task; results come back in task order whatever the schedule"""
    if workers <= 1:
        return [fn(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def random_spanoid(n: int, rng: np.random.Generator, max_rules: Optional[int] = None) -> Spanoid:
    """Up to 2n random rules, premises of 1 to 3 elements not containing the conclusion"""
    max_rules = 2 * n if max_rules is None else max_rules
    rules = []
    for _ in range(int(rng.integers(0, max_rules + 1))):
        conclusion = int(rng.integers(n))
        others = [e for e in range(n) if e != conclusion]
        if not others:
            continue
        size = int(rng.integers(1, min(3, len(others)) + 1))
        premise = rng.choice(others, size=size, replace=False)
        rules.append((sum(1 << int(e) for e in premise), conclusion))
    return Spanoid(n, rules, name=f"random(n={n})")


def spanoid_corpus(size: int, seed: int = 0, max_n: int = 6) -> List[Spanoid]:
    """`size` random spanoids with 1 <= n <= max_n; the k-th depends only on (seed, k)"""
    corpus = []
    for k in range(size):
        rng = task_rng(seed, k)
        corpus.append(random_spanoid(int(rng.integers(1, max_n + 1)), rng))
    return corpus


def random_small_lp(rng: np.random.Generator, variables: int = 5, rows: int = 6) -> RationalLP:
    """A bounded maximization in nonnegative variables with integer data"""
    lp = RationalLP(MAXIMIZE, name="random")
    names = [lp.add_variable(f"x{j + 1}") for j in range(variables)]
    lp.set_objective({v: int(rng.integers(-2, 6)) for v in names})
    for r in range(rows):
        coefficients = {v: int(rng.integers(-2, 5)) for v in names}
        relation = "<=" if r < rows - 1 else (">=" if rng.integers(2) else "=")
        rhs = int(rng.integers(1, 12)) if relation == "<=" else int(rng.integers(0, 4))
        lp.add_constraint(coefficients, relation, rhs)
    for v in names:
        lp.add_constraint({v: 1}, "<=", int(rng.integers(1, 8)), name=f"box-{v}")
    return lp


@dataclass
class SandwichRow:
    label: str
    n: int
    cover: Fraction
    entropy: Fraction
    rank: int
    closed_count: int

    @property
    def holds(self) -> bool:
        return self.cover <= self.entropy <= self.rank and (1 << self.rank) <= self.closed_count


def sandwich(sp: Spanoid) -> SandwichRow:
    """LP cover, LP entropy, rank and the closed-set count of one spanoid"""
    return SandwichRow(sp.label, sp.n, lp_cover(sp), lp_entropy(sp).value, rank(sp).rank,
                       rank_log_bound(sp).closed_count)


@dataclass
class GapRow:
    k: int
    rank: int
    rank_exact: bool
    code: Code
    dimension: Union[Fraction, float]

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.rank) / Fraction(self.dimension)

    def line(self) -> str:
        how = "search" if self.rank_exact else "product"
        return (f"k={self.k} rank={self.rank} ({how}) code-dimension={fmt_fraction(self.dimension)} "
                f"ratio={fmt_fraction(self.ratio)}")


def pentagon_power_code(k: int) -> Code:
    """Code of the k-fold tensor of the pentagon union representation: 5^k bits, symbols of 2^k bits"""
    rep = pentagon_union_representation()
    for _ in range(k - 1):
        rep = tensor_union_representation(rep, pentagon_union_representation())
    return code_from_union_representation(rep, 1 << k)


def gap_amplification(k: int, exact_up_to: int = 2) -> GapRow:
    """Rank of the k-th semidirect power of the pentagon against the dimension of a
    consistent code for it. Rank is searched exactly up to `exact_up_to` and taken
    as rank(pentagon)^k beyond, where rank is multiplicative under the product."""
    power = semidirect_power(pentagon(), k)
    code = pentagon_power_code(k)
    violation = check_consistent(power, code)
    if violation is not None:
        raise DomainViolation(f"pentagon power code is inconsistent: {violation.describe()}")
    if k <= exact_up_to:
        value, exact = rank(power).rank, True
    else:
        value, exact = rank(pentagon()).rank ** k, False
    row = GapRow(k, value, exact, code, code_dimension(code))
    logger.info(f"Gap amplification {row.line()}")
    return row


@dataclass
class SpanningRow:
    n: int
    q: int
    delta: Fraction
    seed: int
    set_size: int
    verified: bool

    def csv(self) -> str:
        return f"{self.n},{self.q},{fmt_fraction(self.delta)},{self.seed},{self.set_size},{str(self.verified).lower()}"


SPANNING_HEADER = "n,q,delta,seed,set_size,verified"
PROCESS_HEADER = "step,sources"


def spanning_row(inst: LcsInstance, seed: int, retries: Optional[int] = None) -> SpanningRow:
    """One seeded spanning-set run, re-verified against the spanoid"""
    run = (spanning_set_2lcs if inst.q == 2 else spanning_set_qlcs)(inst, seed, retries)
    mask = sum(1 << (e - 1) for e in run.elements)
    verified = inst.spanoid.span_mask(mask) == inst.spanoid.full
    return SpanningRow(inst.n, inst.q, inst.delta, seed, run.size, verified)


def spanning_rows(inst: LcsInstance, seeds: Sequence[int], workers: int = 1) -> List[SpanningRow]:
    return fan_out(lambda s: spanning_row(inst, s), seeds, workers)


def process_rows(counts: Sequence[int]) -> List[str]:
    return [f"{step},{count}" for step, count in enumerate(counts, start=1)]


@dataclass
class ProcessTrial:
    seed: int
    counts: List[int]
    bound: float

    @property
    def met(self) -> bool:
        return self.counts[-1] <= self.bound


def fixed_sets_trials(n: int, k: int, t: int, seeds: Sequence[int], workers: int = 1) -> List[ProcessTrial]:
    """Graph process of the cyclic fixed-sets sampler, one trial per seed"""
    sampler = FixedSetsSampler.cyclic(n, k)
    bound = sampler.source_bound(t)

    def trial(seed: int) -> ProcessTrial:
        return ProcessTrial(seed, graph_process_run(sampler, t, seed), bound)

    return fan_out(trial, seeds, workers)
