"""Locally correctable spanoids (q-LCS): validation, generators, spread
samplers, the random graph process and the spanning-set algorithms that
bound their rank from above."""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from spanoid_lab.errors import ConstructionError, DomainViolation, RetriesExhausted, ValidationError
from spanoid_lab.seeds import task_rng
from spanoid_lab.settings import get_settings
from spanoid_lab.spanoid import Spanoid, from_mask, to_mask

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


@dataclass
class LcsInstance:
    """A spanoid with, for each element i, disjoint q-subsets each spanning i"""

    spanoid: Spanoid
    q: int
    delta: Fraction
    matchings: Tuple[Tuple[frozenset, ...], ...]

    @property
    def n(self) -> int:
        return self.spanoid.n


def lcs_from_matchings(n: int, q: int, delta, matchings: Sequence[Sequence[Sequence[int]]],
                       name: Optional[str] = None) -> LcsInstance:
    """Instance whose rules are exactly (T, i) for T in matchings[i-1]"""
    if len(matchings) != n:
        raise ConstructionError(f"need one matching per element: got {len(matchings)} for n={n}")
    frozen = tuple(tuple(frozenset(t) for t in m) for m in matchings)
    rules = [(to_mask(t, n), i) for i, m in enumerate(frozen) for t in m]
    return LcsInstance(Spanoid(n, rules, name=name), q, Fraction(delta), frozen)


@dataclass(frozen=True)
class LcsViolation:
    element: int
    reason: str


def validate_lcs(inst: LcsInstance) -> Optional[LcsViolation]:
    """None when the instance is a q-LCS with its stated δ, else the first violation"""
    n = inst.n
    stored = set(inst.spanoid.rule_masks)
    if not 0 < inst.delta <= 1:
        return LcsViolation(0, f"delta {inst.delta} outside (0, 1]")
    for i, matching in enumerate(inst.matchings, start=1):
        if len(matching) < inst.delta * n:
            return LcsViolation(i, f"matching has {len(matching)} subsets, fewer than delta*n = {float(inst.delta * n):.3g}")
        used = set()
        for t in matching:
            if len(t) != inst.q:
                return LcsViolation(i, f"subset {sorted(t)} does not have {inst.q} elements")
            if i in t or any(not 1 <= e <= n for e in t):
                return LcsViolation(i, f"subset {sorted(t)} is not inside [n] minus {{{i}}}")
            if used & t:
                return LcsViolation(i, f"subset {sorted(t)} overlaps another subset of the matching")
            used |= t
            if (to_mask(t), i - 1) not in stored:
                return LcsViolation(i, f"({sorted(t)}, {i}) is not a rule of the spanoid")
    return None


def hadamard_spanoid(k: int) -> LcsInstance:
    """Columns are the nonzero k-bit vectors; any two span their XOR"""
    if not 2 <= k <= 20:
        raise ConstructionError(f"hadamard spanoid needs 2 <= k <= 20, got {k}")
    n = (1 << k) - 1
    matchings = []
    for i in range(1, n + 1):
        matchings.append([(a, a ^ i) for a in range(1, n + 1) if a != i and a < a ^ i])
    return lcs_from_matchings(n, 2, Fraction(n - 1, 2 * n), matchings, name=f"hadamard{k}")


def random_qlcs(n: int, q: int, seed: int = 0) -> LcsInstance:
    """Each element gets ⌊n/2q⌋ disjoint q-subsets of the other elements, uniformly at random"""
    if q < 3:
        raise ConstructionError(f"random q-LCS needs q >= 3, got {q}")
    if n < 2 * q:
        raise ConstructionError(f"random q-LCS needs n >= 2q, got n={n}, q={q}")
    size = n // (2 * q)
    rng = task_rng(seed)
    matchings = []
    for i in range(1, n + 1):
        others = np.array([e for e in range(1, n + 1) if e != i])
        picked = rng.permutation(others)[: size * q]
        matchings.append([tuple(int(e) for e in picked[b * q:(b + 1) * q]) for b in range(size)])
    return lcs_from_matchings(n, q, Fraction(size, n), matchings, name=f"qlcs(n={n},q={q},seed={seed})")


@dataclass
class Sample:
    """One draw of a spread sampler: edges (j, i) and what produced them"""

    edges: List[Edge]
    chosen: Tuple[int, ...] = ()
    reasons: Dict[Edge, frozenset] = field(default_factory=dict)
    discarded: bool = False


class SpreadSampler:
    """A distribution on simple directed graphs over vertices 0..n-1 with
    declared (alpha, beta): every vertex gets an in-edge with probability
    at least alpha and every edge appears with probability at most beta/n"""

    alpha: Fraction = Fraction(0)
    beta: Fraction = Fraction(0)

    def __init__(self, n: int):
        self.n = n

    def sample(self, rng: np.random.Generator) -> Sample:
        raise NotImplementedError

    def source_bound(self, t: int) -> float:
        """n(1 - α/4)^t + 2β/α, the source count reachable with positive probability"""
        if self.alpha == 0:
            return float(self.n)
        return self.n * (1 - float(self.alpha) / 4) ** t + 2 * float(self.beta) / float(self.alpha)

    def default_steps(self) -> int:
        """t = ⌈(4/α)·ln n⌉, the horizon of the source bound"""
        if self.alpha == 0 or self.n < 2:
            return 1
        return math.ceil(4 / float(self.alpha) * math.log(self.n))


class EmptySampler(SpreadSampler):
    def sample(self, rng):
        return Sample([])


class CompleteSampler(SpreadSampler):
    def __init__(self, n: int):
        super().__init__(n)
        self.alpha = Fraction(1) if n > 1 else Fraction(0)
        self.beta = Fraction(n)

    def sample(self, rng):
        return Sample([(j, i) for j in range(self.n) for i in range(self.n) if i != j])


class FixedSetsSampler(SpreadSampler):
    """Pick j uniformly; add (j, i) for every i with j ∈ S_i. (k/n, 1)-spread for |S_i| = k"""

    def __init__(self, sets: Sequence[Sequence[int]]):
        super().__init__(len(sets))
        self.sets = [frozenset(s) for s in sets]
        sizes = {len(s) for s in self.sets}
        if len(sizes) != 1 or any(i in s for i, s in enumerate(self.sets)):
            raise ConstructionError("fixed sets must share one size and avoid their own index")
        self.alpha = Fraction(sizes.pop(), self.n)
        self.beta = Fraction(1)
        self._targets = [[i for i, s in enumerate(self.sets) if j in s] for j in range(self.n)]

    @classmethod
    def cyclic(cls, n: int, k: int) -> "FixedSetsSampler":
        """S_i = {i+1, ..., i+k} mod n"""
        if not 0 < k < n:
            raise ConstructionError(f"fixed-sets sampler needs 0 < k < n, got k={k}, n={n}")
        return cls([[(i + d) % n for d in range(1, k + 1)] for i in range(n)])

    def sample(self, rng):
        j = int(rng.integers(self.n))
        return Sample([(j, i) for i in self._targets[j]], (j,))


class TwoLcsSampler(SpreadSampler):
    """Pick ℓ uniformly; add j -> i whenever {j, ℓ} is in the matching of i. (2δ, 1)-spread"""

    def __init__(self, inst: LcsInstance):
        super().__init__(inst.n)
        if inst.q != 2:
            raise ValidationError(f"2-LCS sampler needs q = 2, got q = {inst.q}")
        self.alpha = 2 * inst.delta
        self.beta = Fraction(1)
        self._partner: List[Dict[int, int]] = []
        for matching in inst.matchings:
            partner = {}
            for pair in matching:
                a, b = sorted(pair)
                partner[a - 1] = b - 1
                partner[b - 1] = a - 1
            self._partner.append(partner)

    def sample(self, rng):
        ell = int(rng.integers(self.n))
        edges = []
        reasons = {}
        for i, partner in enumerate(self._partner):
            j = partner.get(ell)
            if j is not None:
                edges.append((j, i))
                reasons[(j, i)] = frozenset({j + 1, ell + 1})
        return Sample(edges, (ell,), reasons)


class QLcsSampler(SpreadSampler):
    """Keep each element in J with probability (δn)^(-1/(q-1)); oversized J gives
    the empty graph. Otherwise each i whose matching has a q-subset with its
    first q-1 elements inside J gets the edge (last element -> i) for one
    such subset chosen uniformly. (1/4, 1/δ)-spread"""

    def __init__(self, inst: LcsInstance):
        super().__init__(inst.n)
        if inst.q < 3:
            raise ValidationError(f"q-LCS sampler needs q >= 3, got q = {inst.q}")
        settings = get_settings()
        n, q, delta = inst.n, inst.q, float(inst.delta)
        self.q = q
        self.alpha = settings.qlcs_alpha
        self.beta = 1 / inst.delta
        self.probability = min(1.0, (delta * n) ** (-1 / (q - 1)))
        self.size_limit = settings.qlcs_size_factor * delta ** (-1 / (q - 1)) * n ** ((q - 2) / (q - 1))
        self._subsets = [[(sorted(e - 1 for e in t)) for t in m] for m in inst.matchings]

    def sample(self, rng):
        picked = np.flatnonzero(rng.random(self.n) < self.probability)
        chosen = tuple(int(j) for j in picked)
        if len(chosen) >= self.size_limit:
            return Sample([], chosen, discarded=True)
        inside = set(chosen)
        edges = []
        reasons = {}
        for i, subsets in enumerate(self._subsets):
            hits = [t for t in subsets if all(e in inside for e in t[:-1])]
            if hits:
                t = hits[int(rng.integers(len(hits)))] if len(hits) > 1 else hits[0]
                edges.append((t[-1], i))
                reasons[(t[-1], i)] = frozenset(e + 1 for e in t)
        return Sample(edges, chosen, reasons)


def count_sources(graph: nx.DiGraph) -> int:
    """Strongly connected components with no edge coming in from outside"""
    condensed = nx.condensation(graph)
    return sum(1 for c in condensed if condensed.in_degree(c) == 0)


def source_representatives(graph: nx.DiGraph) -> List[int]:
    """Smallest vertex of each source component"""
    condensed = nx.condensation(graph)
    return sorted(min(condensed.nodes[c]["members"]) for c in condensed if condensed.in_degree(c) == 0)


def _empty_graph(n: int) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(range(n))
    return graph


def graph_process_run(sampler: SpreadSampler, t_max: int, seed: int = 0) -> List[int]:
    """Source counts of G_1..G_t where G_t = G_{t-1} ∪ (a fresh sample)"""
    if t_max < 1:
        raise ConstructionError(f"t_max must be at least 1, got {t_max}")
    rng = task_rng(seed)
    graph = _empty_graph(sampler.n)
    counts = []
    for _ in range(t_max):
        graph.add_edges_from(sampler.sample(rng).edges)
        counts.append(count_sources(graph))
    return counts


@dataclass
class AuditReport:
    samples: int
    min_in_frequency: float
    max_edge_frequency: float
    alpha_floor: float
    beta_ceiling: float

    @property
    def passed(self) -> bool:
        return self.min_in_frequency >= self.alpha_floor and self.max_edge_frequency <= self.beta_ceiling


def audit_sampler(sampler: SpreadSampler, samples: Optional[int] = None, seed: int = 0,
                  sigmas: Optional[int] = None) -> AuditReport:
    """Monte-carlo check of the declared (alpha, beta) with binomial slack.

    The slack is `sigmas` standard deviations for a single frequency,
    widened to sqrt(sigmas² + 2 ln m) when the minimum or maximum of m
    frequencies is tested, so the family-wise false-alarm rate stays at
    the single-test level.
    """
    settings = get_settings()
    samples = samples or settings.audit_samples
    sigmas = sigmas or settings.audit_sigmas
    rng = task_rng(seed)
    n = sampler.n
    incoming = np.zeros(n, dtype=np.int64)
    edge_counts = np.zeros((n, n), dtype=np.int64)
    for _ in range(samples):
        edges = sampler.sample(rng).edges
        if edges:
            js, is_ = np.array(edges).T
            edge_counts[js, is_] += 1
            incoming[np.unique(is_)] += 1
    alpha = float(sampler.alpha)
    p_edge = min(float(sampler.beta) / n, 1.0)
    vertex_z = math.sqrt(sigmas ** 2 + 2 * math.log(max(n, 1)))
    edge_z = math.sqrt(sigmas ** 2 + 2 * math.log(max(n * (n - 1), 1)))
    alpha_floor = alpha - vertex_z * math.sqrt(alpha * (1 - alpha) / samples)
    beta_ceiling = p_edge + edge_z * math.sqrt(p_edge * (1 - p_edge) / samples)
    report = AuditReport(samples, float(incoming.min()) / samples, float(edge_counts.max()) / samples,
                         alpha_floor, beta_ceiling)
    logger.info(f"Audit of {type(sampler).__name__}: min in-frequency {report.min_in_frequency:.4f} "
                f"(floor {alpha_floor:.4f}), max edge frequency {report.max_edge_frequency:.4f} "
                f"(ceiling {beta_ceiling:.4f})")
    return report


@dataclass
class StepRecord:
    step: int
    chosen: Tuple[int, ...]
    fired: List[Tuple[int, int, frozenset]]


@dataclass
class SpanningRun:
    """A verified spanning set with the process that produced it (1-based labels)"""

    elements: frozenset
    steps: int
    sources: int
    attempts: int
    source_bound: float
    transcript: List[StepRecord]

    @property
    def size(self) -> int:
        return len(self.elements)


def _spanning_set(inst: LcsInstance, sampler: SpreadSampler, steps: int, seed: int, retries: int) -> SpanningRun:
    n = inst.n
    label = inst.spanoid.label
    bound = sampler.source_bound(steps)
    last = None
    for attempt in range(1, retries + 1):
        rng = task_rng(seed, attempt)
        graph = _empty_graph(n)
        chosen = set()
        transcript = []
        for step in range(1, steps + 1):
            sample = sampler.sample(rng)
            if not sample.discarded:
                chosen.update(sample.chosen)
            graph.add_edges_from(sample.edges)
            fired = [(j + 1, i + 1, sample.reasons.get((j, i), frozenset())) for j, i in sample.edges]
            transcript.append(StepRecord(step, tuple(c + 1 for c in sample.chosen), fired))
        representatives = source_representatives(graph)
        elements = chosen | set(representatives)
        mask = sum(1 << e for e in elements)
        run = SpanningRun(from_mask(mask), steps, len(representatives), attempt, bound, transcript)
        if inst.spanoid.span_mask(mask) != inst.spanoid.full:
            logger.warning(f"Attempt {attempt} on {label} did not span; retrying")
            last = run
            continue
        if run.sources > bound:
            logger.warning(f"Run on {label} kept {run.sources} sources, above the bound {bound:.3g}")
        logger.info(f"Spanning set of size {run.size} for {label} "
                    f"({steps} steps, {run.sources} sources, attempt {attempt})")
        return run
    raise RetriesExhausted(f"no run on {label} produced a spanning set in {retries} attempts",
                           transcript=last.transcript if last else [])


def two_lcs_steps(inst: LcsInstance) -> int:
    """t = ⌈(c/δ)·ln n⌉ with c = two_lcs_step_factor"""
    return max(1, math.ceil(get_settings().two_lcs_step_factor / float(inst.delta) * math.log(inst.n)))


def qlcs_steps(inst: LcsInstance) -> int:
    """t = ⌈(4/α)·ln n⌉ for the q-LCS sampler's α"""
    return max(1, math.ceil(4 / float(get_settings().qlcs_alpha) * math.log(inst.n)))


def qlcs_size_bound(inst: LcsInstance) -> float:
    """δ^(-1/(q-1)) · n^((q-2)/(q-1)) · log2 n, the growth rate of the q-LCS spanning set"""
    q, n, delta = inst.q, inst.n, float(inst.delta)
    return delta ** (-1 / (q - 1)) * n ** ((q - 2) / (q - 1)) * math.log2(n)


def _require_valid(inst: LcsInstance) -> None:
    violation = validate_lcs(inst)
    if violation is not None:
        raise ValidationError(f"not a valid {inst.q}-LCS: element {violation.element}: {violation.reason}",
                              witness=violation)


def spanning_set_2lcs(inst: LcsInstance, seed: int = 0, retries: Optional[int] = None) -> SpanningRun:
    """Sampled pivots ℓ_1..ℓ_t plus one vertex from each source of the union graph"""
    if inst.q != 2:
        raise ValidationError(f"spanning_set_2lcs needs q = 2, got q = {inst.q}")
    _require_valid(inst)
    retries = retries or get_settings().lcs_retries
    return _spanning_set(inst, TwoLcsSampler(inst), two_lcs_steps(inst), seed, retries)


def spanning_set_qlcs(inst: LcsInstance, seed: int = 0, retries: Optional[int] = None) -> SpanningRun:
    """Union of the accepted random sets J plus one vertex from each remaining source"""
    if inst.q < 3:
        raise ValidationError(f"spanning_set_qlcs needs q >= 3, got q = {inst.q}")
    _require_valid(inst)
    retries = retries or get_settings().lcs_retries
    return _spanning_set(inst, QLcsSampler(inst), qlcs_steps(inst), seed, retries)


def check_transcript(inst: LcsInstance, run: SpanningRun) -> None:
    """Every fired edge j -> i comes from a q-subset T of M_i inside the step's choice plus j"""
    matchings = inst.matchings
    for record in run.transcript:
        chosen = set(record.chosen)
        for j, i, subset in record.fired:
            if subset not in matchings[i - 1] or not subset <= chosen | {j}:
                raise DomainViolation(f"step {record.step}: edge {j} -> {i} has no supporting subset")
