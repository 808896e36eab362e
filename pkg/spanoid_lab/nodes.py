"""Acceptance criteria as workflow nodes.

Every node returns a partial state update holding one CriterionResult.
An exception inside a check is recorded as a failed criterion.
"""
import logging
import math
import time
from fractions import Fraction
from typing import Any, Callable, Dict, List

from spanoid_lab.codes import check_consistent, code_dimension, max_consistent_code, pentagon_code
from spanoid_lab.errors import InfeasibleError
from spanoid_lab.experiments import (
    fan_out,
    fixed_sets_trials,
    gap_amplification,
    random_small_lp,
    random_spanoid,
    sandwich,
    spanning_rows,
    spanoid_corpus,
)
from spanoid_lab.lcs import FixedSetsSampler, TwoLcsSampler, audit_sampler, hadamard_spanoid, random_qlcs
from spanoid_lab.lp import brute_force_optimum, fmt_fraction, solve_exact
from spanoid_lab.products import product_dot, product_semidirect, product_tensor, open_family_inclusions
from spanoid_lab.rank import DIRECT_SEARCH, HITTING_SET, rank
from spanoid_lab.relaxations import ELEMENTAL, FULL, lp_cover, lp_entropy
from spanoid_lab.seeds import task_rng, task_seed
from spanoid_lab.spanoid import Spanoid, closed_sets, from_closed_family, pentagon, xu_spanoid
from spanoid_lab.state import CriterionResult, ReproState

logger = logging.getLogger(__name__)

TITLES = {
    1: "pentagon goldens",
    2: "sandwich on random corpus",
    3: "product suite",
    4: "gap amplification",
    5: "LCS spanning-set algorithms",
    6: "graph process and sampler audits",
    7: "oracle equivalences",
}

# Stated wall-clock targets in seconds; exceeding one is logged, not failed
TIME_LIMITS = {1: 10, 2: 120, 3: 300, 4: 300, 5: 180, 6: 60, 7: 300}

# The full Shannon program is compared with the elemental one on this many corpus spanoids
FULL_MODE_SAMPLE = 50
LARGE_SPAN_SIZES = (7, 8, 9, 10)


class Checks:
    """Collects named expectations and their outcomes"""

    def __init__(self):
        self.lines: List[str] = []
        self.passed = True

    def expect(self, ok: bool, description: str) -> bool:
        self.lines.append(f"{'ok  ' if ok else 'FAIL'} {description}")
        self.passed = self.passed and bool(ok)
        return ok


def _run_criterion(number: int, state: ReproState, check: Callable[[ReproState, Checks], None]) -> Dict[str, Any]:
    title = TITLES[number]
    logger.info(f"Criterion {number}: {title}")
    checks = Checks()
    started = time.perf_counter()
    try:
        check(state, checks)
    except Exception as e:
        logger.error(f"Criterion {number} raised {type(e).__name__}: {e}")
        checks.expect(False, f"raised {type(e).__name__}: {e}")
    seconds = time.perf_counter() - started
    if seconds > TIME_LIMITS[number]:
        logger.warning(f"Criterion {number} took {seconds:.1f}s, over its {TIME_LIMITS[number]}s target")
    logger.info(f"Criterion {number} {'passed' if checks.passed else 'FAILED'} in {seconds:.1f}s")
    result = CriterionResult(number, title, checks.passed, checks.lines, seconds)
    return {"results": [result], "current_step": f"criterion_{number}"}


def _pentagon_goldens(state: ReproState, checks: Checks) -> None:
    sp = pentagon()
    half = Fraction(5, 2)
    checks.expect(rank(sp).rank == 3, "rank(pentagon) = 3")
    checks.expect(lp_cover(sp) == half, "lp_cover(pentagon) = 5/2")
    for mode in (ELEMENTAL, FULL):
        value = lp_entropy(sp, mode).value
        checks.expect(value == half, f"lp_entropy(pentagon, {mode}) = {fmt_fraction(value)}")
    code = pentagon_code()
    checks.expect(len(code) == 32 and code.s == 4, f"pentagon code has {len(code)} words over alphabet {code.s}")
    checks.expect(check_consistent(sp, code) is None, "pentagon code is consistent")
    checks.expect(code_dimension(code) == half, f"pentagon code dimension {fmt_fraction(code_dimension(code))}")
    best = max_consistent_code(sp, 4)
    checks.expect(len(best) == 32, f"max_consistent_code(pentagon, 4) has {len(best)} words")


def _sandwich_corpus(state: ReproState, checks: Checks) -> None:
    corpus = spanoid_corpus(state["corpus_size"], task_seed(state["seed"], 2))
    rows = fan_out(sandwich, corpus, state["workers"])
    broken = [row for row in rows if not row.holds]
    for row in broken[:5]:
        checks.lines.append(f"     {row.label} n={row.n}: cover={fmt_fraction(row.cover)} "
                            f"entropy={fmt_fraction(row.entropy)} rank={row.rank} closed={row.closed_count}")
    checks.expect(not broken, f"lp_cover <= lp_entropy <= rank <= log2|closed| on {len(rows)} spanoids "
                              f"({len(broken)} failures)")


def _product_suite(state: ReproState, checks: Checks) -> None:
    p5 = pentagon()
    semidirect = product_semidirect(p5, p5)
    checks.expect(rank(semidirect.base).rank == 9, "rank(pentagon semidirect pentagon) = 9")

    tensor = product_tensor(p5, p5)
    generators = tensor.flatten([(1, 1), (1, 2), (2, 1), (2, 2), (3, 3), (3, 4), (4, 3), (5, 5)])
    checks.expect(tensor.base.span_mask(_mask(generators)) == tensor.base.full,
                  "8-element set spans pentagon tensor pentagon")
    tensor_rank = rank(tensor.base).rank
    checks.expect(7 <= tensor_rank <= 8, f"rank(pentagon tensor pentagon) = {tensor_rank}, within [7, 8]")

    xu = xu_spanoid()
    checks.expect(rank(xu).rank == 2, "rank(xu) = 2")
    xu_tensor = product_tensor(xu, xu)
    witness = xu_tensor.flatten([(1, 1), (2, 3), (3, 2)])
    checks.expect(xu_tensor.base.span_mask(_mask(witness)) == xu_tensor.base.full,
                  "{(1,1),(2,3),(3,2)} spans xu tensor xu")

    dot_cover = lp_cover(product_dot(p5, p5).base)
    checks.expect(dot_cover == Fraction(25, 4), f"lp_cover(pentagon dot pentagon) = {fmt_fraction(dot_cover)}")
    inclusions = open_family_inclusions(xu, xu)
    checks.expect(all(inclusions.values()), f"open-family inclusions on (xu, xu): {inclusions}")


def _gap_amplification(state: ReproState, checks: Checks) -> None:
    for k in (2, 3):
        row = gap_amplification(k)
        checks.expect(row.rank == 3 ** k, f"k={k}: rank {row.rank} = 3^{k}")
        checks.expect(row.dimension >= Fraction(5, 2) ** k,
                      f"k={k}: code dimension {fmt_fraction(row.dimension)} >= (5/2)^{k}")
        checks.expect(row.ratio >= Fraction(6, 5) ** k, f"k={k}: ratio {fmt_fraction(row.ratio)} >= (6/5)^{k}")


def _lcs_algorithms(state: ReproState, checks: Checks) -> None:
    seed, workers = state["seed"], state["workers"]
    for k in range(3, 7):
        inst = hadamard_spanoid(k)
        limit = 40 / float(inst.delta) * math.log2(inst.n)
        rows = spanning_rows(inst, [task_seed(seed, 5, k, s) for s in range(3)], workers)
        checks.expect(all(r.verified for r in rows) and max(r.set_size for r in rows) <= limit,
                      f"hadamard k={k}: sizes {[r.set_size for r in rows]} verified, limit {limit:.0f}")
    for n in (100, 200, 300):
        inst = random_qlcs(n, 3, task_seed(seed, 5, n))
        rows = spanning_rows(inst, [task_seed(seed, 5, n, s) for s in range(10)], workers)
        worst = max(r.set_size / (math.sqrt(n) * math.log2(n)) for r in rows)
        checks.expect(all(r.verified for r in rows) and worst <= 16,
                      f"random 3-LCS n={n}: 10 seeds verified, max size/(sqrt(n) log2 n) = {worst:.2f}")


def _graph_process(state: ReproState, checks: Checks) -> None:
    n, k = 50, 10
    sampler = FixedSetsSampler.cyclic(n, k)
    t = sampler.default_steps()
    trials = fixed_sets_trials(n, k, t, [task_seed(state["seed"], 6, s) for s in range(100)], state["workers"])
    best = min(trial.counts[-1] for trial in trials)
    checks.expect(any(trial.met for trial in trials),
                  f"fixed-sets n={n} k={k} t={t}: best source count {best} vs bound {sampler.source_bound(t):.2f}")
    checks.expect(all(a >= b for trial in trials for a, b in zip(trial.counts, trial.counts[1:])),
                  "source counts never increase")
    audits = (("fixed-sets", sampler), ("2-LCS hadamard k=4", TwoLcsSampler(hadamard_spanoid(4))))
    for index, (name, audited) in enumerate(audits):
        report = audit_sampler(audited, seed=task_seed(state["seed"], 6, 100 + index))
        checks.expect(report.passed, f"{name} audit: min in-frequency {report.min_in_frequency:.4f} "
                                     f">= {report.alpha_floor:.4f}, max edge frequency "
                                     f"{report.max_edge_frequency:.4f} <= {report.beta_ceiling:.4f}")


def keeps_span(sp: Spanoid) -> bool:
    """Rebuilding from the closed sets gives the same span on every subset"""
    rebuilt = from_closed_family(closed_sets(sp))
    return all(rebuilt.span_mask(m) == sp.span_mask(m) for m in range(sp.full + 1))


def _oracles(state: ReproState, checks: Checks) -> None:
    corpus = spanoid_corpus(min(state["corpus_size"], 200), task_seed(state["seed"], 7))

    def agree(task) -> List[bool]:
        index, sp = task
        entropy_ok = (index >= FULL_MODE_SAMPLE or sp.n > 6
                      or lp_entropy(sp, FULL).value == lp_entropy(sp, ELEMENTAL).value)
        rank_ok = rank(sp, HITTING_SET).rank == rank(sp, DIRECT_SEARCH).rank
        return [rank_ok, entropy_ok, keeps_span(sp)]

    outcomes = fan_out(agree, list(enumerate(corpus)), state["workers"])
    sizes = [len(corpus), min(len(corpus), FULL_MODE_SAMPLE), len(corpus)]
    for column, what in enumerate(("hitting-set rank = direct-search rank",
                                   "entropy full mode = elemental mode",
                                   "from_closed_family(closed_sets) keeps the span")):
        misses = sum(1 for row in outcomes if not row[column])
        checks.expect(misses == 0, f"{what} on {sizes[column]} spanoids ({misses} mismatches)")

    large = [random_spanoid(n, task_rng(state["seed"], 7, 1000 + n)) for n in LARGE_SPAN_SIZES]
    kept = fan_out(keeps_span, large, state["workers"])
    checks.expect(all(kept), f"from_closed_family(closed_sets) keeps the span for n = "
                             f"{LARGE_SPAN_SIZES[0]}..{LARGE_SPAN_SIZES[-1]} ({kept.count(False)} mismatches)")

    mismatches = 0
    for index in range(100):
        lp = random_small_lp(task_rng(state["seed"], 7, index))
        try:
            value = solve_exact(lp).value
        except InfeasibleError:
            value = None
        mismatches += value != brute_force_optimum(lp)
    checks.expect(mismatches == 0, f"simplex = vertex enumeration on 100 random LPs ({mismatches} mismatches)")


def _mask(elements) -> int:
    return sum(1 << (e - 1) for e in elements)


def plan_node(state: ReproState) -> Dict[str, Any]:
    """Keep known criteria, ascending and without repeats"""
    selected = sorted({c for c in state.get("selected") or TITLES if c in TITLES})
    logger.info(f"Running criteria {selected}")
    return {"selected": selected, "current_step": "plan"}


def criterion_1_node(state: ReproState) -> Dict[str, Any]:
    return _run_criterion(1, state, _pentagon_goldens)


def criterion_2_node(state: ReproState) -> Dict[str, Any]:
    return _run_criterion(2, state, _sandwich_corpus)


def criterion_3_node(state: ReproState) -> Dict[str, Any]:
    return _run_criterion(3, state, _product_suite)


def criterion_4_node(state: ReproState) -> Dict[str, Any]:
    return _run_criterion(4, state, _gap_amplification)


def criterion_5_node(state: ReproState) -> Dict[str, Any]:
    return _run_criterion(5, state, _lcs_algorithms)


def criterion_6_node(state: ReproState) -> Dict[str, Any]:
    return _run_criterion(6, state, _graph_process)


def criterion_7_node(state: ReproState) -> Dict[str, Any]:
    return _run_criterion(7, state, _oracles)


CRITERION_NODES = {
    1: criterion_1_node,
    2: criterion_2_node,
    3: criterion_3_node,
    4: criterion_4_node,
    5: criterion_5_node,
    6: criterion_6_node,
    7: criterion_7_node,
}


def format_report(results: List[CriterionResult], verbose: bool = True) -> str:
    """Pass/fail table in criterion order; timings stay out so reruns print the same bytes"""
    lines = ["criterion  result  title"]
    for result in sorted(results, key=lambda r: r.criterion):
        lines.append(f"{result.criterion:<10} {'PASS' if result.passed else 'FAIL':<7} {result.title}")
        if verbose or not result.passed:
            lines.extend(f"    {detail}" for detail in result.details)
    passed = sum(1 for r in results if r.passed)
    lines.append(f"{passed}/{len(results)} criteria passed")
    return "\n".join(lines) + "\n"


def report_node(state: ReproState) -> Dict[str, Any]:
    results = state.get("results") or []
    return {"report": format_report(results), "current_step": "report"}
