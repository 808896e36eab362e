import math
from dataclasses import replace
from fractions import Fraction
from unittest.mock import patch

import networkx as nx
import pytest

from spanoid_lab.errors import ConstructionError, DomainViolation, RetriesExhausted, ValidationError
from spanoid_lab.lcs import (
    CompleteSampler,
    EmptySampler,
    FixedSetsSampler,
    LcsInstance,
    QLcsSampler,
    Sample,
    StepRecord,
    TwoLcsSampler,
    audit_sampler,
    check_transcript,
    count_sources,
    graph_process_run,
    hadamard_spanoid,
    lcs_from_matchings,
    qlcs_size_bound,
    qlcs_steps,
    random_qlcs,
    source_representatives,
    spanning_set_2lcs,
    spanning_set_qlcs,
    two_lcs_steps,
    validate_lcs,
)
from spanoid_lab.seeds import task_rng
from spanoid_lab.spanoid import free_spanoid


class TestInstances:

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_hadamard_is_valid(self, k):
        """Test the Hadamard spanoid is a 2-LCS with delta (n-1)/2n"""
        inst = hadamard_spanoid(k)
        n = (1 << k) - 1
        assert inst.n == n
        assert inst.delta == Fraction(n - 1, 2 * n)
        assert validate_lcs(inst) is None

    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_hadamard_basis_columns_span(self, k):
        """Test the k unit vectors span every nonzero vector and no k-1 of them do"""
        sp = hadamard_spanoid(k).spanoid
        basis = [1 << (label - 1) for label in (1 << j for j in range(k))]
        assert sp.span_mask(sum(basis)) == sp.full
        for dropped in basis:
            assert sp.span_mask(sum(basis) & ~dropped) != sp.full

    def test_hadamard_range(self):
        """Test k outside 2..20 is refused"""
        with pytest.raises(ConstructionError):
            hadamard_spanoid(1)

    def test_random_qlcs(self):
        """Test random instances are valid and reproducible per seed"""
        inst = random_qlcs(30, 3, seed=4)
        assert validate_lcs(inst) is None
        assert inst.delta == Fraction(5, 30)
        assert all(len(m) == 5 for m in inst.matchings)
        assert random_qlcs(30, 3, seed=4).matchings == inst.matchings
        assert random_qlcs(30, 3, seed=5).matchings != inst.matchings

    def test_random_qlcs_arguments(self):
        """Test q >= 3 and n >= 2q are required"""
        with pytest.raises(ConstructionError):
            random_qlcs(30, 2)
        with pytest.raises(ConstructionError):
            random_qlcs(5, 3)

    def test_one_matching_per_element(self):
        """Test the matching list must cover every element"""
        with pytest.raises(ConstructionError, match="one matching per element"):
            lcs_from_matchings(3, 2, Fraction(1, 3), [[(2, 3)]])


class TestValidateLcs:

    def test_overlapping_subsets(self):
        """Test subsets of one matching must be disjoint"""
        inst = lcs_from_matchings(5, 2, Fraction(1, 5), [[(2, 3), (3, 4)], [(1, 3)], [(1, 2)], [(1, 2)], [(1, 2)]])
        violation = validate_lcs(inst)
        assert violation.element == 1
        assert "overlaps" in violation.reason

    def test_wrong_subset_size(self):
        """Test every subset has exactly q elements"""
        inst = lcs_from_matchings(3, 2, Fraction(1, 3), [[(2, 3)], [(1,)], [(1, 2)]])
        assert validate_lcs(inst).element == 2

    def test_subset_contains_element(self):
        """Test a subset may not contain the element it spans"""
        inst = lcs_from_matchings(3, 2, Fraction(1, 3), [[(1, 2)], [(1, 3)], [(1, 2)]])
        assert "not inside" in validate_lcs(inst).reason

    def test_too_few_subsets(self):
        """Test each matching needs at least delta*n subsets"""
        inst = lcs_from_matchings(3, 2, Fraction(2, 3), [[(2, 3)], [(1, 3)], [(1, 2)]])
        assert "fewer than" in validate_lcs(inst).reason

    def test_delta_range(self):
        """Test delta must lie in (0, 1]"""
        inst = lcs_from_matchings(3, 2, 0, [[(2, 3)], [(1, 3)], [(1, 2)]])
        assert validate_lcs(inst).element == 0

    def test_missing_rule(self):
        """Test every matching subset must be a stored rule"""
        inst = hadamard_spanoid(2)
        stripped = LcsInstance(free_spanoid(3), inst.q, inst.delta, inst.matchings)
        assert "not a rule" in validate_lcs(stripped).reason


class TestSources:

    def test_count_sources(self):
        """Test sources are strongly connected components without in-edges"""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(4))
        graph.add_edges_from([(0, 1), (1, 0), (2, 3)])
        assert count_sources(graph) == 2
        assert source_representatives(graph) == [0, 2]

    def test_edgeless_graph(self):
        """Test every vertex is a source without edges"""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(3))
        assert count_sources(graph) == 3


class TestSamplers:

    def test_cyclic_sets(self):
        """Test the cyclic sampler declares (k/n, 1)"""
        sampler = FixedSetsSampler.cyclic(10, 3)
        assert (sampler.alpha, sampler.beta) == (Fraction(3, 10), 1)
        sample = sampler.sample(task_rng(0))
        j = sample.chosen[0]
        assert all(edge[0] == j for edge in sample.edges)
        assert len(sample.edges) == 3

    def test_cyclic_range(self):
        """Test 0 < k < n is required"""
        with pytest.raises(ConstructionError):
            FixedSetsSampler.cyclic(5, 5)

    def test_fixed_sets_must_avoid_index(self):
        """Test a set containing its own index is refused"""
        with pytest.raises(ConstructionError):
            FixedSetsSampler([[0], [0]])

    def test_two_lcs_sampler_reasons(self):
        """Test every 2-LCS edge names the pair that fired it"""
        inst = hadamard_spanoid(3)
        sampler = TwoLcsSampler(inst)
        assert sampler.alpha == 2 * inst.delta
        sample = sampler.sample(task_rng(1))
        ell = sample.chosen[0]
        assert len(sample.edges) == inst.n - 1
        for (j, i), pair in sample.reasons.items():
            assert pair == {j + 1, ell + 1}
            assert pair in inst.matchings[i]

    def test_sampler_kinds_checked(self):
        """Test samplers refuse instances of the wrong arity"""
        with pytest.raises(ValidationError):
            TwoLcsSampler(random_qlcs(30, 3))
        with pytest.raises(ValidationError):
            QLcsSampler(hadamard_spanoid(3))

    def test_qlcs_sampler_subsets(self):
        """Test q-LCS edges come from subsets whose other elements were chosen"""
        inst = random_qlcs(60, 3, seed=2)
        sampler = QLcsSampler(inst)
        assert sampler.probability == pytest.approx(10 ** -0.5)
        sample = sampler.sample(task_rng(3))
        assert not sample.discarded
        for (j, i), subset in sample.reasons.items():
            assert subset in inst.matchings[i]
            assert subset - {j + 1} <= {c + 1 for c in sample.chosen}

    def test_oversized_choice_discarded(self):
        """Test a too-large random set gives the empty graph"""
        sampler = QLcsSampler(random_qlcs(60, 3, seed=2))
        sampler.size_limit = 0
        sample = sampler.sample(task_rng(0))
        assert sample.discarded
        assert sample.edges == []

    def test_default_steps(self):
        """Test the horizon is ceil(4/alpha * ln n)"""
        assert FixedSetsSampler.cyclic(50, 10).default_steps() == math.ceil(20 * math.log(50))
        assert EmptySampler(5).default_steps() == 1

    def test_source_bound(self):
        """Test the bound decays to 2*beta/alpha"""
        sampler = CompleteSampler(8)
        assert sampler.source_bound(0) == pytest.approx(8 + 16)
        assert sampler.source_bound(500) == pytest.approx(16)
        assert EmptySampler(4).source_bound(10) == 4


class TestGraphProcess:

    def test_complete_sampler(self):
        """Test one complete sample leaves a single source"""
        assert graph_process_run(CompleteSampler(6), 3) == [1, 1, 1]

    def test_empty_sampler(self):
        """Test nothing changes without edges"""
        assert graph_process_run(EmptySampler(4), 2) == [4, 4]

    def test_counts_never_increase(self):
        """Test adding edges can only merge or cover sources"""
        counts = graph_process_run(FixedSetsSampler.cyclic(30, 5), 40, seed=9)
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        assert counts == graph_process_run(FixedSetsSampler.cyclic(30, 5), 40, seed=9)

    def test_needs_a_step(self):
        """Test t_max must be positive"""
        with pytest.raises(ConstructionError):
            graph_process_run(EmptySampler(3), 0)


class TestAudit:

    def test_cyclic_sampler_passes(self):
        """Test the cyclic sampler meets its declared spread"""
        report = audit_sampler(FixedSetsSampler.cyclic(20, 4), samples=4000, seed=11)
        assert report.passed
        assert report.min_in_frequency == pytest.approx(0.2, abs=0.05)

    def test_false_declaration_fails(self):
        """Test a sampler claiming in-edges it never produces fails"""
        sampler = EmptySampler(5)
        sampler.alpha = Fraction(1, 2)
        sampler.beta = Fraction(1)
        report = audit_sampler(sampler, samples=200)
        assert not report.passed
        assert report.min_in_frequency == 0


class TestSpanningSets:

    def test_two_lcs_steps(self):
        """Test the 2-LCS horizon for the 7-element Hadamard spanoid"""
        assert two_lcs_steps(hadamard_spanoid(3)) == 37

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_hadamard_spanning_set(self, seed):
        """Test the 2-LCS algorithm returns a verified spanning set"""
        inst = hadamard_spanoid(3)
        run = spanning_set_2lcs(inst, seed=seed)
        mask = sum(1 << (e - 1) for e in run.elements)
        assert inst.spanoid.span_mask(mask) == inst.spanoid.full
        assert run.size <= run.steps + run.sources
        assert len(run.transcript) == run.steps
        check_transcript(inst, run)

    def test_qlcs_spanning_set(self):
        """Test the q-LCS algorithm returns a verified spanning set"""
        inst = random_qlcs(60, 3, seed=1)
        run = spanning_set_qlcs(inst, seed=0)
        mask = sum(1 << (e - 1) for e in run.elements)
        assert inst.spanoid.span_mask(mask) == inst.spanoid.full
        assert run.steps == qlcs_steps(inst)
        check_transcript(inst, run)

    def test_qlcs_size_bound(self):
        """Test the growth rate formula"""
        inst = random_qlcs(60, 3, seed=1)
        expected = (1 / 6) ** -0.5 * 60 ** 0.5 * math.log2(60)
        assert qlcs_size_bound(inst) == pytest.approx(expected)

    def test_wrong_arity(self):
        """Test each algorithm checks q"""
        with pytest.raises(ValidationError):
            spanning_set_2lcs(random_qlcs(30, 3))
        with pytest.raises(ValidationError):
            spanning_set_qlcs(hadamard_spanoid(3))

    def test_invalid_instance(self):
        """Test instances are validated before sampling"""
        inst = hadamard_spanoid(3)
        broken = replace(inst, delta=Fraction(1))
        with pytest.raises(ValidationError) as info:
            spanning_set_2lcs(broken)
        assert info.value.witness.element == 1

    def test_source_bound_miss_still_returns(self, caplog):
        """Test a verified spanning set is returned even above the source bound"""
        inst = hadamard_spanoid(3)
        with patch.object(TwoLcsSampler, "source_bound", return_value=-1.0):
            run = spanning_set_2lcs(inst, seed=0, retries=2)
        mask = sum(1 << (e - 1) for e in run.elements)
        assert inst.spanoid.span_mask(mask) == inst.spanoid.full
        assert run.attempts == 1
        assert "above the bound" in caplog.text

    def test_retries_exhausted(self):
        """Test retries run out only when no attempt spans, keeping the last transcript"""
        inst = hadamard_spanoid(3)
        with patch.object(TwoLcsSampler, "sample", return_value=Sample([])), \
                patch("spanoid_lab.lcs.source_representatives", return_value=[0]):
            with pytest.raises(RetriesExhausted, match="spanning set in 2 attempts") as info:
                spanning_set_2lcs(inst, retries=2)
        assert len(info.value.transcript) == two_lcs_steps(inst)
        assert info.value.upper is None

    def test_tampered_transcript(self):
        """Test a fired edge without a supporting subset is caught"""
        inst = hadamard_spanoid(3)
        run = spanning_set_2lcs(inst, seed=0)
        run.transcript.append(StepRecord(run.steps + 1, (1,), [(2, 7, frozenset({1, 2}))]))
        with pytest.raises(DomainViolation, match="no supporting subset"):
            check_transcript(inst, run)
