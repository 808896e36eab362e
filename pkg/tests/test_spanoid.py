import pytest
from hypothesis import given, settings as hypothesis_settings

from spanoid_lab.errors import CapacityError, ConstructionError, ValidationError
from spanoid_lab.experiments import random_spanoid
from spanoid_lab.nodes import keeps_span
from spanoid_lab.seeds import task_rng
from spanoid_lab.settings import configure
from spanoid_lab.spanoid import (
    INTERSECTION,
    UNION,
    SetFamily,
    XU_CLOSED_SETS,
    closed_sets,
    free_spanoid,
    from_closed_family,
    from_union_family,
    intersection_dimension,
    is_symmetric,
    minimal_open_sets,
    minimal_transversals,
    models,
    new_spanoid,
    open_sets,
    pentagon,
    set_representation,
    span,
    to_mask,
    union_representation,
    uniform_matroid,
    xu_spanoid,
)
from tests.strategies import spanoids


class TestNewSpanoid:

    def test_pentagon_rules_are_stored(self):
        """Test the five pentagon rules come back with 1-based labels"""
        sp = pentagon()
        assert sp.n == 5
        assert ({1, 2}, 4) in [(set(p), c) for p, c in sp.rules]
        assert len(sp.rules) == 5

    def test_duplicate_rules_are_canonicalized(self):
        """Test duplicate rules collapse and premise order does not matter"""
        sp = new_spanoid(3, [([1, 2], 3), ([2, 1], 3), ([1, 2], 3)])
        assert len(sp.rules) == 1

    def test_rule_free_spanoid(self):
        """Test a spanoid without rules"""
        sp = new_spanoid(3, [])
        assert sp.rules == []
        assert span(sp, [1]) == {1}

    def test_out_of_range_conclusion(self):
        """Test an out-of-range index names the offending rule"""
        with pytest.raises(ConstructionError, match="rule #1"):
            new_spanoid(2, [([1], 3)])

    def test_out_of_range_premise(self):
        """Test a premise element outside [n] is rejected"""
        with pytest.raises(ConstructionError, match="rule #2"):
            new_spanoid(3, [([1], 2), ([0], 3)])

    def test_empty_premise_rule_warns(self, caplog):
        """Test a rule with empty premise is accepted with a warning"""
        sp = new_spanoid(2, [([], 1)])
        assert span(sp, []) == {1}
        assert "empty premise" in caplog.text

    def test_nonpositive_n(self):
        """Test the ground set must be nonempty"""
        with pytest.raises(ConstructionError):
            new_spanoid(0, [])


class TestSpan:

    def test_pentagon_edge(self):
        """Test only the opposite vertex joins an edge"""
        assert span(pentagon(), [1, 2]) == {1, 2, 4}

    def test_empty_set(self):
        """Test nothing is derived from the empty set"""
        assert span(pentagon(), []) == frozenset()

    def test_chain_of_rules(self):
        """Test rules fire repeatedly until the fixpoint"""
        sp = new_spanoid(4, [([1], 2), ([2], 3), ([3], 4)])
        assert span(sp, [1]) == {1, 2, 3, 4}

    def test_models(self):
        """Test models agrees with span membership"""
        sp = pentagon()
        assert models(sp, [1, 2], 4)
        assert not models(sp, [1, 2], 3)
        assert models(sp, [3], 3)

    @given(spanoids())
    @hypothesis_settings(max_examples=60, deadline=None)
    def test_closure_axioms(self, sp):
        """Test span is extensive, monotone and idempotent"""
        for mask in range(sp.full + 1):
            closure = sp.span_mask(mask)
            assert closure & mask == mask
            assert sp.span_mask(closure) == closure
            for bit in range(sp.n):
                assert sp.span_mask(mask | 1 << bit) & closure == closure


class TestClosedAndOpenSets:

    def test_pentagon_closed_count(self):
        """Test the pentagon has 17 closed sets"""
        family = closed_sets(pentagon())
        assert len(family) == 17
        assert family.tag == INTERSECTION
        family.validate()

    def test_pentagon_minimal_opens(self):
        """Test the minimal open sets are the five non-adjacent pairs"""
        family = minimal_open_sets(pentagon())
        assert sorted(sorted(s) for s in family) == [[1, 3], [1, 4], [2, 4], [2, 5], [3, 5]]

    def test_open_sets_are_complements(self):
        """Test open sets are union-closed complements of the closed sets"""
        sp = xu_spanoid()
        opened = open_sets(sp)
        assert opened.tag == UNION
        assert frozenset() in opened
        assert {frozenset({1, 2, 3, 4}) - frozenset(c) for c in XU_CLOSED_SETS} == set(opened)

    def test_free_spanoid_everything_closed(self):
        """Test every subset of a rule-free spanoid is closed"""
        assert len(closed_sets(free_spanoid(4))) == 16

    def test_enumeration_cap(self):
        """Test enumeration refuses ground sets above the cap"""
        configure(enum_cap=4)
        with pytest.raises(CapacityError, match="cap"):
            closed_sets(free_spanoid(5))


class TestSetFamily:

    def test_intersection_witness(self):
        """Test a family missing an intersection reports the offending pair"""
        with pytest.raises(ValidationError) as info:
            SetFamily.of(3, [[1, 2], [2, 3], [1, 2, 3]], INTERSECTION)
        assert info.value.witness == (frozenset({1, 2}), frozenset({2, 3}))

    def test_intersection_needs_ground_set(self):
        """Test an intersection-closed family must contain [n]"""
        with pytest.raises(ValidationError, match="ground set"):
            SetFamily.of(2, [[1]], INTERSECTION)

    def test_union_witness(self):
        """Test a family missing a union is rejected"""
        with pytest.raises(ValidationError, match="union-closed"):
            SetFamily.of(3, [[], [1], [2]], UNION)

    def test_complements_flip_tag(self):
        """Test complementing swaps the closure tag"""
        family = SetFamily.of(2, [[], [1], [1, 2]], UNION).complements()
        assert family.tag == INTERSECTION
        assert set(family) == {frozenset({1, 2}), frozenset({2}), frozenset()}


class TestFromFamilies:

    def test_xu_closed_sets_round_trip(self):
        """Test the Xu spanoid has exactly its six defining closed sets"""
        assert set(closed_sets(xu_spanoid())) == {frozenset(c) for c in XU_CLOSED_SETS}

    def test_closed_family_round_trip(self):
        """Test from_closed_family(closed_sets) keeps the span operator"""
        sp = pentagon()
        rebuilt = from_closed_family(closed_sets(sp))
        assert all(rebuilt.span_mask(m) == sp.span_mask(m) for m in range(sp.full + 1))

    def test_non_closed_family_rejected(self):
        """Test a family that is not intersection-closed is rejected"""
        with pytest.raises(ValidationError):
            from_closed_family(SetFamily.of(3, [[1, 2], [2, 3], [1, 2, 3]]))

    def test_union_family_inference(self):
        """Test A ⊨ i iff S_i lies in the union of the S_j"""
        sp = from_union_family([{"a"}, {"b"}, {"a", "b"}])
        assert span(sp, [1, 2]) == {1, 2, 3}
        assert span(sp, [3]) == {1, 2, 3}
        assert span(sp, [1]) == {1}

    def test_union_family_keeps_open_basis(self):
        """Test minimal opens come from the stored basis"""
        sp = from_union_family([{"a"}, {"b"}, {"a", "b"}])
        assert sp.open_basis is not None
        assert sorted(sorted(s) for s in minimal_open_sets(sp)) == [[1, 3], [2, 3]]

    @given(spanoids(max_n=4))
    @hypothesis_settings(max_examples=40, deadline=None)
    def test_closed_family_round_trip_random(self, sp):
        """Test the closed-family round trip on random spanoids"""
        rebuilt = from_closed_family(closed_sets(sp))
        assert all(rebuilt.span_mask(m) == sp.span_mask(m) for m in range(sp.full + 1))

    @pytest.mark.parametrize("n", [7, 8, 9, 10])
    @pytest.mark.parametrize("seed", [0, 1])
    def test_closed_family_round_trip_larger(self, n, seed):
        """Test the round trip on seeded random spanoids with 7 to 10 elements"""
        sp = random_spanoid(n, task_rng(seed, n))
        rebuilt = from_closed_family(closed_sets(sp))
        assert all(rebuilt.span_mask(m) == sp.span_mask(m) for m in range(sp.full + 1))
        assert keeps_span(sp)


class TestMinimalTransversals:

    def test_two_edges(self):
        """Test the minimal hitting sets of {1,2} and {2,3}"""
        edges = [to_mask([1, 2]), to_mask([2, 3])]
        assert minimal_transversals(edges) == sorted([to_mask([2]), to_mask([1, 3])])

    def test_empty_edge_has_no_transversal(self):
        """Test an empty edge cannot be hit"""
        assert minimal_transversals([0]) == []


class TestSetRepresentation:

    @pytest.mark.parametrize("build", [pentagon, xu_spanoid])
    def test_intersection_flavor_matches_models(self, build):
        """Test the intersection representation derives exactly the inferences"""
        sp = build()
        rep = set_representation(sp)
        for mask in range(sp.full + 1):
            premise = [e + 1 for e in range(sp.n) if mask >> e & 1]
            for i in range(1, sp.n + 1):
                assert rep.infers(premise, i) == models(sp, premise, i)

    def test_union_flavor_is_complement(self):
        """Test the union representation agrees with the intersection one"""
        sp = xu_spanoid()
        union = union_representation(sp)
        assert union.flavor == UNION
        assert union.complement() == set_representation(sp)
        assert union.to_spanoid().span_mask(0b0011) == sp.span_mask(0b0011)

    def test_intersection_dimension_equals_rank(self):
        """Test idim of the closed-set representation is the rank"""
        assert intersection_dimension(set_representation(pentagon())) == 3
        assert intersection_dimension(union_representation(xu_spanoid())) == 2


class TestConstructors:

    def test_uniform_matroid(self):
        """Test every k-set of U(k, n) spans everything"""
        sp = uniform_matroid(2, 4)
        assert span(sp, [1, 3]) == {1, 2, 3, 4}
        assert span(sp, [2]) == {2}

    def test_uniform_matroid_range(self):
        """Test k must lie in 0..n"""
        with pytest.raises(ConstructionError):
            uniform_matroid(5, 4)

    def test_symmetry(self):
        """Test matroids are symmetric and the pentagon is not"""
        assert is_symmetric(uniform_matroid(2, 4))
        assert not is_symmetric(pentagon())
