from fractions import Fraction
from unittest.mock import Mock, patch

import pytest
from hypothesis import given, settings as hypothesis_settings

from spanoid_lab.codes import (
    Code,
    build_cover_code,
    check_consistent,
    code_dimension,
    code_from_union_representation,
    constant_code,
    _max_clique,
    load_limit,
    max_consistent_code,
    pentagon_code,
    sample_small_alphabet_code,
    tensor_union_representation,
)
from spanoid_lab.errors import BudgetError, CapacityError, ConstructionError, RetriesExhausted, ValidationError
from spanoid_lab.relaxations import lp_entropy
from spanoid_lab.settings import configure
from spanoid_lab.spanoid import (
    free_spanoid,
    new_spanoid,
    pentagon,
    pentagon_union_representation,
    set_representation,
    xu_spanoid,
)
from tests.strategies import spanoids


class TestCode:

    def test_words_are_sorted(self):
        """Test explicit codes keep their words in lexicographic order"""
        code = Code(2, 3, [(2, 1), (0, 2), (1, 1)])
        assert code.words == ((0, 2), (1, 1), (2, 1))
        assert not code.is_lazy
        assert len(code) == 3

    def test_wrong_length(self):
        """Test every word must have length n"""
        with pytest.raises(ConstructionError, match="length"):
            Code(3, 2, [(0, 1)])

    def test_symbol_out_of_range(self):
        """Test symbols must lie below the alphabet size"""
        with pytest.raises(ConstructionError, match="symbol"):
            Code(2, 2, [(0, 2)])

    def test_duplicate_word(self):
        """Test a code is a set of words"""
        with pytest.raises(ConstructionError, match="duplicate"):
            Code(2, 2, [(0, 1), (0, 1)])

    def test_unary_alphabet(self):
        """Test one symbol allows only the singleton code"""
        assert len(constant_code(4)) == 1
        with pytest.raises(ConstructionError):
            Code(1, 1, [(0,), (0,), (0,)])

    def test_needs_words_or_representation(self):
        """Test a code cannot be built from nothing"""
        with pytest.raises(ConstructionError):
            Code(2, 2)


class TestCodeDimension:

    def test_rational_power(self):
        """Test two words over four symbols have dimension 1/2"""
        assert code_dimension(Code(2, 4, [(0, 0), (1, 1)])) == Fraction(1, 2)

    def test_perfect_power_alphabet(self):
        """Test an alphabet of 8 symbols with 4 words gives 2/3"""
        assert code_dimension(Code(2, 8, [(0, 0), (1, 1), (2, 2), (3, 3)])) == Fraction(2, 3)

    def test_irrational_dimension(self):
        """Test non-powers fall back to a float logarithm"""
        value = code_dimension(Code(2, 2, [(0, 0), (0, 1), (1, 0)]))
        assert isinstance(value, float)
        assert value == pytest.approx(1.5849625, rel=1e-6)

    def test_singleton(self):
        """Test a single word has dimension zero"""
        assert code_dimension(constant_code(3, 5)) == 0


class TestConsistency:

    def test_consistent_code(self):
        """Test a code whose first coordinate determines the second"""
        sp = new_spanoid(2, [([1], 2)])
        assert check_consistent(sp, Code(2, 3, [(0, 1), (1, 1), (2, 0)])) is None

    def test_violation_reports_pair(self):
        """Test the first violating rule comes with two disagreeing words"""
        sp = new_spanoid(2, [([1], 2)])
        violation = check_consistent(sp, Code(2, 2, [(0, 0), (0, 1)]))
        assert violation.rule == (frozenset({1}), 2)
        assert (violation.first, violation.second) == ((0, 0), (0, 1))
        assert "rule [1] -> 2" in violation.describe()

    def test_length_mismatch(self):
        """Test the code length must match the ground set"""
        with pytest.raises(ValidationError):
            check_consistent(pentagon(), constant_code(4))


class TestPentagonCode:

    def test_size_and_dimension(self):
        """Test the pentagon code has 32 words over 4 symbols"""
        code = pentagon_code()
        assert (code.size, code.s) == (32, 4)
        assert code_dimension(code) == Fraction(5, 2)
        assert check_consistent(pentagon(), code) is None

    def test_lazy_above_materialize_cap(self):
        """Test large universes stay lazy and are checked structurally"""
        configure(code_materialize_cap=3)
        code = pentagon_code()
        assert code.is_lazy
        assert code.size == 32
        assert check_consistent(pentagon(), code) is None
        with pytest.raises(CapacityError):
            code.materialize()

    def test_structural_violation(self):
        """Test a lazy code reports a rule its sets do not cover"""
        configure(code_materialize_cap=3)
        violation = check_consistent(new_spanoid(5, [([1], 2)]), pentagon_code())
        assert violation.rule == (frozenset({1}), 2)
        assert violation.first != violation.second


class TestUnionRepresentationCodes:

    def test_needs_union_flavor(self):
        """Test intersection representations are refused"""
        with pytest.raises(ConstructionError, match="union"):
            code_from_union_representation(set_representation(pentagon()), 2)

    def test_symbol_width(self):
        """Test every set must fit in a symbol"""
        with pytest.raises(ConstructionError, match="ell"):
            code_from_union_representation(pentagon_union_representation(), 1)

    def test_tensor(self):
        """Test tensoring multiplies universes and set counts"""
        rep = pentagon_union_representation()
        square = tensor_union_representation(rep, rep)
        assert square.universe == 25
        assert len(square.sets) == 25
        assert all(s.bit_count() == 4 for s in square.sets)


class TestCoverCode:

    def test_pentagon(self):
        """Test the cover code reaches the LP cover dimension"""
        code = build_cover_code(pentagon())
        assert code.s == 4
        assert code.size == 32
        assert check_consistent(pentagon(), code) is None

    def test_no_open_sets(self):
        """Test a spanoid without nonempty opens gets the constant code"""
        sp = new_spanoid(2, [([], 1), ([1], 2)])
        assert len(build_cover_code(sp)) == 1


class TestSmallAlphabetCode:

    def test_load_limit(self):
        """Test the load limit needs n >= 3"""
        assert load_limit(2) is None
        assert load_limit(5) == 10

    @pytest.mark.parametrize("seed", [0, 1, 4, 7, 10, 18, 31])
    def test_pentagon_sample(self, seed):
        """Test an accepted sample keeps half the cover value in members and in dimension"""
        sampled = sample_small_alphabet_code(pentagon(), seed=seed)
        assert 2 * sampled.members >= Fraction(5, 2)
        assert sampled.max_load <= load_limit(5)
        assert sampled.dimension >= Fraction(5, 4)
        assert code_dimension(sampled.code) == sampled.dimension
        assert check_consistent(pentagon(), sampled.code) is None

    def test_rule_free_sample(self):
        """Test a rule-free spanoid keeps every singleton and reaches dimension 4"""
        sp = free_spanoid(4)
        sampled = sample_small_alphabet_code(sp, seed=2)
        assert (sampled.members, sampled.max_load) == (4, 1)
        assert code_dimension(sampled.code) >= 2
        assert check_consistent(sp, sampled.code) is None

    def test_low_dimension_sample_rejected(self):
        """Test a draw of two overlapping opens is redrawn, not accepted at dimension 1"""
        rng = Mock()
        rng.integers.side_effect = [0, 0, 1, 1, 1] + [0, 1, 0, 1, 0]
        with patch("spanoid_lab.codes.task_rng", return_value=rng):
            sampled = sample_small_alphabet_code(pentagon(), seed=0)
        assert sampled.attempts == 2
        assert sampled.dimension == Fraction(3, 2)

    def test_deterministic(self):
        """Test the same seed draws the same sample"""
        first = sample_small_alphabet_code(pentagon(), seed=3)
        second = sample_small_alphabet_code(pentagon(), seed=3)
        assert (first.attempts, first.members) == (second.attempts, second.members)

    def test_retries_exhausted(self):
        """Test every attempt failing the load limit exhausts the retries"""
        with patch("spanoid_lab.codes.load_limit", return_value=0):
            with pytest.raises(RetriesExhausted):
                sample_small_alphabet_code(pentagon(), seed=1, retries=3)


class TestMaxConsistentCode:

    def test_pentagon_four_symbols(self):
        """Test the cover code already meets the entropy bound"""
        code = max_consistent_code(pentagon(), 4)
        assert len(code) == 32
        assert check_consistent(pentagon(), code) is None

    def test_single_rule(self):
        """Test a determined coordinate leaves one word per first symbol"""
        sp = new_spanoid(2, [([1], 2)])
        code = max_consistent_code(sp, 3)
        assert len(code) == 3
        assert check_consistent(sp, code) is None

    def test_rule_free(self):
        """Test every word is allowed without rules"""
        assert len(max_consistent_code(free_spanoid(2), 2)) == 4

    def test_unary_alphabet(self):
        """Test one symbol gives the constant code"""
        assert len(max_consistent_code(pentagon(), 1)) == 1

    def test_budget(self):
        """Test the word space must fit the search budget"""
        with pytest.raises(BudgetError):
            max_consistent_code(pentagon(), 4, budget=100)

    def test_clique_search_uses_code_node_budget(self):
        """Test the clique search receives code_node_budget rather than the rank budget"""
        configure(code_node_budget=7, rank_node_budget=1)
        with patch("spanoid_lab.codes._entropy_size_bound", return_value=100), \
                patch("spanoid_lab.codes._max_clique", return_value=0b1111) as clique:
            code = max_consistent_code(free_spanoid(2), 2)
        assert clique.call_args.args[-1] == 7
        assert len(code) == 4

    def test_clique_node_budget_exhausted(self):
        """Test a one-node budget stops the clique search with its bounds"""
        adjacency = [0b110, 0b101, 0b011]
        with pytest.raises(BudgetError, match="exceeded 1 nodes") as info:
            _max_clique(adjacency, 0b111, 0, 0, 3, 1)
        assert info.value.upper == 3

    def test_size_grows_with_alphabet(self):
        """Test a larger alphabet never yields a smaller maximum code"""
        sizes = [len(max_consistent_code(xu_spanoid(), s)) for s in (1, 2, 3)]
        assert sizes == sorted(sizes)
        assert sizes[0] == 1

    @given(spanoids(max_n=3, max_rules=4))
    @hypothesis_settings(max_examples=20, deadline=None)
    def test_size_grows_with_alphabet_random(self, sp):
        """Test maximum code sizes are nondecreasing in s on random spanoids"""
        sizes = [len(max_consistent_code(sp, s)) for s in (1, 2, 3)]
        assert sizes == sorted(sizes)


class TestDimensionBound:

    @staticmethod
    def _within_entropy(sp, code) -> bool:
        assert check_consistent(sp, code) is None
        return float(code_dimension(code)) <= float(lp_entropy(sp).value) + 1e-9

    def test_pentagon_codes(self):
        """Test every pentagon code stays within the entropy value 5/2"""
        sp = pentagon()
        for code in (pentagon_code(), build_cover_code(sp), sample_small_alphabet_code(sp, seed=3).code,
                     max_consistent_code(sp, 2)):
            assert self._within_entropy(sp, code)

    @given(spanoids(max_n=4, max_rules=6))
    @hypothesis_settings(max_examples=30, deadline=None)
    def test_constructed_codes(self, sp):
        """Test cover, sampled and maximum codes never exceed the entropy value"""
        codes = [build_cover_code(sp), max_consistent_code(sp, 2)]
        try:
            codes.append(sample_small_alphabet_code(sp, seed=0).code)
        except RetriesExhausted:
            pass
        for code in codes:
            assert self._within_entropy(sp, code)
