from fractions import Fraction

import pytest

from spanoid_lab.codes import pentagon_code
from spanoid_lab.errors import FormatError
from spanoid_lab.formats import (
    dump_code,
    dump_family,
    dump_lcs,
    dump_spanoid,
    load_code,
    load_lcs,
    load_spanoid,
    parse_code,
    parse_family,
    parse_lcs,
    parse_spanoid,
    save_code,
    save_lcs,
)
from spanoid_lab.lcs import hadamard_spanoid, validate_lcs
from spanoid_lab.spanoid import closed_sets, pentagon


class TestSpanoidFormat:

    def test_canonical_dump(self):
        """Test rules are written in canonical order with sorted premises"""
        assert dump_spanoid(pentagon()) == (
            "# spanoid v1\n"
            "n 5\n"
            "rule 1 2 -> 4\n"
            "rule 2 3 -> 5\n"
            "rule 3 4 -> 1\n"
            "rule 1 5 -> 3\n"
            "rule 4 5 -> 2\n"
        )

    def test_parse_ignores_comments(self):
        """Test comments and blank lines are skipped"""
        sp = parse_spanoid("# demo\n\nn 3\n  rule 2 1 -> 3  \n")
        assert sp.rules == [(frozenset({1, 2}), 3)]

    def test_rule_without_arrow(self):
        """Test a malformed rule names its line"""
        with pytest.raises(FormatError, match="line 2") as info:
            parse_spanoid("n 3\nrule 1 2 3\n")
        assert info.value.line == 2
        assert info.value.exit_code == 3

    def test_unknown_line(self):
        """Test unknown line kinds are refused"""
        with pytest.raises(FormatError, match="unknown line kind 'edge'"):
            parse_spanoid("n 3\nedge 1 2\n")

    def test_missing_size(self):
        """Test the size line is required"""
        with pytest.raises(FormatError, match="missing 'n"):
            parse_spanoid("rule 1 -> 2\n")

    def test_duplicate_size(self):
        """Test the size may be given once"""
        with pytest.raises(FormatError, match="duplicate"):
            parse_spanoid("n 3\nn 4\n")

    def test_non_integer(self):
        """Test element tokens must be integers"""
        with pytest.raises(FormatError, match="integer"):
            parse_spanoid("n 3\nrule a -> 2\n")

    def test_out_of_range_becomes_format_error(self):
        """Test construction errors surface as format errors"""
        with pytest.raises(FormatError, match="rule #1"):
            parse_spanoid("n 2\nrule 1 -> 3\n")

    def test_load_names_spanoid_after_file(self, pentagon_file):
        """Test loading uses the file stem as the label"""
        sp = load_spanoid(pentagon_file)
        assert sp.label == "pentagon"
        assert sp == pentagon()

    def test_missing_file(self, tmp_path):
        """Test unreadable files raise a format error naming the path"""
        with pytest.raises(FormatError, match="cannot read"):
            load_spanoid(tmp_path / "absent.spanoid")

    def test_error_names_path(self, tmp_path):
        """Test parse errors from files are prefixed with the path"""
        path = tmp_path / "bad.spanoid"
        path.write_text("n x\n")
        with pytest.raises(FormatError, match="bad.spanoid"):
            load_spanoid(path)


class TestFamilyFormat:

    def test_empty_set(self):
        """Test the empty set is spelled out"""
        family = parse_family("n 2\nset empty\nset 1 2\nset 1\n")
        assert len(family) == 3
        assert frozenset() in family

    def test_bare_set_line(self):
        """Test a bare 'set' line is ambiguous and refused"""
        with pytest.raises(FormatError, match="set empty"):
            parse_family("n 2\nset\n")

    def test_dump_closed_sets(self):
        """Test the closed-set dump lists one set per line"""
        text = dump_family(closed_sets(pentagon()))
        lines = text.splitlines()
        assert lines[:3] == ["# family v1", "n 5", "set empty"]
        assert len(lines) == 2 + 17
        assert parse_family(text).masks == closed_sets(pentagon()).masks


class TestCodeFormat:

    def test_parse(self):
        """Test words follow the two header lines"""
        code = parse_code("n 2\ns 3\n0 1\n2 2\n")
        assert code.words == ((0, 1), (2, 2))
        assert code.s == 3

    def test_bad_word(self):
        """Test invalid words surface as format errors"""
        with pytest.raises(FormatError, match="symbol outside"):
            parse_code("n 2\ns 2\n0 5\n")

    def test_missing_alphabet(self):
        """Test the alphabet line is required"""
        with pytest.raises(FormatError, match="missing 's"):
            parse_code("n 1\n0\n")

    def test_save_and_load(self, tmp_path):
        """Test the pentagon code survives a file"""
        path = tmp_path / "pentagon.code"
        save_code(pentagon_code(), path)
        assert load_code(path).words == pentagon_code().words
        assert dump_code(load_code(path)) == path.read_text()


class TestLcsFormat:

    def test_hadamard_file(self, tmp_path):
        """Test a saved Hadamard instance loads as a valid 2-LCS"""
        path = tmp_path / "hadamard3.lcs"
        save_lcs(hadamard_spanoid(3), path)
        inst = load_lcs(path)
        assert (inst.n, inst.q, inst.delta) == (7, 2, Fraction(3, 7))
        assert validate_lcs(inst) is None
        assert "delta 3/7" in dump_lcs(inst)

    def test_missing_delta(self):
        """Test delta is required"""
        with pytest.raises(FormatError, match="delta"):
            parse_lcs("n 3\nq 2\nmatch 1 2 3\n")

    def test_bad_delta(self):
        """Test delta must be rational"""
        with pytest.raises(FormatError, match="rational"):
            parse_lcs("n 3\nq 2\ndelta half\n")

    def test_match_outside_ground_set(self):
        """Test match lines must name an element of [n]"""
        with pytest.raises(FormatError, match="outside"):
            parse_lcs("n 3\nq 2\ndelta 1/3\nmatch 4 1 2\n")

    def test_extra_rules_kept(self):
        """Test rule lines add to the rules the matchings imply"""
        inst = parse_lcs("n 3\nq 2\ndelta 1/3\nrule 1 -> 2\nmatch 1 2 3\nmatch 2 1 3\nmatch 3 1 2\n")
        assert (frozenset({1}), 2) in inst.spanoid.rules
        assert validate_lcs(inst) is None
