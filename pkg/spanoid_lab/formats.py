"""Plain-text file formats.

spanoid v1   `n <int>` then `rule <i1> ... <ik> -> <j>` lines
family v1    `n <int>` then `set <i1> ... <ik>` or `set empty` lines
code v1      `n <int>`, `s <int>`, then one word per line
lcs v1       a spanoid file plus `q <int>`, `delta <p/q>` and
             `match <i> <a1> ... <aq>` lines

Lines starting with `#` and blank lines are ignored. Writers are
canonical, so dumping a parsed dump reproduces it byte for byte.
"""
import logging
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Tuple, TypeVar

from spanoid_lab.codes import Code
from spanoid_lab.errors import FormatError, SpanoidError
from spanoid_lab.lcs import LcsInstance, lcs_from_matchings
from spanoid_lab.lp import fmt_fraction
from spanoid_lab.spanoid import SetFamily, Spanoid, from_mask, new_spanoid

logger = logging.getLogger(__name__)

T = TypeVar("T")


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield number, line.split()


def _int(token: str, number: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise FormatError(f"expected an integer {what}, got {token!r}", number) from None


def _header(fields: Dict[str, int], tokens: List[str], number: int) -> bool:
    if tokens[0] in fields and len(tokens) == 2:
        if fields[tokens[0]] is not None:
            raise FormatError(f"duplicate '{tokens[0]}' line", number)
        fields[tokens[0]] = _int(tokens[1], number, tokens[0])
        return True
    return False


def _rule(tokens: List[str], number: int) -> Tuple[List[int], int]:
    if "->" not in tokens or tokens.index("->") != len(tokens) - 2:
        raise FormatError("rule lines look like 'rule <i1> ... <ik> -> <j>'", number)
    premise = [_int(t, number, "premise element") for t in tokens[1:-2]]
    return premise, _int(tokens[-1], number, "conclusion")


def _require(fields: Dict[str, int], key: str) -> int:
    if fields[key] is None:
        raise FormatError(f"missing '{key} <int>' line")
    return fields[key]


def _wrap(number: int, build: Callable[[], T]) -> T:
    try:
        return build()
    except FormatError:
        raise
    except SpanoidError as e:
        raise FormatError(str(e), number) from e


def parse_spanoid(text: str) -> Spanoid:
    fields = {"n": None}
    rules = []
    last = 0
    for number, tokens in _lines(text):
        last = number
        if _header(fields, tokens, number):
            continue
        if tokens[0] != "rule":
            raise FormatError(f"unknown line kind {tokens[0]!r}", number)
        rules.append(_rule(tokens, number))
    n = _require(fields, "n")
    return _wrap(last, lambda: new_spanoid(n, rules))


def dump_spanoid(sp: Spanoid) -> str:
    lines = ["# spanoid v1", f"n {sp.n}"]
    for premise, conclusion in sp.rules:
        lines.append(" ".join(["rule", *map(str, sorted(premise)), "->", str(conclusion)]))
    return "\n".join(lines) + "\n"


def parse_family(text: str) -> SetFamily:
    fields = {"n": None}
    sets = []
    last = 0
    for number, tokens in _lines(text):
        last = number
        if _header(fields, tokens, number):
            continue
        if tokens[0] != "set":
            raise FormatError(f"unknown line kind {tokens[0]!r}", number)
        if tokens[1:] == ["empty"]:
            sets.append([])
        elif len(tokens) == 1:
            raise FormatError("write the empty set as 'set empty'", number)
        else:
            sets.append([_int(t, number, "set element") for t in tokens[1:]])
    n = _require(fields, "n")
    return _wrap(last, lambda: SetFamily.of(n, sets))


def dump_family(family: SetFamily) -> str:
    lines = ["# family v1", f"n {family.n}"]
    for mask in family.masks:
        members = sorted(from_mask(mask))
        lines.append("set " + (" ".join(map(str, members)) if members else "empty"))
    return "\n".join(lines) + "\n"


def parse_code(text: str) -> Code:
    fields = {"n": None, "s": None}
    words = []
    last = 0
    for number, tokens in _lines(text):
        last = number
        if _header(fields, tokens, number):
            continue
        words.append(tuple(_int(t, number, "symbol") for t in tokens))
    n, s = _require(fields, "n"), _require(fields, "s")
    return _wrap(last, lambda: Code(n, s, words))


def dump_code(code: Code) -> str:
    code = code.materialize()
    lines = ["# code v1", f"n {code.n}", f"s {code.s}"]
    lines.extend(" ".join(map(str, w)) for w in code.words)
    return "\n".join(lines) + "\n"


def parse_lcs(text: str) -> LcsInstance:
    fields = {"n": None, "q": None}
    delta = None
    rules = []
    matches: List[Tuple[int, List[int]]] = []
    last = 0
    for number, tokens in _lines(text):
        last = number
        if _header(fields, tokens, number):
            continue
        kind = tokens[0]
        if kind == "rule":
            rules.append(_rule(tokens, number))
        elif kind == "delta" and len(tokens) == 2:
            try:
                delta = Fraction(tokens[1])
            except ValueError:
                raise FormatError(f"delta must be a rational p/q, got {tokens[1]!r}", number) from None
        elif kind == "match" and len(tokens) >= 3:
            matches.append((_int(tokens[1], number, "element"), [_int(t, number, "match element") for t in tokens[2:]]))
        else:
            raise FormatError(f"unknown line kind {kind!r}", number)
    n, q = _require(fields, "n"), _require(fields, "q")
    if delta is None:
        raise FormatError("missing 'delta <p/q>' line")

    def build() -> LcsInstance:
        matchings = [[] for _ in range(n)]
        for i, subset in matches:
            if not 1 <= i <= n:
                raise FormatError(f"match element {i} outside 1..{n}")
            matchings[i - 1].append(subset)
        inst = lcs_from_matchings(n, q, delta, matchings)
        extra = new_spanoid(n, rules).rule_masks
        return LcsInstance(inst.spanoid.with_rules(extra), q, inst.delta, inst.matchings)

    return _wrap(last, build)


def dump_lcs(inst: LcsInstance) -> str:
    lines = ["# lcs v1", f"n {inst.n}", f"q {inst.q}", f"delta {fmt_fraction(inst.delta)}"]
    for premise, conclusion in inst.spanoid.rules:
        lines.append(" ".join(["rule", *map(str, sorted(premise)), "->", str(conclusion)]))
    for i, matching in enumerate(inst.matchings, start=1):
        for subset in sorted(sorted(t) for t in matching):
            lines.append(" ".join(["match", str(i), *map(str, subset)]))
    return "\n".join(lines) + "\n"


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e.strerror}") from e


def _write(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise FormatError(f"cannot write {path}: {e.strerror}") from e
    logger.info(f"Wrote {path}")


def _named(path, parse: Callable[[str], T]) -> T:
    try:
        return parse(_read(path))
    except FormatError as e:
        raise FormatError(f"{path}: {e}") from e


def load_spanoid(path) -> Spanoid:
    sp = _named(path, parse_spanoid)
    sp.name = Path(path).stem
    return sp


def save_spanoid(sp: Spanoid, path) -> None:
    _write(path, dump_spanoid(sp))


def load_family(path) -> SetFamily:
    return _named(path, parse_family)


def save_family(family: SetFamily, path) -> None:
    _write(path, dump_family(family))


def load_code(path) -> Code:
    return _named(path, parse_code)


def save_code(code: Code, path) -> None:
    _write(path, dump_code(code))


def load_lcs(path) -> LcsInstance:
    return _named(path, parse_lcs)


def save_lcs(inst: LcsInstance, path) -> None:
    _write(path, dump_lcs(inst))
