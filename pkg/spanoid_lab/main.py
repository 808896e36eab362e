import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, TextIO

from pydantic import BaseModel, Field, ValidationError as PydanticValidationError

from spanoid_lab.agent import run_repro
from spanoid_lab.codes import (
    build_cover_code,
    check_consistent,
    code_dimension,
    max_consistent_code,
    sample_small_alphabet_code,
)
from spanoid_lab.errors import FormatError, SpanoidError
from spanoid_lab.experiments import PROCESS_HEADER, SPANNING_HEADER, spanning_rows
from spanoid_lab.formats import dump_code, dump_family, dump_lcs, dump_spanoid, load_code, load_lcs, load_spanoid
from spanoid_lab.lcs import (
    FixedSetsSampler,
    QLcsSampler,
    TwoLcsSampler,
    audit_sampler,
    graph_process_run,
    hadamard_spanoid,
    random_qlcs,
    validate_lcs,
)
from spanoid_lab.lp import fmt_fraction
from spanoid_lab.nodes import TITLES
from spanoid_lab.products import KINDS, build_product
from spanoid_lab.rank import BRUTE_FORCE, DIRECT_SEARCH, HITTING_SET, rank
from spanoid_lab.relaxations import BOTH, ELEMENTAL, FULL, cover_lp, entropy_lp, lp_cover, lp_cover_dual, lp_entropy
from spanoid_lab.seeds import MAX_SEED, task_seed
from spanoid_lab.settings import configure, reset_settings
from spanoid_lab.spanoid import (
    INTERSECTION,
    UNION,
    Spanoid,
    closed_sets,
    from_mask,
    intersection_dimension,
    minimal_open_sets,
    open_sets,
    pentagon,
    set_representation,
    span,
    union_representation,
    xu_spanoid,
)

logger = logging.getLogger(__name__)

BUILTIN_SPANOIDS = {"@pentagon": pentagon, "@xu": xu_spanoid}

# CLI flag -> settings field
CAP_FLAGS = {
    "enum_cap": "--enum-cap",
    "rank_search_cap": "--rank-search-cap",
    "rank_node_budget": "--rank-node-budget",
    "entropy_full_cap": "--entropy-full-cap",
    "entropy_elemental_cap": "--entropy-elemental-cap",
    "code_materialize_cap": "--code-materialize-cap",
    "code_search_budget": "--code-search-budget",
    "code_node_budget": "--code-node-budget",
    "lcs_retries": "--retries",
}


class RunConfig(BaseModel):
    """One CLI invocation; identical configs produce identical stdout"""

    command: str
    action: Optional[str] = None
    paths: List[str] = Field(default_factory=list)
    options: Dict[str, Any] = Field(default_factory=dict)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    workers: int = Field(default=1, ge=1)
    output: Optional[str] = None
    format: Literal["text", "csv", "json-lines"] = "text"
    caps: Dict[str, int] = Field(default_factory=dict)
    verbosity: int = 0


def _plain(value: Any) -> Any:
    if isinstance(value, Fraction):
        return fmt_fraction(value)
    if isinstance(value, (list, tuple, frozenset, set)):
        return [_plain(v) for v in (sorted(value) if isinstance(value, (set, frozenset)) else value)]
    return value


class Output:
    """Buffers stdout so a failed run never leaves half a file behind"""

    def __init__(self, fmt: str):
        self.fmt = fmt
        self.chunks: List[str] = []

    def text(self, text: str) -> None:
        self.chunks.append(text if text.endswith("\n") else text + "\n")

    def record(self, line: str, **fields: Any) -> None:
        if self.fmt == "json-lines":
            self.text(json.dumps({k: _plain(v) for k, v in fields.items()}))
        else:
            self.text(line)

    def table(self, header: str, rows: Sequence[str]) -> None:
        columns = header.split(",")
        if self.fmt == "json-lines":
            for row in rows:
                self.text(json.dumps(dict(zip(columns, row.split(",")))))
        elif self.fmt == "text":
            cells = [columns] + [row.split(",") for row in rows]
            widths = [max(len(r[k]) for r in cells) for k in range(len(columns))]
            for r in cells:
                self.text("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        else:
            self.text("\n".join([header, *rows]))

    def flush(self, path: Optional[str], stream: TextIO) -> None:
        content = "".join(self.chunks)
        if path is None:
            stream.write(content)
            return
        try:
            Path(path).write_text(content)
        except OSError as e:
            raise FormatError(f"cannot write {path}: {e.strerror}") from e
        logger.info(f"Wrote {path}")


def _spanoid(path: str) -> Spanoid:
    if path in BUILTIN_SPANOIDS:
        return BUILTIN_SPANOIDS[path]()
    return load_spanoid(path)


def _int_list(text: str, what: str) -> List[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(t) for t in text.replace(" ", ",").split(",") if t]
    except ValueError:
        raise FormatError(f"{what} must be comma-separated integers, got {text!r}") from None


def _elements(subset) -> str:
    return " ".join(map(str, sorted(subset)))


def _run_span(config: RunConfig, out: Output) -> int:
    sp = _spanoid(config.paths[0])
    result = span(sp, _int_list(config.options["set"], "--set"))
    out.record(_elements(result), span=result)
    return 0


def _run_rank(config: RunConfig, out: Output) -> int:
    cert = rank(_spanoid(config.paths[0]), config.options.get("method"))
    if out.fmt == "json-lines":
        out.record("", rank=cert.rank, witness=cert.witness, method=cert.method)
    else:
        out.text(f"rank {cert.rank}\nwitness {_elements(cert.witness)}")
    return 0


def _run_closed_sets(config: RunConfig, out: Output) -> int:
    out.text(dump_family(closed_sets(_spanoid(config.paths[0]))))
    return 0


def _run_open_sets(config: RunConfig, out: Output) -> int:
    sp = _spanoid(config.paths[0])
    out.text(dump_family(minimal_open_sets(sp) if config.options.get("minimal") else open_sets(sp)))
    return 0


def _run_represent(config: RunConfig, out: Output) -> int:
    sp = _spanoid(config.paths[0])
    rep = union_representation(sp) if config.options["flavor"] == UNION else set_representation(sp)
    lines = [f"flavor {rep.flavor}", f"universe {rep.universe}"]
    lines.extend(f"S{i} {_elements(rep.set_of(i)) or 'empty'}" for i in range(1, rep.n + 1))
    lines.append(f"idim {intersection_dimension(rep)}")
    out.text("\n".join(lines))
    return 0


def _run_lp(config: RunConfig, out: Output) -> int:
    sp = _spanoid(config.paths[0])
    if config.action == "cover":
        if config.options.get("dump"):
            out.text(cover_lp(sp).dump())
        if config.options.get("dual"):
            for opened, weight in sorted(lp_cover_dual(sp).weights.items(), key=lambda kv: sorted(kv[0])):
                out.text(f"lambda {_elements(opened)} {fmt_fraction(weight)}")
        value = lp_cover(sp)
        out.record(fmt_fraction(value), lp_cover=value)
        return 0
    mode = config.options["mode"]
    if config.options.get("dump"):
        out.text(entropy_lp(sp, ELEMENTAL if mode == BOTH else mode).dump())
    result = lp_entropy(sp, mode)
    if config.options.get("profile"):
        for mask in range(1, sp.full + 1):
            out.text(f"f {_elements(from_mask(mask))} {fmt_fraction(result.profile[mask])}")
    out.record(fmt_fraction(result.value), lp_entropy=result.value, mode=result.mode)
    return 0


def _run_code(config: RunConfig, out: Output) -> int:
    sp = _spanoid(config.paths[0])
    if config.action == "check":
        violation = check_consistent(sp, load_code(config.paths[1]))
        if violation is None:
            out.record("consistent", consistent=True)
            return 0
        out.record(f"inconsistent: {violation.describe()}", consistent=False, violation=violation.describe())
        return 1
    if config.action == "build-cover":
        code = build_cover_code(sp)
    elif config.action == "sample-small":
        code = sample_small_alphabet_code(sp, seed=config.seed).code
    else:
        code = max_consistent_code(sp, config.options["alphabet"])
    dimension = code_dimension(code)
    shown = fmt_fraction(dimension) if isinstance(dimension, Fraction) else f"{dimension:.6f}"
    summary = f"words {code.size} alphabet {code.s} dimension {shown}"
    logger.info(f"Code for {sp.label}: {summary}")
    if config.options.get("summary"):
        out.record(summary, words=code.size, alphabet=code.s, dimension=shown)
    else:
        out.text(dump_code(code))
    return 0


def _run_product(config: RunConfig, out: Output) -> int:
    left, right = (_spanoid(p) for p in config.paths[:2])
    out.text(dump_spanoid(build_product(config.options["kind"], left, right).base))
    return 0


def _sampler(config: RunConfig):
    if config.paths:
        inst = load_lcs(config.paths[0])
        return TwoLcsSampler(inst) if inst.q == 2 else QLcsSampler(inst)
    return FixedSetsSampler.cyclic(config.options["n"], config.options["k"])


def _run_lcs(config: RunConfig, out: Output) -> int:
    action = config.action
    if action == "validate":
        violation = validate_lcs(load_lcs(config.paths[0]))
        if violation is None:
            out.record("ok", valid=True)
            return 0
        out.record(f"violation element {violation.element}: {violation.reason}", valid=False,
                   element=violation.element, reason=violation.reason)
        return 1
    if action == "random":
        out.text(dump_lcs(random_qlcs(config.options["n"], config.options["q"], config.seed)))
    elif action == "hadamard":
        out.text(dump_lcs(hadamard_spanoid(config.options["k"])))
    elif action == "spanning-set":
        inst = load_lcs(config.paths[0])
        seeds = [task_seed(config.seed, r) for r in range(config.options["runs"])]
        rows = spanning_rows(inst, seeds, config.workers)
        out.table(SPANNING_HEADER, [row.csv() for row in rows])
    else:
        sampler = _sampler(config)
        steps = config.options.get("steps") or sampler.default_steps()
        if config.options.get("audit"):
            report = audit_sampler(sampler, seed=task_seed(config.seed, 1))
            (logger.info if report.passed else logger.warning)(f"Sampler audit {'passed' if report.passed else 'FAILED'}")
        counts = graph_process_run(sampler, steps, config.seed)
        out.table(PROCESS_HEADER, [f"{step},{count}" for step, count in enumerate(counts, start=1)])
    return 0


def _run_paper(config: RunConfig, out: Output) -> int:
    only = _int_list(config.options.get("only") or "", "--only")
    unknown = [c for c in only if c not in TITLES]
    if unknown:
        raise FormatError(f"unknown criteria {unknown}; choose from {sorted(TITLES)}")
    state = run_repro(only, config.options["corpus_size"], config.seed, config.workers)
    out.text(state["report"])
    return 0 if all(result.passed for result in state["results"]) else 1


COMMANDS = {
    "span": _run_span,
    "rank": _run_rank,
    "closed-sets": _run_closed_sets,
    "open-sets": _run_open_sets,
    "represent": _run_represent,
    "lp": _run_lp,
    "code": _run_code,
    "product": _run_product,
    "lcs": _run_lcs,
    "paper": _run_paper,
}


def run(config: RunConfig, stream: Optional[TextIO] = None) -> int:
    """Execute one command; returns the exit status of the error taxonomy"""
    stream = stream or sys.stdout
    out = Output(config.format)
    try:
        reset_settings()
        configure(**config.caps)
        status = COMMANDS[config.command](config, out)
        out.flush(config.output, stream)
    except SpanoidError as e:
        logger.error(f"{config.command}: {e}")
        return e.exit_code
    return status


class CliParser(argparse.ArgumentParser):
    """Usage errors exit with the parse-error status"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(3, f"{self.prog}: error: {message}\n")


def _spanoid_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("spanoid", help="spanoid v1 file, or @pentagon / @xu")


def _run_options(parser: argparse.ArgumentParser, top: bool) -> None:
    """Options accepted before or after the subcommand; only the top level sets defaults"""
    def default(value):
        return value if top else argparse.SUPPRESS

    parser.add_argument("-v", "--verbose", action="store_true", default=default(False), help="debug logging on stderr")
    parser.add_argument("-q", "--quiet", action="store_true", default=default(False), help="warnings only on stderr")
    parser.add_argument("--seed", type=int, default=default(0), help="global seed, 0..2^64-1 (default 0)")
    parser.add_argument("--workers", type=int, default=default(1), help="threads for independent seeded runs")
    parser.add_argument("-o", "--output", default=default(None), help="write stdout to this file")
    parser.add_argument("--format", choices=["text", "csv", "json-lines"], default=default(None),
                        help="record format (default text; csv for experiment tables)")
    for field_name, flag in CAP_FLAGS.items():
        parser.add_argument(flag, dest=field_name, type=int, default=default(None),
                            help=f"override the {field_name} setting")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="spanoid-lab", description="Spanoid rank, LP relaxations, codes, products and LCS experiments")
    _run_options(parser, top=True)
    shared = CliParser(add_help=False)
    _run_options(shared, top=False)
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    p = commands.add_parser("span", help="closure of a set", parents=[shared])
    _spanoid_arg(p)
    p.add_argument("--set", required=True, help="comma-separated elements, e.g. 1,2")

    p = commands.add_parser("rank", help="exact rank with a spanning witness", parents=[shared])
    _spanoid_arg(p)
    p.add_argument("--method", choices=[HITTING_SET, DIRECT_SEARCH, BRUTE_FORCE], default=None)

    p = commands.add_parser("closed-sets", help="all closed sets as a family file", parents=[shared])
    _spanoid_arg(p)

    p = commands.add_parser("open-sets", help="all open sets as a family file", parents=[shared])
    _spanoid_arg(p)
    p.add_argument("--minimal", action="store_true", help="only the minimal nonempty open sets")

    p = commands.add_parser("represent", help="set representation and its intersection dimension", parents=[shared])
    _spanoid_arg(p)
    p.add_argument("--flavor", choices=[INTERSECTION, UNION], default=INTERSECTION)

    lp = commands.add_parser("lp", help="LP relaxations of rank").add_subparsers(
        dest="action", required=True, parser_class=CliParser)
    p = lp.add_parser("cover", help="fractional hitting set of the minimal open sets", parents=[shared])
    _spanoid_arg(p)
    p.add_argument("--dump", action="store_true", help="print the LP before its value")
    p.add_argument("--dual", action="store_true", help="print the optimal dual weights")
    p = lp.add_parser("entropy", help="Shannon-type entropy LP", parents=[shared])
    _spanoid_arg(p)
    p.add_argument("--mode", choices=[ELEMENTAL, FULL, BOTH], default=ELEMENTAL)
    p.add_argument("--dump", action="store_true", help="print the LP before its value")
    p.add_argument("--profile", action="store_true", help="print the optimal set function")

    code = commands.add_parser("code", help="consistent codes").add_subparsers(
        dest="action", required=True, parser_class=CliParser)
    p = code.add_parser("check", help="check a code file against a spanoid", parents=[shared])
    _spanoid_arg(p)
    p.add_argument("code", help="code v1 file")
    for name, text in (("build-cover", "code of dimension lp_cover"),
                       ("sample-small", "seeded small-alphabet code from the cover dual"),
                       ("max-search", "maximum consistent code over a fixed alphabet")):
        p = code.add_parser(name, help=text, parents=[shared])
        _spanoid_arg(p)
        p.add_argument("--summary", action="store_true", help="print size, alphabet and dimension only")
        if name == "max-search":
            p.add_argument("--alphabet", type=int, required=True, help="alphabet size s")

    p = commands.add_parser("product", help="product of two spanoids", parents=[shared])
    p.add_argument("--kind", choices=list(KINDS), required=True)
    p.add_argument("left")
    p.add_argument("right")

    lcs = commands.add_parser("lcs", help="locally correctable spanoids").add_subparsers(
        dest="action", required=True, parser_class=CliParser)
    p = lcs.add_parser("validate", help="check the q-LCS invariants of an lcs file", parents=[shared])
    p.add_argument("lcs")
    p = lcs.add_parser("random", help="random q-LCS instance", parents=[shared])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, default=3)
    p = lcs.add_parser("hadamard", help="Hadamard 2-LCS on the nonzero k-bit vectors", parents=[shared])
    p.add_argument("--k", type=int, required=True)
    p = lcs.add_parser("spanning-set", help="CSV of seeded spanning-set runs", parents=[shared])
    p.add_argument("lcs")
    p.add_argument("--runs", type=int, default=1)
    p = lcs.add_parser("graph-process", help="CSV of source counts of the union graph process", parents=[shared])
    p.add_argument("lcs", nargs="?", help="lcs file; without it the cyclic fixed-sets sampler runs")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--steps", type=int, default=None, help="default ceil((4/alpha) ln n)")
    p.add_argument("--audit", action="store_true", help="audit the sampler's (alpha, beta) first")

    paper = commands.add_parser("paper", help="reproduction suite").add_subparsers(
        dest="action", required=True, parser_class=CliParser)
    p = paper.add_parser("repro", help="run the acceptance criteria and print a pass/fail table", parents=[shared])
    p.add_argument("--only", default=None, help="comma-separated criterion ids, e.g. 1,3")
    p.add_argument("--corpus-size", type=int, default=500, help="random spanoids for the sandwich check")
    return parser


PATH_ARGS = ("spanoid", "code", "left", "right", "lcs")
GLOBAL_ARGS = {"verbose", "quiet", "seed", "workers", "output", "format", "command", "action", *CAP_FLAGS}
TABLE_ACTIONS = {("lcs", "spanning-set"), ("lcs", "graph-process")}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = vars(args)
    paths = [values[name] for name in PATH_ARGS if values.get(name)]
    options = {k: v for k, v in values.items() if k not in GLOBAL_ARGS and k not in PATH_ARGS}
    fmt = args.format or ("csv" if (args.command, values.get("action")) in TABLE_ACTIONS else "text")
    return RunConfig(
        command=args.command,
        action=values.get("action"),
        paths=paths,
        options=options,
        seed=args.seed,
        workers=args.workers,
        output=args.output,
        format=fmt,
        caps={field_name: values[field_name] for field_name in CAP_FLAGS if values[field_name] is not None},
        verbosity=1 if args.verbose else -1 if args.quiet else 0,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Command-line entry point"""
    args = build_parser().parse_args(argv)
    level = {1: logging.DEBUG, 0: logging.INFO, -1: logging.WARNING}[1 if args.verbose else -1 if args.quiet else 0]
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
    except PydanticValidationError as e:
        logger.error(f"invalid options: {e}")
        return FormatError.exit_code
    logger.debug(f"Run config: {config}")
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
