"""Instruction grammar: parse recoloring instructions into an AST.

Two template families are recognized, in either order of content:

    <verb> <region part> <conjunction> <source part>
    use <source part> to <verb> <region part>

The source part names a design element class (with an optional color
attribute and quantifier); the region part is a free-form noun phrase with
an optional leading color adjective. Vocabulary lives in editable word
lists under ``lexicons/``.
"""

import difflib
import re
from dataclasses import dataclass
from pathlib import Path

from .bundle import GROUP_CLASSES, LEAF_CLASSES
from .colorcore import NONE_TERM, bin_key
from .errors import ParseError, PredictionError

_LEXICON_DIR = Path(__file__).parent / "lexicons"

# classes whose bare mention (no attribute) refers to a whole color group
_MULTI_COLOR_CLASSES = frozenset({"background", "text", "shape"})


def _read_lines(path):
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def _read_mapping(path):
    mapping = {}
    for line in _read_lines(path):
        canon, _, syns = line.partition(":")
        mapping[canon.strip()] = [s.strip() for s in syns.split(",") if s.strip()]
    return mapping


def _pluralize(phrase):
    head, _, last = phrase.rpartition(" ")
    plural = last + ("es" if last.endswith(("s", "sh", "ch", "x")) else "s")
    return f"{head} {plural}".strip()


@dataclass
class Lexicon:
    """Parsing vocabulary built from the word-list files."""

    elements: dict  # token phrase -> (canonical class, plural?)
    verbs: list  # token tuples, longest first
    conjunctions: frozenset
    colors: dict  # token -> canonical term
    fillers: frozenset

    @classmethod
    def load(cls, directory=_LEXICON_DIR):
        directory = Path(directory)
        element_map = {}
        for canon, syns in _read_mapping(directory / "elements.txt").items():
            if canon not in LEAF_CLASSES and canon not in GROUP_CLASSES:
                raise ParseError(f"lexicon names unknown class {canon!r}", code="bad-lexicon")
            for syn in syns:
                element_map[syn] = (canon, False)
                element_map[_pluralize(syn)] = (canon, True)
        verbs = [tuple(v.split()) for v in _read_lines(directory / "verbs.txt")]
        verbs.sort(key=len, reverse=True)
        colors = {}
        for canon, syns in _read_mapping(directory / "colors.txt").items():
            for syn in syns:
                colors[syn] = canon
        return cls(
            elements=element_map,
            verbs=verbs,
            conjunctions=frozenset(_read_lines(directory / "conjunctions.txt")),
            colors=colors,
            fillers=frozenset(_read_lines(directory / "fillers.txt")),
        )


DEFAULT_LEXICON = Lexicon.load()


@dataclass(frozen=True)
class SourceDescriptor:
    cls: str
    attr: str = NONE_TERM
    quantifier: str = "one"  # "one" | "all"

    def __post_init__(self):
        if self.cls == "photo":
            raise ParseError("the photo cannot be a source element", code="unknown-element-term")
        if self.quantifier == "all" and self.attr != NONE_TERM:
            object.__setattr__(self, "quantifier", "one")


@dataclass(frozen=True)
class RegionDescriptor:
    phrase: str
    color_adj: str = NONE_TERM

    def __post_init__(self):
        if not self.phrase.strip():
            raise ParseError("empty region phrase", code="empty-region-phrase")


@dataclass(frozen=True)
class InstructionAst:
    source: SourceDescriptor
    regions: tuple

    def __post_init__(self):
        if not self.regions:
            raise ParseError("instruction names no region", code="no-region-part")


_TOKEN_RE = re.compile(r"[a-z\-]+|,")


def tokenize(text):
    return _TOKEN_RE.findall(text.lower())


def _strip_fillers(tokens, lex):
    return [t for t in tokens if t not in lex.fillers]


def _match_verb(tokens, lex):
    """Length of the verb phrase at the front of ``tokens``, or 0."""
    for verb in lex.verbs:
        if tuple(tokens[: len(verb)]) == verb:
            return len(verb)
    return 0


def make_source_descriptor(cls, attr=NONE_TERM, explicit_all=False, plural=False):
    """Build a source descriptor with the shared quantifier rule: explicit
    "all"/plural forms, or a bare multi-color class (background, text,
    shape), quantify over every matching color."""
    if explicit_all or plural:
        quantifier = "all"
    elif attr == NONE_TERM and cls in _MULTI_COLOR_CLASSES:
        quantifier = "all"
    else:
        quantifier = "one"
    return SourceDescriptor(cls=cls, attr=attr, quantifier=quantifier)


def _parse_source(tokens, lex):
    toks = _strip_fillers([t for t in tokens if t != ","], lex)
    # "the color of the title" -> "title"
    while len(toks) >= 2 and toks[0] in ("color", "colour") and toks[1] == "of":
        toks = _strip_fillers(toks[2:], lex)
    explicit_all = False
    if toks and toks[0] == "all":
        explicit_all = True
        toks = toks[1:]
    attr = NONE_TERM
    if toks and toks[0] in lex.colors:
        attr = lex.colors[toks[0]]
        toks = toks[1:]
    if not toks:
        raise ParseError("instruction names no source element", code="no-source-part")
    phrase = " ".join(toks)
    hit = lex.elements.get(phrase)
    if hit is None:
        candidates = difflib.get_close_matches(phrase, lex.elements.keys(), n=1, cutoff=0.4)
        raise ParseError(
            f"unknown element term {phrase!r}",
            code="unknown-element-term",
            suggestion=candidates[0] if candidates else None,
        )
    canon, plural = hit
    return make_source_descriptor(canon, attr, explicit_all, plural)


def _parse_regions(tokens, lex):
    groups = []
    current = []
    for tok in tokens:
        if tok in (",", "and"):
            if current:
                groups.append(current)
            current = []
        else:
            current.append(tok)
    if current:
        groups.append(current)
    regions = []
    for group in groups:
        toks = _strip_fillers(group, lex)
        color_adj = NONE_TERM
        kept = []
        for tok in toks:
            if color_adj == NONE_TERM and tok in lex.colors:
                color_adj = lex.colors[tok]
            else:
                kept.append(tok)
        if not kept:
            if color_adj != NONE_TERM:
                raise ParseError(
                    f"region {' '.join(group)!r} is only a color word",
                    code="empty-region-phrase",
                )
            continue
        regions.append(RegionDescriptor(phrase=" ".join(kept), color_adj=color_adj))
    if not regions:
        raise ParseError("instruction names no region", code="no-region-part")
    return tuple(regions)


def parse_instruction(text, lexicon=DEFAULT_LEXICON):
    """Parse an instruction string into an :class:`InstructionAst`."""
    tokens = tokenize(text)
    if not tokens:
        raise ParseError("empty instruction", code="no-region-part")

    if tokens[0] in ("use", "using"):
        # use <source> to <verb> <region>
        for i in range(1, len(tokens)):
            if tokens[i] != "to":
                continue
            vlen = _match_verb(tokens[i + 1 :], lexicon)
            if vlen == 0:
                continue
            source = _parse_source(tokens[1:i], lexicon)
            regions = _parse_regions(tokens[i + 1 + vlen :], lexicon)
            return InstructionAst(source=source, regions=regions)
        raise ParseError("no recoloring verb after the source part", code="no-region-part")

    vlen = _match_verb(tokens, lexicon)
    if vlen == 0:
        raise ParseError(
            f"instruction does not start with a recoloring verb: {tokens[0]!r}",
            code="no-region-part",
        )
    rest = tokens[vlen:]
    last_error = None
    for i in range(len(rest) - 1, -1, -1):
        if rest[i] not in lexicon.conjunctions:
            continue
        try:
            source = _parse_source(rest[i + 1 :], lexicon)
        except ParseError as exc:
            last_error = exc
            continue
        regions = _parse_regions(rest[:i], lexicon)
        return InstructionAst(source=source, regions=regions)
    if last_error is not None:
        raise last_error
    raise ParseError("instruction names no source element", code="no-source-part")


def split_multi_region(ast):
    """One single-region AST per region descriptor, source duplicated."""
    return [InstructionAst(source=ast.source, regions=(region,)) for region in ast.regions]


def granularity_of(bundle, source):
    """``fine`` when the source descriptor resolves to exactly one color."""
    matched = bundle.elements_of(source.cls, source.attr)
    if not matched:
        raise PredictionError(
            f"no element matches {source.cls}"
            + (f" with color {source.attr}" if source.attr != NONE_TERM else ""),
            code="no-matching-element",
        )
    if source.attr != NONE_TERM:
        return "fine"
    distinct = {bin_key(bundle.element_color(el)) for el in matched}
    return "fine" if len(distinct) == 1 else "coarse"


def recognize_granularity(ast, bundle):
    return granularity_of(bundle, ast.source)
