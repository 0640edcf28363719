"""Regex front-end: a small byte-oriented parser and Glushkov position automaton."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .nfa import MAX_ALPHABET, HomogeneousNfa, NfaError, StartKind, Ste, SymbolClass


class RegexSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class EmptyLanguageError(NfaError):
    """The pattern has no symbol positions, so it can only match the empty string."""


@dataclass(frozen=True)
class Sym:
    cls: SymbolClass


@dataclass(frozen=True)
class Cat:
    parts: tuple["Node", ...]


@dataclass(frozen=True)
class Alt:
    parts: tuple["Node", ...]


@dataclass(frozen=True)
class Repeat:
    child: "Node"
    op: str  # one of '*', '+', '?'


Node = Union[Sym, Cat, Alt, Repeat]

_SPECIAL = set(b"()|*+?[.\\")
_DIGITS = frozenset(range(ord("0"), ord("9") + 1))
_WORD = frozenset(
    list(_DIGITS) + list(range(ord("a"), ord("z") + 1)) + list(range(ord("A"), ord("Z") + 1)) + [ord("_")]
)
_SPACE = frozenset(b" \t\n\r\f\v")
_SIMPLE_ESCAPES = {ord("n"): 10, ord("t"): 9, ord("r"): 13, ord("f"): 12, ord("v"): 11, ord("0"): 0}
_CLASS_ESCAPES = {ord("d"): _DIGITS, ord("w"): _WORD, ord("s"): _SPACE}


class _Parser:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def peek(self) -> int | None:
        return self.data[self.pos] if self.pos < len(self.data) else None

    def take(self) -> int:
        ch = self.data[self.pos]
        self.pos += 1
        return ch

    def parse(self) -> Node:
        if not self.data:
            raise RegexSyntaxError("empty pattern", 0)
        node = self.alternation()
        if self.pos != len(self.data):
            raise RegexSyntaxError("unbalanced ')'", self.pos)
        return node

    def alternation(self) -> Node:
        branches = [self.concatenation()]
        while self.peek() == ord("|"):
            self.take()
            branches.append(self.concatenation())
        return branches[0] if len(branches) == 1 else Alt(tuple(branches))

    def concatenation(self) -> Node:
        start = self.pos
        items: list[Node] = []
        while self.peek() is not None and self.peek() not in (ord("|"), ord(")")):
            items.append(self.repetition())
        if not items:
            raise RegexSyntaxError("empty subpattern", start)
        return items[0] if len(items) == 1 else Cat(tuple(items))

    def repetition(self) -> Node:
        node = self.atom()
        while self.peek() is not None and self.peek() in b"*+?":
            node = Repeat(node, chr(self.take()))
        return node

    def atom(self) -> Node:
        at = self.pos
        ch = self.take()
        if ch == ord("("):
            node = self.alternation()
            if self.peek() != ord(")"):
                raise RegexSyntaxError("missing ')'", self.pos)
            self.take()
            return node
        if ch in b"*+?":
            raise RegexSyntaxError("nothing to repeat", at)
        if ch == ord("["):
            return Sym(self.bracket(at))
        if ch == ord("."):
            return Sym(SymbolClass.any())
        if ch == ord("\\"):
            return Sym(self.escape(at))
        return Sym(SymbolClass.of([ch]))

    def escape(self, at: int) -> SymbolClass:
        if self.peek() is None:
            raise RegexSyntaxError("dangling backslash", at)
        ch = self.take()
        if ch == ord("x"):
            digits = self.data[self.pos:self.pos + 2]
            try:
                value = int(digits.decode("ascii"), 16) if len(digits) == 2 else None
            except ValueError:
                value = None
            if value is None:
                raise RegexSyntaxError("bad \\x escape", at)
            self.pos += 2
            return SymbolClass.of([value])
        if ch in _SIMPLE_ESCAPES:
            return SymbolClass.of([_SIMPLE_ESCAPES[ch]])
        if ch in _CLASS_ESCAPES:
            return SymbolClass(_CLASS_ESCAPES[ch])
        if ch + 32 in _CLASS_ESCAPES and chr(ch).isupper():
            return SymbolClass(_CLASS_ESCAPES[ch + 32], True)
        return SymbolClass.of([ch])

    def class_symbol(self, at: int) -> SymbolClass:
        ch = self.take()
        if ch == ord("\\"):
            return self.escape(self.pos - 1)
        return SymbolClass.of([ch])

    def bracket(self, at: int) -> SymbolClass:
        negated = False
        if self.peek() == ord("^"):
            self.take()
            negated = True
        members: set[int] = set()
        first = True
        while True:
            if self.peek() is None:
                raise RegexSyntaxError("unterminated character class", at)
            if self.peek() == ord("]") and not first:
                self.take()
                break
            first = False
            lo_at = self.pos
            lo = self.class_symbol(lo_at)
            if self.peek() == ord("-") and self.pos + 1 < len(self.data) and self.data[self.pos + 1] != ord("]"):
                self.take()
                hi = self.class_symbol(self.pos)
                if lo.negated or hi.negated or len(lo.members) != 1 or len(hi.members) != 1:
                    raise RegexSyntaxError("class escape used as range bound", lo_at)
                a, b = min(lo.members), min(hi.members)
                if a > b:
                    raise RegexSyntaxError("reversed range", lo_at)
                members.update(range(a, b + 1))
            elif lo.negated:
                members.update(set(range(MAX_ALPHABET)) - lo.members)
            else:
                members.update(lo.members)
        return SymbolClass(frozenset(members), negated)


def parse_regex(pattern: str | bytes) -> Node:
    """Parse literals, [..]/[^..] classes with ranges, '.', |, (), *, + and ?."""
    data = pattern.encode("latin-1") if isinstance(pattern, str) else pattern
    return _Parser(data).parse()


def _fold(node: Node) -> Node:
    """Collapse alternations of single-symbol branches into one class."""
    if isinstance(node, Sym):
        return node
    if isinstance(node, Repeat):
        return Repeat(_fold(node.child), node.op)
    parts = tuple(_fold(p) for p in node.parts)
    if isinstance(node, Alt) and parts and all(isinstance(p, Sym) for p in parts):
        cls = parts[0].cls
        for p in parts[1:]:
            cls = cls.union(p.cls)
        return Sym(cls)
    return type(node)(parts)


def glushkov_construct(
    tree: Node,
    alphabet_size: int = MAX_ALPHABET,
    start: StartKind = StartKind.START_OF_DATA,
) -> HomogeneousNfa:
    """One STE per symbol position; first positions start, last positions report."""
    classes: list[SymbolClass] = []
    follow: dict[int, set[int]] = {}

    def walk(node: Node) -> tuple[bool, set[int], set[int]]:
        if isinstance(node, Sym):
            p = len(classes)
            classes.append(node.cls)
            return False, {p}, {p}
        if isinstance(node, Alt):
            nullable, first, last = False, set(), set()
            for part in node.parts:
                n, f, l = walk(part)
                nullable |= n
                first |= f
                last |= l
            return nullable, first, last
        if isinstance(node, Cat):
            nullable, first, last = True, set(), set()
            for part in node.parts:
                n, f, l = walk(part)
                for p in last:
                    follow.setdefault(p, set()).update(f)
                first = first | f if nullable else first
                last = l | last if n else l
                nullable = nullable and n
            return nullable, first, last
        n, f, l = walk(node.child)
        if node.op in "*+":
            for p in l:
                follow.setdefault(p, set()).update(f)
        return (True if node.op in "*?" else n), f, l

    _, first, last = walk(_fold(tree))
    if not classes:
        raise EmptyLanguageError("pattern only matches the empty string")
    for pos, cls in enumerate(classes):
        bad = [s for s in cls.members if s >= alphabet_size]
        if bad:
            raise NfaError(f"position {pos}: symbol {min(bad)} outside alphabet of {alphabet_size}")
    states = [
        Ste(p, cls, start if p in first else StartKind.NONE, p in last)
        for p, cls in enumerate(classes)
    ]
    return HomogeneousNfa(alphabet_size, states, {p: d for p, d in follow.items() if d})


def compile_regex(
    pattern: str | bytes,
    alphabet_size: int = MAX_ALPHABET,
    start: StartKind = StartKind.START_OF_DATA,
) -> HomogeneousNfa:
    return glushkov_construct(parse_regex(pattern), alphabet_size, start)


def _sym_text(s: int, in_class: bool) -> str:
    c = chr(s)
    special = "]\\^-[" if in_class else "()|*+?[].\\"
    if 32 < s < 127 and c not in special:
        return c
    return f"\\x{s:02x}"


def to_pattern(node: Node) -> str:
    """Render a tree back to pattern text that parses to an equivalent tree."""
    if isinstance(node, Sym):
        cls = node.cls
        if cls.negated and not cls.members:
            return "."
        if not cls.negated and len(cls.members) == 1:
            return _sym_text(next(iter(cls.members)), False)
        body = "".join(_sym_text(s, True) for s in sorted(cls.members))
        return f"[{'^' if cls.negated else ''}{body}]"
    if isinstance(node, Repeat):
        inner = to_pattern(node.child)
        if not isinstance(node.child, Sym):
            inner = f"({inner})"
        return inner + node.op
    if isinstance(node, Cat):
        return "".join(
            f"({to_pattern(p)})" if isinstance(p, Alt) else to_pattern(p) for p in node.parts
        )
    return "|".join(to_pattern(p) for p in node.parts)
