"""First-order terms, their size measure and a size-stratified bijective encoding.

Terms are immutable: ``Var(i)`` is the variable x_i and ``App(f, args)`` an
application of a signature symbol.  Codes are ranks in the enumeration that
orders terms by size, then (inside one size) the variable first, then
applications by signature order and argument codes lexicographically.  Ranks
are computed arithmetically, so no stratum ever has to be materialised.
"""

from __future__ import annotations

import re
import struct
import threading
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence, Union

from .relations import FiniteRelation

# Two big-endian unsigned 32-bit fields per node of an order key.
_KEY_FIELD = struct.Struct(">II")


@dataclass(frozen=True)
class Var:
    index: int

    def __str__(self) -> str:
        return f"x{self.index}"


class App:
    """An application f(t_1..t_n).

    Applications are hash-consed: building the same term twice yields the same
    object, so equality and hashing are by identity (both run at C speed).
    The intern table keeps every term alive for the life of the process.
    """

    __slots__ = ("symbol", "args", "size")
    _table: dict = {}

    def __new__(cls, symbol: str, args: Sequence["Term"] = ()):
        args = tuple(args)
        key = (symbol, args)
        t = cls._table.get(key)
        if t is None:
            t = object.__new__(cls)
            object.__setattr__(t, "symbol", symbol)
            object.__setattr__(t, "args", args)
            object.__setattr__(t, "size", max(len(args), *(size(a) for a in args)) + 1 if args else 1)
            # setdefault is atomic, so racing constructors agree on one object
            t = cls._table.setdefault(key, t)
        return t

    def __setattr__(self, name, value):
        raise AttributeError("terms are immutable")

    def __reduce__(self):
        return (App, (self.symbol, self.args))

    def __repr__(self) -> str:
        return f"App({self.symbol!r}, {self.args!r})"

    def __str__(self) -> str:
        if not self.args:
            return self.symbol
        return f"{self.symbol}({','.join(map(str, self.args))})"


Term = Union[Var, App]


@dataclass(frozen=True)
class Signature:
    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.symbols]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate symbol in signature: {names}")
        for name, arity in self.symbols:
            if arity < 0:
                raise ValueError(f"negative arity for {name}")

    @classmethod
    def of(cls, *symbols: tuple[str, int]) -> "Signature":
        return cls(tuple(symbols))

    def arity(self, name: str) -> int:
        for sym, arity in self.symbols:
            if sym == name:
                return arity
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(sym == name for sym, _ in self.symbols)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.symbols)


def size(t: Term) -> int:
    """|x_i| = i and |f(t_1..t_n)| = max{n, |t_1|, .., |t_n|} + 1."""
    if isinstance(t, Var):
        return t.index
    return t.size


def subterms(t: Term) -> Iterator[Term]:
    """All subterms of t, t itself first (pre-order)."""
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)


def variables(t: Term) -> set[int]:
    return {s.index for s in subterms(t) if isinstance(s, Var)}


def is_ground(t: Term) -> bool:
    return not variables(t)


def check_term(signature: Signature, t: Term) -> None:
    """Raise ValueError unless every application in t respects its arity."""
    for s in subterms(t):
        if isinstance(s, App):
            if s.symbol not in signature:
                raise ValueError(f"unknown symbol {s.symbol!r}")
            if signature.arity(s.symbol) != len(s.args):
                raise ValueError(
                    f"arity mismatch: {s.symbol} expects "
                    f"{signature.arity(s.symbol)} arguments, got {len(s.args)}"
                )


class TermCodec:
    """Bijection between the terms over a signature and the naturals.

    ``h(n)`` is the number of terms of size at most n, so every term t obeys
    ``size(t) <= encode(t) < h(size(t))``.
    """

    def __init__(self, signature: Signature):
        self.signature = signature
        self._counts: list[int] = []  # _counts[n] = number of terms of size <= n
        self._lock = threading.Lock()
        self._encode_cache: dict[Term, int] = {}
        self._decode_cache: dict[int, Term] = {}
        self._key_cache: dict[Term, tuple] = {}
        self._rank = {name: i for i, name in enumerate(signature.names)}

    def __repr__(self) -> str:
        return f"TermCodec({self.signature.names})"

    def count_upto(self, n: int) -> int:
        if n < 0:
            return 0
        if n >= len(self._counts):
            with self._lock:
                while len(self._counts) <= n:
                    m = len(self._counts)
                    prev = self._counts[m - 1] if m else 0
                    apps = sum(prev**arity for _, arity in self.signature.symbols if arity <= m - 1)
                    self._counts.append(m + 1 + apps)
        return self._counts[n]

    def count_exact(self, n: int) -> int:
        return self.count_upto(n) - self.count_upto(n - 1)

    def h(self, n: int) -> int:
        return self.count_upto(n)

    def _block(self, arity: int, n: int) -> tuple[int, int, int]:
        """(block length, A, B) for arity-`arity` applications of size exactly n.

        Argument codes range over [0, A); when B > 0 at least one argument
        must have code >= B (otherwise the application would be smaller).
        """
        if n < 1 or arity > n - 1:
            return 0, 0, 0
        a = self.count_upto(n - 1)
        if arity == n - 1:
            return a**arity, a, 0
        b = self.count_upto(n - 2)
        return a**arity - b**arity, a, b

    def order_key(self, t: Term) -> bytes:
        """Sort key that orders terms exactly as their codes, without computing codes.

        The key serialises (size, symbol rank) in pre-order, variables as
        (index, 0).  The serialisation is prefix-free, so byte-wise comparison
        is the lexicographic order on (size, symbol, argument keys).
        """
        key = self._key_cache.get(t)
        if key is None:
            if isinstance(t, Var):
                key = _KEY_FIELD.pack(t.index, 0)
            else:
                head = _KEY_FIELD.pack(t.size, 1 + self._rank[t.symbol])
                key = head + b"".join(self.order_key(a) for a in t.args)
            self._key_cache[t] = key
        return key

    def encode(self, t: Term) -> int:
        code = self._encode_cache.get(t)
        if code is not None:
            return code
        n = size(t)
        code = self.count_upto(n - 1)
        if isinstance(t, App):
            code += 1  # skip the variable x_n at the head of the stratum
            for name, arity in self.signature.symbols:
                if name == t.symbol:
                    break
                code += self._block(arity, n)[0]
            else:
                raise ValueError(f"unknown symbol {t.symbol!r}")
            if len(t.args) != self.signature.arity(t.symbol):
                raise ValueError(f"arity mismatch at {t}")
            _, a, b = self._block(len(t.args), n)
            code += _tuple_rank([self.encode(s) for s in t.args], a, b)
        self._encode_cache[t] = code
        return code

    def decode(self, code: int) -> Term:
        if code < 0:
            raise ValueError(f"negative code {code}")
        t = self._decode_cache.get(code)
        if t is not None:
            return t
        n = 0
        while self.count_upto(n) <= code:
            n += 1
        offset = code - self.count_upto(n - 1)
        if offset == 0:
            t = Var(n)
        else:
            offset -= 1
            for name, arity in self.signature.symbols:
                length, a, b = self._block(arity, n)
                if offset < length:
                    args = _tuple_unrank(offset, arity, a, b)
                    t = App(name, tuple(self.decode(c) for c in args))
                    break
                offset -= length
            else:  # pragma: no cover - the counts make this unreachable
                raise AssertionError(code)
        self._decode_cache[code] = t
        return t

    def enumerate_up_to(self, size_bound: int) -> list[Term]:
        """Every term of size <= size_bound, in code order."""
        return [self.decode(c) for c in range(self.count_upto(size_bound))]

    def subterm_relation(self) -> FiniteRelation:
        """Immediate-subterm relation on codes; successors are sorted and deduplicated."""

        def succ(code: int) -> tuple[int, ...]:
            t = self.decode(code)
            if isinstance(t, Var):
                return ()
            return tuple(sorted({self.encode(a) for a in t.args}))

        return FiniteRelation(succ, name="subterm")


def _tuple_rank(codes: Sequence[int], a: int, b: int) -> int:
    rank = 0
    big = False
    m = len(codes)
    for i, c in enumerate(codes):
        rest = m - i - 1
        full = a**rest
        if big:
            rank += c * full
        else:
            rank += max(0, c - b) * full + min(c, b) * (full - b**rest)
            big = c >= b
    return rank


def _tuple_unrank(rank: int, m: int, a: int, b: int) -> list[int]:
    codes = []
    big = False
    for i in range(m):
        rest = m - i - 1
        full = a**rest
        if big:
            c, rank = divmod(rank, full)
        else:
            small_width = full - b**rest
            if small_width and rank < b * small_width:
                c, rank = divmod(rank, small_width)
            else:
                rank -= b * small_width
                c, rank = divmod(rank, full)
                c += b
                big = True
        codes.append(c)
    return codes


_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z0-9_'.+*\-]+)|(?P<punct>[(),]))")
_VARNAME = re.compile(r"x(\d+)\Z")


class TermSyntaxError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(f"{message} at column {position + 1}")
        self.position = position
        self.text = text


def parse_term(
    text: str,
    signature: Signature | None = None,
    variables: Mapping[str, int] | None = None,
) -> Term:
    """Parse prefix syntax ``f(t1,t2)``.

    A bare name is a variable when it is a key of ``variables``; without a
    mapping, names of the form ``x<digits>`` are variables.  Any other bare
    name is a constant.
    """
    parser = _TermParser(text, signature, variables)
    t = parser.term()
    parser.skip_ws()
    if parser.pos != len(text):
        raise TermSyntaxError("expected end of input", parser.pos, text)
    return t


class _TermParser:
    def __init__(self, text, signature, variables):
        self.text = text
        self.pos = 0
        self.signature = signature
        self.variables = variables

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        m = _TOKEN.match(self.text, self.pos)
        if not m:
            return None, None
        return m, m.group("name") or m.group("punct")

    def expect(self, tok):
        m, got = self.peek()
        if got != tok:
            self.skip_ws()
            raise TermSyntaxError(f"expected {tok!r}", self.pos, self.text)
        self.pos = m.end()

    def term(self) -> Term:
        m, tok = self.peek()
        if m is None or m.group("name") is None:
            self.skip_ws()
            raise TermSyntaxError("expected a symbol or variable", self.pos, self.text)
        start = m.start("name")
        self.pos = m.end()
        name = tok
        _, nxt = self.peek()
        if nxt == "(":
            self.expect("(")
            args = [self.term()]
            while True:
                _, nxt = self.peek()
                if nxt == ",":
                    self.expect(",")
                    args.append(self.term())
                else:
                    break
            self.expect(")")
            return self._app(name, tuple(args), start)
        if self.variables is not None:
            if name in self.variables:
                return Var(self.variables[name])
        else:
            vm = _VARNAME.match(name)
            if vm:
                return Var(int(vm.group(1)))
        return self._app(name, (), start)

    def _app(self, name, args, start):
        if self.signature is not None:
            if name not in self.signature:
                what = "symbol" if args else "variable or constant"
                raise TermSyntaxError(f"undeclared {what} {name!r}", start, self.text)
            arity = self.signature.arity(name)
            if arity != len(args):
                raise TermSyntaxError(
                    f"arity mismatch: {name} expects {arity} arguments, got {len(args)}",
                    start,
                    self.text,
                )
        return App(name, args)
