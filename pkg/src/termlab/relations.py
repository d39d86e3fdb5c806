"""Finitely branching relations, chains and derivation trees.

Elements are arbitrary hashable values ordered by a sort key (naturals by
default, terms by their code order).  A derivation tree for x is the
depth-first flattening of x's successor tree with children visited in
increasing order; it exists exactly when x starts no infinite descending
chain.

Derivation trees of path orders are astronomically long even for tiny terms,
while the set of distinct elements they mention stays small.  ``DerivationTree``
therefore stores a flat sequence in a canonical compressed form: a list of
items, each either a bare element or a marker standing for the complete tree
of some element.  The form is a function of the flat sequence alone, so
comparing compressed forms is exactly comparing flat sequences.

The brute-force oracles at the bottom of this module are deliberately plain:
they are the reference the bar-recursive constructions are checked against.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass
from typing import Any, Callable, Container, Hashable, Iterable, Iterator, Mapping, Optional, Sequence

from gmpy2 import bit_set, bit_test, mpz

Element = Hashable
# Reachability sets are gmpy2 integers: union is a fast OR and, unlike
# Python ints, membership is a constant-time bit test.
_EMPTY_MASK = mpz(0)


class NonTerminating(Exception):
    """An infinite chain was detected, or the search ran out of fuel."""


class RelationSyntaxError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class FiniteRelation:
    """A decidable, finitely branching relation x > y.

    ``successors`` is either a table ``{x: [y, ...]}`` (missing keys have no
    successors) or a function computing the branching list.  Branching lists
    are normalised to strictly increasing tuples under ``key`` and cached.
    ``zero`` is the canonical padding element.
    """

    def __init__(
        self,
        successors: Mapping[Element, Iterable[Element]] | Callable[[Element], Iterable[Element]],
        predicate: Optional[Callable[[Element, Element], bool]] = None,
        key: Optional[Callable[[Element], Any]] = None,
        zero: Element = 0,
        name: str = "",
        presorted: bool = False,
    ):
        self.key = key
        self.zero = zero
        self.name = name
        self._predicate = predicate
        self._cache: dict[Element, tuple] = {}
        # presorted: the function already returns increasing duplicate-free tuples
        # (and memoises them), so they are used as they come
        self._presorted = presorted
        if callable(successors):
            self._fn = successors
            self._table = None
        else:
            self._fn = None
            self._table = {x: self._normalise(ys) for x, ys in successors.items()}
        # derived per-relation data, filled lazily
        self._lengths: dict[Element, int] = {}
        self._index: dict[Element, int] = {}
        self._reach: dict[Element, int] = {}
        self._wholes: dict = {}

    def __repr__(self) -> str:
        return f"FiniteRelation({self.name or '?'})"

    def _normalise(self, ys: Iterable[Element]) -> tuple:
        return tuple(sorted(set(ys), key=self.key))

    def successors(self, x: Element) -> tuple:
        if self._table is not None:
            return self._table.get(x, ())
        if self._presorted:
            return self._fn(x)
        ys = self._cache.get(x)
        if ys is None:
            ys = self._normalise(self._fn(x))
            self._cache[x] = ys
        return ys

    def holds(self, x: Element, y: Element) -> bool:
        if self._predicate is not None:
            return self._predicate(x, y)
        return y in self.successors(x)

    def __call__(self, x: Element, y: Element) -> bool:
        return self.holds(x, y)

    @property
    def table(self) -> Optional[dict]:
        return None if self._table is None else dict(self._table)

    def sort(self, xs: Iterable[Element]) -> list:
        return sorted(xs, key=self.key)

    # The helpers below assume the part of the relation they touch is acyclic;
    # callers establish that first (see ``closure``).

    def tree_length(self, x: Element) -> int:
        """Length of the flat derivation tree of x."""
        n = self._lengths.get(x)
        if n is None:
            for z in _postorder(self, x, known=self._lengths):
                self._lengths[z] = 1 + sum(self._lengths[y] for y in self.successors(z))
            n = self._lengths[x]
        return n

    def reaches(self, z: Element, y: Element) -> bool:
        """y is reachable from z in zero or more steps (y is below-or-equal z)."""
        if z == y:
            return True
        mask = self._reach_mask(z)
        # computing z's mask gives a slot to everything below z
        iy = self._index.get(y)
        return iy is not None and bit_test(mask, iy)

    def reach_test(self, z: Element) -> Callable[[Element], bool]:
        """``lambda y: self.reaches(z, y)`` with z's reachable set fetched once."""
        mask = self._reach_mask(z)
        index = self._index

        def test(y: Element) -> bool:
            if y == z:
                return True
            i = index.get(y)
            return i is not None and bit_test(mask, i)

        return test

    def _reach_mask(self, z: Element):
        """Bit set of the elements reachable from z, indexed by ``_slot``."""
        mask = self._reach.get(z)
        if mask is None:
            for w in _postorder(self, z, known=self._reach):
                m = bit_set(_EMPTY_MASK, self._slot(w))
                for y in self.successors(w):
                    m |= self._reach[y]
                self._reach[w] = m
            mask = self._reach[z]
        return mask

    def _slot(self, x: Element) -> int:
        i = self._index.get(x)
        if i is None:
            i = self._index[x] = len(self._index)
        return i


def _postorder(
    r: FiniteRelation, x: Element, fuel: Optional[int] = None, known: Container = frozenset()
) -> Iterator[Element]:
    """Distinct elements reachable from x, each after all of its successors.

    Elements in ``known`` are neither yielded nor entered.  Raises
    NonTerminating on a cycle, or once more than ``fuel`` distinct elements
    have been visited.
    """
    if x in known:
        return
    done: set = set()
    on_path: set = {x}
    stack = [(x, iter(r.successors(x)))]
    while stack:
        z, it = stack[-1]
        for y in it:
            if y in on_path:
                raise NonTerminating(f"cycle through {y}")
            if y not in done and y not in known:
                on_path.add(y)
                stack.append((y, iter(r.successors(y))))
                break
        else:
            stack.pop()
            on_path.discard(z)
            done.add(z)
            if fuel is not None and len(done) > fuel:
                raise NonTerminating("fuel exhausted")
            yield z


def closure(r: FiniteRelation, x: Element, fuel: Optional[int] = None) -> list:
    """All elements reachable from x (x included), successors first."""
    return list(_postorder(r, x, fuel))


@dataclass(frozen=True)
class Whole:
    """Item standing for the complete derivation tree of ``root``."""

    root: Element


class DerivationTree(Sequence):
    """A finite sequence of elements in canonical compressed form.

    Each item is either a bare element or ``Whole(y)``.  Reading right to
    left, every position whose suffix starts with the full tree of its element
    is folded into a ``Whole``; that rule fixes the form uniquely.
    """

    __slots__ = ("relation", "items", "_len", "_hash")

    def __init__(self, relation: FiniteRelation, items: Sequence = ()):
        self.relation = relation
        self.items = tuple(items)
        self._len: Optional[int] = None
        self._hash: Optional[int] = None

    # construction

    @classmethod
    def empty(cls, r: FiniteRelation) -> "DerivationTree":
        return cls(r, ())

    @classmethod
    def whole(cls, r: FiniteRelation, x: Element) -> "DerivationTree":
        d = r._wholes.get(x)
        if d is None:
            d = r._wholes[x] = cls(r, (Whole(x),))
        return d

    @classmethod
    def build(cls, r: FiniteRelation, head: Sequence[Element], blocks: Iterable["DerivationTree | Sequence"]) -> "DerivationTree":
        """head * blocks[0] * blocks[1] * ..., canonicalised."""
        stack: list = []
        for block in reversed(list(blocks)):
            _push_block(r, stack, block)
        for x in reversed(head):
            _push_atom(r, stack, x)
        stack.reverse()
        return cls(r, stack)

    @classmethod
    def from_flat(cls, r: FiniteRelation, flat: Iterable[Element]) -> "DerivationTree":
        return cls.build(r, list(flat), ())

    def __add__(self, other) -> "DerivationTree":
        return DerivationTree.build(self.relation, (), (self, other))

    # reading

    def is_whole(self, x: Element) -> bool:
        items = self.items
        return len(items) == 1 and type(items[0]) is Whole and items[0].root == x

    @property
    def length(self) -> int:
        """Number of entries; unlike ``len`` this works past the machine word size."""
        if self._len is None:
            r = self.relation
            self._len = sum(r.tree_length(i.root) if isinstance(i, Whole) else 1 for i in self.items)
        return self._len

    def __len__(self) -> int:
        return self.length

    def __iter__(self) -> Iterator[Element]:
        for item in self.items:
            if isinstance(item, Whole):
                yield from _flat_tree(self.relation, item.root)
            else:
                yield item

    def __getitem__(self, index):
        if isinstance(index, slice):
            start, stop, step = index.indices(self.length)
            return [self[i] for i in range(start, stop, step)]
        n = self.length
        if index < 0:
            index += n
        if not 0 <= index < n:
            raise IndexError("derivation tree index out of range")
        r = self.relation
        for item in self.items:
            if not isinstance(item, Whole):
                if index == 0:
                    return item
                index -= 1
                continue
            size = r.tree_length(item.root)
            if index >= size:
                index -= size
                continue
            z = item.root
            while index:
                index -= 1
                for y in r.successors(z):
                    size = r.tree_length(y)
                    if index < size:
                        z = y
                        break
                    index -= size
            return z
        raise IndexError(index)  # pragma: no cover

    def to_list(self, limit: Optional[int] = None) -> list:
        """The flat sequence, refusing to materialise more than ``limit`` entries."""
        if limit is not None and self.length > limit:
            raise OverflowError(f"derivation tree has {self.length} entries (limit {limit})")
        return list(self)

    def __eq__(self, other) -> bool:
        if isinstance(other, DerivationTree):
            if other.relation is self.relation:
                return self.items == other.items
            return self.length == other.length and all(a == b for a, b in zip(self, other))
        if isinstance(other, (list, tuple)):
            return self.length == len(other) and all(a == b for a, b in zip(self, other))
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.items)
        return self._hash

    def __repr__(self) -> str:
        if self.length <= 40:
            return f"DerivationTree({list(self)!r})"
        return f"DerivationTree(<{self.length} entries>, items={self.items!r})"


def _push_atom(r: FiniteRelation, stack: list, x: Element) -> None:
    """Push x in front of a reversed item stack, folding a complete tree."""
    ys = r.successors(x)
    k = len(ys)
    if k <= len(stack):
        top = stack[len(stack) - k :]
        if all(isinstance(it, Whole) and it.root == y for it, y in zip(reversed(top), ys)):
            del stack[len(stack) - k :]
            stack.append(Whole(x))
            return
    stack.append(x)


def _push_block(r: FiniteRelation, stack: list, block) -> None:
    if isinstance(block, DerivationTree) and block.relation is r:
        for item in reversed(block.items):
            if isinstance(item, Whole):
                stack.append(item)
            else:
                _push_atom(r, stack, item)
    else:
        for x in reversed(list(block)):
            _push_atom(r, stack, x)


def _flat_tree(r: FiniteRelation, x: Element) -> Iterator[Element]:
    stack = [iter((x,))]
    while stack:
        for z in stack[-1]:
            yield z
            stack.append(iter(r.successors(z)))
            break
        else:
            stack.pop()


def length(d) -> int:
    """Length of a plain sequence or a compressed tree, without overflow."""
    return d.length if isinstance(d, DerivationTree) else len(d)


def as_tree(r: FiniteRelation, d) -> DerivationTree:
    if isinstance(d, DerivationTree) and d.relation is r:
        return d
    return DerivationTree.from_flat(r, d)


def is_chain(r: FiniteRelation, a: Sequence[Element]) -> bool:
    return all(r.holds(a[i], a[i + 1]) for i in range(len(a) - 1))


def parse_tree(r: FiniteRelation, d: Sequence[Element], pos: int, x: Element) -> Optional[int]:
    """Consume a derivation tree for x from d[pos:]; return the end position or None."""
    if pos >= len(d) or d[pos] != x:
        return None
    pos += 1
    for y in r.successors(x):
        pos = parse_tree(r, d, pos, y)
        if pos is None:
            return None
    return pos


def check_tree(r: FiniteRelation, x: Element, d) -> bool:
    """T(x, d): d is exactly the derivation tree of x."""
    if isinstance(d, DerivationTree) and d.relation is r:
        return d.is_whole(x)
    d = list(d)
    _ensure_recursion(len(d))
    return parse_tree(r, d, 0, x) == len(d)


def subtree_of(r: FiniteRelation, d, y: Element):
    """The first contiguous slice of d that is a derivation tree for y, else empty.

    Plain sequences are scanned directly.  On a compressed tree a bare element
    never starts a complete tree (it would have been folded), and inside a
    complete tree z every occurrence of y starts y's tree, so the answer is
    y's tree exactly when some folded item reaches y.
    """
    if isinstance(d, DerivationTree) and d.relation is r:
        for item in d.items:
            if isinstance(item, Whole) and r.reaches(item.root, y):
                return DerivationTree.whole(r, y)
        return DerivationTree.empty(r)
    d = list(d)
    _ensure_recursion(len(d))
    for start, z in enumerate(d):
        if z == y:
            end = parse_tree(r, d, start, y)
            if end is not None:
                return d[start:end]
    return []


def concat(blocks: Iterable[Sequence[Element]]) -> list:
    """Iterated concatenation of a list of plain sequences."""
    return list(itertools.chain.from_iterable(blocks))


def dc_oracle(r: FiniteRelation, x: Element, fuel: int = 10**6) -> int:
    """Length of the longest chain x > a_1 > ... > a_n, by exhaustive search.

    ``fuel`` bounds the number of distinct elements visited.
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    longest: dict = {}
    for z in _postorder(r, x, fuel):
        longest[z] = max((1 + longest[y] for y in r.successors(z)), default=0)
    return longest[x]


def dfs_tree_oracle(r: FiniteRelation, x: Element, fuel: int = 10**6) -> DerivationTree:
    """The derivation tree of x found by plain depth-first traversal.

    The traversal visits each distinct element once; the result is the folded
    tree of x, whose flat form is the depth-first listing.  ``fuel`` bounds the
    number of distinct elements visited.
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    for _ in _postorder(r, x, fuel):
        pass
    return DerivationTree.whole(r, x)


def dfs_tree_flat(r: FiniteRelation, x: Element, fuel: int = 10**6) -> list:
    """Naive flat depth-first listing, for small relations; ``fuel`` caps its length."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    out: list = []
    on_path: set = set()

    def visit(z):
        if z in on_path:
            raise NonTerminating(f"cycle through {z}")
        out.append(z)
        if len(out) > fuel:
            raise NonTerminating("derivation tree longer than fuel")
        on_path.add(z)
        for y in r.successors(z):
            visit(y)
        on_path.discard(z)

    _ensure_recursion(min(fuel, 10**5))
    visit(x)
    return out


def _ensure_recursion(depth: int) -> None:
    want = depth + 1000
    if sys.getrecursionlimit() < want:
        sys.setrecursionlimit(want)


def parse_relation_fixture(text: str) -> dict[str, FiniteRelation]:
    """Parse the line-oriented fixture format.

    A ``REL`` header opens the main relation; ``SUB`` and ``LIFT`` open the
    subterm-style relation and the lifting.  Body lines read ``x: y1 y2 ...``
    with strictly increasing successors.  ``#`` starts a comment.
    """
    tables: dict[str, dict[int, list[int]]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line in ("REL", "SUB", "LIFT"):
            if line in tables:
                raise RelationSyntaxError(f"duplicate {line} section", lineno)
            current = line
            tables[line] = {}
            continue
        if current is None:
            raise RelationSyntaxError("expected REL header", lineno)
        head, sep, rest = line.partition(":")
        if not sep:
            raise RelationSyntaxError("expected 'x: y1 y2 ...'", lineno)
        try:
            x = int(head)
            ys = [int(tok) for tok in rest.split()]
        except ValueError as exc:
            raise RelationSyntaxError(f"not a natural number ({exc})", lineno) from None
        if x < 0 or any(y < 0 for y in ys):
            raise RelationSyntaxError("elements must be natural numbers", lineno)
        if x in tables[current]:
            raise RelationSyntaxError(f"element {x} listed twice", lineno)
        for a, b in zip(ys, ys[1:]):
            if a == b:
                raise RelationSyntaxError(f"duplicate successor {a}", lineno)
            if a > b:
                raise RelationSyntaxError(f"successors out of order ({a} before {b})", lineno)
        tables[current][x] = ys
    if "REL" not in tables:
        raise RelationSyntaxError("missing REL section", max(1, len(text.splitlines())))
    names = {"REL": "succ", "SUB": "sub", "LIFT": "lift"}
    return {names[k]: FiniteRelation(v, name=names[k]) for k, v in tables.items()}


def format_relation(r: FiniteRelation, header: str = "REL") -> str:
    table = r.table
    if table is None:
        raise ValueError("only table-backed relations can be written out")
    lines = [header]
    for x in sorted(table):
        lines.append(f"{x}: {' '.join(map(str, table[x]))}".rstrip())
    return "\n".join(lines) + "\n"
