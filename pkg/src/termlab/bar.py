"""Spector bar recursion over finite sequences and the simple derivation functional.

Infinite sequences only ever appear as a finite prefix padded with a fixed
zero element, so they are represented that way (``Ext``).  Bar recursion

    B(a) = g(a)                    if omega(ext(a)) < |a|
    B(a) = h(a)(lambda x: B(a*x))  otherwise

is run literally, with a fuel bound on how far a may grow past its start.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Generic, Hashable, Sequence, TypeVar

from .relations import DerivationTree, FiniteRelation, _ensure_recursion

T = TypeVar("T")


class FuelExhausted(Exception):
    """A bounded search or recursion ran out of fuel before it could finish."""


@dataclass(frozen=True)
class Ext(Generic[T]):
    """The infinite sequence prefix, zero, zero, ..."""

    prefix: tuple
    zero: Any = 0

    def __getitem__(self, i: int):
        if i < 0:
            raise IndexError(i)
        return self.prefix[i] if i < len(self.prefix) else self.zero

    def __iter__(self):
        # without this, the __getitem__ protocol would iterate forever
        raise TypeError("Ext is infinite; iterate over .prefix instead")


def ext(a: Sequence, zero: Any = 0) -> Ext:
    return Ext(tuple(a), zero)


@dataclass
class Modulus:
    """A function from infinite (zero-padded) sequences to naturals."""

    fn: Callable[[Ext], int]
    fuel: int = 10**6
    name: str = ""
    calls: int = field(default=0, compare=False)

    def eval(self, alpha: Ext) -> int:
        self.calls += 1
        return self.fn(alpha)

    def __call__(self, alpha: Ext) -> int:
        return self.eval(alpha)


def constant_modulus(n: int) -> Modulus:
    return Modulus(lambda alpha: n, name=f"const{n}")


@dataclass
class BarRecInstance:
    omega: Modulus
    g: Callable[[tuple], Any]
    h: Callable[[tuple, Callable[[Any], Any]], Any]
    zero: Any = 0


@dataclass
class BarStats:
    """Recursion statistics from one bar_recurse run."""

    calls: int = 0
    max_length: int = 0


def bar_recurse(inst: BarRecInstance, a: Sequence, fuel: int = 10**6, stats: BarStats | None = None):
    """B(a) by its defining equation; raises FuelExhausted past ``fuel`` extensions."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    base = len(a)
    stats = stats if stats is not None else BarStats()
    _ensure_recursion(4 * min(fuel, 10**5))

    def B(seq: tuple):
        stats.calls += 1
        stats.max_length = max(stats.max_length, len(seq))
        if len(seq) - base > fuel:
            raise FuelExhausted(f"bar recursion passed length {base + fuel} without reaching the bar")
        if inst.omega.eval(Ext(seq, inst.zero)) < len(seq):
            return inst.g(seq)
        return inst.h(seq, lambda x: B(seq + (x,)))

    return B(tuple(a))


def search_modulus(r: FiniteRelation, fuel: int = 10**6) -> Modulus:
    """omega(alpha) = least i+1 with alpha_i not above alpha_{i+1}.

    On zero-padded sequences this terminates as soon as the padding is
    reached, provided the zero element is not above itself.
    """

    def fn(alpha: Ext) -> int:
        for i in range(fuel):
            if not r.holds(alpha[i], alpha[i + 1]):
                return i + 1
        raise FuelExhausted(f"no descent break within {fuel} positions")

    return Modulus(fn, fuel, name=f"search({r.name})")


def psi_simple(c: FiniteRelation, omega: Modulus, a: Sequence, fuel: int = 10**6) -> DerivationTree:
    """The derivation functional: [] on the empty sequence and past the bar,
    otherwise last(a) followed by the trees of its successors."""

    def g(seq):
        return DerivationTree.empty(c)

    def h(seq, p):
        if not seq:
            return DerivationTree.empty(c)
        x = seq[-1]
        return DerivationTree.build(c, (x,), [p(y) for y in c.successors(x)])

    return bar_recurse(BarRecInstance(omega, g, h, zero=c.zero), a, fuel)


def chains(r: FiniteRelation, starts: Sequence[Hashable], max_len: int, limit: int | None = None) -> list[tuple]:
    """Nonempty r-chains from the given starts, up to ``max_len`` elements, in DFS order."""
    out: list[tuple] = []

    def grow(a: tuple):
        if limit is not None and len(out) >= limit:
            return
        out.append(a)
        if len(a) < max_len:
            for y in r.successors(a[-1]):
                grow(a + (y,))

    for x in starts:
        grow((x,))
    return out[:limit] if limit is not None else out
