"""The size-bounded multiset path order and its companions.

``t >_k s`` holds for t = f(t_1..t_n) when ``|s| <= |t| + k`` and either some
argument t_i equals or dominates s, or t lifts over s:

* (i)  s = g(s_1..s_m) with f above g in the precedence and t >_k s_j for all j;
* (ii) s = f(s_1..s_n), t >_k s_j for all j, and s differs from t in exactly
  one argument position i, where t_i >_k s_i.

Variables are never greater than anything.  Because of the size guard every
term has finitely many smaller terms; ``mpo_branching`` lists them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Sequence

from .relations import DerivationTree, FiniteRelation, Whole, length
from .terms import App, Term, TermCodec, Var, size

SubtreeVector = Sequence  # one derivation tree per distinct immediate subterm


class PrecedenceError(ValueError):
    pass


@dataclass(frozen=True)
class Precedence:
    """A strict order on symbols, stored as its transitive closure."""

    pairs: frozenset[tuple[str, str]] = frozenset()

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "Precedence":
        closure = set(pairs)
        while True:
            extra = {(a, d) for a, b in closure for c, d in closure if b == c} - closure
            if not extra:
                break
            closure |= extra
        loops = sorted(a for a, b in closure if a == b)
        if loops:
            raise PrecedenceError(f"precedence is cyclic through {loops[0]!r}")
        return cls(frozenset(closure))

    @classmethod
    def chain(cls, *symbols: str) -> "Precedence":
        return cls.from_pairs(zip(symbols, symbols[1:]))

    def gt(self, f: str, g: str) -> bool:
        return (f, g) in self.pairs

    def symbols(self) -> set[str]:
        return {s for pair in self.pairs for s in pair}


@dataclass(eq=False)
class MpoConfig:
    codec: TermCodec
    precedence: Precedence
    k: int
    _gt_memo: dict = field(default_factory=dict, repr=False)
    _below_memo: dict = field(default_factory=dict, repr=False)
    _views: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be non-negative")


def mpo_gt(cfg: MpoConfig, t: Term, s: Term) -> bool:
    key = (t, s)
    hit = cfg._gt_memo.get(key)
    if hit is not None:
        return hit
    if isinstance(t, Var) or size(s) > cfg.k + size(t):
        result = False
    else:
        result = any(ti == s or mpo_gt(cfg, ti, s) for ti in t.args) or mpo_lift_gt(cfg, t, s)
    cfg._gt_memo[key] = result
    return result


def mpo_ge(cfg: MpoConfig, t: Term, s: Term) -> bool:
    return t == s or mpo_gt(cfg, t, s)


def mpo_lift_gt(cfg: MpoConfig, t: Term, s: Term) -> bool:
    if isinstance(t, Var) or isinstance(s, Var):
        return False
    if cfg.precedence.gt(t.symbol, s.symbol):
        return all(mpo_gt(cfg, t, si) for si in s.args)
    if t.symbol != s.symbol or len(t.args) != len(s.args):
        return False
    diff = [i for i, (ti, si) in enumerate(zip(t.args, s.args)) if ti != si]
    if len(diff) != 1:
        return False
    i = diff[0]
    return mpo_gt(cfg, t.args[i], s.args[i]) and all(mpo_gt(cfg, t, si) for si in s.args)


def _below(cfg: MpoConfig, t: Term) -> tuple[Term, ...]:
    """Every s with t >_k s in code order, generated clause by clause.

    Completeness is checked against ``mpo_branching_bruteforce`` in the tests.
    """
    hit = cfg._below_memo.get(t)
    if hit is not None:
        return hit
    if isinstance(t, Var):
        cfg._below_memo[t] = ()
        return ()
    bound = size(t) + cfg.k
    found: set[Term] = set()
    for i, ti in enumerate(t.args):
        lower = _below(cfg, ti)
        found.add(ti)
        found.update(lower)
        for si in lower:
            s = App(t.symbol, t.args[:i] + (si,) + t.args[i + 1 :])
            if s.size <= bound:
                found.add(s)
    heads = [
        (g, arity)
        for g, arity in cfg.codec.signature.symbols
        if cfg.precedence.gt(t.symbol, g)
    ]
    if heads:
        # clause (i) feeds on its own output: build it one size stratum at a time
        strata: dict[int, list[Term]] = {}
        for s in found:
            strata.setdefault(size(s), []).append(s)
        pool: list[Term] = []
        for level in range(1, bound + 1):
            pool.extend(strata.get(level - 2, ()))
            newest = strata.get(level - 1, [])
            for g, arity in heads:
                if arity > level - 1:
                    continue
                if arity == level - 1:
                    choices = itertools.product(pool + newest, repeat=arity)
                else:
                    choices = _tuples_touching(pool, newest, arity)
                for args in choices:
                    s = App(g, args)
                    if s not in found:
                        found.add(s)
                        strata.setdefault(s.size, []).append(s)
    result = tuple(sorted(found, key=cfg.codec.order_key))
    cfg._below_memo[t] = result
    return result


def _tuples_touching(old: list, newest: list, arity: int):
    """Tuples over old + newest with at least one component from newest."""
    for i in range(arity):
        for args in itertools.product(old, repeat=i):
            for mid in newest:
                for rest in itertools.product(old + newest, repeat=arity - i - 1):
                    yield args + (mid,) + rest


def mpo_branching(cfg: MpoConfig, t: Term) -> list[Term]:
    """All s with t >_k s, in code order."""
    return list(_below(cfg, t))


def mpo_branching_bruteforce(cfg: MpoConfig, t: Term) -> list[Term]:
    """Reference branching: filter every term of size <= |t| + k.  Small sizes only."""
    if isinstance(t, Var):
        return []
    return [s for s in cfg.codec.enumerate_up_to(size(t) + cfg.k) if mpo_gt(cfg, t, s)]


def arg_trees(cfg: MpoConfig, t: Term, u: SubtreeVector) -> list:
    """The tree u assigns to each argument position of t.

    u is indexed like the sorted, deduplicated immediate subterms of t;
    entries missing from a malformed u read as the empty tree.
    """
    if isinstance(t, Var):
        return []
    subs = sorted(set(t.args), key=cfg.codec.order_key)
    out = []
    for a in t.args:
        idx = subs.index(a)
        out.append(u[idx] if idx < len(u) else ())
    return out


# Flattening beyond this is refused rather than attempted.
SLICE_FLAT_LIMIT = 10**6


def is_slice(small, big) -> bool:
    """small occurs as a contiguous block of big.

    Works on plain sequences and on compressed derivation trees.  A complete
    tree of y sits inside a compressed sequence exactly when one of its folded
    items reaches y.
    """
    if length(small) == 0:
        return True
    if length(small) > length(big):
        return False
    if isinstance(small, DerivationTree) and isinstance(big, DerivationTree):
        r = big.relation
        if small.relation is r and len(small.items) == 1 and isinstance(small.items[0], Whole):
            y = small.items[0].root
            # a bare y in big never starts its complete tree (it would be folded)
            return any(isinstance(i, Whole) and r.reaches(i.root, y) for i in big.items)
        if small.relation is r and small.items == big.items:
            return True
    small = _flat(small)
    big = _flat(big)
    n = len(small)
    first = small[0]
    for i in range(len(big) - n + 1):
        if big[i] == first and big[i : i + n] == small:
            return True
    return False


def _flat(d) -> list:
    if isinstance(d, DerivationTree):
        return d.to_list(SLICE_FLAT_LIMIT)
    return list(d)


def _frozen(d):
    return d if isinstance(d, DerivationTree) else tuple(d)


def is_strict_slice(small, big) -> bool:
    return length(small) < length(big) and is_slice(small, big)


def measure_gt(cfg: MpoConfig, x: tuple, y: tuple) -> bool:
    """(t, u) is measure-greater than (s, v)."""
    t, u = x
    s, v = y
    if isinstance(t, Var) or isinstance(s, Var):
        return False
    if cfg.precedence.gt(t.symbol, s.symbol):
        return True
    if t.symbol != s.symbol or len(t.args) != len(s.args):
        return False
    us, vs = arg_trees(cfg, t, u), arg_trees(cfg, s, v)
    for i in range(len(us)):
        if is_strict_slice(vs[i], us[i]) and all(
            is_slice(vs[j], us[j]) for j in range(len(us)) if j != i
        ):
            return True
    return False


def measure_wf_check(
    cfg: MpoConfig, universe: Sequence[tuple[Term, SubtreeVector]]
) -> bool:
    """True iff measure_gt has no cycle on the given finite universe."""
    items = list(dict.fromkeys((t, tuple(map(_frozen, u))) for t, u in universe))
    graph = {
        i: {j for j, y in enumerate(items) if measure_gt(cfg, x, y)}
        for i, x in enumerate(items)
    }
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError:
        return False
    return True


# Relation views used by the abstract machinery.  Elements are terms ordered
# by code; ``code_views`` gives the same relations on codes for small universes.


def succ_relation(cfg: MpoConfig) -> FiniteRelation:
    """>_k as a finitely branching relation on terms."""
    rel = cfg._views.get("succ")
    if rel is None:
        rel = cfg._views["succ"] = FiniteRelation(
            lambda t: _below(cfg, t),
            presorted=True,
            predicate=lambda t, s: mpo_gt(cfg, t, s),
            key=cfg.codec.order_key,
            zero=Var(0),
            name=f"mpo_k{cfg.k}",
        )
    return rel


def subterm_relation(cfg: MpoConfig) -> FiniteRelation:
    rel = cfg._views.get("sub")
    if rel is None:
        rel = cfg._views["sub"] = FiniteRelation(
            lambda t: t.args if isinstance(t, App) else (),
            key=cfg.codec.order_key,
            zero=Var(0),
            name="subterm",
        )
    return rel


def mpo_triple(cfg: MpoConfig):
    """(>_k, immediate subterm, lifting) on terms, ready for the abstract layer."""
    from .abstract import RelationTriple

    return RelationTriple(
        succ=succ_relation(cfg),
        sub=subterm_relation(cfg),
        lift=lambda t, s: mpo_lift_gt(cfg, t, s),
    )


def mpo_measure(cfg: MpoConfig):
    from .abstract import MeasureRelation

    return MeasureRelation(lambda x, y: measure_gt(cfg, x, y), name=f"measure_k{cfg.k}")


def code_views(cfg: MpoConfig):
    """>_k, subterm and lifting on the codes of terms up to ``size_bound``.

    Successors of a code may leave the bound (they are at most k larger), so
    this is meant for checking agreement with the term-level relations on
    small universes, not for deep traversals.
    """
    from .abstract import RelationTriple

    enc, dec = cfg.codec.encode, cfg.codec.decode
    return RelationTriple(
        succ=FiniteRelation(
            lambda c: [enc(s) for s in _below(cfg, dec(c))],
            predicate=lambda c, d: mpo_gt(cfg, dec(c), dec(d)),
            name=f"mpo_k{cfg.k}_codes",
        ),
        sub=cfg.codec.subterm_relation(),
        lift=lambda c, d: mpo_lift_gt(cfg, dec(c), dec(d)),
    )
