"""Derivation functions from a decomposition of a finitely branching order.

The setting is a triple: the order ``succ`` (x > y), an inductively
wellfounded subterm-style relation ``sub`` and a lifting ``lift`` (x >> y).
A subtree vector u for x holds one derivation tree per sub-successor of x.

Two constructions compute derivation trees:

* ``psi_minimal`` / ``phi`` run bar recursion over pairs (x, u), stopping at
  a modulus of minimal wellfoundedness;
* ``gamma`` / ``gamma_tree`` recurse along a wellfounded measure relation on
  pairs instead, and need no modulus.

Both consult an auxiliary recursion R over ``sub`` which reuses a tree from the
current subtree vector whenever the requested element lies below one of the
current element's subterms.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Optional, Sequence

from .bar import BarRecInstance, BarStats, Ext, FuelExhausted, Modulus, bar_recurse
from .relations import (
    DerivationTree,
    FiniteRelation,
    NonTerminating,
    as_tree,
    check_tree,
    closure,
    subtree_of,
)

Pair = tuple  # (element, subtree vector)


@dataclass
class RelationTriple:
    succ: FiniteRelation
    sub: FiniteRelation
    lift: Callable[[Hashable, Hashable], bool]

    def lifts(self, x, y) -> bool:
        return bool(self.lift(x, y))


@dataclass
class MeasureRelation:
    """A decidable relation on pairs (element, subtree vector)."""

    rel: Callable[[Pair, Pair], bool]
    name: str = ""

    def __call__(self, x: Pair, y: Pair) -> bool:
        return bool(self.rel(x, y))


@dataclass
class MinimalModulus:
    """A modulus on paired sequences (elements, subtree vectors)."""

    fn: Callable[[Ext, Ext], int]
    fuel: int = 10**6
    calls: int = field(default=0, compare=False)

    def eval(self, alpha: Ext, beta: Ext) -> int:
        self.calls += 1
        return self.fn(alpha, beta)


def search_minimal_modulus(t: RelationTriple, fuel: int = 10**6) -> MinimalModulus:
    """omega(alpha, beta) = least i+1 with alpha_i not lifting to alpha_{i+1}.

    The subtree vectors are not consulted.  On padded sequences the search
    ends at the padding because the zero element does not lift to itself.
    """

    def fn(alpha: Ext, beta: Ext) -> int:
        for i in range(fuel):
            if not t.lifts(alpha[i], alpha[i + 1]):
                return i + 1
        raise FuelExhausted(f"no lifting break within {fuel} positions")

    return MinimalModulus(fn, fuel)


def fixture_triple(tables: dict) -> RelationTriple:
    """The triple of a parsed relation fixture; missing sections are empty."""
    succ = tables["succ"]
    sub = tables.get("sub") or FiniteRelation({}, name="sub")
    lift = tables.get("lift") or FiniteRelation({}, name="lift")
    return RelationTriple(succ, sub, lift.holds)


def lifting_measure(t: RelationTriple) -> MeasureRelation:
    """(x, u) above (y, v) iff x lifts to y; the vectors play no part."""
    return MeasureRelation(lambda p, q: t.lifts(p[0], q[0]), name="lift")


def fixture_universe(tables: dict) -> list:
    seen: set = set()
    for rel in tables.values():
        for x, ys in (rel.table or {}).items():
            seen.add(x)
            seen.update(ys)
    return sorted(seen)


def _vector(t: RelationTriple, u: Iterable) -> tuple:
    return tuple(as_tree(t.succ, d) for d in u)


def check_t_sub(t: RelationTriple, x, u: Sequence) -> bool:
    """u has one entry per sub-successor y_i of x, and each entry is y_i's tree."""
    ys = t.sub.successors(x)
    if len(u) != len(ys):
        return False
    return all(check_tree(t.succ, y, d) for y, d in zip(ys, u))


def true_vector(t: RelationTriple, x, fuel: int = 10**6) -> tuple:
    """The unique subtree vector u with T_sub(x, u), via the depth-first oracle."""
    from .relations import dfs_tree_oracle

    return tuple(dfs_tree_oracle(t.succ, y, fuel) for y in t.sub.successors(x))


@dataclass
class Violation:
    law: str
    witness: tuple

    def __str__(self) -> str:
        return f"{self.law}: {', '.join(map(str, self.witness))}"


def check_decomposition(t: RelationTriple, universe: Iterable) -> list[Violation]:
    """Exhaustively test the two decomposition laws on a finite universe.

    (i)  x > y implies x >> y, or z >= y for some sub-successor z of x;
    (ii) x >> y and y sub z imply x > z.
    """
    xs = list(dict.fromkeys(universe))
    report: list[Violation] = []
    for x in xs:
        below = t.sub.successors(x)
        for y in xs:
            if t.succ.holds(x, y):
                if not t.lifts(x, y) and not any(z == y or t.succ.holds(z, y) for z in below):
                    report.append(Violation("(i)", (x, y)))
            if t.lifts(x, y):
                for z in t.sub.successors(y):
                    if not t.succ.holds(x, z):
                        report.append(Violation("(ii)", (x, y, z)))
    return report


def hypothesis_check(t: RelationTriple, m: MeasureRelation, universe: Iterable, fuel: int = 10**6) -> list[Violation]:
    """Pairs with valid subtree vectors and x >> y whose measure does not descend.

    Every x has exactly one valid vector, so the candidate pairs are the
    lifting pairs of the universe, each with its true vectors.
    """
    xs = list(dict.fromkeys(universe))
    vec = {x: true_vector(t, x, fuel) for x in xs}
    report = []
    for x in xs:
        for y in xs:
            if t.lifts(x, y) and not m((x, vec[x]), (y, vec[y])):
                report.append(Violation("measure", (x, y)))
    return report


class _Frame:
    """The auxiliary recursion R of one (x, u), memoised over ``sub``.

    ``deeper(y, v)`` is consulted when y is not below a subterm of x.
    """

    def __init__(self, t: RelationTriple, x, u: tuple, deeper: Callable[[Any, tuple], DerivationTree]):
        self.t = t
        succ = t.succ
        # per subterm z_i: reachability test, and whether u_i is z_i's own tree
        self.subs = [
            (succ.reach_test(z), i, i < len(u) and u[i].is_whole(z))
            for i, z in enumerate(t.sub.successors(x))
        ]
        self.u = u
        self.deeper = deeper
        self.memo: dict = {}

    def R(self, y) -> DerivationTree:
        hit = self.memo.get(y)
        if hit is not None:
            return hit
        succ = self.t.succ
        for below, i, whole in self.subs:
            if below(y):
                if whole:
                    # the usual case: u_i is z_i's tree, which contains y's tree
                    d = DerivationTree.whole(succ, y)
                elif i < len(self.u):
                    d = subtree_of(succ, self.u[i], y)
                else:
                    d = DerivationTree.empty(succ)
                break
        else:
            v = tuple(self.R(z) for z in self.t.sub.successors(y))
            d = self.deeper(y, v)
        self.memo[y] = d
        return d


def psi_minimal(
    t: RelationTriple,
    omega: MinimalModulus,
    a: Sequence,
    b: Sequence[Sequence],
    fuel: int = 10**6,
    stats: Optional[BarStats] = None,
) -> DerivationTree:
    """Bar recursion over pairs: [] on the empty sequence or past the bar, else
    last(a) followed by R(y) for each successor y of last(a)."""
    if len(a) != len(b):
        raise ValueError("a and b must have the same length")
    succ = t.succ
    zero = (succ.zero, ())

    def mod(pairs: Ext) -> int:
        alpha = Ext(tuple(p[0] for p in pairs.prefix), zero[0])
        beta = Ext(tuple(p[1] for p in pairs.prefix), ())
        return omega.eval(alpha, beta)

    def g(seq):
        return DerivationTree.empty(succ)

    def h(seq, p):
        if not seq:
            return DerivationTree.empty(succ)
        x, u = seq[-1]
        frame = _Frame(t, x, u, lambda y, v: p((y, v)))
        return DerivationTree.build(succ, (x,), [frame.R(y) for y in succ.successors(x)])

    inst = BarRecInstance(Modulus(mod, omega.fuel), g, h, zero=zero)
    seq = tuple(zip(a, (_vector(t, u) for u in b)))
    return _deep(lambda: bar_recurse(inst, seq, fuel, stats))


def phi(t: RelationTriple, omega: MinimalModulus, x, fuel: int = 10**6) -> DerivationTree:
    """Phi(x) = psi_minimal([x], [the Phi-trees of x's sub-successors])."""
    memo: dict = {}

    def run(z):
        hit = memo.get(z)
        if hit is None:
            v = tuple(run(y) for y in t.sub.successors(z))
            hit = memo[z] = psi_minimal(t, omega, [z], [v], fuel)
        return hit

    return _deep(lambda: run(x))


class GammaEngine:
    """Gamma evaluated with one memo table for the lifetime of the engine.

    Gamma(x, u) = x followed by R(y) for each successor y of x, where R(y) is
    taken from u when y lies below a subterm of x, is Gamma(y, v) when the
    measure descends from (x, u) to (y, v), and is empty otherwise.
    ``fuel`` bounds the number of distinct Gamma evaluations.
    """

    def __init__(self, t: RelationTriple, m: MeasureRelation, fuel: int = 10**6):
        if fuel <= 0:
            raise ValueError("fuel must be positive")
        self.t = t
        self.m = m
        self.fuel = fuel
        self.memo: dict = {}
        self._active: set = set()
        self._trees: dict = {}

    def gamma(self, x, u: Sequence) -> DerivationTree:
        return _deep(lambda: self._gamma(x, _vector(self.t, u)))

    def _gamma(self, x, u: tuple) -> DerivationTree:
        key = (x, u)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if key in self._active:
            raise FuelExhausted(f"measure relation cycles at {x}")
        if len(self.memo) >= self.fuel:
            raise FuelExhausted(f"more than {self.fuel} gamma evaluations")
        self._active.add(key)
        try:
            frame = _Frame(self.t, x, u, lambda y, v: self._step(x, u, y, v))
            succ = self.t.succ
            d = DerivationTree.build(succ, (x,), [frame.R(y) for y in succ.successors(x)])
        finally:
            self._active.discard(key)
        self.memo[key] = d
        return d

    def _step(self, x, u, y, v) -> DerivationTree:
        if self.m((x, u), (y, v)):
            return self._gamma(y, v)
        return DerivationTree.empty(self.t.succ)

    def tree(self, x) -> DerivationTree:
        """Gamma(x, u) where u collects the Gamma-trees of x's sub-successors."""
        return _deep(lambda: self._tree(x))

    def _tree(self, x) -> DerivationTree:
        hit = self._trees.get(x)
        if hit is None:
            u = tuple(self._tree(y) for y in self.t.sub.successors(x))
            hit = self._trees[x] = self._gamma(x, u)
        return hit


def gamma(t: RelationTriple, m: MeasureRelation, x, u: Sequence, fuel: int = 10**6) -> DerivationTree:
    return GammaEngine(t, m, fuel).gamma(x, u)


def gamma_tree(t: RelationTriple, m: MeasureRelation, x, fuel: int = 10**6) -> DerivationTree:
    return GammaEngine(t, m, fuel).tree(x)


@dataclass
class Mismatch:
    prefix: tuple
    element: Any
    psi: DerivationTree
    gamma: DerivationTree


def lift_chains_to(t: RelationTriple, x, universe: Sequence, max_prefix: int) -> list[tuple]:
    """Prefixes a (possibly empty, at most max_prefix long) with a*x a lifting chain in the universe."""
    xs = list(dict.fromkeys(universe))
    above = {y: [z for z in xs if t.lifts(z, y)] for y in xs}
    out = [()]
    frontier = [()]
    for _ in range(max_prefix):
        nxt = []
        for a in frontier:
            head = a[0] if a else x
            for z in above.get(head, [z for z in xs if t.lifts(z, head)]):
                nxt.append((z,) + a)
        out.extend(nxt)
        frontier = nxt
    return out


def psi_gamma_agreement(
    t: RelationTriple,
    m: MeasureRelation,
    omega: MinimalModulus,
    samples: Iterable,
    max_prefix: int = 1,
    fuel: int = 10**6,
) -> list[Mismatch]:
    """Compare psi_minimal(a*x, b*u) with Gamma(x, u) for valid u and lifting prefixes."""
    xs = list(dict.fromkeys(samples))
    vec = {x: true_vector(t, x, fuel) for x in xs}
    engine = GammaEngine(t, m, fuel)
    report = []
    for x in xs:
        want = engine.gamma(x, vec[x])
        for a in lift_chains_to(t, x, xs, max_prefix):
            b = [vec[z] for z in a]
            got = psi_minimal(t, omega, list(a) + [x], b + [vec[x]], fuel)
            if got != want:
                report.append(Mismatch(a, x, got, want))
    return report


# Deep recursion runs on a worker thread with a large stack.
_STACK_BYTES = 512 * 1024 * 1024
_RECURSION = 200_000


def _deep(fn: Callable[[], Any]) -> Any:
    if getattr(_tls, "inside", False):
        return fn()
    box: dict = {}

    def work():
        _tls.inside = True
        try:
            box["value"] = fn()
        except BaseException as exc:  # re-raised on the calling thread
            box["error"] = exc

    import sys

    old_stack = threading.stack_size()
    old_limit = sys.getrecursionlimit()
    threading.stack_size(_STACK_BYTES)
    sys.setrecursionlimit(max(old_limit, _RECURSION))
    try:
        worker = threading.Thread(target=work, name="termlab-deep")
        worker.start()
    finally:
        threading.stack_size(old_stack)
    worker.join()
    if "error" in box:
        raise box["error"]
    return box["value"]


_tls = threading.local()
