import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from termlab.abstract import check_decomposition, true_vector
from termlab.mpo import (
    MpoConfig,
    Precedence,
    PrecedenceError,
    arg_trees,
    code_views,
    is_slice,
    is_strict_slice,
    measure_gt,
    measure_wf_check,
    mpo_branching,
    mpo_branching_bruteforce,
    mpo_ge,
    mpo_gt,
    mpo_lift_gt,
    mpo_triple,
)
from termlab.relations import dfs_tree_oracle
from termlab.terms import App, Signature, TermCodec, Var, size

SIG = Signature.of(("plus", 2), ("s", 1), ("0", 0))
PREC = Precedence.chain("plus", "s", "0")
Z = App("0")
x0, x1 = Var(0), Var(1)


def s(t):
    return App("s", (t,))


def plus(a, b):
    return App("plus", (a, b))


def cfg(k=3, prec=PREC, sig=SIG):
    return MpoConfig(TermCodec(sig), prec, k)


def reference_gt(k, prec, t, u):
    """Direct transcription of the order's clauses, without memo or generator."""
    if isinstance(t, Var) or size(u) > size(t) + k:
        return False
    if any(ti == u or reference_gt(k, prec, ti, u) for ti in t.args):
        return True
    return reference_lift(k, prec, t, u)


def reference_lift(k, prec, t, u):
    if isinstance(t, Var) or isinstance(u, Var):
        return False
    if prec.gt(t.symbol, u.symbol):
        return all(reference_gt(k, prec, t, ui) for ui in u.args)
    if t.symbol != u.symbol:
        return False
    changed = [i for i in range(len(t.args)) if t.args[i] != u.args[i]]
    return (
        len(changed) == 1
        and reference_gt(k, prec, t.args[changed[0]], u.args[changed[0]])
        and all(reference_gt(k, prec, t, ui) for ui in u.args)
    )


def test_precedence_closure_and_cycles():
    p = Precedence.from_pairs([("a", "b"), ("b", "c")])
    assert p.gt("a", "c") and not p.gt("c", "a")
    with pytest.raises(PrecedenceError):
        Precedence.from_pairs([("a", "b"), ("b", "a")])


@pytest.mark.parametrize(
    "t, u, expected",
    [
        (plus(s(x0), x1), s(plus(x0, x1)), True),
        (plus(Z, x1), x1, True),
        (plus(s(x0), x1), plus(s(x0), x1), False),
        (s(Z), Z, True),
        (Z, x0, False),
        (x1, x0, False),
        (s(x0), s(s(s(s(s(x0))))), False),
    ],
)
def test_mpo_gt_examples(t, u, expected):
    c = cfg()
    assert mpo_gt(c, t, u) is expected
    assert reference_gt(3, PREC, t, u) is expected


@pytest.mark.parametrize(
    "t, u, expected",
    [
        (plus(s(x0), x1), plus(x0, x1), True),
        (plus(s(x0), x1), plus(x0, x0), False),
        (s(s(x0)), s(x0), True),
            (s(x0), s(x1), False),
        (plus(x0, x1), s(x0), True),
        (plus(x0, x1), plus(x0, x1), False),
    ],
)
def test_mpo_lift_gt_examples(t, u, expected):
    assert mpo_lift_gt(cfg(), t, u) is expected


def test_lift_with_precedence_on_unary_symbols():
    sig = Signature.of(("f", 1), ("g", 1))
    c = cfg(k=1, prec=Precedence.chain("f", "g"), sig=sig)
    assert mpo_lift_gt(c, App("f", (x0,)), App("g", (x0,)))


def test_size_guard():
    c = cfg(k=0)
    big = s(s(s(Z)))
    assert not mpo_gt(c, plus(Z, Z), big)
    assert mpo_gt(cfg(k=1), plus(Z, Z), big)


# brute force enumerates every term of size <= |t| + k, which is 14 million at 5
BRUTE_FORCE_BOUND = 4


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_branching_matches_brute_force(k):
    c = cfg(k)
    for t in c.codec.enumerate_up_to(BRUTE_FORCE_BOUND - k):
        got = mpo_branching(c, t)
        assert got == mpo_branching_bruteforce(c, t)
        assert [c.codec.encode(u) for u in got] == sorted({c.codec.encode(u) for u in got})


def test_branching_of_minimal_constant_is_empty():
    c = cfg(0)
    assert mpo_branching(c, Z) == []
    assert mpo_branching(c, x1) == []


def test_order_properties_on_small_universe():
    small, big = cfg(2), cfg(3)
    universe = small.codec.enumerate_up_to(3)
    for t in universe:
        assert not mpo_gt(small, t, t)
        for u in universe:
            gt = mpo_gt(small, t, u)
            assert gt == reference_gt(2, PREC, t, u)
            if gt:
                assert size(u) <= size(t) + 2
                assert mpo_gt(big, t, u)
        if isinstance(t, App):
            assert all(mpo_ge(small, t, a) for a in t.args)


@pytest.mark.parametrize(
    "small, big, slice_, strict",
    [
        ([], [1, 2], True, True),
        (["a"], ["a", "b"], True, True),
        (["c"], ["c"], True, False),
        (["b", "a"], ["a", "b"], False, False),
        (["a", "c"], ["a", "b", "c"], False, False),
        (["a", "b", "c"], ["a", "b"], False, False),
    ],
)
def test_slices(small, big, slice_, strict):
    assert is_slice(small, big) is slice_
    assert is_strict_slice(small, big) is strict


def test_measure_examples():
    sig = Signature.of(("f", 1), ("g", 1), ("c", 0))
    c = cfg(prec=Precedence.chain("f", "g"), sig=sig)
    cc = App("c")
    f, g = App("f", (cc,)), App("g", (cc,))
    assert measure_gt(c, (f, [["z"]]), (g, [["q", "r", "s"]]))
    assert not measure_gt(c, (f, [["a"]]), (f, [["a"]]))
    assert not measure_gt(c, (x0, []), (f, []))
    h = Signature.of(("h", 2), ("a", 0), ("c", 0))
    ch = cfg(prec=Precedence(), sig=h)
    a, c_ = App("a"), App("c")
    t = App("h", (a, c_))
    assert measure_gt(ch, (t, [["a", "b"], ["c"]]), (t, [["a"], ["c"]]))
    assert not measure_gt(ch, (t, [["a"], ["c"]]), (t, [["a", "b"], ["c"]]))


def test_arg_trees_follow_positions():
    c = cfg()
    t = plus(s(Z), Z)
    # sorted distinct subterms are [0, s(0)]
    assert arg_trees(c, t, ["T0", "Ts"]) == ["Ts", "T0"]
    assert arg_trees(c, plus(Z, Z), ["T0"]) == ["T0", "T0"]


def test_measure_is_wellfounded_on_small_terms(cfg3):
    triple = mpo_triple(cfg3)
    universe = [(t, true_vector(triple, t)) for t in cfg3.codec.enumerate_up_to(3)]
    assert measure_wf_check(cfg3, universe)
    assert measure_wf_check(cfg3, [])


def test_measure_cycle_is_detected():
    sig = Signature.of(("f", 1), ("c", 0))
    c = cfg(prec=Precedence(), sig=sig)
    t = App("f", (App("c"),))
    # inject a symmetric pair through a reflexive precedence
    c.precedence = Precedence(frozenset({("f", "f")}))
    assert not measure_wf_check(c, [(t, [["a"]]), (t, [["b"]])])


def test_code_views_agree_with_term_views(cfg3):
    codes = code_views(cfg3)
    terms = mpo_triple(cfg3)
    codec = cfg3.codec
    universe = codec.enumerate_up_to(2)
    for t in universe:
        c = codec.encode(t)
        assert list(codes.succ.successors(c)) == [codec.encode(u) for u in terms.succ.successors(t)]
        assert list(codes.sub.successors(c)) == [codec.encode(u) for u in terms.sub.successors(t)]
        for u in universe:
            assert codes.lifts(c, codec.encode(u)) == terms.lifts(t, u)
    assert list(dfs_tree_oracle(codes.succ, codec.encode(s(Z)))) == [
        codec.encode(u) for u in dfs_tree_oracle(terms.succ, s(Z))
    ]


def test_decomposition_on_a_small_signature():
    sig = Signature.of(("f", 1), ("g", 1), ("c", 0))
    c = cfg(k=1, prec=Precedence.chain("f", "g", "c"), sig=sig)
    assert check_decomposition(mpo_triple(c), c.codec.enumerate_up_to(3)) == []


@st.composite
def ground(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return Z
    if draw(st.booleans()):
        return s(draw(ground(depth - 1)))
    return plus(draw(ground(depth - 1)), draw(ground(depth - 1)))


@settings(max_examples=60, deadline=None)
@given(ground(), ground(), st.integers(0, 3))
def test_mpo_gt_matches_reference(t, u, k):
    assert mpo_gt(cfg(k), t, u) == reference_gt(k, PREC, t, u)
    assert mpo_lift_gt(cfg(k), t, u) == reference_lift(k, PREC, t, u)
