import pytest

from termlab.abstract import (
    GammaEngine,
    MeasureRelation,
    RelationTriple,
    check_decomposition,
    check_t_sub,
    fixture_universe,
    gamma,
    gamma_tree,
    hypothesis_check,
    lift_chains_to,
    phi,
    psi_gamma_agreement,
    psi_minimal,
    search_minimal_modulus,
    true_vector,
)
from termlab.bar import BarStats, Ext, FuelExhausted
from termlab.mpo import mpo_measure, mpo_triple
from termlab.relations import DerivationTree, FiniteRelation, check_tree, dc_oracle, dfs_tree_oracle, is_chain
from termlab.terms import App

SEVEN_TREE = [2, 4, 1, 3, 5, 6, 7]
NEVER = MeasureRelation(lambda p, q: False, name="empty")
ALWAYS = MeasureRelation(lambda p, q: p != q, name="total")


@pytest.mark.parametrize(
    "x, u, expected",
    [
        (6, [[1], [3, 5]], True),
        (6, [[1], [3]], False),
        (6, [[1]], False),
        (0, [], True),
        (5, [], True),
        (2, [[1]], True),
    ],
)
def test_check_t_sub(seven, x, u, expected):
    assert check_t_sub(seven, x, u) is expected


def test_decomposition_of_fixture(seven, seven_tables):
    assert check_decomposition(seven, fixture_universe(seven_tables)) == []


def test_decomposition_violations_are_reported():
    succ = FiniteRelation({2: [7]})
    empty = FiniteRelation({})
    report = check_decomposition(RelationTriple(succ, empty, lambda x, y: False), [2, 7])
    assert [(v.law, v.witness) for v in report] == [("(i)", (2, 7))]
    # 3 lifts to 2 and 2 has subterm 1, but 3 is not above 1
    succ = FiniteRelation({3: [2]})
    sub = FiniteRelation({2: [1]})
    report = check_decomposition(RelationTriple(succ, sub, lambda x, y: (x, y) == (3, 2)), [1, 2, 3])
    assert [(v.law, v.witness) for v in report] == [("(ii)", (3, 2, 1))]


def test_hypothesis_law(seven, seven_measure, seven_tables):
    universe = fixture_universe(seven_tables)
    assert hypothesis_check(seven, seven_measure, universe) == []
    assert hypothesis_check(seven, ALWAYS, universe) == []
    assert hypothesis_check(seven, NEVER, universe) != []


def test_minimal_modulus_guard(seven, seven_tables):
    omega = search_minimal_modulus(seven)
    universe = fixture_universe(seven_tables)
    lift = FiniteRelation({x: [y for y in universe if seven.lifts(x, y)] for x in universe})
    for x in universe:
        for a in lift_chains_to(seven, x, universe, 3):
            a = a + (x,)
            assert is_chain(lift, a)
            b = [true_vector(seven, z) for z in a]
            assert omega.eval(Ext(a, 0), Ext(tuple(b), ())) >= len(a)


def test_psi_minimal_base_cases(seven):
    omega = search_minimal_modulus(seven)
    assert list(psi_minimal(seven, omega, [], [])) == []
    with pytest.raises(ValueError):
        psi_minimal(seven, omega, [2], [])


def test_psi_minimal_on_fixture(seven):
    omega = search_minimal_modulus(seven)
    stats = BarStats()
    got = psi_minimal(seven, omega, [2], [true_vector(seven, 2)], stats=stats)
    assert list(got) == SEVEN_TREE
    assert stats.calls >= 1


@pytest.mark.parametrize("x", [1, 2, 3, 4, 5, 6, 7])
def test_phi_and_gamma_are_derivation_functions(seven, seven_measure, x):
    want = dfs_tree_oracle(seven.succ, x)
    omega = search_minimal_modulus(seven)
    assert phi(seven, omega, x) == want
    assert gamma_tree(seven, seven_measure, x) == want
    assert check_tree(seven.succ, x, list(want))
    assert want.length >= dc_oracle(seven.succ, x)


def test_gamma_with_explicit_vector(seven, seven_measure):
    assert list(gamma(seven, seven_measure, 6, [[1], [3, 5]])) == [6]
    assert list(gamma(seven, seven_measure, 2, [[1]])) == SEVEN_TREE
    assert list(gamma(seven, seven_measure, 7, [])) == [7]


def test_gamma_negative_control(seven):
    # with an empty measure, 2's successors 4 and 7 are not below a subterm of 2
    d = gamma(seven, NEVER, 2, [[1]])
    assert list(d) == [2]
    assert not check_tree(seven.succ, 2, d)


def test_gamma_reports_measure_cycles():
    # a cyclic order with an always-true measure revisits (1, ())
    succ = FiniteRelation({2: [1], 1: [2]})
    t = RelationTriple(succ, FiniteRelation({}), lambda x, y: True)
    loop = MeasureRelation(lambda p, q: True)
    with pytest.raises(FuelExhausted, match="cycles"):
        GammaEngine(t, loop, fuel=10).gamma(2, [])


def test_psi_gamma_agreement_on_fixture(seven, seven_measure, seven_tables):
    omega = search_minimal_modulus(seven)
    universe = fixture_universe(seven_tables)
    assert psi_gamma_agreement(seven, seven_measure, omega, universe, max_prefix=3) == []


def test_lift_chains_include_empty_prefix(seven):
    prefixes = lift_chains_to(seven, 5, [2, 3, 4, 5], 2)
    assert () in prefixes and (3,) in prefixes and (4, 3) in prefixes


def test_mpo_phi_matches_oracle(cfg3):
    t = mpo_triple(cfg3)
    omega = search_minimal_modulus(t)
    x = App("plus", (App("s", (App("0"),)), App("0")))
    d = phi(t, omega, x)
    assert d == dfs_tree_oracle(t.succ, x)
    assert d.length >= dc_oracle(t.succ, x)


def test_mpo_gamma_small_terms(cfg3):
    t, m = mpo_triple(cfg3), mpo_measure(cfg3)
    engine = GammaEngine(t, m)
    for x in cfg3.codec.enumerate_up_to(3):
        d = engine.tree(x)
        assert check_tree(t.succ, x, d)
        assert d == dfs_tree_oracle(t.succ, x)
    leaf = App("0")
    assert list(engine.gamma(leaf, [])) == [leaf]


def test_compressed_trees_are_checked_flat_when_small(cfg3):
    t, m = mpo_triple(cfg3), mpo_measure(cfg3)
    x = App("plus", (App("0"), App("0")))
    d = gamma_tree(t, m, x)
    flat = d.to_list(limit=10**5)
    assert check_tree(t.succ, x, flat)
    assert isinstance(d, DerivationTree) and d.length == len(flat)
