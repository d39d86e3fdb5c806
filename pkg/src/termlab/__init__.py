"""termlab: derivation trees, bar recursion and multiset path orders."""

from .relations import DerivationTree, FiniteRelation, check_tree, dc_oracle, dfs_tree_oracle
from .terms import App, Signature, TermCodec, Var, parse_term
from .trs import Trs, parse_trs

__all__ = [
    "App",
    "DerivationTree",
    "FiniteRelation",
    "Signature",
    "TermCodec",
    "Trs",
    "Var",
    "check_tree",
    "dc_oracle",
    "dfs_tree_oracle",
    "parse_term",
    "parse_trs",
]
__version__ = "0.1.0"
