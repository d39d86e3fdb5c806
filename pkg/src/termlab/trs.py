"""Term rewrite systems: parsing, rewriting, orientation and complexity sweeps.

File format, one directive per line, ``#`` starts a comment::

    SIG plus/2 s/1 0/0        # optional; fixes symbol order and arities
    VAR x y                   # variables, numbered x0, x1, ... in order
    PREC plus > s > 0         # any number of chains, closed transitively
    RULES
    plus(0, y) -> y
    plus(s(x), y) -> s(plus(x, y))

Without a SIG line the signature is read off the rules: symbols in order of
first appearance, arities from their uses, bare non-variable names constants.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .abstract import GammaEngine, phi, search_minimal_modulus
from .mpo import MpoConfig, Precedence, PrecedenceError, mpo_gt, mpo_measure, mpo_triple
from .relations import NonTerminating, _postorder, FiniteRelation
from .terms import App, Signature, Term, TermCodec, TermSyntaxError, Var, is_ground, parse_term, size, subterms, variables


class TrsSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Rule:
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if isinstance(self.lhs, Var):
            raise ValueError("left-hand side of a rule cannot be a variable")
        extra = variables(self.rhs) - variables(self.lhs)
        if extra:
            raise ValueError(f"right-hand side variables {sorted(extra)} do not occur on the left")


@dataclass(frozen=True)
class Trs:
    signature: Signature
    variables: tuple[str, ...]
    precedence: Precedence
    rules: tuple[Rule, ...]

    def var_names(self) -> dict[int, str]:
        return {i: name for i, name in enumerate(self.variables)}

    def show(self, t: Term) -> str:
        names = self.var_names()
        if isinstance(t, Var):
            return names.get(t.index, str(t))
        if not t.args:
            return t.symbol
        return f"{t.symbol}({', '.join(self.show(a) for a in t.args)})"

    def default_k(self) -> int:
        """max |r| over the rules; a starting point that ``validate_approximation`` vets."""
        return max((size(rule.rhs) for rule in self.rules), default=0)

    def config(self, k: Optional[int] = None, codec: Optional[TermCodec] = None) -> MpoConfig:
        return MpoConfig(codec or TermCodec(self.signature), self.precedence, self.default_k() if k is None else k)


_SIG_ITEM = re.compile(r"(?P<name>[^\s/]+)/(?P<arity>\d+)\Z")
_NAME = re.compile(r"[A-Za-z0-9_'.+*\-]+\Z")


def parse_trs(text: str) -> Trs:
    sig_items: Optional[list[tuple[str, int]]] = None
    var_names: list[str] = []
    prec_pairs: list[tuple[str, str, int, int]] = []
    raw_rules: list[tuple[str, str, int, int, int]] = []
    in_rules = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        stripped = line.strip()
        if not stripped:
            continue
        col = len(line) - len(line.lstrip()) + 1
        word, _, rest = stripped.partition(" ")
        if word == "RULES" and not rest.strip():
            if in_rules:
                raise TrsSyntaxError("duplicate RULES header", lineno, col)
            in_rules = True
        elif word == "SIG" and not in_rules:
            if sig_items is not None:
                raise TrsSyntaxError("duplicate SIG line", lineno, col)
            sig_items = []
            for m in re.finditer(r"\S+", rest):
                item = _SIG_ITEM.match(m.group())
                if not item:
                    raise TrsSyntaxError(f"expected name/arity, got {m.group()!r}", lineno, col + 4 + m.start())
                sig_items.append((item.group("name"), int(item.group("arity"))))
        elif word == "VAR" and not in_rules:
            for m in re.finditer(r"\S+", rest):
                if not _NAME.match(m.group()):
                    raise TrsSyntaxError(f"bad variable name {m.group()!r}", lineno, col + 4 + m.start())
                if m.group() in var_names:
                    raise TrsSyntaxError(f"variable {m.group()!r} declared twice", lineno, col + 4 + m.start())
                var_names.append(m.group())
        elif word == "PREC" and not in_rules:
            names = [part.strip() for part in rest.split(">")]
            if len(names) < 2 or not all(names):
                raise TrsSyntaxError("expected 'PREC f > g [> h ...]'", lineno, col)
            for f, g in zip(names, names[1:]):
                prec_pairs.append((f, g, lineno, col))
        elif in_rules:
            lhs, arrow, rhs = stripped.partition("->")
            if not arrow:
                raise TrsSyntaxError("expected 'lhs -> rhs'", lineno, col)
            raw_rules.append((lhs, rhs, lineno, col, col + len(lhs) + 2))
        else:
            raise TrsSyntaxError(f"unexpected {word!r} (expected SIG, VAR, PREC or RULES)", lineno, col)

    vmap = {name: i for i, name in enumerate(var_names)}
    if sig_items is not None:
        try:
            signature = Signature(tuple(sig_items))
        except ValueError as exc:
            raise TrsSyntaxError(str(exc), 1) from None
        clash = [name for name, _ in sig_items if name in vmap]
        if clash:
            raise TrsSyntaxError(f"{clash[0]!r} is both a symbol and a variable", 1)
    else:
        signature = _infer_signature(raw_rules, vmap)

    rules = []
    for lhs_text, rhs_text, lineno, lcol, rcol in raw_rules:
        lhs = _parse_side(lhs_text, signature, vmap, lineno, lcol)
        rhs = _parse_side(rhs_text, signature, vmap, lineno, rcol)
        if isinstance(lhs, Var):
            raise TrsSyntaxError("left-hand side is a variable", lineno, lcol)
        extra = variables(rhs) - variables(lhs)
        if extra:
            name = var_names[min(extra)]
            raise TrsSyntaxError(f"variable {name!r} of the right-hand side does not occur on the left", lineno, rcol)
        rules.append(Rule(lhs, rhs))

    for f, g, lineno, col in prec_pairs:
        for name in (f, g):
            if name not in signature:
                raise TrsSyntaxError(f"precedence mentions unknown symbol {name!r}", lineno, col)
    try:
        precedence = Precedence.from_pairs((f, g) for f, g, _, _ in prec_pairs)
    except PrecedenceError as exc:
        lineno, col = prec_pairs[-1][2], prec_pairs[-1][3]
        raise TrsSyntaxError(str(exc), lineno, col) from None
    return Trs(signature, tuple(var_names), precedence, tuple(rules))


def _parse_side(text: str, signature: Signature, vmap: dict, lineno: int, col: int) -> Term:
    lead = len(text) - len(text.lstrip())
    try:
        return parse_term(text.strip(), signature, vmap)
    except TermSyntaxError as exc:
        message = str(exc).rsplit(" at column", 1)[0]
        if message.startswith("undeclared variable or constant"):
            message = message.replace("undeclared variable or constant", "undeclared variable", 1)
        raise TrsSyntaxError(message, lineno, col + lead + exc.position) from None


def _infer_signature(raw_rules, vmap) -> Signature:
    arities: dict[str, int] = {}
    for lhs_text, rhs_text, lineno, lcol, rcol in raw_rules:
        for text, col in ((lhs_text, lcol), (rhs_text, rcol)):
            lead = len(text) - len(text.lstrip())
            try:
                t = parse_term(text.strip(), None, vmap)
            except TermSyntaxError as exc:
                raise TrsSyntaxError(str(exc).rsplit(" at column", 1)[0], lineno, col + lead + exc.position) from None
            for s in subterms(t):
                if isinstance(s, App):
                    known = arities.setdefault(s.symbol, len(s.args))
                    if known != len(s.args):
                        raise TrsSyntaxError(
                            f"arity mismatch: {s.symbol} used with {known} and {len(s.args)} arguments",
                            lineno,
                            col,
                        )
    return Signature(tuple(arities.items()))


def format_trs(trs: Trs) -> str:
    lines = ["SIG " + " ".join(f"{name}/{arity}" for name, arity in trs.signature.symbols)]
    if trs.variables:
        lines.append("VAR " + " ".join(trs.variables))
    for f, g in sorted(trs.precedence.pairs):
        lines.append(f"PREC {f} > {g}")
    lines.append("RULES")
    for rule in trs.rules:
        lines.append(f"{trs.show(rule.lhs)} -> {trs.show(rule.rhs)}")
    return "\n".join(lines) + "\n"


def read_trs(path) -> Trs:
    with open(path, encoding="utf-8") as fh:
        return parse_trs(fh.read())


# Rewriting


def match(pattern: Term, t: Term, subst: Optional[dict] = None) -> Optional[dict]:
    subst = {} if subst is None else subst
    if isinstance(pattern, Var):
        bound = subst.get(pattern.index)
        if bound is None:
            subst[pattern.index] = t
            return subst
        return subst if bound == t else None
    if not isinstance(t, App) or t.symbol != pattern.symbol or len(t.args) != len(pattern.args):
        return None
    for p, s in zip(pattern.args, t.args):
        if match(p, s, subst) is None:
            return None
    return subst


def substitute(t: Term, subst: dict) -> Term:
    if isinstance(t, Var):
        return subst.get(t.index, t)
    return App(t.symbol, tuple(substitute(a, subst) for a in t.args))


def _positions(t: Term, path: tuple = ()) -> Iterator[tuple[tuple, Term]]:
    yield path, t
    if isinstance(t, App):
        for i, a in enumerate(t.args):
            yield from _positions(a, path + (i,))


def _replace(t: Term, path: tuple, s: Term) -> Term:
    if not path:
        return s
    i = path[0]
    return App(t.symbol, t.args[:i] + (_replace(t.args[i], path[1:], s),) + t.args[i + 1 :])


def rewrite_step(trs: Trs, t: Term) -> list[Term]:
    """Every one-step rewrite of t: outermost-leftmost positions first, then rule order."""
    out: dict[Term, None] = {}
    for path, sub in _positions(t):
        for rule in trs.rules:
            subst = match(rule.lhs, sub)
            if subst is not None:
                out.setdefault(_replace(t, path, substitute(rule.rhs, subst)))
    return list(out)


def rewrite_relation(trs: Trs, codec: Optional[TermCodec] = None) -> FiniteRelation:
    codec = codec or TermCodec(trs.signature)
    return FiniteRelation(lambda t: rewrite_step(trs, t), key=codec.order_key, zero=Var(0), name="rewrite")


def derivation_length(trs: Trs, t: Term, fuel: int = 10**6) -> int:
    """Length of the longest rewrite sequence from t; ``fuel`` bounds the distinct terms visited."""
    r = rewrite_relation(trs)
    longest: dict = {}
    for z in _postorder(r, t, fuel):
        longest[z] = max((1 + longest[y] for y in r.successors(z)), default=0)
    return longest[t]


# Orientation and approximation checks


@dataclass
class RuleVerdict:
    rule: str
    oriented: bool


def orient(cfg: MpoConfig, trs: Trs) -> list[RuleVerdict]:
    return [
        RuleVerdict(f"{trs.show(rule.lhs)} -> {trs.show(rule.rhs)}", mpo_gt(cfg, rule.lhs, rule.rhs))
        for rule in trs.rules
    ]


@dataclass
class StepFailure:
    term: str
    reduct: str


def ground_terms(codec: TermCodec, size_bound: int) -> list[Term]:
    return [t for t in codec.enumerate_up_to(size_bound) if is_ground(t)]


def validate_approximation(cfg: MpoConfig, trs: Trs, size_bound: int) -> list[StepFailure]:
    """Rewrite steps t -> s from ground terms up to ``size_bound`` with t not above s."""
    report = []
    for t in ground_terms(cfg.codec, size_bound):
        for s in rewrite_step(trs, t):
            if not mpo_gt(cfg, t, s):
                report.append(StepFailure(trs.show(t), trs.show(s)))
    return report


@dataclass
class BoundRow:
    term: str
    bound: int
    actual: int

    @property
    def ok(self) -> bool:
        return self.bound >= self.actual


@dataclass
class BoundEngine:
    """Derivation-tree lengths for many terms, sharing work between them."""

    cfg: MpoConfig
    trs: Trs
    path: str = "gamma"
    fuel: int = 10**6
    _gamma: Optional[GammaEngine] = field(default=None, repr=False)

    def __post_init__(self):
        if self.path not in ("gamma", "psi"):
            raise ValueError(f"unknown bound path {self.path!r}")
        self.triple = mpo_triple(self.cfg)
        if self.path == "gamma":
            self._gamma = GammaEngine(self.triple, mpo_measure(self.cfg), self.fuel)
        else:
            self._omega = search_minimal_modulus(self.triple, self.fuel)

    def tree(self, t: Term):
        if self._gamma is not None:
            return self._gamma.tree(t)
        return phi(self.triple, self._omega, t, self.fuel)

    def row(self, t: Term) -> BoundRow:
        bound = self.tree(t).length
        actual = derivation_length(self.trs, t, self.fuel)
        return BoundRow(self.trs.show(t), bound, actual)


def bound_vs_actual(cfg: MpoConfig, trs: Trs, t: Term, fuel: int = 10**6, path: str = "gamma") -> tuple[int, int]:
    row = BoundEngine(cfg, trs, path, fuel).row(t)
    return row.bound, row.actual


def sweep(cfg: MpoConfig, trs: Trs, size_bound: int, fuel: int = 10**6, path: str = "gamma") -> list[BoundRow]:
    engine = BoundEngine(cfg, trs, path, fuel)
    return [engine.row(t) for t in ground_terms(cfg.codec, size_bound)]
