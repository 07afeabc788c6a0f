"""Multiple context-free tree grammars: data model and semantics.

A grammar rewrites *big nonterminals* (repetition-free tuples of
nonterminals) simultaneously.  Rules carry an ordered link sequence; the
order fixes the child order of derivation trees.  Semantics are provided
three ways: least-fixed-point generation, derivation trees with ``value``,
and the link-identifier rewriting relation (``derive_step``).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .trees import (Forest, RankedAlphabet, TermError, Tree, forest_alp, init_forest,
                    init_tree, is_pattern, is_variable, positions, preorder_labels,
                    tree_height, var)

BigNonterminal = tuple[str, ...]


def big_name(big: BigNonterminal) -> str:
    return "(" + ",".join(big) + ")"


def rewrite_labels(t: Tree, table: Mapping[str, Tree]) -> Tree:
    """Second-order rewrite: replace each ``label`` node by its pattern,
    folding the walked children into the pattern's variables."""
    if t.label in table:
        image = table[t.label]
        if not t.children:
            return image
        binding = {f"x{i}": rewrite_labels(c, table) for i, c in enumerate(t.children, start=1)}
        from .trees import first_order_subst
        return first_order_subst(image, binding)
    if not t.children:
        return t
    return Tree(t.label, tuple(rewrite_labels(c, table) for c in t.children))


def rewrite_forest(forest: Forest, table: Mapping[str, Tree]) -> Forest:
    return tuple(rewrite_labels(t, table) for t in forest)


@dataclass(frozen=True, slots=True)
class Rule:
    name: str
    lhs: BigNonterminal
    rhs: Forest
    links: tuple[BigNonterminal, ...]

    @property
    def is_terminal(self) -> bool:
        return not self.links

    @property
    def is_monic(self) -> bool:
        return len(self.links) == 1

    def __str__(self) -> str:
        from .trees import render_forest
        links = " ".join(big_name(b) for b in self.links)
        return (f"rule {self.name}: {big_name(self.lhs)} -> "
                f"{render_forest(self.rhs)} links {{ {links} }}")


class Mcftg:
    __slots__ = ("nonterminals", "bigs", "terminals", "initial", "rules",
                 "_rule_by_name", "_rules_by_lhs")

    def __init__(self, nonterminals: RankedAlphabet, bigs: Iterable[BigNonterminal],
                 terminals: RankedAlphabet, initial: BigNonterminal,
                 rules: Iterable[Rule]):
        self.nonterminals = nonterminals
        self.bigs = tuple(dict.fromkeys(tuple(b) for b in bigs))
        self.terminals = terminals
        self.initial = tuple(initial)
        self.rules = tuple(rules)
        self._rule_by_name = {r.name: r for r in self.rules}
        if len(self._rule_by_name) != len(self.rules):
            raise TermError("duplicate rule names")
        by_lhs: dict[BigNonterminal, list[Rule]] = {}
        for r in self.rules:
            by_lhs.setdefault(r.lhs, []).append(r)
        self._rules_by_lhs = by_lhs

    # -- basic access -------------------------------------------------------

    def rule(self, name: str) -> Rule:
        return self._rule_by_name[name]

    def has_rule(self, name: str) -> bool:
        return name in self._rule_by_name

    def rules_for(self, big: BigNonterminal) -> list[Rule]:
        return self._rules_by_lhs.get(tuple(big), [])

    @property
    def symbols(self) -> RankedAlphabet:
        return self.nonterminals.union(self.terminals)

    def big_rank(self, big: BigNonterminal) -> tuple[int, ...]:
        return tuple(self.nonterminals.rank(c) for c in big)

    @property
    def initial_symbol(self) -> str:
        return self.initial[0]

    def is_initial_rule(self, rule: Rule) -> bool:
        return rule.lhs == self.initial

    def is_proper_rule(self, rule: Rule) -> bool:
        return not (self.is_initial_rule(rule) and rule.is_terminal)

    def replace_rules(self, rules: Iterable[Rule]) -> "Mcftg":
        return Mcftg(self.nonterminals, self.bigs, self.terminals, self.initial, rules)

    def __repr__(self) -> str:
        return (f"Mcftg({len(self.nonterminals)} nonterminals, "
                f"{len(self.bigs)} bigs, {len(self.rules)} rules)")


# ---------------------------------------------------------------------------
# Validation and statistics.

@dataclass(frozen=True, slots=True)
class Diagnostic:
    clause: str
    message: str
    rule: str | None = None

    def __str__(self) -> str:
        where = f" [rule {self.rule}]" if self.rule else ""
        return f"{self.clause}: {self.message}{where}"


def validate(g: Mcftg, allow_pair_initial: bool = False) -> list[Diagnostic]:
    """Check every clause of the grammar definition; empty result iff valid."""
    out: list[Diagnostic] = []

    def bad(clause: str, message: str, rule: str | None = None) -> None:
        out.append(Diagnostic(clause, message, rule))

    overlap = {n for n in g.nonterminals} & {t for t in g.terminals}
    if overlap:
        bad("disjointness", f"names in both N and Sigma: {sorted(overlap)}")
    if len(g.terminals) == 0 or g.terminals.max_rank < 1:
        bad("terminals", "terminal alphabet needs a symbol of rank >= 1")

    alps: dict[frozenset[str], BigNonterminal] = {}
    for big in g.bigs:
        if not big:
            bad("big", "empty big nonterminal")
            continue
        if len(set(big)) != len(big):
            bad("big", f"big nonterminal {big_name(big)} repeats a nonterminal")
        missing = [c for c in big if c not in g.nonterminals]
        if missing:
            bad("big", f"{big_name(big)} uses unknown nonterminals {missing}")
            continue
        key = frozenset(big)
        if key in alps:
            bad("alp-injective",
                f"{big_name(big)} and {big_name(alps[key])} have the same nonterminal set")
        alps[key] = big

    if g.initial not in g.bigs:
        bad("initial", f"initial {big_name(g.initial)} is not a big nonterminal")
    elif not allow_pair_initial:
        if len(g.initial) != 1 or g.nonterminals.rank(g.initial[0]) != 0:
            bad("initial", "initial big nonterminal must have length 1 and rank 0")

    dual = g.symbols if not overlap else g.nonterminals
    for r in g.rules:
        if r.lhs not in g.bigs:
            bad("lhs", f"unknown left-hand side {big_name(r.lhs)}", r.name)
            continue
        if len(r.rhs) != len(r.lhs):
            bad("rank", f"right-hand side has {len(r.rhs)} components, "
                f"left-hand side {len(r.lhs)}", r.name)
            continue
        for part, t in zip(r.lhs, r.rhs):
            rank = g.nonterminals.rank(part)
            if not is_pattern(t, rank):
                bad("pattern", f"component for {part} is not a rank-{rank} pattern: {t}", r.name)
            for lab in preorder_labels(t):
                if not is_variable(lab) and lab not in dual:
                    bad("symbols", f"unknown symbol {lab}", r.name)
        for t in r.rhs:
            for p in positions(t):
                node = t.subtree(p)
                if node.label in g.symbols and len(node.children) != g.symbols.rank(node.label):
                    bad("rank", f"{node.label} used with {len(node.children)} children", r.name)
        occ: dict[str, int] = {}
        for t in r.rhs:
            for lab in preorder_labels(t):
                if lab in g.nonterminals:
                    occ[lab] = occ.get(lab, 0) + 1
        repeated = sorted(n for n, k in occ.items() if k > 1)
        if repeated:
            bad("uniquely-labeled", f"nonterminals occur twice: {repeated}", r.name)
        seen: set[str] = set()
        for link in r.links:
            if link not in g.bigs:
                bad("links", f"link {big_name(link)} is not a big nonterminal", r.name)
                continue
            if seen & set(link):
                bad("partition", f"link {big_name(link)} overlaps another link", r.name)
            seen |= set(link)
        if seen != set(occ):
            bad("partition",
                f"links cover {sorted(seen)} but right-hand side uses {sorted(occ)}", r.name)
    return out


def find_aliases(g: Mcftg) -> list[tuple[BigNonterminal, BigNonterminal]]:
    """Pairs of big nonterminals with identical rule bodies."""
    bodies: dict[BigNonterminal, frozenset] = {}
    for big in g.bigs:
        bodies[big] = frozenset((r.rhs, r.links) for r in g.rules_for(big))
    out = []
    for a, b in itertools.combinations(g.bigs, 2):
        if bodies[a] == bodies[b]:
            out.append((a, b))
    return out


def stats(g: Mcftg) -> tuple[int, int, int]:
    """(multiplicity, width, rule-width)."""
    mu = max(len(b) for b in g.bigs)
    wid = g.nonterminals.max_rank
    lam = max((len(r.links) for r in g.rules), default=0)
    return mu, wid, lam


# ---------------------------------------------------------------------------
# Derivation trees.

from .rtg import Rtg, RtgRule, rtg_enumerate, rtg_enumerate_sized, rtg_reduce  # noqa: E402


def rule_alphabet(g: Mcftg) -> RankedAlphabet:
    return RankedAlphabet({r.name: len(r.links) for r in g.rules})


def derivation_tree_grammar(g: Mcftg) -> Rtg:
    """RTG whose trees are the derivation trees of ``g``."""
    nts = [big_name(b) for b in g.bigs]
    rules = [RtgRule(big_name(r.lhs), r.name, tuple(big_name(b) for b in r.links))
             for r in g.rules]
    return Rtg(nts, rule_alphabet(g), big_name(g.initial), rules)


def derivation_type(g: Mcftg, d: Tree) -> BigNonterminal:
    if g.has_rule(d.label):
        return g.rule(d.label).lhs
    for big in g.bigs:
        if big_name(big) == d.label:
            return big
    raise TermError(f"not a derivation-tree label: {d.label}")


def value(g: Mcftg, d: Tree, _path: tuple[int, ...] = ()) -> Forest:
    """Value of a derivation tree, computed bottom-up."""
    if not g.has_rule(d.label):
        big = derivation_type(g, d)
        if d.children:
            raise TermError(f"big-nonterminal leaf {d.label} has children at {_path}")
        return init_forest(big, g.nonterminals)
    rule = g.rule(d.label)
    if len(d.children) != len(rule.links):
        raise TermError(
            f"rule {rule.name} expects {len(rule.links)} children, got {len(d.children)} at {_path}")
    table: dict[str, Tree] = {}
    for i, (link, child) in enumerate(zip(rule.links, d.children), start=1):
        child_type = derivation_type(g, child)
        if child_type != link:
            raise TermError(
                f"child {i} of {rule.name} at {_path} has type {big_name(child_type)}, "
                f"expected {big_name(link)}")
        sub = value(g, child, _path + (i,))
        for part, image in zip(link, sub):
            table[part] = image
    return rewrite_forest(rule.rhs, table)


def generate(g: Mcftg, big: BigNonterminal, max_height: int) -> set[Forest]:
    """Forests derivable for ``big`` using derivation trees whose longest
    root-to-leaf path has at most ``max_height`` nodes."""
    if max_height <= 0:
        return set()
    der = derivation_tree_grammar(g)
    name = big_name(tuple(big))
    if name not in der.nonterminals:
        raise TermError(f"unknown big nonterminal {name}")
    trees = rtg_enumerate(der.with_initial(name), max_height - 1)
    return {value(g, d) for d in trees}


# ---------------------------------------------------------------------------
# Rewriting semantics with link identifiers.

LinkId = tuple[int, ...]


def annotate(symbol: str, link: LinkId) -> str:
    return f"{symbol}@{'.'.join(str(i) for i in link)}"


def split_annotated(label: str) -> tuple[str, LinkId] | None:
    if "@" not in label:
        return None
    sym, _, tail = label.rpartition("@")
    link = tuple(int(x) for x in tail.split(".")) if tail else ()
    return sym, link


def initial_sentential(g: Mcftg) -> Tree:
    return Tree(annotate(g.initial_symbol, ()))


def live_links(t: Tree) -> dict[LinkId, set[str]]:
    out: dict[LinkId, set[str]] = {}
    for lab in preorder_labels(t):
        parts = split_annotated(lab)
        if parts is not None:
            sym, link = parts
            out.setdefault(link, set()).add(sym)
    return out


def derive_step(g: Mcftg, t: Tree, rule: Rule, link: LinkId) -> Tree:
    """One rewriting step ``t => t[A (x) l <- (u, L) (x) l]``."""
    present = live_links(t).get(link)
    if present is None or present != set(rule.lhs):
        raise TermError(
            f"link {'.'.join(map(str, link)) or 'epsilon'} does not carry "
            f"{big_name(rule.lhs)} in the subject tree")
    table: dict[str, Tree] = {}
    replacement: dict[str, Tree] = {}
    for i, b in enumerate(rule.links, start=1):
        for part in b:
            replacement[part] = init_tree(annotate(part, link + (i,)),
                                          g.nonterminals.rank(part))
    rhs = rewrite_forest(rule.rhs, replacement)
    for part, image in zip(rule.lhs, rhs):
        table[annotate(part, link)] = image
    return rewrite_labels(t, table)


def derive_reachable(g: Mcftg, max_steps: int) -> set[Tree]:
    """All terminal trees reachable from the initial symbol in at most
    ``max_steps`` derive steps."""
    start = initial_sentential(g)
    frontier = {start}
    seen = {start}
    results: set[Tree] = set()
    for _ in range(max_steps):
        nxt: set[Tree] = set()
        for t in frontier:
            links = live_links(t)
            for link, symbols in links.items():
                for big in g.bigs:
                    if set(big) != symbols:
                        continue
                    for rule in g.rules_for(big):
                        new = derive_step(g, t, rule, link)
                        if new in seen:
                            continue
                        seen.add(new)
                        if not live_links(new):
                            results.add(new)
                        else:
                            nxt.add(new)
        frontier = nxt
        if not frontier:
            break
    return results


# ---------------------------------------------------------------------------
# Bounded tree-language oracle (height-pruned least fixed point).

def _embedding_depths(g: Mcftg) -> dict[str, int]:
    """Lower bound on the depth at which each nonterminal's component is
    embedded in a tree generated from the initial symbol."""
    inf = 10 ** 9
    depth = {c: inf for c in g.nonterminals}
    depth[g.initial_symbol] = 0
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            for part, t in zip(r.lhs, r.rhs):
                base = depth[part]
                if base >= inf:
                    continue
                for p in positions(t):
                    lab = t.subtree(p).label
                    if lab in g.nonterminals and base + len(p) < depth[lab]:
                        depth[lab] = base + len(p)
                        changed = True
    return depth


def tree_language_upto(g: Mcftg, max_height: int) -> set[Tree]:
    """Exactly ``{t in L(g) : height(t) <= max_height}`` via a pruned
    least-fixed-point iteration (independent of derivation shapes)."""
    depth = _embedding_depths(g)
    bound = {c: max_height - d if depth[c] <= max_height else -1
             for c, d in depth.items()}
    sets: dict[BigNonterminal, set[Forest]] = {b: set() for b in g.bigs}

    def admissible(big: BigNonterminal, forest: Forest) -> bool:
        return all(tree_height(t) <= bound[c] for c, t in zip(big, forest))

    changed = True
    while changed:
        changed = False
        for rule in g.rules:
            if any(bound[c] < 0 for c in rule.lhs):
                continue
            pools = [sorted(sets[b], key=str) for b in rule.links]
            for combo in itertools.product(*pools):
                table: dict[str, Tree] = {}
                for link, forest in zip(rule.links, combo):
                    for part, image in zip(link, forest):
                        table[part] = image
                out = rewrite_forest(rule.rhs, table)
                if admissible(rule.lhs, out) and out not in sets[rule.lhs]:
                    sets[rule.lhs].add(out)
                    changed = True
    return {f[0] for f in sets.get(g.initial, set())}


