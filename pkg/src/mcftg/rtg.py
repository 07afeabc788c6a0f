"""Regular tree grammars in normal form.

Used both as language objects (derivation-tree languages, transducer
look-ahead) and as parse charts.  All rules have the shape
``A -> symbol(A1,...,Ak)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator

from .trees import RankedAlphabet, Tree, tree_height


@dataclass(frozen=True, slots=True)
class RtgRule:
    lhs: str
    symbol: str
    children: tuple[str, ...]

    def __str__(self) -> str:
        args = f"({','.join(self.children)})" if self.children else ""
        return f"{self.lhs} -> {self.symbol}{args}"


class Rtg:
    __slots__ = ("nonterminals", "terminals", "initial", "rules", "_by_lhs", "_by_symbol")

    def __init__(self, nonterminals: Iterable[str], terminals: RankedAlphabet,
                 initial: str, rules: Iterable[RtgRule]):
        self.nonterminals = frozenset(nonterminals)
        self.terminals = terminals
        self.initial = initial
        self.rules = tuple(sorted(set(rules), key=lambda r: (r.lhs, r.symbol, r.children)))
        if initial not in self.nonterminals:
            raise ValueError(f"initial nonterminal {initial} missing")
        for r in self.rules:
            if r.lhs not in self.nonterminals or any(c not in self.nonterminals for c in r.children):
                raise ValueError(f"rule {r} uses unknown nonterminals")
            if r.symbol not in terminals or terminals.rank(r.symbol) != len(r.children):
                raise ValueError(f"rule {r} violates terminal ranks")
        by_lhs: dict[str, list[RtgRule]] = {}
        by_symbol: dict[str, list[RtgRule]] = {}
        for r in self.rules:
            by_lhs.setdefault(r.lhs, []).append(r)
            by_symbol.setdefault(r.symbol, []).append(r)
        self._by_lhs = by_lhs
        self._by_symbol = by_symbol

    def rules_for(self, nonterminal: str) -> list[RtgRule]:
        return self._by_lhs.get(nonterminal, [])

    def with_initial(self, initial: str) -> "Rtg":
        if initial == self.initial:
            return self
        return Rtg(self.nonterminals, self.terminals, initial, self.rules)

    def core_key(self):
        """Identity of the grammar modulo its initial nonterminal."""
        return (self.nonterminals, self.terminals, self.rules)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Rtg) and self.initial == other.initial
                and self.core_key() == other.core_key())

    def __hash__(self) -> int:
        return hash((self.initial, self.nonterminals, self.rules))

    def __repr__(self) -> str:
        return f"Rtg(initial={self.initial}, {len(self.rules)} rules)"


def rtg_universal(terminals: RankedAlphabet, nonterminal: str = "Any") -> Rtg:
    rules = [RtgRule(nonterminal, s, (nonterminal,) * terminals.rank(s)) for s in terminals]
    return Rtg({nonterminal}, terminals, nonterminal, rules)


def _productive(g: Rtg) -> set[str]:
    prod: set[str] = set()
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            if r.lhs not in prod and all(c in prod for c in r.children):
                prod.add(r.lhs)
                changed = True
    return prod


def _reachable(g: Rtg, keep_rules: Iterable[RtgRule]) -> set[str]:
    by_lhs: dict[str, list[RtgRule]] = {}
    for r in keep_rules:
        by_lhs.setdefault(r.lhs, []).append(r)
    seen = {g.initial}
    stack = [g.initial]
    while stack:
        for r in by_lhs.get(stack.pop(), []):
            for c in r.children:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
    return seen


def rtg_is_empty(g: Rtg) -> bool:
    """Least-fixpoint test: is no tree derivable from the initial nonterminal?"""
    return g.initial not in _productive(g)


def rtg_reduce(g: Rtg) -> Rtg:
    """Drop nonproductive and unreachable nonterminals; the language is kept.

    The initial nonterminal always survives; an empty rule set signals the
    empty language.
    """
    prod = _productive(g)
    rules = [r for r in g.rules if r.lhs in prod and all(c in prod for c in r.children)]
    reach = _reachable(g, rules)
    rules = [r for r in rules if r.lhs in reach]
    nts = {g.initial} | {r.lhs for r in rules} | {c for r in rules for c in r.children}
    return Rtg(nts, g.terminals, g.initial, rules)


def rtg_is_finite(g: Rtg) -> bool:
    """True iff L(g) is finite: no cycle in the reduced rule graph."""
    g = rtg_reduce(g)
    edges: dict[str, set[str]] = {n: set() for n in g.nonterminals}
    for r in g.rules:
        edges[r.lhs].update(r.children)
    color: dict[str, int] = {}

    def has_cycle(n: str) -> bool:
        color[n] = 1
        for m in edges[n]:
            c = color.get(m, 0)
            if c == 1 or (c == 0 and has_cycle(m)):
                return True
        color[n] = 2
        return False

    return not any(color.get(n, 0) == 0 and has_cycle(n) for n in g.nonterminals)


def rtg_product(g1: Rtg, g2: Rtg) -> Rtg:
    """Intersection grammar over pair states, reduced."""
    if g1.terminals != g2.terminals:
        raise ValueError("product of RTGs over different terminal alphabets")

    def name(a: str, b: str) -> str:
        return f"({a}*{b})"

    rules: list[RtgRule] = []
    nts: set[str] = set()
    seen: set[tuple[str, str]] = set()
    stack = [(g1.initial, g2.initial)]
    while stack:
        a, b = stack.pop()
        if (a, b) in seen:
            continue
        seen.add((a, b))
        nts.add(name(a, b))
        for r1 in g1.rules_for(a):
            for r2 in g2.rules_for(b):
                if r1.symbol != r2.symbol:
                    continue
                kids = tuple(name(c1, c2) for c1, c2 in zip(r1.children, r2.children))
                rules.append(RtgRule(name(a, b), r1.symbol, kids))
                for pair in zip(r1.children, r2.children):
                    if pair not in seen:
                        stack.append(pair)
    init = name(g1.initial, g2.initial)
    nts.add(init)
    return rtg_reduce(Rtg(nts, g1.terminals, init, rules))


def rtg_member(g: Rtg, t: Tree) -> bool:
    """Bottom-up run of ``t`` against the rules of ``g``."""

    def states(node: Tree) -> frozenset[str]:
        kid_states = [states(c) for c in node.children]
        out = set()
        for r in g._by_symbol.get(node.label, []):
            if all(c in ks for c, ks in zip(r.children, kid_states)):
                out.add(r.lhs)
        return frozenset(out)

    return g.initial in states(t)


def rtg_enumerate(g: Rtg, max_height: int) -> set[Tree]:
    """Exactly the members of L(g) of height at most ``max_height``."""
    if max_height < 0:
        raise ValueError("max_height must be nonnegative")
    layer: dict[str, set[Tree]] = {n: set() for n in g.nonterminals}
    for _ in range(max_height + 1):
        new: dict[str, set[Tree]] = {n: set(layer[n]) for n in g.nonterminals}
        for r in g.rules:
            for kids in itertools.product(*(sorted(layer[c], key=str) for c in r.children)):
                new[r.lhs].add(Tree(r.symbol, kids))
        if new == layer:
            break
        layer = new
    return {t for t in layer[g.initial] if tree_height(t) <= max_height}


def rtg_enumerate_sized(g: Rtg, max_size: int, nonterminal: str | None = None) -> set[Tree]:
    """All members of L(g, nonterminal) with at most ``max_size`` nodes."""
    start = nonterminal if nonterminal is not None else g.initial
    table: dict[tuple[str, int], set[Tree]] = {}

    def fill(nt: str, size: int) -> set[Tree]:
        key = (nt, size)
        if key in table:
            return table[key]
        table[key] = set()
        out: set[Tree] = set()
        for r in g.rules_for(nt):
            budget = size - 1
            if budget < len(r.children):
                continue
            if not r.children:
                out.add(Tree(r.symbol))
                continue
            splits = _compositions(budget, len(r.children))
            for split in splits:
                for kids in itertools.product(
                        *(sorted(fill(c, s), key=str) for c, s in zip(r.children, split))):
                    out.add(Tree(r.symbol, kids))
        table[key] = out
        return out

    result: set[Tree] = set()
    for size in range(1, max_size + 1):
        result |= fill(start, size)
    return result


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def rtg_minimal_tree(g: Rtg, nonterminal: str | None = None) -> Tree | None:
    """A least member of L(g, nonterminal) in the canonical term order."""
    from .trees import term_key

    best: dict[str, Tree] = {}
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            if all(c in best for c in r.children):
                cand = Tree(r.symbol, tuple(best[c] for c in r.children))
                old = best.get(r.lhs)
                if old is None or term_key(cand) < term_key(old):
                    best[r.lhs] = cand
                    changed = True
    return best.get(nonterminal if nonterminal is not None else g.initial)


def rtg_to_json(g: Rtg) -> dict:
    return {
        "nonterminals": sorted(g.nonterminals),
        "initial": g.initial,
        "rules": [
            {"lhs": r.lhs, "symbol": r.symbol, "children": list(r.children)}
            for r in g.rules
        ],
    }
