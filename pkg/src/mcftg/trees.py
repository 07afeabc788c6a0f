"""Ranked trees, forests, positions, patterns, and substitution.

Trees are immutable terms over string labels.  Variables are the reserved
labels ``x1, x2, ...`` and the context hole is the reserved label
``_HOLE_``; both always have rank 0 and are never members of a ranked
alphabet.  A forest is a nonempty tuple of trees; forest positions carry
the index of the tree they address.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping

NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9'_]*")
_VAR_RE = re.compile(r"^x([1-9][0-9]*)$")

HOLE = "_HOLE_"


class TermError(ValueError):
    """Malformed term text or a rank violation."""


def is_variable(label: str) -> bool:
    return _VAR_RE.match(label) is not None


def var_index(label: str) -> int:
    m = _VAR_RE.match(label)
    if m is None:
        raise TermError(f"not a variable: {label!r}")
    return int(m.group(1))


@dataclass(frozen=True, slots=True)
class Tree:
    label: str
    children: tuple["Tree", ...] = ()

    def __str__(self) -> str:
        if not self.children:
            return self.label
        return f"{self.label}({','.join(str(c) for c in self.children)})"

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def subtree(self, path: tuple[int, ...]) -> "Tree":
        t = self
        for i in path:
            if not 1 <= i <= len(t.children):
                raise TermError(f"invalid position {path} in {self}")
            t = t.children[i - 1]
        return t


Forest = tuple[Tree, ...]


def var(i: int) -> Tree:
    return Tree(f"x{i}")


def tree(label: str, *children: Tree) -> Tree:
    return Tree(label, tuple(children))


@dataclass(frozen=True, slots=True)
class Position:
    """Forest position: index of the tree plus a Dewey path inside it."""

    tree_index: int
    path: tuple[int, ...]

    def __str__(self) -> str:
        dewey = ".".join(str(i) for i in self.path)
        return f"#{self.tree_index}" + (f".{dewey}" if dewey else "")


class RankedAlphabet:
    """Finite map from symbol names to ranks."""

    __slots__ = ("_ranks",)

    def __init__(self, ranks: Mapping[str, int] | Iterable[tuple[str, int]] = ()):
        d = dict(ranks)
        for name, rank in d.items():
            if is_variable(name) or name == HOLE:
                raise TermError(f"reserved name used as symbol: {name}")
            if rank < 0:
                raise TermError(f"negative rank for {name}")
        self._ranks = d

    def rank(self, name: str) -> int:
        return self._ranks[name]

    def __contains__(self, name: str) -> bool:
        return name in self._ranks

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._ranks))

    def __len__(self) -> int:
        return len(self._ranks)

    def items(self) -> list[tuple[str, int]]:
        return sorted(self._ranks.items())

    def symbols(self, rank: int | None = None) -> list[str]:
        if rank is None:
            return sorted(self._ranks)
        return sorted(n for n, r in self._ranks.items() if r == rank)

    @property
    def max_rank(self) -> int:
        if not self._ranks:
            raise TermError("max rank of empty alphabet")
        return max(self._ranks.values())

    def union(self, other: "RankedAlphabet") -> "RankedAlphabet":
        d = dict(self._ranks)
        for name, rank in other._ranks.items():
            if d.get(name, rank) != rank:
                raise TermError(f"conflicting ranks for {name}")
            d[name] = rank
        return RankedAlphabet(d)

    def restrict(self, names: Iterable[str]) -> "RankedAlphabet":
        keep = set(names)
        return RankedAlphabet({n: r for n, r in self._ranks.items() if n in keep})

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RankedAlphabet) and self._ranks == other._ranks

    def __hash__(self) -> int:
        return hash(tuple(sorted(self._ranks.items())))

    def __repr__(self) -> str:
        inner = " ".join(f"{n}/{r}" for n, r in self.items())
        return f"RankedAlphabet({inner})"


# ---------------------------------------------------------------------------
# Term text syntax: `name` or `name(t1,...,tk)`; variables x1..; hole _HOLE_.
# Forests: `[ t1 ; t2 ; ... ]`.

def parse_term(text: str, alphabet: RankedAlphabet | None = None) -> Tree:
    """Parse a single term, checking ranks against ``alphabet`` if given."""
    parser = _TermParser(text, alphabet)
    t = parser.parse_tree()
    parser.expect_end()
    return t


def parse_forest(text: str, alphabet: RankedAlphabet | None = None) -> Forest:
    parser = _TermParser(text, alphabet)
    parser.skip_ws()
    if parser.peek() == "[":
        forest = parser.parse_forest()
    else:
        forest = (parser.parse_tree(),)
    parser.expect_end()
    return forest


class _TermParser:
    def __init__(self, text: str, alphabet: RankedAlphabet | None):
        self.text = text
        self.pos = 0
        self.alphabet = alphabet

    def error(self, message: str) -> TermError:
        return TermError(f"{message} at offset {self.pos} in {self.text!r}")

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, ch: str) -> None:
        self.skip_ws()
        if self.peek() != ch:
            raise self.error(f"expected {ch!r}")
        self.pos += 1

    def expect_end(self) -> None:
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.error("trailing input")

    def parse_name(self) -> str:
        self.skip_ws()
        if self.text.startswith(HOLE, self.pos):
            self.pos += len(HOLE)
            return HOLE
        m = NAME_RE.match(self.text, self.pos)
        if m is None:
            raise self.error("expected a name")
        self.pos = m.end()
        return m.group(0)

    def parse_tree(self) -> Tree:
        name = self.parse_name()
        self.skip_ws()
        children: list[Tree] = []
        if self.peek() == "(":
            self.pos += 1
            self.skip_ws()
            if self.peek() == ")":
                self.pos += 1
            else:
                children.append(self.parse_tree())
                self.skip_ws()
                while self.peek() == ",":
                    self.pos += 1
                    children.append(self.parse_tree())
                    self.skip_ws()
                self.expect(")")
        t = Tree(name, tuple(children))
        self._check_rank(t)
        return t

    def parse_forest(self) -> Forest:
        self.expect("[")
        trees = [self.parse_tree()]
        self.skip_ws()
        while self.peek() == ";":
            self.pos += 1
            trees.append(self.parse_tree())
            self.skip_ws()
        self.expect("]")
        return tuple(trees)

    def _check_rank(self, t: Tree) -> None:
        if is_variable(t.label) or t.label == HOLE:
            if t.children:
                raise self.error(f"{t.label} takes no arguments")
            return
        if self.alphabet is not None:
            if t.label not in self.alphabet:
                raise self.error(f"unknown symbol {t.label}")
            want = self.alphabet.rank(t.label)
            if want != len(t.children):
                raise self.error(
                    f"rank mismatch for {t.label}: expected {want}, got {len(t.children)}")


def render_forest(forest: Forest) -> str:
    return "[ " + " ; ".join(str(t) for t in forest) + " ]"


# ---------------------------------------------------------------------------
# Positions and simple queries.

def positions(t: Tree) -> list[tuple[int, ...]]:
    """All Dewey positions of ``t`` in pre-order (document order)."""
    out: list[tuple[int, ...]] = []

    def walk(node: Tree, path: tuple[int, ...]) -> None:
        out.append(path)
        for i, child in enumerate(node.children, start=1):
            walk(child, path + (i,))

    walk(t, ())
    return out


def forest_positions(forest: Forest) -> list[Position]:
    return [Position(j, p) for j, t in enumerate(forest) for p in positions(t)]


def label_at(forest: Forest, pos: Position) -> str:
    return forest[pos.tree_index].subtree(pos.path).label


def positions_with(t: Tree, pred: Callable[[str], bool]) -> list[tuple[int, ...]]:
    return [p for p in positions(t) if pred(t.subtree(p).label)]


def occurrences(t: Tree, label: str) -> int:
    return sum(1 for p in positions(t) if t.subtree(p).label == label)


def tree_size(t: Tree) -> int:
    return 1 + sum(tree_size(c) for c in t.children)


def tree_height(t: Tree) -> int:
    if not t.children:
        return 0
    return 1 + max(tree_height(c) for c in t.children)


def preorder_labels(t: Tree) -> tuple[str, ...]:
    out: list[str] = []

    def walk(node: Tree) -> None:
        out.append(node.label)
        for c in node.children:
            walk(c)

    walk(t)
    return tuple(out)


def alp(t: Tree, members: Iterable[str] | RankedAlphabet | None = None) -> set[str]:
    """Set of labels occurring in ``t``, optionally restricted."""
    labels = set(preorder_labels(t))
    if members is None:
        return labels
    if isinstance(members, RankedAlphabet):
        return {x for x in labels if x in members}
    keep = set(members)
    return labels & keep


def forest_alp(forest: Forest, members: Iterable[str] | RankedAlphabet | None = None) -> set[str]:
    out: set[str] = set()
    for t in forest:
        out |= alp(t, members)
    return out


def variables_of(t: Tree) -> set[str]:
    return {lab for lab in preorder_labels(t) if is_variable(lab)}


def yield_over(t: Tree, keep: Iterable[str]) -> tuple[str, ...]:
    """Left-to-right sequence of the node labels of ``t`` that lie in ``keep``."""
    keepset = set(keep)
    return tuple(lab for lab in preorder_labels(t) if lab in keepset)


def tree_yield(t: Tree, alphabet: RankedAlphabet, empty_symbol: str = "e") -> tuple[str, ...]:
    """Leaf labels left to right, with the empty-string symbol erased."""
    keep = set(alphabet.symbols(0)) - {empty_symbol}
    return yield_over(t, keep)


def yield_variables(t: Tree) -> tuple[str, ...]:
    return tuple(lab for lab in preorder_labels(t) if is_variable(lab))


# ---------------------------------------------------------------------------
# Patterns.

def is_pattern(t: Tree, k: int) -> bool:
    """True iff each of x1..xk occurs exactly once in ``t`` and no other
    variable occurs (the hole is not a variable and is disallowed too)."""
    seen: dict[str, int] = {}
    for lab in preorder_labels(t):
        if is_variable(lab):
            seen[lab] = seen.get(lab, 0) + 1
        elif lab == HOLE:
            return False
    if len(seen) != k or any(n != 1 for n in seen.values()):
        return False
    return all(f"x{i}" in seen for i in range(1, k + 1))


def pattern_rank(t: Tree) -> int:
    """Rank of a pattern; raises if ``t`` is not a pattern."""
    idxs = sorted(var_index(x) for x in variables_of(t))
    k = len(idxs)
    if not is_pattern(t, k):
        raise TermError(f"not a pattern: {t}")
    return k


def forest_rank(forest: Forest) -> tuple[int, ...]:
    return tuple(pattern_rank(t) for t in forest)


def init_tree(symbol: str, rank: int) -> Tree:
    """The pattern ``symbol(x1,...,xk)``."""
    return Tree(symbol, tuple(var(i) for i in range(1, rank + 1)))


def init_forest(symbols: Iterable[str], alphabet: RankedAlphabet) -> Forest:
    return tuple(init_tree(s, alphabet.rank(s)) for s in symbols)


# ---------------------------------------------------------------------------
# First-order substitution.

def first_order_subst(t: Tree, binding: Mapping[str, Tree]) -> Tree:
    """Replace every occurrence of a bound variable by its image."""
    for key in binding:
        if not (is_variable(key) or key == HOLE):
            raise TermError(f"first-order substitution key is not a variable: {key}")

    def walk(node: Tree) -> Tree:
        if node.label in binding and not node.children:
            return binding[node.label]
        if not node.children:
            return node
        return Tree(node.label, tuple(walk(c) for c in node.children))

    return walk(t)


# ---------------------------------------------------------------------------
# Tree homomorphisms and second-order substitution.

class TreeHomomorphism:
    """Simple (linear, nondeleting) tree homomorphism: symbol -> pattern."""

    __slots__ = ("source", "target", "mapping")

    def __init__(self, source: RankedAlphabet, target: RankedAlphabet,
                 mapping: Mapping[str, Tree]):
        self.source = source
        self.target = target
        self.mapping = dict(mapping)
        for name in source:
            image = self.mapping.get(name)
            if image is None:
                raise TermError(f"homomorphism undefined on {name}")
            if not is_pattern(image, source.rank(name)):
                raise TermError(
                    f"image of {name} is not a rank-{source.rank(name)} pattern: {image}")

    def image(self, symbol: str) -> Tree:
        return self.mapping[symbol]

    def is_projection(self) -> bool:
        for name in self.source:
            image = self.mapping[name]
            if image != init_tree(image.label, self.source.rank(name)):
                return False
        return True

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}->{self.mapping[n]}" for n in self.source)
        return f"TreeHomomorphism({inner})"


def apply_hom(h: TreeHomomorphism, t: Tree | Forest) -> Tree | Forest:
    """The tree-homomorphism extension; variables and the hole pass through."""
    if isinstance(t, tuple):
        return tuple(apply_hom(h, part) for part in t)

    def walk(node: Tree) -> Tree:
        if is_variable(node.label) or node.label == HOLE:
            return node
        if node.label not in h.source:
            raise TermError(f"symbol {node.label} outside source alphabet")
        image = h.image(node.label)
        if not node.children:
            return image
        binding = {f"x{i}": walk(c) for i, c in enumerate(node.children, start=1)}
        return first_order_subst(image, binding)

    return walk(t)


def hom_for_subst(lhs: tuple[str, ...], rhs: Forest, alphabet: RankedAlphabet) -> TreeHomomorphism:
    """Homomorphism over ``alphabet`` corresponding to ``[lhs <- rhs]``."""
    if len(set(lhs)) != len(lhs):
        raise TermError(f"repeated symbol in substitution sequence {lhs}")
    if len(lhs) != len(rhs):
        raise TermError("substitution length mismatch")
    mapping: dict[str, Tree] = {}
    for name in alphabet:
        mapping[name] = init_tree(name, alphabet.rank(name))
    for name, image in zip(lhs, rhs):
        want = alphabet.rank(name)
        if not is_pattern(image, want):
            raise TermError(f"substitute for {name} is not a rank-{want} pattern: {image}")
        mapping[name] = image
    return TreeHomomorphism(alphabet, alphabet, mapping)


def second_order_subst(t: Tree | Forest, lhs: Iterable[str], rhs: Forest,
                       alphabet: RankedAlphabet) -> Tree | Forest:
    """Simultaneous second-order substitution ``t[lhs <- rhs]``."""
    h = hom_for_subst(tuple(lhs), rhs, alphabet)
    return apply_hom(h, t)


# ---------------------------------------------------------------------------
# Permutation-free patterns, renumbering, contexts.

def pf(t: Tree) -> Tree:
    """The unique permutation-free pattern with ``t = pf(t)[x_j <- x_{i_j}]``."""
    order = yield_variables(t)
    if len(set(order)) != len(order):
        raise TermError(f"not linear: {t}")
    binding = {x: var(j) for j, x in enumerate(order, start=1)}
    return first_order_subst(t, binding)


def is_permutation_free(t: Tree) -> bool:
    order = yield_variables(t)
    return order == tuple(f"x{i}" for i in range(1, len(order) + 1))


def ren(t: Tree) -> Tree:
    """Renumber the variables of a linear tree in increasing index order."""
    present = variables_of(t)
    if sum(1 for lab in preorder_labels(t) if is_variable(lab)) != len(present):
        raise TermError(f"not linear: {t}")
    by_index = sorted(present, key=var_index)
    binding = {x: var(j) for j, x in enumerate(by_index, start=1)}
    return first_order_subst(t, binding)


def renh(t: Tree) -> Tree:
    """Renumber a linear context; the hole becomes the last variable."""
    if occurrences(t, HOLE) != 1:
        raise TermError(f"not a context: {t}")
    n = len(variables_of(t))
    renned = ren(t)
    return first_order_subst(renned, {HOLE: var(n + 1)})


def context_split(t: Tree, path: tuple[int, ...]) -> tuple[Tree, Tree]:
    """Split ``t`` at ``path`` into its context (with a hole) and subtree."""
    sub = t.subtree(path)

    def rebuild(node: Tree, p: tuple[int, ...]) -> Tree:
        if not p:
            return Tree(HOLE)
        i = p[0]
        children = list(node.children)
        children[i - 1] = rebuild(children[i - 1], p[1:])
        return Tree(node.label, tuple(children))

    return rebuild(t, path), sub


def plug(context: Tree, filler: Tree) -> Tree:
    return first_order_subst(context, {HOLE: filler})


# ---------------------------------------------------------------------------
# Canonical term order (size, then pre-order label sequence).

def term_key(t: Tree) -> tuple[int, tuple[str, ...]]:
    return (tree_size(t), preorder_labels(t))


def forest_key(forest: Forest) -> tuple:
    return (len(forest), tuple(term_key(t) for t in forest))
