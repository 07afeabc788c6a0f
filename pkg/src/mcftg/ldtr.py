"""Linear deterministic top-down tree transducers with regular look-ahead.

These are the equivalence yardstick: every grammar transformation ships a
pair of transducers mapping derivation trees back and forth, verified
empirically on bounded enumerations (never by deciding transducer
equivalence).
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .grammar import Mcftg, big_name, derivation_tree_grammar, rule_alphabet, value
from .rtg import (Rtg, RtgRule, rtg_enumerate, rtg_is_empty, rtg_member, rtg_product,
                  rtg_reduce)
from .trees import (Forest, RankedAlphabet, TermError, Tree, TreeHomomorphism, apply_hom,
                    first_order_subst, init_tree, preorder_labels, yield_over)

_CALL_RE = re.compile(r"^<(.+),y([1-9][0-9]*)>$")


def call_label(state: str, child: int) -> str:
    return f"<{state},y{child}>"


def parse_call(label: str) -> tuple[str, int] | None:
    m = _CALL_RE.match(label)
    if m is None:
        return None
    return m.group(1), int(m.group(2))


class NondeterminismError(RuntimeError):
    """Two rules applied to the same node: the transducer is invalid."""


@dataclass(frozen=True, slots=True)
class LdtrRule:
    state: str
    symbol: str
    self_la: Rtg | None
    child_la: tuple[Rtg | None, ...]
    rhs: Tree

    def __str__(self) -> str:
        las = ",".join("*" if la is None else la.initial for la in self.child_la)
        return f"<{self.state}, {self.symbol}({las})> -> {self.rhs}"


class LdtrTransducer:
    __slots__ = ("states", "input_alphabet", "output_alphabet", "initial", "rules", "_index")

    def __init__(self, states: Iterable[str], input_alphabet: RankedAlphabet,
                 output_alphabet: RankedAlphabet, initial: str, rules: Iterable[LdtrRule]):
        self.states = frozenset(states)
        self.input_alphabet = input_alphabet
        self.output_alphabet = output_alphabet
        self.initial = initial
        self.rules = tuple(rules)
        if initial not in self.states:
            raise TermError(f"initial state {initial} missing")
        index: dict[tuple[str, str], list[LdtrRule]] = {}
        for r in self.rules:
            if r.symbol not in input_alphabet:
                raise TermError(f"rule symbol {r.symbol} outside input alphabet")
            if len(r.child_la) != input_alphabet.rank(r.symbol):
                raise TermError(f"look-ahead arity mismatch in rule for {r.symbol}")
            index.setdefault((r.state, r.symbol), []).append(r)
        self._index = index

    def rules_for(self, state: str, symbol: str) -> list[LdtrRule]:
        return self._index.get((state, symbol), [])

    def is_relabeling(self) -> bool:
        for r in self.rules:
            k = self.input_alphabet.rank(r.symbol)
            kids = r.rhs.children
            if r.rhs.label not in self.output_alphabet or len(kids) != k:
                return False
            for i, kid in enumerate(kids, start=1):
                call = parse_call(kid.label)
                if call is None or call[1] != i or kid.children:
                    return False
        return True

    def __repr__(self) -> str:
        return f"LdtrTransducer({len(self.states)} states, {len(self.rules)} rules)"


def ldtr_apply(m: LdtrTransducer, s: Tree, state: str | None = None) -> Tree | None:
    """The state-translation of ``s``; ``None`` when undefined."""
    q = m.initial if state is None else state
    memo: dict[tuple[str, Tree], Tree | None] = {}

    def member(la: Rtg | None, t: Tree) -> bool:
        return la is None or rtg_member(la, t)

    def run(q: str, t: Tree) -> Tree | None:
        key = (q, t)
        if key in memo:
            return memo[key]
        applicable = [r for r in m.rules_for(q, t.label)
                      if member(r.self_la, t)
                      and all(member(la, c) for la, c in zip(r.child_la, t.children))]
        if len(applicable) > 1:
            raise NondeterminismError(
                f"two rules applicable in state {q} at {t.label}")
        if not applicable:
            memo[key] = None
            return None
        rule = applicable[0]

        def build(node: Tree) -> Tree | None:
            call = parse_call(node.label)
            if call is not None:
                q2, i = call
                return run(q2, t.children[i - 1])
            kids = []
            for c in node.children:
                sub = build(c)
                if sub is None:
                    return None
                kids.append(sub)
            return Tree(node.label, tuple(kids))

        out = build(rule.rhs)
        memo[key] = out
        return out

    return run(q, s)


def ldtr_check(m: LdtrTransducer) -> list[str]:
    """Linearity (syntactic) and determinism (pairwise look-ahead emptiness)."""
    problems: list[str] = []
    for r in m.rules:
        used: set[int] = set()
        for lab in preorder_labels(r.rhs):
            call = parse_call(lab)
            if call is None:
                continue
            if call[1] in used:
                problems.append(f"rule {r} uses y{call[1]} twice")
            used.add(call[1])
            if call[0] not in m.states:
                problems.append(f"rule {r} calls unknown state {call[0]}")

    def disjoint(a: Rtg | None, b: Rtg | None) -> bool:
        if a is None and b is None:
            return False
        if a is None:
            return rtg_is_empty(b)
        if b is None:
            return rtg_is_empty(a)
        return rtg_is_empty(rtg_product(a, b))

    for (state, symbol), rules in sorted(m._index.items()):
        for r1, r2 in itertools.combinations(rules, 2):
            las1 = (r1.self_la,) + r1.child_la
            las2 = (r2.self_la,) + r2.child_la
            if not any(disjoint(a, b) for a, b in zip(las1, las2)):
                problems.append(
                    f"rules for <{state},{symbol}> lack disjoint look-ahead: {r1} / {r2}")
    return problems


# ---------------------------------------------------------------------------
# Equivalence witnesses.

Phi = tuple
IDENTITY: Phi = ("identity",)


def phi_hom(h: TreeHomomorphism) -> Phi:
    return ("hom", h)


def phi_yield(delta: Iterable[str], empty_symbol: str) -> Phi:
    return ("yield", frozenset(delta), empty_symbol)


def phi_monadic(empty_symbol: str) -> Phi:
    return ("monadic", empty_symbol)


def spine_tree(labels: Iterable[str], empty_symbol: str) -> Tree:
    out = Tree(empty_symbol)
    for lab in reversed(tuple(labels)):
        out = Tree(lab, (out,))
    return out


def apply_phi(phi: Phi, forest: Forest) -> Forest:
    kind = phi[0]
    if kind == "identity":
        return forest
    if kind == "hom":
        return tuple(apply_hom(phi[1], t) for t in forest)
    if kind == "yield":
        _, delta, empty = phi
        return tuple(spine_tree(yield_over(t, delta), empty) for t in forest)
    if kind == "monadic":
        empty = phi[1]
        return tuple(spine_tree(preorder_labels(t), empty) for t in forest)
    raise TermError(f"unknown phi {phi!r}")


@dataclass(frozen=True, slots=True)
class EquivalenceWitness:
    forward: LdtrTransducer
    backward: LdtrTransducer
    phi: Phi = IDENTITY


@dataclass(frozen=True, slots=True)
class WitnessStep:
    src: Mcftg
    dst: Mcftg
    witness: EquivalenceWitness
    label: str = ""


@dataclass(frozen=True, slots=True)
class PassResult:
    grammar: Mcftg
    steps: tuple[WitnessStep, ...] = ()
    notes: tuple[str, ...] = ()
    partial: bool = False

    def chained(self, later: "PassResult") -> "PassResult":
        return PassResult(later.grammar, self.steps + later.steps,
                          self.notes + later.notes, self.partial or later.partial)


def witness_verify(g: Mcftg, g2: Mcftg, w: EquivalenceWitness, height: int) -> list[str]:
    """Check both witness clauses on every derivation tree up to ``height``."""
    failures: list[str] = []
    der1 = derivation_tree_grammar(g)
    der2 = derivation_tree_grammar(g2)
    for d in sorted(rtg_enumerate(der1, height), key=str):
        image = ldtr_apply(w.forward, d)
        if image is None:
            failures.append(f"forward undefined on {d}")
            continue
        if not rtg_member(der2, image):
            failures.append(f"forward image not a derivation tree: {d} -> {image}")
            continue
        if value(g2, image) != apply_phi(w.phi, value(g, d)):
            failures.append(f"forward value mismatch on {d}")
    for d2 in sorted(rtg_enumerate(der2, height), key=str):
        image = ldtr_apply(w.backward, d2)
        if image is None:
            failures.append(f"backward undefined on {d2}")
            continue
        if not rtg_member(der1, image):
            failures.append(f"backward image not a derivation tree: {d2} -> {image}")
            continue
        if apply_phi(w.phi, value(g, image)) != value(g2, d2):
            failures.append(f"backward value mismatch on {d2}")
    return failures


def verify_steps(result: PassResult, height: int) -> list[str]:
    failures = []
    for step in result.steps:
        for msg in witness_verify(step.src, step.dst, step.witness, height):
            failures.append(f"[{step.label}] {msg}" if step.label else msg)
    return failures


# ---------------------------------------------------------------------------
# Stock transducers and witness builders.

def identity_transducer(alphabet: RankedAlphabet) -> LdtrTransducer:
    q = "q"
    rules = [LdtrRule(q, s, None, (None,) * alphabet.rank(s),
                      Tree(s, tuple(Tree(call_label(q, i))
                                    for i in range(1, alphabet.rank(s) + 1))))
             for s in alphabet]
    return LdtrTransducer({q}, alphabet, alphabet, q, rules)


def projection_transducer(source: RankedAlphabet, target: RankedAlphabet,
                          label_map: Mapping[str, str]) -> LdtrTransducer:
    """One-state relabeling ``symbol -> label_map[symbol]`` (identity default)."""
    q = "q"
    rules = []
    for s in source:
        out = label_map.get(s, s)
        k = source.rank(s)
        rules.append(LdtrRule(q, s, None, (None,) * k,
                              Tree(out, tuple(Tree(call_label(q, i))
                                              for i in range(1, k + 1)))))
    return LdtrTransducer({q}, source, target, q, rules)


def projection_witness(src: Mcftg, dst: Mcftg, fwd_map: Mapping[str, str],
                       bwd_map: Mapping[str, str], phi: Phi = IDENTITY,
                       label: str = "") -> WitnessStep:
    fwd = projection_transducer(rule_alphabet(src), rule_alphabet(dst), fwd_map)
    bwd = projection_transducer(rule_alphabet(dst), rule_alphabet(src), bwd_map)
    return WitnessStep(src, dst, EquivalenceWitness(fwd, bwd, phi), label)


def attribute_witness(src: Mcftg, dst: Mcftg, origin: Mapping[str, str],
                      label: str = "") -> WitnessStep:
    """Witness for bottom-up attribute relabelings.

    ``origin`` maps each rule name of ``dst`` to the rule of ``src`` it
    refines.  The forward transducer recognizes the attribute of each
    subtree with look-ahead RTGs read off the refined grammar itself.
    """
    src_rules = rule_alphabet(src)
    dst_rules = rule_alphabet(dst)
    attr = Rtg([big_name(b) for b in dst.bigs], src_rules,
               big_name(dst.initial),
               [RtgRule(big_name(r.lhs), origin[r.name],
                        tuple(big_name(b) for b in r.links))
                for r in dst.rules])
    q = "q"
    fwd_rules = []
    for r in dst.rules:
        k = len(r.links)
        las = tuple(attr.with_initial(big_name(b)) for b in r.links)
        rhs = Tree(r.name, tuple(Tree(call_label(q, i)) for i in range(1, k + 1)))
        fwd_rules.append(LdtrRule(q, origin[r.name], None, las, rhs))
    fwd = LdtrTransducer({q}, src_rules, dst_rules, q, fwd_rules)
    bwd = projection_transducer(dst_rules, src_rules, dict(origin))
    return WitnessStep(src, dst, EquivalenceWitness(fwd, bwd), label)


# ---------------------------------------------------------------------------
# Inverse images of regular tree languages.

def ldtr_inverse_image(m: LdtrTransducer, h: Rtg) -> Rtg:
    """RTG for ``{s : M(s) defined and M(s) in L(h)}``.

    One bottom-up behavior construction covers both the look-ahead-free
    case (where it degenerates to the direct closure over ``h``) and
    transducers with look-ahead (tracked by subset states per look-ahead
    grammar core).
    """
    if m.output_alphabet != h.terminals:
        raise TermError("transducer output alphabet differs from RTG alphabet")
    omega = m.input_alphabet

    cores: list[Rtg] = []
    core_ids: dict[tuple, int] = {}

    def core_of(la: Rtg) -> int:
        key = la.core_key()
        if key not in core_ids:
            core_ids[key] = len(cores)
            cores.append(la)
        return core_ids[key]

    for r in m.rules:
        for la in (r.self_la, *r.child_la):
            if la is not None:
                core_of(la)

    def la_step(core: Rtg, symbol: str, parts: tuple[frozenset[str], ...]) -> frozenset[str]:
        out = set()
        for rule in core._by_symbol.get(symbol, []):
            if all(c in p for c, p in zip(rule.children, parts)):
                out.add(rule.lhs)
        return frozenset(out)

    def holds(la: Rtg | None, la_parts) -> bool:
        if la is None:
            return True
        return la.initial in la_parts[core_of(la)]

    Behavior = tuple  # (r_part, la_parts)

    def step(symbol: str, kids: tuple[Behavior, ...]) -> Behavior:
        la_parts = tuple(
            la_step(core, symbol, tuple(k[1][ci] for k in kids))
            for ci, core in enumerate(cores))
        r_part: set[tuple[str, str]] = set()
        for (state, sym), rules in m._index.items():
            if sym != symbol:
                continue
            for rule in rules:
                if not holds(rule.self_la, la_parts):
                    continue
                if not all(holds(la, k[1]) for la, k in zip(rule.child_la, kids)):
                    continue

                def hset(node: Tree) -> frozenset[str]:
                    call = parse_call(node.label)
                    if call is not None:
                        q2, i = call
                        return frozenset(a for (qq, a) in kids[i - 1][0] if qq == q2)
                    child_sets = [hset(c) for c in node.children]
                    out = set()
                    for hr in h._by_symbol.get(node.label, []):
                        if all(c in cs for c, cs in zip(hr.children, child_sets)):
                            out.add(hr.lhs)
                    return frozenset(out)

                for a in hset(rule.rhs):
                    r_part.add((state, a))
        return (frozenset(r_part), la_parts)

    behaviors: dict[Behavior, str] = {}
    transitions: list[tuple[str, str, tuple[str, ...]]] = []

    def behavior_name(b: Behavior) -> str:
        if b not in behaviors:
            behaviors[b] = f"b{len(behaviors)}"
        return behaviors[b]

    seen_steps: set = set()
    changed = True
    while changed:
        changed = False
        current = list(behaviors)
        for symbol in omega:
            k = omega.rank(symbol)
            for kids in itertools.product(current, repeat=k):
                key = (symbol, kids)
                if key in seen_steps:
                    continue
                seen_steps.add(key)
                b = step(symbol, kids)
                kid_names = tuple(behaviors[x] for x in kids)
                if b not in behaviors:
                    behavior_name(b)
                    changed = True
                transitions.append((behaviors[b], symbol, kid_names))

    accept = "Acc"
    rules = [RtgRule(lhs, symbol, kids) for lhs, symbol, kids in transitions]
    for b, name in behaviors.items():
        if (m.initial, h.initial) in b[0]:
            for lhs, symbol, kids in transitions:
                if lhs == name:
                    rules.append(RtgRule(accept, symbol, kids))
    nts = set(behaviors.values()) | {accept}
    return rtg_reduce(Rtg(nts, omega, accept, rules))
