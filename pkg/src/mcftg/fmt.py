"""Textual formats: grammar files, derivation terms, JSON emission.

Grammar files look like::

    terminals:    sigma/2 alpha/1 tau/0
    nonterminals: S/0 B/1
    big: (S) (B)
    initial: S
    rule rho1: (S) -> [ alpha(B(tau)) ] links { (B) }
    rule rho2: (B) -> [ sigma(x1,tau) ] links { }

Synchronous grammars add a ``partition: input A B ; output C D`` line.
Comment lines start with ``#``.
"""
from __future__ import annotations

import json
import re

from .grammar import BigNonterminal, Mcftg, Rule, big_name
from .trees import NAME_RE, Forest, RankedAlphabet, TermError, Tree, render_forest, _TermParser

_RANKED = re.compile(rf"({NAME_RE.pattern})/([0-9]+)$")


class FormatError(ValueError):
    pass


def _parse_ranked(tokens: list[str], where: str) -> RankedAlphabet:
    ranks: dict[str, int] = {}
    for tok in tokens:
        m = _RANKED.match(tok)
        if m is None:
            raise FormatError(f"bad {where} entry {tok!r} (expected name/rank)")
        name, rank = m.group(1), int(m.group(2))
        if name in ranks:
            raise FormatError(f"duplicate {where} symbol {name}")
        ranks[name] = rank
    return RankedAlphabet(ranks)


def parse_big(text: str) -> BigNonterminal:
    text = text.strip()
    if text.startswith("("):
        if not text.endswith(")"):
            raise FormatError(f"unbalanced big nonterminal {text!r}")
        inner = text[1:-1]
        parts = tuple(p.strip() for p in inner.split(","))
    else:
        parts = (text,)
    for p in parts:
        if NAME_RE.fullmatch(p) is None:
            raise FormatError(f"bad nonterminal name {p!r} in {text!r}")
    return parts


def _split_bigs(text: str) -> list[BigNonterminal]:
    out: list[BigNonterminal] = []
    for m in re.finditer(rf"\([^()]*\)|{NAME_RE.pattern}", text):
        out.append(parse_big(m.group(0)))
    return out


_RULE_RE = re.compile(
    rf"rule\s+({NAME_RE.pattern})\s*:\s*(.+?)\s*->\s*(\[.*?\])\s*links\s*\{{(.*?)\}}\s*$")


def parse_grammar(text: str) -> tuple[Mcftg, dict[str, tuple[str, ...]] | None]:
    """Parse a grammar file; returns the grammar and an optional sync
    partition ``{"input": (...), "output": (...)}``."""
    terminals: RankedAlphabet | None = None
    nonterminals: RankedAlphabet | None = None
    bigs: list[BigNonterminal] = []
    initial: BigNonterminal | None = None
    rules: list[Rule] = []
    partition: dict[str, tuple[str, ...]] | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            if line.startswith("terminals:"):
                terminals = _parse_ranked(line[len("terminals:"):].split(), "terminal")
            elif line.startswith("nonterminals:"):
                nonterminals = _parse_ranked(line[len("nonterminals:"):].split(), "nonterminal")
            elif line.startswith("big:"):
                bigs.extend(_split_bigs(line[len("big:"):]))
            elif line.startswith("initial:"):
                initial = parse_big(line[len("initial:"):].strip())
            elif line.startswith("partition:"):
                partition = _parse_partition(line[len("partition:"):])
            elif line.startswith("rule"):
                if terminals is None or nonterminals is None:
                    raise FormatError("rule before alphabet declarations")
                rules.append(_parse_rule(line, nonterminals.union(terminals)))
            else:
                raise FormatError(f"unrecognized line {line!r}")
        except (FormatError, TermError) as exc:
            raise FormatError(f"line {lineno}: {exc}") from None

    if terminals is None or nonterminals is None:
        raise FormatError("missing terminals/nonterminals declaration")
    if initial is None:
        raise FormatError("missing initial declaration")
    grammar = Mcftg(nonterminals, bigs, terminals, initial, rules)
    return grammar, partition


def _parse_partition(text: str) -> dict[str, tuple[str, ...]]:
    sides: dict[str, tuple[str, ...]] = {}
    for chunk in text.split(";"):
        tokens = chunk.split()
        if not tokens:
            continue
        kind, names = tokens[0], tuple(tokens[1:])
        if kind not in ("input", "output"):
            raise FormatError(f"partition side must be input/output, got {kind!r}")
        sides[kind] = names
    if set(sides) != {"input", "output"}:
        raise FormatError("partition needs both an input and an output side")
    return sides


def _parse_rule(line: str, alphabet: RankedAlphabet) -> Rule:
    m = _RULE_RE.match(line)
    if m is None:
        raise FormatError(f"bad rule syntax: {line!r}")
    name, lhs_text, rhs_text, links_text = m.groups()
    lhs = parse_big(lhs_text)
    parser = _TermParser(rhs_text, alphabet)
    parser.skip_ws()
    rhs = parser.parse_forest()
    parser.expect_end()
    links = tuple(_split_bigs(links_text))
    return Rule(name, lhs, rhs, links)


def render_grammar(g: Mcftg, partition: dict[str, tuple[str, ...]] | None = None) -> str:
    lines = []
    lines.append("terminals: " + " ".join(f"{n}/{r}" for n, r in g.terminals.items()))
    lines.append("nonterminals: " + " ".join(f"{n}/{r}" for n, r in g.nonterminals.items()))
    lines.append("big: " + " ".join(big_name(b) for b in g.bigs))
    lines.append("initial: " + (g.initial[0] if len(g.initial) == 1 else big_name(g.initial)))
    if partition is not None:
        lines.append("partition: input " + " ".join(partition["input"])
                     + " ; output " + " ".join(partition["output"]))
    for r in g.rules:
        links = " ".join(big_name(b) for b in r.links)
        lines.append(f"rule {r.name}: {big_name(r.lhs)} -> {render_forest(r.rhs)} "
                     f"links {{ {links} }}")
    return "\n".join(lines) + "\n"


def grammar_to_json(g: Mcftg) -> dict:
    return {
        "terminals": dict(g.terminals.items()),
        "nonterminals": dict(g.nonterminals.items()),
        "big": [list(b) for b in g.bigs],
        "initial": list(g.initial),
        "rules": [
            {"name": r.name, "lhs": list(r.lhs), "rhs": [str(t) for t in r.rhs],
             "links": [list(b) for b in r.links]}
            for r in g.rules
        ],
    }


# ---------------------------------------------------------------------------
# Derivation trees in term syntax, with `(A,B)` big-nonterminal leaves.

def parse_derivation(text: str, g: Mcftg) -> Tree:
    pos = 0

    def error(msg: str) -> FormatError:
        return FormatError(f"{msg} at offset {pos} in {text!r}")

    def skip_ws() -> None:
        nonlocal pos
        while pos < len(text) and text[pos].isspace():
            pos += 1

    def parse_node() -> Tree:
        nonlocal pos
        skip_ws()
        if pos < len(text) and text[pos] == "(":
            end = text.find(")", pos)
            if end < 0:
                raise error("unbalanced big-nonterminal leaf")
            label = big_name(parse_big(text[pos:end + 1]))
            pos = end + 1
            return Tree(label)
        m = NAME_RE.match(text, pos)
        if m is None:
            raise error("expected a rule name or big-nonterminal leaf")
        name = m.group(0)
        pos = m.end()
        skip_ws()
        children: list[Tree] = []
        if pos < len(text) and text[pos] == "(":
            pos += 1
            children.append(parse_node())
            skip_ws()
            while pos < len(text) and text[pos] == ",":
                pos += 1
                children.append(parse_node())
                skip_ws()
            if pos >= len(text) or text[pos] != ")":
                raise error("expected ')'")
            pos += 1
        if not g.has_rule(name):
            # rank-0 big nonterminal written without parentheses
            if any(b == (name,) for b in g.bigs) and not children:
                return Tree(big_name((name,)))
            raise error(f"unknown rule {name}")
        return Tree(name, tuple(children))

    node = parse_node()
    skip_ws()
    if pos != len(text):
        raise error("trailing input")
    return node


def load_grammar(path: str) -> tuple[Mcftg, dict[str, tuple[str, ...]] | None]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_grammar(handle.read())


def dump_json(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
