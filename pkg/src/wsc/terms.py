"""Rational term graphs and the weak subsumption preorder.

A term graph is a rooted, finite, possibly cyclic graph whose nodes are
either labeled with a constructor symbol (and carry arity-many ordered
children) or are unlabeled holes.  A graph denotes a finite or infinite
tree by unrolling; cycles give the rational (infinitely deep, finitely
varied) trees.

The instance set of a graph is what its labeled skeleton permits: a hole
permits every tree, and a labeled node permits exactly trees with the
same constructor on top and permitted children below.  Note this is the
*weak* reading: two occurrences of the same hole are independent, so
f(a, b) is an instance of f(x, x).

``weak_subsumes(s, t)`` decides "every instance of t is an instance of
s" by computing the greatest simulation between the two graphs:
wherever s is labeled, t must carry the same symbol and the child pairs
must simulate in turn.  ``graph_equal`` is the analogous bisimulation
(equality of denoted trees, hole names respected).

All values here are immutable after construction and all operations are
pure, so everything is safe to share between threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping


@dataclass(frozen=True, order=True)
class Symbol:
    """A constructor, identified by name *and* arity.

    The same name at two arities is two unrelated symbols; both clash
    detection and arity checks fall out of plain inequality of pairs.
    """

    name: str
    arity: int

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True, eq=False)
class TermGraph:
    """A rooted term graph.  Nodes are ints; each node is labeled or a hole.

    labels:   node -> Symbol for labeled nodes
    children: node -> tuple of child nodes, len == label arity
    holes:    node -> hole identifier for unlabeled nodes

    ``eq=False``: graphs compare by identity; use graph_equal for
    semantic equality.
    """

    root: int
    labels: Mapping[int, Symbol]
    children: Mapping[int, tuple[int, ...]]
    holes: Mapping[int, str]

    def __post_init__(self) -> None:
        nodes = self.nodes()
        if set(self.labels) & set(self.holes):
            raise ValueError("a node cannot be both labeled and a hole")
        if self.root not in nodes:
            raise ValueError("root is not a node of the graph")
        if set(self.children) != set(self.labels):
            raise ValueError("children must be defined exactly on labeled nodes")
        for n, sym in self.labels.items():
            kids = self.children[n]
            if len(kids) != sym.arity:
                raise ValueError(f"node {n}: {sym} expects {sym.arity} children, got {len(kids)}")
            for k in kids:
                if k not in nodes:
                    raise ValueError(f"node {n} has dangling child {k}")
        # every node reachable from the root
        seen = {self.root}
        stack = [self.root]
        while stack:
            n = stack.pop()
            for k in self.children.get(n, ()):
                if k not in seen:
                    seen.add(k)
                    stack.append(k)
        if seen != nodes:
            raise ValueError("unreachable nodes present")

    def nodes(self) -> set[int]:
        return set(self.labels) | set(self.holes)

    def label(self, n: int) -> Symbol | None:
        return self.labels.get(n)

    def __str__(self) -> str:
        return format_term(self)

    def __repr__(self) -> str:
        return f"TermGraph({format_term(self)!r})"


def hole(name: str) -> TermGraph:
    """A single unlabeled node."""
    return TermGraph(0, {}, {}, {0: name})


def app(sym: Symbol | str, *args: TermGraph) -> TermGraph:
    """Apply a constructor to argument graphs (taking disjoint copies).

    A bare string is promoted to Symbol(name, len(args)).
    """
    if isinstance(sym, str):
        sym = Symbol(sym, len(args))
    if sym.arity != len(args):
        raise ValueError(f"{sym} applied to {len(args)} arguments")
    labels: dict[int, Symbol] = {0: sym}
    children: dict[int, tuple[int, ...]] = {}
    holes: dict[int, str] = {}
    kids = []
    off = 1
    for a in args:
        remap = {n: off + i for i, n in enumerate(sorted(a.nodes()))}
        labels.update({remap[n]: s for n, s in a.labels.items()})
        children.update({remap[n]: tuple(remap[k] for k in ks) for n, ks in a.children.items()})
        holes.update({remap[n]: h for n, h in a.holes.items()})
        kids.append(remap[a.root])
        off += len(remap)
    children[0] = tuple(kids)
    return TermGraph(0, labels, children, holes)


def simulation_relation(s: TermGraph, t: TermGraph) -> set[tuple[int, int]]:
    """Greatest relation R over nodes(s) x nodes(t) such that for (p, q) in R:
    if p is labeled then q carries the same symbol and all child pairs are in R.

    (s.root, t.root) in R  iff  every instance of t is an instance of s.
    """
    rel = {(p, q) for p in s.nodes() for q in t.nodes()}
    changed = True
    while changed:
        changed = False
        for p, q in list(rel):
            lab = s.labels.get(p)
            if lab is None:
                continue
            if t.labels.get(q) != lab or any(
                (pi, qi) not in rel for pi, qi in zip(s.children[p], t.children[q])
            ):
                rel.discard((p, q))
                changed = True
    return rel


def bisimulation_relation(s: TermGraph, t: TermGraph) -> set[tuple[int, int]]:
    """Greatest relation matching labels in both directions and hole names."""
    rel = {(p, q) for p in s.nodes() for q in t.nodes()}
    changed = True
    while changed:
        changed = False
        for p, q in list(rel):
            lp, lq = s.labels.get(p), t.labels.get(q)
            if lp is None and lq is None:
                ok = s.holes[p] == t.holes[q]
            elif lp is not None and lp == lq:
                ok = all((pi, qi) in rel for pi, qi in zip(s.children[p], t.children[q]))
            else:
                ok = False
            if not ok:
                rel.discard((p, q))
                changed = True
    return rel


def weak_subsumes(s: TermGraph, t: TermGraph) -> bool:
    """True iff every instance of t is an instance of s (t is below s).

    Holes in s constrain nothing; hole identity plays no role here.
    """
    return (s.root, t.root) in simulation_relation(s, t)


def graph_equal(s: TermGraph, t: TermGraph) -> bool:
    """True iff s and t denote the same tree: same labels, and same hole
    names, along every path."""
    return (s.root, t.root) in bisimulation_relation(s, t)


def instance_member(t: TermGraph, s: TermGraph, depth: int) -> bool:
    """Bounded probe: does t agree with s's labeled skeleton down to `depth`?

    Checks the pair currently in view before descending, so a root
    mismatch is caught even at depth 0.  `depth` counts edges descended.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")

    def go(tn: int, sn: int, d: int) -> bool:
        lab = s.labels.get(sn)
        if lab is None:
            return True
        if t.labels.get(tn) != lab:
            return False
        if d == 0:
            return True
        return all(go(ti, si, d - 1) for ti, si in zip(t.children[tn], s.children[sn]))

    return go(t.root, s.root, depth)


# ---------------------------------------------------------------------------
# Textual syntax.
#
#   term   ::=  "rec" NAME "." term     cyclic back-reference binder
#            |  NAME "(" [term ("," term)*] ")"
#            |  NAME                    a hole (or a back-reference if bound)
#
# Names match [A-Za-z_][A-Za-z0-9_]*; "rec" is reserved.  Symbols always
# carry parentheses (nullary: "a()"), so a bare name is never a symbol.
# The body of a "rec" must be an application: a cycle must pass through
# at least one constructor to denote anything.
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*|[().,]|\S)")


class TermSyntaxError(ValueError):
    pass


def _tokenize(text: str) -> list[str]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            break
        tok = m.group(1)
        if tok not in "().," and not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            raise TermSyntaxError(f"bad character {tok!r} in term")
        toks.append(tok)
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, toks: list[str]):
        self.toks = toks
        self.i = 0
        self.labels: dict[int, Symbol] = {}
        self.children: dict[int, tuple[int, ...]] = {}
        self.holes: dict[int, str] = {}
        self.hole_ids: dict[str, int] = {}
        self.n = 0

    def fresh(self) -> int:
        self.n += 1
        return self.n - 1

    def peek(self) -> str | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, what: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise TermSyntaxError("unexpected end of term")
        if what is not None and tok != what:
            raise TermSyntaxError(f"expected {what!r}, found {tok!r}")
        self.i += 1
        return tok

    def term(self, env: dict[str, int], into: int | None = None) -> int:
        tok = self.take()
        if tok == "rec":
            name = self.take()
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name) or name == "rec":
                raise TermSyntaxError(f"bad rec binder name {name!r}")
            self.take(".")
            if self.peek() == "rec" or (self.peek() is not None and self.toks[self.i + 1 : self.i + 2] == ["("]):
                nid = self.fresh() if into is None else into
                return self.term({**env, name: nid}, into=nid)
            raise TermSyntaxError("rec body must be an application")
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            raise TermSyntaxError(f"expected a term, found {tok!r}")
        if self.peek() == "(":
            self.take("(")
            nid = self.fresh() if into is None else into
            args: list[int] = []
            if self.peek() != ")":
                args.append(self.term(env))
                while self.peek() == ",":
                    self.take(",")
                    args.append(self.term(env))
            self.take(")")
            self.labels[nid] = Symbol(tok, len(args))
            self.children[nid] = tuple(args)
            return nid
        # bare name: back-reference if bound, hole otherwise
        if into is not None:
            raise TermSyntaxError("rec body must be an application")
        if tok in env:
            return env[tok]
        if tok == "rec":
            raise TermSyntaxError("'rec' is reserved")
        if tok not in self.hole_ids:
            nid = self.fresh()
            self.hole_ids[tok] = nid
            self.holes[nid] = tok
        return self.hole_ids[tok]


def parse_term(text: str) -> TermGraph:
    """Parse the textual term syntax into a graph."""
    p = _Parser(_tokenize(text))
    root = p.term({})
    if p.peek() is not None:
        raise TermSyntaxError(f"trailing input after term: {p.peek()!r}")
    # drop hole nodes never reached (possible via shared-hole bookkeeping)
    reach = {root}
    stack = [root]
    while stack:
        n = stack.pop()
        for k in p.children.get(n, ()):
            if k not in reach:
                reach.add(k)
                stack.append(k)
    labels = {n: s for n, s in p.labels.items() if n in reach}
    children = {n: ks for n, ks in p.children.items() if n in reach}
    holes = {n: h for n, h in p.holes.items() if n in reach}
    return TermGraph(root, labels, children, holes)


def format_term(g: TermGraph) -> str:
    """Print a graph in the textual syntax; cycles get `rec X. ...` binders.

    Acyclic sharing is unfolded (the denoted tree is unchanged).
    Round trip: graph_equal(parse_term(format_term(g)), g).
    """
    binder: dict[int, str] = {}
    used = set(g.holes.values())
    counter = [0]

    def fresh_binder() -> str:
        while True:
            counter[0] += 1
            name = f"X{counter[0]}"
            if name not in used and name != "rec":
                return name

    def emit(n: int, on_path: frozenset[int]) -> str:
        if n in g.holes:
            return g.holes[n]
        if n in on_path:
            if n not in binder:
                binder[n] = fresh_binder()
            return binder[n]
        parts = [emit(k, on_path | {n}) for k in g.children[n]]
        s = f"{g.labels[n].name}({', '.join(parts)})"
        if n in binder:
            s = f"rec {binder[n]}. {s}"
        return s

    return emit(g.root, frozenset())
