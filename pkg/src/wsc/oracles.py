"""Independent reference procedures used to cross-check the engine.

Four oracles, each deliberately built on different machinery than the
rule engine:

  naive_solve     a budgeted run of the simple-minded rewriting scheme
                  that replaces x <= y by a fresh copy of y's equation;
                  sound for unsatisfiability but prone to running
                  forever, hence the budget.
  rational_unify  classic union-find unification over rational trees
                  for the equation-only fragment (no occurs check; only
                  constructor clashes fail).
  check_witness   evaluates a candidate solution atom by atom against
                  the term-graph semantics.
  witness_search  brute-force enumeration of small term graphs, looking
                  for an assignment that check_witness accepts.

Everything here is a pure function over immutable inputs.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .constraints import (
    Atom,
    Eq,
    EqApp,
    Store,
    Sub,
    SubApp,
    atom_base_vars,
    atom_vars,
    format_atom,
    is_base_only,
)
from .engine import Verdict
from .terms import (
    Symbol,
    TermGraph,
    app,
    bisimulation_relation,
    format_term,
    hole,
    parse_term,
    simulation_relation,
    weak_subsumes,
    graph_equal,
)


def _as_atoms(atoms: Union[Iterable[Atom], Store]) -> list[Atom]:
    return atoms.atom_list() if isinstance(atoms, Store) else list(atoms)


# --- the budgeted naive procedure ----------------------------------------------


class NaiveResult(enum.Enum):
    UNSAT = "unsat"
    EXHAUSTED = "exhausted"


def naive_solve(atoms: Union[Iterable[Atom], Store], budget: int = 200) -> NaiveResult:
    """Run the naive rewriting scheme for at most `budget` rule firings.

    State is a list of oriented facts; the rules, in priority order:

      clash    two equations x = f(...), x = g(...), f != g: contradiction
      decom    x = f(u1..un), x = f(v1..vn): replace the first equation
               by the argument equations ui = vi
      elim     x = y with x occurring elsewhere: substitute [y/x] in the
               rest (the equation is kept, and x never returns)
      descend  x <= y with an equation y = f(z1..zn): replace it by
               x = f(u1..un) for fresh u's, plus ui <= zi

    descend is what makes the scheme loop on cyclic constraints — the
    fresh variables (drawn from a reserved ~d* range) can multiply
    forever — so UNSAT is trustworthy and EXHAUSTED means nothing,
    covering both a spent budget and a fixpoint without contradiction.
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    fresh = itertools.count(1)
    state: list[tuple] = []
    for a in _as_atoms(atoms):
        if not is_base_only(a):
            raise ValueError(f"input atoms must use base variables only: {format_atom(a)}")
        if isinstance(a, Eq):
            state.append(("eq", a.lhs.parts[0], a.rhs.parts[0]))
        elif isinstance(a, EqApp):
            state.append(("eqapp", a.lhs.parts[0], a.sym, tuple(v.parts[0] for v in a.args)))
        elif isinstance(a, Sub):
            state.append(("sub", a.lhs.parts[0], a.rhs.parts[0]))
        else:  # x <= f(ys): introduce the middle-man equation up front
            mid = f"~d{next(fresh)}"
            state.append(("sub", a.lhs.parts[0], mid))
            state.append(("eqapp", mid, a.sym, tuple(v.parts[0] for v in a.args)))

    def occurs(name: str, skip: int) -> bool:
        for i, t in enumerate(state):
            if i == skip:
                continue
            if t[1] == name:
                return True
            if t[0] in ("eq", "sub") and t[2] == name:
                return True
            if t[0] == "eqapp" and name in t[3]:
                return True
        return False

    def rename(name: str, old: str, new: str) -> str:
        return new if name == old else name

    spent = 0
    while spent < budget:
        # clash / decom: first equation pair on the same variable
        action = None
        first_app: dict[str, int] = {}
        for i, t in enumerate(state):
            if t[0] != "eqapp":
                continue
            j = first_app.setdefault(t[1], i)
            if j != i:
                other = state[j]
                action = ("clash",) if other[2] != t[2] else ("decom", j, i)
                break
        if action is None:
            for i, t in enumerate(state):
                if t[0] == "eq" and t[1] != t[2] and occurs(t[1], i):
                    action = ("elim", i)
                    break
        if action is None:
            for i, t in enumerate(state):
                if t[0] != "sub":
                    continue
                partner = next(
                    (j for j, o in enumerate(state) if o[0] == "eqapp" and o[1] == t[2]),
                    None,
                )
                if partner is not None:
                    action = ("descend", i, partner)
                    break
        if action is None:
            return NaiveResult.EXHAUSTED  # fixpoint without contradiction
        spent += 1
        if action[0] == "clash":
            return NaiveResult.UNSAT
        if action[0] == "decom":
            j, i = action[1], action[2]
            _, _, _, us = state[j]
            _, _, _, vs = state[i]
            del state[j]
            state.extend(("eq", a, b) for a, b in zip(us, vs))
        elif action[0] == "elim":
            i = action[1]
            _, old, new = state[i]
            for k, t in enumerate(state):
                if k == i:
                    continue
                if t[0] == "eq":
                    state[k] = ("eq", rename(t[1], old, new), rename(t[2], old, new))
                elif t[0] == "sub":
                    state[k] = ("sub", rename(t[1], old, new), rename(t[2], old, new))
                else:
                    state[k] = (
                        "eqapp",
                        rename(t[1], old, new),
                        t[2],
                        tuple(rename(n, old, new) for n in t[3]),
                    )
        else:  # descend
            i, partner = action[1], action[2]
            _, x, _ = state[i]
            _, _, sym, zs = state[partner]
            us = tuple(f"~d{next(fresh)}" for _ in zs)
            del state[i]
            state.append(("eqapp", x, sym, us))
            state.extend(("sub", un, zn) for un, zn in zip(us, zs))
    return NaiveResult.EXHAUSTED


# --- rational-tree unification ----------------------------------------------------


def rational_unify(atoms: Union[Iterable[Atom], Store]) -> Verdict:
    """Union-find unification over rational trees for equations only.

    There is no occurs check — x = f(x) simply binds the class of x to
    a cyclic shape — so the only failure is a constructor clash.
    """
    work: list[tuple[str, str]] = []
    parent: dict[str, str] = {}
    binding: dict[str, tuple[Symbol, tuple[str, ...]]] = {}

    def find(a: str) -> str:
        parent.setdefault(a, a)
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for a in _as_atoms(atoms):
        if isinstance(a, (Sub, SubApp)):
            raise ValueError("rational_unify handles equations only")
        if not is_base_only(a):
            raise ValueError(f"input atoms must use base variables only: {format_atom(a)}")
        if isinstance(a, Eq):
            work.append((a.lhs.parts[0], a.rhs.parts[0]))
        else:
            r = find(a.lhs.parts[0])
            entry = (a.sym, tuple(v.parts[0] for v in a.args))
            if r in binding:
                old = binding[r]
                if old[0] != entry[0]:
                    return Verdict.UNSAT
                work.extend(zip(old[1], entry[1]))
            else:
                binding[r] = entry

    while work:
        a, b = work.pop()
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        parent[ra] = rb
        if ra in binding:
            ba = binding.pop(ra)
            if rb in binding:
                bb = binding[rb]
                if ba[0] != bb[0]:
                    return Verdict.UNSAT
                work.extend(zip(ba[1], bb[1]))
            else:
                binding[rb] = ba
    return Verdict.SAT


# --- witness checking ---------------------------------------------------------------


class _MergeClash(Exception):
    pass


def merge_graphs(s: TermGraph, t: TermGraph) -> TermGraph | None:
    """A graph whose instances are exactly the common instances of s
    and t, or None when the two admit no tree in common.

    Product construction: paired nodes must agree wherever both are
    labeled; a hole on one side surrenders to the other side's subgraph.
    """
    labels: dict[int, Symbol] = {}
    children: dict[int, tuple[int, ...]] = {}
    holes: dict[int, str] = {}
    memo: dict[tuple, int] = {}
    counter = itertools.count()

    def copy_side(g: TermGraph, gn: int, side: str) -> int:
        key = (side, gn)
        if key in memo:
            return memo[key]
        nid = next(counter)
        memo[key] = nid
        lab = g.labels.get(gn)
        if lab is None:
            holes[nid] = f"h{nid}"
        else:
            labels[nid] = lab
            children[nid] = tuple(copy_side(g, k, side) for k in g.children[gn])
        return nid

    def pair(ps: int, pt: int) -> int:
        key = ("p", ps, pt)
        if key in memo:
            return memo[key]
        nid = next(counter)
        memo[key] = nid
        ls, lt = s.labels.get(ps), t.labels.get(pt)
        if ls is None and lt is None:
            holes[nid] = f"h{nid}"
        elif ls is None:
            labels[nid] = lt
            children[nid] = tuple(copy_side(t, k, "t") for k in t.children[pt])
        elif lt is None:
            labels[nid] = ls
            children[nid] = tuple(copy_side(s, k, "s") for k in s.children[ps])
        elif ls == lt:
            labels[nid] = ls
            children[nid] = tuple(pair(a, b) for a, b in zip(s.children[ps], t.children[pt]))
        else:
            raise _MergeClash
        return nid

    try:
        root = pair(s.root, t.root)
    except _MergeClash:
        return None
    return TermGraph(root, labels, children, holes)


def check_witness(sigma: Mapping[str, TermGraph], atoms: Union[Iterable[Atom], Store]) -> bool:
    """Does the assignment satisfy every atom?

    Equations ask for tree equality; x <= y asks that y's skeleton
    covers x's instances; the applied form x <= f(ȳ) is checked against
    the least tree rooted f with the given children.  An intersection
    variable evaluates to the merge of its components' graphs; when the
    components admit no common tree, no atom mentioning it can hold.
    """
    atom_list = _as_atoms(atoms)

    def eval_var(v) -> TermGraph | None:
        g: TermGraph | None = None
        for name in v.parts:
            if name not in sigma:
                raise ValueError(f"witness assigns nothing to {name}")
            g = sigma[name] if g is None else merge_graphs(g, sigma[name])
            if g is None:
                return None
        return g

    for a in atom_list:
        vals = [eval_var(v) for v in atom_vars(a)]
        if any(v is None for v in vals):
            return False
        if isinstance(a, Eq):
            ok = graph_equal(vals[0], vals[1])
        elif isinstance(a, Sub):
            ok = weak_subsumes(vals[1], vals[0])
        elif isinstance(a, EqApp):
            ok = graph_equal(vals[0], app(a.sym, *vals[1:]))
        else:
            ok = weak_subsumes(app(a.sym, *vals[1:]), vals[0])
        if not ok:
            return False
    return True


# --- witness search -----------------------------------------------------------------


def enumerate_graphs(
    symbols: Iterable[Symbol], max_depth: int, max_holes: int
) -> list[TermGraph]:
    """All trees over the symbols up to the depth, with up to max_holes
    distinct holes — plus every single-back-edge variant of those trees
    (each hole occurrence redirected to each of its ancestors).  That is
    the precise space searched: richer cyclic shapes are out of it."""
    syms = sorted(set(symbols))
    base: dict[str, TermGraph] = {}
    for i in range(max_holes):
        g = hole(f"h{i + 1}")
        base[format_term(g)] = g
    for s in syms:
        if s.arity == 0:
            g = app(s)
            base[format_term(g)] = g
    seen = dict(base)
    for _ in range(max_depth):
        prev = list(seen.values())
        for s in syms:
            if s.arity == 0:
                continue
            for combo in itertools.product(prev, repeat=s.arity):
                g = app(s, *combo)
                key = format_term(g)
                if key not in seen:
                    seen[key] = g
    out = list(seen.values())
    for g in list(seen.values()):
        for variant in _loop_variants(g):
            key = format_term(variant)
            if key not in seen:
                seen[key] = variant
                out.append(variant)
    return out


def _loop_variants(g: TermGraph) -> list[TermGraph]:
    """Each hole occurrence of a tree redirected to each strict ancestor."""
    parent: dict[int, int] = {}
    for n, ks in g.children.items():
        for k in ks:
            parent[k] = n
    out = []
    for h in sorted(g.holes):
        chain = []
        cur = h
        while cur != g.root:
            cur = parent[cur]
            chain.append(cur)
        for anc in chain:
            labels = dict(g.labels)
            children = {
                n: tuple(anc if k == h else k for k in ks)
                for n, ks in g.children.items()
            }
            holes = {n: nm for n, nm in g.holes.items() if n != h}
            out.append(TermGraph(g.root, labels, children, holes))
    return out


@dataclass
class SearchResult:
    """Outcome of a bounded witness search.

    witness    a satisfying assignment, or None
    exhausted  True when the candidate budget ran out — inconclusive;
               False with no witness means the whole space was searched
    checked    number of candidate placements examined
    """

    witness: dict[str, TermGraph] | None
    exhausted: bool
    checked: int


class _OutOfBudget(Exception):
    pass


def witness_search(
    atoms: Union[Iterable[Atom], Store],
    max_depth: int = 2,
    max_holes: int = 1,
    budget: int = 100_000,
) -> SearchResult:
    """Brute-force search for a witness among small term graphs.

    Candidates per variable are the enumerate_graphs() pool over the
    constraint's own symbols, filtered by the root constructors the
    variable's applied atoms force on it.  Assignment proceeds variable
    by variable in sorted order, checking each atom as soon as all its
    variables are placed, with simulation/bisimulation relations cached
    per graph pair across the whole search.
    """
    atom_list = _as_atoms(atoms)
    names = sorted({n for a in atom_list for n in atom_base_vars(a)})
    symbols = sorted({a.sym for a in atom_list if isinstance(a, (EqApp, SubApp))})
    pool = enumerate_graphs(symbols, max_depth, max_holes)
    pool.sort(key=lambda g: (len(g.nodes()), format_term(g)))

    forced: dict[str, set[Symbol]] = {}
    for a in atom_list:
        if isinstance(a, (EqApp, SubApp)) and a.lhs.is_base:
            forced.setdefault(a.lhs.parts[0], set()).add(a.sym)
    pools = [
        [g for g in pool if g.labels.get(g.root) in forced[nm]] if nm in forced else pool
        for nm in names
    ]

    idx = {nm: i for i, nm in enumerate(names)}
    ready: list[list[Atom]] = [[] for _ in names]
    for a in atom_list:
        ready[max(idx[n] for n in atom_base_vars(a))].append(a)

    sim_cache: dict[tuple[int, int], set] = {}
    bis_cache: dict[tuple[int, int], set] = {}

    def sim(a: TermGraph, b: TermGraph) -> set:
        key = (id(a), id(b))
        if key not in sim_cache:
            sim_cache[key] = simulation_relation(a, b)
        return sim_cache[key]

    def bis(a: TermGraph, b: TermGraph) -> set:
        key = (id(a), id(b))
        if key not in bis_cache:
            bis_cache[key] = bisimulation_relation(a, b)
        return bis_cache[key]

    def holds(a: Atom, env: dict[str, TermGraph]) -> bool:
        if not is_base_only(a):
            return check_witness(env, [a])
        if isinstance(a, Eq):
            gx, gy = env[a.lhs.parts[0]], env[a.rhs.parts[0]]
            return (gx.root, gy.root) in bis(gx, gy)
        if isinstance(a, Sub):
            gx, gy = env[a.lhs.parts[0]], env[a.rhs.parts[0]]
            return (gy.root, gx.root) in sim(gy, gx)
        gx = env[a.lhs.parts[0]]
        if gx.labels.get(gx.root) != a.sym:
            return False
        kids = gx.children[gx.root]
        if isinstance(a, EqApp):
            return all(
                (kid, env[v.parts[0]].root) in bis(gx, env[v.parts[0]])
                for kid, v in zip(kids, a.args)
            )
        return all(
            (env[v.parts[0]].root, kid) in sim(env[v.parts[0]], gx)
            for kid, v in zip(kids, a.args)
        )

    checked = 0
    env: dict[str, TermGraph] = {}

    def descend(i: int) -> dict[str, TermGraph] | None:
        nonlocal checked
        if i == len(names):
            return dict(env)
        for g in pools[i]:
            checked += 1
            if checked > budget:
                raise _OutOfBudget
            env[names[i]] = g
            if all(holds(a, env) for a in ready[i]):
                found = descend(i + 1)
                if found is not None:
                    return found
        env.pop(names[i], None)
        return None

    try:
        found = descend(0)
    except _OutOfBudget:
        return SearchResult(None, True, checked)
    return SearchResult(found, False, checked)


# --- witness files -------------------------------------------------------------------


def dump_witness(sigma: Mapping[str, TermGraph]) -> str:
    """Render an assignment as `name := term` lines."""
    return "\n".join(f"{name} := {format_term(sigma[name])}" for name in sorted(sigma)) + "\n"


def load_witness(text: str) -> dict[str, TermGraph]:
    """Parse `name := term` lines; `#` starts a comment."""
    out: dict[str, TermGraph] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":=" not in line:
            raise ValueError(f"line {lineno}: expected `name := term`")
        name, term = line.split(":=", 1)
        name = name.strip()
        if not name or not name.isidentifier():
            raise ValueError(f"line {lineno}: bad variable name {name!r}")
        out[name] = parse_term(term.strip())
    return out
