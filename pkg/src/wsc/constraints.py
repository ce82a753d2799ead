"""Variables, atomic constraints, stores, and the determinedness relations.

A variable is a nonempty set of base-variable names kept in a canonical
sorted tuple, so the set laws (associativity, commutativity,
idempotence of `&`) hold by representation: two variables denote the
same intersection iff they are equal values.  A singleton is a base
variable; anything larger is an intersection variable, standing for the
trees admitted by every one of its components at once.

Atoms come in four shapes: x = y, x = f(ȳ), x <= y, and x <= f(ȳ)
(the last meaning: x is below some tree rooted f with the given
children, i.e. there is a u with x <= u and u = f(ȳ)).

A Store holds the current conjunction as an indexed multiset of atoms,
plus the bookkeeping a solver needs: a contradiction flag, the record
of eliminated variables, which equations have already been used for
elimination, and an event log of rule firings.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Union

from .terms import Symbol

BaseVar = str


@dataclass(frozen=True, order=True)
class Var:
    """A variable: a canonical nonempty tuple of base-variable names.

    len(parts) == 1 is a base variable; more parts make an intersection
    variable denoting the common instances of all components.
    """

    parts: tuple[str, ...]

    def __post_init__(self) -> None:
        canon = tuple(sorted(set(self.parts)))
        if not canon:
            raise ValueError("a variable needs at least one component")
        for p in canon:
            if not isinstance(p, str) or not p:
                raise ValueError(f"bad base variable name {p!r}")
        object.__setattr__(self, "parts", canon)

    @property
    def is_base(self) -> bool:
        return len(self.parts) == 1

    def __str__(self) -> str:
        return "&".join(self.parts)


def var(*names: str) -> Var:
    """Convenience constructor: var('x') or var('x', 'y')."""
    return Var(tuple(names))


def intersect(x: Var, y: Var) -> Var:
    """The intersection variable combining both component sets."""
    return Var(x.parts + y.parts)


def components(x: Var) -> frozenset[str]:
    """The base variables making up x; every base variable is its own."""
    return frozenset(x.parts)


@dataclass(frozen=True)
class Eq:
    """x = y.  Stored with the sides sorted, since x = y and y = x have
    identical solutions: rule matching treats the pair as unordered."""

    lhs: Var
    rhs: Var

    def __post_init__(self) -> None:
        if self.rhs < self.lhs:
            lhs, rhs = self.rhs, self.lhs
            object.__setattr__(self, "lhs", lhs)
            object.__setattr__(self, "rhs", rhs)

    def __str__(self) -> str:
        return format_atom(self)


@dataclass(frozen=True)
class EqApp:
    """x = f(y1, ..., yn)."""

    lhs: Var
    sym: Symbol
    args: tuple[Var, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) != self.sym.arity:
            raise ValueError(f"{self.sym} expects {self.sym.arity} arguments, got {len(self.args)}")

    def __str__(self) -> str:
        return format_atom(self)


@dataclass(frozen=True)
class Sub:
    """x <= y: every instance of x is an instance of y."""

    lhs: Var
    rhs: Var

    def __str__(self) -> str:
        return format_atom(self)


@dataclass(frozen=True)
class SubApp:
    """x <= f(y1, ..., yn): x is below some tree rooted f with these children."""

    lhs: Var
    sym: Symbol
    args: tuple[Var, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) != self.sym.arity:
            raise ValueError(f"{self.sym} expects {self.sym.arity} arguments, got {len(self.args)}")

    def __str__(self) -> str:
        return format_atom(self)


Atom = Union[Eq, EqApp, Sub, SubApp]


def atom_vars(a: Atom) -> tuple[Var, ...]:
    """The variable occurrences of an atom, in positional order."""
    if isinstance(a, (Eq, Sub)):
        return (a.lhs, a.rhs)
    return (a.lhs,) + a.args


def atom_base_vars(a: Atom) -> set[str]:
    """All base-variable names mentioned anywhere in the atom."""
    out: set[str] = set()
    for v in atom_vars(a):
        out.update(v.parts)
    return out


def is_base_only(a: Atom) -> bool:
    return all(v.is_base for v in atom_vars(a))


def subst_atom(a: Atom, x: str, y: str) -> Atom:
    """Deep substitution [y/x] on one atom: componentwise inside every
    variable, re-canonicalizing (so {x,y}[y/x] collapses to {y})."""

    def sub(v: Var) -> Var:
        if x not in v.parts:
            return v
        return Var(tuple(y if p == x else p for p in v.parts))

    if isinstance(a, Eq):
        return Eq(sub(a.lhs), sub(a.rhs))
    if isinstance(a, Sub):
        return Sub(sub(a.lhs), sub(a.rhs))
    if isinstance(a, EqApp):
        return EqApp(sub(a.lhs), a.sym, tuple(sub(u) for u in a.args))
    return SubApp(sub(a.lhs), a.sym, tuple(sub(u) for u in a.args))


def format_var(v: Var) -> str:
    return str(v)


def format_atom(a: Atom) -> str:
    """Canonical one-line rendering; the frontend parser reads this back."""
    if isinstance(a, Eq):
        return f"{a.lhs} = {a.rhs}"
    if isinstance(a, EqApp):
        return f"{a.lhs} = {a.sym.name}({', '.join(map(str, a.args))})"
    if isinstance(a, Sub):
        return f"{a.lhs} <= {a.rhs}"
    return f"{a.lhs} <= {a.sym.name}({', '.join(map(str, a.args))})"


class Store:
    """An indexed multiset of atoms with solver bookkeeping.

    Identical atoms may be stored several times (a multiset) unless the
    store was created with dedup=True, in which case insertion of an
    atom already present is a no-op and rewrites merge into existing
    duplicates — the form the solver engine works on.

    Equations and their applied forms must be base-variable-only; that
    is the shape every reachable solver state has, and add() enforces
    it.  Subsumption atoms may freely mention intersection variables.
    """

    def __init__(self, atoms: Iterable[Atom] = (), *, dedup: bool = False):
        self.dedup = dedup
        self.contradiction = False
        self._atoms: dict[int, Atom] = {}
        self._next_id = 0
        self._locs: dict[Atom, set[int]] = {}
        self._occ: dict[str, set[int]] = {}
        self._vocc: dict[Var, set[int]] = {}
        self._eq_ids: set[int] = set()
        self._eqapp_lhs: dict[Var, set[int]] = {}
        self._sub_lhs: dict[Var, set[int]] = {}
        self._subapp_lhs: dict[Var, set[int]] = {}
        self.solved_eqs: set[int] = set()
        self.elim: dict[str, str] = {}
        self.events: list[tuple] = []
        for a in atoms:
            self.add(a)

    # -- basic mutation --------------------------------------------------

    def add(self, a: Atom) -> int:
        """Insert an atom; returns its id (the existing one under dedup)."""
        if isinstance(a, (Eq, EqApp)) and not is_base_only(a):
            raise ValueError(f"equational atom with an intersection variable: {format_atom(a)}")
        if self.dedup and self._locs.get(a):
            return min(self._locs[a])
        aid = self._next_id
        self._next_id += 1
        self._atoms[aid] = a
        self._index(aid, a)
        return aid

    def remove(self, aid: int) -> Atom:
        a = self._atoms.pop(aid)
        self._unindex(aid, a)
        self.solved_eqs.discard(aid)
        return a

    def rewrite(self, aid: int, a: Atom) -> int:
        """Replace the atom at aid, keeping the id.  Under dedup, if the
        new atom already exists elsewhere the two occurrences merge and
        the surviving (other) id is returned."""
        old = self._atoms[aid]
        if a == old:
            return aid
        if self.dedup:
            others = self._locs.get(a, set()) - {aid}
            if others:
                keep = min(others)
                if aid in self.solved_eqs:
                    self.solved_eqs.add(keep)
                self.remove(aid)
                return keep
        self._unindex(aid, old)
        self._atoms[aid] = a
        self._index(aid, a)
        return aid

    def set_contradiction(self) -> None:
        self.contradiction = True

    def subst_all(self, x: str, y: str, skip: Iterable[int] = ()) -> None:
        """Deep substitution [y/x] applied to every atom (except `skip`)."""
        skipset = set(skip)
        for aid in sorted(self._occ.get(x, set()) - skipset):
            if aid in self._atoms:  # may have merged away already
                self.rewrite(aid, subst_atom(self._atoms[aid], x, y))

    # -- queries -----------------------------------------------------------

    def atom(self, aid: int) -> Atom:
        return self._atoms[aid]

    def atoms(self) -> list[tuple[int, Atom]]:
        return sorted(self._atoms.items())

    def atom_list(self) -> list[Atom]:
        return [a for _, a in self.atoms()]

    def __len__(self) -> int:
        return len(self._atoms)

    def __contains__(self, a: Atom) -> bool:
        return bool(self._locs.get(a))

    def count(self, a: Atom) -> int:
        return len(self._locs.get(a, ()))

    def variables(self) -> set[Var]:
        """All variables (base and intersection) occurring in some atom."""
        return set(self._vocc)

    def base_vars(self) -> set[str]:
        """All base variables occurring as a component anywhere."""
        return set(self._occ)

    def occurs_elsewhere(self, x: str, excl: int) -> bool:
        """Does base variable x occur as a component outside atom excl?"""
        return bool(self._occ.get(x, set()) - {excl})

    def eq_ids(self) -> list[int]:
        return sorted(self._eq_ids)

    def eqapp_ids(self, lhs: Var | None = None) -> list[int]:
        if lhs is None:
            return sorted(i for ids in self._eqapp_lhs.values() for i in ids)
        return sorted(self._eqapp_lhs.get(lhs, ()))

    def sub_ids(self, lhs: Var | None = None) -> list[int]:
        if lhs is None:
            return sorted(i for ids in self._sub_lhs.values() for i in ids)
        return sorted(self._sub_lhs.get(lhs, ()))

    def subapp_ids(self, lhs: Var | None = None) -> list[int]:
        if lhs is None:
            return sorted(i for ids in self._subapp_lhs.values() for i in ids)
        return sorted(self._subapp_lhs.get(lhs, ()))

    def copy(self) -> "Store":
        out = Store(dedup=self.dedup)
        out.contradiction = self.contradiction
        out._atoms = dict(self._atoms)
        out._next_id = self._next_id
        out._locs = {a: set(ids) for a, ids in self._locs.items()}
        out._occ = {x: set(ids) for x, ids in self._occ.items()}
        out._vocc = {v: set(ids) for v, ids in self._vocc.items()}
        out._eq_ids = set(self._eq_ids)
        out._eqapp_lhs = {v: set(ids) for v, ids in self._eqapp_lhs.items()}
        out._sub_lhs = {v: set(ids) for v, ids in self._sub_lhs.items()}
        out._subapp_lhs = {v: set(ids) for v, ids in self._subapp_lhs.items()}
        out.solved_eqs = set(self.solved_eqs)
        out.elim = dict(self.elim)
        out.events = []
        return out

    def __str__(self) -> str:
        body = ", ".join(format_atom(a) for a in self.atom_list())
        return "bottom" if self.contradiction else "{" + body + "}"

    __repr__ = __str__

    # -- index plumbing -----------------------------------------------------

    def _index(self, aid: int, a: Atom) -> None:
        self._locs.setdefault(a, set()).add(aid)
        for v in set(atom_vars(a)):
            self._vocc.setdefault(v, set()).add(aid)
        for b in atom_base_vars(a):
            self._occ.setdefault(b, set()).add(aid)
        if isinstance(a, Eq):
            self._eq_ids.add(aid)
        elif isinstance(a, EqApp):
            self._eqapp_lhs.setdefault(a.lhs, set()).add(aid)
        elif isinstance(a, Sub):
            self._sub_lhs.setdefault(a.lhs, set()).add(aid)
        else:
            self._subapp_lhs.setdefault(a.lhs, set()).add(aid)

    def _unindex(self, aid: int, a: Atom) -> None:
        self._locs[a].discard(aid)
        if not self._locs[a]:
            del self._locs[a]
        for v in set(atom_vars(a)):
            self._vocc[v].discard(aid)
            if not self._vocc[v]:
                del self._vocc[v]
        for b in atom_base_vars(a):
            self._occ[b].discard(aid)
            if not self._occ[b]:
                del self._occ[b]
        if isinstance(a, Eq):
            self._eq_ids.discard(aid)
        else:
            table = (
                self._eqapp_lhs
                if isinstance(a, EqApp)
                else self._sub_lhs if isinstance(a, Sub) else self._subapp_lhs
            )
            table[a.lhs].discard(aid)
            if not table[a.lhs]:
                del table[a.lhs]


def deep_subst(store: Store, x: str, y: str) -> Store:
    """Pure variant of substitution: a new store with [y/x] applied."""
    if x == y:
        raise ValueError("substituting a variable by itself")
    out = store.copy()
    out.subst_all(x, y)
    return out


def congruent(a: Store, b: Store) -> bool:
    """Equal as multisets of (canonicalized) atoms."""
    if a.contradiction != b.contradiction:
        return False
    return Counter(a.atom_list()) == Counter(b.atom_list())


class Determination(NamedTuple):
    """One reason a variable's top constructor is fixed.

    at:  the atom id of the x = f(ū) / x <= f(ū) doing the determining
    via: the id of the x <= r atom routing through a component of r,
         or None when the determination is immediate
    """

    sym: Symbol
    args: tuple[Var, ...]
    at: int
    via: int | None


def determinations(store: Store, v: Var, exclude: Iterable[int] = ()) -> list[Determination]:
    """All determinations of v, immediate and routed, in a stable order.

    `exclude` drops the given atom ids from every role — both as the
    determining atom and as the routing atom — so callers can ask what
    the store minus one atom still determines.
    """
    excl = set(exclude)
    out: list[Determination] = []
    for aid in store.eqapp_ids(lhs=v) + store.subapp_ids(lhs=v):
        if aid in excl:
            continue
        a = store.atom(aid)
        out.append(Determination(a.sym, a.args, aid, None))
    for sid in store.sub_ids(lhs=v):
        if sid in excl:
            continue
        r = store.atom(sid).rhs
        for y in r.parts:
            yv = Var((y,))
            for aid in store.eqapp_ids(lhs=yv) + store.subapp_ids(lhs=yv):
                if aid in excl:
                    continue
                a = store.atom(aid)
                out.append(Determination(a.sym, a.args, aid, sid))
    out.sort(key=lambda d: (d.sym, d.args, d.at, -1 if d.via is None else d.via))
    return out


def immediately_determined(store: Store, v: Var) -> set[tuple[Symbol, tuple[Var, ...]]]:
    """All (f, ȳ) with v = f(ȳ) or v <= f(ȳ) present."""
    return {(d.sym, d.args) for d in determinations(store, v) if d.via is None}


def determined(store: Store, v: Var) -> set[tuple[Symbol, tuple[Var, ...]]]:
    """All (f, ū) fixing v's top constructor: immediate determinations
    plus those routed through a component of the right side of some
    v <= r atom."""
    return {(d.sym, d.args) for d in determinations(store, v)}
