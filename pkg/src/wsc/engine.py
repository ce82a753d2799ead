"""The terminating rule engine for equations and subsumption constraints.

Eight rewrite rules act on a Store.  Each rule function inspects the
store, and either fires once — mutating the store in place, appending
one event to store.events, and returning the store — or returns None
when it is inapplicable.  Rules scan atoms in ascending id order (and
variable components in sorted order), so every firing is deterministic.

The rules:

  Clash       two incompatible constructors determined for a variable
              and one of its component carriers: contradiction.
  Elim        use an equation x = y to substitute one side away
              everywhere else (deep, inside intersection variables);
              each equation is used at most once.
  Decom       two equations x = f(ū), x = f(v̄): replace the first by
              the pairwise argument equations.
  Propagate1  x <= u propagates into the right side of w <= z when x
              is a component of w: z grows to z & u.
  Propagate2  like Propagate1 for the applied form: w <= f(ū) absorbs
              a determination x <= f(v̄) of a component x of w,
              intersecting argumentwise.
  Collapse    w <= r absorbs y <= z for a component y of r: r grows to
              r & z (chains of subsumptions collapse into the right side).
  Descend2    an intersection variable occurring anywhere whose
              component is determined gets its own applied constraint.
  Descend1    an equation x = f(ū) whose left side is also determined
              as f(v̄) by the *rest* of the store pushes subsumptions
              ū <= v̄ down to the arguments (positions already covered
              by an existing subsumption are skipped).

A Solver owns a deduplicating store and drives the rules to a fixpoint
under a total rule priority; the default order fires Clash first and
the store-growing Descend rules last.  The verdict is sat iff a
non-contradictory fixpoint is reached — which priority is used does not
change the verdict, only the route.

Inputs must mention base variables only (intersection variables are
solver-internal); solve() and assert_atom() enforce this.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

from .constraints import (
    Atom,
    Eq,
    EqApp,
    Store,
    Sub,
    SubApp,
    Var,
    atom_vars,
    components,
    determinations,
    format_atom,
    intersect,
    is_base_only,
)


class Verdict(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"

    def __str__(self) -> str:
        return self.value


class RuleId(enum.Enum):
    CLASH = "Clash"
    ELIM = "Elim"
    DECOM = "Decom"
    PROPAGATE1 = "Propagate1"
    PROPAGATE2 = "Propagate2"
    COLLAPSE = "Collapse"
    DESCEND1 = "Descend1"
    DESCEND2 = "Descend2"

    def __str__(self) -> str:
        return self.value


DEFAULT_PRIORITY: tuple[RuleId, ...] = (
    RuleId.CLASH,
    RuleId.ELIM,
    RuleId.DECOM,
    RuleId.PROPAGATE1,
    RuleId.PROPAGATE2,
    RuleId.COLLAPSE,
    RuleId.DESCEND2,
    RuleId.DESCEND1,
)


# --- rules --------------------------------------------------------------------


def rule_clash(store: Store) -> Store | None:
    """Fire when some variable w and a component x of w carry two
    different determined constructors (w = x included: a doubly
    determined variable clashes with itself)."""
    if store.contradiction:
        return None
    cands = {
        store.atom(i).lhs
        for i in store.eqapp_ids() + store.subapp_ids() + store.sub_ids()
    }
    for w in sorted(cands):
        dw = determinations(store, w)
        if not dw:
            continue
        syms_w = {d.sym for d in dw}
        for xname in w.parts:
            xv = Var((xname,))
            dx = dw if xv == w else determinations(store, xv)
            if not dx:
                continue
            if len({d.sym for d in dx} | syms_w) < 2:
                continue
            d1, d2 = next((p, q) for p in dx for q in dw if p.sym != q.sym)
            on: list[Atom] = []
            for d in (d1, d2):
                if d.via is not None:
                    on.append(store.atom(d.via))
                on.append(store.atom(d.at))
            store.set_contradiction()
            store.events.append((RuleId.CLASH, tuple(dict.fromkeys(on)), (), ()))
            return store
    return None


def rule_elim(store: Store) -> Store | None:
    """Use an equation to substitute one side away from the rest of the
    store.  The equation is kept but marked used; the substitution is
    recorded in store.elim.  Preference: eliminate the smaller name."""
    if store.contradiction:
        return None
    for aid in store.eq_ids():
        if aid in store.solved_eqs:
            continue
        a = store.atom(aid)
        if a.lhs == a.rhs:
            continue
        xn, yn = a.lhs.parts[0], a.rhs.parts[0]
        if store.occurs_elsewhere(xn, aid):
            gone, kept = xn, yn
        elif store.occurs_elsewhere(yn, aid):
            gone, kept = yn, xn
        else:
            continue
        store.subst_all(gone, kept, skip={aid})
        store.solved_eqs.add(aid)
        store.elim[gone] = kept
        store.events.append((RuleId.ELIM, (a,), (), ()))
        return store
    return None


def rule_decom(store: Store) -> Store | None:
    """Two equations x = f(ū) and x = f(v̄): drop the first, add the
    argumentwise equations ū = v̄."""
    if store.contradiction:
        return None
    for aid in store.eqapp_ids():
        a = store.atom(aid)
        partners = [
            b
            for b in store.eqapp_ids(lhs=a.lhs)
            if b != aid and store.atom(b).sym == a.sym
        ]
        if not partners:
            continue
        b = store.atom(min(partners))
        store.remove(aid)
        added = tuple(Eq(u, v) for u, v in zip(a.args, b.args))
        for na in added:
            store.add(na)
        store.events.append((RuleId.DECOM, (a, b), (a,), added))
        return store
    return None


def rule_propagate1(store: Store) -> Store | None:
    """w <= z and x <= u for a component x of w: grow z to z & u."""
    if store.contradiction:
        return None
    for aid in store.sub_ids():
        a = store.atom(aid)
        for xname in a.lhs.parts:
            for bid in store.sub_ids(lhs=Var((xname,))):
                u = store.atom(bid).rhs
                nz = intersect(a.rhs, u)
                if nz != a.rhs:
                    b = store.atom(bid)
                    na = Sub(a.lhs, nz)
                    store.rewrite(aid, na)
                    store.events.append((RuleId.PROPAGATE1, (a, b), (a,), (na,)))
                    return store
    return None


def rule_propagate2(store: Store) -> Store | None:
    """w <= f(ū) and a determination f(v̄) of a component x of w:
    intersect the arguments, position by position."""
    if store.contradiction:
        return None
    for aid in store.subapp_ids():
        a = store.atom(aid)
        for xname in a.lhs.parts:
            for d in determinations(store, Var((xname,))):
                if d.sym != a.sym:
                    continue
                nargs = tuple(intersect(u, v) for u, v in zip(a.args, d.args))
                if nargs == a.args:
                    continue
                na = SubApp(a.lhs, a.sym, nargs)
                on: list[Atom] = [a]
                if d.via is not None:
                    on.append(store.atom(d.via))
                on.append(store.atom(d.at))
                store.rewrite(aid, na)
                store.events.append(
                    (RuleId.PROPAGATE2, tuple(dict.fromkeys(on)), (a,), (na,))
                )
                return store
    return None


def rule_collapse(store: Store) -> Store | None:
    """x <= r and y <= z for a component y of r: grow r to r & z."""
    if store.contradiction:
        return None
    for aid in store.sub_ids():
        a = store.atom(aid)
        for yname in a.rhs.parts:
            for bid in store.sub_ids(lhs=Var((yname,))):
                z = store.atom(bid).rhs
                nr = intersect(a.rhs, z)
                if nr != a.rhs:
                    b = store.atom(bid)
                    na = Sub(a.lhs, nr)
                    store.rewrite(aid, na)
                    store.events.append((RuleId.COLLAPSE, (a, b), (a,), (na,)))
                    return store
    return None


def rule_descend2(store: Store) -> Store | None:
    """An intersection variable w in use whose component is determined,
    while w itself has no applied constraint yet: give it one."""
    if store.contradiction:
        return None
    for w in sorted(v for v in store.variables() if not v.is_base):
        if store.eqapp_ids(lhs=w) or store.subapp_ids(lhs=w):
            continue
        for xname in w.parts:
            dets = determinations(store, Var((xname,)))
            if not dets:
                continue
            d = dets[0]
            na = SubApp(w, d.sym, d.args)
            on: list[Atom] = []
            if d.via is not None:
                on.append(store.atom(d.via))
            on.append(store.atom(d.at))
            store.add(na)
            store.events.append((RuleId.DESCEND2, tuple(on), (), (na,)))
            return store
    return None


def rule_descend1(store: Store) -> Store | None:
    """x = f(ū) where the rest of the store also determines x as f(v̄):
    push subsumption down to the arguments, adding ū_i <= v̄_i for every
    position not already covered by a subsumption on ū_i whose right
    side includes all components of v̄_i.

    The determination is computed on the store minus this equation, so
    an equation never descends on account of itself."""
    if store.contradiction:
        return None
    for aid in store.eqapp_ids():
        a = store.atom(aid)
        for d in determinations(store, a.lhs, exclude={aid}):
            if d.sym != a.sym:
                continue
            missing = []
            for u, v in zip(a.args, d.args):
                covered = any(
                    components(v) <= components(store.atom(bid).rhs)
                    for bid in store.sub_ids(lhs=u)
                )
                if not covered:
                    missing.append((u, v))
            if not missing:
                continue
            added = tuple(Sub(u, v) for u, v in missing)
            for na in added:
                store.add(na)
            on: list[Atom] = [a]
            if d.via is not None:
                on.append(store.atom(d.via))
            on.append(store.atom(d.at))
            store.events.append(
                (RuleId.DESCEND1, tuple(dict.fromkeys(on)), (), added)
            )
            return store
    return None


_RULES: dict[RuleId, Callable[[Store], Store | None]] = {
    RuleId.CLASH: rule_clash,
    RuleId.ELIM: rule_elim,
    RuleId.DECOM: rule_decom,
    RuleId.PROPAGATE1: rule_propagate1,
    RuleId.PROPAGATE2: rule_propagate2,
    RuleId.COLLAPSE: rule_collapse,
    RuleId.DESCEND2: rule_descend2,
    RuleId.DESCEND1: rule_descend1,
}


# --- solver -------------------------------------------------------------------


@dataclass(frozen=True)
class TraceEntry:
    """One rule firing: which rule, the atoms it looked at, and what
    it removed and added."""

    step: int
    rule: RuleId
    on: tuple[Atom, ...]
    removed: tuple[Atom, ...]
    added: tuple[Atom, ...]
    contradiction: bool = False

    def __str__(self) -> str:
        ons = ", ".join(format_atom(a) for a in self.on)
        if self.contradiction:
            outs = "bottom"
        elif self.added:
            outs = ", ".join(format_atom(a) for a in self.added)
        else:
            outs = "nothing"
        return f"step {self.step}: {self.rule.value} on {ons} => {outs}"


def format_trace(trace: Sequence[TraceEntry]) -> str:
    return "\n".join(str(e) for e in trace)


class Solver:
    """Incremental solver: assert atoms one at a time, read the verdict.

    The store is deduplicating; asserted atoms are normalized through
    the record of already-eliminated variables so that stale names in
    later assertions land on their current representatives.
    """

    def __init__(self, *, priority: Sequence[RuleId] = DEFAULT_PRIORITY):
        prio = tuple(priority)
        if sorted(r.value for r in prio) != sorted(r.value for r in RuleId):
            raise ValueError("priority must list every rule exactly once")
        self.priority = prio
        self.store = Store(dedup=True)
        self.trace: list[TraceEntry] = []
        self.step_count = 0
        self.verdict = Verdict.SAT  # the empty conjunction is satisfiable

    @property
    def elim_record(self) -> dict[str, str]:
        """The applied substitutions, fully path-compressed."""
        return {name: self._resolve(name) for name in self.store.elim}

    def _resolve(self, name: str) -> str:
        chain = []
        elim = self.store.elim
        while name in elim:
            chain.append(name)
            name = elim[name]
        for c in chain:
            elim[c] = name
        return name

    def _normalize(self, a: Atom) -> Atom:
        def norm(v: Var) -> Var:
            return Var((self._resolve(v.parts[0]),))

        if isinstance(a, Eq):
            return Eq(norm(a.lhs), norm(a.rhs))
        if isinstance(a, Sub):
            return Sub(norm(a.lhs), norm(a.rhs))
        if isinstance(a, EqApp):
            return EqApp(norm(a.lhs), a.sym, tuple(norm(u) for u in a.args))
        return SubApp(norm(a.lhs), a.sym, tuple(norm(u) for u in a.args))

    def insert(self, a: Atom) -> None:
        """Add one atom without running rules (input validation applies)."""
        if not is_base_only(a):
            raise ValueError(
                f"input atoms must use base variables only: {format_atom(a)}"
            )
        self.store.add(self._normalize(a))
        if self.verdict is not Verdict.UNSAT:
            self.verdict = Verdict.UNKNOWN

    def step(self) -> bool:
        """Fire the first applicable rule by priority; False at fixpoint."""
        if self.store.contradiction:
            self.verdict = Verdict.UNSAT
            return False
        for rule in self.priority:
            if _RULES[rule](self.store) is not None:
                self.step_count += 1
                (rid, on, removed, added) = self.store.events.pop()
                assert not self.store.events, "a rule must log exactly one event"
                self.trace.append(
                    TraceEntry(
                        self.step_count,
                        rid,
                        on,
                        removed,
                        added,
                        contradiction=self.store.contradiction,
                    )
                )
                if self.store.contradiction:
                    self.verdict = Verdict.UNSAT
                return True
        if self.verdict is not Verdict.UNSAT:
            self.verdict = Verdict.SAT
        return False

    def run(self) -> Verdict:
        """Step to a fixpoint and return the verdict."""
        while self.step():
            pass
        return self.verdict

    def assert_atom(self, a: Atom) -> Verdict:
        """Insert one atom and re-solve.  Contradiction is absorbing."""
        if self.verdict is Verdict.UNSAT:
            return Verdict.UNSAT
        self.insert(a)
        return self.run()


@dataclass
class SolveResult:
    verdict: Verdict
    store: Store
    steps: int
    trace: list[TraceEntry]
    solver: Solver


def solve(
    atoms: Union[Iterable[Atom], Store],
    *,
    priority: Sequence[RuleId] = DEFAULT_PRIORITY,
) -> SolveResult:
    """Decide satisfiability of a conjunction of base-variable atoms."""
    atom_list = atoms.atom_list() if isinstance(atoms, Store) else list(atoms)
    s = Solver(priority=priority)
    for a in atom_list:
        s.insert(a)
    s.run()
    return SolveResult(s.verdict, s.store, s.step_count, list(s.trace), s)


def step(s: Solver) -> bool:
    return s.step()


def assert_atom(s: Solver, a: Atom) -> Verdict:
    return s.assert_atom(a)
