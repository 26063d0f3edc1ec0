"""Two independent desk-scale oracles.

``bounded_model_search`` looks for a finite countermodel directly under
the DL semantics: it enumerates per-element types (with symmetry breaking
over the anonymous elements) and closes the roles maximally, which is
complete for a fixed type assignment because universal and hierarchy
axioms only ever forbid edges while witnesses only ever need them.

``core_enumeration_decide`` decides certainty by enumerating every core
over the instance's individuals bit by bit, pruning with the core
conditions, and testing extendability through the marking fixpoint.
Neither path touches the Datalog rewriting, so both can arbitrate it.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement, product
from typing import Iterator, Sequence

from .normalize import NormalTBox
from .parser import ConceptAtom, ConjunctiveQuery
from .query import OMQ, CSafe, classify
from .syntax import (Assertion, ConceptAssert, Name, Nominal, OmqError,
                     RoleAssert, RoleExpr)
from .typespace import (Core, FringeId, MAX_BASIS_BITS, ResourceRefused,
                        TypeContext, TypeVec, mark_types, satisfies_clauses)


@dataclass(frozen=True)
class FiniteInterp:
    """A finite interpretation; individuals are interpreted as themselves."""

    domain: tuple[str, ...]
    concept_ext: dict[str, frozenset[str]]
    role_ext: dict[str, frozenset[tuple[str, str]]]

    def in_concept(self, name: str, e: str) -> bool:
        return e in self.concept_ext.get(name, frozenset())

    def pairs(self, role: RoleExpr) -> frozenset[tuple[str, str]]:
        base = self.role_ext.get(role.name, frozenset())
        if role.inverted:
            return frozenset((b, a) for (a, b) in base)
        return base


@dataclass(frozen=True)
class NormalKB:
    """A normalized KB with closed predicates plus its data."""

    tbox: NormalTBox
    sigma: frozenset[str]
    abox: tuple[Assertion, ...]

    @property
    def individuals(self) -> tuple[str, ...]:
        out = set(self.tbox.nominals)
        for a in self.abox:
            if isinstance(a, ConceptAssert):
                out.add(a.individual)
            else:
                out.update((a.subject, a.object))
        return tuple(sorted(out))


def _holds(i: FiniteInterp, b, e: str) -> bool:
    if isinstance(b, Name):
        return i.in_concept(b.name, e)
    if isinstance(b, Nominal):
        return e == b.individual
    return type(b).__name__ == "Top"


def models_kb(i: FiniteInterp, kb: NormalKB) -> bool:
    """Model check under the DL semantics: TBox axioms, ABox facts, and
    exact extensions for the closed predicates."""
    if not i.domain:
        return False
    dom = set(i.domain)
    if any(ind not in dom for ind in kb.individuals):
        return False
    for ax in kb.tbox.clauses:
        for e in i.domain:
            if all(_holds(i, b, e) for b in ax.lhs) and \
                    not any(_holds(i, b, e) for b in ax.rhs):
                return False
    for ax in kb.tbox.existentials:
        succ = i.pairs(ax.role)
        for e in i.domain:
            if _holds(i, ax.lhs, e) and \
                    not any(_holds(i, ax.filler, y) for (x, y) in succ if x == e):
                return False
    for ax in kb.tbox.universals:
        for (x, y) in i.pairs(ax.role):
            if _holds(i, ax.lhs, x) and not _holds(i, ax.filler, y):
                return False
    for ax in kb.tbox.role_incls:
        if not i.pairs(ax.lhs) <= i.pairs(ax.rhs):
            return False
    asserted_c = set()
    asserted_r = set()
    for a in kb.abox:
        if isinstance(a, ConceptAssert):
            asserted_c.add((a.concept, a.individual))
            if not i.in_concept(a.concept, a.individual):
                return False
        else:
            asserted_r.add((a.role, a.subject, a.object))
            if (a.subject, a.object) not in i.role_ext.get(a.role, frozenset()):
                return False
    for name in kb.sigma:
        for e in i.concept_ext.get(name, frozenset()):
            if (name, e) not in asserted_c:
                return False
        for (x, y) in i.role_ext.get(name, frozenset()):
            if (name, x, y) not in asserted_r:
                return False
    return True


# ---------------------------------------------------------------------------
# Bounded countermodel search


def bounded_model_search(kb: NormalKB, goal: Assertion | None, max_size: int,
                         max_assignments: int = 2_000_000) -> FiniteInterp | None:
    """Search domains of growing size for a model of the KB falsifying the
    goal atom (or any model when the goal is None).  A returned
    interpretation is a sound witness; None is inconclusive beyond the
    bound.  Goals must be single ground atoms."""
    ctx = TypeContext(kb.tbox, kb.sigma)
    k = ctx.k
    if k > MAX_BASIS_BITS:
        raise ResourceRefused(f"basis of {k} concepts exceeds the type-space budget")
    inds = kb.individuals
    hierarchy = kb.tbox.hierarchy

    fact_c = {(a.concept, a.individual) for a in kb.abox if isinstance(a, ConceptAssert)}
    fact_r = {(a.role, a.subject, a.object) for a in kb.abox if isinstance(a, RoleAssert)}

    if isinstance(goal, RoleAssert):
        # An ABox edge whose hierarchy closure reaches the goal atom makes
        # the goal hold in every model: nothing to search for.
        for (p, x, y) in fact_r:
            if _edge_implies(hierarchy, p, x, y, goal):
                return None
    if isinstance(goal, ConceptAssert) and goal.concept in kb.sigma and \
            (goal.concept, goal.individual) not in fact_c:
        goal = None  # a closed concept without the fact is false everywhere

    valid_types = [t for t in range(1 << k) if satisfies_clauses(t, ctx)]

    def candidates_for(e: str | None) -> list[TypeVec]:
        required, forbidden = 0, 0
        for j, b in enumerate(ctx.basis):
            bit = 1 << j
            if isinstance(b, Nominal):
                if e is not None and e == b.individual:
                    required |= bit
                else:
                    forbidden |= bit
            elif b.name in kb.sigma:
                if e is not None and (b.name, e) in fact_c:
                    required |= bit
                else:
                    forbidden |= bit
            elif e is not None and (b.name, e) in fact_c:
                required |= bit
        if e is not None and isinstance(goal, ConceptAssert) and goal.individual == e:
            b = Name(goal.concept)
            if b in ctx.bit_of:
                forbidden |= 1 << ctx.bit_of[b]
        return [t for t in valid_types
                if t & required == required and not t & forbidden]

    ind_candidates = [candidates_for(e) for e in inds]
    anon_candidates = candidates_for(None)

    budget = max_assignments
    for size in range(max(1, len(inds)), max_size + 1):
        m = size - len(inds)
        if m < 0:
            continue
        anon = [f"_a{j + 1}" for j in range(m)]
        elements = list(inds) + anon
        count = 1
        for c in ind_candidates:
            count *= max(1, len(c))
        for assignment in product(*ind_candidates) if ind_candidates else [()]:
            for anon_types in combinations_with_replacement(anon_candidates, m):
                budget -= 1
                if budget < 0:
                    raise ResourceRefused(
                        f"countermodel search exceeded {max_assignments} type assignments")
                types = dict(zip(inds, assignment))
                types.update(zip(anon, anon_types))
                interp = _close_roles(kb, ctx, elements, types, goal, fact_r)
                if interp is not None:
                    return interp
    return None


def _edge_implies(hierarchy, p: str, x: str, y: str, goal: RoleAssert) -> bool:
    for s in hierarchy.subsumers(RoleExpr(p)):
        if s.name != goal.role:
            continue
        (u, v) = (y, x) if s.inverted else (x, y)
        if (u, v) == (goal.subject, goal.object):
            return True
    return False


def _close_roles(kb: NormalKB, ctx: TypeContext, elements: list[str],
                 types: dict[str, TypeVec], goal: Assertion | None,
                 fact_r: set[tuple[str, str, str]]) -> FiniteInterp | None:
    """Maximal role extensions compatible with the type assignment, minus
    the edges that would imply the goal; None if the axioms cannot hold."""
    hierarchy = kb.tbox.hierarchy
    bit_of = ctx.bit_of

    def has(b, e: str) -> bool:
        if isinstance(b, Nominal):
            return e == b.individual
        if isinstance(b, Name):
            return bool(types[e] >> bit_of[b] & 1)
        return type(b).__name__ == "Top"

    def edge_ok(p: str, d: str, e: str) -> bool:
        for ax in kb.tbox.universals:
            if hierarchy.subsumed(RoleExpr(p), ax.role):
                if has(ax.lhs, d) and not has(ax.filler, e):
                    return False
            if hierarchy.subsumed(RoleExpr(p, True), ax.role):
                if has(ax.lhs, e) and not has(ax.filler, d):
                    return False
        for s in hierarchy.subsumers(RoleExpr(p)):
            if s.name in kb.sigma:
                (u, v) = (e, d) if s.inverted else (d, e)
                if (s.name, u, v) not in fact_r:
                    return False
        return True

    def blocked(p: str, d: str, e: str) -> bool:
        return isinstance(goal, RoleAssert) and _edge_implies(hierarchy, p, d, e, goal)

    role_ext: dict[str, frozenset[tuple[str, str]]] = {}
    for p in kb.tbox.role_names:
        if p in kb.sigma:
            pairs = {(x, y) for (q, x, y) in fact_r if q == p}
            if any(not edge_ok(p, x, y) or blocked(p, x, y) for (x, y) in pairs):
                return None
            role_ext[p] = frozenset(pairs)
        else:
            facts = {(x, y) for (q, x, y) in fact_r if q == p}
            pairs = {(d, e) for d in elements for e in elements
                     if edge_ok(p, d, e) and not blocked(p, d, e)}
            if not facts <= pairs:
                return None
            role_ext[p] = frozenset(pairs)

    interp = FiniteInterp(
        domain=tuple(elements),
        concept_ext={
            a: frozenset(e for e in elements
                         if Name(a) in bit_of and types[e] >> bit_of[Name(a)] & 1)
            for a in kb.tbox.concept_names},
        role_ext=role_ext,
    )
    for ax in kb.tbox.existentials:
        succ = interp.pairs(ax.role)
        for e in elements:
            if has(ax.lhs, e) and \
                    not any(has(ax.filler, y) for (x, y) in succ if x == e):
                return None
    return interp


# ---------------------------------------------------------------------------
# Core enumeration


class _CoreSpace:
    """Backtracking enumeration of all valid cores of an instance.

    With a goal (query plus answer binding), subtrees whose individual-level
    part already satisfies the query are pruned: every completion would
    satisfy it too, and the goal asks for falsifying cores only."""

    goal: tuple[ConjunctiveQuery, tuple[str, ...]] | None = None

    def __init__(self, ctx: TypeContext, abox: Sequence[Assertion],
                 individuals: Sequence[str], max_bits: int,
                 max_nodes: int = 5_000_000):
        self.max_nodes = max_nodes
        self.nodes = 0
        self.ctx = ctx
        self.abox = tuple(abox)
        self.inds = tuple(individuals)
        ntbox = ctx.ntbox
        self.open_concepts = [a for a in ntbox.concept_names if a not in ctx.sigma]
        self.open_roles = [p for p in ntbox.role_names if p not in ctx.sigma]
        self.fact_c = {(a.concept, a.individual) for a in self.abox
                       if isinstance(a, ConceptAssert)}
        self.fact_r = {(a.role, a.subject, a.object) for a in self.abox
                       if isinstance(a, RoleAssert)}
        self.n_exist = len(ntbox.existentials)

        # The budget counts the individual-level guess bits (fringe slots
        # are enumerated structurally with witness-aware pruning).
        free_bits = 0
        for e in self.inds:
            free_bits += sum(1 for a in self.open_concepts if (a, e) not in self.fact_c)
        free_bits += len(self.open_roles) * len(self.inds) ** 2
        self.free_bits = free_bits
        if free_bits > max_bits:
            raise ResourceRefused(
                f"core space of {free_bits} free individual bits exceeds "
                f"the budget of {max_bits}")

        valid = [t for t in range(1 << ctx.k) if satisfies_clauses(t, ctx)]
        self.ind_types: list[list[TypeVec]] = []
        for e in self.inds:
            required, forbidden = 0, 0
            for j, b in enumerate(ctx.basis):
                bit = 1 << j
                if isinstance(b, Nominal):
                    required |= bit if e == b.individual else 0
                    forbidden |= bit if e != b.individual else 0
                elif b.name in ctx.sigma:
                    if (b.name, e) in self.fact_c:
                        required |= bit
                    else:
                        forbidden |= bit
                elif (b.name, e) in self.fact_c:
                    required |= bit
            self.ind_types.append(
                [t for t in valid if t & required == required and not t & forbidden])
        nominal_or_closed = 0
        for j, b in enumerate(ctx.basis):
            if isinstance(b, Nominal) or b.name in ctx.sigma:
                nominal_or_closed |= 1 << j
        self.fringe_types = [t for t in valid if not t & nominal_or_closed]
        # (c3.4): a fringe element may never trigger an existential whose
        # role is subsumed by a closed role.
        closed_trigger = 0
        for ax in ctx.ntbox.existentials:
            if ctx.role_closed(ax.role):
                closed_trigger |= 1 << ctx.bit_of[ax.lhs]
        self.fringe_types = [t for t in self.fringe_types if not t & closed_trigger]

    # -- helpers over type bits -----------------------------------------

    def _has(self, t: TypeVec, b) -> bool:
        if isinstance(b, (Name, Nominal)):
            return bool(t >> self.ctx.bit_of[b] & 1)
        return type(b).__name__ == "Top"

    def _tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise ResourceRefused(
                f"core enumeration exceeded {self.max_nodes} search nodes; "
                "instance too large")

    def cores(self) -> Iterator[Core]:
        yield from self._assign_types(0, {})

    def _assign_types(self, idx: int, types: dict[str, TypeVec]) -> Iterator[Core]:
        self._tick()
        if idx == len(self.inds):
            yield from self._assign_roles(types)
            return
        e = self.inds[idx]
        for t in self.ind_types[idx]:
            types[e] = t
            yield from self._assign_types(idx + 1, types)
        types.pop(e, None)

    def _assign_roles(self, types: dict[str, TypeVec]) -> Iterator[Core]:
        ctx = self.ctx
        pairs = []
        for i, d in enumerate(self.inds):
            for e in self.inds[i:]:
                pairs.append((d, e))

        def vectors_for(d: str, e: str) -> list[frozenset[tuple[str, bool]]]:
            same = d == e
            ntbox = ctx.ntbox
            slots = [(p, True) for p in self.open_roles]
            if not same:
                slots += [(p, False) for p in self.open_roles]
            out = []
            for mask in range(1 << len(slots)):
                chosen = {slots[j] for j in range(len(slots)) if mask >> j & 1}

                def edge(r: RoleExpr, fwd: bool) -> bool:
                    want = fwd if not r.inverted else not fwd
                    (u, v) = (d, e) if want else (e, d)
                    if r.name in ctx.sigma:
                        return (r.name, u, v) in self.fact_r
                    if same:
                        return (r.name, True) in chosen
                    return (r.name, want) in chosen

                ok = True
                for p in self.open_roles:  # ABox facts must be present
                    if (p, d, e) in self.fact_r and (p, True) not in chosen:
                        ok = False
                    if not same and (p, e, d) in self.fact_r and (p, False) not in chosen:
                        ok = False
                if ok:
                    for ax in ntbox.role_incls:
                        for fwd in ((True,) if same else (True, False)):
                            if edge(ax.lhs, fwd) and not edge(ax.rhs, fwd):
                                ok = False
                                break
                        if not ok:
                            break
                if ok:
                    for ax in ntbox.universals:
                        for fwd in ((True,) if same else (True, False)):
                            (u, v) = (d, e) if fwd else (e, d)
                            if edge(ax.role, fwd) and self._has(types[u], ax.lhs) \
                                    and not self._has(types[v], ax.filler):
                                ok = False
                                break
                        if not ok:
                            break
                if ok:
                    out.append(chosen)
            return out

        choices = [vectors_for(d, e) for (d, e) in pairs]

        def rec(j: int, edges: dict[str, set[tuple[str, str]]]) -> Iterator[Core]:
            self._tick()
            if j == len(pairs):
                if self._named_witnesses_ok(types, edges) and \
                        not self._goal_already_matched(types, edges):
                    yield from self._assign_fringe(types, edges)
                return
            d, e = pairs[j]
            for chosen in choices[j]:
                added = []
                for (p, fwd) in chosen:
                    pair = (d, e) if fwd else (e, d)
                    edges.setdefault(p, set()).add(pair)
                    added.append((p, pair))
                yield from rec(j + 1, edges)
                for (p, pair) in added:
                    edges[p].discard(pair)

        yield from rec(0, {})

    def _expr_pairs(self, edges: dict[str, set[tuple[str, str]]],
                    role: RoleExpr) -> Iterator[tuple]:
        if role.name in self.ctx.sigma:
            base = ((x, y) for (q, x, y) in self.fact_r if q == role.name)
        else:
            base = iter(edges.get(role.name, ()))
        if role.inverted:
            return ((y, x) for (x, y) in base)
        return base

    def _fringe_can_witness(self, ax) -> bool:
        """Can a fringe element ever serve as the successor for this
        existential?  Not when the role is closed (no fringe edges), nor
        when the filler is a nominal or a closed concept."""
        if ax.role.name in self.ctx.sigma or self.ctx.role_closed(ax.role):
            return False
        return isinstance(ax.filler, Name) and ax.filler.name not in self.ctx.sigma

    def _goal_already_matched(self, types: dict[str, TypeVec],
                              edges: dict[str, set[tuple[str, str]]]) -> bool:
        if self.goal is None:
            return False
        query, answers = self.goal
        partial = self._partial_core(types, edges)
        return cq_matches(partial, query, answers)

    def _partial_core(self, types, edges) -> Core:
        ctx = self.ctx
        concept_ext: dict[str, set] = {a: set() for a in ctx.ntbox.concept_names}
        for e, t in types.items():
            for j, b in enumerate(ctx.basis):
                if isinstance(b, Name) and t >> j & 1:
                    concept_ext[b.name].add(e)
        role_ext: dict[str, set] = {p: set() for p in ctx.ntbox.role_names}
        for p, pairs in edges.items():
            role_ext[p].update(pairs)
        for (p, x, y) in self.fact_r:
            if p in ctx.sigma:
                role_ext[p].add((x, y))
        return Core(self.inds, frozenset(),
                    {a: frozenset(s) for a, s in concept_ext.items()},
                    {p: frozenset(s) for p, s in role_ext.items()})

    def _named_witnesses_ok(self, types: dict[str, TypeVec],
                            edges: dict[str, set[tuple[str, str]]]) -> bool:
        """Prune role assignments that already doom an existential whose
        witness must be a named individual."""
        for ax in self.ctx.ntbox.existentials:
            if self._fringe_can_witness(ax):
                continue
            for e in self.inds:
                if not self._has(types[e], ax.lhs):
                    continue
                if not any(x == e and self._has(types[y], ax.filler)
                           for (x, y) in self._expr_pairs(edges, ax.role)):
                    return False
        return True

    def _assign_fringe(self, types: dict[str, TypeVec],
                       edges: dict[str, set[tuple[str, str]]]) -> Iterator[Core]:
        ctx = self.ctx
        ntbox = ctx.ntbox

        def fringe_options(parent: str) -> list[tuple[TypeVec, frozenset[tuple[str, bool]]]]:
            ptype = types[parent]
            dirs = [(p, True) for p in self.open_roles] + \
                   [(p, False) for p in self.open_roles]
            out = []
            for ftype in self.fringe_types:
                for mask in range(1 << len(dirs)):
                    chosen = {dirs[j] for j in range(len(dirs)) if mask >> j & 1}

                    def edge(r: RoleExpr, fwd: bool) -> bool:
                        # fwd: parent -> fringe; else fringe -> parent
                        want = fwd if not r.inverted else not fwd
                        if r.name in ctx.sigma:
                            return False
                        return (r.name, want) in chosen

                    ok = True
                    for ax in ntbox.role_incls:
                        for fwd in (True, False):
                            if edge(ax.lhs, fwd) and not edge(ax.rhs, fwd):
                                ok = False
                                break
                        if not ok:
                            break
                    if ok:
                        for ax in ntbox.universals:
                            for fwd in (True, False):
                                (tu, tv) = (ptype, ftype) if fwd else (ftype, ptype)
                                if edge(ax.role, fwd) and self._has(tu, ax.lhs) \
                                        and not self._has(tv, ax.filler):
                                    ok = False
                                    break
                            if not ok:
                                break
                    if ok:
                        out.append((ftype, frozenset(chosen)))
            return out

        options_by_parent = {e: fringe_options(e) for e in sorted(set(self.inds))}

        def witnesses_ok(e: str, fringe: dict[FringeId, tuple[TypeVec, frozenset]]) -> bool:
            """Every existential triggered at the individual e is witnessed,
            by a named successor or one of e's own fringe elements."""
            for ax in ntbox.existentials:
                if not self._has(types[e], ax.lhs):
                    continue
                if any(x == e and self._has(types[y], ax.filler)
                       for (x, y) in self._expr_pairs(edges, ax.role)):
                    continue
                if not self._fringe_can_witness(ax):
                    return False
                found = False
                for i in range(self.n_exist):
                    opt = fringe.get(FringeId(e, i))
                    if opt is None:
                        continue
                    ftype, chosen = opt
                    want = True if not ax.role.inverted else False
                    if (ax.role.name, want) in chosen and self._has(ftype, ax.filler):
                        found = True
                        break
                if not found:
                    return False
            return True

        def per_slot(e: str, i: int,
                     fringe: dict[FringeId, tuple[TypeVec, frozenset]]) -> Iterator[None]:
            self._tick()
            if i == self.n_exist:
                if witnesses_ok(e, fringe):
                    yield None
                return
            fid = FringeId(e, i)
            yield from per_slot(e, i + 1, fringe)  # absent
            for opt in options_by_parent[e]:
                fringe[fid] = opt
                yield from per_slot(e, i + 1, fringe)
                del fringe[fid]

        def rec(idx: int, fringe: dict[FringeId, tuple[TypeVec, frozenset]]) -> Iterator[Core]:
            if idx == len(self.inds):
                core = self._build_core(types, edges, fringe)
                if core is not None:
                    yield core
                return
            for _ in per_slot(self.inds[idx], 0, fringe):
                yield from rec(idx + 1, fringe)

        yield from rec(0, {})

    def _build_core(self, types, edges, fringe) -> Core | None:
        ctx = self.ctx
        concept_ext: dict[str, set] = {a: set() for a in ctx.ntbox.concept_names}
        for e, t in types.items():
            for j, b in enumerate(ctx.basis):
                if isinstance(b, Name) and t >> j & 1:
                    concept_ext[b.name].add(e)
        for fid, (ftype, _) in fringe.items():
            for j, b in enumerate(ctx.basis):
                if isinstance(b, Name) and ftype >> j & 1:
                    concept_ext[b.name].add(fid)
        role_ext: dict[str, set] = {p: set() for p in ctx.ntbox.role_names}
        for p, pairs in edges.items():
            role_ext[p].update(pairs)
        for p in ctx.sigma:
            if p in role_ext:
                role_ext[p].update(
                    (x, y) for (q, x, y) in self.fact_r if q == p)
        for fid, (_, chosen) in fringe.items():
            for (p, fwd) in chosen:
                role_ext[p].add((fid.parent, fid) if fwd else (fid, fid.parent))

        core = Core(
            individuals=self.inds,
            fringe=frozenset(fringe),
            concept_ext={a: frozenset(s) for a, s in concept_ext.items()},
            role_ext={p: frozenset(s) for p, s in role_ext.items()},
        )
        # (c5)/(c3.4): every individual must witness every existential.
        for ax in ctx.ntbox.existentials:
            succ = core.pairs(ax.role)
            for e in self.inds:
                if core.satisfies_basic(ax.lhs, e) and \
                        not any(core.satisfies_basic(ax.filler, y)
                                for (x, y) in succ if x == e):
                    return None
        return core


def iter_cores(omq: OMQ, abox: Sequence[Assertion], max_bits: int = 40,
               max_nodes: int = 5_000_000) -> Iterator[Core]:
    """Every valid core of the instance, within the free-bit budget on the
    individual-level guesses and a search-node budget on the whole walk."""
    from .query import individuals_of
    ctx = TypeContext(omq.tbox, omq.sigma)
    inds = individuals_of(omq, abox)
    space = _CoreSpace(ctx, abox, inds, max_bits, max_nodes)
    return space.cores()


def cq_matches(core: Core, query: ConjunctiveQuery,
               answers: tuple[str, ...]) -> bool:
    """Does the core satisfy the query with its answer variables bound?"""
    binding: dict[str, object] = dict(zip(query.answer_vars, answers))
    atoms = sorted(query.atoms, key=str)
    domain = core.domain()

    def match(i: int, env: dict) -> bool:
        if i == len(atoms):
            return True
        a = atoms[i]
        if isinstance(a, ConceptAtom):
            if a.var in env:
                return core.in_concept(a.concept, env[a.var]) and match(i + 1, env)
            for e in domain:
                if core.in_concept(a.concept, e):
                    env2 = dict(env)
                    env2[a.var] = e
                    if match(i + 1, env2):
                        return True
            return False
        pairs = core.pairs(RoleExpr(a.role))
        for (x, y) in pairs:
            if a.subject in env and env[a.subject] != x:
                continue
            if a.object in env and env[a.object] != y:
                continue
            env2 = dict(env)
            env2[a.subject] = x
            env2[a.object] = y
            if match(i + 1, env2):
                return True
        return False

    return match(0, binding)


def core_extends(kb: NormalKB, core: Core, extra: int) -> bool:
    """Does the core extend to a model of the KB?

    Extension semantics: concept memberships are frozen on the whole core
    domain, role edges between named individuals are frozen, and closed
    predicates gain nothing; edges touching a fringe element may still be
    added (that is how fringe elements reach their witnesses, nominal
    witnesses included).  The search adds up to ``extra`` anonymous
    elements, assigns them types and closes the new edges maximally, which
    is complete for a fixed type assignment by the same argument as the
    countermodel search."""
    ctx = TypeContext(kb.tbox, kb.sigma)
    from .typespace import type_of
    core_elems = list(core.domain())
    core_types = {e: type_of(e, core, ctx) for e in core_elems}
    valid = [t for t in range(1 << ctx.k) if satisfies_clauses(t, ctx)]
    nominal_or_closed = 0
    for j, b in enumerate(ctx.basis):
        if isinstance(b, Nominal) or b.name in kb.sigma:
            nominal_or_closed |= 1 << j
    anon_candidates = [t for t in valid if not t & nominal_or_closed]
    hierarchy = kb.tbox.hierarchy

    def has_bits(t: TypeVec, b) -> bool:
        if isinstance(b, (Name, Nominal)):
            return bool(t >> ctx.bit_of[b] & 1)
        return type(b).__name__ == "Top"

    for m in range(extra + 1):
        anon = [f"_a{j + 1}" for j in range(m)]
        for anon_types in combinations_with_replacement(anon_candidates, m):
            types: dict = dict(core_types)
            types.update(zip(anon, anon_types))
            elements = core_elems + anon

            def edge_ok(p: str, d, e) -> bool:
                if p in kb.sigma:
                    return False  # closed predicates gain no new pairs
                for ax in kb.tbox.universals:
                    if hierarchy.subsumed(RoleExpr(p), ax.role):
                        if has_bits(types[d], ax.lhs) and not has_bits(types[e], ax.filler):
                            return False
                    if hierarchy.subsumed(RoleExpr(p, True), ax.role):
                        if has_bits(types[e], ax.lhs) and not has_bits(types[d], ax.filler):
                            return False
                for s in hierarchy.subsumers(RoleExpr(p)):
                    if s.name in kb.sigma:
                        return False
                return True

            named = set(core.individuals)
            role_ext = {}
            for p in kb.tbox.role_names:
                pairs = set(core.role_ext.get(p, frozenset()))
                if p not in kb.sigma:
                    for d in elements:
                        for e in elements:
                            if d in named and e in named:
                                continue  # individual-to-individual edges are frozen
                            if edge_ok(p, d, e):
                                pairs.add((d, e))
                role_ext[p] = pairs

            ok = True
            for ax in kb.tbox.existentials:
                if not ok:
                    break
                pname, inverted = ax.role.name, ax.role.inverted
                for e in elements:
                    if not has_bits(types[e], ax.lhs):
                        continue
                    found = False
                    for (x, y) in role_ext[pname]:
                        (u, v) = (y, x) if inverted else (x, y)
                        if u == e and has_bits(types[v], ax.filler):
                            found = True
                            break
                    if not found:
                        ok = False
                        break
            if ok:
                return True
    return False


def core_enumeration_decide(omq: OMQ, abox: Sequence[Assertion],
                            answers: tuple[str, ...], max_bits: int = 40,
                            max_nodes: int = 5_000_000) -> bool:
    """Certainty by exhaustion: the tuple is NOT certain exactly when some
    valid core falsifies the query and survives the marking fixpoint."""
    if not isinstance(classify(omq), CSafe):
        raise OmqError("core enumeration requires a c-safe query (fold it first)")
    ctx = TypeContext(omq.tbox, omq.sigma)
    mark_memo: dict[frozenset[TypeVec], frozenset[TypeVec]] = {}
    from .query import individuals_of
    from .typespace import realized_types, type_of

    space = _CoreSpace(ctx, abox, individuals_of(omq, abox), max_bits, max_nodes)
    space.goal = (omq.query, answers)
    for core in space.cores():
        if cq_matches(core, omq.query, answers):
            continue
        realized = realized_types(core, ctx)
        marked = mark_memo.get(realized)
        if marked is None:
            marked = mark_types(ctx, realized).marked
            mark_memo[realized] = marked
        if all(type_of(f, core, ctx) not in marked for f in core.fringe):
            return False
    return True


def count_cores(omq: OMQ, abox: Sequence[Assertion], max_bits: int = 40,
                max_nodes: int = 5_000_000) -> int:
    return sum(1 for _ in iter_cores(omq, abox, max_bits, max_nodes))
