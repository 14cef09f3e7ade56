"""The ten Bell-LaPadula transition rules.

Each rule is an ordered list of guarded clauses: one *normal* clause that
fires when every guard conjunct holds (decision ``yes``, state updated) and
one *abnormal* clause per conjunct (decision ``no``, state unchanged).
Abnormal guards are built as ordered complements -- clause Ek requires the
first k-1 conjuncts and the negation of the k-th -- so the guards of a rule
partition its input space by construction.  The partition analyzer in the
checker module verifies that claim by enumeration.

``giveRW`` additionally has a ``paperFaithful`` clause table reproducing
the rule set of the original published model, whose abnormal clauses do not
cover the case where the receiver already holds the granted permission.
Applying that table to an uncovered input raises NoApplicableClause.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Union

from .core import (
    ACCESS_MODES,
    CTRL,
    NO,
    READ,
    WRITE,
    YES,
    ObjectId,
    SecurityClass,
    SubjectId,
    SystemState,
    class_leq,
    lookup_class,
    triple_sort_key,
)

VARIANT_FIXED = "fixed"
VARIANT_PAPER_FAITHFUL = "paperFaithful"
VARIANTS = (VARIANT_FIXED, VARIANT_PAPER_FAITHFUL)


# --------------------------------------------------------------------------
# Requests: one tagged variant per rule.

@dataclass(frozen=True, slots=True)
class GetRead:
    s: SubjectId
    o: ObjectId


@dataclass(frozen=True, slots=True)
class GetWrite:
    s: SubjectId
    o: ObjectId


@dataclass(frozen=True, slots=True)
class ReleaseRead:
    s: SubjectId
    o: ObjectId


@dataclass(frozen=True, slots=True)
class ReleaseWrite:
    s: SubjectId
    o: ObjectId


@dataclass(frozen=True, slots=True)
class GiveRW:
    giver: SubjectId
    receiver: SubjectId
    o: ObjectId
    x: str  # any matrix mode; non-givable modes are rejected by clause E1


@dataclass(frozen=True, slots=True)
class RescindRead:
    rescinder: SubjectId
    target: SubjectId
    o: ObjectId


@dataclass(frozen=True, slots=True)
class RescindWrite:
    rescinder: SubjectId
    target: SubjectId
    o: ObjectId


@dataclass(frozen=True, slots=True)
class ChangeClass:
    o: ObjectId
    k: SecurityClass


@dataclass(frozen=True, slots=True)
class CreateObject:
    s: SubjectId
    o: ObjectId
    k: SecurityClass


@dataclass(frozen=True, slots=True)
class DeleteObject:
    s: SubjectId
    o: ObjectId


Request = Union[
    GetRead, GetWrite, ReleaseRead, ReleaseWrite, GiveRW,
    RescindRead, RescindWrite, ChangeClass, CreateObject, DeleteObject,
]

REQUEST_TYPES = (
    GetRead, GetWrite, ReleaseRead, ReleaseWrite, GiveRW,
    RescindRead, RescindWrite, ChangeClass, CreateObject, DeleteObject,
)

RULE_GET_READ = "getRead"
RULE_GET_WRITE = "getWrite"
RULE_RELEASE_READ = "releaseRead"
RULE_RELEASE_WRITE = "releaseWrite"
RULE_GIVE_RW = "giveRW"
RULE_RESCIND_READ = "rescindRead"
RULE_RESCIND_WRITE = "rescindWrite"
RULE_CHANGE_CLASS = "changeClass"
RULE_CREATE_OBJECT = "createObject"
RULE_DELETE_OBJECT = "deleteObject"

RULE_ORDER = (
    RULE_GET_READ, RULE_GET_WRITE, RULE_RELEASE_READ, RULE_RELEASE_WRITE,
    RULE_GIVE_RW, RULE_RESCIND_READ, RULE_RESCIND_WRITE, RULE_CHANGE_CLASS,
    RULE_CREATE_OBJECT, RULE_DELETE_OBJECT,
)


class Outcome(NamedTuple):
    """Decision plus after state; a ``no`` decision keeps the input state."""

    decision: str
    after: SystemState
    clause: str


class NoApplicableClause(Exception):
    """No clause guard of a (non-total) clause table matched the input."""


@dataclass(frozen=True)
class Conjunct:
    """One named guard conjunct of a rule's normal clause.

    ``reads`` lists the state components the predicate inspects; the checker
    relies on it to stage evaluation, and a property test pins it down.
    """

    name: str
    reads: frozenset[str]
    holds: Callable[[SystemState, Request], bool]


@dataclass(frozen=True)
class RuleDef:
    name: str
    request_type: type
    conjuncts: tuple[Conjunct, ...]
    effect: Callable[[SystemState, Request], SystemState]
    writes: frozenset[str]  # components the normal effect may change
    clause_names: tuple[str, ...]  # Ok first, then E1..En


# --------------------------------------------------------------------------
# Guard conjuncts.  Module-level functions keep them cheap and picklable.

def _pair_add(pairs, pair):
    i = bisect.bisect_left(pairs, pair)
    return pairs[:i] + (pair,) + pairs[i:]


def _pair_del(pairs, pair):
    return tuple(p for p in pairs if p != pair)


def _gr_has_perm(st, r):
    return (r.o, r.s, READ) in st.m


def _gr_not_reading(st, r):
    return (r.s, r.o) not in st.br


def _gr_obj_classified(st, r):
    return lookup_class(st.fo, r.o) is not None


def _gr_clearance(st, r):
    cls_o = lookup_class(st.fo, r.o)
    cls_s = lookup_class(st.fs, r.s)
    return cls_o is not None and cls_s is not None and class_leq(cls_o, cls_s)


def _gr_star_guard(st, r):
    # Reading r.o must not undercut any object the subject is writing.
    cls_o = lookup_class(st.fo, r.o)
    if cls_o is None:
        return False
    for (si, oi) in st.bw:
        if si != r.s:
            continue
        cls_i = lookup_class(st.fo, oi)
        if cls_i is None or not class_leq(cls_o, cls_i):
            return False
    return True


def _gr_effect(st, r):
    return SystemState(_pair_add(st.br, (r.s, r.o)), st.bw, st.fo, st.fs, st.m)


def _gw_has_perm(st, r):
    return (r.o, r.s, WRITE) in st.m


def _gw_not_writing(st, r):
    return (r.s, r.o) not in st.bw


def _gw_star_guard(st, r):
    # Everything the subject currently reads must sit below r.o's class.
    cls_o = lookup_class(st.fo, r.o)
    if cls_o is None:
        return False
    for (si, oi) in st.br:
        if si != r.s:
            continue
        cls_i = lookup_class(st.fo, oi)
        if cls_i is None or not class_leq(cls_i, cls_o):
            return False
    return True


def _gw_effect(st, r):
    return SystemState(st.br, _pair_add(st.bw, (r.s, r.o)), st.fo, st.fs, st.m)


def _rr_reading(st, r):
    return (r.s, r.o) in st.br


def _rr_effect(st, r):
    return SystemState(_pair_del(st.br, (r.s, r.o)), st.bw, st.fo, st.fs, st.m)


def _rw_writing(st, r):
    return (r.s, r.o) in st.bw


def _rw_effect(st, r):
    return SystemState(st.br, _pair_del(st.bw, (r.s, r.o)), st.fo, st.fs, st.m)


def _gv_mode_givable(st, r):
    return r.x in ACCESS_MODES


def _gv_giver_has_mode(st, r):
    return (r.o, r.giver, r.x) in st.m


def _gv_giver_has_ctrl(st, r):
    return (r.o, r.giver, CTRL) in st.m


def _gv_receiver_lacks_mode(st, r):
    return (r.o, r.receiver, r.x) not in st.m


def _gv_effect(st, r):
    new = tuple(sorted(st.m + ((r.o, r.receiver, r.x),), key=triple_sort_key))
    return SystemState(st.br, st.bw, st.fo, st.fs, new)


def _rsr_has_ctrl(st, r):
    return (r.o, r.rescinder, CTRL) in st.m


def _rsr_target_has_read(st, r):
    return (r.o, r.target, READ) in st.m


def _rsr_effect(st, r):
    gone = (r.o, r.target, READ)
    new_m = tuple(t for t in st.m if t != gone)
    return SystemState(_pair_del(st.br, (r.target, r.o)), st.bw, st.fo, st.fs, new_m)


def _rsw_target_has_write(st, r):
    return (r.o, r.target, WRITE) in st.m


def _rsw_effect(st, r):
    gone = (r.o, r.target, WRITE)
    new_m = tuple(t for t in st.m if t != gone)
    return SystemState(st.br, _pair_del(st.bw, (r.target, r.o)), st.fo, st.fs, new_m)


def _cc_obj_classified(st, r):
    return lookup_class(st.fo, r.o) is not None


def _cc_unaccessed(st, r):
    for (_s, o) in st.br:
        if o == r.o:
            return False
    for (_s, o) in st.bw:
        if o == r.o:
            return False
    return True


def _cc_effect(st, r):
    new_fo = tuple((o, r.k if o == r.o else c) for (o, c) in st.fo)
    return SystemState(st.br, st.bw, new_fo, st.fs, st.m)


def _co_obj_fresh(st, r):
    if lookup_class(st.fo, r.o) is not None:
        return False
    for (o, _s, _x) in st.m:
        if o == r.o:
            return False
    return True


def _co_effect(st, r):
    new_fo = tuple(sorted(st.fo + ((r.o, r.k),)))
    new_m = tuple(sorted(st.m + ((r.o, r.s, CTRL),), key=triple_sort_key))
    return SystemState(st.br, st.bw, new_fo, st.fs, new_m)


def _do_has_ctrl(st, r):
    return (r.o, r.s, CTRL) in st.m


def _do_unaccessed(st, r):
    return _cc_unaccessed(st, r)


def _do_effect(st, r):
    new_fo = tuple(e for e in st.fo if e[0] != r.o)
    new_m = tuple(t for t in st.m if t[0] != r.o)
    return SystemState(st.br, st.bw, new_fo, st.fs, new_m)


def _conj(name, reads, holds):
    return Conjunct(name, frozenset(reads), holds)


def _clause_names(rule: str, n_conjuncts: int) -> tuple[str, ...]:
    return (rule + "Ok",) + tuple(f"{rule}E{i}" for i in range(1, n_conjuncts + 1))


def _rule(name, request_type, conjuncts, effect, writes) -> RuleDef:
    return RuleDef(
        name=name,
        request_type=request_type,
        conjuncts=tuple(conjuncts),
        effect=effect,
        writes=frozenset(writes),
        clause_names=_clause_names(name, len(conjuncts)),
    )


RULE_DEFS: dict[str, RuleDef] = {
    RULE_GET_READ: _rule(
        RULE_GET_READ, GetRead,
        (
            _conj("hasReadPermission", {"m"}, _gr_has_perm),
            _conj("notAlreadyReading", {"br"}, _gr_not_reading),
            _conj("objectClassified", {"fo"}, _gr_obj_classified),
            _conj("clearanceDominates", {"fo", "fs"}, _gr_clearance),
            _conj("readBelowWrites", {"bw", "fo"}, _gr_star_guard),
        ),
        _gr_effect, {"br"},
    ),
    RULE_GET_WRITE: _rule(
        RULE_GET_WRITE, GetWrite,
        (
            _conj("hasWritePermission", {"m"}, _gw_has_perm),
            _conj("notAlreadyWriting", {"bw"}, _gw_not_writing),
            _conj("objectClassified", {"fo"}, _gr_obj_classified),
            _conj("readsBelowObject", {"br", "fo"}, _gw_star_guard),
        ),
        _gw_effect, {"bw"},
    ),
    RULE_RELEASE_READ: _rule(
        RULE_RELEASE_READ, ReleaseRead,
        (_conj("currentlyReading", {"br"}, _rr_reading),),
        _rr_effect, {"br"},
    ),
    RULE_RELEASE_WRITE: _rule(
        RULE_RELEASE_WRITE, ReleaseWrite,
        (_conj("currentlyWriting", {"bw"}, _rw_writing),),
        _rw_effect, {"bw"},
    ),
    RULE_GIVE_RW: _rule(
        RULE_GIVE_RW, GiveRW,
        (
            _conj("modeGivable", (), _gv_mode_givable),
            _conj("giverHasMode", {"m"}, _gv_giver_has_mode),
            _conj("giverHasCtrl", {"m"}, _gv_giver_has_ctrl),
            _conj("receiverLacksMode", {"m"}, _gv_receiver_lacks_mode),
        ),
        _gv_effect, {"m"},
    ),
    RULE_RESCIND_READ: _rule(
        RULE_RESCIND_READ, RescindRead,
        (
            _conj("rescinderHasCtrl", {"m"}, _rsr_has_ctrl),
            _conj("targetHasRead", {"m"}, _rsr_target_has_read),
        ),
        _rsr_effect, {"m", "br"},
    ),
    RULE_RESCIND_WRITE: _rule(
        RULE_RESCIND_WRITE, RescindWrite,
        (
            _conj("rescinderHasCtrl", {"m"}, _rsr_has_ctrl),
            _conj("targetHasWrite", {"m"}, _rsw_target_has_write),
        ),
        _rsw_effect, {"m", "bw"},
    ),
    RULE_CHANGE_CLASS: _rule(
        RULE_CHANGE_CLASS, ChangeClass,
        (
            _conj("objectClassified", {"fo"}, _cc_obj_classified),
            _conj("objectUnaccessed", {"br", "bw"}, _cc_unaccessed),
        ),
        _cc_effect, {"fo"},
    ),
    RULE_CREATE_OBJECT: _rule(
        RULE_CREATE_OBJECT, CreateObject,
        (_conj("objectFresh", {"fo", "m"}, _co_obj_fresh),),
        _co_effect, {"fo", "m"},
    ),
    RULE_DELETE_OBJECT: _rule(
        RULE_DELETE_OBJECT, DeleteObject,
        (
            _conj("ownerHasCtrl", {"m"}, _do_has_ctrl),
            _conj("objectUnaccessed", {"br", "bw"}, _do_unaccessed),
        ),
        _do_effect, {"fo", "m"},
    ),
}

_DISPATCH: dict[type, RuleDef] = {rd.request_type: rd for rd in RULE_DEFS.values()}

RULE_OF_REQUEST: dict[type, str] = {rd.request_type: rd.name for rd in RULE_DEFS.values()}


def apply_def(rd: RuleDef, st: SystemState, r: Request) -> Outcome:
    """Run one rule definition: first failing conjunct picks the abnormal
    clause, otherwise the normal clause fires."""
    conjuncts = rd.conjuncts
    for i in range(len(conjuncts)):
        if not conjuncts[i].holds(st, r):
            return Outcome(NO, st, rd.clause_names[i + 1])
    return Outcome(YES, rd.effect(st, r), rd.clause_names[0])


def apply_rule(st: SystemState, r: Request) -> Outcome:
    """Dispatch a request to its rule.  Total: every request gets an Outcome."""
    return apply_def(_DISPATCH[type(r)], st, r)


def get_read(st: SystemState, s: SubjectId, o: ObjectId) -> Outcome:
    return apply_rule(st, GetRead(s, o))


def get_write(st: SystemState, s: SubjectId, o: ObjectId) -> Outcome:
    return apply_rule(st, GetWrite(s, o))


def release_access(st: SystemState, s: SubjectId, o: ObjectId, x: str) -> Outcome:
    if x == READ:
        return apply_rule(st, ReleaseRead(s, o))
    if x == WRITE:
        return apply_rule(st, ReleaseWrite(s, o))
    raise ValueError(f"not a current-access mode: {x!r}")


def give_rw(st: SystemState, giver: SubjectId, receiver: SubjectId,
            o: ObjectId, x: str) -> Outcome:
    return apply_rule(st, GiveRW(giver, receiver, o, x))


def rescind_access(st: SystemState, rescinder: SubjectId, target: SubjectId,
                   o: ObjectId, x: str) -> Outcome:
    if x == READ:
        return apply_rule(st, RescindRead(rescinder, target, o))
    if x == WRITE:
        return apply_rule(st, RescindWrite(rescinder, target, o))
    raise ValueError(f"not a current-access mode: {x!r}")


def change_class(st: SystemState, o: ObjectId, k: SecurityClass) -> Outcome:
    return apply_rule(st, ChangeClass(o, k))


def create_object(st: SystemState, s: SubjectId, o: ObjectId, k: SecurityClass) -> Outcome:
    return apply_rule(st, CreateObject(s, o, k))


def delete_object(st: SystemState, s: SubjectId, o: ObjectId) -> Outcome:
    return apply_rule(st, DeleteObject(s, o))


# --------------------------------------------------------------------------
# Reified clause tables, for the partition analyzer and for callers that
# want to inspect or run individual clauses.

@dataclass(frozen=True)
class RuleClause:
    """A guard/effect pair.  The guard is structurally ``all(prefix) and not
    negated`` (negated=None for the normal clause), which the analyzer
    exploits to evaluate whole tables from one conjunct-value vector."""

    name: str
    decision: str
    prefix: tuple[Conjunct, ...]
    negated: Optional[Conjunct]
    effect: Callable[[SystemState, Request], SystemState]

    def guard(self, st: SystemState, r: Request) -> bool:
        for c in self.prefix:
            if not c.holds(st, r):
                return False
        return self.negated is None or not self.negated.holds(st, r)


def _identity_effect(st: SystemState, r: Request) -> SystemState:
    return st


def _fixed_table(rd: RuleDef) -> tuple[RuleClause, ...]:
    clauses = [RuleClause(rd.clause_names[0], YES, rd.conjuncts, None, rd.effect)]
    for i, c in enumerate(rd.conjuncts):
        clauses.append(
            RuleClause(rd.clause_names[i + 1], NO, rd.conjuncts[:i], c, _identity_effect)
        )
    return tuple(clauses)


def _give_rw_paper_faithful() -> tuple[RuleClause, ...]:
    rd = RULE_DEFS[RULE_GIVE_RW]
    c1, c2, c3, _ = rd.conjuncts
    # Original published guards: E3 is not prefixed by the earlier
    # conjuncts, and no clause covers "receiver already holds the mode".
    return (
        RuleClause(rd.clause_names[0], YES, rd.conjuncts, None, rd.effect),
        RuleClause(rd.clause_names[1], NO, (), c1, _identity_effect),
        RuleClause(rd.clause_names[2], NO, (c1,), c2, _identity_effect),
        RuleClause(rd.clause_names[3], NO, (), c3, _identity_effect),
    )


def rule_clauses(rule: str, variant: str = VARIANT_FIXED) -> tuple[RuleClause, ...]:
    """The ordered clause list used for ``rule`` under ``variant``.

    Only giveRW distinguishes the variants; for every other rule they are
    identical.  Unknown rule or variant names raise ValueError.
    """
    if rule not in RULE_DEFS:
        raise ValueError(f"unknown rule: {rule!r}")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant: {variant!r}")
    if variant == VARIANT_PAPER_FAITHFUL and rule == RULE_GIVE_RW:
        return _give_rw_paper_faithful()
    return _fixed_table(RULE_DEFS[rule])


def run_clauses(clauses: tuple[RuleClause, ...], st: SystemState, r: Request) -> Outcome:
    """Fire the first clause whose guard holds.

    Raises NoApplicableClause when no guard matches, which can happen only
    for non-total tables such as giveRW's paperFaithful variant.
    """
    for cl in clauses:
        if cl.guard(st, r):
            return Outcome(cl.decision, cl.effect(st, r), cl.name)
    raise NoApplicableClause(f"no clause of {clauses[0].name[:-2]} covers {r!r}")


def without_conjunct(rd: RuleDef, conjunct_name: str) -> RuleDef:
    """A copy of ``rd`` lacking one named guard conjunct.

    Exists for mutation tests: dropping a guard must make the corresponding
    invariant obligation fail, otherwise the checker proves nothing.
    """
    kept = tuple(c for c in rd.conjuncts if c.name != conjunct_name)
    if len(kept) == len(rd.conjuncts):
        raise ValueError(f"rule {rd.name} has no conjunct {conjunct_name!r}")
    return RuleDef(
        name=rd.name,
        request_type=rd.request_type,
        conjuncts=kept,
        effect=rd.effect,
        writes=rd.writes,
        clause_names=_clause_names(rd.name, len(kept)),
    )
