"""The ten transition rules: worked examples, the frame condition, inverse
pairs, clause tables and the declared guard dependencies."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from blpcheck import (
    NO,
    YES,
    apply_rule,
    change_class,
    create_object,
    delete_object,
    get_read,
    get_write,
    give_rw,
    make_state,
    release_access,
    rescind_access,
    rule_clauses,
    run_clauses,
    sec_class,
    well_formed,
)
from blpcheck.core import READ, WRITE, CTRL
from blpcheck.rules import (
    REQUEST_TYPES,
    RULE_DEFS,
    RULE_ORDER,
    ChangeClass,
    CreateObject,
    DeleteObject,
    GetRead,
    GetWrite,
    GiveRW,
    NoApplicableClause,
    ReleaseRead,
    ReleaseWrite,
    RescindRead,
    RescindWrite,
    apply_def,
    without_conjunct,
)

from conftest import classes, well_formed_states


def all_requests():
    subjects = st.sampled_from(("s1", "s2"))
    objects = st.sampled_from(("o1", "o2", "o3"))
    modes = st.sampled_from((READ, WRITE, CTRL))
    return st.one_of(
        st.builds(GetRead, subjects, objects),
        st.builds(GetWrite, subjects, objects),
        st.builds(ReleaseRead, subjects, objects),
        st.builds(ReleaseWrite, subjects, objects),
        st.builds(GiveRW, subjects, subjects, objects, modes),
        st.builds(RescindRead, subjects, subjects, objects),
        st.builds(RescindWrite, subjects, subjects, objects),
        st.builds(ChangeClass, objects, classes()),
        st.builds(CreateObject, subjects, objects, classes()),
        st.builds(DeleteObject, subjects, objects),
    )


# --- worked examples, one block per rule ------------------------------------

def test_get_write_examples(demo_state):
    out = get_write(demo_state, "s2", "o2")
    assert (out.decision, out.after.bw) == (YES, (("s2", "o2"),))
    out = get_write(demo_state, "s2", "o1")
    assert (out.decision, out.after.bw) == (YES, (("s2", "o1"),))
    already = demo_state._replace(bw=(("s2", "o2"),))
    out = get_write(already, "s2", "o2")
    assert (out.decision, out.after, out.clause) == (NO, already, "getWriteE2")


def test_get_write_has_no_clearance_check(demo_state):
    # s1 holds no clearance for o2's class, yet write-only access only needs
    # the matrix bit: write is append-like under the two-mode reading.
    granted = demo_state._replace(
        m=demo_state.m + (("o2", "s1", "write"),))
    out = get_write(make_state(br=granted.br, bw=granted.bw, fo=granted.fo,
                               fs=granted.fs, m=granted.m), "s1", "o2")
    assert out.decision == YES


def test_get_read_examples(demo_state):
    step1 = get_write(demo_state, "s2", "o2")
    out = get_read(step1.after, "s2", "o2")
    assert (out.decision, out.after.br) == (YES, (("s2", "o2"),))
    assert out.after.bw == (("s2", "o2"),)

    step1 = get_write(demo_state, "s2", "o1")
    out = get_read(step1.after, "s2", "o2")
    assert (out.decision, out.clause) == (NO, "getReadE5")
    assert out.after.br == ()

    out = get_read(demo_state, "s1", "o2")  # no (o2, s1, read) grant
    assert (out.decision, out.after, out.clause) == (NO, demo_state, "getReadE1")


def test_get_read_checks_clearance(demo_state):
    granted = demo_state._replace(m=demo_state.m + (("o2", "s1", "read"),))
    out = get_read(granted, "s1", "o2")
    assert (out.decision, out.clause) == (NO, "getReadE4")


def test_release_examples(demo_state):
    reading = demo_state._replace(br=(("s2", "o2"),))
    out = release_access(reading, "s2", "o2", READ)
    assert (out.decision, out.after.br) == (YES, ())
    out = release_access(demo_state, "s2", "o2", READ)
    assert (out.decision, out.after) == (NO, demo_state)
    writing = demo_state._replace(bw=(("s2", "o1"),))
    out = release_access(writing, "s2", "o1", WRITE)
    assert (out.decision, out.after.bw) == (YES, ())
    with pytest.raises(ValueError):
        release_access(demo_state, "s2", "o2", CTRL)


def test_give_rw_examples():
    already = make_state(
        m=[("o1", "s1", "read"), ("o1", "s1", "ctrl"), ("o1", "s2", "read")]
    )
    out = give_rw(already, "s1", "s2", "o1", "read")
    assert (out.decision, out.after, out.clause) == (NO, already, "giveRWE4")

    out = give_rw(already, "s1", "s2", "o1", "ctrl")
    assert (out.decision, out.clause) == (NO, "giveRWE1")  # ctrl not givable

    givable = make_state(m=[("o1", "s1", "read"), ("o1", "s1", "ctrl")])
    out = give_rw(givable, "s1", "s2", "o1", "read")
    assert out.decision == YES
    assert ("o1", "s2", "read") in out.after.m
    assert len(out.after.m) == 3


def test_rescind_examples():
    st_ = make_state(
        br=[("s2", "o1")],
        m=[("o1", "s1", "ctrl"), ("o1", "s2", "read")],
    )
    out = rescind_access(st_, "s1", "s2", "o1", READ)
    assert out.decision == YES
    assert ("o1", "s2", "read") not in out.after.m
    assert out.after.br == ()

    # s2 holds no ctrl over o1
    out = rescind_access(st_, "s2", "s1", "o1", READ)
    assert (out.decision, out.clause) == (NO, "rescindReadE1")

    # target holds no write bit
    out = rescind_access(st_, "s1", "s2", "o1", WRITE)
    assert (out.decision, out.clause) == (NO, "rescindWriteE2")


def test_rescind_write_clears_current_access():
    st_ = make_state(
        bw=[("s2", "o1")],
        m=[("o1", "s1", "ctrl"), ("o1", "s2", "write")],
    )
    out = rescind_access(st_, "s1", "s2", "o1", WRITE)
    assert out.decision == YES
    assert out.after.bw == ()
    assert ("o1", "s2", "write") not in out.after.m


def test_change_class_examples(demo_state):
    out = change_class(demo_state, "o1", sec_class(0))
    assert out.decision == YES
    assert dict(out.after.fo)["o1"] == sec_class(0)

    accessed = demo_state._replace(br=(("s2", "o1"),))
    out = change_class(accessed, "o1", sec_class(0))
    assert (out.decision, out.after, out.clause) == (NO, accessed, "changeClassE2")

    out = change_class(demo_state, "o9", sec_class(0))  # unclassified object
    assert (out.decision, out.clause) == (NO, "changeClassE1")


def test_create_object_examples(demo_state):
    k = sec_class(1, {"cia"})
    out = create_object(demo_state, "s1", "o3", k)
    assert out.decision == YES
    assert dict(out.after.fo)["o3"] == k
    assert ("o3", "s1", "ctrl") in out.after.m

    out2 = create_object(demo_state, "s1", "o1", k)  # o1 already exists
    assert (out2.decision, out2.after) == (NO, demo_state)

    # the creator holds ctrl, not read: giving read away must fail at E2
    out3 = give_rw(out.after, "s1", "s2", "o3", "read")
    assert (out3.decision, out3.clause) == (NO, "giveRWE2")


def test_delete_object_examples(demo_state):
    k = sec_class(1, {"cia"})
    created = create_object(demo_state, "s1", "o3", k).after
    out = delete_object(created, "s1", "o3")
    assert (out.decision, out.after) == (YES, demo_state)  # exact undo

    out = delete_object(demo_state, "s1", "o2")  # no (o2, s1, ctrl)
    assert (out.decision, out.clause) == (NO, "deleteObjectE1")

    accessed = demo_state._replace(
        br=(("s1", "o1"),), m=demo_state.m + (("o1", "s1", "ctrl"),))
    out = delete_object(accessed, "s1", "o1")
    assert (out.decision, out.clause) == (NO, "deleteObjectE2")


def test_apply_rule_dispatch(demo_state):
    assert apply_rule(demo_state, GetWrite("s2", "o2")) == get_write(
        demo_state, "s2", "o2")
    out = apply_rule(demo_state, ReleaseRead("s1", "o1"))
    assert (out.decision, out.after) == (NO, demo_state)
    # sequential composition: write then read the same object
    mid = apply_rule(demo_state, GetWrite("s2", "o2")).after
    assert apply_rule(mid, GetRead("s2", "o2")).decision == YES


def test_request_union_is_exactly_ten():
    assert len(REQUEST_TYPES) == len(set(REQUEST_TYPES)) == 10
    assert len(RULE_ORDER) == 10


# --- rule properties ---------------------------------------------------------

@given(well_formed_states(), all_requests())
def test_frame_condition(st_, req):
    out = apply_rule(st_, req)
    if out.decision == NO:
        assert out.after is st_


@given(well_formed_states(), all_requests())
def test_determinism_and_single_clause(st_, req):
    out1 = apply_rule(st_, req)
    out2 = apply_rule(st_, req)
    assert out1 == out2
    # exactly one clause guard holds in the fixed tables
    clauses = rule_clauses(_rule_of(req))
    fired = [cl.name for cl in clauses if cl.guard(st_, req)]
    assert fired == [out1.clause]


def _rule_of(req):
    from blpcheck.rules import RULE_OF_REQUEST
    return RULE_OF_REQUEST[type(req)]


@given(well_formed_states(), all_requests())
def test_apply_rule_agrees_with_clause_tables(st_, req):
    table_out = run_clauses(rule_clauses(_rule_of(req)), st_, req)
    assert apply_rule(st_, req) == table_out


@given(well_formed_states(), all_requests())
def test_effect_minimality(st_, req):
    """A normal clause may only touch the components its rule declares."""
    out = apply_rule(st_, req)
    if out.decision == YES:
        writes = RULE_DEFS[_rule_of(req)].writes
        for comp in ("br", "bw", "fo", "fs", "m"):
            if comp not in writes:
                assert getattr(out.after, comp) is getattr(st_, comp)


@given(well_formed_states(), all_requests())
def test_rules_preserve_well_formedness(st_, req):
    assert well_formed(apply_rule(st_, req).after)


@given(well_formed_states())
def test_release_undoes_get(st_):
    for s in ("s1", "s2"):
        for o in ("o1", "o2"):
            got = get_read(st_, s, o)
            if got.decision == YES:
                back = release_access(got.after, s, o, READ)
                assert (back.decision, back.after) == (YES, st_)
            got = get_write(st_, s, o)
            if got.decision == YES:
                back = release_access(got.after, s, o, WRITE)
                assert (back.decision, back.after) == (YES, st_)


@given(well_formed_states(), classes())
def test_delete_undoes_create(st_, k):
    made = create_object(st_, "s1", "o9", k)
    assert made.decision == YES  # o9 is never in the generated universe
    back = delete_object(made.after, "s1", "o9")
    assert (back.decision, back.after) == (YES, st_)


# --- declared guard dependencies ---------------------------------------------

_COMPONENTS = ("br", "bw", "fo", "fs", "m")


@given(well_formed_states(), well_formed_states(), all_requests())
def test_conjunct_reads_are_honest(st_a, st_b, req):
    """Replacing components a conjunct does not read never changes it.

    The checker's staged sweep and the partition projection lean on these
    declarations, so they get pinned here.
    """
    rd = RULE_DEFS[_rule_of(req)]
    for c in rd.conjuncts:
        merged = st_a._replace(
            **{comp: getattr(st_b, comp) for comp in _COMPONENTS if comp not in c.reads}
        )
        assert c.holds(st_a, req) == c.holds(merged, req)


# --- clause tables -----------------------------------------------------------

def test_rule_clauses_shapes():
    gw = rule_clauses("getWrite", "fixed")
    assert [cl.name for cl in gw] == [
        "getWriteOk", "getWriteE1", "getWriteE2", "getWriteE3", "getWriteE4"]
    gr = rule_clauses("getRead")
    assert len(gr) == 6 and gr[0].decision == YES
    assert all(cl.decision == NO for cl in gr[1:])

    faithful = rule_clauses("giveRW", "paperFaithful")
    assert [cl.name for cl in faithful] == [
        "giveRWOk", "giveRWE1", "giveRWE2", "giveRWE3"]
    fixed = rule_clauses("giveRW", "fixed")
    assert [cl.name for cl in fixed] == [
        "giveRWOk", "giveRWE1", "giveRWE2", "giveRWE3", "giveRWE4"]

    for rule in RULE_ORDER:
        if rule != "giveRW":
            assert rule_clauses(rule, "fixed") == rule_clauses(rule, "paperFaithful")

    with pytest.raises(ValueError):
        rule_clauses("noSuchRule")
    with pytest.raises(ValueError):
        rule_clauses("getWrite", "noSuchVariant")


def test_abnormal_clauses_keep_state(demo_state):
    for rule in RULE_ORDER:
        for cl in rule_clauses(rule)[1:]:
            assert cl.effect(demo_state, None) is demo_state


def test_paper_faithful_give_rw_is_not_total():
    uncovered = make_state(
        m=[("o1", "s1", "read"), ("o1", "s1", "ctrl"), ("o1", "s2", "read")]
    )
    req = GiveRW("s1", "s2", "o1", "read")
    with pytest.raises(NoApplicableClause):
        run_clauses(rule_clauses("giveRW", "paperFaithful"), uncovered, req)
    # the fixed table answers no and keeps the state
    out = run_clauses(rule_clauses("giveRW", "fixed"), uncovered, req)
    assert (out.decision, out.after, out.clause) == (NO, uncovered, "giveRWE4")


def test_without_conjunct_mutation_helper():
    rd = RULE_DEFS["getWrite"]
    mutated = without_conjunct(rd, "readsBelowObject")
    assert len(mutated.conjuncts) == len(rd.conjuncts) - 1
    assert [c.name for c in mutated.conjuncts] == [
        "hasWritePermission", "notAlreadyWriting", "objectClassified"]
    with pytest.raises(ValueError):
        without_conjunct(rd, "noSuchGuard")
    # the mutant grants writes the real rule refuses
    st_ = make_state(
        br=[("s1", "o2")],
        fo={"o1": sec_class(0), "o2": sec_class(1)},
        fs={"s1": sec_class(1)},
        m=[("o1", "s1", "write"), ("o2", "s1", "read")],
    )
    req = GetWrite("s1", "o1")
    assert apply_rule(st_, req).decision == NO
    assert apply_def(mutated, st_, req).decision == YES
