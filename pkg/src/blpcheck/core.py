"""Core state model of the Bell-LaPadula reference monitor.

The model keeps five components: two current-access relations (``br`` for
read-only, ``bw`` for write-only), two partial classification maps (``fo``
for objects, ``fs`` for subjects) and the discretionary access matrix ``m``.
Security classes form the usual multilevel-security lattice: a pair of a
numeric level and a set of need-to-know categories, ordered componentwise.

Everything here is an immutable value.  State components are stored as
sorted, duplicate-free tuples so that two states are equal exactly when
they are structurally equal, and so that serialized states are canonical.
All predicates are pure functions; none of them raises on "incomplete"
states (a missing classification makes a predicate false, never an error).
"""

from __future__ import annotations

from typing import Iterable, Mapping, NamedTuple, Optional, Union

SubjectId = str
ObjectId = str

# Access matrix modes.  Only read and write can be *current* accesses; ctrl
# is a matrix-only permission that lets a subject give or rescind access.
READ = "read"
WRITE = "write"
CTRL = "ctrl"
MATRIX_MODES = (READ, WRITE, CTRL)
ACCESS_MODES = (READ, WRITE)

_MODE_RANK = {READ: 0, WRITE: 1, CTRL: 2}

YES = "yes"
NO = "no"
DECISIONS = (YES, NO)


class SecurityClass(NamedTuple):
    """A point of the security lattice: (level, category set)."""

    level: int
    cats: frozenset[str]


def sec_class(level: int, cats: Iterable[str] = ()) -> SecurityClass:
    """Build a security class, normalizing the category collection."""
    return SecurityClass(int(level), frozenset(cats))


def class_leq(a: SecurityClass, b: SecurityClass) -> bool:
    """True iff ``b`` dominates ``a``: a.level <= b.level and a.cats <= b.cats."""
    return a.level <= b.level and a.cats <= b.cats


def class_sort_key(c: SecurityClass):
    return (c.level, tuple(sorted(c.cats)))


BrPair = tuple[SubjectId, ObjectId]
ClassEntry = tuple[str, SecurityClass]
MatrixTriple = tuple[ObjectId, SubjectId, str]


def triple_sort_key(t: MatrixTriple):
    return (t[0], t[1], _MODE_RANK[t[2]])


def _entry_sort_key(e: ClassEntry):
    return (e[0],) + class_sort_key(e[1])


class SystemState(NamedTuple):
    """The five-component protection state.

    br  -- current read-only accesses, pairs (subject, object)
    bw  -- current write-only accesses, pairs (subject, object)
    fo  -- object classifications, pairs (object, SecurityClass)
    fs  -- subject clearances, pairs (subject, SecurityClass)
    m   -- access matrix, triples (object, subject, mode)

    fo and fs are *relations* at this level; well-formed states keep them
    functional (see well_formed), but non-functional raw states can be built
    deliberately, e.g. by the checker's mutation tests.
    """

    br: tuple[BrPair, ...]
    bw: tuple[BrPair, ...]
    fo: tuple[ClassEntry, ...]
    fs: tuple[ClassEntry, ...]
    m: tuple[MatrixTriple, ...]


def make_state(
    br: Iterable[BrPair] = (),
    bw: Iterable[BrPair] = (),
    fo: Union[Mapping[ObjectId, SecurityClass], Iterable[ClassEntry]] = (),
    fs: Union[Mapping[SubjectId, SecurityClass], Iterable[ClassEntry]] = (),
    m: Iterable[MatrixTriple] = (),
) -> SystemState:
    """Normalize components into a canonical SystemState.

    ``fo``/``fs`` accept either a mapping (always functional) or an iterable
    of pairs (may deliberately violate functionality).  Duplicate entries
    are collapsed; every component ends up sorted.
    """
    fo_pairs = fo.items() if isinstance(fo, Mapping) else fo
    fs_pairs = fs.items() if isinstance(fs, Mapping) else fs
    return SystemState(
        br=tuple(sorted(set(br))),
        bw=tuple(sorted(set(bw))),
        fo=tuple(sorted(set(fo_pairs), key=_entry_sort_key)),
        fs=tuple(sorted(set(fs_pairs), key=_entry_sort_key)),
        m=tuple(sorted(set(m), key=triple_sort_key)),
    )


EMPTY_STATE = make_state()


def lookup_class(entries: tuple[ClassEntry, ...], key: str) -> Optional[SecurityClass]:
    """The class bound to ``key``, or None if unbound or bound ambiguously.

    Mirrors function application on a partial function: a key with two
    distinct bindings has no applicable value.
    """
    found = None
    for k, v in entries:
        if k == key:
            if found is not None and v != found:
                return None
            found = v
    return found


def _is_functional(entries: tuple[ClassEntry, ...]) -> bool:
    seen: dict[str, SecurityClass] = {}
    for k, v in entries:
        if k in seen and seen[k] != v:
            return False
        seen[k] = v
    return True


def matrix_objects(st: SystemState) -> frozenset[ObjectId]:
    """Objects that own at least one access-matrix triple."""
    return frozenset(o for (o, _s, _x) in st.m)


def sec_cond(st: SystemState) -> bool:
    """The security condition, read-access form.

    Every current read access (s, o) needs s cleared, o classified, and
    o's class dominated by s's clearance.  Write-only accesses carry no
    clearance requirement.
    """
    for (s, o) in st.br:
        cls_s = lookup_class(st.fs, s)
        if cls_s is None:
            return False
        cls_o = lookup_class(st.fo, o)
        if cls_o is None or not class_leq(cls_o, cls_s):
            return False
    return True


def star_prop(st: SystemState) -> bool:
    """The *-property, per-subject form.

    For every subject reading o1 and writing o2, both objects must be
    classified and class(o1) <= class(o2); otherwise the subject could copy
    secret data downward outside the monitor's control.
    """
    if not st.bw:
        return True
    for (s1, o1) in st.br:
        for (s2, o2) in st.bw:
            if s1 != s2:
                continue
            c1 = lookup_class(st.fo, o1)
            c2 = lookup_class(st.fo, o2)
            if c1 is None or c2 is None or not class_leq(c1, c2):
                return False
    return True


# The four type invariants, individually addressable so the checker can
# report them as separate proof obligations.

def fo_functional(st: SystemState) -> bool:
    return _is_functional(st.fo)


def fs_functional(st: SystemState) -> bool:
    return _is_functional(st.fs)


def ran_br_in_dom_m(st: SystemState) -> bool:
    objs = matrix_objects(st)
    return all(o in objs for (_s, o) in st.br)


def ran_bw_in_dom_m(st: SystemState) -> bool:
    objs = matrix_objects(st)
    return all(o in objs for (_s, o) in st.bw)


def well_formed(st: SystemState) -> bool:
    """All four type invariants at once."""
    return (
        _is_functional(st.fo)
        and _is_functional(st.fs)
        and ran_br_in_dom_m(st)
        and ran_bw_in_dom_m(st)
    )


# Named property table shared by the checker and the report formats.
PROPERTY_SECCOND = "seccond"
PROPERTY_STARPROP = "starprop"
PROPERTY_FO_FUNCTIONAL = "foFunctional"
PROPERTY_FS_FUNCTIONAL = "fsFunctional"
PROPERTY_RAN_BR = "ranBrInDomM"
PROPERTY_RAN_BW = "ranBwInDomM"

PROPERTY_ORDER = (
    PROPERTY_SECCOND,
    PROPERTY_STARPROP,
    PROPERTY_FO_FUNCTIONAL,
    PROPERTY_FS_FUNCTIONAL,
    PROPERTY_RAN_BR,
    PROPERTY_RAN_BW,
)

PROPERTY_FUNCS = {
    PROPERTY_SECCOND: sec_cond,
    PROPERTY_STARPROP: star_prop,
    PROPERTY_FO_FUNCTIONAL: fo_functional,
    PROPERTY_FS_FUNCTIONAL: fs_functional,
    PROPERTY_RAN_BR: ran_br_in_dom_m,
    PROPERTY_RAN_BW: ran_bw_in_dom_m,
}

# State components each property actually inspects.  The checker uses this
# to skip re-evaluation when a transition provably left those components
# untouched (it verifies identity, never assumes frame conditions).
PROPERTY_READS = {
    PROPERTY_SECCOND: frozenset({"br", "fo", "fs"}),
    PROPERTY_STARPROP: frozenset({"br", "bw", "fo"}),
    PROPERTY_FO_FUNCTIONAL: frozenset({"fo"}),
    PROPERTY_FS_FUNCTIONAL: frozenset({"fs"}),
    PROPERTY_RAN_BR: frozenset({"br", "m"}),
    PROPERTY_RAN_BW: frozenset({"bw", "m"}),
}
