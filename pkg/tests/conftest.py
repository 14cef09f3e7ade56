"""Shared fixtures and hypothesis strategies."""

import pytest
from hypothesis import strategies as st

from blpcheck import make_state, sec_class
from blpcheck.core import MATRIX_MODES

SUBJECTS = ("s1", "s2")
OBJECTS = ("o1", "o2", "o3")
CATEGORIES = ("ka", "kb")


@pytest.fixture
def demo_state():
    """The two-subject/two-object state used by the shipped simulations."""
    return make_state(
        fo={"o1": sec_class(1, {"f14"}), "o2": sec_class(2, {"f14", "f15"})},
        fs={"s1": sec_class(1, {"cia"}), "s2": sec_class(2, {"cia", "f14", "f15"})},
        m=[
            ("o1", "s1", "read"),
            ("o1", "s2", "write"),
            ("o2", "s2", "read"),
            ("o2", "s2", "write"),
        ],
    )


def classes():
    return st.builds(
        sec_class,
        st.integers(min_value=0, max_value=3),
        st.frozensets(st.sampled_from(CATEGORIES)),
    )


def class_maps(keys):
    return st.dictionaries(st.sampled_from(keys), classes(), max_size=len(keys))


def matrix_triples():
    return st.tuples(
        st.sampled_from(OBJECTS), st.sampled_from(SUBJECTS), st.sampled_from(MATRIX_MODES)
    )


def access_pairs():
    return st.tuples(st.sampled_from(SUBJECTS), st.sampled_from(OBJECTS))


@st.composite
def raw_states(draw):
    """Arbitrary states: functional class maps, but br/bw may reference
    objects the matrix does not know (i.e. possibly ill-formed)."""
    return make_state(
        br=draw(st.frozensets(access_pairs(), max_size=3)),
        bw=draw(st.frozensets(access_pairs(), max_size=3)),
        fo=draw(class_maps(OBJECTS)),
        fs=draw(class_maps(SUBJECTS)),
        m=draw(st.frozensets(matrix_triples(), max_size=5)),
    )


@st.composite
def well_formed_states(draw):
    """States satisfying the four type invariants by construction."""
    m = draw(st.frozensets(matrix_triples(), min_size=0, max_size=5))
    known = sorted({o for (o, _s, _x) in m})
    pairs = (
        st.tuples(st.sampled_from(SUBJECTS), st.sampled_from(known))
        if known else st.nothing()
    )
    return make_state(
        br=draw(st.frozensets(pairs, max_size=3)) if known else (),
        bw=draw(st.frozensets(pairs, max_size=3)) if known else (),
        fo=draw(class_maps(OBJECTS)),
        fs=draw(class_maps(SUBJECTS)),
        m=m,
    )
