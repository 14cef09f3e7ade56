"""Bounded-exhaustive and randomized checking of the rule invariants.

For every rule and every invariant (security condition, *-property, four
type invariants) there is one obligation: starting from any in-bounds state
that satisfies *all* invariants, applying the rule must yield a state that
still satisfies the invariant.  Ten rules times six invariants gives sixty
obligations.  Exhaustive mode decides each obligation over the full product
of in-bounds states and requests; random mode spot-checks it from a seeded
generator.  Either way a failed obligation carries a concrete witness that
re-evaluates to a genuine violation.

This is small-scope evidence, not proof: the guarantee is exactly "no
counterexample within the given bounds".

The partition analyzer re-checks, by the same kind of enumeration, that the
clause guards of each rule jointly cover their input space and are pairwise
disjoint.  The ``paperFaithful`` variant of giveRW fails the coverage half:
a giver repeating a grant the receiver already holds matches no clause.

Performance note: enumeration is layered (classifications, then matrix,
then current accesses), and guard conjuncts are evaluated at the outermost
layer where all components they read are bound.  Each conjunct declares
which components it reads; declarations are pinned by property tests, and
a small-scope test checks the staged sweep against a naive state-by-state
sweep.  Reported witnesses are always re-validated through the public rule
interface before they land in a report.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass
from multiprocessing import get_context
from typing import Iterator, NamedTuple, Optional, Sequence

from . import core, rules
from .core import (
    MATRIX_MODES,
    PROPERTY_FO_FUNCTIONAL,
    PROPERTY_FS_FUNCTIONAL,
    PROPERTY_FUNCS,
    PROPERTY_ORDER,
    PROPERTY_RAN_BR,
    PROPERTY_RAN_BW,
    PROPERTY_SECCOND,
    PROPERTY_STARPROP,
    SecurityClass,
    SystemState,
    class_leq,
)
from .rules import (
    RULE_DEFS,
    RULE_ORDER,
    VARIANT_FIXED,
    Request,
    RuleDef,
    apply_def,
    rule_clauses,
)

MODE_EXHAUSTIVE = "exhaustive"
MODE_RANDOM = "random"


class Bounds(NamedTuple):
    """Cardinality caps for the enumeration universes.

    Entities are named s1..sN, o1..oN, categories k1..kN; levels run from 0
    to num_levels - 1.
    """

    num_subjects: int
    num_objects: int
    num_levels: int
    num_categories: int
    max_br: int
    max_bw: int
    max_matrix: int


# Default profile: small enough for an exhaustive sweep, large enough to
# express the known violation patterns (a *-property breach needs one
# subject and two objects, the giveRW coverage gap needs two subjects, a
# clearance breach needs two levels).
P0 = Bounds(2, 2, 2, 1, 2, 2, 3)


class Obligation(NamedTuple):
    rule: str
    prop: str


ALL_OBLIGATIONS = tuple(
    Obligation(rule, prop) for rule in RULE_ORDER for prop in PROPERTY_ORDER
)


class Witness(NamedTuple):
    """A concrete obligation violation: the state, the request, the state
    the rule produced, and the invariant that broke."""

    state: SystemState
    request: Request
    after: SystemState
    prop: str


@dataclass(frozen=True)
class ObligationResult:
    rule: str
    prop: str
    status: str  # "pass" | "fail"
    states_checked: int
    requests_checked: int
    elapsed_ms: float
    witness: Optional[Witness] = None


@dataclass(frozen=True)
class ObligationReport:
    bounds: Bounds
    mode: str
    results: tuple[ObligationResult, ...]
    samples: Optional[int] = None
    seed: Optional[int] = None

    @property
    def all_pass(self) -> bool:
        return all(r.status == "pass" for r in self.results)


class PartitionWitness(NamedTuple):
    state: SystemState
    request: Request


@dataclass(frozen=True)
class GapFamily:
    """All gap inputs sharing one guard-conjunct signature."""

    signature: tuple[tuple[str, bool], ...]
    count: int
    witnesses: tuple[PartitionWitness, ...]


@dataclass(frozen=True)
class OverlapFamily:
    clause_pair: tuple[str, str]
    count: int
    witnesses: tuple[PartitionWitness, ...]


@dataclass(frozen=True)
class PartitionReport:
    rule: str
    variant: str
    bounds: Bounds
    states_checked: int
    requests_checked: int
    elapsed_ms: float
    gap_families: tuple[GapFamily, ...]
    overlap_families: tuple[OverlapFamily, ...]

    @property
    def gaps(self) -> tuple[PartitionWitness, ...]:
        return tuple(w for fam in self.gap_families for w in fam.witnesses)

    @property
    def overlaps(self) -> tuple[tuple[SystemState, Request, tuple[str, str]], ...]:
        return tuple(
            (w.state, w.request, fam.clause_pair)
            for fam in self.overlap_families
            for w in fam.witnesses
        )

    @property
    def ok(self) -> bool:
        return not self.gap_families and not self.overlap_families


# --------------------------------------------------------------------------
# Enumeration universes.

def _validate_bounds(b: Bounds) -> None:
    if any(v < 0 for v in b):
        raise ValueError(f"bounds must be non-negative: {b}")


def _cat_subsets(categories: Sequence[str]) -> list[frozenset[str]]:
    out = []
    for size in range(len(categories) + 1):
        for combo in itertools.combinations(categories, size):
            out.append(frozenset(combo))
    return out


class _Universe:
    """Precomputed option spaces for one Bounds value.

    Every option list is in canonical order: class maps vary the last entity
    fastest with "unclassified" first; set-valued components run by size,
    then lexicographically over their sorted element universe.
    """

    def __init__(self, b: Bounds):
        _validate_bounds(b)
        self.bounds = b
        self.subjects = tuple(sorted(f"s{i + 1}" for i in range(b.num_subjects)))
        self.objects = tuple(sorted(f"o{i + 1}" for i in range(b.num_objects)))
        self.categories = tuple(sorted(f"k{i + 1}" for i in range(b.num_categories)))
        self.classes = tuple(
            sorted(
                (SecurityClass(lvl, cats)
                 for lvl in range(b.num_levels)
                 for cats in _cat_subsets(self.categories)),
                key=core.class_sort_key,
            )
        )
        self.fs_options = self._class_maps(self.subjects)
        self.fo_options = self._class_maps(self.objects)
        triples = sorted(
            ((o, s, x) for o in self.objects for s in self.subjects for x in MATRIX_MODES),
            key=core.triple_sort_key,
        )
        self.m_options: list[tuple[tuple, frozenset]] = []
        for size in range(min(b.max_matrix, len(triples)) + 1):
            for m in itertools.combinations(triples, size):
                self.m_options.append((m, frozenset(o for (o, _s, _x) in m)))
        self.pairs = tuple(sorted((s, o) for s in self.subjects for o in self.objects))
        self._subset_cache: dict = {}

    def _class_maps(self, entities: Sequence[str]) -> list[tuple]:
        options: list[Optional[SecurityClass]] = [None, *self.classes]
        maps = []
        for vec in itertools.product(options, repeat=len(entities)):
            maps.append(tuple((e, c) for e, c in zip(entities, vec) if c is not None))
        return maps

    def subsets_upto(self, items: tuple, cap: int) -> list[tuple]:
        key = (items, cap)
        cached = self._subset_cache.get(key)
        if cached is None:
            cached = []
            for size in range(min(cap, len(items)) + 1):
                cached.extend(itertools.combinations(items, size))
            self._subset_cache[key] = cached
        return cached


def enumerate_states(b: Bounds) -> Iterator[SystemState]:
    """Yield every well-formed in-bounds state exactly once.

    Layered generation: classifications first, then the matrix, then the
    current-access relations restricted to objects the matrix knows about,
    so the type invariants hold by construction rather than by filtering.
    The order is canonical and stable across runs.
    """
    u = _Universe(b)
    for fs in u.fs_options:
        for fo in u.fo_options:
            for m, dom in u.m_options:
                avail = tuple(p for p in u.pairs if p[1] in dom)
                for br in u.subsets_upto(avail, b.max_br):
                    for bw in u.subsets_upto(avail, b.max_bw):
                        yield SystemState(br, bw, fo, fs, m)


def requests_for_rule(rule: str, b: Bounds) -> tuple[Request, ...]:
    """Every in-bounds request of one rule, in canonical order."""
    u = _Universe(b)
    return _requests_for_rule(rule, u)


def _requests_for_rule(rule: str, u: _Universe) -> tuple[Request, ...]:
    S, O, K = u.subjects, u.objects, u.classes
    if rule == rules.RULE_GET_READ:
        return tuple(rules.GetRead(s, o) for s in S for o in O)
    if rule == rules.RULE_GET_WRITE:
        return tuple(rules.GetWrite(s, o) for s in S for o in O)
    if rule == rules.RULE_RELEASE_READ:
        return tuple(rules.ReleaseRead(s, o) for s in S for o in O)
    if rule == rules.RULE_RELEASE_WRITE:
        return tuple(rules.ReleaseWrite(s, o) for s in S for o in O)
    if rule == rules.RULE_GIVE_RW:
        return tuple(
            rules.GiveRW(g, r, o, x)
            for g in S for r in S for o in O for x in MATRIX_MODES
        )
    if rule == rules.RULE_RESCIND_READ:
        return tuple(rules.RescindRead(rc, t, o) for rc in S for t in S for o in O)
    if rule == rules.RULE_RESCIND_WRITE:
        return tuple(rules.RescindWrite(rc, t, o) for rc in S for t in S for o in O)
    if rule == rules.RULE_CHANGE_CLASS:
        return tuple(rules.ChangeClass(o, k) for o in O for k in K)
    if rule == rules.RULE_CREATE_OBJECT:
        return tuple(rules.CreateObject(s, o, k) for s in S for o in O for k in K)
    if rule == rules.RULE_DELETE_OBJECT:
        return tuple(rules.DeleteObject(s, o) for s in S for o in O)
    raise ValueError(f"unknown rule: {rule!r}")


def enumerate_requests(b: Bounds) -> tuple[Request, ...]:
    """Every in-bounds request, grouped by rule in canonical rule order."""
    u = _Universe(b)
    out: list[Request] = []
    for rule in RULE_ORDER:
        out.extend(_requests_for_rule(rule, u))
    return tuple(out)


def strict_star_prop(st: SystemState) -> bool:
    """A stricter *-property that also demands classifications exist.

    On top of the per-pair condition: whenever anything is being written,
    every read object must be classified; and written objects must always
    be classified.  Available to the obligation runner as an alternative
    reading of the invariant (see ``strict_star`` flag).
    """
    if not core.star_prop(st):
        return False
    dom_fo = {o for (o, _c) in st.fo}
    if st.bw and any(o not in dom_fo for (_s, o) in st.br):
        return False
    return all(o in dom_fo for (_s, o) in st.bw)


# --------------------------------------------------------------------------
# The staged exhaustive sweep.

_SUBTREE_COMPONENTS = frozenset({"fo", "fs", "m"})


def _split_conjuncts(rd: RuleDef):
    subtree = tuple(c for c in rd.conjuncts if c.reads <= _SUBTREE_COMPONENTS)
    leaf = tuple(c for c in rd.conjuncts if not (c.reads <= _SUBTREE_COMPONENTS))
    return subtree, leaf


class _ObState:
    """Mutable per-obligation bookkeeping during one sweep."""

    __slots__ = ("rule", "prop", "failed", "witness", "fail_states")

    def __init__(self, rule: str, prop: str):
        self.rule = rule
        self.prop = prop
        self.failed = False
        self.witness: Optional[Witness] = None
        self.fail_states = 0


def _class_tables(fs, fo, pairs, objects):
    """Per-(fs, fo) truth tables for the two security invariants.

    read_ok holds the (s, o) pairs allowed as current reads; star_ok holds
    the (read object, written object) pairs allowed for one subject.
    """
    fs_map = dict(fs)
    fo_map = dict(fo)
    read_ok = frozenset(
        (s, o) for (s, o) in pairs
        if s in fs_map and o in fo_map and class_leq(fo_map[o], fs_map[s])
    )
    star_ok = frozenset(
        (o1, o2) for o1 in objects for o2 in objects
        if o1 in fo_map and o2 in fo_map and class_leq(fo_map[o1], fo_map[o2])
    )
    return read_ok, star_ok, frozenset(fo_map)


def _star_leaf_ok(br, bw, star_ok) -> bool:
    for (s1, o1) in br:
        for (s2, o2) in bw:
            if s1 == s2 and (o1, o2) not in star_ok:
                return False
    return True


def _strict_leaf_ok(br, bw, star_ok, dom_fo) -> bool:
    if not _star_leaf_ok(br, bw, star_ok):
        return False
    if bw and any(o not in dom_fo for (_s, o) in br):
        return False
    return all(o in dom_fo for (_s, o) in bw)


def _sweep_range(
    b: Bounds,
    obligations: Sequence[Obligation],
    rule_defs: dict[str, RuleDef],
    strict_star: bool,
    lo: int,
    hi: int,
):
    """Check obligations over the (fs, fo) combinations with flat index in
    [lo, hi).  Returns per-obligation partial results plus the leaf count.

    The hypothesis filter (all invariants hold before the step) is fused
    into generation: type invariants by construction, the security
    condition by drawing read pairs from the read_ok table, the *-property
    by the leaf filter.  A small-scope test pins this against literally
    filtering enumerate_states with the core predicates.
    """
    u = _Universe(b)
    star_fn = strict_star_prop if strict_star else core.star_prop
    obs = [_ObState(ob.rule, ob.prop) for ob in obligations]
    by_rule: dict[str, list[_ObState]] = {}
    for ob in obs:
        by_rule.setdefault(ob.rule, []).append(ob)

    rule_plans = []
    for rule in RULE_ORDER:
        if rule not in by_rule:
            continue
        rd = rule_defs[rule]
        subtree_cs, leaf_cs = _split_conjuncts(rd)
        rule_plans.append(
            (rule, rd, subtree_cs, leaf_cs, _requests_for_rule(rule, u), by_rule[rule])
        )

    n_fo = len(u.fo_options)
    leaves = 0
    max_br, max_bw = b.max_br, b.max_bw
    rule_time = {rule: 0.0 for rule, *_rest in rule_plans}
    clock = time.perf_counter

    for flat in range(lo, hi):
        fs = u.fs_options[flat // n_fo]
        fo = u.fo_options[flat % n_fo]
        read_ok, star_ok, dom_fo = _class_tables(fs, fo, u.pairs, u.objects)
        for m, dom in u.m_options:
            proto = SystemState((), (), fo, fs, m)
            survivors = []
            for rule, rd, subtree_cs, leaf_cs, reqs, rule_obs in rule_plans:
                live = [ob for ob in rule_obs if not ob.failed]
                if not live:
                    continue
                t0 = clock()
                group = []
                for req in reqs:
                    try:
                        for c in subtree_cs:
                            if not c.holds(proto, req):
                                break
                        else:
                            group.append((req, leaf_cs, rd.effect, live))
                    except Exception as e:
                        raise RuntimeError(
                            f"internal evaluation failure on state={proto!r}, "
                            f"request={req!r}"
                        ) from e
                rule_time[rule] += clock() - t0
                if group:
                    survivors.append((rule, group))
            br_avail = tuple(p for p in u.pairs if p in read_ok and p[1] in dom)
            bw_avail = tuple(p for p in u.pairs if p[1] in dom)
            br_subs = u.subsets_upto(br_avail, max_br)
            bw_subs = u.subsets_upto(bw_avail, max_bw)
            for br in br_subs:
                for bw in bw_subs:
                    if strict_star:
                        if not _strict_leaf_ok(br, bw, star_ok, dom_fo):
                            continue
                    elif br and bw and not _star_leaf_ok(br, bw, star_ok):
                        continue
                    leaves += 1
                    if not survivors:
                        continue
                    st = SystemState(br, bw, fo, fs, m)
                    for rule, group in survivors:
                        t0 = clock()
                        req = None
                        try:
                            for req, leaf_cs, effect, live in group:
                                granted = True
                                for c in leaf_cs:
                                    if not c.holds(st, req):
                                        granted = False
                                        break
                                if not granted:
                                    continue
                                after = effect(st, req)
                                for ob in live:
                                    if ob.failed:
                                        continue
                                    prop = ob.prop
                                    holds = _prop_after(
                                        prop, st, after, fo, fs, m,
                                        read_ok, star_ok, dom, star_fn,
                                    )
                                    if not holds:
                                        ob.failed = True
                                        ob.witness = Witness(st, req, after, prop)
                                        ob.fail_states = leaves
                        except Exception as e:
                            raise RuntimeError(
                                f"internal evaluation failure on state={st!r}, "
                                f"request={req!r}"
                            ) from e
                        rule_time[rule] += clock() - t0
        # drop rules whose obligations all failed (mutation runs stop fast)
        if all(ob.failed for ob in obs):
            break

    return obs, leaves, rule_time


def _prop_after(prop, st, after, fo_t, fs_t, m_t, read_ok, star_ok, dom_m, star_fn):
    """Evaluate one invariant on the after state.

    If the components the invariant reads are the very objects of the
    hypothesis state, the invariant holds because it held before the step.
    If the classification maps are untouched, the per-(fs, fo) truth tables
    apply.  Otherwise fall back to the full predicate.
    """
    if prop == PROPERTY_SECCOND:
        if after.br is st.br and after.fo is st.fo and after.fs is st.fs:
            return True
        if after.fo is fo_t and after.fs is fs_t:
            return all(p in read_ok for p in after.br)
        return core.sec_cond(after)
    if prop == PROPERTY_STARPROP:
        if after.br is st.br and after.bw is st.bw and after.fo is st.fo:
            return True
        if star_fn is core.star_prop:
            if after.fo is fo_t:
                return _star_leaf_ok(after.br, after.bw, star_ok)
            return core.star_prop(after)
        return star_fn(after)
    if prop == PROPERTY_FO_FUNCTIONAL:
        return after.fo is st.fo or core.fo_functional(after)
    if prop == PROPERTY_FS_FUNCTIONAL:
        return after.fs is st.fs or core.fs_functional(after)
    if prop == PROPERTY_RAN_BR:
        if after.br is st.br and after.m is st.m:
            return True
        if after.m is m_t:
            return all(o in dom_m for (_s, o) in after.br)
        return core.ran_br_in_dom_m(after)
    if prop == PROPERTY_RAN_BW:
        if after.bw is st.bw and after.m is st.m:
            return True
        if after.m is m_t:
            return all(o in dom_m for (_s, o) in after.bw)
        return core.ran_bw_in_dom_m(after)
    raise ValueError(f"unknown property: {prop!r}")


def _select_obligations(rule: Optional[str], prop: Optional[str]) -> tuple[Obligation, ...]:
    if rule is not None and rule not in RULE_DEFS:
        raise ValueError(f"unknown rule: {rule!r}")
    if prop is not None and prop not in PROPERTY_ORDER:
        raise ValueError(f"unknown property: {prop!r}")
    return tuple(
        ob for ob in ALL_OBLIGATIONS
        if (rule is None or ob.rule == rule) and (prop is None or ob.prop == prop)
    )


def _worker_sweep(args):
    b, obligations, rule_names, strict_star, lo, hi = args
    defs = {name: RULE_DEFS[name] for name in rule_names}
    obs, leaves, rule_time = _sweep_range(b, obligations, defs, strict_star, lo, hi)
    return (
        [(o.rule, o.prop, o.failed, o.witness, o.fail_states) for o in obs],
        leaves,
        rule_time,
    )


def _merge_chunks(obligations, chunk_results):
    """Fold worker chunk results, in chunk order, into sequential-equivalent
    verdicts: first witness wins, earlier chunks contribute their full leaf
    counts to the failing obligation's visited-state count.  Per-rule times
    sum over chunks (CPU time, not wall time, under parallelism)."""
    merged = {ob: [False, None, 0] for ob in obligations}
    leaves_before = 0
    total_leaves = 0
    total_time: dict[str, float] = {}
    for entries, leaves, rule_time in chunk_results:
        for rule, prop, failed, witness, fail_states in entries:
            slot = merged[Obligation(rule, prop)]
            if failed and not slot[0]:
                slot[0] = True
                slot[1] = witness
                slot[2] = leaves_before + fail_states
        for rule, secs in rule_time.items():
            total_time[rule] = total_time.get(rule, 0.0) + secs
        leaves_before += leaves
        total_leaves += leaves
    return merged, total_leaves, total_time


def check_obligations(
    b: Bounds = P0,
    mode: str = MODE_EXHAUSTIVE,
    samples: int = 1000,
    seed: int = 0,
    rule: Optional[str] = None,
    prop: Optional[str] = None,
    workers: int = 1,
    strict_star: bool = False,
    rule_defs: Optional[dict[str, RuleDef]] = None,
) -> ObligationReport:
    """Check the selected obligations and report one verdict per obligation.

    Exhaustive mode covers every (state, request) pair of the bounded
    universe whose state satisfies all invariants.  Random mode draws
    ``samples`` such pairs per obligation from a generator seeded with
    ``seed``; equal seeds give identical reports.  ``rule_defs`` lets tests
    substitute mutated rule tables.
    """
    _validate_bounds(b)
    if mode not in (MODE_EXHAUSTIVE, MODE_RANDOM):
        raise ValueError(f"unknown mode: {mode!r}")
    if mode == MODE_RANDOM and samples < 1:
        raise ValueError("random mode needs samples >= 1")
    obligations = _select_obligations(rule, prop)
    defs = dict(RULE_DEFS) if rule_defs is None else {**RULE_DEFS, **rule_defs}

    if mode == MODE_RANDOM:
        return _check_random(b, obligations, defs, samples, seed, strict_star)

    u = _Universe(b)
    n_req = {r: len(_requests_for_rule(r, u)) for r in RULE_ORDER}
    n_combo = len(u.fs_options) * len(u.fo_options)
    if workers <= 1 or n_combo < 2:
        obs, total_leaves, rule_time = _sweep_range(
            b, obligations, defs, strict_star, 0, n_combo
        )
        merged = {
            Obligation(o.rule, o.prop): [o.failed, o.witness, o.fail_states]
            for o in obs
        }
    else:
        if rule_defs is not None:
            raise ValueError("rule_defs overrides run single-worker only")
        n = min(workers, n_combo)
        step = (n_combo + n - 1) // n
        ranges = [(lo, min(lo + step, n_combo)) for lo in range(0, n_combo, step)]
        args = [
            (b, obligations, tuple(defs), strict_star, lo, hi) for lo, hi in ranges
        ]
        with get_context("fork").Pool(n) as pool:
            chunk_results = pool.map(_worker_sweep, args)
        merged, total_leaves, rule_time = _merge_chunks(obligations, chunk_results)

    # obligations of one rule share the rule's measured sweep time equally
    props_per_rule: dict[str, int] = {}
    for ob in obligations:
        props_per_rule[ob.rule] = props_per_rule.get(ob.rule, 0) + 1
    results = []
    for ob in obligations:
        failed, witness, fail_states = merged[ob]
        if failed:
            _validate_witness(witness, defs, strict_star)
        states = fail_states if failed else total_leaves
        results.append(
            ObligationResult(
                rule=ob.rule,
                prop=ob.prop,
                status="fail" if failed else "pass",
                states_checked=states,
                requests_checked=states * n_req[ob.rule],
                elapsed_ms=rule_time.get(ob.rule, 0.0) * 1000.0
                / props_per_rule[ob.rule],
                witness=witness,
            )
        )
    return ObligationReport(bounds=b, mode=MODE_EXHAUSTIVE, results=tuple(results))


def _validate_witness(w: Witness, defs: dict[str, RuleDef], strict_star: bool) -> None:
    """Refuse to report a counterexample that does not reproduce."""
    rd = defs[rules.RULE_OF_REQUEST[type(w.request)]]
    out = apply_def(rd, w.state, w.request)
    star_fn = strict_star_prop if strict_star else core.star_prop
    prop_fns = dict(PROPERTY_FUNCS)
    prop_fns[PROPERTY_STARPROP] = star_fn
    hypothesis = (
        core.well_formed(w.state) and core.sec_cond(w.state) and star_fn(w.state)
    )
    violated = not prop_fns[w.prop](out.after)
    if not (hypothesis and out.after == w.after and violated):
        raise AssertionError(f"witness failed self-validation: {w}")


def _random_state(rng: random.Random, u: _Universe, strict_star: bool) -> SystemState:
    b = u.bounds
    while True:
        fs = rng.choice(u.fs_options)
        fo = rng.choice(u.fo_options)
        m, dom = rng.choice(u.m_options)
        read_ok, star_ok, dom_fo = _class_tables(fs, fo, u.pairs, u.objects)
        br_avail = tuple(p for p in u.pairs if p in read_ok and p[1] in dom)
        bw_avail = tuple(p for p in u.pairs if p[1] in dom)
        for _ in range(64):
            br = rng.choice(u.subsets_upto(br_avail, b.max_br))
            bw = rng.choice(u.subsets_upto(bw_avail, b.max_bw))
            if strict_star:
                if _strict_leaf_ok(br, bw, star_ok, dom_fo):
                    return SystemState(br, bw, fo, fs, m)
            elif _star_leaf_ok(br, bw, star_ok):
                return SystemState(br, bw, fo, fs, m)


def _check_random(b, obligations, defs, samples, seed, strict_star) -> ObligationReport:
    u = _Universe(b)
    star_fn = strict_star_prop if strict_star else core.star_prop
    prop_fns = dict(PROPERTY_FUNCS)
    prop_fns[PROPERTY_STARPROP] = star_fn
    results = []
    for ob in obligations:
        rng = random.Random(f"{seed}:{ob.rule}:{ob.prop}")
        rd = defs[ob.rule]
        reqs = _requests_for_rule(ob.rule, u)
        prop_fn = prop_fns[ob.prop]
        witness = None
        checked = 0
        t0 = time.perf_counter()
        if reqs:
            for _ in range(samples):
                st = _random_state(rng, u, strict_star)
                req = reqs[rng.randrange(len(reqs))]
                checked += 1
                try:
                    out = apply_def(rd, st, req)
                    violated = out.after is not st and not prop_fn(out.after)
                except Exception as e:
                    raise RuntimeError(
                        f"internal evaluation failure on state={st!r}, "
                        f"request={req!r}"
                    ) from e
                if violated:
                    witness = Witness(st, req, out.after, ob.prop)
                    break
        elapsed = (time.perf_counter() - t0) * 1000.0
        if witness is not None:
            _validate_witness(witness, defs, strict_star)
        results.append(
            ObligationResult(
                rule=ob.rule,
                prop=ob.prop,
                status="pass" if witness is None else "fail",
                states_checked=checked,
                requests_checked=checked,
                elapsed_ms=elapsed,
                witness=witness,
            )
        )
    return ObligationReport(
        bounds=b, mode=MODE_RANDOM, results=tuple(results), samples=samples, seed=seed
    )


# --------------------------------------------------------------------------
# Partition analysis.

_COUPLED_TO_M = frozenset({"br", "bw"})
_WITNESS_CAP = 25


def _branching_components(clauses) -> frozenset[str]:
    reads = frozenset().union(
        *(c.reads for cl in clauses for c in (*cl.prefix, *((cl.negated,) if cl.negated else ())))
    ) if clauses else frozenset()
    if reads & _COUPLED_TO_M:
        reads = reads | {"m"}
    return reads


def check_partition(
    rule: str,
    variant: str = VARIANT_FIXED,
    b: Bounds = P0,
    witness_cap: int = _WITNESS_CAP,
) -> PartitionReport:
    """Evaluate every clause guard of a rule on every in-bounds input.

    Records the inputs matched by no clause (gaps) and by two or more
    clauses (overlaps), grouped into families: gaps by the guard-conjunct
    signature, overlaps by the clause pair.  Per family the first
    ``witness_cap`` inputs in canonical order are kept.

    State components no guard reads are held at their first enumeration
    option instead of being enumerated; guard values cannot depend on them
    (conjunct read-sets are declared and property-tested), so gap and
    overlap families over the reduced space are exactly those over the full
    space, and reported counts refer to the reduced space.

    Guards are boolean combinations of the rule's conjuncts, so their joint
    behaviour is tabulated once over all conjunct-value combinations.  When
    no combination at all yields a gap or an overlap, the per-input
    evaluation is skipped -- the all-clear verdict already holds for every
    input, realizable or not -- and only the input census is enumerated.
    A small-scope test pins this engine against a naive sweep that calls
    every guard on every input.
    """
    clauses = rule_clauses(rule, variant)
    u = _Universe(b)
    reqs = _requests_for_rule(rule, u)
    conjuncts = RULE_DEFS[rule].conjuncts
    branch = _branching_components(clauses)

    # Precompute, for every combination of conjunct truth values, which
    # clause guards fire: guard = all(prefix) and not negated.  The leaf
    # loop then reduces to bit twiddling; kept witnesses are re-validated
    # against the real guard callables below.
    idx = {c.name: i for i, c in enumerate(conjuncts)}
    n = len(conjuncts)
    verdicts = []
    for mask in range(1 << n):
        fired = []
        for cl in clauses:
            v = all(mask >> idx[c.name] & 1 for c in cl.prefix)
            if v and cl.negated is not None:
                v = not (mask >> idx[cl.negated.name] & 1)
            if v:
                fired.append(cl.name)
        if not fired:
            sig = tuple((c.name, bool(mask >> i & 1)) for i, c in enumerate(conjuncts))
            verdicts.append(("gap", sig))
        elif len(fired) > 1:
            verdicts.append(("overlap", tuple(itertools.combinations(fired, 2))))
        else:
            verdicts.append(None)

    subtree_cs = [(i, c.holds) for i, c in enumerate(conjuncts)
                  if c.reads <= _SUBTREE_COMPONENTS]
    leaf_cs = [(i, c.holds) for i, c in enumerate(conjuncts)
               if not (c.reads <= _SUBTREE_COMPONENTS)]

    fs_opts = u.fs_options if "fs" in branch else u.fs_options[:1]
    fo_opts = u.fo_options if "fo" in branch else u.fo_options[:1]
    m_opts = u.m_options if "m" in branch else u.m_options[:1]

    gap_fams: dict[tuple, list] = {}
    over_fams: dict[tuple[str, str], list] = {}
    leaves = 0
    interesting = any(v is not None for v in verdicts)
    t0 = time.perf_counter()

    for fs in fs_opts:
        for fo in fo_opts:
            for m, dom in m_opts:
                avail = tuple(p for p in u.pairs if p[1] in dom)
                br_subs = u.subsets_upto(avail, b.max_br) if "br" in branch else [()]
                bw_subs = u.subsets_upto(avail, b.max_bw) if "bw" in branch else [()]
                proto = SystemState((), (), fo, fs, m)
                partials = [
                    (req, sum(holds(proto, req) << i for i, holds in subtree_cs))
                    for req in reqs
                ]
                for br in br_subs:
                    for bw in bw_subs:
                        leaves += 1
                        if not interesting:
                            continue
                        st = SystemState(br, bw, fo, fs, m)
                        req = None
                        try:
                            for req, base in partials:
                                mask = base
                                for i, holds in leaf_cs:
                                    if holds(st, req):
                                        mask |= 1 << i
                                verdict = verdicts[mask]
                                if verdict is None:
                                    continue
                                kind, payload = verdict
                                if kind == "gap":
                                    _record(gap_fams, payload, st, req, witness_cap)
                                else:
                                    for pair in payload:
                                        _record(over_fams, pair, st, req, witness_cap)
                        except Exception as e:
                            raise RuntimeError(
                                f"internal evaluation failure on state={st!r}, "
                                f"request={req!r}"
                            ) from e
    elapsed = (time.perf_counter() - t0) * 1000.0

    gap_families = tuple(
        GapFamily(sig, count, tuple(wits))
        for sig, (count, wits) in sorted(gap_fams.items())
    )
    overlap_families = tuple(
        OverlapFamily(pair, count, tuple(wits))
        for pair, (count, wits) in sorted(over_fams.items())
    )
    report = PartitionReport(
        rule=rule,
        variant=variant,
        bounds=b,
        states_checked=leaves,
        requests_checked=leaves * len(reqs),
        elapsed_ms=elapsed,
        gap_families=gap_families,
        overlap_families=overlap_families,
    )
    _validate_partition_witnesses(report, clauses)
    return report


def _record(fams: dict, key, st, req, cap) -> None:
    slot = fams.get(key)
    if slot is None:
        fams[key] = [1, [PartitionWitness(st, req)]]
        return
    slot[0] += 1
    if len(slot[1]) < cap:
        slot[1].append(PartitionWitness(st, req))


def _validate_partition_witnesses(report: PartitionReport, clauses) -> None:
    """Re-run the actual guard callables on every kept witness."""
    for fam in report.gap_families:
        for w in fam.witnesses:
            if any(cl.guard(w.state, w.request) for cl in clauses):
                raise AssertionError(f"gap witness matches a clause: {w}")
    for fam in report.overlap_families:
        a, bname = fam.clause_pair
        by_name = {cl.name: cl for cl in clauses}
        for w in fam.witnesses:
            if not (by_name[a].guard(w.state, w.request)
                    and by_name[bname].guard(w.state, w.request)):
                raise AssertionError(f"overlap witness does not reproduce: {w}")
