"""Executable Bell-LaPadula reference monitor, checker and scenario runner.

The package splits into five layers:

* :mod:`blpcheck.core` -- states, the security-class lattice and the six
  invariant predicates;
* :mod:`blpcheck.rules` -- the ten transition rules as guarded clause lists;
* :mod:`blpcheck.checker` -- bounded-exhaustive / seeded-random obligation
  checking and clause-partition analysis;
* :mod:`blpcheck.scenario` -- the ``.blp`` scenario language;
* :mod:`blpcheck.cli` -- the ``blpcheck`` command.
"""

from .core import (
    ACCESS_MODES,
    CTRL,
    MATRIX_MODES,
    NO,
    READ,
    WRITE,
    YES,
    SecurityClass,
    SystemState,
    class_leq,
    make_state,
    sec_class,
    sec_cond,
    star_prop,
    well_formed,
)
from .rules import (
    ChangeClass,
    CreateObject,
    DeleteObject,
    GetRead,
    GetWrite,
    GiveRW,
    NoApplicableClause,
    Outcome,
    ReleaseRead,
    ReleaseWrite,
    Request,
    RescindRead,
    RescindWrite,
    RULE_ORDER,
    VARIANT_FIXED,
    VARIANT_PAPER_FAITHFUL,
    apply_rule,
    change_class,
    create_object,
    delete_object,
    get_read,
    get_write,
    give_rw,
    release_access,
    rescind_access,
    rule_clauses,
    run_clauses,
)
from .checker import (
    Bounds,
    ObligationReport,
    P0,
    PartitionReport,
    check_obligations,
    check_partition,
    enumerate_requests,
    enumerate_states,
    strict_star_prop,
)
from .scenario import (
    ScenarioParseError,
    Script,
    StateBuildError,
    Trace,
    build_state,
    format_script,
    format_state,
    parse_scenario,
    run_scenario,
)
from .cli import format_report, main

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
