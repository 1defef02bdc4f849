"""Finite, exhaustively checkable models of guarded recursion."""
from .clocks import ClockContext, CoStream, co_head, co_tail, co_take, force, forall_k, later_k, next_k
from .frames import BasedFrame, FiniteFrame, check_loeb, downset_frame, later_prop, loop_frame
from .order import (
    FinitePoset,
    FinitePreorder,
    WfRelation,
    accessible_set,
    check_global_adequacy,
    is_compatible_wf,
    is_connected,
    poset_reflection,
)
from .theories import GeometricTheory, bag_theory, enumerate_models, filt_theory, filters_oracle, ibag_theory
from .trees import GlobalElement, GuardedStream, StagedMap, StagedSet, check_fix_unique, gfix, later, next_map
from .wtypes import Polynomial, build_wtrees, plump_order, plump_poset

__version__ = "0.1.0"
