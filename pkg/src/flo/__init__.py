"""Boundedness-typed streaming dataflow kernel with checkable guarantees.

Importing the package registers the collection languages (ordered
sequences, lattice variables, z-sets, finite sets, nat singletons, nested
streams) and the named operator catalog.
"""

from .core import (
    ANY,
    B,
    Bound,
    EMPTY,
    ElemType,
    Extend,
    FloError,
    INT,
    NAT,
    OperatorDef,
    Payload,
    Push,
    Rank,
    StreamType,
    TERMINATOR,
    Tag,
    U,
    bottom,
    concat,
    fix,
    is_fixed,
    member,
    step_operator,
    subtype,
)
from .graph import (
    GraphType,
    Node,
    Par,
    Seq,
    StepChoice,
    enabled_steps,
    explore_all,
    inputs,
    node,
    par,
    run_to_stuck,
    seq_chain,
    set_inputs,
    step_graph,
    typecheck,
)
from . import catalog, gen, harness, jsonio, lvar, nested, opcatalog, programs, scheduler, seq, sets, zset

__all__ = [
    "ANY",
    "B",
    "Bound",
    "EMPTY",
    "ElemType",
    "Extend",
    "FloError",
    "INT",
    "NAT",
    "OperatorDef",
    "Payload",
    "Push",
    "Rank",
    "StreamType",
    "TERMINATOR",
    "Tag",
    "U",
    "bottom",
    "concat",
    "fix",
    "is_fixed",
    "member",
    "step_operator",
    "subtype",
    "GraphType",
    "Node",
    "Par",
    "Seq",
    "StepChoice",
    "enabled_steps",
    "explore_all",
    "inputs",
    "node",
    "par",
    "run_to_stuck",
    "seq_chain",
    "set_inputs",
    "step_graph",
    "typecheck",
]
