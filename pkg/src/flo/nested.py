"""Nested streams: ordered sequences of inner-collection tuples.

A nested value is a list of tuples of inner collections, newest tuple on
the left. Only the newest tuple may still grow; pushing a new tuple
requires every bounded component of the previously-newest one to be
fixed, and terminating the outer stream requires the same of the newest
tuple. That invariant is what lets an inner graph trust that a non-newest
tuple will never change under it.

The nest operator runs an inner graph over the tuples one at a time,
oldest first. Deferred state crosses iterations through write_defer and
read_defer pairs: when an iteration finishes (inner graph stuck, outputs
and deferred writes fixed), nest rebuilds the next iteration's graph from
the original, seeding each read_defer with the matching write_defer's
accumulated buffer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import (
    B,
    Bound,
    BoundednessInvariantViolation,
    CollectionLanguage,
    DeferContextMismatch,
    DeferKeyUnbound,
    DuplicateKey,
    EMPTY,
    Extend,
    GraphTypeError,
    MissingKey,
    NestOutputUnbounded,
    OperatorDef,
    Payload,
    PayloadShapeMismatch,
    Push,
    Rank,
    StepResult,
    StreamType,
    TERMINATOR,
    Tag,
    U,
    bottom,
    concat,
    is_fixed,
    member,
    register_language,
)
from .graph import (
    DeferContexts,
    Node,
    Par,
    Seq,
    enabled_steps,
    graph_rank,
    inputs,
    set_inputs,
    step_first,
    step_graph,
    typecheck,
)


# ---------------------------------------------------------------------------
# values


@dataclass(frozen=True, slots=True)
class NestedSeqValue:
    terminated: bool
    tuples: tuple  # tuples of inner collection values, newest first
    inner_types: tuple  # tuple[StreamType, ...]

    lang = "nested"


def _check_frozen(tup, inner_types, what):
    for c, st in zip(tup, inner_types):
        if st.bound is B and not is_fixed(c):
            raise BoundednessInvariantViolation(
                f"{what} would strand an unfixed bounded component"
            )


class NestedLanguage(CollectionLanguage):
    name = "nested"

    def member(self, value, tag):
        if not isinstance(value, NestedSeqValue) or value.inner_types != tag.params:
            return False
        for i, tup in enumerate(value.tuples):
            if len(tup) != len(value.inner_types):
                return False
            for c, st in zip(tup, value.inner_types):
                if not member(c, st.collection):
                    return False
                if (i > 0 or value.terminated) and st.bound is B and not is_fixed(c):
                    return False
        return True

    def concat(self, value, delta):
        if delta is TERMINATOR:
            if value.tuples:
                _check_frozen(value.tuples[0], value.inner_types, "terminating")
            return NestedSeqValue(True, value.tuples, value.inner_types)
        if isinstance(delta, Push):
            if len(delta.values) != len(value.inner_types):
                raise PayloadShapeMismatch("pushed tuple arity mismatch")
            for c, st in zip(delta.values, value.inner_types):
                if not member(c, st.collection):
                    raise PayloadShapeMismatch(f"pushed component is not a {st.collection}")
            if value.tuples:
                _check_frozen(value.tuples[0], value.inner_types, "pushing over")
            return NestedSeqValue(False, (tuple(delta.values),) + value.tuples, value.inner_types)
        if isinstance(delta, Extend):
            if len(delta.parts) != len(value.inner_types):
                raise PayloadShapeMismatch("extend arity mismatch")
            if not value.tuples:
                if all(d is EMPTY for d in delta.parts):
                    return value
                raise PayloadShapeMismatch("extend on an empty nested stream")
            newest = tuple(concat(c, d) for c, d in zip(value.tuples[0], delta.parts))
            return NestedSeqValue(False, (newest,) + value.tuples[1:], value.inner_types)
        if isinstance(delta, Payload) and isinstance(delta.value, NestedSeqValue):
            # Whole-value embedding; only meaningful on an empty stream.
            if delta.value.inner_types != value.inner_types:
                raise PayloadShapeMismatch("embedded nested value has different inner types")
            if value.tuples:
                raise PayloadShapeMismatch("cannot embed into a non-empty nested stream")
            return delta.value
        raise PayloadShapeMismatch(f"nested stream cannot absorb {delta!r}")

    def is_fixed(self, value):
        return value.terminated

    def fix(self, value):
        from .core import fix as fix_inner

        if not value.tuples:
            return NestedSeqValue(True, (), value.inner_types)
        newest = tuple(
            (fix_inner(c) if st.bound is B else c)
            for c, st in zip(value.tuples[0], value.inner_types)
        )
        return NestedSeqValue(True, (newest,) + value.tuples[1:], value.inner_types)

    def bottom(self, tag):
        return NestedSeqValue(False, (), tag.params)

    def bottom_like(self, value):
        return NestedSeqValue(False, (), value.inner_types)

    def content_size(self, value):
        return len(value.tuples)

    def split_prefix(self, value, n):
        drainable = len(value.tuples) - (0 if value.terminated else 1)
        n = min(n, max(drainable, 0))
        if n <= 0:
            return None, value
        drained = NestedSeqValue(False, value.tuples[-n:], value.inner_types)
        rest = NestedSeqValue(value.terminated, value.tuples[:-n], value.inner_types)
        return drained, rest

    def recombine(self, total, piece):
        for tup in reversed(piece.tuples):
            total = concat(total, Push(tup))
        if piece.terminated:
            total = concat(total, TERMINATOR)
        return total


NESTED = register_language(NestedLanguage())


def nested_tag(inner_types: tuple) -> Tag:
    return Tag("nested", tuple(inner_types))


# ---------------------------------------------------------------------------
# defer operators


@dataclass(frozen=True, slots=True)
class ReadDeferState:
    pending: Optional[object]


def read_defer(key: str, tag: Tag, init=None) -> OperatorDef:
    """Source that emits its pending collection once, then goes quiet.

    The pending value (an initial parameter, or whatever the matching
    write_defer accumulated last iteration) must be fixed before it can be
    observed.
    """
    if init is not None and not is_fixed(init):
        raise GraphTypeError(f"read_defer({key!r}) initial value must be fixed")

    def steps(buffers, state, exhaustive):
        if state.pending is None:
            return []
        from .core import language_of

        delta = language_of(state.pending).value_delta(state.pending)
        return [StepResult(buffers, ReadDeferState(None), (delta,), "read-defer-emit")]

    def rank(buffers, state):
        return Rank((0 if state.pending is None else 1,))

    return OperatorDef(
        name="read_defer",
        inputs=(),
        outputs=(StreamType(tag, B),),
        initial_state=ReadDeferState(init),
        steps_fn=steps,
        rank_fn=rank,
        defer_reads=((key, tag),),
        params={"key": key, "tag": str(tag)},
    )


def write_defer(key: str, tag: Tag) -> OperatorDef:
    """Sink that only accumulates its buffer; nest harvests it between iterations."""

    def steps(buffers, state, exhaustive):
        return []

    def rank(buffers, state):
        return Rank((0,))

    return OperatorDef(
        name="write_defer",
        inputs=(StreamType(tag, B),),
        outputs=(),
        initial_state=None,
        steps_fn=steps,
        rank_fn=rank,
        defer_writes=((key, tag),),
        params={"key": key, "tag": str(tag)},
    )


def collect_defer(e) -> dict:
    """Map each write_defer key to its accumulated buffer."""
    out: dict = {}

    def walk(g):
        if isinstance(g, Node):
            for key, _tag in g.op.defer_writes:
                if key in out:
                    raise DuplicateKey(f"write_defer key {key!r} appears twice")
                out[key] = g.buffers[0]
        else:
            walk(g.left)
            walk(g.right)

    walk(e)
    return out


def set_defer(e, values: dict):
    """Fresh copy of a graph with every read_defer's pending value replaced."""
    if isinstance(e, Node):
        if e.op.defer_reads:
            key = e.op.defer_reads[0][0]
            if key not in values:
                raise MissingKey(f"no deferred value for read_defer key {key!r}")
            return Node(e.buffers, e.op, ReadDeferState(values[key]))
        return e
    if isinstance(e, Seq):
        return Seq(set_defer(e.left, values), set_defer(e.right, values))
    return Par(set_defer(e.left, values), set_defer(e.right, values))


def _collect_declared(e, reads: dict, writes: dict):
    if isinstance(e, Node):
        for key, tag in e.op.defer_reads:
            if key in reads and reads[key] != tag:
                raise DeferContextMismatch(f"read_defer key {key!r} used at two types")
            reads[key] = tag
        for key, tag in e.op.defer_writes:
            writes[key] = tag
    else:
        _collect_declared(e.left, reads, writes)
        _collect_declared(e.right, reads, writes)


# ---------------------------------------------------------------------------
# nest


BEFORE, RUNNING_PHASE, DONE_PHASE = 0, 1, 2


@dataclass(frozen=True, slots=True)
class NestState:
    phase: int
    current: object  # GraphExpr of the in-flight iteration
    iter_outputs: tuple  # outputs accumulated by the current iteration


def make_nest(g, g_o=None, outer_bound: Bound = U, params: Optional[dict] = None) -> OperatorDef:
    """Build the nest operator for an inner graph.

    The inner graph must typecheck under matching read and write defer
    contexts (every key read is written, at the same collection type,
    exactly once) and every inner output must be bounded, so each
    iteration finishes and its outputs can be frozen into the outer
    stream. The optional ``g_o`` is the template rebuilt for later
    iterations; it defaults to ``g`` itself and must have the same type.
    """
    reads: dict = {}
    writes: dict = {}
    _collect_declared(g, reads, writes)
    for key, tag in reads.items():
        if key not in writes:
            raise DeferKeyUnbound(f"read_defer key {key!r} has no matching write_defer")
        if writes[key] != tag:
            raise DeferContextMismatch(
                f"defer key {key!r} written at {writes[key]} but read at {tag}"
            )
    ctx = DeferContexts(reads=tuple(sorted(writes.items())), writes=tuple(sorted(writes.items())))
    gt = typecheck(g, ctx)
    for st in gt.outputs:
        if st.bound is not B:
            raise NestOutputUnbounded(f"inner output {st} must be bounded")
    original = g_o if g_o is not None else g
    if g_o is not None:
        gt_o = typecheck(g_o, ctx)
        if gt_o != gt:
            raise DeferContextMismatch("iteration template has a different graph type")

    in_tag = nested_tag(gt.inputs)
    out_tag = nested_tag(gt.outputs)
    bottoms = tuple(bottom(st.collection) for st in gt.outputs)
    g_rank_arity = len(graph_rank(g).components)

    def steps(buffers, state, exhaustive):
        (v,) = buffers
        if state.phase == DONE_PHASE:
            return []
        if state.phase == BEFORE:
            if v.tuples:
                running = NestState(RUNNING_PHASE, g, bottoms)
                return [StepResult(buffers, running, (Push(bottoms),), "nest-first")]
            if v.terminated:
                done = NestState(DONE_PHASE, g, ())
                return [StepResult(buffers, done, (TERMINATOR,), "nest-first-fixed")]
            return []
        if not v.tuples:
            return []
        oldest = v.tuples[-1]
        synced = set_inputs(state.current, oldest)

        def run_graph(stepped, deltas):
            consumed = inputs(stepped)
            v2 = NestedSeqValue(v.terminated, v.tuples[:-1] + (consumed,), v.inner_types)
            outs = tuple(concat(o, d) for o, d in zip(state.iter_outputs, deltas))
            outer = EMPTY if all(d is EMPTY for d in deltas) else Extend(deltas)
            return StepResult(
                (v2,), NestState(RUNNING_PHASE, stepped, outs), (outer,), "nest-run-graph"
            )

        if exhaustive:
            results = [
                run_graph(*step_graph(synced, ch, True)[:2])
                for ch in enabled_steps(synced, True)
            ]
        else:
            hit = step_first(synced)
            results = [] if hit is None else [run_graph(hit[0], hit[1])]
        if results:
            return results

        # inner graph stuck on this tuple
        if not all(is_fixed(o) for o in state.iter_outputs):
            return []
        if len(v.tuples) >= 2:
            harvested = collect_defer(synced)
            if not all(is_fixed(x) for x in harvested.values()):
                return []
            nxt = set_defer(original, harvested)
            v2 = NestedSeqValue(v.terminated, v.tuples[:-1], v.inner_types)
            return [
                StepResult(
                    (v2,),
                    NestState(RUNNING_PHASE, nxt, bottoms),
                    (Push(bottoms),),
                    "nest-run-step",
                )
            ]
        if v.terminated:
            # Final iteration: leftover deferred writes are discarded.
            v2 = NestedSeqValue(True, (), v.inner_types)
            return [
                StepResult((v2,), NestState(DONE_PHASE, original, ()), (TERMINATOR,), "nest-run-fixed")
            ]
        return []

    def rank(buffers, state):
        (v,) = buffers
        head = [
            len(v.tuples) + (0 if state.phase == DONE_PHASE else 1),
            1 if state.phase == BEFORE else 0,
        ]
        if state.phase == RUNNING_PHASE and v.tuples:
            synced = set_inputs(state.current, v.tuples[-1])
        else:
            synced = state.current
        return Rank(tuple(head) + graph_rank(synced).components)

    return OperatorDef(
        name="nest",
        inputs=(StreamType(in_tag, outer_bound),),
        outputs=(StreamType(out_tag, outer_bound),),
        initial_state=NestState(BEFORE, g, ()),
        steps_fn=steps,
        rank_fn=rank,
        params=params or {"bound": outer_bound.value},
        rank_arity=2 + g_rank_arity,
    )
