"""Ordered sequences and the classic stream operators over them.

Sequence values keep the newest element on the left; concatenation
prepends the payload's items and a terminated sequence absorbs every
delta. A payload is itself a sequence value, so a single delta can carry
items together with the terminator (which is how ``fold`` releases its
accumulator and end-of-stream in one step).

Also home to the natural-number singleton used to parameterize repeated
nesting, and to the generic pass-through operators (``tee``, ``last``,
``forward``) that work over any collection language with content
consumption.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import (
    ANY,
    B,
    EMPTY,
    TERMINATOR,
    Bound,
    CollectionLanguage,
    ElemType,
    FloError,
    NAT,
    OperatorDef,
    Payload,
    PayloadShapeMismatch,
    Push,
    Rank,
    StepResult,
    StreamType,
    Tag,
    U,
    register_language,
    language_of,
)
from . import catalog


# ---------------------------------------------------------------------------
# sequence values


@dataclass(frozen=True, slots=True)
class SeqValue:
    """Ordered sequence; ``items[0]`` is the newest element."""

    terminated: bool
    items: tuple

    lang = "seq"

    def __repr__(self):
        inner = ",".join(repr(i) for i in self.items)
        return f"[{'T,' if self.terminated else ''}{inner}]"


def seq(*items, terminated: bool = False) -> SeqValue:
    """Build a sequence from oldest-first arguments (reads like arrival order)."""
    return SeqValue(terminated, tuple(reversed(items)))


class SeqLanguage(CollectionLanguage):
    name = "seq"

    def member(self, value, tag):
        if not isinstance(value, SeqValue):
            return False
        elem = tag.params[0]
        return all(elem.matches(i) for i in value.items)

    def concat(self, value, delta):
        if delta is TERMINATOR:
            return SeqValue(True, value.items)
        if isinstance(delta, Payload) and isinstance(delta.value, SeqValue):
            d = delta.value
            return SeqValue(value.terminated or d.terminated, d.items + value.items)
        raise PayloadShapeMismatch(f"seq cannot absorb {delta!r}")

    def is_fixed(self, value):
        return value.terminated

    def fix(self, value):
        return SeqValue(True, value.items)

    def bottom(self, tag):
        return SeqValue(False, ())

    def bottom_like(self, value):
        return SeqValue(False, ())

    supports_take = True

    def take_content(self, value):
        if not value.items:
            return None
        return Payload(SeqValue(False, value.items)), SeqValue(value.terminated, ())

    def content_size(self, value):
        return len(value.items)

    def split_prefix(self, value, n):
        n = min(n, len(value.items))
        if n == 0:
            return None, value
        drained = SeqValue(False, value.items[-n:])
        return drained, SeqValue(value.terminated, value.items[:-n])


SEQ = register_language(SeqLanguage())


def seq_tag(elem: ElemType = ANY) -> Tag:
    return Tag("seq", (elem,))


# ---------------------------------------------------------------------------
# natural-number singleton


@dataclass(frozen=True, slots=True)
class SingletonNat:
    """Holds at most one natural, ever; a second distinct value is an error."""

    value: Optional[int]
    fixed: bool

    lang = "nat"


class NatLanguage(CollectionLanguage):
    name = "nat"

    def member(self, value, tag):
        return isinstance(value, SingletonNat) and (
            value.value is None or (isinstance(value.value, int) and value.value >= 0)
        )

    def concat(self, value, delta):
        if delta is TERMINATOR:
            return SingletonNat(value.value, True)
        if isinstance(delta, Payload) and isinstance(delta.value, SingletonNat):
            d = delta.value
            if d.value is not None and value.value is not None and d.value != value.value:
                raise PayloadShapeMismatch(
                    f"singleton already holds {value.value}, got {d.value}"
                )
            merged = value.value if value.value is not None else d.value
            return SingletonNat(merged, value.fixed or d.fixed)
        raise PayloadShapeMismatch(f"nat singleton cannot absorb {delta!r}")

    def is_fixed(self, value):
        return value.fixed

    def fix(self, value):
        return SingletonNat(value.value, True)

    def bottom(self, tag):
        return SingletonNat(None, False)

    def bottom_like(self, value):
        return SingletonNat(None, False)

    supports_take = True

    def take_content(self, value):
        if value.value is None:
            return None
        # Re-delivery downstream is idempotent: merging an equal value is
        # identity, so taking leaves the fixedness behind only.
        return (
            Payload(SingletonNat(value.value, False)),
            SingletonNat(None, value.fixed),
        )

    def content_size(self, value):
        return 0 if value.value is None else 1

    whole_drain_requires_fixed = True


NATLANG = register_language(NatLanguage())

NAT_TAG = Tag("nat")


# ---------------------------------------------------------------------------
# operator state records


@dataclass(frozen=True, slots=True)
class PhaseState:
    done: bool


@dataclass(frozen=True, slots=True)
class AccState:
    acc: object
    done: bool


@dataclass(frozen=True, slots=True)
class WindowState:
    buffer: tuple  # (value, timestamp) pairs, newest first
    done: bool


@dataclass(frozen=True, slots=True)
class LastState:
    latest: object
    done: bool


RUNNING = PhaseState(False)
FINISHED = PhaseState(True)


def _flag(done: bool) -> int:
    return 0 if done else 1


# ---------------------------------------------------------------------------
# map / filter / scan / fold


def seq_map(fn, elem_in: ElemType = ANY, elem_out: ElemType = ANY, bound: Bound = U) -> OperatorDef:
    """Element-wise transform; consumes the oldest element per step."""
    f = catalog.resolve(fn, arity=1)

    def steps(buffers, state, exhaustive):
        (inp,) = buffers
        if inp.items:
            out = catalog.call(f, inp.items[-1])
            return [
                StepResult(
                    (SeqValue(inp.terminated, inp.items[:-1]),),
                    state,
                    (Payload(SeqValue(False, (out,))),),
                    "map",
                )
            ]
        if inp.terminated and not state.done:
            return [StepResult(buffers, FINISHED, (TERMINATOR,), "map-terminator")]
        return []

    def rank(buffers, state):
        return Rank((len(buffers[0].items) + _flag(state.done),))

    return OperatorDef(
        name="map",
        inputs=(StreamType(seq_tag(elem_in), bound),),
        outputs=(StreamType(seq_tag(elem_out), bound),),
        initial_state=RUNNING,
        steps_fn=steps,
        rank_fn=rank,
        params={"fn": catalog.spec_of(f), "elem": str(elem_in), "elem_out": str(elem_out), "bound": bound.value},
    )


def seq_filter(pred, elem: ElemType = ANY, bound: Bound = U) -> OperatorDef:
    p = catalog.resolve(pred, arity=1)

    def steps(buffers, state, exhaustive):
        (inp,) = buffers
        if inp.items:
            x = inp.items[-1]
            keep = catalog.call(p, x)
            delta = Payload(SeqValue(False, (x,))) if keep else EMPTY
            return [
                StepResult((SeqValue(inp.terminated, inp.items[:-1]),), state, (delta,), "filter")
            ]
        if inp.terminated and not state.done:
            return [StepResult(buffers, FINISHED, (TERMINATOR,), "filter-terminator")]
        return []

    def rank(buffers, state):
        return Rank((len(buffers[0].items) + _flag(state.done),))

    return OperatorDef(
        name="filter",
        inputs=(StreamType(seq_tag(elem), bound),),
        outputs=(StreamType(seq_tag(elem), bound),),
        initial_state=RUNNING,
        steps_fn=steps,
        rank_fn=rank,
        params={"fn": catalog.spec_of(p), "elem": str(elem), "bound": bound.value},
    )


def scan(init, fn, elem_in: ElemType = ANY, elem_out: ElemType = ANY, bound: Bound = U) -> OperatorDef:
    """Running aggregation: emits each new accumulator, forwards the terminator.

    The terminator step does not re-emit the accumulator, so a scan
    followed by last over a bounded stream agrees with fold.
    """
    f = catalog.resolve(fn, arity=2)

    def steps(buffers, state, exhaustive):
        (inp,) = buffers
        if inp.items:
            acc = catalog.call(f, state.acc, inp.items[-1])
            return [
                StepResult(
                    (SeqValue(inp.terminated, inp.items[:-1]),),
                    AccState(acc, False),
                    (Payload(SeqValue(False, (acc,))),),
                    "scan",
                )
            ]
        if inp.terminated and not state.done:
            return [
                StepResult(buffers, AccState(state.acc, True), (TERMINATOR,), "scan-terminator")
            ]
        return []

    def rank(buffers, state):
        return Rank((len(buffers[0].items) + _flag(state.done),))

    return OperatorDef(
        name="scan",
        inputs=(StreamType(seq_tag(elem_in), bound),),
        outputs=(StreamType(seq_tag(elem_out), bound),),
        initial_state=AccState(init, False),
        steps_fn=steps,
        rank_fn=rank,
        params={"init": init, "fn": catalog.spec_of(f), "elem": str(elem_in), "elem_out": str(elem_out), "bound": bound.value},
    )


def fold(init, fn, elem_in: ElemType = ANY, elem_out: ElemType = ANY, *, _bound: Bound = B) -> OperatorDef:
    """Aggregate a bounded stream; releases the result only at end of stream.

    Typed bounded-in, bounded-out: on an unbounded input it would withhold
    output forever, which the typechecker rejects upstream.
    """
    f = catalog.resolve(fn, arity=2)

    def steps(buffers, state, exhaustive):
        (inp,) = buffers
        if inp.items:
            acc = catalog.call(f, state.acc, inp.items[-1])
            return [
                StepResult(
                    (SeqValue(inp.terminated, inp.items[:-1]),),
                    AccState(acc, False),
                    (EMPTY,),
                    "fold",
                )
            ]
        if inp.terminated and not state.done:
            return [
                StepResult(
                    buffers,
                    AccState(state.acc, True),
                    (Payload(SeqValue(True, (state.acc,))),),
                    "fold-terminator",
                )
            ]
        return []

    def rank(buffers, state):
        return Rank((len(buffers[0].items) + _flag(state.done),))

    return OperatorDef(
        name="fold",
        inputs=(StreamType(seq_tag(elem_in), _bound),),
        outputs=(StreamType(seq_tag(elem_out), _bound),),
        initial_state=AccState(init, False),
        steps_fn=steps,
        rank_fn=rank,
        params={"init": init, "fn": catalog.spec_of(f), "elem": str(elem_in), "elem_out": str(elem_out)},
        rank_arity=1,
    )


# ---------------------------------------------------------------------------
# window


def window(interval: int, elem: ElemType = ANY, bound: Bound = U) -> OperatorDef:
    """Group (value, timestamp) pairs into bounded inner streams.

    Buffers while the incoming timestamp stays within ``interval`` of the
    oldest buffered one; a farther timestamp closes the window, emitting
    it as an already-terminated inner sequence, and starts a new buffer
    with the incoming pair. End of input flushes the partial window and
    then terminates the outer stream. Timestamps are expected to be
    non-decreasing in arrival order; late timestamps are accepted but only
    a far-enough one closes a window.
    """
    from .nested import nested_tag  # local import: nested depends on graph

    inner = StreamType(seq_tag(elem), B)
    out_tag = nested_tag((inner,))

    def steps(buffers, state, exhaustive):
        (inp,) = buffers
        if inp.items:
            v, t = inp.items[-1]
            rest = SeqValue(inp.terminated, inp.items[:-1])
            if not state.buffer:
                return [StepResult((rest,), WindowState(((v, t),), False), (EMPTY,), "window-first")]
            oldest_ts = state.buffer[-1][1]
            if t - oldest_ts <= interval:
                return [
                    StepResult(
                        (rest,),
                        WindowState(((v, t),) + state.buffer, False),
                        (EMPTY,),
                        "window",
                    )
                ]
            closed = SeqValue(True, tuple(w for w, _ in state.buffer))
            return [
                StepResult(
                    (rest,),
                    WindowState(((v, t),), False),
                    (Push((closed,)),),
                    "window-emit",
                )
            ]
        if inp.terminated and state.buffer:
            closed = SeqValue(True, tuple(w for w, _ in state.buffer))
            return [StepResult(buffers, WindowState((), False), (Push((closed,)),), "window-flush")]
        if inp.terminated and not state.done:
            return [StepResult(buffers, WindowState((), True), (TERMINATOR,), "window-terminator")]
        return []

    def rank(buffers, state):
        return Rank(
            (
                len(buffers[0].items) + _flag(state.done),
                1 if state.buffer else 0,
            )
        )

    return OperatorDef(
        name="window",
        inputs=(StreamType(seq_tag(ElemType("pair", (elem, NAT))), bound),),
        outputs=(StreamType(out_tag, bound),),
        initial_state=WindowState((), False),
        steps_fn=steps,
        rank_fn=rank,
        params={"interval": interval, "elem": str(elem), "bound": bound.value},
        rank_arity=2,
    )


# ---------------------------------------------------------------------------
# generic pass-through operators: tee, forward, last
#
# These work over any collection language that supports content
# consumption (sequences, sets, z-sets, nat singletons). They drain the
# buffer's content as a delta, then forward the terminator once the input
# is fixed.


def _require_take(tag: Tag, opname: str):
    from .core import LANGUAGES

    lang = LANGUAGES[tag.language]
    if not lang.supports_take:
        raise FloError(f"{opname} does not support {tag.language} inputs")
    return lang


def tee(tag: Tag, bound: Bound = U) -> OperatorDef:
    """Duplicate a stream onto two outputs."""
    lang = _require_take(tag, "tee")

    def steps(buffers, state, exhaustive):
        (inp,) = buffers
        taken = lang.take_content(inp)
        if taken is not None:
            delta, residue = taken
            return [StepResult((residue,), state, (delta, delta), "tee")]
        if lang.is_fixed(inp) and not state.done:
            return [StepResult(buffers, FINISHED, (TERMINATOR, TERMINATOR), "tee-terminator")]
        return []

    def rank(buffers, state):
        return Rank((lang.content_size(buffers[0]) + _flag(state.done),))

    st = StreamType(tag, bound)
    return OperatorDef(
        name="tee",
        inputs=(st,),
        outputs=(st, st),
        initial_state=RUNNING,
        steps_fn=steps,
        rank_fn=rank,
        params={"tag": str(tag), "bound": bound.value},
    )


def forward(tag: Tag, bound: Bound = U) -> OperatorDef:
    """Identity pass-through; wiring glue for parallel compositions."""
    lang = _require_take(tag, "forward")

    def steps(buffers, state, exhaustive):
        (inp,) = buffers
        taken = lang.take_content(inp)
        if taken is not None:
            delta, residue = taken
            return [StepResult((residue,), state, (delta,), "forward")]
        if lang.is_fixed(inp) and not state.done:
            return [StepResult(buffers, FINISHED, (TERMINATOR,), "forward-terminator")]
        return []

    def rank(buffers, state):
        return Rank((lang.content_size(buffers[0]) + _flag(state.done),))

    st = StreamType(tag, bound)
    return OperatorDef(
        name="forward",
        inputs=(st,),
        outputs=(st,),
        initial_state=RUNNING,
        steps_fn=steps,
        rank_fn=rank,
        params={"tag": str(tag), "bound": bound.value},
    )


def last(tag: Tag, *, _bound: Bound = B) -> OperatorDef:
    """Extract the final value of a bounded stream.

    Sequence inputs yield the last element (or just the terminator when
    empty); set inputs yield the accumulated set; nested inputs with a
    single inner component yield the newest inner collection. Emission
    happens once, as a single already-fixed delta, when the input fixes.
    """
    language = tag.language
    if language == "seq":

        def observe(state, inp):
            if inp.items:
                return LastState(inp.items[0], False), SeqValue(inp.terminated, ())
            return None

        def emit_value(state):
            items = () if state.latest is _NOTHING else (state.latest,)
            return Payload(SeqValue(True, items))

        def pending(inp):
            return len(inp.items)

        def done_input(inp):
            return inp.terminated

    elif language == "set":
        from .sets import SetValue

        def observe(state, inp):
            if inp.elems:
                acc = state.latest if state.latest is not _NOTHING else frozenset()
                return LastState(acc | inp.elems, False), SetValue(frozenset(), inp.fixed)
            return None

        def emit_value(state):
            from .sets import SetValue as SV

            elems = frozenset() if state.latest is _NOTHING else state.latest
            return Payload(SV(elems, True))

        def pending(inp):
            return len(inp.elems)

        def done_input(inp):
            return inp.fixed

    elif language == "nested":
        from .nested import NestedSeqValue

        if len(tag.params) != 1:
            raise FloError("last over nested streams requires a single inner component")
        inner_type = tag.params[0]

        def observe(state, inp):
            if len(inp.tuples) >= 2 or (inp.terminated and inp.tuples):
                popped = inp.tuples[-1][0]
                return (
                    LastState(popped, False),
                    NestedSeqValue(inp.terminated, inp.tuples[:-1], inp.inner_types),
                )
            return None

        def emit_value(state):
            v = state.latest
            if v is _NOTHING:
                v = bottom_of(inner_type.collection)
            return Payload(_as_fixed(v))

        def pending(inp):
            return len(inp.tuples)

        def done_input(inp):
            return inp.terminated

    else:
        raise FloError(f"last does not support {language} inputs")

    def steps(buffers, state, exhaustive):
        (inp,) = buffers
        seen = observe(state, inp)
        if seen is not None:
            new_state, residue = seen
            return [StepResult((residue,), new_state, (EMPTY,), "last")]
        if done_input(inp) and not state.done:
            return [
                StepResult(buffers, LastState(state.latest, True), (emit_value(state),), "last-emit")
            ]
        return []

    def rank(buffers, state):
        return Rank((pending(buffers[0]) + _flag(state.done),))

    if language == "nested":
        out = tag.params[0]
        out = StreamType(out.collection, _bound)
    else:
        out = StreamType(tag, _bound)
    return OperatorDef(
        name="last",
        inputs=(StreamType(tag, _bound),),
        outputs=(out,),
        initial_state=LastState(_NOTHING, False),
        steps_fn=steps,
        rank_fn=rank,
        params={"tag": str(tag)},
    )


class _Nothing:
    __slots__ = ()

    def __repr__(self):
        return "<nothing>"


_NOTHING = _Nothing()


def bottom_of(tag: Tag):
    from .core import bottom

    return bottom(tag)


def _as_fixed(value):
    return language_of(value).fix(value)

