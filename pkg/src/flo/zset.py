"""Z-sets: keyed integer cardinalities with retractions.

A z-set maps keys to nonzero integer cardinalities; negative entries are
retractions. Concatenation adds cardinalities keywise and canonicalizes
zero entries away, so structural equality is semantic equality. The
incremental operators distribute over that addition: map requires a
cardinality-linear function, and join exploits bilinearity of the keywise
product, storing consumed input on each side.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    ANY,
    Bound,
    CollectionLanguage,
    ElemType,
    OperatorDef,
    Payload,
    PayloadShapeMismatch,
    Rank,
    StepResult,
    StreamType,
    TERMINATOR,
    Tag,
    U,
    register_language,
    sort_key,
)
from . import catalog


@dataclass(frozen=True, slots=True)
class ZSetValue:
    cards: tuple  # sorted ((key, cardinality), ...) with no zero entries
    fixed: bool

    lang = "zset"

    def as_dict(self) -> dict:
        return dict(self.cards)

    def __repr__(self):
        inner = ",".join(f"{k!r}:{v}" for k, v in self.cards)
        return f"zset({{{inner}}}{',fixed' if self.fixed else ''})"


def zset(cards: dict, fixed: bool = False) -> ZSetValue:
    cleaned = {k: v for k, v in cards.items() if v != 0}
    ordered = tuple(sorted(cleaned.items(), key=lambda kv: sort_key(kv[0])))
    return ZSetValue(ordered, fixed)


def add_cards(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
    return {k: v for k, v in out.items() if v != 0}


def join_cards(a: dict, b: dict) -> dict:
    """Keywise cardinality product."""
    return {k: a[k] * b[k] for k in a.keys() & b.keys() if a[k] * b[k] != 0}


class ZSetLanguage(CollectionLanguage):
    name = "zset"

    def member(self, value, tag):
        if not isinstance(value, ZSetValue):
            return False
        key_type = tag.params[0]
        return all(key_type.matches(k) and v != 0 for k, v in value.cards)

    def concat(self, value, delta):
        if delta is TERMINATOR:
            return ZSetValue(value.cards, True)
        if isinstance(delta, Payload) and isinstance(delta.value, ZSetValue):
            d = delta.value
            return zset(add_cards(value.as_dict(), d.as_dict()), d.fixed)
        raise PayloadShapeMismatch(f"zset cannot absorb {delta!r}")

    def is_fixed(self, value):
        return value.fixed

    def fix(self, value):
        return ZSetValue(value.cards, True)

    def bottom(self, tag):
        return ZSetValue((), False)

    def bottom_like(self, value):
        return ZSetValue((), False)

    supports_take = True

    def take_content(self, value):
        if not value.cards:
            return None
        return Payload(ZSetValue(value.cards, False)), ZSetValue((), value.fixed)

    def content_size(self, value):
        return len(value.cards)

    def split_prefix(self, value, n):
        n = min(n, len(value.cards))
        if n == 0:
            return None, value
        drained = ZSetValue(value.cards[:n], False)
        return drained, ZSetValue(value.cards[n:], value.fixed)


ZSET = register_language(ZSetLanguage())


def zset_tag(key_type: ElemType = ANY) -> Tag:
    return Tag("zset", (key_type,))


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True, slots=True)
class DoneState:
    done: bool


_RUNNING = DoneState(False)
_DONE = DoneState(True)


def zset_map(fn, key_type: ElemType = ANY, bound: Bound = U) -> OperatorDef:
    """Keywise transform of cardinalities; linear in the cardinality.

    Consumes one key per step (canonically the smallest; all pending keys
    are exposed as choices to the exhaustive explorer), emitting that
    key's transformed contribution.
    """
    f = catalog.resolve(fn, arity=2)

    def step_key(inp, state, i):
        k, v = inp.cards[i]
        rest = ZSetValue(inp.cards[:i] + inp.cards[i + 1 :], inp.fixed)
        out = catalog.call(f, k, v)
        return StepResult((rest,), state, (Payload(zset({k: out})),), "map-zset")

    def steps(buffers, state, exhaustive):
        (inp,) = buffers
        if inp.cards:
            indices = range(len(inp.cards)) if exhaustive else (0,)
            return [step_key(inp, state, i) for i in indices]
        if inp.fixed and not state.done:
            return [StepResult(buffers, _DONE, (TERMINATOR,), "map-zset-terminated")]
        return []

    def rank(buffers, state):
        return Rank((len(buffers[0].cards) + (0 if state.done else 1),))

    return OperatorDef(
        name="zset_map",
        inputs=(StreamType(zset_tag(key_type), bound),),
        outputs=(StreamType(zset_tag(key_type), bound),),
        initial_state=_RUNNING,
        steps_fn=steps,
        rank_fn=rank,
        params={"fn": catalog.spec_of(f), "key": str(key_type), "bound": bound.value},
    )


@dataclass(frozen=True, slots=True)
class JoinState:
    seen_left: tuple  # accumulated consumed z-set, canonical card tuples
    seen_right: tuple
    done: bool


def zset_join(key_type: ElemType = ANY, bound: Bound = U) -> OperatorDef:
    """Incremental keywise-product join of two z-set streams.

    The canonical step drains both pending buffers at once, adds them to
    the stored sides, and emits the three cross terms. Under exhaustive
    exploration, single-key drains of either side are exposed as extra
    confluent choices (bilinearity makes every interleaving agree).
    """

    def drain(left, right, state, dl: dict, dr: dict, left_rest, right_rest):
        sl, sr = dict(state.seen_left), dict(state.seen_right)
        emitted = add_cards(
            add_cards(join_cards(sl, dr), join_cards(dl, sr)), join_cards(dl, dr)
        )
        new_state = JoinState(
            tuple(sorted(add_cards(sl, dl).items(), key=lambda kv: sort_key(kv[0]))),
            tuple(sorted(add_cards(sr, dr).items(), key=lambda kv: sort_key(kv[0]))),
            False,
        )
        return StepResult(
            (left_rest, right_rest),
            new_state,
            (Payload(zset(emitted)),),
            "join-zset",
        )

    def steps(buffers, state, exhaustive):
        left, right = buffers
        results = []
        if left.cards or right.cards:
            results.append(
                drain(
                    left,
                    right,
                    state,
                    left.as_dict(),
                    right.as_dict(),
                    ZSetValue((), left.fixed),
                    ZSetValue((), right.fixed),
                )
            )
            if exhaustive:
                for i in range(len(left.cards)):
                    k, v = left.cards[i]
                    rest = ZSetValue(left.cards[:i] + left.cards[i + 1 :], left.fixed)
                    results.append(drain(left, right, state, {k: v}, {}, rest, right))
                for i in range(len(right.cards)):
                    k, v = right.cards[i]
                    rest = ZSetValue(right.cards[:i] + right.cards[i + 1 :], right.fixed)
                    results.append(drain(left, right, state, {}, {k: v}, left, rest))
            return results
        if left.fixed and right.fixed and not state.done:
            return [
                StepResult(
                    buffers,
                    JoinState(state.seen_left, state.seen_right, True),
                    (TERMINATOR,),
                    "join-zset-terminated",
                )
            ]
        return []

    def rank(buffers, state):
        left, right = buffers
        return Rank((len(left.cards) + len(right.cards) + (0 if state.done else 1),))

    st = StreamType(zset_tag(key_type), bound)
    return OperatorDef(
        name="zset_join",
        inputs=(st, st),
        outputs=(st,),
        initial_state=JoinState((), (), False),
        steps_fn=steps,
        rank_fn=rank,
        params={"key": str(key_type), "bound": bound.value},
    )
