"""The event loop: feed batches, take some steps, drain some output.

Each iteration extends the graph's exterior buffers with one delta per
input, runs an arbitrary (schedule-chosen, budget-capped) number of small
steps, and hands an arbitrary portion of the pending outputs to the
consumer. Determinism of the underlying graph makes the loop's observable
totals independent of batching, budgets and schedules, which the property
suite checks by re-chunking traces.

Drained portions recombine: folding value deltas of the drained pieces
(and the final remainder) over an empty accumulator rebuilds exactly the
stream the graph emitted.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    BatchShapeMismatch,
    FloError,
    InvalidChoice,
    PayloadShapeMismatch,
    StepBudgetExceeded,
    bottom,
    concat,
    language_of,
)
from .graph import (
    apply_outputs,
    enabled_steps,
    inputs,
    set_inputs,
    step_graph,
    typecheck,
)


SAFETY_CAP = 200_000


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class RoundRobin:
    pass


@dataclass(frozen=True)
class RandomSched:
    seed: int


@dataclass(frozen=True)
class Scripted:
    choices: tuple  # of StepChoice


@dataclass(frozen=True)
class Exhaustive:
    max_configs: int = 100_000


class _RoundRobinPicker:
    def __init__(self):
        self.counter = 0

    def pick(self, choices):
        c = choices[self.counter % len(choices)]
        self.counter += 1
        return c


class _RandomPicker:
    def __init__(self, seed):
        self.rng = random.Random(seed)

    def pick(self, choices):
        return choices[self.rng.randrange(len(choices))]


class _ScriptedPicker:
    def __init__(self, script):
        self.script = list(script)
        self.pos = 0

    def pick(self, choices):
        if self.pos >= len(self.script):
            return None
        c = self.script[self.pos]
        if c not in choices:
            raise InvalidChoice(f"scripted choice {c} is not enabled")
        self.pos += 1
        return c


def make_picker(sched):
    if isinstance(sched, RoundRobin):
        return _RoundRobinPicker()
    if isinstance(sched, RandomSched):
        return _RandomPicker(sched.seed)
    if isinstance(sched, Scripted):
        return _ScriptedPicker(sched.choices)
    raise FloError(f"schedule {sched!r} cannot drive a linear run")


# ---------------------------------------------------------------------------
# drain policies


@dataclass(frozen=True)
class DrainNone:
    pass


@dataclass(frozen=True)
class DrainAll:
    pass


@dataclass(frozen=True)
class DrainPrefix:
    n: int


@dataclass(frozen=True)
class DrainRandom:
    seed: int


def drain_value(value, policy, rng: Optional[random.Random]):
    """Split one pending output into (drained or None, remainder)."""
    lang = language_of(value)
    if isinstance(policy, DrainNone):
        return None, value
    if isinstance(policy, DrainAll):
        if getattr(lang, "whole_drain_requires_fixed", False) and not lang.is_fixed(value):
            return None, value
        return lang.split_all(value)
    if isinstance(policy, DrainPrefix):
        return lang.split_prefix(value, policy.n)
    if isinstance(policy, DrainRandom):
        portion_rng = rng if rng is not None else random.Random(policy.seed)
        size = lang.content_size(value)
        return lang.split_prefix(value, portion_rng.randint(0, size))
    raise FloError(f"unknown drain policy {policy!r}")


def recombine(total, piece):
    lang = language_of(total)
    custom = getattr(lang, "recombine", None)
    if custom is not None:
        return custom(total, piece)
    return concat(total, lang.value_delta(piece))


# ---------------------------------------------------------------------------
# the loop


@dataclass(frozen=True)
class LoopConfig:
    graph: object
    pending: tuple  # pending output collections, one per port


@dataclass(frozen=True)
class InputBatch:
    deltas: tuple  # one delta per graph input


@dataclass(frozen=True)
class TraceStep:
    batch: InputBatch
    steps: Optional[int] = None  # None means run to stuck
    drain: object = field(default_factory=DrainNone)


@dataclass
class RunResult:
    config: LoopConfig
    drained: list  # per iteration, tuple of (value or None)
    totals: tuple  # recombined totals including the final remainder
    log: list


def _run_steps(graph, outputs, picker, budget, log, iteration):
    steps = 0
    cap = SAFETY_CAP if budget is None else budget
    while steps < cap:
        choices = enabled_steps(graph)
        if not choices:
            return graph, outputs, steps
        choice = picker.pick(choices)
        if choice is None:
            return graph, outputs, steps
        graph, deltas, rules = step_graph(graph, choice)
        outputs = apply_outputs(outputs, deltas)
        if log is not None:
            log.append(
                {
                    "iter": iteration,
                    "path": "".join(choice.path),
                    "choice": choice.index,
                    "rules": list(rules),
                }
            )
        steps += 1
    if budget is None:
        raise StepBudgetExceeded(f"no stuck state within {SAFETY_CAP} steps")
    return graph, outputs, steps


def loop_iteration(
    cfg: LoopConfig,
    batch: InputBatch,
    picker,
    step_budget: Optional[int],
    drain: object,
    drain_rng: Optional[random.Random] = None,
    log: Optional[list] = None,
    iteration: int = 0,
):
    """One turn of the loop; returns the new config and the drained portions."""
    ins = inputs(cfg.graph)
    if len(batch.deltas) != len(ins):
        raise BatchShapeMismatch(f"{len(batch.deltas)} deltas for {len(ins)} inputs")
    try:
        fed = tuple(concat(b, d) for b, d in zip(ins, batch.deltas))
    except PayloadShapeMismatch as exc:
        raise BatchShapeMismatch(str(exc)) from exc
    graph = set_inputs(cfg.graph, fed)
    graph, outputs, _ = _run_steps(graph, cfg.pending, picker, step_budget, log, iteration)
    drained = []
    remaining = []
    for value in outputs:
        piece, rest = drain_value(value, drain, drain_rng)
        drained.append(piece)
        remaining.append(rest)
    return LoopConfig(graph, tuple(remaining)), tuple(drained)


def run_trace(graph, trace, sched=RoundRobin(), drain_seed: int = 0) -> RunResult:
    """Fold the loop over a trace of batches; every step lands in the log."""
    gt = typecheck(graph)
    picker = make_picker(sched)
    drain_rng = random.Random(drain_seed)
    cfg = LoopConfig(graph, tuple(bottom(st.collection) for st in gt.outputs))
    totals = tuple(bottom(st.collection) for st in gt.outputs)
    log: list = []
    drained_history = []
    for i, step in enumerate(trace):
        cfg, drained = loop_iteration(
            cfg, step.batch, picker, step.steps, step.drain, drain_rng, log, i
        )
        drained_history.append(drained)
        totals = tuple(
            recombine(t, piece) if piece is not None else t
            for t, piece in zip(totals, drained)
        )
    totals = tuple(recombine(t, rest) for t, rest in zip(totals, cfg.pending))
    return RunResult(config=cfg, drained=drained_history, totals=totals, log=log)
