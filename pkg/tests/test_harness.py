"""The property checkers themselves: positive runs, fixtures, exploration."""

import random

import pytest

from flo.core import EMPTY, INT, Payload, TERMINATOR
from flo.gen import gen_value
from flo.graph import Par, explore_all, node, set_inputs
from flo.harness import (
    OpCase,
    check_determinism,
    check_eager,
    check_event_loop_equivalence,
    check_progress,
    check_rank_and_preservation,
)
from flo.opcatalog import REGISTRY, cases_for
from flo.programs import five_node_graph, fold_pipeline
from flo.scheduler import DrainAll, DrainNone, InputBatch, TraceStep
from flo.seq import SeqValue, seq, seq_map


def entry_cases(name, kind, n, seed=7):
    e = REGISTRY[name]
    op = e.op_progress if kind == "progress" else e.op_eager
    return op, cases_for(e, kind, n, seed)


def test_scan_passes_eager():
    op, cases = entry_cases("scan", "eager", 150)
    assert check_eager(op, cases).passed


def test_scan_eager_spec_example():
    op = REGISTRY["scan"].op_eager
    case = OpCase(buffers=(seq(1),), delta=(Payload(seq(2)),))
    assert check_eager(op, [case]).passed


def test_empty_delta_always_passes():
    op = REGISTRY["scan"].op_eager
    case = OpCase(buffers=(seq(1, 2),), delta=(EMPTY,))
    assert check_eager(op, [case]).passed


def test_naive_to_sequence_fails_eager_with_counterexample():
    op, cases = entry_cases("to_sequence_naive", "eager", 400)
    report = check_eager(op, cases)
    assert not report.passed
    assert report.counterexample is not None
    case = report.counterexample["case"]
    # the recorded case replays to the same verdict
    assert not check_eager(op, [case]).passed


def test_progress_fold_unbounded_fails():
    op, cases = entry_cases("fold_unbounded", "progress", 200)
    report = check_progress(op, cases)
    assert not report.passed
    assert report.details["reason"] == "outputs not maximal"


def test_progress_guarded_to_sequence_passes_at_bounded():
    op, cases = entry_cases("to_sequence", "progress", 200)
    assert check_progress(op, cases).passed


def test_rank_fixture_fails():
    op, cases = entry_cases("constant_rank", "rank", 5)
    report = check_rank_and_preservation(op, cases)
    assert not report.passed


def test_single_operator_graph_deterministic():
    op = REGISTRY["zset_map"].op_eager
    rng = random.Random(3)
    ins = tuple(gen_value(st.collection, rng) for st in op.inputs)
    report = check_determinism(node(op), ins, mode="exhaustive")
    assert report.passed


def test_five_node_graph_exhaustive_determinism():
    g = five_node_graph()
    ins = (seq(1, 2), seq(3, 4))
    report = check_determinism(g, ins, mode="exhaustive", max_configs=100_000)
    assert report.passed
    assert report.details["configs"] > 1


def test_coin_fails_determinism_with_two_schedules():
    op = REGISTRY["coin"].op_eager
    report = check_determinism(node(op), (seq(1),), mode="exhaustive")
    assert not report.passed
    cx = report.counterexample
    assert cx["schedule_a"] != cx["schedule_b"]
    assert cx["stuck_a"] != cx["stuck_b"]


def test_exploration_cap_downgrades_to_sampling():
    g = five_node_graph()
    ins = (seq(1, 2, 3), seq(1, 2, 3))
    report = check_determinism(g, ins, mode="exhaustive", max_configs=50, samples=10)
    assert report.passed
    assert "warning" in report.details


def test_explore_counts_configurations():
    g = Par(node(seq_map("inc", INT, INT)), node(seq_map("inc", INT, INT)))
    g = set_inputs(g, (seq(1), seq(2)))
    res = explore_all(g, (SeqValue(False, ()), SeqValue(False, ())))
    assert len(dict.fromkeys(res.stuck)) == 1
    assert res.visited >= 4


def payload(*items, term=False):
    return Payload(SeqValue(term, tuple(reversed(items))))


def test_event_loop_equivalence_fold():
    variants = [
        [
            TraceStep(InputBatch((payload(1, 2),)), None, DrainNone()),
            TraceStep(InputBatch((payload(3, term=True),)), None, DrainAll()),
        ],
        [
            TraceStep(InputBatch((payload(1),)), 2, DrainNone()),
            TraceStep(InputBatch((payload(2, 3, term=True),)), None, DrainAll()),
        ],
        [TraceStep(InputBatch((payload(1, 2, 3, term=True),)), None, DrainAll())],
    ]
    report = check_event_loop_equivalence(fold_pipeline(), variants)
    assert report.passed


def test_event_loop_equivalence_catches_drift():
    # Different totals across variants must be reported.
    variants = [
        [TraceStep(InputBatch((payload(1, 2, term=True),)), None, DrainAll())],
        [TraceStep(InputBatch((payload(1, term=True),)), None, DrainAll())],
    ]
    report = check_event_loop_equivalence(fold_pipeline(), variants)
    assert not report.passed


def test_presteps_cover_midrun_states():
    # A case with presteps starts the eager split from a mid-execution
    # configuration rather than the initial one.
    op = REGISTRY["scan"].op_eager
    case = OpCase(buffers=(seq(1, 2, 3),), delta=(TERMINATOR,), presteps=2)
    assert check_eager(op, [case]).passed


@pytest.mark.parametrize("name", sorted(k for k, v in REGISTRY.items() if v.expect.get("determinism", True) and v.expect["rank"]))
def test_operator_stuck_uniqueness(name, rng=None):
    # Exhaustive exploration from small sampled configurations reaches
    # exactly one stuck configuration per operator.
    import random as _random

    e = REGISTRY[name]
    sampler = _random.Random(99)
    for case in cases_for(e, "eager", 25, seed=99):
        report = check_determinism(
            node(e.op_eager), case.buffers, mode="exhaustive", max_configs=20_000
        )
        assert report.passed, (name, case)


def test_mixed_zset_pipeline_exhaustive_determinism():
    from flo.programs import zset_mix_pipeline
    from flo.zset import zset

    g = zset_mix_pipeline()
    ins = (zset({1: 1, 2: -1}), zset({1: 2}))
    report = check_determinism(g, ins, mode="exhaustive", max_configs=100_000)
    assert report.passed


def _bounded_variants():
    from flo.core import B
    from flo.seq import scan, seq_tag, tee

    return {
        "map": seq_map("inc", INT, INT, B),
        "scan": scan(0, "add", INT, INT, B),
        "tee": tee(seq_tag(INT), B),
    }


@pytest.mark.parametrize("name", ["map", "scan", "tee"])
def test_streaming_ops_pass_at_bounded_binding_too(name):
    from flo.gen import gen_delta, gen_value

    op = _bounded_variants()[name]
    rng = random.Random(4)
    eager_cases, progress_cases = [], []
    for _ in range(150):
        buffers = tuple(gen_value(st.collection, rng) for st in op.inputs)
        deltas = tuple(gen_delta(st.collection, rng, b) for st, b in zip(op.inputs, buffers))
        eager_cases.append(OpCase(buffers=buffers, delta=deltas, presteps=rng.randint(0, 2)))
        fixed = tuple(gen_value(st.collection, rng, fixed=True) for st in op.inputs)
        progress_cases.append(OpCase(buffers=fixed))
    assert check_eager(op, eager_cases).passed
    assert check_progress(op, progress_cases).passed


def test_exhaustive_schedule_value_sets_the_cap():
    from flo.scheduler import Exhaustive

    g = five_node_graph()
    ins = (seq(1, 2, 3), seq(1, 2, 3))
    report = check_determinism(g, ins, mode=Exhaustive(50), samples=10)
    assert report.passed
    assert "warning" in report.details
