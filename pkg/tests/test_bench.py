"""Benchmark harness: mixes, seeding, runs, CSV schema."""

import collections
import itertools

import pytest

from wfgraph import HAS_C_BACKEND
from wfgraph.bench import (
    CSV_HEADER,
    BenchConfig,
    ConfigError,
    CsvRow,
    NAMED_MIXES,
    WorkloadMix,
    make_impl,
    op_stream,
    read_csv,
    run,
    seed_graph,
    write_csv,
)
from wfgraph.codes import OpKind
from wfgraph.lincheck import History, Verdict, check


def test_named_mixes_pinned():
    assert NAMED_MIXES["lookup"].weights == (2.5, 2.5, 45.0, 2.5, 2.5, 45.0)
    assert NAMED_MIXES["mixed"].weights == (12.5, 12.5, 25.0, 12.5, 12.5, 25.0)
    assert NAMED_MIXES["update"].weights == (22.5, 22.5, 5.0, 22.5, 22.5, 5.0)


def test_mix_validation():
    with pytest.raises(ConfigError):
        WorkloadMix("bad", (10, 10, 10, 10, 10, 10))
    with pytest.raises(ConfigError):
        WorkloadMix("bad", (110, -10, 0, 0, 0, 0))
    with pytest.raises(ConfigError):
        WorkloadMix("bad", (50, 50))


def test_cdf_scale():
    cdf = NAMED_MIXES["lookup"].cdf_millionths()
    assert cdf == [25_000, 50_000, 500_000, 525_000, 550_000, 1_000_000]


def test_config_validation():
    BenchConfig(impl="lockfree").validate()
    with pytest.raises(ConfigError):
        BenchConfig(impl="nope").validate()
    with pytest.raises(ConfigError):
        BenchConfig(impl="seq", threads=2).validate()
    with pytest.raises(ConfigError):
        BenchConfig(impl="seq", duration_s=0).validate()
    with pytest.raises(ConfigError):
        BenchConfig(impl="seq", edge_fill=1.5).validate()
    with pytest.raises(ConfigError):
        BenchConfig(impl="seq", iterations=0).validate()


def test_seed_graph_counts_and_determinism():
    cfg = BenchConfig(impl="lockfree", initial_vertices=120, edge_fill=0.25, seed=7)
    view = seed_graph(cfg)
    verts, edges = view.snapshot()
    assert verts == set(range(1, 121))
    assert len(edges) == round(0.25 * 120 * 119 / 2)
    view2 = seed_graph(cfg)
    assert view2.snapshot() == (verts, edges)
    cfg3 = BenchConfig(impl="lockfree", initial_vertices=120, edge_fill=0.25, seed=8)
    assert seed_graph(cfg3).snapshot()[1] != edges


def test_seed_graph_empty():
    cfg = BenchConfig(impl="lockfree", initial_vertices=0, edge_fill=0.25)
    view = seed_graph(cfg)
    assert view.snapshot() == (set(), set())


@pytest.mark.skipif(not HAS_C_BACKEND, reason="needs the compiled backend for speed")
def test_seed_graph_paper_scale():
    cfg = BenchConfig(impl="lockfree", initial_vertices=1000, edge_fill=0.25, seed=1)
    view = seed_graph(cfg)
    verts, edges = view.snapshot()
    assert len(verts) == 1000
    assert 120_000 <= len(edges) <= 130_000


def test_stream_frequencies_within_one_percent():
    mix = NAMED_MIXES["lookup"]
    stream = op_stream(123, mix, 50)
    counts = collections.Counter(op for op, _, _ in itertools.islice(stream, 120_000))
    for op, weight in zip(list(OpKind)[:6], mix.weights):
        assert abs(counts[op] / 120_000 * 100 - weight) < 1.0


def test_stream_key_range_and_distinct_edge_keys():
    stream = op_stream(5, NAMED_MIXES["update"], 9)
    for op, k1, k2 in itertools.islice(stream, 5000):
        assert 1 <= k1 <= 9 and 1 <= k2 <= 9
        assert k1 != k2


def test_stream_determinism():
    a = list(itertools.islice(op_stream(42, NAMED_MIXES["mixed"], 10), 500))
    b = list(itertools.islice(op_stream(42, NAMED_MIXES["mixed"], 10), 500))
    assert a == b


@pytest.mark.skipif(not HAS_C_BACKEND, reason="needs both backends to compare")
def test_backends_comparison_compiled_is_faster():
    common = dict(
        impl="lockfree",
        threads=2,
        duration_s=0.25,
        workload="lookup",
        initial_vertices=32,
        edge_fill=0.1,
        iterations=1,
        seed=5,
    )
    c_rows = run(BenchConfig(backend="c", **common))
    p_rows = run(BenchConfig(backend="pure", **common))
    c_tp = c_rows[0].throughput_ops_per_s
    p_tp = p_rows[0].throughput_ops_per_s
    print(f"backend comparison: c={c_tp:,.0f} ops/s, pure={p_tp:,.0f} ops/s")
    assert c_tp > 3 * p_tp


def test_cli_writes_csv(tmp_path):
    from wfgraph.bench import main

    out = tmp_path / "cli.csv"
    rc = main(
        [
            "--impl",
            "lockfree",
            "--threads",
            "2",
            "--duration-secs",
            "0.1",
            "--workload",
            "update",
            "--initial-vertices",
            "8",
            "--edge-fill",
            "0.0",
            "--seed",
            "1",
            "--iterations",
            "1",
            "--csv",
            str(out),
        ]
    )
    assert rc == 0
    rows = read_csv(str(out))
    assert len(rows) == 1 and rows[0]["impl"] == "lockfree"


@pytest.mark.parametrize(
    "impl", ["seq", "coarse", "lockfree", "wf-wh", "wf-woh", "fpsp-wh", "fpsp-woh"]
)
def test_smoke_run_each_impl(impl):
    cfg = BenchConfig(
        impl=impl,
        threads=1 if impl == "seq" else 2,
        duration_s=0.15,
        workload="mixed",
        initial_vertices=24,
        edge_fill=0.2,
        iterations=2,
        seed=3,
    )
    rows = run(cfg)
    assert len(rows) == 2
    for i, r in enumerate(rows):
        assert r.impl == impl and r.iteration == i
        assert r.total_ops > 0
        assert r.throughput_ops_per_s == pytest.approx(r.total_ops / r.duration_s)
        assert r.slowpath_entries >= 0


def test_csv_round_trip(tmp_path):
    rows = [
        CsvRow("lockfree", 2, "mixed", 3, 0, 0.5, 1000, 2000.0, 0),
        CsvRow("coarse", 2, "mixed", 3, 1, 0.5, 900, 1800.0, 0),
    ]
    path = tmp_path / "out.csv"
    write_csv(rows, str(path))
    text = path.read_text().splitlines()
    assert text[0] == ",".join(CSV_HEADER)
    back = read_csv(str(path))
    assert len(back) == 2
    assert back[0]["impl"] == "lockfree"
    assert float(back[0]["throughput_ops_per_s"]) == pytest.approx(2000.0)


def test_read_csv_rejects_wrong_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ConfigError):
        read_csv(str(p))


def test_record_trace_produces_linearizable_history(tmp_path):
    path = tmp_path / "trace.jsonl"
    cfg = BenchConfig(
        impl="lockfree",
        threads=2,
        duration_s=0.1,
        workload="update",
        initial_vertices=6,
        edge_fill=0.0,
        iterations=1,
        seed=11,
        record_trace=str(path),
    )
    run(cfg)
    hist = History.load(str(path))
    assert len(hist.ops) > 10
    # bounded re-check: pick a small prefix to keep the search cheap
    prefix_ops = [e for e in hist.events if e.stamp < 80]
    small = History.from_events(prefix_ops)
    if not any(o.pending for o in small.ops):
        assert check(small, 2_000_000).verdict == Verdict.LINEARIZABLE


def test_make_impl_registers_capacity_for_threads():
    cfg = BenchConfig(impl="fpsp-woh", threads=3)
    raw, view = make_impl(cfg)
    assert raw.stats()["total"] == 0
    assert view.add_vertex(1) is True
