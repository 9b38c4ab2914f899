"""Micro-benchmark harness: seeded initial graph, workload mixes, fixed-duration
throughput measurement across implementations and thread counts, CSV output.
"""

from __future__ import annotations

import argparse
import csv
import random
import sys
import threading
import time
from dataclasses import dataclass

from . import baselines
from .backend import get_backend
from .codes import OpKind
from .lincheck import RecordingGraph, TraceRecorder

CSV_HEADER = [
    "impl",
    "threads",
    "workload",
    "seed",
    "iteration",
    "duration_s",
    "total_ops",
    "throughput_ops_per_s",
    "slowpath_entries",
]

IMPL_NAMES = ("seq", "coarse", "lockfree", "wf-wh", "wf-woh", "fpsp-wh", "fpsp-woh")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorkloadMix:
    """Percent weights over (addV, remV, conV, addE, remE, conE); sum 100."""

    name: str
    weights: tuple

    def __post_init__(self):
        if len(self.weights) != 6:
            raise ConfigError("a workload mix needs six weights")
        if any(w < 0 for w in self.weights):
            raise ConfigError("weights must be non-negative")
        if abs(sum(self.weights) - 100.0) > 1e-9:
            raise ConfigError(f"weights must sum to 100, got {sum(self.weights)}")

    def cdf_millionths(self):
        """Cumulative thresholds on a 1e6 scale, for integer draws."""
        acc = 0.0
        out = []
        for w in self.weights:
            acc += w
            out.append(int(round(acc * 10_000)))
        out[-1] = 1_000_000
        return out


NAMED_MIXES = {
    "lookup": WorkloadMix("lookup", (2.5, 2.5, 45.0, 2.5, 2.5, 45.0)),
    "mixed": WorkloadMix("mixed", (12.5, 12.5, 25.0, 12.5, 12.5, 25.0)),
    "update": WorkloadMix("update", (22.5, 22.5, 5.0, 22.5, 22.5, 5.0)),
}


def resolve_mix(workload) -> WorkloadMix:
    if isinstance(workload, WorkloadMix):
        return workload
    try:
        return NAMED_MIXES[workload]
    except KeyError:
        raise ConfigError(f"unknown workload {workload!r}") from None


@dataclass
class BenchConfig:
    impl: str
    threads: int = 1
    duration_s: float = 1.0
    workload: object = "mixed"
    initial_vertices: int = 1000
    edge_fill: float = 0.25
    seed: int = 42
    iterations: int = 5
    backend: str = "auto"
    max_fail: int = 20
    record_trace: str | None = None

    def validate(self):
        if self.impl not in IMPL_NAMES:
            raise ConfigError(f"impl must be one of {IMPL_NAMES}, got {self.impl!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.impl == "seq" and self.threads != 1:
            raise ConfigError("seq requires threads == 1")
        if self.duration_s <= 0:
            raise ConfigError("duration must be positive")
        if self.initial_vertices < 0:
            raise ConfigError("initial_vertices must be >= 0")
        if not 0.0 <= self.edge_fill <= 1.0:
            raise ConfigError("edge_fill must be in [0, 1]")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        resolve_mix(self.workload)


@dataclass
class CsvRow:
    impl: str
    threads: int
    workload: str
    seed: int
    iteration: int
    duration_s: float
    total_ops: int
    throughput_ops_per_s: float
    slowpath_entries: int

    def as_list(self):
        return [
            self.impl,
            self.threads,
            self.workload,
            self.seed,
            self.iteration,
            f"{self.duration_s:.6f}",
            self.total_ops,
            f"{self.throughput_ops_per_s:.3f}",
            self.slowpath_entries,
        ]


class _EngineView:
    """Six-operation facade over a wait-free engine."""

    def __init__(self, engine):
        self._e = engine

    def add_vertex(self, k):
        return self._e.wf_add_vertex(k)

    def remove_vertex(self, k):
        return self._e.wf_remove_vertex(k)

    def contains_vertex(self, k):
        return self._e.wf_contains_vertex(k)

    def add_edge(self, a, b):
        return self._e.wf_add_edge(a, b)

    def remove_edge(self, a, b):
        return self._e.wf_remove_edge(a, b)

    def contains_edge(self, a, b):
        return self._e.wf_contains_edge(a, b)


def make_impl(cfg: BenchConfig):
    """Build the implementation under test; returns (raw, six-op view)."""
    be = get_backend(cfg.backend)
    pure_backend = be.__name__.endswith("pure")
    if cfg.impl == "seq":
        g = baselines.SequentialGraph()
        return g, g
    if cfg.impl == "coarse":
        if not pure_backend and hasattr(be, "CoarseGraph"):
            g = be.CoarseGraph()
        else:
            g = baselines.CoarseLockGraph()
        return g, g
    if cfg.impl == "lockfree":
        g = be.LockFreeGraph()
        return g, g
    if cfg.impl in ("wf-wh", "wf-woh"):
        e = be.WaitFreeEngine(cfg.threads, helped_lookups=cfg.impl.endswith("-wh"))
        return e, _EngineView(e)
    # fpsp-wh / fpsp-woh
    f = be.FpspGraph(
        cfg.threads, max_fail=cfg.max_fail, helped_lookups=cfg.impl.endswith("-wh")
    )
    return f, f


def seed_graph(cfg: BenchConfig, view=None):
    """Populate keys 1..N plus round(edge_fill * C(N,2)) random directed edges.

    Deterministic per seed. Returns the six-op view (building the impl when
    one is not passed in).
    """
    if view is None:
        _, view = make_impl(cfg)
    n = cfg.initial_vertices
    for k in range(1, n + 1):
        view.add_vertex(k)
    target = round(cfg.edge_fill * n * (n - 1) / 2)
    rng = random.Random(cfg.seed)
    chosen = set()
    while len(chosen) < target:
        a = rng.randrange(1, n + 1)
        b = rng.randrange(1, n + 1)
        if a != b and (a, b) not in chosen:
            chosen.add((a, b))
            view.add_edge(a, b)
    return view


def op_stream(seed, mix: WorkloadMix, key_max):
    """Deterministic per-thread stream of (op, k1, k2) tuples."""
    rng = random.Random(seed)
    cdf = mix.cdf_millionths()
    ops = list(OpKind)[:6]
    while True:
        r = rng.randrange(1_000_000)
        op = ops[next(i for i, c in enumerate(cdf) if r < c)]
        k1 = rng.randrange(1, key_max + 1)
        k2 = rng.randrange(1, key_max + 1)
        while k2 == k1 and key_max > 1:
            k2 = rng.randrange(1, key_max + 1)
        yield op, k1, k2


def _apply(view, op, k1, k2):
    if op == OpKind.ADD_VERTEX:
        return view.add_vertex(k1)
    if op == OpKind.REMOVE_VERTEX:
        return view.remove_vertex(k1)
    if op == OpKind.FIND_VERTEX:
        return view.contains_vertex(k1)
    if op == OpKind.ADD_EDGE:
        return view.add_edge(k1, k2)
    if op == OpKind.REMOVE_EDGE:
        return view.remove_edge(k1, k2)
    return view.contains_edge(k1, k2)


def _thread_seed(seed, tid, iteration):
    return (seed * 0x9E3779B97F4A7C15 + tid * 0xBF58476D1CE4E5B9 + iteration * 0x94D049BB133111EB) % (
        2**64
    ) or 1


def _run_python_workers(cfg, raw, view, mix, recorder=None):
    """Python-level worker loop; used for seq, pure backends and trace recording."""
    key_max = max(1, cfg.initial_vertices)
    stop = threading.Event()
    counts = [0] * cfg.threads
    barrier = threading.Barrier(cfg.threads + 1)

    def worker(tid):
        target = view
        if recorder is not None:
            target = RecordingGraph(view, recorder, tid)
        if hasattr(raw, "register_thread"):
            raw.register_thread()
        stream = op_stream(_thread_seed(cfg.seed, tid, 0), mix, key_max)
        barrier.wait()
        done = 0
        while not stop.is_set():
            op, k1, k2 = next(stream)
            _apply(target, op, k1, k2)
            done += 1
        counts[tid] = done

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(cfg.threads)]
    for t in threads:
        t.start()
    barrier.wait()
    t0 = time.monotonic()
    time.sleep(cfg.duration_s)
    stop.set()
    elapsed = time.monotonic() - t0
    for t in threads:
        t.join()
    return sum(counts), elapsed


def _run_compiled_workers(cfg, raw, mix):
    be = get_backend(cfg.backend)
    key_max = max(1, cfg.initial_vertices)
    ctl = be.BenchControl()
    cdf = mix.cdf_millionths()
    counts = [0] * cfg.threads
    barrier = threading.Barrier(cfg.threads + 1)

    def worker(tid):
        barrier.wait()
        counts[tid] = raw.bench_loop(tid, ctl, _thread_seed(cfg.seed, tid, 0), cdf, key_max)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(cfg.threads)]
    for t in threads:
        t.start()
    barrier.wait()
    t0 = time.monotonic()
    time.sleep(cfg.duration_s)
    ctl.stop()
    elapsed = time.monotonic() - t0
    for t in threads:
        t.join()
    return sum(counts), elapsed


def run(cfg: BenchConfig):
    """Run all iterations; returns a list of CsvRow."""
    cfg.validate()
    mix = resolve_mix(cfg.workload)
    be = get_backend(cfg.backend)
    compiled = hasattr(be, "BenchControl")
    rows = []
    recorder = TraceRecorder() if cfg.record_trace else None
    for it in range(cfg.iterations):
        raw, view = make_impl(cfg)
        seed_graph(cfg, view)
        slow0 = raw.slowpath_entries() if hasattr(raw, "slowpath_entries") else 0
        use_python = (
            cfg.impl in ("seq",)
            or recorder is not None
            or not compiled
            or not hasattr(raw, "bench_loop")
        )
        if use_python:
            total, elapsed = _run_python_workers(cfg, raw, view, mix, recorder)
        else:
            total, elapsed = _run_compiled_workers(cfg, raw, mix)
        slow = (raw.slowpath_entries() if hasattr(raw, "slowpath_entries") else 0) - slow0
        rows.append(
            CsvRow(
                impl=cfg.impl,
                threads=cfg.threads,
                workload=mix.name,
                seed=cfg.seed,
                iteration=it,
                duration_s=elapsed,
                total_ops=total,
                throughput_ops_per_s=total / elapsed if elapsed > 0 else 0.0,
                slowpath_entries=slow,
            )
        )
    if recorder is not None:
        recorder.history().dump(cfg.record_trace)
    return rows


def write_csv(rows, path_or_file):
    own = isinstance(path_or_file, str)
    f = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow(r.as_list())
    finally:
        if own:
            f.close()


def read_csv(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != CSV_HEADER:
            raise ConfigError(f"unexpected CSV header: {header}")
        return [dict(zip(header, row)) for row in reader]


def main(argv=None):
    p = argparse.ArgumentParser(prog="graphbench", description="graph micro-benchmark")
    p.add_argument("--impl", required=True, choices=IMPL_NAMES)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--duration-secs", type=float, default=1.0)
    p.add_argument("--workload", default="mixed", choices=sorted(NAMED_MIXES))
    p.add_argument("--initial-vertices", type=int, default=1000)
    p.add_argument("--edge-fill", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--max-fail", type=int, default=20)
    p.add_argument("--backend", default="auto", choices=("auto", "c", "pure"))
    p.add_argument("--csv", default=None, help="output CSV path (default: stdout)")
    p.add_argument("--record-trace", default=None, help="record a lincheck event trace")
    args = p.parse_args(argv)
    cfg = BenchConfig(
        impl=args.impl,
        threads=args.threads,
        duration_s=args.duration_secs,
        workload=args.workload,
        initial_vertices=args.initial_vertices,
        edge_fill=args.edge_fill,
        seed=args.seed,
        iterations=args.iterations,
        backend=args.backend,
        max_fail=args.max_fail,
        record_trace=args.record_trace,
    )
    try:
        rows = run(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if args.csv:
        write_csv(rows, args.csv)
    else:
        write_csv(rows, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
