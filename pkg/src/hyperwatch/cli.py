"""Command-line interface.

Subcommands: ``score`` a stream file, ``generate`` a synthetic base,
``inject`` benchmark anomalies, ``eval`` scores against labels,
``bench`` throughput on replicated streams, and ``sweep`` a parameter
grid.  Exit codes: 0 success, 1 malformed or inconsistent data, 2
invalid flags.  Progress goes to stderr, data to files or stdout.
"""

from __future__ import annotations

import argparse
import contextlib
import gc
import math
import sys
import time
from typing import IO, Iterator, Sequence

import numpy as np

from hyperwatch.datagen import (
    InjectionBParams,
    InjectionUParams,
    LabeledEvent,
    inject_bursty,
    inject_unexpected,
    synth_base,
    upscale,
)
from hyperwatch.detector import Detector, run_stream
from hyperwatch.evaluation import complementarity_report, join_scores_with_labels
from hyperwatch.hashing import HashConfig, vectorize
from hyperwatch.kernel import FastStream
from hyperwatch.streamio import (
    StreamFormatError,
    read_labels,
    read_scores,
    read_stream,
    write_labels,
    write_scores,
    write_stream,
)
from hyperwatch.summary import batch_proximity

ORACLE_TOLERANCE = 1e-9


def _alpha_flag(text: str) -> float:
    value = float(text)
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError("alpha must be in [0,1)")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _int_list(text: str) -> list[int]:
    items = [item for item in text.split(",") if item]
    if not items:
        raise argparse.ArgumentTypeError("list must not be empty")
    return [_positive_int(item) for item in items]


def _alpha_list(text: str) -> list[float]:
    items = [item for item in text.split(",") if item]
    if not items:
        raise argparse.ArgumentTypeError("list must not be empty")
    return [_alpha_flag(item) for item in items]


def _add_detector_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--M", type=_positive_int, default=64, help="number of supernodes (default 64)")
    parser.add_argument("--K", type=_positive_int, default=4, help="number of hash functions (default 4)")
    parser.add_argument("--alpha", type=_alpha_flag, default=0.98, help="time-decay base in [0,1) (default 0.98)")
    parser.add_argument("--seed", type=int, default=42, help="master seed for the hash functions (default 42)")
    parser.add_argument("--delta", type=_positive_float, default=1e-12, help="proximity floor (default 1e-12)")


@contextlib.contextmanager
def _open_out(path: str | None) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def cmd_score(args: argparse.Namespace) -> int:
    config = HashConfig.from_master_seed(args.seed, args.K, args.M)
    started = time.perf_counter()
    count = 0
    with open(args.input, encoding="utf-8") as in_fh, _open_out(args.output) as out_fh:
        events = read_stream(in_fh)
        if args.oracle_check:
            scored = _score_with_batch_oracle(events, config, args.alpha, args.delta)
        else:
            scored = run_stream(events, config, args.alpha, floor=args.delta)

        def _counted() -> Iterator:
            nonlocal count
            for event in scored:
                count += 1
                yield event

        write_scores(out_fh, _counted())
    elapsed = time.perf_counter() - started
    rate = count / elapsed if elapsed > 0 else float("inf")
    _progress(f"scored {count} events in {elapsed:.2f}s ({rate:,.0f} events/s)")
    return 0


def _score_with_batch_oracle(events, config: HashConfig, alpha: float, floor: float):
    """Reference run that re-derives every snapshot from raw history.

    Debug mode: holds the whole history in memory and recomputes the
    full proximity matrix per distinct timestamp, so it is quadratic
    where the real pipeline is constant-space.
    """
    detector = Detector(config, alpha, floor=floor)
    histories: list[list] = [[] for _ in config.seeds]
    previous = None

    def _verify(at: float) -> None:
        for k, summary in enumerate(detector.summaries):
            live = summary.proximity()
            batch = batch_proximity(histories[k], previous, alpha, config.num_supernodes)
            deviation = float(np.max(np.abs(live.entries - batch.entries)))
            if deviation > ORACLE_TOLERANCE or not np.array_equal(live.defined_rows, batch.defined_rows):
                raise ValueError(
                    f"snapshot deviates from batch recomputation by {deviation:.3e} "
                    f"(summary {k}, timestamp {at!r})"
                )

    for nodes, timestamp in events:
        if previous is not None and timestamp > previous:
            _verify(timestamp)
        yield detector.process(nodes, timestamp)
        for k, seed in enumerate(config.seeds):
            histories[k].append((vectorize(nodes, seed, config.num_supernodes), timestamp))
        previous = timestamp
    if previous is not None:
        _verify(previous)


def cmd_generate(args: argparse.Namespace) -> int:
    events = synth_base(args.nodes, args.events, args.communities, args.seed)
    with _open_out(args.output) as fh:
        write_stream(fh, ((event.nodes, event.timestamp) for event in events))
    _progress(f"generated {len(events)} events over {args.nodes} nodes")
    return 0


def _read_labeled_base(path: str) -> list[LabeledEvent]:
    with open(path, encoding="utf-8") as fh:
        return [LabeledEvent(nodes, timestamp) for nodes, timestamp in read_stream(fh)]


def _setup_timestamp(base: Sequence[LabeledEvent], index: int) -> float:
    if index >= len(base):
        raise ValueError(f"--t-setup-index {index} is out of range for {len(base)} events")
    return base[index].timestamp


def _write_injection(args: argparse.Namespace, merged: Sequence[LabeledEvent]) -> None:
    with open(args.out_stream, "w", encoding="utf-8") as fh:
        write_stream(fh, ((event.nodes, event.timestamp) for event in merged))
    with open(args.out_labels, "w", encoding="utf-8") as fh:
        write_labels(fh, ((index, event.label) for index, event in enumerate(merged)))
    injected = sum(event.label for event in merged)
    _progress(f"wrote {len(merged)} events ({injected} injected) to {args.out_stream}")


def cmd_inject_unexpected(args: argparse.Namespace) -> int:
    base = _read_labeled_base(args.input)
    params = InjectionUParams(
        g=args.g,
        t_setup=_setup_timestamp(base, args.t_setup_index),
        rng_seed=args.seed,
    )
    _write_injection(args, inject_unexpected(base, params))
    return 0


def cmd_inject_bursty(args: argparse.Namespace) -> int:
    base = _read_labeled_base(args.input)
    params = InjectionBParams(
        bursts=args.bursts,
        per_burst=args.per_burst,
        group_size=args.group_size,
        t_setup=_setup_timestamp(base, args.t_setup_index),
        rng_seed=args.seed,
    )
    _write_injection(args, inject_bursty(base, params))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    with open(args.scores, encoding="utf-8") as fh:
        scored = list(read_scores(fh))
    with open(args.labels, encoding="utf-8") as fh:
        labels = read_labels(fh)
    indices = [event.index for event in scored]
    ls_u = join_scores_with_labels(indices, [e.score_u for e in scored], labels, args.eval_from_index)
    ls_b = join_scores_with_labels(indices, [e.score_b for e in scored], labels, args.eval_from_index)
    report = complementarity_report(ls_u, ls_b, args.k)
    with _open_out(args.output) as fh:
        fh.write(f"score\tauroc\tprecision_at_{report.k}\n")
        for name, auroc_value, precision_value in report.rows():
            fh.write(f"{name}\t{auroc_value!r}\t{precision_value!r}\n")
    for name, auroc_value, precision_value in report.rows():
        _progress(f"{name}: AUROC {auroc_value:.4f}  P@{report.k} {precision_value:.4f}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    base = _read_labeled_base(args.input)
    if not base:
        raise ValueError("benchmark input stream is empty")
    config = HashConfig.from_master_seed(args.seed, args.K, args.M)

    def _one_pass(pairs: list[tuple[tuple[str, ...], float]]) -> float:
        # Collector pauses would land inside the timed region otherwise,
        # same rationale as timeit's default.
        stream = FastStream(config, args.alpha, floor=args.delta)
        was_enabled = gc.isenabled()
        gc.disable()
        try:
            started = time.perf_counter()
            for _ in stream.score_chunks(pairs):
                pass
            return time.perf_counter() - started
        finally:
            if was_enabled:
                gc.enable()

    # Prime JIT compilation and caches outside the timed region.
    _one_pass([(event.nodes, event.timestamp) for event in base])
    rows = []
    for power in range(args.replicate_powers + 1):
        factor = 2 ** power
        pairs = [(event.nodes, event.timestamp) for event in upscale(base, factor)]
        elapsed = _one_pass(pairs)
        passes = 1
        if elapsed < args.min_seconds:
            passes = max(1, math.ceil(args.min_seconds / max(elapsed, 1e-9)))
            elapsed = sum(_one_pass(pairs) for _ in range(passes)) / passes
        rate = len(pairs) / elapsed
        rows.append((factor, len(pairs), elapsed, rate))
        _progress(f"factor {factor}: {len(pairs)} events, {elapsed:.4f}s mean of {passes}, {rate:,.0f} events/s")
    with _open_out(args.output) as fh:
        fh.write("factor,events,wall_seconds,events_per_second\n")
        for factor, events, wall, rate in rows:
            fh.write(f"{factor},{events},{wall!r},{rate!r}\n")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    with open(args.input, encoding="utf-8") as fh:
        pairs = list(read_stream(fh))
    with open(args.labels, encoding="utf-8") as fh:
        labels = read_labels(fh)
    rows = []
    for m in args.M_list:
        for k in args.K_list:
            for alpha in args.alpha_list:
                config = HashConfig.from_master_seed(args.seed, k, m)
                scored = list(run_stream(pairs, config, alpha, floor=args.delta))
                indices = [event.index for event in scored]
                ls_u = join_scores_with_labels(
                    indices, [e.score_u for e in scored], labels, args.eval_from_index
                )
                ls_b = join_scores_with_labels(
                    indices, [e.score_b for e in scored], labels, args.eval_from_index
                )
                report = complementarity_report(ls_u, ls_b, args.k)
                rows.append((m, k, alpha, report))
                _progress(
                    f"M={m} K={k} alpha={alpha}: auroc_u {report.auroc_u:.4f} auroc_b {report.auroc_b:.4f}"
                )
    with _open_out(args.output) as fh:
        fh.write("M,K,alpha,auroc_u,auroc_b,p_at_k_u,p_at_k_b\n")
        for m, k, alpha, report in rows:
            fh.write(
                f"{m},{k},{alpha!r},{report.auroc_u!r},{report.auroc_b!r},"
                f"{report.p_at_k_u!r},{report.p_at_k_b!r}\n"
            )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperwatch",
        description="Streaming unexpectedness/burstiness scores for hyperedge streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="score a stream file")
    p_score.add_argument("--input", required=True, help="stream TSV to score")
    p_score.add_argument("--output", help="score TSV (default stdout)")
    _add_detector_flags(p_score)
    p_score.add_argument(
        "--oracle-check",
        action="store_true",
        help="debug: verify every snapshot against a batch recomputation",
    )
    p_score.set_defaults(func=cmd_score)

    p_gen = sub.add_parser("generate", help="generate a synthetic base stream")
    p_gen.add_argument("--nodes", type=_positive_int, default=200)
    p_gen.add_argument("--events", type=_non_negative_int, default=5000)
    p_gen.add_argument("--communities", type=_positive_int, default=10)
    p_gen.add_argument("--seed", type=int, default=42)
    p_gen.add_argument("--output", help="stream TSV (default stdout)")
    p_gen.set_defaults(func=cmd_generate)

    p_inject = sub.add_parser("inject", help="plant labeled anomalies into a base stream")
    inject_sub = p_inject.add_subparsers(dest="mode", required=True)

    p_unexpected = inject_sub.add_parser("unexpected", help="splice foreign nodes into normal hyperedges")
    p_unexpected.add_argument("--input", required=True)
    p_unexpected.add_argument("--g", type=_positive_int, default=200, help="number of injections (default 200)")
    p_unexpected.add_argument("--t-setup-index", type=_non_negative_int, default=100)
    p_unexpected.add_argument("--seed", type=int, default=42)
    p_unexpected.add_argument("--out-stream", required=True)
    p_unexpected.add_argument("--out-labels", required=True)
    p_unexpected.set_defaults(func=cmd_inject_unexpected)

    p_bursty = inject_sub.add_parser("bursty", help="flood single timestamps with one node group")
    p_bursty.add_argument("--input", required=True)
    p_bursty.add_argument("--bursts", type=_positive_int, default=10)
    p_bursty.add_argument("--per-burst", type=_positive_int, default=20)
    p_bursty.add_argument("--group-size", type=_positive_int, default=5)
    p_bursty.add_argument("--t-setup-index", type=_non_negative_int, default=100)
    p_bursty.add_argument("--seed", type=int, default=42)
    p_bursty.add_argument("--out-stream", required=True)
    p_bursty.add_argument("--out-labels", required=True)
    p_bursty.set_defaults(func=cmd_inject_bursty)

    p_eval = sub.add_parser("eval", help="AUROC and precision@k of a score file against labels")
    p_eval.add_argument("--scores", required=True)
    p_eval.add_argument("--labels", required=True)
    p_eval.add_argument("--k", type=_positive_int, default=100)
    p_eval.add_argument("--eval-from-index", type=_non_negative_int, default=0)
    p_eval.add_argument("--output", help="metrics TSV (default stdout)")
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("bench", help="throughput over replicated copies of a stream")
    p_bench.add_argument("--input", required=True)
    p_bench.add_argument(
        "--replicate-powers",
        type=_non_negative_int,
        default=6,
        help="largest power P; factors 2^0..2^P (default 6)",
    )
    _add_detector_flags(p_bench)
    p_bench.add_argument(
        "--min-seconds",
        type=_positive_float,
        default=0.2,
        help="repeat small factors until this much wall time is accumulated",
    )
    p_bench.add_argument("--output", help="timings CSV (default stdout)")
    p_bench.set_defaults(func=cmd_bench)

    p_sweep = sub.add_parser("sweep", help="metric grid over M, K, and alpha")
    p_sweep.add_argument("--input", required=True)
    p_sweep.add_argument("--labels", required=True)
    p_sweep.add_argument("--M-list", type=_int_list, required=True)
    p_sweep.add_argument("--K-list", type=_int_list, required=True)
    p_sweep.add_argument("--alpha-list", type=_alpha_list, required=True)
    p_sweep.add_argument("--k", type=_positive_int, default=100)
    p_sweep.add_argument("--eval-from-index", type=_non_negative_int, default=0)
    p_sweep.add_argument("--seed", type=int, default=42)
    p_sweep.add_argument("--delta", type=_positive_float, default=1e-12)
    p_sweep.add_argument("--output", help="metrics CSV (default stdout)")
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        message = str(exc)
        if isinstance(exc, StreamFormatError):
            message = f"{args.command}: {message}"
        print(f"error: {message}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
