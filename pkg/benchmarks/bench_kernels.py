"""Compare the pure-Python and compiled round kernels on larger workloads.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

from diagfd._backend import available_kernels
from diagfd.analysis import enumerate_ordering_latencies
from diagfd.detectors import DetectorKind
from diagfd.engine import (
    OrderingPolicy,
    ProbabilisticInjections,
    Scenario,
    run_scenario,
)


def _workloads():
    yield (
        "brute-force n=32, 30 churning rounds",
        lambda kernel: run_scenario(
            Scenario(
                n=32,
                detector=DetectorKind.BRUTE_FORCE,
                injections=ProbabilisticInjections(rate=0.05, seed=3),
                ordering=OrderingPolicy.SEEDED_RANDOM,
                seed=1,
                max_rounds=30,
                stop_on_quiescence=False,
            ),
            kernel=kernel,
            trace_level="counts",
        ),
    )
    yield (
        "vring n=64, crash at round 2, worst case",
        lambda kernel: run_scenario(
            Scenario(
                n=64,
                detector=DetectorKind.VRING,
                crashes=((2, 11),),
                ordering=OrderingPolicy.WORST_CASE,
            ),
            kernel=kernel,
            trace_level="counts",
        ),
    )
    yield (
        "vcube n=64, crash at round 2",
        lambda kernel: run_scenario(
            Scenario(n=64, detector=DetectorKind.VCUBE, crashes=((2, 40),)),
            kernel=kernel,
            trace_level="counts",
        ),
    )
    yield (
        "ordering enumeration, vring n=6",
        lambda kernel: enumerate_ordering_latencies(
            DetectorKind.VRING, 6, 1, kernel=kernel
        ),
    )


def _time(fn, kernel, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        started = time.perf_counter()
        fn(kernel)
        best = min(best, time.perf_counter() - started)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    kernels = available_kernels()
    if "cython" not in kernels:
        print("compiled kernel not built; benchmarking the pure backend only")

    names = sorted(kernels)
    print(f"{'workload':<44}" + "".join(f"{name:>12}" for name in names) + f"{'speedup':>10}")
    for label, fn in _workloads():
        timings = {name: _time(fn, kernels[name], args.repeat) for name in names}
        row = f"{label:<44}" + "".join(f"{timings[name] * 1e3:>10.1f}ms" for name in names)
        if len(names) == 2:
            row += f"{timings['python'] / timings['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
