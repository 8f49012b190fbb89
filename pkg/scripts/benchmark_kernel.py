#!/usr/bin/env python3
"""Benchmark the compiled event kernel against the pure-Python fallback.

Measures accepted-or-null events per second on a 10^4-site window at half
filling, for the unit-drive nearest-neighbour model and a range-2 law, on
both boundary types.  The throughput contract (>= 10^6 events/s per worker
at N = 10^4) is documented here and in the README rather than unit-asserted.

Usage: python scripts/benchmark_kernel.py [--events N] [--csv PATH]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from kpzlab import _kernel_fallback
from kpzlab.rng import displacement_thresholds

try:
    from kpzlab import _kernel
except ImportError:
    _kernel = None


CASES = [
    ("unit-drive", {1: 1.0}, False),
    ("unit-drive-ring", {1: 1.0}, True),
    ("range2", {1: 1 / 3, 2: 1 / 3}, False),
    ("range2-ring", {1: 1 / 3, 2: 1 / 3}, True),
]


def run_case(impl, rates: dict, ring: bool, n_events: int, n_sites: int) -> float:
    occ = np.zeros(n_sites, dtype=np.uint8)
    occ[::2] = 1
    sites = np.flatnonzero(occ).astype(np.int64)
    vlist, vcum = displacement_thresholds(rates)
    t0 = time.perf_counter()
    impl.run_events(occ, sites, np.uint64(12345), np.uint64(0), n_events,
                    vlist, vcum, ring)
    return n_events / (time.perf_counter() - t0)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--events", type=int, default=20_000_000,
                    help="events per compiled case (fallback runs 1/50)")
    ap.add_argument("--sites", type=int, default=10_000)
    ap.add_argument("--csv", type=str, default=None)
    args = ap.parse_args()

    rows = []
    for name, rates, ring in CASES:
        line = {"case": name, "sites": args.sites}
        if _kernel is not None:
            line["compiled_events_per_s"] = run_case(_kernel, rates, ring,
                                                     args.events, args.sites)
        line["python_events_per_s"] = run_case(
            _kernel_fallback, rates, ring, max(args.events // 50, 100_000),
            args.sites)
        if _kernel is not None:
            line["speedup"] = (line["compiled_events_per_s"]
                               / line["python_events_per_s"])
        rows.append(line)
        parts = [f"{name:16s}"]
        if "compiled_events_per_s" in line:
            parts.append(f"compiled {line['compiled_events_per_s']/1e6:8.1f} M/s")
        parts.append(f"python {line['python_events_per_s']/1e6:6.2f} M/s")
        if "speedup" in line:
            parts.append(f"speedup {line['speedup']:6.0f}x")
        print("  ".join(parts))

    if args.csv:
        cols = list(rows[0].keys())
        lines = [",".join(cols)]
        for r in rows:
            lines.append(",".join(repr(r.get(c, "")) for c in cols))
        with open(args.csv, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.csv}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
