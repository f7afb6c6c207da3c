#!/usr/bin/env python3
"""Time the hot kernels under the numba and numpy backends.

    python3 benchmarks/bench_kernels.py [--n 64] [--repeat 5] [--json out.json]

Each kernel is timed on identical inputs with both backends; the first numba
call (compilation or cache load) is excluded.  Results are also checked for
agreement so a speedup never hides a wrong answer.
"""
import argparse
import json
import time

import numpy as np

from vpx import _accel
from vpx.mrs import mrs_table
from vpx.operators import taper
from vpx.orthopoly import measure_rule, recurrence_table, _default_rule
from vpx.weights import preset


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n):
    spec = preset("erdos")
    table = recurrence_table(spec, 2 * n)
    rule = _default_rule(spec, mrs_table(spec), 2 * n)
    x, W = measure_rule(spec, rule)
    grid = np.linspace(-1.5 * mrs_table(spec).a(2 * n), 1.5 * mrs_table(spec).a(2 * n), 4000)
    m = 2 * n
    A = _accel.recurrence_values(grid[:600], table.alpha, table.beta, table.p0, m) * taper(n)
    B = _accel.recurrence_values(x, table.alpha, table.beta, table.p0, m)
    r = W.copy()
    return {
        "recurrence_values": lambda: _accel.recurrence_values(grid, table.alpha, table.beta,
                                                              table.p0, m),
        "recurrence_values_and_derivs": lambda: _accel.recurrence_values_and_derivs(
            grid, table.alpha, table.beta, table.p0, m),
        "stieltjes": lambda: _accel.stieltjes(x, W, 2 * n),
        "abs_kernel_integrals": lambda: _accel.abs_kernel_integrals(A, B, r),
    }


def _max_rel(a, b):
    if isinstance(a, tuple):
        return max(_max_rel(s, t) for s, t in zip(a, b) if np.ndim(s))
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None)
    args = ap.parse_args(argv)

    backends = [b for b in ("numpy", "numba") if b in _accel.BACKENDS]
    results = {}
    prev = _accel.get_backend()
    try:
        for b in backends:
            _accel.set_backend(b)
            for name, fn in cases(args.n).items():
                fn()  # warm-up / JIT
                t, out = _time(fn, args.repeat)
                results.setdefault(name, {})[b] = (t, out)
    finally:
        _accel.set_backend(prev)

    print(f"{'kernel':32s} " + " ".join(f"{b:>12s}" for b in backends) + "   speedup  max rel diff")
    summary = {}
    for name, per in results.items():
        times = [per[b][0] for b in backends]
        line = f"{name:32s} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times)
        row = {b: per[b][0] for b in backends}
        if len(backends) == 2:
            diff = _max_rel(per["numba"][1], per["numpy"][1])
            line += f"   {times[0] / times[1]:6.2f}x  {diff:.1e}"
            row.update(speedup=times[0] / times[1], max_rel_diff=diff)
        print(line)
        summary[name] = row
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"n": args.n, "repeat": args.repeat, "kernels": summary}, fh, indent=1)


if __name__ == "__main__":
    main()
