"""Compare the compiled and pure-Python kernel backends.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Each kernel is
timed on identical inputs under both backends, outputs are checked for
agreement, and the best-of-N wall time and speedup are printed.
"""

import argparse
import json
import time

import numpy as np
from scipy.spatial.distance import cdist

from seqtran.kernels import available_backends, get_backend


def _ssim_case(rng):
    shape = (48, 48, 32)
    a = (rng.random(shape) < 0.3).astype(np.uint8)
    b = (rng.random(shape) < 0.3).astype(np.uint8)
    return "ssim_box_mean 48x48x32 w=7", lambda k: k.ssim_box_mean(a, b, 7, 1e-4, 9e-4)


def _sinkhorn_case(rng):
    n = 200
    M = np.ascontiguousarray(cdist(rng.random((n, 3)), rng.random((n, 3))))
    log_w = np.log(rng.dirichlet(np.ones(n)))
    log_v = np.log(rng.dirichlet(np.ones(n)))

    def run(k):
        f, g = np.zeros(n), np.zeros(n)
        k.sinkhorn_log(M, log_w, log_v, 0.05, f, g, 200, 0.0)
        return f, g
    return "sinkhorn_log 200x200 eps=0.05 200 sweeps", run


def _betweenness_case(rng):
    n = 60
    W = np.full((n, n), np.inf)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.2:
                W[i, j] = W[j, i] = float(rng.integers(1, 5))
    return "edge_betweenness_dense n=60 p=0.2", lambda k: k.edge_betweenness_dense(W)


def _best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _agree(x, y):
    if isinstance(x, tuple):
        return all(_agree(u, v) for u, v in zip(x, y))
    return bool(np.allclose(np.asarray(x), np.asarray(y), rtol=1e-9, atol=1e-12))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--json", action="store_true", help="emit machine-readable results")
    args = parser.parse_args(argv)

    backends = available_backends()
    rng = np.random.default_rng(args.seed)
    rows = []
    for case in (_ssim_case, _sinkhorn_case, _betweenness_case):
        name, run = case(rng)
        times, outs = {}, {}
        for b in backends:
            times[b], outs[b] = _best_time(lambda: run(get_backend(b)), args.repeat)
        row = {"kernel": name, **{f"{b}_s": times[b] for b in backends}}
        if len(backends) == 2:
            row["speedup"] = times["python"] / times["cython"]
            row["agree"] = _agree(outs["cython"], outs["python"])
        rows.append(row)

    if args.json:
        print(json.dumps(rows, indent=2))
        return
    if "cython" not in backends:
        print("compiled backend not built; timing pure Python only")
    for r in rows:
        parts = [f"{r['kernel']:<42}"] + [f"{b}={r[f'{b}_s'] * 1e3:9.2f} ms" for b in backends]
        if "speedup" in r:
            parts.append(f"speedup={r['speedup']:6.1f}x agree={r['agree']}")
        print("  ".join(parts))


if __name__ == "__main__":
    main()
