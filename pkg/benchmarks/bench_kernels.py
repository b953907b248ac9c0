"""Compare the compiled and pure-Python kernels on planted rich-club graphs.

    python3 benchmarks/bench_kernels.py [--sizes 200 400 800] [--repeat 3]
"""

import argparse
import time

import numpy as np

from statusnet import _core_py
from statusnet.ingest import SyntheticConfig, generate_synthetic

try:
    from statusnet import _core
except ImportError:
    _core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def lbp_inputs(g, seed=0):
    rng = np.random.default_rng(seed)
    tri = np.ascontiguousarray(g.triangles)
    unary = np.zeros((g.n, 2))
    unary[:, 0] = rng.normal(scale=0.5, size=g.n)
    pot = np.ascontiguousarray(np.array([0.05, -0.02, 0.0, 0.03])[[0, 1, 1, 2, 1, 2, 2, 3]])
    return tri, unary, pot


def run(sizes, repeat, iters):
    rows = []
    for n in sizes:
        g = generate_synthetic(SyntheticConfig(n=n, seed=1)).graph
        row = {"n": n, "edges": g.n_edges, "triangles": len(g.triangles)}
        for name, mod in (("python", _core_py), ("cython", _core)):
            if mod is None:
                row[f"tri_{name}"] = row[f"lbp_{name}"] = float("nan")
                continue
            row[f"tri_{name}"], _ = best_of(lambda: mod.list_triangles(g.indptr, g.indices), repeat)
            tri, unary, pot = lbp_inputs(g)

            def lbp():
                msgs = np.full((len(tri), 3, 2), -np.log(2.0))
                # tol=0 forces exactly ``iters`` sweeps
                return mod.lbp_iterate(tri, unary, pot, msgs, iters, 0.5, 0.0)

            row[f"lbp_{name}"], _ = best_of(lbp, repeat)
        rows.append(row)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 400, 800])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--iters", type=int, default=50)
    args = ap.parse_args()
    rows = run(args.sizes, args.repeat, args.iters)
    print(f"{'n':>6} {'edges':>7} {'tri':>7} | {'triangles py':>12} {'cy':>9} {'x':>6} |"
          f" {'lbp py':>9} {'cy':>9} {'x':>6}")
    for r in rows:
        print(
            f"{r['n']:>6} {r['edges']:>7} {r['triangles']:>7} |"
            f" {r['tri_python']:>12.4f} {r['tri_cython']:>9.4f} {r['tri_python'] / r['tri_cython']:>6.1f} |"
            f" {r['lbp_python']:>9.4f} {r['lbp_cython']:>9.4f} {r['lbp_python'] / r['lbp_cython']:>6.1f}"
        )
    print(f"(seconds, best of {args.repeat}; LBP = {args.iters} synchronous sweeps)")


if __name__ == "__main__":
    main()
