"""Compare the numba and numpy engine backends.

Both backends run the same kernels from one source module, so their outputs
are bit-identical; this script measures what the JIT buys. Run it from the
repository root:

    python3 benchmarks/backend_bench.py
    python3 benchmarks/backend_bench.py --n 50000 --reps 5
"""

import argparse
import time

import numpy as np

from epitrace.engine.backends import get_backend
from epitrace.epidemic import EpidemicParams, run_epidemic
from epitrace.netgen import derive_degree_distribution, generate_superspreading_network
from epitrace.rng import RunRng


def time_call(fn, reps):
    best = float("inf")
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels(backend_name, reps):
    backend = get_backend(backend_name)
    rng = RunRng(1234, backend)
    uniforms = time_call(lambda: rng.uniforms(200000), reps)

    cap = 1 << 15
    tree = np.zeros(2 * cap, dtype=np.float64)
    weights = np.random.default_rng(0).random(cap)
    for i, w in enumerate(weights):
        backend.tree_set(tree, cap, i, float(w))
    state = np.zeros(4, dtype=np.uint64)
    backend.seed_stream(state, np.uint64(42))

    def sample_many():
        total = tree[1]
        for _ in range(100000):
            r = backend.uniform01(state) * total
            backend.tree_sample(tree, cap, r)

    sampling = time_call(sample_many, reps)
    return uniforms, sampling


def bench_run(backend_name, net, params, reps):
    backend = get_backend(backend_name)
    # one warm-up run covers JIT compilation for the numba backend
    run_epidemic(net, params, seed=0, backend=backend)
    return time_call(
        lambda: run_epidemic(net, params, seed=1, backend=backend), reps
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10000, help="network size")
    ap.add_argument("--reps", type=int, default=3, help="repetitions, best taken")
    args = ap.parse_args()

    dist = derive_degree_distribution(0.1, 2.5, 0.6, 0.05)
    net = generate_superspreading_network(dist, args.n, seed=7)
    params = EpidemicParams(model="SIR", beta=0.6, gamma=0.05, I0=10)

    rows = []
    for name in ("numpy", "numba"):
        uni, samp = bench_kernels(name, args.reps)
        run = bench_run(name, net, params, args.reps)
        rows.append((name, uni, samp, run))

    print(f"{'backend':<8} {'200k uniforms':>14} {'100k tree picks':>16} "
          f"{'epidemic run':>13}")
    for name, uni, samp, run in rows:
        print(f"{name:<8} {uni * 1e3:>12.2f}ms {samp * 1e3:>14.2f}ms "
              f"{run * 1e3:>11.2f}ms")
    if rows[0][3] > 0:
        print(f"\nrun speedup numba vs numpy: {rows[0][3] / rows[1][3]:.1f}x")


if __name__ == "__main__":
    main()
