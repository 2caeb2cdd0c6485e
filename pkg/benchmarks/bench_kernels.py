"""Time the compiled and pure-Python RSGD kernels on identical sample streams.

    python benchmarks/bench_kernels.py [--samples 20000] [--nodes 255] [--dim 5] [--repeats 3]

Reports samples per second for each backend and geometry, and checks that
both backends leave the same embeddings behind.
"""

import argparse
import time

import numpy as np

from diskembed import geometry, kernels, model


def make_problem(kind, nodes, dim, samples, seed):
    rng = np.random.default_rng(seed)
    space = geometry.QuasiMetricSpace.from_name(kind, dim)
    table = model.init_embeddings(space, nodes, model.TrainConfig(), rng)
    centers, radii = table.centers, table.radii
    heads = rng.integers(0, nodes, samples)
    tails = (heads + rng.integers(1, nodes, samples)) % nodes
    labels = rng.random(samples) < 0.1
    return space, centers, radii, heads, tails, labels


def time_backend(backend, problem, repeats):
    space, centers, radii, heads, tails, labels = problem
    best = np.inf
    for _ in range(repeats):
        c, r = centers.copy(), radii.copy()
        t0 = time.perf_counter()
        kernels.run_samples(space, c, r, heads, tails, labels, 0.1, 0.01, 1.0, 1.0, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, c, r


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--nodes", type=int, default=255)
    ap.add_argument("--dim", type=int, default=5)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = sorted(kernels.BACKENDS)
    print(f"backends available: {', '.join(backends)}  samples={args.samples}  dim={args.dim}")
    print(f"{'geometry':<12}" + "".join(f"{b + ' samples/s':>22}" for b in backends) + f"{'speedup':>10}{'max diff':>12}")
    for kind in geometry.KINDS:
        problem = make_problem(kind, args.nodes, args.dim, args.samples, args.seed)
        runs = {b: time_backend(b, problem, args.repeats) for b in backends}
        rates = {b: args.samples / runs[b][0] for b in backends}
        line = f"{kind:<12}" + "".join(f"{rates[b]:>22,.0f}" for b in backends)
        if len(backends) == 2:
            (_, ca, ra), (_, cb, rb) = runs["cython"], runs["python"]
            diff = max(np.abs(ca - cb).max(), np.abs(ra - rb).max())
            line += f"{rates['cython'] / rates['python']:>9.1f}x{diff:>12.1e}"
        print(line)


if __name__ == "__main__":
    main()
