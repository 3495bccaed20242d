"""Time the compiled and numpy kernels on identical inputs.

Usage: python benchmarks/bench_kernels.py [--sizes 10000 100000 1000000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from corrlayers import kernels


def make_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.8, 1.25, n)
    b = rng.uniform(0.8, 1.25, n)
    code = rng.choice(4, size=n, p=[0.02, 0.03, 0.03, 0.92]).astype(np.int8)
    x1 = (code <= 1).astype(np.uint8)
    return a, b, code, x1


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[10_000, 100_000, 1_000_000])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    p1, p2, q = 0.05, 0.06, 0.03
    print(f"backends: {', '.join(backends)}")
    print(f"{'kernel':<24}{'pairs':>10}" + "".join(f"{b + ' ms':>14}" for b in backends)
          + (f"{'speedup':>10}" if len(backends) > 1 else ""))
    for n in args.sizes:
        a, b, code, x1 = make_inputs(n)
        p1v, p2v, qv = (np.full(n, v) for v in (p1, p2, q))
        for name in ("full_loglik_derivs", "dcsbm_conditional_probs"):
            times = []
            for backend in backends:
                mod = kernels.get_backend(backend)
                if name == "full_loglik_derivs":
                    call = lambda: mod.full_loglik_derivs(a, b, code, p1, p2, q)
                else:
                    call = lambda: mod.dcsbm_conditional_probs(a, b, x1, p1v, p2v, qv)
                times.append(min(timeit.repeat(call, number=1, repeat=args.repeat)) * 1e3)
            row = f"{name:<24}{n:>10}" + "".join(f"{t:>14.2f}" for t in times)
            if len(times) > 1:
                row += f"{times[-1] / times[0]:>9.1f}x"
            print(row)


if __name__ == "__main__":
    main()
