"""Compare the JIT-compiled and pure-numpy edit-distance kernels.

Run:  python3 benchmarks/bench_kernels.py [--sizes 200,500,1000] [--repeat 5]

The numba path is selected automatically when numba is installed and
OMNIRAG_NO_NUMBA is unset; this script times both implementations
directly so a single run covers the whole matrix.
"""

import argparse
import random
import time

from omnirag.eval import kernels


def random_text(rng, n):
    return "".join(rng.choice("abcdefgh ") for _ in range(n))


def time_fn(fn, args, repeat):
    fn(*args)  # warmup (JIT compilation happens here)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="200,500,1000,2000")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = random.Random(0)

    impls = [("numpy", kernels._levenshtein_numpy, kernels._lcs_numpy)]
    if kernels.HAS_NUMBA:
        impls.append(("numba", kernels._levenshtein_jit, kernels._lcs_jit))
    else:
        print("numba not installed; timing the numpy path only\n")

    header = f"{'n':>6} {'kernel':>12}" + "".join(f" {name:>12}" for name, *_ in impls)
    print(header)
    print("-" * len(header))
    for n in sizes:
        a, b = random_text(rng, n), random_text(rng, n)
        ea, eb = kernels._encode_chars(a), kernels._encode_chars(b)
        vocab: dict = {}
        ta = kernels._encode_tokens(a.split(), vocab)
        tb = kernels._encode_tokens(b.split(), vocab)

        row = [time_fn(lev, (ea, eb), args.repeat) for _, lev, _ in impls]
        print(f"{n:>6} {'levenshtein':>12}" + "".join(f" {t * 1e3:>10.2f}ms" for t in row))
        row = [time_fn(lcs, (ta, tb), args.repeat) for _, _, lcs in impls]
        print(f"{n:>6} {'lcs':>12}" + "".join(f" {t * 1e3:>10.2f}ms" for t in row))

    # sanity: both paths agree on a sample input
    if kernels.HAS_NUMBA:
        assert kernels._levenshtein_numpy(ea, eb) == kernels._levenshtein_jit(ea, eb)
        assert kernels._lcs_numpy(ta, tb) == kernels._lcs_jit(ta, tb)
        print("\nboth backends agree on the final input")


if __name__ == "__main__":
    main()
