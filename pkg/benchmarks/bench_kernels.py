"""Compare the compiled staircase kernels with the NumPy fallback.

Run with ``python benchmarks/bench_kernels.py``. The workloads match the
training inner loop: one cost evaluation and one parameter-shift gradient
on an Iris-sized (80 x 4) and an Agri-sized (240 x 6) training split.
"""
import argparse
import timeit

import numpy as np

from mpsqc import _fallback

try:
    from mpsqc import _kernels
except ImportError:
    _kernels = None


def bench(fn, *args, repeat=5):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.2:
        number *= 2
    best = min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat))
    return best / number


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    impls = {"numpy": _fallback}
    if _kernels is not None:
        impls["cython"] = _kernels
    else:
        print("compiled kernels not built; timing the fallback only")

    print(f"{'workload':<28}{'impl':<8}{'time [ms]':>12}{'speedup':>10}")
    for n_batch, n_data in [(80, 4), (240, 6), (240, 10)]:
        n_wires = n_data + 1
        theta = rng.uniform(-np.pi, np.pi, 2 * (n_wires - 1))
        angles = rng.uniform(-np.pi / 4, np.pi / 4, (n_batch, n_data))
        for name, fname in [("scores", "staircase_scores"), ("shift-grad", "staircase_shift_scores")]:
            base = None
            for impl, mod in impls.items():
                t = bench(getattr(mod, fname), theta, angles, True)
                base = base or t
                label = f"{name} {n_batch}x{n_data}"
                print(f"{label:<28}{impl:<8}{1e3 * t:>12.3f}{base / t:>9.1f}x")


if __name__ == "__main__":
    main()
