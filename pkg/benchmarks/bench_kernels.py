"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from fedtick import _kernels_py

try:
    from fedtick import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def round_inputs(m, d, k, seed=0):
    rng = np.random.default_rng(seed)
    Q = np.linalg.qr(rng.standard_normal((d, d)))[0]
    A = np.broadcast_to((Q * np.linspace(0.1, 1.0, d)) @ Q.T, (m, d, d))
    B = rng.standard_normal((m, d))
    noise = rng.standard_normal((m, k, d)) * 0.1
    return rng.standard_normal(d), A, B, 0.1, k, noise


CASES = {
    "quadratic_round m=2 d=10 K=50": lambda mod: (mod.quadratic_round, round_inputs(2, 10, 50)),
    "quadratic_round m=25 d=10 K=50": lambda mod: (mod.quadratic_round, round_inputs(25, 10, 50)),
    "quadratic_round m=10 d=50 K=20": lambda mod: (mod.quadratic_round, round_inputs(10, 50, 20)),
    "k_rounds_total K0=50 R=10000": lambda mod: (mod.k_rounds_total, (50, 10000)),
}


def best_of(fn, args, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(lambda: fn(*args), number=1), 1e-7)))
    times = timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)
    return min(times) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    print(f"{'case':34s} {'python (us)':>12s} {'cython (us)':>12s} {'speedup':>8s}")
    for name, make in CASES.items():
        fn, inputs = make(_kernels_py)
        t_py = best_of(fn, inputs, args.repeat)
        if _kernels_c is None:
            print(f"{name:34s} {t_py * 1e6:12.1f} {'n/a':>12s} {'':>8s}")
            continue
        fn_c, inputs_c = make(_kernels_c)
        ref, got = fn(*inputs), fn_c(*inputs_c)
        if isinstance(ref, tuple):
            assert all(np.allclose(a, b, rtol=1e-12, atol=1e-12) for a, b in zip(ref, got))
        else:
            assert ref == got
        t_c = best_of(fn_c, inputs_c, args.repeat)
        print(f"{name:34s} {t_py * 1e6:12.1f} {t_c * 1e6:12.1f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
