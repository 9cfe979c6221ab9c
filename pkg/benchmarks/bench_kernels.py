"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--batch 720] [--repeat 20]

Each kernel is run once per backend before timing so JIT compilation is not
counted. The last block times one full minibatch gradient of the default
QAE-qudit circuit, the dominant cost of training.
"""
import argparse
import time

import numpy as np

from quditvqc import _accel, kernels
from quditvqc.models import QuditVqc


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def random_hermitian_batch(rng, n, d):
    A = rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))
    return 0.5 * (A + A.conj().transpose(0, 2, 1))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=720, help="matrices per call (samples x layers)")
    parser.add_argument("--dim", type=int, default=9)
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    H = random_hermitian_batch(rng, args.batch, args.dim)
    w, V, _ = kernels.expm_batch(H, use_numba=False)
    adj = rng.normal(size=(args.batch, args.dim)) + 1j * rng.normal(size=(args.batch, args.dim))
    psi = rng.normal(size=(args.batch, args.dim)) + 1j * rng.normal(size=(args.batch, args.dim))

    cases = {
        "expm_batch": lambda nb: kernels.expm_batch(H, use_numba=nb),
        "divided_differences": lambda nb: kernels.divided_differences(w, use_numba=nb),
        "adjoint_contract": lambda nb: kernels.adjoint_contract(w, V, adj, psi, use_numba=nb),
    }
    print(f"{args.batch} matrices of size {args.dim}, best of {args.repeat}")
    print(f"{'kernel':<22}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for name, fn in cases.items():
        fn(True), fn(False)
        t_np = best_of(lambda: fn(False), args.repeat)
        t_nb = best_of(lambda: fn(True), args.repeat)
        print(f"{name:<22}{1e3 * t_np:>10.2f}{1e3 * t_nb:>10.2f}{t_np / t_nb:>9.2f}")

    vqc = QuditVqc.init(rng)
    X = rng.normal(size=(32, 80))
    y = rng.integers(0, 9, size=32)
    timings = {}
    for flag in (False, True):
        _accel.USE_NUMBA = flag
        vqc.loss_and_grad(X, y)
        timings[flag] = best_of(lambda: vqc.loss_and_grad(X, y), max(1, args.repeat // 4))
    print(f"{'vqc batch gradient':<22}{1e3 * timings[False]:>10.2f}{1e3 * timings[True]:>10.2f}"
          f"{timings[False] / timings[True]:>9.2f}")


if __name__ == "__main__":
    main()
