"""Time the jitted kernels against their interpreted numpy originals.

    python3 benchmarks/bench_kernels.py [--repeat N]

The jitted column is skipped when ZENOMPF_DISABLE_NUMBA=1. Large matrices
spend their time in BLAS/LAPACK either way; the gap shows up on the small
matrices that the quadrature and contour loops feed through.
"""
import argparse
import time

import numpy as np

from zenompf import _kernels
from zenompf.linalg import gauss_legendre
from zenompf.quantum import SIGMA_X, hamiltonian_generator, projector_channel


def best_of(fn, repeat):
    fn()  # warm-up, includes compilation for the jitted path
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    qubit_l = hamiltonian_generator(SIGMA_X)
    rule = gauss_legendre(32)
    small = np.ascontiguousarray((rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))) / 3)
    big = np.ascontiguousarray((rng.normal(size=(256, 256)) + 1j * rng.normal(size=(256, 256))) / 16)
    p = projector_channel(np.diag([1.0, 0.0]).astype(np.complex128))
    kick = np.ascontiguousarray(p @ _kernels.PY_KERNELS["expm"](qubit_l / 64))
    theta = 2 * np.pi * np.arange(64) / 64
    nodes = 1.0 + 0.3 * np.exp(1j * theta)
    weights = 0.3 * np.exp(1j * theta) / 64
    return {
        "expm 4x4": ("expm", (qubit_l,)),
        "expm 9x9": ("expm", (small,)),
        "expm 256x256": ("expm", (big,)),
        "matpow 4x4 n=4096": ("matpow", (kick, 4096)),
        "expm_scaled 32 nodes 9x9": ("expm_scaled", (small, rule.nodes.copy())),
        "resolvent 64 nodes 4x4": ("resolvent_trapezoid", (p, nodes, weights)),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args(argv)
    print(f"numba enabled: {_kernels.USE_NUMBA}")
    print(f"{'case':<28} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for label, (name, call_args) in cases().items():
        py = best_of(lambda: _kernels.PY_KERNELS[name](*call_args), args.repeat)
        if _kernels.USE_NUMBA:
            jit = best_of(lambda: _kernels.KERNELS[name](*call_args), args.repeat)
            print(f"{label:<28} {py * 1e3:11.4f} {jit * 1e3:11.4f} {py / jit:8.2f}")
        else:
            print(f"{label:<28} {py * 1e3:11.4f} {'-':>11} {'-':>8}")


if __name__ == "__main__":
    main()
