"""Time the compiled kernels against the numpy fallback.

Run ``python3 benchmarks/bench_kernels.py [--sizes 16,20,22] [--repeat 3]``.
Each row reports the best-of-``repeat`` wall time per backend, the speedup
and the largest absolute difference between the two results.
"""

import argparse
import timeit

import numpy as np

from gnqa import _backend
from gnqa.model import to_ising
from gnqa.problems import GeneratorSpec, generate


def _ising(n, density, seed=0):
    return to_ising(generate(GeneratorSpec("random_qubo", n, seed,
                                           params={"density": density})).problem)


def _cases(sizes, sparse_n):
    for n in sizes:
        H = _ising(n, 1.0)
        yield (f"spin_diagonal n={n}",
               lambda k, H=H: k.spin_diagonal(H.n, H.h, H.qi, H.qj, H.qv))
        lin = np.ascontiguousarray(H.h)
        yield (f"binary_values n={n}",
               lambda k, H=H, lin=lin: k.binary_values(H.n, lin, H.qi, H.qj, H.qv))
    H = _ising(sparse_n, 20.0 / sparse_n)
    w = np.random.default_rng(0).standard_normal(H.n)
    yield (f"sym_coupling_matvec N={sparse_n} kappa={H.qv.size}",
           lambda k, H=H, w=w: k.sym_coupling_matvec(H.n, H.qi, H.qj, H.qv, w))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--sizes", default="16,20,22")
    ap.add_argument("--sparse-n", type=int, default=2500)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    if "cython" not in _backend.available():
        print("compiled extension not built; only the numpy fallback is available")
        return 1
    fast, slow = _backend.get("cython"), _backend.get("numpy")
    print(f"{'kernel':44s} {'cython s':>10s} {'numpy s':>10s} {'speedup':>8s} {'max diff':>9s}")
    for name, call in _cases(sizes, args.sparse_n):
        a, b = call(fast), call(slow)
        diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        number = 1 if "diagonal" in name or "values" in name else 200
        tf = min(timeit.repeat(lambda: call(fast), number=number, repeat=args.repeat)) / number
        ts = min(timeit.repeat(lambda: call(slow), number=number, repeat=args.repeat)) / number
        print(f"{name:44s} {tf:10.4g} {ts:10.4g} {ts / tf:8.2f} {diff:9.2g}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
