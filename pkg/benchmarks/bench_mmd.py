"""Time the compiled MMD core against the numpy fallback.

    python3 benchmarks/bench_mmd.py --sizes 100,400,1000 --dim 16
"""

import argparse
import timeit

import numpy as np

from eremu import _fallback

try:
    from eremu import _core
except ImportError:
    _core = None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="100,400,1000")
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--kernels", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    bw = np.geomspace(0.25, 4.0, args.kernels) * np.sqrt(args.dim)
    print(f"{'n':>6} {'fallback ms':>12} {'core ms':>10} {'speedup':>8} {'max |diff|':>11}")
    for n in (int(s) for s in args.sizes.split(",")):
        a = rng.normal(size=(n, args.dim))
        b = rng.normal(size=(n, args.dim)) + 0.3
        t_py = min(timeit.repeat(lambda: _fallback.gaussian_mmd(a, b, bw), number=1, repeat=args.repeat))
        if _core is None:
            print(f"{n:>6} {t_py * 1e3:>12.2f} {'n/a':>10}")
            continue
        t_c = min(timeit.repeat(lambda: _core.gaussian_mmd(a, b, bw), number=1, repeat=args.repeat))
        diff = np.max(np.abs(_core.gaussian_mmd(a, b, bw) - _fallback.gaussian_mmd(a, b, bw)))
        print(f"{n:>6} {t_py * 1e3:>12.2f} {t_c * 1e3:>10.2f} {t_py / t_c:>8.2f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
