"""Timing comparison of the two contact-solver backends.

The hot loop of event detection is the tangency solve for a relative pose.
This script times the compiled extension against the pure-Python reference
on identical random poses, cold (coarse scan plus Newton) and warm (seeded
from the previous solution, as the event loop does along a trajectory).

Run:  python3 benchmarks/bench_kernel.py [--n 2000] [--a 2.0] [--b 1.0]
"""

import argparse
import math
import time

import numpy as np

from hardpair._kernel import _ref

try:
    from hardpair._kernel import _fast
except ImportError:
    _fast = None


def _time_cold(impl, a, b, poses):
    t0 = time.perf_counter()
    for th, ps in poses:
        d, s1, s2, resid, ok = impl.ellipse_contact(a, b, th, ps)
        if not ok:
            raise RuntimeError(f"solve failed at ({th}, {ps})")
    return (time.perf_counter() - t0) / len(poses)


def _time_warm(impl, a, b, poses):
    # walk a smooth pose path so each solve can seed the next
    s1 = s2 = d = 0.0
    have = False
    t0 = time.perf_counter()
    for th, ps in poses:
        d, s1, s2, resid, ok = impl.ellipse_contact(
            a, b, th, ps, s1, s2, d, have)
        have = ok
    return (time.perf_counter() - t0) / len(poses)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2000, help="number of poses")
    ap.add_argument("--a", type=float, default=2.0)
    ap.add_argument("--b", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    poses = rng.uniform(0.0, 2.0 * math.pi, (args.n, 2))
    t = np.linspace(0.0, 2.0 * math.pi, args.n)
    path = np.stack([1.3 * t + 0.4 * np.sin(3 * t), 0.9 * t], axis=1)

    impls = [("python", _ref)]
    if _fast is not None:
        impls.append(("compiled", _fast))
    else:
        print("compiled extension not built; timing the reference only")

    worst = 0.0
    if _fast is not None:
        for th, ps in poses[: min(args.n, 500)]:
            d_r = _ref.ellipse_contact(args.a, args.b, th, ps)[0]
            d_f = _fast.ellipse_contact(args.a, args.b, th, ps)[0]
            worst = max(worst, abs(d_r - d_f))
        print(f"backend agreement over {min(args.n, 500)} poses: {worst:.3e}")

    rows = []
    for name, impl in impls:
        cold = _time_cold(impl, args.a, args.b, poses)
        warm = _time_warm(impl, args.a, args.b, path)
        rows.append((name, cold, warm))

    print(f"\n{args.n} solves, ellipse a={args.a} b={args.b}")
    print(f"{'backend':<10} {'cold us/solve':>14} {'warm us/solve':>14}")
    for name, cold, warm in rows:
        print(f"{name:<10} {cold * 1e6:>14.2f} {warm * 1e6:>14.2f}")
    if len(rows) == 2:
        print(f"\nspeedup: cold {rows[0][1] / rows[1][1]:.1f}x, "
              f"warm {rows[0][2] / rows[1][2]:.1f}x")


if __name__ == "__main__":
    main()
