"""Time the compiled and pure-Python grid kernels on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--size 512]

Each kernel runs on a generated scene occupancy grid.  Outputs are compared
between backends before timing, so a speedup is never reported for a kernel
that disagrees.
"""

from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from objnav.kernels import get_backend
from objnav.simulator import SceneParams, generate_scene


def padded(occ: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros((size, size), dtype=np.uint8)
    h, w = min(size, occ.shape[0]), min(size, occ.shape[1])
    out[:h, :w] = occ[:h, :w]
    return out


def cases(size: int, seed: int):
    scene, _ = generate_scene(seed, SceneParams())
    occ = padded(scene.occupancy.astype(np.uint8), size)
    free = np.flatnonzero(occ.ravel() == 0)
    rng = np.random.default_rng(seed)
    s, g = free[0], free[-1]  # opposite corners of the scene
    n = occ.shape[1]
    trail = np.zeros_like(occ)
    trail[size // 2 - 20:size // 2 + 20, size // 2] = 1
    angles = np.linspace(-math.pi, math.pi, 256, endpoint=False)
    dx, dy = np.cos(angles), np.sin(angles)
    sources = rng.choice(free, 16, replace=False).astype(np.int64)
    ox, oy = (s // n + 0.5) * 0.05, (s % n + 0.5) * 0.05
    return {
        "astar": lambda k: k.astar(occ, s // n, s % n, g // n, g % n),
        "distance_field": lambda k: k.distance_field(occ, sources, 0.05),
        "raycast x256": lambda k: k.raycast(occ, 0.05, ox, oy, dx, dy, 5.0),
        "nearest_frontier": lambda k: k.nearest_frontier(occ, trail, 20, size // 2, size // 2),
    }


def same(a, b) -> bool:
    if isinstance(a, tuple | list):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=512)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    try:
        fast = get_backend("cython")
    except ImportError:
        raise SystemExit("compiled extension not built; run `pip install -e .` first")
    slow = get_backend("python")

    print(f"{'kernel':<18} {'cython ms':>10} {'python ms':>10} {'speedup':>8}")
    for name, fn in cases(args.size, args.seed).items():
        if not same(fn(fast), fn(slow)):
            raise SystemExit(f"{name}: backends disagree")
        tc = min(timeit.repeat(lambda: fn(fast), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(slow), number=1, repeat=max(1, args.repeat // 2)))
        print(f"{name:<18} {tc * 1e3:>10.3f} {tp * 1e3:>10.3f} {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
