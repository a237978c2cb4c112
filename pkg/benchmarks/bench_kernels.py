#!/usr/bin/env python3
"""Benchmark the compiled color kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [N]

Times each kernel over N random inputs (default 2,000,000) for both
backends and verifies they agree. Also times one full segmentation of a
synthetic card under each backend via PALETTIZER_NO_EXT.
"""

import os
import subprocess
import sys
import time

import numpy as np

from palettizer.kernels import reference

try:
    from palettizer.kernels import _colorext
except ImportError:
    _colorext = None


def timeit(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2_000_000
    rng = np.random.default_rng(0)
    rgb = rng.integers(0, 256, size=(n, 3)).astype(np.float64)
    lab1 = np.column_stack([rng.uniform(0, 100, n), rng.uniform(-100, 100, n), rng.uniform(-100, 100, n)])
    lab2 = lab1[::-1].copy()

    print(f"color kernels over {n:,} items (best of 3)\n")
    print(f"{'kernel':<14} {'numpy':>10} {'cython':>10} {'speedup':>9} {'max |diff|':>12}")

    rows = [
        ("srgb_to_lab", (rgb,)),
        ("lab_to_srgb", (lab1,)),
        ("ciede2000", (lab1, lab2)),
    ]
    for name, args in rows:
        t_np, out_np = timeit(getattr(reference, name), *args)
        if _colorext is None:
            print(f"{name:<14} {t_np:>9.3f}s {'n/a':>10} {'n/a':>9} {'n/a':>12}")
            continue
        t_cy, out_cy = timeit(getattr(_colorext, name), *args)
        diff = np.abs(out_np.astype(np.float64) - out_cy.astype(np.float64)).max()
        print(f"{name:<14} {t_np:>9.3f}s {t_cy:>9.3f}s {t_np / t_cy:>8.2f}x {diff:>12.2e}")

    print("\nend-to-end segmentation of one 200x160 card:")
    snippet = (
        "import time, numpy as np;"
        "from palettizer.synth import flat_card;"
        "from palettizer.extract import segment_image;"
        "card = flat_card(np.random.default_rng(5));"
        "segment_image(card.image);"  # warmup
        "ts = [];"
        "\nfor _ in range(5):\n"
        "    t0 = time.perf_counter(); segment_image(card.image); ts.append(time.perf_counter() - t0)\n"
        "print(f'  {min(ts):.4f}s (best of 5)')"
    )
    for label, env_val in (("cython", None), ("numpy fallback", "1")):
        if env_val is None and _colorext is None:
            continue
        env = dict(os.environ)
        env.pop("PALETTIZER_NO_EXT", None)
        if env_val:
            env["PALETTIZER_NO_EXT"] = env_val
        print(f"{label}:", flush=True)
        subprocess.run([sys.executable, "-c", snippet], env=env, check=True)


if __name__ == "__main__":
    main()
