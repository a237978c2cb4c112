import os
import subprocess
import sys

import numpy as np

from palettizer import kernels


def run_backend_probe(force_fallback: bool) -> str:
    env = dict(os.environ)
    env.pop("PALETTIZER_NO_EXT", None)
    if force_fallback:
        env["PALETTIZER_NO_EXT"] = "1"
    out = subprocess.run(
        [sys.executable, "-c", "import palettizer.kernels as k; print(k.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return out.stdout.strip()


def test_env_var_forces_numpy_backend():
    assert run_backend_probe(force_fallback=True) == "numpy"


def test_default_backend_prefers_extension_when_built():
    default = run_backend_probe(force_fallback=False)
    try:
        import palettizer.kernels._colorext  # noqa: F401

        assert default == "cython"
    except ImportError:
        assert default == "numpy"


def test_backend_equivalence_on_random_batch():
    rng = np.random.default_rng(2)
    rgb = rng.integers(0, 256, size=(2000, 3)).astype(np.float64)
    lab = kernels.reference.srgb_to_lab(rgb)
    assert np.abs(lab - kernels.srgb_to_lab(rgb)).max() < 1e-9
    pairs = rng.uniform(-80, 80, size=(2000, 3))
    pairs[:, 0] = rng.uniform(0, 100, 2000)
    d_ref = kernels.reference.ciede2000(lab, pairs)
    d_active = kernels.ciede2000(lab, pairs)
    assert np.abs(d_ref - d_active).max() < 1e-9
