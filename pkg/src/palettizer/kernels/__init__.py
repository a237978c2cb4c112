"""Color kernel backend selection.

The compiled extension (`palettizer.kernels._colorext`) is preferred when it
was built; otherwise the vectorized numpy reference is used. Both compute
the same math in float64 and agree to ~1e-12. Set PALETTIZER_NO_EXT=1 to
force the numpy backend (used by the benchmark and equivalence tests).
"""

import os

from . import reference

BACKEND = "numpy"
srgb_to_lab = reference.srgb_to_lab
lab_to_srgb = reference.lab_to_srgb
ciede2000 = reference.ciede2000

if not os.environ.get("PALETTIZER_NO_EXT"):
    try:
        from . import _colorext

        srgb_to_lab = _colorext.srgb_to_lab
        lab_to_srgb = _colorext.lab_to_srgb
        ciede2000 = _colorext.ciede2000
        BACKEND = "cython"
    except ImportError:
        pass

__all__ = ["BACKEND", "srgb_to_lab", "lab_to_srgb", "ciede2000", "reference"]
