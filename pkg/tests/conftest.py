import csv
from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(__file__).parent / "data"


def load_de2000_pairs():
    rows = []
    with open(DATA_DIR / "ciede2000_pairs.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                (
                    np.array([float(row["l1"]), float(row["a1"]), float(row["b1"])]),
                    np.array([float(row["l2"]), float(row["a2"]), float(row["b2"])]),
                    float(row["de00"]),
                )
            )
    return rows


@pytest.fixture(scope="session")
def de2000_pairs():
    return load_de2000_pairs()
