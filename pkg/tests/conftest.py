import numpy as np
import pytest


def make_scene(bands, materials, rows, cols, seed=0, pure_pixels=True):
    """Synthetic linear-mixing scene with known endmembers and abundances.

    Endmember spectra are random in [0.2, 1.2] so no column is tiny; the
    first `materials` pixels are pure (identity abundance columns) and the
    rest are strict-interior simplex mixtures scaled by 0.9, which keeps the
    pure pixels the unique extreme points.
    """
    rng = np.random.default_rng(seed)
    s0 = rng.uniform(0.2, 1.2, size=(bands, materials))
    n_pix = rows * cols
    a = rng.dirichlet(np.ones(materials), size=n_pix).T * 0.9
    if pure_pixels:
        a[:, :materials] = np.eye(materials)
    cube = (s0 @ a).reshape(bands, rows, cols)
    return s0, a.reshape(materials, rows, cols), cube


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
