import numpy as np

from nlscap import ModeGrid, Spectrum


def random_spectrum(rng, n, P0=1.0, omega0=0.05):
    """Spectrum with random direction and power exactly ``P0``."""
    grid = ModeGrid(n, omega0)
    q = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    q *= np.sqrt(P0 / np.sum(np.abs(q) ** 2))
    return Spectrum(grid, q)
