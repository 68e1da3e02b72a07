import numpy as np


def fock_dist(u, v):
    """Norm of the difference of two Fock vectors (mode cutoffs must agree)."""
    keys = set(u.amps) | set(v.amps)
    return float(
        np.sqrt(sum(abs(u.amps.get(k, 0j) - v.amps.get(k, 0j)) ** 2 for k in keys))
    )


def grid_dist(a, b):
    """Max entrywise distance of two bivariate grids on jointly trusted degrees."""
    n = min(a.cutoff, b.cutoff)
    deg = min(a.valid_total_degree, b.valid_total_degree, 2 * n - 2)
    idx = np.arange(n)
    mask = idx[:, None] + idx[None, :] <= deg
    diff = np.abs(
        np.asarray(a.coeffs[:n, :n], dtype=complex)
        - np.asarray(b.coeffs[:n, :n], dtype=complex)
    )
    return float(np.max(diff[mask])) if mask.any() else 0.0
