"""Width and moment measures used repo-wide on population profiles.

Two widths are reported everywhere: the FWHM of the interpolated profile
and W50, the smallest energy below which half of the window's population
lies.  W50 is the default in figure-facing code because the profiles here
carry heavy 1/E^2 tails that make the FWHM fragile.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError


def w50_width(energies, weights) -> float:
    """Smallest E* with cumulative weight >= half the total.

    ``weights`` are per-point populations (discrete levels) or density
    samples times grid weights; the cumulative is interpolated linearly
    between points.
    """
    e = np.asarray(energies, dtype=float)
    p = np.asarray(weights, dtype=float)
    if e.size == 0:
        raise DomainError("empty window")
    order = np.argsort(e)
    e, p = e[order], p[order]
    total = p.sum()
    if total <= 0:
        return 0.0
    cum = np.cumsum(p)
    half = 0.5 * total
    idx = int(np.searchsorted(cum, half))
    if idx == 0:
        return float(e[0])
    c0, c1 = cum[idx - 1], cum[idx]
    if c1 == c0:
        return float(e[idx])
    frac = (half - c0) / (c1 - c0)
    return float(e[idx - 1] + frac * (e[idx] - e[idx - 1]))


def w50_density(e_grid, rho) -> float:
    """W50 of a continuous density sampled on a grid (trapezoid weights)."""
    e = np.asarray(e_grid, dtype=float)
    r = np.asarray(rho, dtype=float)
    if e.size < 2:
        raise DomainError("grid too small for a density width")
    weights = np.empty_like(r)
    de = np.diff(e)
    weights[0] = 0.5 * de[0] * r[0]
    weights[-1] = 0.5 * de[-1] * r[-1]
    weights[1:-1] = 0.5 * (de[:-1] + de[1:]) * r[1:-1]
    return w50_width(e, weights)


def fwhm_width(e_grid, rho) -> float:
    """Full width at half maximum of the linearly interpolated profile.

    Profiles peaked at the left grid edge (the usual case here) yield the
    distance from the left edge to the half-maximum crossing.
    """
    e = np.asarray(e_grid, dtype=float)
    r = np.asarray(rho, dtype=float)
    if e.size < 2:
        raise DomainError("grid too small for FWHM")
    imax = int(np.argmax(r))
    half = 0.5 * r[imax]
    right = imax
    while right + 1 < r.size and r[right + 1] >= half:
        right += 1
    if right + 1 < r.size:
        e_r = _cross(e[right], e[right + 1], r[right], r[right + 1], half)
    else:
        e_r = e[-1]
    left = imax
    while left - 1 >= 0 and r[left - 1] >= half:
        left -= 1
    if left - 1 >= 0:
        e_l = _cross(e[left - 1], e[left], r[left - 1], r[left], half)
    else:
        e_l = e[0]
    return float(e_r - e_l)


def _cross(x0, x1, y0, y1, level):
    if y1 == y0:
        return x1
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def window_moments(energies, weights, window) -> tuple:
    """(total, mean, w50, fwhm) of the populations inside an energy window."""
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise DomainError("window must be a nonempty interval")
    e = np.asarray(energies, dtype=float)
    p = np.asarray(weights, dtype=float)
    mask = (e >= lo) & (e <= hi)
    if not np.any(mask):
        raise DomainError("window contains no levels")
    e_w, p_w = e[mask], p[mask]
    total = float(p_w.sum())
    mean = float((e_w * p_w).sum() / total) if total > 0 else 0.5 * (lo + hi)
    w50 = w50_width(e_w, p_w)
    fw = fwhm_width(e_w, p_w) if e_w.size >= 2 else 0.0
    return total, mean, w50, fw
