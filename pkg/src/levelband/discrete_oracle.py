"""Brute-force dynamics of the (M+1)-state level-band system.

The static problem is solved exactly through the arrowhead eigensystem
(secular-equation roots, one per interval between band energies), so the
propagation carries no time-step error and scales to M ~ 1e5 without dense
O(M^2) memory.  The moving-level problem is integrated with an adaptive
embedded Runge-Kutta scheme in the interaction picture of the band.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, StiffnessError
from .measures import window_moments
from .model import CouplingStatistics, DiscreteBand, make_rng, sample_power_law_band
from .utils import derive_seed, parallel_map

_CHUNK_ELEMENTS = 8_000_000  # cap on pairwise (roots x levels) temporaries


@dataclass(frozen=True)
class ArrowheadEigenSystem:
    """Eigenvalues and apex components of the level-band arrowhead matrix.

    ``eigenvalues`` interlace the coupled band energies; ``apex`` holds the
    overlap of each eigenvector with the isolated level, so sum(apex**2) = 1.
    Eigenvalues whose eigenvector has no apex weight (deflated duplicates,
    zero-coupling levels) carry apex = 0 and do not move any population.
    """

    eigenvalues: np.ndarray
    apex: np.ndarray
    band: DiscreteBand

    def psi0(self, t_grid) -> np.ndarray:
        """Isolated-level amplitude: sum_k apex_k^2 exp(-i lam_k t)."""
        t = np.atleast_1d(np.asarray(t_grid, dtype=float))
        act = self.apex != 0.0
        lam = self.eigenvalues[act]
        w2 = self.apex[act] ** 2
        return np.exp(-1j * np.outer(t, lam)) @ w2.astype(complex)

    def band_amplitudes(self, t: float) -> np.ndarray:
        """Band amplitudes psi_n(t) = V_n sum_k apex_k^2 exp(-i lam_k t)/(lam_k - E_n)."""
        act = self.apex != 0.0
        lam = self.eigenvalues[act]
        s = (self.apex[act] ** 2) * np.exp(-1j * lam * t)
        energies = self.band.energies
        couplings = self.band.couplings
        out = np.zeros(energies.size, dtype=complex)
        coupled = couplings != 0.0
        idx = np.flatnonzero(coupled)
        step = max(1, _CHUNK_ELEMENTS // max(1, lam.size))
        for start in range(0, idx.size, step):
            rows = idx[start:start + step]
            diff = lam[None, :] - energies[rows, None]
            out[rows] = couplings[rows] * (s[None, :] / diff).sum(axis=1)
        return out


@dataclass(frozen=True)
class AmplitudeTrajectory:
    """Time series of the isolated-level amplitude plus band snapshots.

    ``psi_band`` holds one row of band amplitudes per entry of
    ``band_times`` (a subset of ``times``); ``norm_drift`` is the maximum
    deviation of the total norm from one over those snapshots.
    """

    times: np.ndarray
    psi0: np.ndarray
    band_times: np.ndarray
    psi_band: np.ndarray
    norm_drift: float
    band: DiscreteBand

    @property
    def rho0(self) -> np.ndarray:
        return np.abs(self.psi0) ** 2

    def band_populations(self, index: int = -1) -> np.ndarray:
        return np.abs(self.psi_band[index]) ** 2

    def to_csv(self) -> str:
        """CSV of the level series: time, re/im psi0, rho0, norm bound."""
        lines = ["time,re_psi0,im_psi0,rho0,norm_drift"]
        for t, a in zip(self.times, self.psi0):
            lines.append(
                f"{t:.17g},{a.real:.17g},{a.imag:.17g},{abs(a) ** 2:.17g},{self.norm_drift:.17g}")
        return "\n".join(lines) + "\n"

    def populations_csv(self, index: int = -1) -> str:
        lines = ["energy,rho"]
        rho = self.band_populations(index)
        for e, r in zip(self.band.energies, rho):
            lines.append(f"{e:.17g},{r:.17g}")
        return "\n".join(lines) + "\n"


def _secular_chunked(lam, e0, energies, couplings2):
    """Secular function f and f' at the points lam, chunked to bound memory."""
    f = np.empty_like(lam)
    fp = np.empty_like(lam)
    step = max(1, _CHUNK_ELEMENTS // max(1, energies.size))
    for start in range(0, lam.size, step):
        sl = slice(start, start + step)
        diff = lam[sl, None] - energies[None, :]
        inv = couplings2[None, :] / diff
        f[sl] = lam[sl] - e0 - inv.sum(axis=1)
        fp[sl] = 1.0 + (inv / diff).sum(axis=1)
    return f, fp


def diagonalize_arrowhead(band: DiscreteBand, tol: float = 1e-14,
                          max_iter: int = 200) -> ArrowheadEigenSystem:
    """Roots of f(lam) = lam - E0 - sum V_n^2/(lam - E_n), one per interval.

    Zero-coupling levels split off as exact eigenpairs; exact duplicates
    among the coupled energies are deflated to a single effective coupling
    sqrt(sum V^2) plus (count - 1) eigenvalues pinned at the duplicate
    energy.  Each remaining root is found by safeguarded Newton iteration
    inside its interlacing bracket.
    """
    energies = band.energies
    couplings = band.couplings
    coupled = couplings != 0.0

    zero_eigs = energies[~coupled]
    e_c = energies[coupled]
    v_c = couplings[coupled]

    # Deflate exact duplicates: one representative with the combined weight.
    dup_eigs = []
    if e_c.size:
        uniq, inverse, counts = np.unique(e_c, return_inverse=True, return_counts=True)
        v2 = np.zeros(uniq.size)
        np.add.at(v2, inverse, v_c ** 2)
        for e_dup, c in zip(uniq[counts > 1], counts[counts > 1]):
            dup_eigs.extend([e_dup] * (c - 1))
        e_red, v2_red = uniq, v2
    else:
        e_red, v2_red = e_c, v_c ** 2

    if e_red.size == 0:
        lam_active = np.array([band.e0])
        apex_active = np.array([1.0])
    else:
        lam_active, apex_active = _solve_secular(band.e0, e_red, v2_red, tol, max_iter)

    eigenvalues = np.concatenate([lam_active, zero_eigs, np.asarray(dup_eigs, dtype=float)])
    apex = np.concatenate([apex_active, np.zeros(zero_eigs.size + len(dup_eigs))])
    order = np.argsort(eigenvalues, kind="stable")
    return ArrowheadEigenSystem(eigenvalues=eigenvalues[order], apex=apex[order], band=band)


def _solve_secular(e0, energies, couplings2, tol, max_iter):
    """Safeguarded Newton in pole-relative coordinates.

    Root j lies in (E_{j-1}, E_j).  Far from the isolated level the root
    hugs one pole to within ~V^2/|E - e0|, so each root is parameterized as
    lam = E_p + delta with p the hugged pole and Newton run on
    g(delta) = delta * (lam - e0 - S_other(lam)) - v_p^2, which has no
    cancellation for tiny delta.  A bisection bracket guards every step.
    """
    k = energies.size
    s = float(np.sqrt(couplings2.sum()))
    lo = np.empty(k + 1)
    hi = np.empty(k + 1)
    lo[0] = min(e0, energies[0]) - s - 1.0
    hi[0] = energies[0]
    lo[1:] = energies
    hi[1:-1] = energies[1:]
    hi[-1] = max(e0, energies[-1]) + s + 1.0

    # Hug the pole the root accumulates at: intervals above the isolated
    # level hug their left pole, intervals below hug their right pole.
    mid = 0.5 * (lo + hi)
    pole_idx = np.empty(k + 1, dtype=np.int64)
    pole_idx[0] = 0
    pole_idx[k] = k - 1
    if k > 1:
        inner = np.arange(1, k)
        pole_idx[inner] = np.where(mid[inner] > e0, inner - 1, inner)
    e_p = energies[pole_idx]
    v2_p = couplings2[pole_idx]
    # Adjacent pole energies (candidates must never land exactly on one).
    pole_lo = np.full(k + 1, -np.inf)
    pole_hi = np.full(k + 1, np.inf)
    pole_lo[1:] = energies
    pole_hi[:-1] = energies

    lam = mid.copy()
    active = np.ones(k + 1, dtype=bool)
    eps = np.finfo(float).eps
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        f, fp = _secular_chunked(lam[idx], e0, energies, couplings2)
        neg = f < 0
        lo[idx[neg]] = lam[idx[neg]]
        hi[idx[~neg]] = lam[idx[~neg]]

        delta = lam[idx] - e_p[idx]
        pole_term = v2_p[idx] / delta
        s_other = (lam[idx] - e0 - f) - pole_term  # = sum_{n != p} v_n^2/(lam - E_n)
        sp_other = (fp - 1.0) - pole_term / delta
        base = lam[idx] - e0 - s_other
        g = delta * base - v2_p[idx]
        gp = base + delta * (1.0 + sp_other)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = g / gp
        cand = e_p[idx] + (delta - step)
        bad = ~np.isfinite(cand) | (cand < lo[idx]) | (cand > hi[idx]) \
            | (cand == pole_lo[idx]) | (cand == pole_hi[idx])
        cand = np.where(bad, 0.5 * (lo[idx] + hi[idx]), cand)
        scale = np.maximum(1.0, np.abs(cand))
        # Stop on a collapsed bracket, a sub-roundoff step, or once |f| is
        # below its own evaluation noise (distance to the root is then
        # |f|/f' which is far below double resolution near the poles).
        f_floor = 64.0 * eps * (np.abs(lam[idx]) + abs(e0)
                                + np.abs(s_other) + np.abs(pole_term))
        done = (np.abs(cand - lam[idx]) <= tol * scale) \
            | ((hi[idx] - lo[idx]) <= 4.0 * eps * scale) \
            | (np.abs(f) <= f_floor)
        lam[idx] = cand
        active[idx] = ~done
    apex = 1.0 / np.sqrt(_secular_chunked(lam, e0, energies, couplings2)[1])
    return lam, apex


def evolve_static(band: DiscreteBand, t_grid, store_band: str = "last") -> AmplitudeTrajectory:
    """Exact switch-on dynamics from psi0(0) = 1 via the eigensystem.

    ``store_band`` selects where band amplitudes are kept: "last", "all"
    or "none".  The interaction is zero for t < 0 and full from t = 0.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) < 0):
        raise DomainError("t_grid must be ascending and start at 0")
    eig = diagonalize_arrowhead(band)
    psi0 = eig.psi0(t)
    if store_band == "all":
        b_idx = np.arange(t.size)
    elif store_band == "last":
        b_idx = np.array([t.size - 1])
    elif store_band == "none":
        b_idx = np.array([], dtype=int)
    else:
        raise DomainError("store_band must be one of 'last', 'all', 'none'")
    psi_band = np.array([eig.band_amplitudes(t[i]) for i in b_idx])
    drift = 0.0
    for row, i in zip(psi_band, b_idx):
        norm = abs(psi0[i]) ** 2 + float((np.abs(row) ** 2).sum())
        drift = max(drift, abs(norm - 1.0))
    return AmplitudeTrajectory(times=t, psi0=psi0, band_times=t[b_idx],
                               psi_band=psi_band, norm_drift=drift, band=band)


def evolve_moving(band: DiscreteBand, e_o: float, alpha: float, t_span,
                  rtol: float = 1e-10, atol: float = 1e-12,
                  t_eval=None, detuning_factor: float = 10.0,
                  enforce_span: bool = True) -> AmplitudeTrajectory:
    """Parabolic sweep E0(t) = e_o - alpha t^2 through the band.

    Integrates in the interaction picture of the band (phases exp(-i E_n t)
    factored out) so the step size is set by the couplings and the sweep,
    not by the band cutoff.  Starts from psi0(t_min) = 1.
    """
    if alpha < 0:
        raise DomainError("sweep rate alpha must be >= 0 (0 freezes the level)")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise DomainError("t_span must be a nonempty interval")
    span = max(abs(band.energies[0]), abs(band.energies[-1]), 1.0)
    if enforce_span and alpha > 0:
        for t_edge in (t0, t1):
            if t_edge != 0.0 and abs(e_o - alpha * t_edge ** 2) < detuning_factor * span:
                raise DomainError(
                    "sweep endpoints must start/end at detuning >= "
                    f"{detuning_factor} x band span (got t={t_edge})")

    energies = band.energies
    couplings = band.couplings.astype(complex)
    m = energies.size

    def rhs(t, y):
        phase = (e_o * t - alpha * t ** 3 / 3.0) - energies * t
        z = np.exp(1j * phase)
        dy = np.empty_like(y)
        dy[0] = -1j * np.sum(couplings * z * y[1:])
        dy[1:] = -1j * couplings * np.conj(z) * y[0]
        return dy

    y0 = np.zeros(m + 1, dtype=complex)
    y0[0] = 1.0
    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=t_eval, dense_output=False)
    if not sol.success:
        raise StiffnessError(f"moving-level propagation failed: {sol.message}")
    times = sol.t
    y = sol.y  # (m+1, n_times)
    norms = np.abs(y[0]) ** 2 + (np.abs(y[1:]) ** 2).sum(axis=0)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > 1e-8:
        warnings.warn(f"norm drift {drift:.2e} exceeds 1e-8; tighten tolerances")
    theta = e_o * times - alpha * times ** 3 / 3.0
    psi0 = y[0] * np.exp(-1j * theta)
    psi_band = (y[1:, -1] * np.exp(-1j * energies * times[-1])).reshape(1, -1)
    return AmplitudeTrajectory(times=times, psi0=psi0,
                               band_times=times[-1:], psi_band=psi_band,
                               norm_drift=drift, band=band)


def population_moments(traj: AmplitudeTrajectory, window, index: int = -1):
    """(total, mean energy, W50, FWHM) over band levels inside the window."""
    if traj.psi_band.size == 0:
        raise DomainError("trajectory stores no band amplitudes")
    rho = traj.band_populations(index)
    return window_moments(traj.band.energies, rho, window)


@dataclass(frozen=True)
class PowerLawScan:
    """Ensemble-averaged decay of the level into a power-law-coupled band."""

    t_grid: np.ndarray
    rho_mean: np.ndarray
    plateau: float
    slope_times: np.ndarray
    slopes: np.ndarray
    realizations: int


def power_law_decay_scan(stats: CouplingStatistics, m: int, energy_span, e0: float,
                         t_grid, seed: int, realizations: int = 20,
                         workers: int = 1) -> PowerLawScan:
    """Average rho0(t) over random power-law bands; report plateau and slope.

    The plateau is the late-window mean of rho0 and the running slope is
    d ln(rho0 - plateau) / d ln t, left empirical: no target exponent is
    asserted for the intermediate power-law regimes.
    """
    if realizations < 1:
        raise DomainError("need at least one realization")
    t = np.asarray(t_grid, dtype=float)

    def one(i: int) -> np.ndarray:
        band = sample_power_law_band(stats, m, energy_span, e0, derive_seed(seed, i))
        return np.abs(diagonalize_arrowhead(band).psi0(t)) ** 2

    rho = np.mean(parallel_map(one, range(realizations), workers), axis=0)
    tail = max(2, t.size // 5)
    plateau = float(rho[-tail:].mean())
    pos = t > 0
    excess = np.maximum(rho[pos] - plateau, 1e-300)
    slopes = np.gradient(np.log(excess), np.log(t[pos]))
    return PowerLawScan(t_grid=t, rho_mean=rho, plateau=plateau,
                        slope_times=t[pos], slopes=slopes,
                        realizations=realizations)
