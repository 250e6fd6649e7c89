"""Closed-form treatment of the uniform semi-infinite band with an edge.

Amplitudes are reconstructed from the resolvent 1/(eps - w log(-eps) + ebar0)
with the branch cut of the log along the negative imaginary axis: a real
pole below the edge (Lambert-function position), an optional fourth-quadrant
resonance root exposed by the rotated cut, and two semi-infinite integrals
along the cut.  The amplitude convention is physical: psi0(0) = 1.

Valid for times short of the Heisenberg time of whatever discretization the
results are compared against; the upper band cutoff only enters through the
renormalized gap ebar0 = -e0 + w log(gamma).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, QuadratureError, RootSearchError
from .measures import w50_density
from .model import ContinuumEdgeParams
from .special_functions import branched_log, lambert_w0_exp

QUAD_OPTS = dict(limit=400, epsabs=1e-12, epsrel=1e-9)


@dataclass(frozen=True)
class EdgeProblem:
    """Scale parameters of the edge problem.

    ``w`` is the rate/width scale g V^2, ``ebar0`` the renormalized gap,
    ``v`` the single-level coupling (needed for band amplitudes) and
    ``gamma`` the band cutoff used for profile domains.
    """

    w: float
    ebar0: float
    v: Optional[float] = None
    gamma: float = 40.0

    def __post_init__(self):
        if self.w <= 0:
            raise DomainError("w must be positive")
        if not np.isfinite(self.ebar0):
            raise DomainError("ebar0 must be finite")

    @classmethod
    def from_params(cls, params: ContinuumEdgeParams) -> "EdgeProblem":
        return cls(w=params.w, ebar0=params.ebar0, v=params.v, gamma=params.gamma)

    def require_v(self) -> float:
        if self.v is None:
            raise DomainError("band amplitudes need the coupling v")
        return self.v


def _denominator(prob: EdgeProblem, eps) -> complex:
    return eps - prob.w * branched_log(eps) + prob.ebar0


def pole_epsilon0(prob: EdgeProblem) -> float:
    """Real negative resolvent pole: the Stark-shifted level position.

    Solves eps - w log(-eps) + ebar0 = 0 through the principal Lambert
    branch; evaluated in log form so huge ebar0/w cannot overflow.
    """
    return -prob.w * lambert_w0_exp(prob.ebar0 / prob.w - np.log(prob.w))


def residue_weight(prob: EdgeProblem, eps0: Optional[float] = None) -> float:
    """Weight 1/(1 - w/eps0) of the real pole; in (0, 1) for ebar0 > 0."""
    if eps0 is None:
        eps0 = pole_epsilon0(prob)
    return 1.0 / (1.0 - prob.w / eps0)


def resonance_root(prob: EdgeProblem) -> Optional[complex]:
    """Fourth-quadrant zero of the resolvent denominator, if present.

    The rotated branch cut exposes part of the second sheet; for
    ebar0 < w log(3 pi w / 2) the denominator has one zero with
    Re > 0 > Im whose residue the time decomposition must include.
    """
    w = prob.w
    # Imaginary part of the root lies in (pi w, 3 pi w / 2).
    z = 0.3 * w - 1.25j * np.pi * w
    converged = False
    for _ in range(200):
        dz = _denominator(prob, z) / (1.0 - w / z)
        z_new = z - dz
        if z_new.imag > -1e-12 * w:
            z_new = complex(z_new.real, -0.1 * w)
        z = z_new
        if abs(dz) <= 1e-14 * max(1.0, abs(z)):
            converged = True
            break
    if not converged:
        return None
    if z.real <= 0.0 or z.imag >= 0.0:
        return None
    if abs(_denominator(prob, z)) > 1e-10 * max(1.0, abs(z)):
        return None
    return z


@dataclass(frozen=True)
class EdgeDecomposition:
    """Pole data of the edge resolvent plus handles for the cut integrals."""

    problem: EdgeProblem
    epsilon0: float
    weight0: float
    resonance: Optional[complex]
    resonance_weight: complex

    @classmethod
    def build(cls, prob: EdgeProblem) -> "EdgeDecomposition":
        eps0 = pole_epsilon0(prob)
        if abs(_denominator(prob, eps0)) > 1e-12 * max(1.0, abs(eps0)):
            raise RootSearchError("Lambert pole fails its defining equation")
        res = resonance_root(prob)
        res_w = 1.0 / (1.0 - prob.w / res) if res is not None else 0.0j
        return cls(problem=prob, epsilon0=eps0, weight0=residue_weight(prob, eps0),
                   resonance=res, resonance_weight=res_w)

    def cut_sides(self, y):
        """Denominator on the two sides of the cut at eps = -i y."""
        a = self.problem.ebar0 - 1j * y - self.problem.w * np.log(y)
        w = self.problem.w
        return a + 1.5j * np.pi * w, a - 0.5j * np.pi * w


def _quad_complex(f, a, b, points=None, **opts):
    kw = dict(QUAD_OPTS)
    kw.update(opts)
    if points is not None and np.isfinite(b):
        kw["points"] = points
    re, re_err = quad(lambda y: f(y).real, a, b, **kw)
    im, im_err = quad(lambda y: f(y).imag, a, b, **kw)
    if not (np.isfinite(re) and np.isfinite(im)):
        raise QuadratureError("cut integral did not converge")
    return complex(re, im), re_err + im_err


def _cut_psi0(dec: EdgeDecomposition, t: float) -> complex:
    w = dec.problem.w

    def f(y):
        d_r, d_l = dec.cut_sides(y)
        return np.exp(-y * t) / (d_r * d_l)

    split = _cut_split_points(dec)
    total = 0.0j
    lo = 0.0
    for hi in split:
        val, _ = _quad_complex(f, lo, hi)
        total += val
        lo = hi
    val, _ = _quad_complex(f, lo, np.inf)
    total += val
    return -1j * w * total


def _cut_psi_e(dec: EdgeDecomposition, e: float, t: float) -> complex:
    w = dec.problem.w
    v = dec.problem.require_v()

    def f(y):
        d_r, d_l = dec.cut_sides(y)
        return np.exp(-y * t) / ((e + 1j * y) * d_r * d_l)

    split = _cut_split_points(dec)
    total = 0.0j
    lo = 0.0
    for hi in split:
        val, _ = _quad_complex(f, lo, hi)
        total += val
        lo = hi
    val, _ = _quad_complex(f, lo, np.inf)
    total += val
    return 1j * w * v * total


def _cut_split_points(dec: EdgeDecomposition):
    """Split the cut integral where a nearby resonance sharpens the integrand."""
    if dec.resonance is None:
        return []
    y_res = -dec.resonance.imag
    return sorted({0.5 * y_res, y_res, 2.0 * y_res})


def psi0_edge(prob: EdgeProblem, t) -> np.ndarray:
    """Isolated-level amplitude psi0(t) with psi0(0) = 1.

    Real-pole residue plus (when present) the fourth-quadrant resonance
    residue minus the branch-cut relaxation integral.
    """
    dec = EdgeDecomposition.build(prob)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise DomainError("switch-on dynamics is defined for t >= 0")
    out = np.empty(t_arr.shape, dtype=complex)
    for i, ti in enumerate(t_arr):
        val = dec.weight0 * np.exp(-1j * dec.epsilon0 * ti)
        if dec.resonance is not None:
            val += dec.resonance_weight * np.exp(-1j * dec.resonance * ti)
        val += _cut_psi0(dec, ti)
        out[i] = val
    return out if np.ndim(t) else complex(out[0])


def psiE_edge(prob: EdgeProblem, e: float, t) -> np.ndarray:
    """Band amplitude psi_E(t) at energy e in (0, gamma); psi_E(0) = 0."""
    if not 0.0 < e <= prob.gamma:
        raise DomainError("band energy must lie inside (0, gamma)")
    if e < 1e-9:
        warnings.warn("band energy within 1e-9 of the edge: log(-E) nearly singular")
    v = prob.require_v()
    dec = EdgeDecomposition.build(prob)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise DomainError("switch-on dynamics is defined for t >= 0")
    d_at_e = _denominator(prob, e)  # complex: log(-E) = log E - i pi
    out = np.empty(t_arr.shape, dtype=complex)
    for i, ti in enumerate(t_arr):
        val = v * dec.weight0 * np.exp(-1j * dec.epsilon0 * ti) / (dec.epsilon0 - e)
        if dec.resonance is not None:
            val += v * dec.resonance_weight * np.exp(-1j * dec.resonance * ti) \
                / (dec.resonance - e)
        val += v * np.exp(-1j * e * ti) / d_at_e
        val += _cut_psi_e(dec, e, ti)
        out[i] = val
    return out if np.ndim(t) else complex(out[0])


def stationary_profile(prob: EdgeProblem, e_grid) -> np.ndarray:
    """Long-time band population density with interference terms averaged out.

    Sum of the two surviving pole intensities: the Lambert-pole Lorentzian
    shifted below the edge and the direct term with the squared modulus of
    the complex denominator at real E > 0.  Cross terms oscillate at
    frequency (eps0 - E) and average to zero; decaying pieces are dropped.
    """
    e = np.asarray(e_grid, dtype=float)
    if np.any(e <= 0) or np.any(e > prob.gamma):
        raise DomainError("profile grid must lie inside (0, gamma]")
    v = prob.require_v()
    dec = EdgeDecomposition.build(prob)
    term_pole = v**2 / ((dec.epsilon0 - e) ** 2 * (1.0 - prob.w / dec.epsilon0) ** 2)
    d_e = e - prob.w * np.log(e) + prob.ebar0
    term_direct = v**2 / (d_e**2 + (np.pi * prob.w) ** 2)
    return term_pole + term_direct


def stationary_population(prob: EdgeProblem) -> float:
    """Long-time isolated-level population from the real-pole residue."""
    return residue_weight(prob) ** 2


@dataclass(frozen=True)
class TailFit:
    """Least-squares fit of the slow relaxation stage."""

    coefficient: float
    rel_residual: float
    regime_warning: bool
    times: np.ndarray
    envelope: np.ndarray


def tail_law_fit(prob: EdgeProblem, t_grid) -> TailFit:
    """Fit the envelope of rho0(t) - rho0(inf) against c/(w t log(w t)).

    The deviation oscillates at the pole frequency; its envelope is
    2 r |cut(t)| + |cut(t)|^2 with r the pole weight, which is what the fit
    uses.  A regime warning is raised when the fit residual exceeds 20%.
    """
    t = np.asarray(t_grid, dtype=float)
    if np.any(prob.w * t <= 1.0):
        raise DomainError("tail fit needs w t > 1 throughout the grid")
    if (prob.w * t[0] * np.log(prob.w * t[0])) ** 2 < 9.0:
        warnings.warn("tail grid starts before the slow stage is established")
    dec = EdgeDecomposition.build(prob)
    amp = np.empty(t.size, dtype=complex)
    for i, ti in enumerate(t):
        amp[i] = _cut_psi0(dec, ti)
        if dec.resonance is not None:
            amp[i] += dec.resonance_weight * np.exp(-1j * dec.resonance * ti)
    env = 2.0 * dec.weight0 * np.abs(amp) + np.abs(amp) ** 2
    model = 1.0 / (prob.w * t * np.log(prob.w * t))
    coeff = float(np.dot(env, model) / np.dot(model, model))
    resid = float(np.linalg.norm(env - coeff * model) / np.linalg.norm(env))
    warn = resid > 0.20
    if warn:
        warnings.warn(f"tail fit residual {resid:.1%} exceeds 20%: outside the slow regime")
    return TailFit(coefficient=coeff, rel_residual=resid, regime_warning=warn,
                   times=t, envelope=env)


@dataclass(frozen=True)
class TransferSurface:
    """Near-edge transferred population over a (gap, energy) grid.

    ``gaps`` are bare gaps in units of w (|e0|/w); ``cumulative`` holds the
    integrated near-edge population as a function of the upper energy
    limit; ``total_transfer`` is 1 - |psi0(inf)|^2 per gap.
    """

    gaps: np.ndarray
    e_grid: np.ndarray
    cumulative: np.ndarray  # (n_gaps, n_e): g * integral of rho up to E
    near_edge_fraction: np.ndarray  # (n_gaps,): full integral up to gamma/100
    total_transfer: np.ndarray


def edge_transfer_surface(w: float, gaps, gamma: float = 40.0,
                          g_density: float = 100.0, n_e: int = 200) -> TransferSurface:
    """Population transferred next to the edge as a function of the gap.

    For each scaled gap |e0|/w (so ebar0 = w (gap + log gamma)) the
    stationary profile is integrated from the edge up to gamma/100; the
    returned surface holds the cumulative integral as a function of the
    upper limit, plus the total transferred fraction from the pole residue.
    """
    gaps_arr = np.asarray(gaps, dtype=float)
    v = float(np.sqrt(w / g_density))
    e_grid = np.linspace(gamma / 100.0 / n_e, gamma / 100.0, n_e)
    cumulative = np.empty((gaps_arr.size, n_e))
    fraction = np.empty(gaps_arr.size)
    total = np.empty(gaps_arr.size)
    for i, gap in enumerate(gaps_arr):
        prob = EdgeProblem(w=w, ebar0=w * (gap + np.log(gamma)), v=v, gamma=gamma)
        rho = stationary_profile(prob, e_grid)
        inner = np.concatenate([[0.0], np.cumsum(
            0.5 * (rho[1:] + rho[:-1]) * np.diff(e_grid))])
        inner += rho[0] * e_grid[0]  # leading sliver down to the edge
        cumulative[i] = g_density * inner
        fraction[i] = cumulative[i, -1]
        total[i] = 1.0 - stationary_population(prob)
    return TransferSurface(gaps=gaps_arr, e_grid=e_grid, cumulative=cumulative,
                           near_edge_fraction=fraction, total_transfer=total)


def profile_w50(prob: EdgeProblem, n_grid: int = 2000) -> float:
    """W50 width of the stationary profile over (0, gamma]."""
    e = np.linspace(prob.gamma / n_grid, prob.gamma, n_grid)
    return w50_density(e, stationary_profile(prob, e))
