"""Edge dynamics with one strongly coupled band state added.

The resolvent denominator gains a pole term V_s^2/(E_s - eps); its zeros
are a real root below the edge plus complex fourth-quadrant roots: the
spoiler resonance just below E_s and, for small renormalized gaps, the
edge-intrinsic resonance already present without the spoiler.  All residues
plus the two cut integrals reconstruct the amplitudes with psi0(0) = 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .edge_analytics import EdgeProblem, QUAD_OPTS, psi0_edge, psiE_edge
from .errors import DomainError, QuadratureError, RootSearchError
from .measures import w50_density
from .model import Spoiler
from .special_functions import branched_log


@dataclass(frozen=True)
class SpoilerRoots:
    """Zeros of the spoiler-augmented resolvent denominator, with residue data.

    ``eps1`` is the real root below the edge; ``eps2`` the spoiler
    resonance (positive real part, nonpositive imaginary part).  ``extra``
    carries the edge-intrinsic fourth-quadrant resonance when the gap is
    small enough to expose it.  ``weights0`` holds 1/D'(z) per root (the
    level-amplitude residue weights) and ``weights_s`` the spoiler-state
    weights V_s/Q'(z); both are evaluated perturbatively when the
    resonance displacement from E_s underflows double resolution.
    """

    eps1: float
    eps2: complex
    extra: Tuple[complex, ...] = ()
    weights0: Tuple[complex, ...] = ()
    weights_s: Tuple[complex, ...] = ()

    def all_roots(self) -> list:
        return [complex(self.eps1), self.eps2, *self.extra]


def _denom(prob: EdgeProblem, sp: Spoiler, eps) -> complex:
    return (eps - prob.w * branched_log(eps) + prob.ebar0
            + sp.v_s**2 / (sp.e_s - eps))


def _denom_deriv(prob: EdgeProblem, sp: Spoiler, eps) -> complex:
    return 1.0 - prob.w / eps + sp.v_s**2 / (sp.e_s - eps) ** 2


def _newton_complex(prob: EdgeProblem, sp: Spoiler, z0: complex,
                    max_iter: int = 200) -> Optional[complex]:
    z = z0
    trace = []
    for _ in range(max_iter):
        d = _denom(prob, sp, z)
        dp = _denom_deriv(prob, sp, z)
        step = d / dp
        # Damp steps that would jump across the cut or out of the sheet.
        while abs(step) > 0.5 * (abs(z) + prob.w):
            step *= 0.5
        z_new = z - step
        if z_new.imag >= 0.0:
            z_new = complex(z_new.real, 0.5 * z.imag)
        trace.append(z_new)
        if abs(z_new - z) <= 1e-14 * max(1.0, abs(z_new)):
            z = z_new
            break
        z = z_new
    else:
        raise RootSearchError("complex root search did not converge", trace)
    if abs(_denom(prob, sp, z)) > 1e-10 * max(1.0, abs(z)):
        return None
    return z


def find_spoiler_roots(prob: EdgeProblem, sp: Spoiler) -> SpoilerRoots:
    """Real root by bracketed search, complex roots by damped Newton.

    The spoiler resonance is seeded at E_s + V_s^2/D0(E_s) (the first-order
    displacement through the edge denominator); the edge-intrinsic
    resonance at its no-spoiler location.  Residuals are verified < 1e-10.
    """
    if sp.v_s == 0.0:
        raise DomainError("spoiler coupling must be nonzero; use the edge module")
    sp.validate()
    w, ebar0 = prob.w, prob.ebar0

    def d_real(x):
        return x - w * np.log(-x) + ebar0 + sp.v_s**2 / (sp.e_s - x)

    lo = -(ebar0 + sp.v_s**2 / sp.e_s + 10.0 * w + 10.0)
    hi = -1e-300
    # d_real -> +inf as eps -> 0-, monotone increasing on the negative axis
    while d_real(lo) >= 0.0:
        lo *= 2.0
        if lo < -1e12:
            raise RootSearchError("no bracket for the real spoiler root")
    hi = -min(1.0, abs(lo)) * 1e-12
    while d_real(hi) <= 0.0:
        hi *= 1e3
        if hi < lo:
            raise RootSearchError("real spoiler root bracket collapsed")
    eps1 = brentq(d_real, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=300)
    if abs(d_real(eps1)) > 1e-10 * max(1.0, abs(eps1)):
        raise RootSearchError("real root residual exceeds 1e-10")

    def q_deriv(z):
        d0 = z - w * branched_log(z) + ebar0
        return d0 + (z - sp.e_s) * (1.0 - w / z)

    d0_at_es = sp.e_s - w * (np.log(sp.e_s) - 1j * np.pi) + ebar0
    displacement = sp.v_s**2 / d0_at_es
    perturbative = abs(displacement) < 1e-9 * max(1.0, sp.e_s)
    if perturbative:
        # Root indistinguishable from E_s at double resolution: residues in
        # closed perturbative form, O(V_s^4) accurate.
        eps2 = sp.e_s + displacement
        w2_level = sp.v_s**2 / d0_at_es**2
        w2_spoiler = sp.v_s / d0_at_es
    else:
        seed2 = sp.e_s + displacement
        if seed2.imag >= 0.0:
            seed2 = complex(seed2.real, -0.1 * w)
        eps2 = _newton_complex(prob, sp, seed2)
        if eps2 is None or eps2.real <= 0.0:
            raise RootSearchError("spoiler resonance root not found")
        w2_level = 1.0 / _denom_deriv(prob, sp, eps2)
        w2_spoiler = sp.v_s / q_deriv(eps2)

    extra = []
    seed3 = 0.3 * w - 1.25j * np.pi * w
    try:
        root3 = _newton_complex(prob, sp, seed3)
    except RootSearchError:
        root3 = None
    if root3 is not None and root3.real > 0.0 and root3.imag < 0.0 \
            and abs(root3 - eps2) > 1e-6 * max(1.0, abs(eps2)):
        extra.append(root3)

    roots = [complex(eps1), eps2, *extra]
    weights0 = [1.0 / _denom_deriv(prob, sp, eps1), w2_level]
    weights_s = [sp.v_s / q_deriv(eps1), w2_spoiler]
    for z in extra:
        weights0.append(1.0 / _denom_deriv(prob, sp, z))
        weights_s.append(sp.v_s / q_deriv(z))
    return SpoilerRoots(eps1=float(eps1), eps2=eps2, extra=tuple(extra),
                        weights0=tuple(weights0), weights_s=tuple(weights_s))


def _cut_sides(prob: EdgeProblem, sp: Spoiler, y):
    a = prob.ebar0 - 1j * y - prob.w * np.log(y) + sp.v_s**2 / (sp.e_s + 1j * y)
    return a + 1.5j * np.pi * prob.w, a - 0.5j * np.pi * prob.w


def _split_points(roots: SpoilerRoots):
    ys = []
    for z in roots.all_roots():
        if z.imag < 0:
            ys.extend([0.5 * -z.imag, -z.imag, 2.0 * -z.imag])
    return sorted(set(ys))


def _quad_complex(f, a, b, **opts):
    kw = dict(QUAD_OPTS)
    kw.update(opts)
    re, _ = quad(lambda y: f(y).real, a, b, **kw)
    im, _ = quad(lambda y: f(y).imag, a, b, **kw)
    if not (np.isfinite(re) and np.isfinite(im)):
        raise QuadratureError("spoiler cut integral did not converge")
    return complex(re, im)


def _cut_integral(prob, sp, roots, t, weight=None):
    def f(y):
        d_r, d_l = _cut_sides(prob, sp, y)
        val = np.exp(-y * t) / (d_r * d_l)
        if weight is not None:
            val = val * weight(y)
        return val

    total = 0.0j
    lo = 0.0
    for hi in _split_points(roots):
        total += _quad_complex(f, lo, hi)
        lo = hi
    total += _quad_complex(f, lo, np.inf)
    return total


def psi0_spoiler(prob: EdgeProblem, sp: Spoiler, t) -> np.ndarray:
    """Isolated-level amplitude with the spoiler present; psi0(0) = 1."""
    if sp.v_s == 0.0:
        return psi0_edge(prob, t)
    roots = find_spoiler_roots(prob, sp)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t_arr.shape, dtype=complex)
    for i, ti in enumerate(t_arr):
        val = sum(wk * np.exp(-1j * zk * ti)
                  for wk, zk in zip(roots.weights0, roots.all_roots()))
        val += -1j * prob.w * _cut_integral(prob, sp, roots, ti)
        out[i] = val
    return out if np.ndim(t) else complex(out[0])


def psiE_spoiler(prob: EdgeProblem, sp: Spoiler, e: float, t) -> np.ndarray:
    """Band amplitude at energy e != E_s; psi_E(0) = 0.

    Near-degenerate probes (|e - E_s| below a width-scaled window) are
    reported: the pole pair is then nearly pinched and the stationary
    picture needs a principal-value exclusion around the spoiler.
    """
    if sp.v_s == 0.0:
        return psiE_edge(prob, e, t)
    if not 0.0 < e <= prob.gamma:
        raise DomainError("band energy must lie inside (0, gamma)")
    exclusion = 1e-6 * max(prob.w, sp.v_s**2 / sp.e_s)
    if abs(e - sp.e_s) <= exclusion:
        warnings.warn(f"probe energy within {exclusion:.2e} of the spoiler: "
                      "excluded principal-value window")
    v = prob.require_v()
    roots = find_spoiler_roots(prob, sp)
    d_at_e = _denom(prob, sp, e)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t_arr.shape, dtype=complex)
    for i, ti in enumerate(t_arr):
        val = sum(v * wk * np.exp(-1j * zk * ti) / (zk - e)
                  for wk, zk in zip(roots.weights0, roots.all_roots()))
        val += v * np.exp(-1j * e * ti) / d_at_e
        val += 1j * prob.w * v * _cut_integral(
            prob, sp, roots, ti, weight=lambda y: 1.0 / (e + 1j * y))
        out[i] = val
    return out if np.ndim(t) else complex(out[0])


def psiS_spoiler(prob: EdgeProblem, sp: Spoiler, t) -> np.ndarray:
    """Spoiler-state amplitude; psi_S(0) = 0.

    The apparent pole at E_s cancels in (eps - E_s) * denominator, so only
    the resolvent roots and the cut contribute.
    """
    if sp.v_s == 0.0:
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        zeros = np.zeros(t_arr.shape, dtype=complex)
        return zeros if np.ndim(t) else 0.0j
    roots = find_spoiler_roots(prob, sp)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t_arr.shape, dtype=complex)

    def cut_s(ti):
        # Integrand (E_s + i y)/(Q_r Q_l) with Q = (eps - E_s) D0 - V_s^2
        # evaluated on the two cut sides eps = -i y.
        def f(y):
            a = prob.ebar0 - 1j * y - prob.w * np.log(y)
            d_r = a + 1.5j * np.pi * prob.w
            d_l = a - 0.5j * np.pi * prob.w
            eps = -1j * y
            q_r = (eps - sp.e_s) * d_r - sp.v_s**2
            q_l = (eps - sp.e_s) * d_l - sp.v_s**2
            return np.exp(-y * ti) * (sp.e_s + 1j * y) / (q_r * q_l)

        total = 0.0j
        lo = 0.0
        for hi in _split_points(roots):
            total += _quad_complex(f, lo, hi)
            lo = hi
        return total + _quad_complex(f, lo, np.inf)

    for i, ti in enumerate(t_arr):
        val = sum(wk * np.exp(-1j * zk * ti)
                  for wk, zk in zip(roots.weights_s, roots.all_roots()))
        val += 1j * prob.w * sp.v_s * cut_s(ti)
        out[i] = val
    return out if np.ndim(t) else complex(out[0])


@dataclass(frozen=True)
class SpoilerProfile:
    """Interference-averaged stationary distribution with spoiler bookkeeping."""

    e_grid: np.ndarray
    rho: np.ndarray
    rho_spoiler: float
    edge_window: Tuple[float, float]
    vicinity_window: Tuple[float, float]
    edge_population: float
    vicinity_population: float
    level_population: float


def spoiler_profile(prob: EdgeProblem, sp: Spoiler, e_grid,
                    g_density: Optional[float] = None) -> SpoilerProfile:
    """Long-time band distribution, spoiler population, window bookkeeping.

    Only the real root and the direct pole survive the interference
    averaging; the windows follow the repo convention: edge = (0, E_s/2],
    vicinity = |E - E_s| <= 5 max(w, V_s^2/E_s).
    """
    e = np.asarray(e_grid, dtype=float)
    if np.any(e <= 0) or np.any(e > prob.gamma):
        raise DomainError("profile grid must lie inside (0, gamma]")
    v = prob.require_v()
    if sp.v_s == 0.0:
        from .edge_analytics import EdgeDecomposition, stationary_profile
        rho = stationary_profile(prob, e)
        dec = EdgeDecomposition.build(prob)
        eps1 = dec.epsilon0
        rho_s = 0.0
        level = dec.weight0**2
    else:
        roots = find_spoiler_roots(prob, sp)
        eps1 = roots.eps1
        w1 = roots.weights0[0].real
        d_e = _denom(prob, sp, e)
        rho = v**2 * w1**2 / (eps1 - e) ** 2 + v**2 / np.abs(d_e) ** 2
        rho_s = abs(roots.weights_s[0]) ** 2
        level = w1**2
    half_width = 5.0 * max(prob.w, sp.v_s**2 / sp.e_s if sp.e_s else prob.w)
    edge_win = (0.0, sp.e_s / 2.0 if sp.v_s else prob.gamma / 20.0)
    vic_win = (max(sp.e_s - half_width, 0.0), sp.e_s + half_width)
    g = g_density if g_density is not None else prob.w / v**2
    edge_pop = g * _window_integral(e, rho, edge_win)
    vic_pop = g * _window_integral(e, rho, vic_win)
    return SpoilerProfile(e_grid=e, rho=rho, rho_spoiler=float(rho_s),
                          edge_window=edge_win, vicinity_window=vic_win,
                          edge_population=edge_pop, vicinity_population=vic_pop,
                          level_population=float(level))


def _window_integral(e, rho, window):
    lo, hi = window
    mask = (e >= lo) & (e <= hi)
    if mask.sum() < 2:
        return 0.0
    return float(np.trapezoid(rho[mask], e[mask]))


def spoiler_profile_w50(prob: EdgeProblem, sp: Spoiler, n_grid: int = 4000) -> float:
    e = np.linspace(prob.gamma / n_grid, prob.gamma, n_grid)
    return w50_density(e, spoiler_profile(prob, sp, e).rho)
