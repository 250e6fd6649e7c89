"""Ensemble-averaged populations over bands with random coupling strengths.

The central object is the coupling-statistics functional
F(eps, xi, theta, tau) = int dE int dV g(V) (exp(i theta V^2/(xi - E)
- i tau V^2/(eps - E)) - 1) and its small-frequency kernels G and J.  The
two-moment model (second moment w, fourth moment u) truncates F after the
quadratic Taylor term and admits closed forms used by the stationary
distribution; general coupling densities go through quadrature.

Sign conventions are fixed by requiring that the first-order truncation
reproduce the uniform-band resolvent denominator eps - w log(-eps) + ebar0,
so the u -> 0 limit of the stationary distribution collapses onto the
uniform band's displaced-pole picture.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, ModelRegimeError, QuadratureError
from .measures import fwhm_width, w50_density
from .model import CouplingStatistics


def _log_interval(z: complex, gamma: float) -> complex:
    """int_0^gamma dE/(z - E) for z off the cut, = log(-z) - log(gamma - z)."""
    return np.log(-z) - np.log(gamma - z)


def _inv_square_interval(z: complex, gamma: float) -> complex:
    """int_0^gamma dE/(z - E)^2."""
    return 1.0 / (z - gamma) - 1.0 / z


def _cross_interval(eps: complex, xi: complex, gamma: float) -> complex:
    """int_0^gamma dE/((xi - E)(eps - E))."""
    if eps == xi:
        return _inv_square_interval(eps, gamma)
    return (_log_interval(xi, gamma) - _log_interval(eps, gamma)) / (eps - xi)


def delta_f_closed_form(u: float, eps: complex, xi: complex,
                        theta: float, tau: float,
                        gamma: float = np.inf) -> complex:
    """Fourth-moment term of F: the exact second-order Taylor contribution.

    (u/2) int dE (i theta/(xi - E) - i tau/(eps - E))^2, evaluated in
    closed form; gamma = inf uses the convergent infinite-band limits.
    """
    if np.isinf(gamma):
        p_xi = -1.0 / xi
        p_eps = -1.0 / eps
        cross = (np.log(-eps) - np.log(-xi)) / (xi - eps) if eps != xi else -1.0 / eps
    else:
        p_xi = _inv_square_interval(xi, gamma)
        p_eps = _inv_square_interval(eps, gamma)
        cross = _cross_interval(eps, xi, gamma)
    return 0.5 * u * (-theta**2 * p_xi - tau**2 * p_eps + 2.0 * theta * tau * cross)


def first_order_f(w: float, eps: complex, xi: complex, theta: float, tau: float,
                  gamma: float) -> complex:
    """Second-moment (uniform-band) part of F over a finite band."""
    return 1j * theta * w * _log_interval(xi, gamma) \
        - 1j * tau * w * _log_interval(eps, gamma)


def eval_F(stats: CouplingStatistics, eps: complex, xi: complex,
           theta: float, tau: float, gamma: float = 40.0) -> complex:
    """Coupling-statistics functional over the band (0, gamma).

    Moment-form statistics use the closed first- plus second-order terms
    (that model is defined by its truncation); other forms integrate the
    full exponent numerically over E and the coupling density.
    """
    if theta == 0.0 and tau == 0.0:
        return 0.0j
    if np.real(eps) >= 0 or np.real(xi) >= 0:
        raise DomainError("eval_F needs eps and xi in the left half plane")
    if stats.is_moment_form:
        return first_order_f(stats.w, eps, xi, theta, tau, gamma) \
            + delta_f_closed_form(stats.u, eps, xi, theta, tau, gamma)
    return eval_F_numeric(stats, eps, xi, theta, tau, gamma)


def _coupling_nodes(stats: CouplingStatistics, n: int = 64):
    """Gauss-Legendre nodes and weights over the coupling density."""
    if stats.kind != "power_law":
        raise DomainError("numeric F needs a concrete coupling density")
    x, wts = np.polynomial.legendre.leggauss(n)
    a, b = stats.v_min, stats.v_max
    v = 0.5 * (b - a) * x + 0.5 * (a + b)
    dens = v ** (-stats.alpha)
    norm = np.sum(wts * dens) * 0.5 * (b - a)
    weight = wts * dens * 0.5 * (b - a) / norm * stats.density
    return v, weight


def eval_F_numeric(stats: CouplingStatistics, eps: complex, xi: complex,
                   theta: float, tau: float, gamma: float) -> complex:
    v, vw = _coupling_nodes(stats)
    v2 = v**2

    def integrand(e):
        z = 1j * theta * v2 / (xi - e) - 1j * tau * v2 / (eps - e)
        return np.sum(vw * (np.exp(z) - 1.0))

    re, re_err = quad(lambda e: integrand(e).real, 0.0, gamma, limit=400,
                      epsabs=1e-13, epsrel=1e-10)
    im, im_err = quad(lambda e: integrand(e).imag, 0.0, gamma, limit=400,
                      epsabs=1e-13, epsrel=1e-10)
    if not (np.isfinite(re) and np.isfinite(im)):
        raise QuadratureError("F integral failed to converge")
    return complex(re, im)


def eval_G_J(stats: CouplingStatistics, x: float, eta: float,
             gamma: float = np.inf) -> Tuple[complex, complex]:
    """Small-frequency kernels of the cast F = G + i zeta (theta+tau)/2 J.

    G collects the exponent at equal arguments; J is its derivative kernel
    weighted by 1/(eta - E)^2.  Only eta < 0 keeps the integrands free of
    poles.  For the moment form with gamma = inf the log of G is
    renormalized (the cutoff log belongs to the level position).
    """
    if eta >= 0:
        raise DomainError("kernels are defined for eta < 0")
    if stats.is_moment_form:
        if np.isinf(gamma):
            g_lin = 1j * x * stats.w * np.log(-eta)
        else:
            g_lin = 1j * x * stats.w * _log_interval(eta, gamma)
        g_val = g_lin + 0.5 * stats.u * x**2 / eta
        j_val = -stats.w / eta - 0.5j * x * stats.u / eta**2
        return g_val, j_val
    v, vw = _coupling_nodes(stats)
    v2 = v**2
    hi = gamma if np.isfinite(gamma) else np.inf

    def g_int(e):
        return np.sum(vw * (np.exp(1j * x * v2 / (eta - e)) - 1.0))

    def j_int(e):
        return np.sum(vw * v2 * np.exp(1j * x * v2 / (eta - e))) / (eta - e) ** 2

    g_re, _ = quad(lambda e: g_int(e).real, 0.0, hi, limit=400)
    g_im, _ = quad(lambda e: g_int(e).imag, 0.0, hi, limit=400)
    j_re, _ = quad(lambda e: j_int(e).real, 0.0, np.inf, limit=400)
    j_im, _ = quad(lambda e: j_int(e).imag, 0.0, np.inf, limit=400)
    return complex(g_re, g_im), complex(j_re, j_im)


@dataclass(frozen=True)
class StationaryDistribution:
    """Unnormalized stationary density over band energies plus bookkeeping."""

    e_grid: np.ndarray
    rho: np.ndarray
    normalization: float
    w50: float
    fwhm: float
    flags: dict = field(default_factory=dict)

    def normalized(self) -> np.ndarray:
        return self.rho / self.normalization if self.normalization > 0 else self.rho


def _eta_quadrature(weight_decay: Callable, eta_scale: float, w: float,
                    n_panel: int = 36, n_gauss: int = 24):
    """Panelled Gauss nodes over (-eta_max, 0) refined near eta = -w."""
    eta_max = eta_scale
    for _ in range(200):
        if weight_decay(-eta_max) < -27.6:  # exp < 1e-12
            break
        eta_max *= 1.3
    edges = np.unique(np.concatenate([
        np.geomspace(1e-7 * eta_scale, eta_max, n_panel),
        w * np.array([0.5, 0.9, 0.99, 1.01, 1.1, 2.0]),
    ]))
    edges = edges[edges <= eta_max]
    x, wt = np.polynomial.legendre.leggauss(n_gauss)
    nodes, weights = [], []
    lo = 0.0
    for hi in edges:
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes.append(-(mid + half * x))
        weights.append(half * wt)
        lo = hi
    return np.concatenate(nodes), np.concatenate(weights)


def stationary_distribution(stats: CouplingStatistics, ebar_o: float,
                            e_grid, v_probe: float) -> StationaryDistribution:
    """Stationary band population of the two-moment ensemble model.

    Two-fold integral over the reference position eta < 0 and the
    frequency-difference variable: the x-integral is Gaussian (the
    fourth-moment term damps it) and is folded analytically through an
    auxiliary exponential representation of 1/(1 - J), leaving a real
    two-fold (eta, s) quadrature:

        rho(E) = v^2 int d eta  S(eta) / (eta - E)^2,
        S(eta) = sqrt(2 pi |eta| / u) int_0^inf ds sgn(A) e^{-s |A|}
                 * exp(-(D0 + sgn(A) s B)^2 |eta| / (2 u)),

    with D0(eta) = eta - w log(-eta) + ebar_o, A = 1 + w/eta, B = u/(2
    eta^2).  The u -> 0 limit collapses S onto the displaced uniform-band
    pole.  The eta-integral is truncated where the Gaussian weight at the
    x-saddle falls below 1e-12.
    """
    if not stats.is_moment_form:
        raise DomainError("the stationary distribution supports the moment form")
    w, u = stats.w, stats.u
    if u <= 0:
        raise DomainError("the two-moment model needs u > 0")
    e = np.asarray(e_grid, dtype=float)
    if np.any(e <= 0):
        raise DomainError("band energies must be positive")

    def d0(eta):
        return eta - w * np.log(-eta) + ebar_o

    def saddle_exponent(eta):
        return -d0(eta) ** 2 * abs(eta) / (2.0 * u)

    eta_scale = max(w, ebar_o, np.sqrt(u))
    nodes, weights = _eta_quadrature(saddle_exponent, eta_scale, w)

    def s_value(eta):
        a = 1.0 + w / eta
        b = 0.5 * u / eta**2
        d = d0(eta)
        pref = np.sqrt(2.0 * np.pi * abs(eta) / u)
        sign = 1.0 if a >= 0 else -1.0

        def integrand(s):
            return np.exp(-s * abs(a) - (d + sign * s * b) ** 2 * abs(eta) / (2.0 * u))

        val, err = quad(integrand, 0.0, np.inf, limit=200, epsabs=1e-13,
                        epsrel=1e-9)
        if not np.isfinite(val):
            raise ModelRegimeError("1 - J vanishes non-integrably on the path")
        return sign * pref * val

    s_nodes = np.array([s_value(eta) for eta in nodes])
    rho = v_probe**2 * np.array(
        [np.sum(weights * s_nodes / (nodes - ei) ** 2) for ei in e])
    neg_frac = abs(min(rho.min(), 0.0)) / max(abs(rho).max(), 1e-300)
    if neg_frac > 1e-6:
        warnings.warn(f"stationary density has negative excursions ({neg_frac:.1e})")
    norm = float(np.trapezoid(np.maximum(rho, 0.0), e))
    flags = {
        "quasicontinuum_ok": bool(u < w**3),
        "valid_time_window": (float(np.sqrt(u / w) / w), float(w**2 / u * 1.0)),
    }
    return StationaryDistribution(
        e_grid=e, rho=rho, normalization=norm,
        w50=w50_density(e, np.maximum(rho, 0.0)),
        fwhm=fwhm_width(e, np.maximum(rho, 0.0)), flags=flags)


def tractable_phi_negative(eta, w: float, u: float, ebar_o: float):
    """Saddle exponent of the two-moment model on the eta < 0 branch."""
    eta = np.asarray(eta, dtype=float)
    log_term = np.log(-eta)
    poly = (7.0 * eta**2 + ebar_o**2 - 5.0 * ebar_o * eta
            + 3.0 * w**2 - 3.0 * ebar_o * w + 9.0 * eta * w)
    return (eta * poly + eta * w**2 * log_term**2
            + eta * w * log_term * (-2.0 * ebar_o + 5.0 * eta + 3.0 * w)) / u


def tractable_profile(w: float, u: float, ebar_o: float, e_grid,
                      coefficient: float = 18.0 * np.pi) -> StationaryDistribution:
    """Explicit stationary profile of the two-moment saddle-point model.

    rho(E) = coefficient/u * int_{-inf}^0 d eta  eta^2 e^{Phi<}/(eta - E)^2.
    The printed coefficient 18 pi scales out of normalized profiles and is
    exposed as a parameter.  Only normalized shapes and monotone trends are
    meaningful; the saddle-point absolute scale is not reliable.
    """
    if u <= 0 or w <= 0:
        raise DomainError("w and u must be positive")
    e = np.asarray(e_grid, dtype=float)
    if np.any(e <= 0):
        raise DomainError("band energies must be positive")

    probe = -np.geomspace(1e-9, 1e4, 4000)
    phi = tractable_phi_negative(probe, w, u, ebar_o)
    if np.any(phi > 0):
        raise ModelRegimeError("Phi< is positive on the negative axis: "
                               "saddle-point regime invalid for these parameters")

    def decay(eta):
        return tractable_phi_negative(eta, w, u, ebar_o)

    nodes, weights = _eta_quadrature(decay, max(w, ebar_o, np.sqrt(u)), w)
    f_nodes = coefficient / u * nodes**2 * np.exp(
        tractable_phi_negative(nodes, w, u, ebar_o))
    rho = np.array([np.sum(weights * f_nodes / (nodes - ei) ** 2) for ei in e])
    norm = float(np.trapezoid(rho, e))
    return StationaryDistribution(e_grid=e, rho=rho, normalization=norm,
                                  w50=w50_density(e, rho), fwhm=fwhm_width(e, rho),
                                  flags={"saddle_scale_reliable": False})


def tractable_tail_coefficient(w: float, u: float, ebar_o: float,
                               coefficient: float = 18.0 * np.pi) -> float:
    """E -> inf limit of rho(E) E^2 for the tractable profile."""
    nodes, weights = _eta_quadrature(
        lambda eta: tractable_phi_negative(eta, w, u, ebar_o),
        max(w, ebar_o, np.sqrt(u)), w)
    f_nodes = coefficient / u * nodes**2 * np.exp(
        tractable_phi_negative(nodes, w, u, ebar_o))
    return float(np.sum(weights * f_nodes))


@dataclass(frozen=True)
class PositiveBranchDecay:
    """Time decay of the above-edge reference-energy branch."""

    t_grid: np.ndarray
    values: np.ndarray
    envelope_times: np.ndarray
    envelope: np.ndarray
    fitted_exponent: float


def decay_of_positive_eta_branch(w: float, u: float, ebar_o: float, t_grid,
                                 e_probe: float = 0.3,
                                 eta_max_factor: float = 1.0,
                                 n_eta: int = 24000) -> PositiveBranchDecay:
    """Population carried by the eta > 0 branch of the two-moment model.

    The pole pair at the probe energy contributes an amplitude integral
    over positive reference energies whose phase is delayed by
    T(eta) = (pi^2 w^2 + (eta + w log eta - ebar_o)^2)/(4 pi u) (the
    linear-in-frequency part of the saddle exponent; the 1/zeta weight of
    this branch cancels the pole degree).  The squared modulus of that
    amplitude is the branch population: finite at t = 0 and decaying as
    1/t^2, which the log-log envelope fit returns.
    """
    if u <= 0:
        raise DomainError("u must be positive")
    t = np.asarray(t_grid, dtype=float)
    eta_hi = (ebar_o + 6.0 * max(w, np.sqrt(u))) * eta_max_factor
    etas = np.linspace(1e-6 * eta_hi, eta_hi, n_eta)
    d_eta = etas[1] - etas[0]
    b = etas + w * np.log(etas) - ebar_o
    delay = (np.pi**2 * w**2 + b**2) / (4.0 * np.pi * u)
    window = np.exp(-((etas / (0.8 * eta_hi)) ** 6))
    values = np.empty(t.size)
    for i, ti in enumerate(t):
        phase = 2.0 * (etas - e_probe) * (ti + delay)
        amp = np.sum(window * np.exp(-1j * phase)) * d_eta / u
        values[i] = abs(amp) ** 2
    pos = t > 0
    if pos.sum() >= 8:
        edges = np.geomspace(t[pos].min(), t[pos].max(), 11)
        env_t, env = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            m = pos & (t >= lo) & (t <= hi)
            if m.sum() >= 2:
                env_t.append(float(np.median(t[m])))
                env.append(float(values[m].max()))
        exponent = float(np.polyfit(np.log(env_t), np.log(env), 1)[0])
        env_t, env = np.array(env_t), np.array(env)
    else:
        env_t, env, exponent = np.array([]), np.array([]), float("nan")
    return PositiveBranchDecay(t_grid=t, values=values, envelope_times=env_t,
                               envelope=env, fitted_exponent=exponent)
