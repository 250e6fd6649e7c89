"""Self-contained special-function kernels: Lambert W0, Airy Ai, branched log.

These are deliberately not delegated to an external library: the branch
handling of the logarithm is a house convention the analytic modules rely
on, and the two classical functions are small enough to own outright.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, SingularityError

_INV_E = np.exp(-1.0)
_AI0 = 0.3550280538878172392600631860041831763980  # Ai(0) = 3^(-2/3)/Gamma(2/3)
_AIP0 = -0.2588194037928067984051835601892039634793  # Ai'(0) = -3^(-1/3)/Gamma(1/3)


def lambert_w0(x):
    """Principal branch of the Lambert function on the real axis.

    Solves w * exp(w) = x for x >= -1/e.  Asymptotic initial guess plus
    Halley iteration; converges to ~1e-15 relative in at most 5 steps.
    """
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    if np.any(x_arr < -_INV_E - 1e-15):
        raise DomainError("lambert_w0 requires x >= -1/e")
    x_arr = np.maximum(x_arr, -_INV_E)

    w = np.empty_like(x_arr)
    near_branch = x_arr < -_INV_E + 0.25
    # Series around the branch point in p = sqrt(2 (e x + 1)).
    p = np.sqrt(np.maximum(2.0 * (np.e * x_arr[near_branch] + 1.0), 0.0))
    w[near_branch] = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)))
    mid = (~near_branch) & (x_arr < np.e)
    w[mid] = np.log1p(x_arr[mid])
    big = x_arr >= np.e
    lx = np.log(x_arr[big])
    w[big] = lx - np.log(lx)

    w = _halley_wexpw(w, x_arr)
    return float(w[0]) if scalar else w


def lambert_w0_exp(log_x):
    """W0(exp(log_x)) without forming exp(log_x); stable for huge log_x.

    Solves w + log(w) = log_x for log_x >= 1 (w >= 1 there); falls back to
    :func:`lambert_w0` for smaller arguments.
    """
    a = float(log_x)
    if a < 1.0:
        return lambert_w0(np.exp(a))
    w = a - np.log(a) if a > np.e else 1.0
    for _ in range(60):
        # Newton on f(w) = w + log(w) - a.
        f = w + np.log(w) - a
        dw = f / (1.0 + 1.0 / w)
        w -= dw
        if abs(dw) <= 1e-16 * (1.0 + abs(w)):
            break
    return float(w)


def _halley_wexpw(w, x):
    for _ in range(40):
        ew = np.exp(w)
        f = w * ew - x
        w1 = w + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = ew * w1 - (w + 2.0) * f / (2.0 * w1)
            dw = f / denom
        # At the branch point w = -1 the update is singular; the series
        # seed is already exact there.
        dw = np.where(np.isfinite(dw), dw, 0.0)
        w = w - dw
        if np.all(np.abs(dw) <= 1e-16 * (2.0 + np.abs(w))):
            break
    return w


def airy_ai(x):
    """Airy function Ai on [-30, 30] to ~1e-12 absolute.

    Maclaurin series (extended precision accumulation) up to |x| = 7.5 and
    the standard large-argument expansions beyond; the switchover region is
    covered by both representations and validated in the tests.
    """
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    if np.any(np.abs(x_arr) > 30.0):
        raise DomainError("airy_ai supports |x| <= 30")
    out = np.empty_like(x_arr)
    small = np.abs(x_arr) <= 7.5
    if np.any(small):
        out[small] = _airy_series(x_arr[small])
    pos = (~small) & (x_arr > 0)
    if np.any(pos):
        out[pos] = _airy_asymptotic_pos(x_arr[pos])
    neg = (~small) & (x_arr < 0)
    if np.any(neg):
        out[neg] = _airy_asymptotic_neg(-x_arr[neg])
    return float(out[0]) if scalar else out


def _airy_series(x):
    x_l = np.asarray(x, dtype=np.longdouble)
    x3 = x_l ** 3
    f_term = np.ones_like(x_l)
    g_term = x_l.copy()
    f_sum = f_term.copy()
    g_sum = g_term.copy()
    for k in range(0, 120):
        f_term = f_term * x3 / ((3 * k + 2) * (3 * k + 3))
        g_term = g_term * x3 / ((3 * k + 3) * (3 * k + 4))
        f_sum += f_term
        g_sum += g_term
        if np.all(np.abs(f_term) + np.abs(g_term) < 1e-25 * (np.abs(f_sum) + np.abs(g_sum) + 1.0)):
            break
    return (np.longdouble(_AI0) * f_sum + np.longdouble(_AIP0) * g_sum).astype(float)


def _airy_u_coeffs(n: int) -> np.ndarray:
    u = np.ones(n + 1)
    for k in range(1, n + 1):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
    return u


_U_COEFF = _airy_u_coeffs(40)


def _airy_asymptotic_pos(x):
    zeta = (2.0 / 3.0) * x ** 1.5
    s = np.zeros_like(x)
    prev = np.full_like(x, np.inf)
    done = np.zeros(x.shape, dtype=bool)
    for k in range(0, 40):
        t = (-1.0) ** k * _U_COEFF[k] / zeta ** k
        # Truncate each point at its smallest term (divergent series).
        done |= np.abs(t) > prev
        s = np.where(done, s, s + t)
        prev = np.abs(t)
        if np.all(done):
            break
    return np.exp(-zeta) * s / (2.0 * np.sqrt(np.pi) * x ** 0.25)


def _airy_asymptotic_neg(z):
    zeta = (2.0 / 3.0) * z ** 1.5
    even = np.zeros_like(z)
    odd = np.zeros_like(z)
    for k in range(0, 14):
        even += (-1.0) ** k * _U_COEFF[2 * k] / zeta ** (2 * k)
        odd += (-1.0) ** k * _U_COEFF[2 * k + 1] / zeta ** (2 * k + 1)
    phase = zeta + np.pi / 4.0
    return (np.sin(phase) * even - np.cos(phase) * odd) / (np.sqrt(np.pi) * z ** 0.25)


def branched_log(eps):
    """log(-eps) with the branch cut along the negative imaginary axis of eps.

    For real eps < 0 the value is real; for real eps > 0 (the limit from the
    physical contour above the real axis) it is log(eps) - i*pi, so that a
    +w*log(-eps) term carries the absorptive -i*pi*w inside the band.  The
    jump across the cut is exactly 2*pi*i; points exactly on the cut take the
    fourth-quadrant limit.
    """
    eps_arr = np.asarray(eps, dtype=complex)
    scalar = eps_arr.ndim == 0
    eps_arr = np.atleast_1d(eps_arr)
    if np.any(eps_arr == 0):
        raise SingularityError("branched_log is singular at eps = 0")
    theta = np.angle(eps_arr)
    theta = np.where(theta < -np.pi / 2.0, theta + 2.0 * np.pi, theta)
    val = np.log(np.abs(eps_arr)) + 1j * (theta - np.pi)
    return complex(val[0]) if scalar else val
