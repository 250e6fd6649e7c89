"""Moving-level transfer recast as 1-D scattering along the frequency axis.

A level swept as e_o - alpha t^2 maps onto a particle of inverse mass alpha
scattering off U(eps) = eps - w log|eps| (log barrier at the band edge)
with an absorbing imaginary part -i pi w inside the band and an extra
-v_s^2/(eps - E_s - i delta) dip per spoiler.  The wave comes in from the
far oscillatory region eps << 0; the absorbed flux fraction A equals the
population transferred to the band.

Conventions: the incident wave is the +i phase branch carrying positive
flux; profiles are normalized to unit incident amplitude; the imaginary
part of U is nonpositive (absorption only).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .errors import DomainError, QuadratureError, StiffnessError
from .measures import fwhm_width, w50_density
from .model import ContinuumEdgeParams, Spoiler, SpoilerEnsembleSpec, \
    default_spoiler_vmax, sample_spoilers
from .special_functions import lambert_w0_exp
from .utils import derive_seed, parallel_map


@dataclass(frozen=True)
class ScatteringPotential:
    """Scattering potential of the swept level-band problem.

    ``e_o`` is the total-energy parameter (the minimum detuning with the
    band-cutoff log already absorbed), ``alpha`` the inverse mass.  The
    spoiler poles are regularized at E_s - i delta with delta = 1e-4 w;
    ``absorption`` False zeroes every imaginary part (real potential).
    """

    w: float
    e_o: float
    alpha: float
    spoilers: Tuple[Spoiler, ...] = ()
    absorption: bool = True
    delta_factor: float = 1e-4

    def __post_init__(self):
        if self.w <= 0 or self.alpha <= 0:
            raise DomainError("w and alpha must be positive")
        object.__setattr__(self, "spoilers", tuple(self.spoilers))
        object.__setattr__(self, "_es", np.array([s.e_s for s in self.spoilers]))
        object.__setattr__(self, "_vs2", np.array([s.v_s**2 for s in self.spoilers]))

    @property
    def delta(self) -> float:
        return self.delta_factor * self.w

    def value_scalar(self, eps: float) -> complex:
        """Fast scalar evaluation of the complex potential."""
        val = eps - self.w * np.log(abs(eps)) + 0.0j
        if self.absorption and eps > 0.0:
            val -= 1j * np.pi * self.w
        if self._es.size:
            d = eps - self._es
            denom = d * d + self.delta**2
            val -= np.sum(self._vs2 * d / denom)
            if self.absorption:
                val -= 1j * np.sum(self._vs2 * self.delta / denom)
        return val

    def real_part(self, eps):
        """Re U: eps - w log|eps| plus the principal-value spoiler dips."""
        eps = np.asarray(eps, dtype=float)
        val = eps - self.w * np.log(np.abs(eps))
        for sp in self.spoilers:
            d = eps - sp.e_s
            val = val - sp.v_s**2 * d / (d * d + self.delta**2)
        return val

    def value(self, eps):
        """Complex U with absorption inside the band and at spoiler poles."""
        eps_arr = np.asarray(eps, dtype=float)
        val = self.real_part(eps_arr).astype(complex)
        if self.absorption:
            val = val - 1j * np.pi * self.w * (eps_arr > 0)
            for sp in self.spoilers:
                d = eps_arr - sp.e_s
                val = val - 1j * sp.v_s**2 * self.delta / (d * d + self.delta**2)
        return val

    def left_turning_point(self) -> float:
        """Root of Re U = e_o on the negative axis (unique: Re U is monotone)."""
        lo = -max(10.0 * self.w, abs(self.e_o) + 10.0 * self.w, 1.0)
        while self.real_part(lo) > self.e_o:
            lo *= 2.0
            if lo < -1e12:
                raise DomainError("no classical turning point found")
        hi = -1e-12 * self.w
        while self.real_part(hi) < self.e_o:
            hi *= 0.5
            if hi > -1e-300:
                raise DomainError("turning point search collapsed at the edge")
        return float(brentq(lambda x: self.real_part(x) - self.e_o, lo, hi,
                            xtol=1e-13, maxiter=200))


@dataclass(frozen=True)
class ScatteringSolution:
    """Profile and flux bookkeeping of one scattering solve."""

    eps_grid: np.ndarray
    psi: np.ndarray                 # normalized to unit incident amplitude
    potential: ScatteringPotential
    incident_amp: complex
    reflected_amp: complex
    absorbed_fraction: float
    absorbed_from_integral: float
    edge_w50: float
    edge_fwhm: float
    notes: Tuple[str, ...] = ()

    @property
    def rho(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def absorbed_density(self) -> np.ndarray:
        """Transferred-population density (-Im U) |psi|^2 / alpha."""
        u = self.potential.value(self.eps_grid)
        return -u.imag * self.rho / self.potential.alpha

    def window_population(self, window) -> float:
        lo, hi = window
        mask = (self.eps_grid >= lo) & (self.eps_grid <= hi)
        if mask.sum() < 2:
            return 0.0
        return float(np.trapezoid(self.absorbed_density()[mask], self.eps_grid[mask]))

    def to_csv(self) -> str:
        u = self.potential.value(self.eps_grid)
        lines = ["eps,re_psi,im_psi,rho,re_u,im_u"]
        for e, p, uu in zip(self.eps_grid, self.psi, u):
            lines.append(f"{e:.17g},{p.real:.17g},{p.imag:.17g},"
                         f"{abs(p) ** 2:.17g},{uu.real:.17g},{uu.imag:.17g}")
        return "\n".join(lines) + "\n"


def _domain(pot: ScatteringPotential, n_fit_waves: float):
    """Integration domain: forbidden start on the right, deep oscillatory left."""
    tp = pot.left_turning_point()
    # Right boundary: past every spoiler lobe and into the forbidden region.
    eps_max = max(2.0 * pot.w, pot.e_o + 3.0 * pot.w + 1.0, 1.0)
    for sp in pot.spoilers:
        eps_max = max(eps_max, sp.e_s + 2.0 + 5.0 * sp.v_s**2 / max(sp.e_s, pot.w))
    for _ in range(60):
        if pot.real_part(eps_max) - pot.e_o > max(1.0, 2.0 * pot.w):
            break
        eps_max *= 1.3
    # Left boundary: accumulate (n_fit + 4) * 2 pi of local WKB phase.
    target = (n_fit_waves + 4.0) * 2.0 * np.pi
    eps = tp - max(0.05 * (abs(tp) + 1.0), 0.5 * np.sqrt(pot.alpha) ** (2.0 / 3.0))
    phase = 0.0
    step = max(0.02 * (abs(tp) + 1.0), 1e-3)
    guard = 0
    while phase < target and guard < 200000:
        k = np.sqrt(max(pot.e_o - pot.real_part(eps), 0.0) / pot.alpha)
        phase += k * step
        eps -= step
        guard += 1
    return float(eps), tp, float(eps_max)


# Cash-Karp embedded 4(5) coefficients.
_CK_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 3.0 / 5.0, 1.0, 7.0 / 8.0)
_CK_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0),
    (-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0),
    (1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0,
     44275.0 / 110592.0, 253.0 / 4096.0),
)
_CK_B5 = (37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0)
_CK_B4 = (2825.0 / 27648.0, 0.0, 18575.0 / 48384.0, 13525.0 / 55296.0,
          277.0 / 14336.0, 1.0 / 4.0)


def _march(pot: ScatteringPotential, eps_start: float, eps_stop: float,
           y0, outputs, rtol: float):
    """Adaptive Cash-Karp march of (psi, psi') downward in eps.

    Steps are capped so the edge log spike and every regularized spoiler
    Lorentzian stay resolved; the solution is renormalized on the fly
    (running log scale) since it grows under the barrier.  Samples are
    taken exactly at the ``outputs`` grid (descending).
    """
    alpha = pot.alpha
    e_o = pot.e_o
    tiny = 1e-12 * max(pot.w, 1.0)
    delta = pot.delta
    es = pot._es
    sqrt_a = np.sqrt(alpha)

    def q_of(eps):
        return (pot.value_scalar(eps) - e_o) / alpha

    def ceiling(eps):
        k_loc = np.sqrt(abs(q_of(eps))) + 1e-30
        h = 0.42 / k_loc  # ~ lambda / 15
        h = min(h, max(0.3 * abs(eps), 4.0 * tiny))
        if es.size:
            d = np.abs(eps - es)
            h = min(h, float(np.min(np.maximum(0.25 * d, 0.25 * delta))))
        return h

    n_out = len(outputs)
    samples = np.empty((n_out, 2), dtype=complex)
    sample_logs = np.empty(n_out)
    i_out = 0
    eps = eps_start
    y = np.array(y0, dtype=complex)
    log_scale = 0.0
    h = ceiling(eps_start)
    max_steps = 3_000_000
    steps = 0
    while eps > eps_stop + 1e-15 * abs(eps_stop):
        if steps > max_steps:
            raise StiffnessError("scattering march exceeded the step budget")
        steps += 1
        # Record any output points at or above the current position.
        while i_out < n_out and outputs[i_out] >= eps:
            samples[i_out] = y
            sample_logs[i_out] = log_scale
            i_out += 1
        h_try = min(h, ceiling(eps))
        target = eps - h_try
        # Land exactly on the next pending output point.
        clamped = False
        if i_out < n_out and target <= outputs[i_out]:
            target = outputs[i_out]
            clamped = True
        if target < eps_stop:
            target = eps_stop
            clamped = True
        h_step = eps - target
        k1 = np.array([y[1], q_of(eps) * y[0]])
        ks = [k1]
        for stage in range(1, 6):
            acc = np.zeros(2, dtype=complex)
            for j, a_ij in enumerate(_CK_A[stage]):
                acc += a_ij * ks[j]
            y_stage = y - h_step * acc
            e_stage = eps - _CK_C[stage] * h_step
            ks.append(np.array([y_stage[1], q_of(e_stage) * y_stage[0]]))
        y5 = y.copy()
        y4 = y.copy()
        for j in range(6):
            y5 = y5 - h_step * _CK_B5[j] * ks[j]
            y4 = y4 - h_step * _CK_B4[j] * ks[j]
        scale0 = max(abs(y[0]), abs(y5[0]), 1e-280)
        scale1 = max(abs(y[1]), abs(y5[1]), scale0 * (abs(q_of(eps)) ** 0.5 + 1e-30))
        err = max(abs(y5[0] - y4[0]) / (rtol * scale0),
                  abs(y5[1] - y4[1]) / (rtol * scale1))
        if not np.isfinite(err):
            raise StiffnessError("scattering march produced non-finite values")
        if err <= 1.0 or h_step <= 8.0 * tiny:
            eps = target
            y = y5
            if i_out < n_out and eps == outputs[i_out]:
                samples[i_out] = y
                sample_logs[i_out] = log_scale
                i_out += 1
            mag = abs(y[0]) + abs(y[1])
            if mag > 1e120 or (0.0 < mag < 1e-120):
                y /= mag
                log_scale += np.log(mag)
            if clamped:
                h = h_try  # the controller keeps its own proposal
            else:
                growth = min(4.0, max(0.3, 0.9 * err ** -0.2)) if err > 0 else 4.0
                h = h_step * growth
        else:
            h = h_step * max(0.2, 0.9 * err ** -0.25)
    while i_out < n_out:
        samples[i_out] = y
        sample_logs[i_out] = log_scale
        i_out += 1
    return samples, sample_logs


def solve_scattering(pot: ScatteringPotential, rtol: float = 1e-9,
                     n_out: int = 1200, n_fit_waves: float = 12.0) -> ScatteringSolution:
    """Integrate alpha psi'' = (U - e_o) psi from the forbidden side leftward.

    The start value is the decaying WKB solution, so the desired solution
    grows in the direction of integration and stays numerically dominant.
    At the far left the solution is decomposed into counter-propagating
    local WKB waves over a window of at least ``n_fit_waves`` wavelengths.
    """
    notes = []
    eps_min, tp, eps_max = _domain(pot, n_fit_waves)
    alpha = pot.alpha

    q0 = (pot.value_scalar(eps_max) - pot.e_o) / alpha
    y = np.array([1.0 + 0.0j, -np.sqrt(q0)])
    # Output grid: global coverage plus a dense band-edge section so the
    # narrow transferred-population profile is resolved.
    base = np.linspace(eps_min, eps_max, n_out)
    edge_hi = min(eps_max * (1.0 - 1e-9), 5.0 * pot.w + 0.5 * max(pot.e_o, 0.0))
    for sp in pot.spoilers:
        edge_hi = min(max(edge_hi, sp.e_s + 5.0 * max(pot.w, sp.v_s**2 / sp.e_s)),
                      eps_max * (1.0 - 1e-9))
    dense = np.linspace(1e-4 * pot.w, edge_hi, min(1500, 4 * n_out // 3)) \
        if edge_hi > 0 else np.array([])
    eps_grid = np.unique(np.concatenate([base, dense]))
    outputs = eps_grid[::-1]
    samples, sample_logs = _march(pot, eps_max, eps_min, y, outputs, rtol)
    psi = samples[::-1, 0]
    dpsi = samples[::-1, 1]
    log_at = sample_logs[::-1]
    n_out = eps_grid.size

    # Local WKB decomposition over the leftmost fit window.
    k_grid = np.sqrt(np.maximum(pot.e_o - pot.real_part(eps_grid), 1e-300) / alpha)
    phase = np.concatenate([[0.0], np.cumsum(
        0.5 * (k_grid[1:] + k_grid[:-1]) * np.diff(eps_grid))])
    target_phase = n_fit_waves * 2.0 * np.pi
    fit_mask = phase <= target_phase
    if fit_mask.sum() < 24:
        fit_mask = np.arange(n_out) < 24
        notes.append("fit window widened: fewer than 24 grid points")
    if eps_grid[fit_mask][-1] > tp:
        notes.append("fit window auto-shifted below the turning point")
        fit_mask = eps_grid < tp - 0.1 * (abs(tp) + 1.0)
    kf = k_grid[fit_mask]
    ph = phase[fit_mask]
    kp = np.gradient(kf, eps_grid[fit_mask])
    base_plus = kf ** -0.5 * np.exp(1j * ph)
    base_minus = kf ** -0.5 * np.exp(-1j * ph)
    dplus = (1j * kf - 0.5 * kp / kf) * base_plus
    dminus = (-1j * kf - 0.5 * kp / kf) * base_minus
    # Use a common scale reference inside the window for conditioning.
    ls_window = log_at[fit_mask]
    ls0 = ls_window.max()
    resc = np.exp(ls_window - ls0)
    design = np.concatenate([
        np.stack([base_plus, base_minus], axis=1),
        np.stack([dplus, dminus], axis=1),
    ])
    target = np.concatenate([psi[fit_mask] * resc, dpsi[fit_mask] * resc])
    coeff, *_ = np.linalg.lstsq(design, target, rcond=None)
    a_inc, b_ref = coeff

    if a_inc == 0:
        raise QuadratureError("incident amplitude fit degenerate")
    reflect = abs(b_ref / a_inc) ** 2
    absorbed = 1.0 - reflect
    if absorbed < 0.0 or absorbed > 1.0:
        notes.append(f"absorbed fraction {absorbed:.3e} clamped into [0, 1]")
        absorbed = min(max(absorbed, 0.0), 1.0)

    # Normalize the profile to unit incident amplitude.
    psi_norm = psi * np.exp(log_at - ls0) / a_inc
    pos = eps_grid > 0
    if pos.sum() >= 4:
        rho_pos = np.abs(psi_norm[pos]) ** 2
        edge_w50 = w50_density(eps_grid[pos], rho_pos)
        edge_fwhm = fwhm_width(eps_grid[pos], rho_pos)
    else:
        edge_w50 = edge_fwhm = float("nan")
    u_im = pot.value(eps_grid).imag
    absorbed_integral = float(np.trapezoid(-u_im * np.abs(psi_norm) ** 2, eps_grid) / alpha)
    return ScatteringSolution(eps_grid=eps_grid, psi=psi_norm, potential=pot,
                              incident_amp=1.0 + 0.0j,
                              reflected_amp=complex(b_ref / a_inc),
                              absorbed_fraction=float(absorbed),
                              absorbed_from_integral=absorbed_integral,
                              edge_w50=edge_w50, edge_fwhm=edge_fwhm,
                              notes=tuple(notes))


@dataclass(frozen=True)
class WkbTransfer:
    """Semiclassical transfer estimate.

    ``barrier_action`` is the bare action over the forbidden segment from
    the Lambert turning point to the band edge; ``probability`` the full
    estimate including attenuation into the absorbing region, saturated so
    it stays in [0, 1].
    """

    probability: float
    turning_point: float
    barrier_action: float
    under_barrier: bool

    @property
    def bare_barrier_probability(self) -> float:
        """exp(-action) over [turning point, 0] alone (no absorber physics)."""
        return float(np.exp(-self.barrier_action))


def wkb_transfer(w: float, e_o: float, alpha: float) -> WkbTransfer:
    """Semiclassical absorbed fraction of the swept-level scattering problem.

    The wave tunnels through the real log barrier from the turning point
    (the Lambert root of eps - w log(-eps) = e_o) to the edge, picking up
    the action S0, then keeps attenuating inside the band where the
    potential is complex; the locally absorbed flux (pi w / alpha) |psi|^2
    is accumulated along the WKB envelope and exponentiated to saturate:

        A = 1 - exp(-(pi w/alpha) int_0^inf e^{-2 S0 - 2 int Re kappa}/|kappa|)

    which tracks the numeric solver within tens of percent over the whole
    gap/rate plane (the bare exp(-S0) alone overshoots by orders of
    magnitude once the absorber-side decay matters).
    """
    if w <= 0 or alpha <= 0:
        raise DomainError("w and alpha must be positive")
    # eps - w log(-eps) = e_o  <=>  eps = -w W0(exp(-e_o/w)/w)
    tp = -w * lambert_w0_exp(-e_o / w - np.log(w))
    if not tp < 0:
        return WkbTransfer(probability=1.0, turning_point=0.0,
                           barrier_action=0.0, under_barrier=False)

    def kappa_barrier(eps):
        q = eps - w * np.log(-eps) - e_o
        return np.sqrt(max(q, 0.0) / alpha)

    action, _ = quad(kappa_barrier, tp, 0.0, limit=400, epsabs=1e-12,
                     epsrel=1e-8, points=[tp])
    if not np.isfinite(action):
        raise QuadratureError("barrier action integral failed")

    def kappa_band(eps):
        return np.sqrt((eps - w * np.log(eps) - e_o - 1j * np.pi * w) / alpha)

    def rhs(eps, y):
        k = kappa_band(eps)
        absorbed_rate = (np.pi * w / alpha) / abs(k) * np.exp(-2.0 * action - y[0])
        return [2.0 * k.real, absorbed_rate]

    eps_hi = max(10.0 * w, e_o + 10.0 * w, (15.0 * np.sqrt(alpha)) ** (2.0 / 3.0)
                 + max(e_o, 0.0) + 5.0 * w)
    sol = solve_ivp(rhs, (1e-12 * w, eps_hi), [0.0, 0.0], rtol=1e-9, atol=1e-16)
    if not sol.success:
        raise QuadratureError("absorber attenuation integral failed")
    a_lin = float(sol.y[1, -1])
    return WkbTransfer(probability=float(1.0 - np.exp(-a_lin)), turning_point=tp,
                       barrier_action=float(action), under_barrier=True)


@dataclass(frozen=True)
class WidthSurface:
    e_o_values: np.ndarray
    alpha_values: np.ndarray
    inverse_w50: np.ndarray  # (n_eo, n_alpha)
    w50: np.ndarray
    absorbed: np.ndarray


def width_surface(w: float, e_o_values, alpha_values, rtol: float = 1e-8,
                  workers: int = 1) -> WidthSurface:
    """Inverse W50 edge width over an (e_o, alpha) grid."""
    e_os = np.asarray(e_o_values, dtype=float)
    alphas = np.asarray(alpha_values, dtype=float)
    tasks = [(e, a) for e in e_os for a in alphas]

    def one(task):
        e_o, alpha = task
        sol = solve_scattering(ScatteringPotential(w=w, e_o=e_o, alpha=alpha),
                               rtol=rtol)
        return sol.edge_w50, sol.absorbed_fraction

    results = parallel_map(one, tasks, workers)
    w50 = np.array([r[0] for r in results]).reshape(e_os.size, alphas.size)
    absorbed = np.array([r[1] for r in results]).reshape(e_os.size, alphas.size)
    return WidthSurface(e_o_values=e_os, alpha_values=alphas,
                        inverse_w50=1.0 / w50, w50=w50, absorbed=absorbed)


@dataclass(frozen=True)
class SpoilerScatterReport:
    edge_window: Tuple[float, float]
    vicinity_window: Tuple[float, float]
    edge_population: float
    vicinity_population: float
    ratio: float
    edge_w50: float
    edge_fwhm: float
    absorbed_fraction: float


def spoiler_scattering_report(pot: ScatteringPotential,
                              windows: Optional[Tuple] = None,
                              rtol: float = 1e-9) -> SpoilerScatterReport:
    """Edge vs spoiler-vicinity population split for a single-spoiler potential.

    Default windows: edge (0, E_s/2], vicinity |eps - E_s| <= 5 max(w,
    V_s^2/E_s); explicit windows must not overlap.
    """
    if len(pot.spoilers) != 1:
        raise DomainError("report is defined for exactly one spoiler")
    sp = pot.spoilers[0]
    if windows is None:
        half = 5.0 * max(pot.w, sp.v_s**2 / sp.e_s)
        edge_win = (0.0, 0.5 * sp.e_s)
        vic_win = (max(sp.e_s - half, 0.5 * sp.e_s), sp.e_s + half)
    else:
        edge_win, vic_win = windows
        if edge_win[1] > vic_win[0]:
            raise DomainError("edge and vicinity windows overlap")
    sol = solve_scattering(pot, rtol=rtol)
    edge_pop = sol.window_population(edge_win)
    vic_pop = sol.window_population(vic_win)
    ratio = edge_pop / vic_pop if vic_pop > 0 else float("inf")
    return SpoilerScatterReport(edge_window=edge_win, vicinity_window=vic_win,
                                edge_population=edge_pop, vicinity_population=vic_pop,
                                ratio=ratio, edge_w50=sol.edge_w50,
                                edge_fwhm=sol.edge_fwhm,
                                absorbed_fraction=sol.absorbed_fraction)


@dataclass(frozen=True)
class WidthEnsemble:
    widths: np.ndarray
    mean: float
    std: float
    failures: int


def random_spoiler_ensemble(w: float, e_o: float, alpha: float, gamma: float,
                            spoiler_count: int, seed: int,
                            realizations: int = 50,
                            g_density: float = 100.0,
                            v_max: Optional[float] = None,
                            rtol: float = 1e-8,
                            workers: int = 1) -> WidthEnsemble:
    """Edge-width statistics over random spoiler configurations.

    Each realization draws ``spoiler_count`` spoilers uniform in position
    over (0, gamma) with couplings uniform in [0, v_max] (default 10x the
    uniform band coupling sqrt(w/g)) and solves the scattering problem;
    failed realizations are recorded and excluded.
    """
    if realizations < 1:
        raise DomainError("need at least one realization")
    params = ContinuumEdgeParams(e0=-1.0, g=g_density,
                                 v=float(np.sqrt(w / g_density)), gamma=gamma)
    ceil = v_max if v_max is not None else default_spoiler_vmax(params)

    def one(i: int):
        spec_i = SpoilerEnsembleSpec(count=spoiler_count, v_max=ceil,
                                     seed=derive_seed(seed, i))
        spoilers = tuple(sample_spoilers(spec_i, params))
        try:
            sol = solve_scattering(ScatteringPotential(
                w=w, e_o=e_o, alpha=alpha, spoilers=spoilers), rtol=rtol)
            return sol.edge_w50
        except (StiffnessError, QuadratureError, DomainError) as exc:
            warnings.warn(f"realization {i} failed: {exc}")
            return float("nan")

    widths = np.array(parallel_map(one, range(realizations), workers))
    good = widths[np.isfinite(widths)]
    failures = int(np.sum(~np.isfinite(widths)))
    if good.size == 0:
        raise QuadratureError("every ensemble realization failed")
    return WidthEnsemble(widths=widths, mean=float(good.mean()),
                         std=float(good.std(ddof=1) if good.size > 1 else 0.0),
                         failures=failures)
