import numpy as np
import pytest

from levelband.edge_analytics import (
    EdgeDecomposition,
    EdgeProblem,
    edge_transfer_surface,
    pole_epsilon0,
    profile_w50,
    psi0_edge,
    psiE_edge,
    residue_weight,
    resonance_root,
    stationary_population,
    stationary_profile,
    tail_law_fit,
)
from levelband.errors import DomainError
from levelband.model import ContinuumEdgeParams, build_renormalized_edge_band, make_rng
from levelband.discrete_oracle import diagonalize_arrowhead


def bisect_pole(w, ebar0):
    """Independent oracle: bisection on eps - w log(-eps) + ebar0."""
    f = lambda x: x - w * np.log(-x) + ebar0
    lo, hi = -(ebar0 + 10 * w + 10), -1e-14
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestPole:
    def test_unit_scales(self):
        # w=1, ebar0=0: eps0 = -W0(1), frozen from the bisection oracle
        prob = EdgeProblem(w=1.0, ebar0=0.0)
        assert bisect_pole(1.0, 0.0) == pytest.approx(-0.5671432904097838, abs=1e-13)
        assert pole_epsilon0(prob) == pytest.approx(-0.5671432904097838, abs=1e-14)

    def test_root_residual(self):
        prob = EdgeProblem(w=1.0, ebar0=1.0)
        eps0 = pole_epsilon0(prob)
        assert abs(eps0 - np.log(-eps0) + 1.0) < 1e-12

    def test_large_gap_asymptote(self):
        prob = EdgeProblem(w=1.0, ebar0=1e6)
        assert pole_epsilon0(prob) == pytest.approx(-1e6, rel=2e-5)

    def test_residual_over_random_parameters(self):
        rng = make_rng(123)
        for _ in range(100):
            w = float(rng.uniform(0.05, 5.0))
            ebar0 = float(rng.uniform(0.01, 30.0))
            eps0 = pole_epsilon0(EdgeProblem(w=w, ebar0=ebar0))
            assert abs(eps0 - w * np.log(-eps0) + ebar0) < 1e-12 * max(1.0, abs(eps0))

    def test_monotone_decreasing_in_gap(self):
        ebars = np.linspace(0.2, 20.0, 40)
        eps = [pole_epsilon0(EdgeProblem(w=0.7, ebar0=e)) for e in ebars]
        assert np.all(np.diff(eps) < 0)

    def test_residue_weight_in_unit_interval(self):
        for w, ebar0 in [(0.3, 0.5), (1.0, 4.0), (2.0, 1.0)]:
            r = residue_weight(EdgeProblem(w=w, ebar0=ebar0))
            assert 0.0 < r < 1.0


class TestAmplitudes:
    def test_completeness_at_zero(self):
        for w, ebar0 in [(1.0, 1.0), (1.0, 4.7), (0.5, 2.0), (2.0, 1.0)]:
            prob = EdgeProblem(w=w, ebar0=ebar0, v=0.1)
            assert abs(psi0_edge(prob, 0.0) - 1.0) < 1e-6
            assert abs(psiE_edge(prob, 1.3, 0.0)) < 1e-6

    def test_resonance_only_for_small_gaps(self):
        # fourth-quadrant root exists iff ebar0 < w log(3 pi w / 2)
        assert resonance_root(EdgeProblem(w=1.0, ebar0=1.0)) is not None
        assert resonance_root(EdgeProblem(w=1.0, ebar0=3.0)) is None

    def test_long_time_population_matches_residue(self):
        prob = EdgeProblem(w=1.0, ebar0=0.0)
        # (1 + 1/0.56714...)^-2
        expected = stationary_population(prob)
        assert expected == pytest.approx((1 + 1 / 0.5671432904097838) ** -2, abs=1e-12)
        val = abs(psi0_edge(prob, 1e9)) ** 2
        assert abs(val - expected) < 1e-10

    def test_unitarity_at_finite_time(self):
        # The band beyond the cutoff carries ~2 w / gamma of the norm, so
        # the closure over (0, gamma] needs w << gamma to sit inside 5e-3.
        prob = EdgeProblem(w=0.05, ebar0=0.4, v=0.05, gamma=40.0)
        g = prob.w / prob.v**2
        for t in (0.5, 3.0, 20.0):
            e_grid = np.linspace(0.002, prob.gamma, 400)
            rho_e = np.array([abs(psiE_edge(prob, e, t)) ** 2 for e in e_grid])
            total = abs(psi0_edge(prob, t)) ** 2 + g * np.trapezoid(rho_e, e_grid)
            assert total == pytest.approx(1.0, abs=5e-3)

    def test_oracle_equivalence_mid_ratio(self):
        w, g = 1.0, 100.0
        ebar = 1.0 + w * np.log(40.0)
        band = build_renormalized_edge_band(w, ebar, g_edge=g, e_dense=40.0, e_cut=1e4)
        eig = diagonalize_arrowhead(band)
        t_h = 2 * np.pi * g
        ts = np.linspace(0.0, 0.3 * t_h, 16)
        rho_oracle = np.abs(eig.psi0(ts)) ** 2
        prob = EdgeProblem(w=w, ebar0=ebar, v=np.sqrt(w / g), gamma=40.0)
        rho_analytic = np.abs(psi0_edge(prob, ts)) ** 2
        assert np.abs(rho_oracle - rho_analytic).max() < 1e-2

    def test_band_amplitude_matches_oracle(self):
        w, g = 1.0, 100.0
        ebar = 1.0 + w * np.log(40.0)
        band = build_renormalized_edge_band(w, ebar, g_edge=g, e_dense=40.0, e_cut=1e4)
        eig = diagonalize_arrowhead(band)
        prob = EdgeProblem(w=w, ebar0=ebar, v=np.sqrt(w / g), gamma=40.0)
        t_probe = 0.2 * 2 * np.pi * g
        psi_band = eig.band_amplitudes(t_probe)
        for e_target in (0.6, 2.2, 11.0):
            j = int(np.argmin(np.abs(band.energies - e_target)))
            analytic = psiE_edge(prob, band.energies[j], t_probe)
            assert abs(abs(psi_band[j]) ** 2 - abs(analytic) ** 2) < 1e-2

    def test_negative_time_rejected(self):
        prob = EdgeProblem(w=1.0, ebar0=1.0)
        with pytest.raises(DomainError):
            psi0_edge(prob, -1.0)


class TestStationaryProfile:
    def test_large_energy_tail(self):
        prob = EdgeProblem(w=1.0, ebar0=4.7, v=0.1, gamma=4000.0)
        eps0 = pole_epsilon0(prob)
        e = np.array([3000.0])
        coeff = prob.v**2 * (1.0 / (1.0 - prob.w / eps0) ** 2 + 1.0)
        # both terms fall off as 1/E^2 with a log-slow correction
        assert stationary_profile(prob, e)[0] * e[0] ** 2 == pytest.approx(
            coeff, rel=0.05)

    def test_maximum_near_edge_for_small_gap(self):
        prob = EdgeProblem(w=1.0, ebar0=0.25 + np.log(40.0), v=0.1, gamma=40.0)
        e = np.linspace(0.01, 40.0, 4000)
        rho = stationary_profile(prob, e)
        assert rho.argmax() < 0.05 * e.size

    def test_interference_average_matches_long_time_band_amplitude(self):
        prob = EdgeProblem(w=1.0, ebar0=4.7, v=0.1, gamma=40.0)
        e_probe = 2.0
        # average |psi_E(t)|^2 over one beat period at large t
        eps0 = pole_epsilon0(prob)
        period = 2 * np.pi / abs(eps0 - e_probe)
        ts = np.linspace(4000.0, 4000.0 + period, 40, endpoint=False)
        vals = np.array([abs(psiE_edge(prob, e_probe, t)) ** 2 for t in ts])
        target = stationary_profile(prob, np.array([e_probe]))[0]
        assert vals.mean() == pytest.approx(target, abs=1e-3)


class TestTailLaw:
    def test_slow_tail_fit_quality(self):
        prob = EdgeProblem(w=1.0, ebar0=1.0)
        t = np.geomspace(20.0, 2000.0, 40)
        fit = tail_law_fit(prob, t)
        assert fit.rel_residual < 0.10
        assert not fit.regime_warning

    def test_scaling_collapse_in_wt(self):
        # doubling w halves the time at which the slow stage begins
        fits = {}
        for w in (1.0, 2.0):
            prob = EdgeProblem(w=w, ebar0=1.0 * w)
            t = np.geomspace(30.0 / w, 1000.0 / w, 25)
            fits[w] = tail_law_fit(prob, t)
        # envelopes collapse onto the same function of w t
        ratio = fits[1.0].envelope / fits[2.0].envelope
        assert np.allclose(ratio, ratio.mean(), rtol=0.05)

    def test_early_grid_rejected(self):
        prob = EdgeProblem(w=1.0, ebar0=1.0)
        with pytest.raises(DomainError):
            tail_law_fit(prob, np.linspace(0.5, 100.0, 20))


class TestTransferSurface:
    def test_monotone_decrease_with_gap(self):
        surf = edge_transfer_surface(w=1.0, gaps=np.linspace(0.2, 8.0, 6))
        assert np.all(np.diff(surf.near_edge_fraction) < 0)

    def test_total_transfer_increases_with_w_at_fixed_gap(self):
        lo = edge_transfer_surface(w=0.5, gaps=[1.0]).total_transfer[0]
        hi = edge_transfer_surface(w=1.5, gaps=[1.0]).total_transfer[0]
        assert hi > lo

    def test_cumulative_bookkeeping(self):
        surf = edge_transfer_surface(w=1.0, gaps=[1.0], n_e=400)
        # cumulative at the window end equals the reported fraction
        assert surf.cumulative[0, -1] == pytest.approx(surf.near_edge_fraction[0])
        assert np.all(np.diff(surf.cumulative[0]) >= 0)

    def test_vanishes_for_huge_gap(self):
        surf = edge_transfer_surface(w=1.0, gaps=[300.0])
        assert surf.near_edge_fraction[0] < 1e-4
        assert surf.total_transfer[0] < 1e-2
