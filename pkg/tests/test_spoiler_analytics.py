import numpy as np
import pytest

from levelband.edge_analytics import EdgeProblem, psi0_edge, psiE_edge, stationary_profile
from levelband.errors import DomainError
from levelband.model import DiscreteBand, Spoiler, build_renormalized_edge_band, make_rng
from levelband.discrete_oracle import diagonalize_arrowhead
from levelband.spoiler_analytics import (
    _denom,
    find_spoiler_roots,
    psi0_spoiler,
    psiE_spoiler,
    psiS_spoiler,
    spoiler_profile,
)

W = 1.0
PROB = EdgeProblem(w=W, ebar0=1.0 + W * np.log(40.0), v=0.1, gamma=40.0)
CANONICAL = Spoiler(e_s=5.0 * W, v_s=W * np.sqrt(5.0))


class TestRoots:
    def test_canonical_preset_residuals(self):
        roots = find_spoiler_roots(PROB, CANONICAL)
        for z in roots.all_roots():
            assert abs(_denom(PROB, CANONICAL, z)) < 1e-10 * max(1.0, abs(z))
        assert roots.eps1 < 0.0
        assert roots.eps2.real > 0.0 and roots.eps2.imag <= 0.0

    def test_root_structure_over_parameter_sweep(self):
        for es_over_w in (0.5, 2.0, 5.0, 20.0):
            for vs2_over_w2 in (0.1, 1.0, 9.0, 25.0):
                sp = Spoiler(e_s=es_over_w * W, v_s=np.sqrt(vs2_over_w2) * W)
                roots = find_spoiler_roots(PROB, sp)
                assert roots.eps1 < 0.0
                assert roots.eps2.imag <= 0.0
                for z in roots.all_roots():
                    assert abs(_denom(PROB, sp, z)) < 1e-10 * max(1.0, abs(z))

    def test_level_repulsion_from_strong_spoiler(self):
        # |eps1| grows with the spoiler coupling
        eps1 = [find_spoiler_roots(PROB, Spoiler(e_s=5.0, v_s=v)).eps1
                for v in (1.0, 2.0, 4.0, 8.0)]
        assert np.all(np.diff(eps1) < 0)

    def test_weak_coupling_limits(self):
        from levelband.edge_analytics import pole_epsilon0
        sp = Spoiler(e_s=5.0, v_s=1e-5)
        roots = find_spoiler_roots(PROB, sp)
        assert roots.eps1 == pytest.approx(pole_epsilon0(PROB), abs=1e-8)
        assert roots.eps2 == pytest.approx(5.0, abs=1e-8)

    def test_zero_coupling_rejected(self):
        with pytest.raises(DomainError):
            find_spoiler_roots(PROB, Spoiler(e_s=5.0, v_s=0.0))


class TestAmplitudes:
    def test_completeness(self):
        assert abs(psi0_spoiler(PROB, CANONICAL, 0.0) - 1.0) < 1e-6
        assert abs(psiE_spoiler(PROB, CANONICAL, 1.7, 0.0)) < 1e-6
        assert abs(psiE_spoiler(PROB, CANONICAL, 7.3, 0.0)) < 1e-6
        assert abs(psiS_spoiler(PROB, CANONICAL, 0.0)) < 1e-6

    def test_reduction_to_edge(self):
        sp = Spoiler(e_s=5.0, v_s=1e-9)
        ts = np.array([0.0, 0.4, 2.0, 9.0])
        assert np.abs(psi0_spoiler(PROB, sp, ts) - psi0_edge(PROB, ts)).max() < 1e-8
        assert np.abs(psiE_spoiler(PROB, sp, 1.7, ts)
                      - psiE_edge(PROB, 1.7, ts)).max() < 1e-8
        assert np.abs(psiS_spoiler(PROB, sp, ts)).max() < 1e-8

    def test_exact_zero_coupling_delegates(self):
        sp = Spoiler(e_s=5.0, v_s=0.0)
        ts = np.array([0.0, 1.0])
        assert np.array_equal(psi0_spoiler(PROB, sp, ts), psi0_edge(PROB, ts))
        assert np.abs(psiS_spoiler(PROB, sp, ts)).max() == 0.0


class TestOracleEquivalence:
    @pytest.fixture(scope="class")
    def oracle(self):
        g = 100.0
        base = build_renormalized_edge_band(W, PROB.ebar0, g_edge=g,
                                            e_dense=40.0, e_cut=1e4)
        pos = int(np.searchsorted(base.energies, CANONICAL.e_s))
        energies = np.insert(base.energies, pos, CANONICAL.e_s)
        couplings = np.insert(base.couplings, pos, CANONICAL.v_s)
        band = DiscreteBand(e0=base.e0, energies=energies, couplings=couplings)
        return band, diagonalize_arrowhead(band), pos

    def test_level_population(self, oracle):
        band, eig, pos = oracle
        ts = np.linspace(0.0, 0.3 * 2 * np.pi * 100.0, 16)
        rho_oracle = np.abs(eig.psi0(ts)) ** 2
        rho_analytic = np.abs(psi0_spoiler(PROB, CANONICAL, ts)) ** 2
        assert np.abs(rho_oracle - rho_analytic).max() < 1e-2

    def test_spoiler_population(self, oracle):
        band, eig, pos = oracle
        for t in (30.0, 90.0):
            amp = eig.band_amplitudes(t)[pos]
            analytic = psiS_spoiler(PROB, CANONICAL, t)
            assert abs(abs(amp) ** 2 - abs(analytic) ** 2) < 1e-2

    def test_probe_band_populations(self, oracle):
        band, eig, pos = oracle
        t = 90.0
        amps = eig.band_amplitudes(t)
        for e_target in (1.0, 4.0, 7.0):
            j = int(np.argmin(np.abs(band.energies - e_target)))
            if j == pos:
                j += 1
            analytic = psiE_spoiler(PROB, CANONICAL, band.energies[j], t)
            assert abs(abs(amps[j]) ** 2 - abs(analytic) ** 2) < 1e-2


class TestProfile:
    def test_zero_coupling_matches_edge_profile(self):
        e = np.linspace(0.05, 39.0, 500)
        prof = spoiler_profile(PROB, Spoiler(e_s=5.0, v_s=0.0), e)
        assert np.allclose(prof.rho, stationary_profile(PROB, e))

    def test_fano_tail_toward_higher_energies(self):
        e = np.linspace(0.05, 39.0, 3000)
        prof = spoiler_profile(PROB, CANONICAL, e)
        below = (e > CANONICAL.e_s - 2.0) & (e < CANONICAL.e_s - 0.05)
        above = (e > CANONICAL.e_s + 0.05) & (e < CANONICAL.e_s + 2.0)
        assert prof.rho[above].sum() > prof.rho[below].sum()

    def test_bottom_population_rises_as_spoiler_approaches(self):
        # The blue-side tail relocates toward the bottom of the band as the
        # spoiler energy comes down; compare the bottom-eighth population
        # for a far vs a near spoiler.
        e = np.linspace(0.01, 39.99, 6000)
        pops = {}
        for e_s in (10.0, 2.5):
            prof = spoiler_profile(PROB, Spoiler(e_s=e_s, v_s=1.5), e)
            window = e <= PROB.gamma / 8.0
            pops[e_s] = np.trapezoid(prof.rho[window], e[window])
        assert pops[2.5] > pops[10.0]

    def test_unitarity_bookkeeping(self):
        # The stationary profile extends past any finite window as 1/E^2, so
        # close the books on a grid reaching far beyond the edge region.
        wide = EdgeProblem(w=PROB.w, ebar0=PROB.ebar0, v=PROB.v, gamma=8000.0)
        e = np.concatenate([np.linspace(0.005, 50.0, 6000),
                            np.geomspace(50.0, 8000.0, 3000)[1:]])
        prof = spoiler_profile(wide, CANONICAL, e)
        g = wide.w / wide.v**2
        total = (prof.level_population + prof.rho_spoiler
                 + g * np.trapezoid(prof.rho, e))
        assert total == pytest.approx(1.0, abs=5e-3)

    def test_spoiler_population_small_when_far(self):
        e = np.linspace(0.01, 39.0, 2000)
        prof = spoiler_profile(PROB, Spoiler(e_s=20.0, v_s=2.0), e)
        assert prof.rho_spoiler < 0.2 * prof.edge_population
