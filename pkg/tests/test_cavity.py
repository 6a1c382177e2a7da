"""Dispersive cavity model tests: coupling, shifts, sweeps, fits."""

import math

import numpy as np
import pytest

from mwsqueeze.cavity import (
    DispersiveShifts,
    EnsembleGeometry,
    PhysicsParams,
    cooperativity,
    correction_factor,
    dispersive_shifts,
    effective_coupling,
    fit_sweep,
    reflection_q,
    synth_sweep,
)
from mwsqueeze.errors import FitError, SingularityError

TWO_PI = 2.0 * math.pi


class TestCoupling:
    def test_reference_geometry(self):
        params = PhysicsParams()
        geom = EnsembleGeometry()
        f_cor = correction_factor(geom, params)
        g = effective_coupling(params, geom)
        assert abs(f_cor - 0.0057) < 0.0005
        assert abs(g - TWO_PI * 0.341e6) / (TWO_PI * 0.341e6) < 0.01

    def test_zero_geometry(self):
        params = PhysicsParams()
        geom = EnsembleGeometry(z0=0.0, sigma_z=0.0, r_rms=0.0)
        assert effective_coupling(params, geom) == params.g0 / math.sqrt(2.0)

    def test_axial_term_quadratic_in_offset(self):
        params = PhysicsParams()
        base = EnsembleGeometry(z0=1e-3, sigma_z=0.5e-3, r_rms=4.7e-6)
        doubled = EnsembleGeometry(z0=2e-3, sigma_z=0.5e-3, r_rms=4.7e-6)
        grew = correction_factor(doubled, params) - correction_factor(base, params)
        # independent re-derivation: delta f = 3 z0^2 / (2 Zr^2)
        assert abs(grew - 3.0 * (1e-3) ** 2 / (2.0 * params.rayleigh_zr ** 2)) < 1e-12

    def test_rejects_radial_spread_beyond_waist(self):
        params = PhysicsParams()
        with pytest.raises(ValueError):
            effective_coupling(params, EnsembleGeometry(r_rms=80e-6))


class TestShifts:
    def test_reference_chi0(self):
        params = PhysicsParams(delta_c=TWO_PI * 175e6)
        shifts = dispersive_shifts(params, TWO_PI * 0.341e6)
        assert abs(shifts.chi0 - TWO_PI * 335.0) / (TWO_PI * 335.0) < 0.02

    def test_reference_epsilon_and_companions(self):
        params = PhysicsParams(delta_c=TWO_PI * 175e6)
        shifts = dispersive_shifts(params, TWO_PI * 0.341e6)
        assert abs(shifts.epsilon) < 1.0 / 50.0
        assert abs(shifts.chi_down - (-TWO_PI * 12.3)) / (TWO_PI * 12.3) < 0.05
        assert abs(shifts.chi2 - TWO_PI * 665.0) / (TWO_PI * 665.0) < 0.01

    def test_chi0_at_doubled_detuning(self):
        params = PhysicsParams(delta_c=TWO_PI * 350e6)
        shifts = dispersive_shifts(params, TWO_PI * 0.341e6)
        assert abs(shifts.chi0 - TWO_PI * 183.0) / (TWO_PI * 183.0) < 0.02
        assert abs(shifts.epsilon) < 1.0 / 50.0

    def test_chi0_monotone_in_detuning(self):
        g = TWO_PI * 0.341e6
        detunings = TWO_PI * np.linspace(50e6, 800e6, 24)
        chis = [dispersive_shifts(PhysicsParams(delta_c=d), g).chi0
                for d in detunings]
        assert np.all(np.diff(chis) < 0)

    def test_pole_proximity_raises(self):
        params = PhysicsParams(delta_c=TWO_PI * 0.5e6)
        with pytest.raises(SingularityError):
            dispersive_shifts(params, TWO_PI * 0.341e6)
        # near the down-state pole at omega_hf - delta_2
        near = PhysicsParams(
            delta_c=cn_omega_hf_minus_d2() + TWO_PI * 0.3e6)
        with pytest.raises(SingularityError):
            dispersive_shifts(near, TWO_PI * 0.341e6)


def cn_omega_hf_minus_d2() -> float:
    p = PhysicsParams()
    return p.omega_hf - p.delta_2


class TestCooperativity:
    def test_reference_value(self):
        params = PhysicsParams()
        c = cooperativity(params, TWO_PI * 0.341e6)
        assert abs(c - 1.37) < 0.05

    def test_zero_coupling(self):
        assert cooperativity(PhysicsParams(), 0.0) == 0.0

    def test_quadratic_in_g(self):
        params = PhysicsParams()
        g = TWO_PI * 0.2e6
        assert abs(cooperativity(params, 2 * g) /
                   cooperativity(params, g) - 4.0) < 1e-12


class TestSweep:
    def test_noiseless_zero_crossing_and_bound(self):
        params = PhysicsParams()
        rng = np.random.default_rng(0)
        trace = synth_sweep(0.0, params, photons=1e18, efficiency=1.0, rng=rng)
        mid = np.argmin(np.abs(trace.detuning_grid))
        assert abs(trace.q_quadrature[mid]) < 1e-6
        assert np.max(np.abs(trace.q_quadrature)) <= 1.0 + 5 * trace.noise_sigma

    def test_reflection_magnitude_bounded(self):
        kappa = TWO_PI * 56e3
        delta = np.linspace(-10 * kappa, 10 * kappa, 1001)
        for eta in (0.3, 0.9, 1.0):
            r = 1.0 - eta * kappa / (1j * delta + 0.5 * kappa)
            assert np.all(np.abs(r) <= 1.0 + 1e-12)
            assert np.allclose(np.imag(r), reflection_q(delta, kappa, eta))

    def test_shifted_sweep_recovers_reference_shift(self):
        params = PhysicsParams(delta_c=TWO_PI * 175e6)
        shifts = dispersive_shifts(params, TWO_PI * 0.341e6)
        shift = 900.0 * shifts.chi0  # 900 atoms spin-up
        rng = np.random.default_rng(5)
        trace = synth_sweep(shift, params, photons=5e4, efficiency=0.1, rng=rng)
        center, _ = fit_sweep(trace)
        assert abs(center - TWO_PI * 302e3) < TWO_PI * 15e3

    def test_noiseless_fit_exact(self):
        params = PhysicsParams()
        rng = np.random.default_rng(1)
        shift = 2.3 * params.kappa
        trace = synth_sweep(shift, params, photons=1e18, efficiency=1.0, rng=rng)
        center, se = fit_sweep(trace)
        assert abs(center - shift) < 1e-6 * params.kappa

    def test_fit_unbiased_and_shot_noise_scaling(self):
        params = PhysicsParams()
        shift = 1.7 * params.kappa

        def centers(photons, seed0, repeats=200):
            out = []
            for i in range(repeats):
                rng = np.random.default_rng(seed0 + i)
                trace = synth_sweep(shift, params, photons=photons,
                                    efficiency=0.1, rng=rng)
                out.append(fit_sweep(trace)[0])
            return np.array(out)

        full = centers(4000.0, 100)
        half = centers(2000.0, 700)
        se = full.std(ddof=1) / math.sqrt(len(full))
        assert abs(full.mean() - shift) < 3.0 * se
        ratio = half.std(ddof=1) / full.std(ddof=1)
        assert abs(ratio - math.sqrt(2.0)) < 0.2 * math.sqrt(2.0)

    def test_bias_below_stated_bound(self):
        params = PhysicsParams()
        shift = 0.9 * params.kappa
        rng = np.random.default_rng(77)
        centers = []
        for _ in range(500):
            trace = synth_sweep(shift, params, photons=100.0,
                                efficiency=0.1, rng=rng)
            try:
                centers.append(fit_sweep(trace)[0])
            except FitError:
                continue
        centers = np.array(centers)
        assert len(centers) > 450
        assert abs(centers.mean() - shift) < 0.05 * params.kappa

    def test_out_of_window_shift_fails(self):
        params = PhysicsParams()
        rng = np.random.default_rng(3)
        trace = synth_sweep(60.0 * params.kappa, params, photons=5e4,
                            efficiency=0.1, rng=rng)
        with pytest.raises(FitError):
            fit_sweep(trace)

    def test_degenerate_grid_rejected(self):
        params = PhysicsParams()
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            synth_sweep(0.0, params, photons=100.0, efficiency=0.1,
                        rng=rng, n_samples=7)
        with pytest.raises(ValueError):
            synth_sweep(0.0, params, photons=100.0, efficiency=0.1,
                        rng=rng, span=200 * params.kappa)
