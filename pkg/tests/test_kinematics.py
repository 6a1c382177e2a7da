"""Tests for momentum-class bookkeeping and pulse transfer."""

import math

import numpy as np
import pytest

from mwsqueeze.cavity import PhysicsParams
from mwsqueeze.errors import SimulationError
from mwsqueeze.kinematics import (
    MomentumDistribution,
    RamanPulse,
    accumulated_phase,
    apply_momentum_pulse,
    chirp_rate,
    discrete_classes,
    doppler_detuning,
    save_distribution_csv,
    save_spectrum_csv,
    thermal_distribution,
    transfer_probability,
    velocity_select,
    velocity_spectrum,
)

TWO_PI = 2.0 * math.pi
PARAMS = PhysicsParams()


def ideal_pulse(area: float, target_p: float, kind: str = "bragg") -> RamanPulse:
    rabi = TWO_PI * 10e3
    return RamanPulse(
        rabi=rabi, duration=area / rabi, kind=kind, ideal=True,
        two_photon_detuning=float(doppler_detuning(target_p, PARAMS)),
    )


class TestChirpRate:
    def test_value_for_vertical_raman_axis(self):
        b = chirp_rate(PARAMS)
        assert abs(b - TWO_PI * 25.11e6) < TWO_PI * 0.02e6

    def test_zero_gravity(self):
        from dataclasses import replace
        assert chirp_rate(replace(PARAMS, gravity_parallel=0.0)) == 0.0

    def test_linear_in_gravity(self):
        from dataclasses import replace
        doubled = replace(PARAMS, gravity_parallel=2.0 * PARAMS.gravity_parallel)
        assert abs(chirp_rate(doubled) - 2.0 * chirp_rate(PARAMS)) < 1e-6


class TestDopplerDetuning:
    def test_at_rest(self):
        assert doppler_detuning(0.0, PARAMS) == 0.0

    def test_single_recoil_value(self):
        d = doppler_detuning(1.0, PARAMS)
        assert abs(d - TWO_PI * 15.1e3) < TWO_PI * 0.05e3

    def test_antisymmetric(self):
        p = np.array([0.5, 1.0, 3.7])
        np.testing.assert_allclose(
            doppler_detuning(-p, PARAMS), -doppler_detuning(p, PARAMS)
        )


class TestTransferProbability:
    def test_resonant_pi_pulse_is_complete(self):
        rabi = TWO_PI * 10e3
        pulse = RamanPulse(rabi=rabi, duration=math.pi / rabi)
        assert abs(transfer_probability(pulse, 0.0) - 1.0) < 1e-12

    def test_detuned_by_rabi_frequency(self):
        rabi = TWO_PI * 10e3
        pulse = RamanPulse(rabi=rabi, duration=math.pi / rabi)
        expected = 0.5 * math.sin(0.5 * math.pi * math.sqrt(2.0)) ** 2
        assert abs(transfer_probability(pulse, rabi) - expected) < 1e-12

    def test_symmetric_in_detuning(self):
        pulse = RamanPulse(rabi=TWO_PI * 3e3, duration=1e-4)
        deltas = TWO_PI * np.array([1e3, 7e3, 40e3])
        np.testing.assert_allclose(
            transfer_probability(pulse, deltas),
            transfer_probability(pulse, -deltas),
        )

    def test_bounded(self):
        rng = np.random.default_rng(0)
        pulse = RamanPulse(rabi=TWO_PI * 8e3, duration=3.3e-4)
        probs = transfer_probability(
            pulse, TWO_PI * 1e5 * rng.standard_normal(200)
        )
        assert np.all((probs >= 0.0) & (probs <= 1.0))

    def test_pulse_validation(self):
        with pytest.raises(ValueError):
            RamanPulse(rabi=0.0, duration=1e-4)
        with pytest.raises(ValueError):
            RamanPulse(rabi=1.0, duration=-1e-4)
        with pytest.raises(ValueError):
            RamanPulse(rabi=1.0, duration=1e-4, kind="kapitza")


class TestVelocitySelect:
    def test_narrows_thermal_cloud_to_subrecoil_spread(self):
        dist = thermal_distribution()
        assert abs(dist.rms_spread() - 5.0 / 2.3548) < 0.02
        selected, survival = velocity_select(
            dist, TWO_PI * 1.4e3, 0.0, passes=2, params=PARAMS
        )
        assert 0.05 < selected.rms_spread() < 0.2
        assert 0.0 < survival < 0.1
        assert abs(selected.total_weight - dist.total_weight) < 1e-9

    def test_survival_matches_lineshape_quadrature(self):
        dist = thermal_distribution()
        rabi = TWO_PI * 1.4e3
        _, survival = velocity_select(dist, rabi, 0.0, passes=2, params=PARAMS)
        pulse = RamanPulse(rabi=rabi, duration=math.pi / rabi)
        weights = dist.weight_up + dist.weight_down
        line = transfer_probability(
            pulse, -doppler_detuning(dist.grid, PARAMS)
        ) ** 2
        assert abs(survival - float(line @ weights)) < 1e-12

    def test_wide_pulse_keeps_everything(self):
        dist = thermal_distribution()
        selected, survival = velocity_select(
            dist, TWO_PI * 1e9, 0.0, passes=1, params=PARAMS
        )
        assert survival > 1.0 - 1e-6
        assert abs(selected.rms_spread() - dist.rms_spread()) < 1e-6
        again, survival2 = velocity_select(
            selected, TWO_PI * 1e9, 0.0, passes=1, params=PARAMS
        )
        assert survival2 > 1.0 - 1e-6
        assert np.max(np.abs(again.weight_down - selected.weight_down)) < 1e-9

    def test_selected_spread_scales_with_rabi_frequency(self):
        dist = thermal_distribution()
        ratios = []
        for omega_hz in (0.5e3, 1.0e3, 1.5e3, 2.0e3, 2.5e3, 3.0e3):
            sel, _ = velocity_select(
                dist, TWO_PI * omega_hz, 0.0, passes=2, params=PARAMS
            )
            ratios.append(sel.rms_spread() / omega_hz)
        mean = np.mean(ratios)
        assert np.all(np.abs(np.array(ratios) / mean - 1.0) < 0.15)

    def test_empty_selection_raises(self):
        dist = thermal_distribution()
        with pytest.raises(SimulationError):
            velocity_select(
                dist, TWO_PI * 0.2e3, TWO_PI * 3e6, passes=2, params=PARAMS
            )

    def test_rejects_zero_passes(self):
        with pytest.raises(ValueError):
            velocity_select(thermal_distribution(), TWO_PI * 1e3, 0.0, passes=0)


class TestVelocitySpectrum:
    def test_two_class_superposition_peak_separation(self):
        dist = discrete_classes([(0.0, 0.5, "down"), (4.0, 0.5, "down")])
        grid = np.linspace(-TWO_PI * 20e3, TWO_PI * 90e3, 2201)
        spec = velocity_spectrum(dist, TWO_PI * 2e3, grid, PARAMS)
        low = np.argmax(spec[grid < TWO_PI * 30e3])
        high = np.argmax(np.where(grid >= TWO_PI * 30e3, spec, -1.0))
        separation = grid[high] - grid[low]
        assert abs(separation - TWO_PI * 60.3e3) < TWO_PI * 0.5e3

    def test_single_class_reproduces_lineshape(self):
        dist = discrete_classes([(2.0, 0.7, "up")])
        rabi = TWO_PI * 1.5e3
        grid = np.linspace(TWO_PI * 10e3, TWO_PI * 50e3, 801)
        spec = velocity_spectrum(dist, rabi, grid, PARAMS)
        pulse = RamanPulse(rabi=rabi, duration=math.pi / rabi)
        direct = 0.7 * transfer_probability(
            pulse, grid - float(doppler_detuning(2.0, PARAMS))
        )
        assert np.max(np.abs(spec - direct)) < 1e-12

    def test_peak_heights_track_class_weights(self):
        dist = discrete_classes([(0.0, 0.3, "down"), (4.0, 0.7, "down")])
        rabi = TWO_PI * 1e3  # separation 60 kHz > 10 Omega
        grid = np.linspace(-TWO_PI * 15e3, TWO_PI * 80e3, 4001)
        spec = velocity_spectrum(dist, rabi, grid, PARAMS)
        low = spec[grid < TWO_PI * 30e3].max()
        high = spec[grid >= TWO_PI * 30e3].max()
        assert abs(low / high - 3.0 / 7.0) < 0.02 * (3.0 / 7.0)

    def test_width_monotone_in_lineshape_and_distribution(self):
        def fwhm(grid, spec):
            half = spec.max() / 2.0
            above = np.nonzero(spec >= half)[0]
            return grid[above[-1]] - grid[above[0]]

        grid = np.linspace(-TWO_PI * 40e3, TWO_PI * 40e3, 4001)
        narrow = discrete_classes([(0.0, 1.0, "down")])
        widths = [
            fwhm(grid, velocity_spectrum(narrow, TWO_PI * om, grid, PARAMS))
            for om in (1e3, 2e3, 4e3)
        ]
        assert widths[0] < widths[1] < widths[2]

        widths = [
            fwhm(grid, velocity_spectrum(
                thermal_distribution(fwhm=w, half_span=4.0),
                TWO_PI * 1e3, grid, PARAMS,
            ))
            for w in (0.25, 0.75, 1.5)
        ]
        assert widths[0] < widths[1] < widths[2]


class TestApplyMomentumPulse:
    def test_bragg_ladder_reaches_ten_recoils(self):
        dist = discrete_classes([(0.0, 1.0, "down")])
        dist = apply_momentum_pulse(dist, ideal_pulse(0.5 * math.pi, 0.0), PARAMS)
        for target in (2.0, 4.0, 6.0, 8.0):
            dist = apply_momentum_pulse(dist, ideal_pulse(math.pi, target), PARAMS)
        assert abs(dist.population(-0.005, 0.005) - 0.5) < 1e-12
        assert abs(dist.population(9.995, 10.005) - 0.5) < 1e-12
        assert abs(dist.total_weight + dist.lost - 1.0) < 1e-12

    def test_zero_duration_is_identity(self):
        dist = discrete_classes([(0.0, 1.0, "down")])
        pulse = RamanPulse(rabi=TWO_PI * 10e3, duration=0.0, kind="bragg")
        assert apply_momentum_pulse(dist, pulse, PARAMS) is dist

    def test_pulse_loss_compounds(self):
        dist = discrete_classes([(0.0, 1.0, "down")])
        for target in (0.0, 2.0, 4.0, 6.0, 8.0):
            dist = apply_momentum_pulse(
                dist, ideal_pulse(math.pi, target), PARAMS, loss_prob=0.002
            )
        assert abs(dist.lost - (1.0 - 0.998**5)) < 1e-12
        assert abs(dist.total_weight + dist.lost - 1.0) < 1e-12

    def test_raman_pulse_relabels_hyperfine_state(self):
        dist = discrete_classes([(0.0, 1.0, "down")])
        out = apply_momentum_pulse(
            dist, ideal_pulse(math.pi, 0.0, kind="raman"), PARAMS
        )
        assert abs(out.population(1.995, 2.005, spin="up") - 1.0) < 1e-12
        assert out.population(-3.0, 3.0, spin="down") < 1e-12

    def test_real_lineshape_resonant_class_transfers_fully(self):
        dist = discrete_classes([(0.0, 1.0, "down")])
        rabi = TWO_PI * 10e3
        pulse = RamanPulse(rabi=rabi, duration=math.pi / rabi, kind="bragg",
                           two_photon_detuning=0.0)
        out = apply_momentum_pulse(dist, pulse, PARAMS)
        assert abs(out.population(1.995, 2.005) - 1.0) < 1e-12

    def test_weight_conserved_through_random_sequence(self):
        dist = thermal_distribution(fwhm=1.0, half_span=4.0)
        rng = np.random.default_rng(4)
        for _ in range(6):
            pulse = RamanPulse(
                rabi=TWO_PI * (2e3 + 8e3 * rng.random()),
                duration=2e-4 * rng.random(),
                two_photon_detuning=TWO_PI * 40e3 * rng.standard_normal(),
                kind="bragg" if rng.random() < 0.5 else "raman",
            )
            dist = apply_momentum_pulse(dist, pulse, PARAMS, loss_prob=0.001)
        assert abs(dist.total_weight + dist.lost - 1.0) < 1e-12
        assert np.all(dist.weight_up >= 0.0)
        assert np.all(dist.weight_down >= 0.0)


class TestAccumulatedPhase:
    def test_lab_frame_at_four_milliseconds(self):
        phi = accumulated_phase(4e-3, "lab", params=PARAMS)
        assert 2520.0 < phi < 2530.0

    def test_falling_frame_cancels_with_matched_chirp(self):
        phi = accumulated_phase(
            4e-3, "falling", chirp_b=chirp_rate(PARAMS), params=PARAMS
        )
        assert phi == 0.0

    def test_quadratic_scaling(self):
        assert abs(
            accumulated_phase(2e-3, "lab", params=PARAMS)
            - 4.0 * accumulated_phase(1e-3, "lab", params=PARAMS)
        ) < 1e-9

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            accumulated_phase(-1e-3, "lab", params=PARAMS)
        with pytest.raises(ValueError):
            accumulated_phase(1e-3, "comoving", params=PARAMS)


class TestMomentumDistribution:
    def test_validation(self):
        grid = np.arange(0.0, 1.0, 0.01)
        ones = np.full(grid.size, 1e-3)
        with pytest.raises(ValueError):
            MomentumDistribution(grid, -ones, ones)
        with pytest.raises(ValueError):
            MomentumDistribution(grid[::-1], ones, ones)
        with pytest.raises(ValueError):
            MomentumDistribution(
                np.arange(0.0, 2.0, 0.02), np.full(100, 1e-3), np.zeros(100)
            )
        with pytest.raises(ValueError):
            MomentumDistribution(grid, np.full(grid.size, 0.2), ones)

    def test_thermal_moments(self):
        dist = thermal_distribution(fwhm=5.0)
        assert abs(dist.total_weight - 1.0) < 1e-12
        assert abs(dist.mean_momentum()) < 1e-9
        assert abs(dist.rms_spread() - 5.0 / 2.3548) < 0.02

    def test_csv_round_trip(self, tmp_path):
        dist = discrete_classes([(0.0, 0.4, "down"), (2.0, 0.6, "up")])
        path = tmp_path / "dist.csv"
        save_distribution_csv(dist, path)
        data = np.genfromtxt(path, delimiter=",", names=True)
        assert abs(data["weight"].sum() - 1.0) < 1e-9
        top = data["momentum_hbark"][np.argmax(data["weight"])]
        assert abs(top - 2.0) < 1e-6

        grid = np.linspace(-TWO_PI * 5e3, TWO_PI * 5e3, 11)
        spec = np.linspace(0.0, 1.0, 11)
        spath = tmp_path / "spec.csv"
        save_spectrum_csv(grid, spec, spath)
        sdata = np.genfromtxt(spath, delimiter=",", names=True)
        assert abs(sdata["detuning_hz"][0] + 5e3) < 1e-3
        assert abs(sdata["population"][-1] - 1.0) < 1e-12
