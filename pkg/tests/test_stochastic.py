import math

import numpy as np
import pytest
from scipy.integrate import quad

from coupled_mzi import (
    ContextualValues,
    CouplingModel,
    EventRecord,
    ObservableCoefficients,
    ObservationBudget,
    averaged_detector_params,
    contextual_estimate,
    contextual_values,
    damping_eta,
    detector_params,
    joint_amplitudes,
    joint_statistics,
    observation_time,
    raised_cosine_pdf,
    sample_events,
    sample_events_fluctuating,
    sample_events_sharded,
)
from coupled_mzi.params import DetectorDrain, SystemDrain
from conftest import balanced_mzi

OBS = ObservableCoefficients()


class TestRaisedCosine:
    MODEL = CouplingModel(gamma=math.pi / 2, sigma=math.pi / 4)

    def test_peak_value(self):
        assert raised_cosine_pdf(self.MODEL.gamma, self.MODEL) == pytest.approx(
            1.0 / self.MODEL.sigma, abs=1e-15
        )

    def test_support_edges(self):
        assert raised_cosine_pdf(self.MODEL.gamma - self.MODEL.sigma, self.MODEL) == 0.0
        assert raised_cosine_pdf(self.MODEL.gamma + self.MODEL.sigma, self.MODEL) == 0.0
        assert raised_cosine_pdf(self.MODEL.gamma + 2.0, self.MODEL) == 0.0

    def test_normalization_quadrature(self):
        total, _ = quad(
            lambda g: raised_cosine_pdf(g, self.MODEL),
            self.MODEL.gamma - self.MODEL.sigma,
            self.MODEL.gamma + self.MODEL.sigma,
            limit=200,
        )
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_degenerate_width_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            raised_cosine_pdf(1.0, CouplingModel(gamma=1.0, sigma=0.0))


class TestDampingEta:
    def test_limits(self):
        assert damping_eta(0.0) == 1.0
        assert damping_eta(math.pi) == 0.5
        assert damping_eta(1e-9) == pytest.approx(1.0, abs=1e-12)
        assert damping_eta(math.pi - 1e-9) == pytest.approx(0.5, abs=1e-6)

    def test_half_pi_value(self):
        assert damping_eta(math.pi / 2) == pytest.approx(8.0 / (3.0 * math.pi), abs=1e-12)

    def test_near_pi_against_quadrature(self):
        sigma = math.pi - 1e-6
        model = CouplingModel(gamma=math.pi, sigma=sigma)
        expected, _ = quad(
            lambda g: raised_cosine_pdf(g, model) * math.cos(g - model.gamma),
            model.gamma - sigma,
            model.gamma + sigma,
            limit=400,
        )
        assert damping_eta(sigma) == pytest.approx(expected, abs=1e-8)

    def test_domain(self):
        with pytest.raises(ValueError):
            damping_eta(-0.1)
        with pytest.raises(ValueError):
            damping_eta(math.pi + 0.1)

    def test_monotone_decreasing(self):
        grid = np.linspace(0.0, math.pi, 50)
        values = [damping_eta(s) for s in grid]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_interference_damping_quadrature_random(self, rng):
        """eta is exactly the raised-cosine damping of the coupling-sensitive
        interference component cos(gamma' + phi_d) inside Gamma."""
        checked = 0
        while checked < 20:
            gamma = rng.uniform(0.0, 2 * math.pi)
            phi_d = rng.uniform(-3, 3)
            sigma = rng.uniform(0.1, math.pi - 0.05)
            if abs(math.cos(gamma + phi_d)) < 0.1:
                continue
            model = CouplingModel(gamma=gamma, sigma=sigma)
            averaged, _ = quad(
                lambda g: raised_cosine_pdf(g, model) * math.cos(g + phi_d),
                gamma - sigma,
                gamma + sigma,
                limit=400,
            )
            assert averaged / math.cos(gamma + phi_d) == pytest.approx(
                damping_eta(sigma), abs=1e-8
            )
            checked += 1


class TestAveragedDetectorParams:
    def test_identity_when_deterministic(self):
        p = detector_params(balanced_mzi(0.7), 1.1)
        averaged = averaged_detector_params(p, CouplingModel(gamma=1.1))
        assert averaged == p

    def test_pair_probability_scales_gamma(self):
        p = detector_params(balanced_mzi(0.7), 1.1)
        averaged = averaged_detector_params(p, CouplingModel(gamma=1.1, pair_probability=0.5))
        assert averaged.Gamma == pytest.approx(0.5 * p.Gamma, abs=1e-15)
        assert averaged.Delta == p.Delta
        assert averaged.visibility == p.visibility

    def test_width_damps_gamma_with_quadrature_oracle(self):
        # at phi_d = pi/2 the coupling-free part of Gamma vanishes, so the
        # full Gamma damps by exactly eta(sigma)
        gamma, sigma = 1.3, math.pi / 2
        det = balanced_mzi(math.pi / 2)
        p = detector_params(det, gamma)
        averaged = averaged_detector_params(p, CouplingModel(gamma=gamma, sigma=sigma))
        assert averaged.Gamma == pytest.approx(8.0 / (3.0 * math.pi) * p.Gamma, abs=1e-12)
        model = CouplingModel(gamma=gamma, sigma=sigma)
        expected, _ = quad(
            lambda g: raised_cosine_pdf(g, model)
            * math.sin(g / 2) * math.sin(g / 2 + det.tuning_phase),
            gamma - sigma,
            gamma + sigma,
            limit=400,
        )
        assert averaged.Gamma == pytest.approx(expected, abs=1e-10)

    def test_amplifies_contextual_values(self):
        p = detector_params(balanced_mzi(0.0), math.pi)
        damped = averaged_detector_params(p, CouplingModel(gamma=math.pi, pair_probability=0.5))
        cv = contextual_values(OBS, damped)
        assert cv.alpha_d1 == pytest.approx(-2.0, abs=1e-12)
        assert cv.alpha_d2 == pytest.approx(2.0, abs=1e-12)


def quarter_stats():
    det = balanced_mzi(math.pi / 2)
    sysm = balanced_mzi(0.4)
    return det, sysm, joint_statistics(joint_amplitudes(det, sysm, math.pi / 2))


class TestSampleEvents:
    def test_deterministic_distribution(self):
        q_open_stats = joint_statistics(
            joint_amplitudes(
                balanced_mzi(0.0),
                balanced_mzi(0.0),
                0.0,
            )
        )
        # D1 is dark here; all mass sits on D2 rows
        events = sample_events(q_open_stats, 500, seed=7)
        assert all(ev.detector_drain is DetectorDrain.D2 for ev in events)

    def test_seed_reproducibility(self):
        _, _, stats = quarter_stats()
        a = sample_events(stats, 1000, seed=123)
        b = sample_events(stats, 1000, seed=123)
        assert a == b
        c = sample_events(stats, 1000, seed=124)
        assert a != c

    def test_sequence_indices(self):
        _, _, stats = quarter_stats()
        events = sample_events(stats, 50, seed=5)
        assert [ev.sequence_index for ev in events] == list(range(50))

    def test_uniform_frequencies_within_binomial_bounds(self):
        stats = joint_statistics(joint_amplitudes(balanced_mzi(0.0), balanced_mzi(0.0), math.pi))
        assert np.allclose(stats.joint, 0.25, atol=1e-12)
        n = 1_000_000
        events = sample_events(stats, n, seed=20240817)
        counts = np.zeros((2, 2))
        for ev in events:
            counts[ev.detector_drain.value, ev.system_drain.value] += 1
        sigma = math.sqrt(n * 0.25 * 0.75)
        assert np.max(np.abs(counts - n * 0.25)) < 5 * sigma

    @pytest.mark.parametrize("n_shards", [1, 2, 3, 5, 8])
    def test_shard_invariance(self, n_shards):
        _, _, stats = quarter_stats()
        canonical = sample_events(stats, 10_001, seed=99)
        sharded = sample_events_sharded(stats, 10_001, seed=99, n_shards=n_shards)
        assert canonical == sharded

    def test_seed_validation(self):
        _, _, stats = quarter_stats()
        with pytest.raises(ValueError):
            sample_events(stats, 10, seed=-1)
        with pytest.raises(ValueError):
            sample_events(stats, 0, seed=1)


class TestFluctuatingSampler:
    def test_matches_plain_sampler_statistics_at_zero_width(self):
        det, sysm, stats = quarter_stats()
        model = CouplingModel(gamma=math.pi / 2)
        events = sample_events_fluctuating(det, sysm, model, 200_000, seed=31)
        freq_d1 = np.mean([ev.detector_drain is DetectorDrain.D1 for ev in events])
        assert freq_d1 == pytest.approx(stats.p_detector(DetectorDrain.D1), abs=0.005)

    def test_sampled_marginal_matches_exact_average(self):
        # the exactly averaged probability operators keep the lower-path
        # entry fixed and damp only the coupling-sensitive interference:
        # Gamma_bar = eta' Gamma at cos(phi_d) = 0 and Delta_bar follows
        # from Delta_bar + Gamma_bar = cos(phi_d)
        gamma, sigma = 1.1, 2.0
        det = balanced_mzi(math.pi / 2)
        sysm = balanced_mzi(0.4)
        model = CouplingModel(gamma=gamma, sigma=sigma)
        damped = averaged_detector_params(detector_params(det, gamma), model)
        gamma_bar = damped.Gamma
        delta_bar = math.cos(det.tuning_phase) - gamma_bar
        p1 = 0.5 * (damped.beta_plus - damped.visibility * (delta_bar + sysm.qpc1.delta * gamma_bar))
        events = sample_events_fluctuating(det, sysm, model, 400_000, seed=77)
        freq = np.mean([ev.detector_drain is DetectorDrain.D1 for ev in events])
        assert freq == pytest.approx(p1, abs=0.004)

    def test_unpaired_emission_behaves_like_zero_coupling(self):
        det = balanced_mzi(0.0)
        sysm = balanced_mzi(0.0)
        model = CouplingModel(gamma=math.pi, pair_probability=0.0)
        events = sample_events_fluctuating(det, sysm, model, 50_000, seed=13)
        # at gamma=0 with these tunings D1 is completely dark
        assert all(ev.detector_drain is DetectorDrain.D2 for ev in events)


class TestContextualEstimate:
    def test_single_drain_events(self):
        cv = ContextualValues(-1.0, 1.0, OBS)
        events = [EventRecord(DetectorDrain.D2, SystemDrain.S1, i) for i in range(8)]
        report = contextual_estimate(events, cv)
        assert report.estimate == 1.0
        assert report.empirical_variance == 0.0

    def test_estimate_converges_to_path_bias(self):
        det, sysm, stats = quarter_stats()
        cv = contextual_values(OBS, detector_params(det, math.pi / 2))
        assert (cv.alpha_d1, cv.alpha_d2) == (pytest.approx(-1.0), pytest.approx(3.0))
        n = 100_000
        events = sample_events(stats, n, seed=4242)
        report = contextual_estimate(
            events,
            cv,
            probabilities=(stats.p_detector(DetectorDrain.D1), stats.p_detector(DetectorDrain.D2)),
            seed=4242,
        )
        # ground truth <sigma_z> = delta1_s = 0; predicted MSE = 3/n
        assert report.predicted_mse == pytest.approx(3.0 / n, abs=1e-12)
        assert abs(report.estimate) < 5.0 * math.sqrt(report.predicted_mse)
        assert report.seed == 4242
        assert report.rng_algorithm == "philox4x64"

    def test_predicted_vs_empirical_over_runs(self):
        det, sysm, stats = quarter_stats()
        cv = contextual_values(OBS, detector_params(det, math.pi / 2))
        probs = (stats.p_detector(DetectorDrain.D1), stats.p_detector(DetectorDrain.D2))
        n = 10_000
        estimates = []
        predicted = None
        for seed in range(100):
            events = sample_events(stats, n, seed=seed)
            report = contextual_estimate(events, cv, probabilities=probs, seed=seed)
            estimates.append(report.estimate)
            predicted = report.predicted_mse
        empirical = float(np.var(estimates, ddof=1))
        assert predicted == pytest.approx(empirical, rel=0.2)

    def test_empirical_variance_tracks_prediction(self):
        det, sysm, stats = quarter_stats()
        cv = contextual_values(OBS, detector_params(det, math.pi / 2))
        events = sample_events(stats, 50_000, seed=8)
        report = contextual_estimate(events, cv)
        assert report.empirical_variance == pytest.approx(report.predicted_mse, rel=0.05)
        assert report.predicted_mse <= report.mse_upper_bound

    def test_upper_bound_dominates_random(self, rng):
        for _ in range(100):
            p1 = rng.uniform(0, 1)
            a1, a2 = rng.uniform(-5, 5, size=2)
            cv = ContextualValues(a1, a2, OBS)
            events = [EventRecord(DetectorDrain.D1, SystemDrain.S1, 0)]
            report = contextual_estimate(events, cv, probabilities=(p1, 1 - p1))
            assert report.predicted_mse <= report.mse_upper_bound + 1e-15

    def test_empty_events_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            contextual_estimate([], ContextualValues(-1.0, 1.0, OBS))

    def test_unbiasedness_over_seeded_runs(self):
        det, sysm, stats = quarter_stats()
        cv = contextual_values(OBS, detector_params(det, math.pi / 2))
        probs = (stats.p_detector(DetectorDrain.D1), stats.p_detector(DetectorDrain.D2))
        truth = cv.alpha_d1 * probs[0] + cv.alpha_d2 * probs[1]
        n, runs = 10_000, 100
        grand = []
        predicted = None
        for seed in range(runs):
            events = sample_events(stats, n, seed=1000 + seed)
            report = contextual_estimate(events, cv, probabilities=probs)
            grand.append(report.estimate)
            predicted = report.predicted_mse
        standard_error = math.sqrt(predicted / runs)
        assert abs(np.mean(grand) - truth) < 4.0 * standard_error


class TestObservationTime:
    BUDGET = ObservationBudget(path_length=1e-5, fermi_velocity=1e5, target_rms=0.1)

    def test_strong_measurement_bound(self):
        cv = ContextualValues(-1.0, 1.0, OBS)
        tau = self.BUDGET.mean_absorption_time
        assert tau == pytest.approx(1e-10, rel=1e-12)
        assert observation_time(cv, self.BUDGET) == pytest.approx(200.0 * tau, rel=1e-12)

    def test_ambiguous_measurement_costs_more(self):
        cv = ContextualValues(-1.0, 3.0, OBS)
        tau = self.BUDGET.mean_absorption_time
        assert observation_time(cv, self.BUDGET) == pytest.approx(1000.0 * tau, rel=1e-12)

    def test_rms_scaling(self):
        cv = ContextualValues(-1.0, 1.0, OBS)
        loose = ObservationBudget(path_length=1e-5, fermi_velocity=1e5, target_rms=0.2)
        assert observation_time(cv, loose) == pytest.approx(
            observation_time(cv, self.BUDGET) / 4.0, rel=1e-12
        )

    def test_explicit_tau_override(self):
        budget = ObservationBudget(path_length=1e-5, fermi_velocity=1e5, target_rms=0.1, tau_m=2e-9)
        assert budget.mean_absorption_time == 2e-9

    def test_validation(self):
        with pytest.raises(ValueError):
            ObservationBudget(path_length=0.0, fermi_velocity=1e5, target_rms=0.1)
        with pytest.raises(ValueError):
            ObservationBudget(path_length=1e-5, fermi_velocity=1e5, target_rms=-0.1)


class TestRmsScaling:
    def test_log_log_slope(self):
        det, sysm, stats = quarter_stats()
        cv = contextual_values(OBS, detector_params(det, math.pi / 2))
        probs = (stats.p_detector(DetectorDrain.D1), stats.p_detector(DetectorDrain.D2))
        truth = cv.alpha_d1 * probs[0] + cv.alpha_d2 * probs[1]
        sizes = [1_000, 10_000, 100_000]
        rms = []
        for k, n in enumerate(sizes):
            errors = []
            for run in range(40):
                events = sample_events(stats, n, seed=5_000 + 100 * k + run)
                report = contextual_estimate(events, cv, probabilities=probs)
                errors.append((report.estimate - truth) ** 2)
            rms.append(math.sqrt(np.mean(errors)))
        slope = np.polyfit(np.log(sizes), np.log(rms), 1)[0]
        assert -0.55 <= slope <= -0.45
