"""Tests for decoy-state bounds and the key rate."""

import itertools

import numpy as np
import pytest

from qsi_decoy_lab.models.channel import ChannelSpec, GainQber
from qsi_decoy_lab.models.photon import PhotonNumberDistribution
from qsi_decoy_lab.models.protocol import (
    KEY_RATE_CSV_HEADER,
    DecoyProtocolSpec,
    EstimationMethod,
)
from qsi_decoy_lab.services.channel_detector import error_n, gain_and_qber, transmittance, yield_n
from qsi_decoy_lab.services.decoy_security import (
    binary_entropy,
    decoy_bounds_analytic_wcs,
    decoy_bounds_lp,
    resolve_method,
    secure_key_rate,
    throughput_fom,
)
from qsi_decoy_lab.services.photon_sources import wcs_distribution
from qsi_decoy_lab.utils.error_handling import DegenerateIntensitiesError, ValidationError


def _measure(intensities, loss_db, n_cut=15):
    ch = ChannelSpec(loss_db=loss_db)
    dists = [wcs_distribution(x, n_cut) for x in intensities]
    return ch, dists, [gain_and_qber(d, ch) for d in dists]


class TestBinaryEntropy:
    """Tests for H2."""

    def test_values(self):
        assert binary_entropy(0.5) == pytest.approx(1.0)
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.11) == pytest.approx(0.4999, abs=1e-3)

    def test_symmetric(self):
        assert binary_entropy(0.2) == pytest.approx(binary_entropy(0.8))

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            binary_entropy(1.5)


class TestAnalyticBounds:
    """Tests for the vacuum + weak decoy estimates."""

    def test_lossless_reference_value(self):
        ch, dists, gains = _measure([0.3, 0.1], loss_db=0.0, n_cut=20)
        bounds = decoy_bounds_analytic_wcs(gains[0], gains[1], 0.3, 0.1, ch.y0)
        assert bounds.y1_lower == pytest.approx(0.99447, abs=1e-5)
        assert bounds.feasible

    def test_degenerate_intensities(self):
        gain = GainQber(gain=0.01, qber=0.02)
        with pytest.raises(DegenerateIntensitiesError):
            decoy_bounds_analytic_wcs(gain, gain, 0.1, 0.1, 1e-6)
        with pytest.raises(DegenerateIntensitiesError):
            decoy_bounds_analytic_wcs(gain, gain, 0.1, 0.0, 1e-6)

    def test_inconsistent_gains_are_infeasible(self):
        signal = GainQber(gain=0.5, qber=0.02)
        decoy = GainQber(gain=1e-6, qber=0.5)
        bounds = decoy_bounds_analytic_wcs(signal, decoy, 0.5, 0.1, 1e-6)
        assert not bounds.feasible
        assert bounds.y1_lower == 0.0


class TestBoundSandwich:
    """Analytic bounds are looser than the LP, which is looser than the truth."""

    @pytest.mark.parametrize("mu,loss_db", list(itertools.product([0.1, 0.3, 0.5], [5.0, 10.0, 20.0, 30.0])))
    def test_sandwich(self, mu, loss_db):
        nu = 0.05
        ch, dists, gains = _measure([mu, nu, 0.0], loss_db)
        analytic = decoy_bounds_analytic_wcs(gains[0], gains[1], mu, nu, gains[2].gain)
        lp = decoy_bounds_lp(dists, gains, n_cut=15)

        eta = transmittance(loss_db)
        y1_true = yield_n(1, eta, ch.y0)
        e1_true = error_n(1, eta, ch.y0, ch.e_det)

        assert analytic.feasible and lp.feasible
        assert analytic.y1_lower <= lp.y1_lower * (1 + 1e-6) + 1e-12
        assert lp.y1_lower <= y1_true * (1 + 1e-6)
        assert e1_true <= lp.e1_upper * (1 + 1e-6)
        assert lp.e1_upper <= analytic.e1_upper * (1 + 1e-6) + 1e-12


class TestLinearProgram:
    """Tests for the LP estimator on hand-built instances."""

    # three explicit photon numbers plus a tail bucket
    P_A = [0.2, 0.55, 0.18, 0.05]
    P_B = [0.4, 0.45, 0.1, 0.03]
    TAIL = 0.02
    TRUE_YIELDS = [0.01, 0.5, 0.55, 0.6]
    TAIL_YIELD = 0.6

    def _instance(self):
        dists = [
            PhotonNumberDistribution(probs=tuple(p), n_cut=3, tail_mass=self.TAIL)
            for p in (self.P_A, self.P_B)
        ]
        gains = [
            GainQber(gain=float(np.dot(p, self.TRUE_YIELDS) + self.TAIL * self.TAIL_YIELD), qber=0.05)
            for p in (self.P_A, self.P_B)
        ]
        return dists, gains

    def test_bound_below_true_yield(self):
        dists, gains = self._instance()
        bounds = decoy_bounds_lp(dists, gains, n_cut=3)
        assert bounds.feasible
        assert 0.0 < bounds.y1_lower <= self.TRUE_YIELDS[1]
        assert bounds.q1_lower == pytest.approx(bounds.y1_lower * self.P_A[1])

    def test_inconsistent_gains_are_infeasible(self):
        dists, _ = self._instance()
        gains = [GainQber(gain=0.9, qber=0.05), GainQber(gain=0.001, qber=0.05)]
        bounds = decoy_bounds_lp(dists, gains, n_cut=3)
        assert not bounds.feasible

    def test_mismatched_inputs(self):
        dists, gains = self._instance()
        with pytest.raises(ValidationError):
            decoy_bounds_lp(dists, gains[:1])

    def test_single_intensity_closed_form(self):
        dist = PhotonNumberDistribution(probs=tuple(self.P_A), n_cut=3, tail_mass=self.TAIL)
        gain = GainQber(gain=0.9, qber=0.05)
        others = self.P_A[0] + self.P_A[2] + self.P_A[3]
        expected = (gain.gain - others - self.TAIL) / self.P_A[1]

        bounds = decoy_bounds_lp([dist], [gain], n_cut=3)
        assert bounds.feasible
        assert bounds.y1_lower == pytest.approx(expected, rel=1e-6)

    def test_single_intensity_bound_clamps_at_zero(self):
        dist = PhotonNumberDistribution(probs=tuple(self.P_A), n_cut=3, tail_mass=self.TAIL)
        bounds = decoy_bounds_lp([dist], [GainQber(gain=0.1, qber=0.05)], n_cut=3)
        assert bounds.y1_lower == 0.0
        assert not bounds.feasible

    def test_more_decoys_never_hurt(self):
        ch, dists, gains = _measure([0.5, 0.1, 0.0, 0.01], loss_db=10.0)
        previous = 0.0
        for count in (2, 3, 4):
            bounds = decoy_bounds_lp(dists[:count], gains[:count], n_cut=15)
            assert bounds.y1_lower >= previous - 1e-9
            previous = bounds.y1_lower
        assert previous > 0.0

    @pytest.mark.slow
    def test_matches_brute_force_search(self):
        """Grid search over (Y0, Y2, Y3) with Y1 solved exactly per grid point."""
        dists, gains = self._instance()
        bounds = decoy_bounds_lp(dists, gains, n_cut=3)

        step = np.linspace(0.0, 1.0, 1001)
        y2, y3 = np.meshgrid(step, step, indexing="ij")
        rows = []
        for p, gain in zip((self.P_A, self.P_B), gains):
            rest = p[2] * y2 + p[3] * y3
            rows.append((p[0], p[1], gain.gain, rest))

        best = np.inf
        for y0 in step:
            lower = np.zeros_like(y2)
            upper = np.ones_like(y2)
            for p0, p1, q, rest in rows:
                remaining = q - p0 * y0 - rest
                lower = np.maximum(lower, (remaining - self.TAIL) / p1)
                upper = np.minimum(upper, remaining / p1)
            feasible = lower <= upper
            if feasible.any():
                best = min(best, float(lower[feasible].min()))

        assert best >= bounds.y1_lower - 1e-7
        assert best == pytest.approx(bounds.y1_lower, abs=2e-3)


class TestMethodResolution:
    """Tests for estimator selection."""

    def test_auto_picks_analytic_for_wcs(self, protocol, wcs_source):
        assert resolve_method(protocol, wcs_source) == EstimationMethod.ANALYTIC

    def test_auto_picks_lp_for_hsps(self, protocol, hsps_source):
        assert resolve_method(protocol, hsps_source) == EstimationMethod.LINEAR_PROGRAM

    def test_auto_without_vacuum(self, wcs_source):
        spec = DecoyProtocolSpec(signal_intensity=0.3, decoy_intensities=[0.05])
        assert resolve_method(spec, wcs_source) == EstimationMethod.LINEAR_PROGRAM

    def test_analytic_rejected_for_hsps(self, hsps_source):
        spec = DecoyProtocolSpec(estimation_method=EstimationMethod.ANALYTIC)
        with pytest.raises(ValidationError):
            resolve_method(spec, hsps_source)

    def test_analytic_needs_vacuum(self, wcs_source):
        spec = DecoyProtocolSpec(decoy_intensities=[0.01], estimation_method=EstimationMethod.ANALYTIC)
        with pytest.raises(ValidationError):
            resolve_method(spec, wcs_source)


class TestSecureKeyRate:
    """Tests for the asymptotic key rate."""

    def test_wcs_reference_rate(self, protocol, wcs_source, channel):
        result = secure_key_rate(protocol, wcs_source, channel)
        assert result.method == EstimationMethod.ANALYTIC
        assert result.rate == pytest.approx(0.00369, rel=2e-2)

    def test_lp_agrees_with_analytic_for_wcs(self, wcs_source, channel):
        analytic = secure_key_rate(DecoyProtocolSpec(estimation_method="analytic"), wcs_source, channel)
        lp = secure_key_rate(DecoyProtocolSpec(estimation_method="lp"), wcs_source, channel)
        assert lp.rate >= analytic.rate * (1 - 1e-6)
        assert lp.rate == pytest.approx(analytic.rate, rel=1e-2)

    def test_hsps_advantage_grows_with_loss(self, protocol, wcs_source, hsps_source):
        ratios = {}
        for loss in (10.0, 30.0):
            ch = ChannelSpec(loss_db=loss)
            r_wcs = secure_key_rate(protocol, wcs_source, ch).rate
            r_hsps = secure_key_rate(protocol, hsps_source, ch).rate
            ratios[loss] = r_hsps / r_wcs
        assert 3.0 <= ratios[10.0] <= 30.0
        assert ratios[30.0] > ratios[10.0]

    def test_rate_nonincreasing_in_loss(self, protocol, wcs_source, hsps_source):
        for source in (wcs_source, hsps_source):
            rates = [
                secure_key_rate(protocol, source, ChannelSpec(loss_db=loss)).rate
                for loss in range(0, 45, 5)
            ]
            assert all(b <= a * (1 + 1e-9) for a, b in zip(rates, rates[1:]))

    def test_rate_clamped_at_zero(self, protocol, wcs_source):
        result = secure_key_rate(protocol, wcs_source, ChannelSpec(e_det=0.3))
        assert result.rate == 0.0

    def test_csv_row_layout(self, protocol, wcs_source, channel):
        result = secure_key_rate(protocol, wcs_source, channel)
        row = result.csv_row(channel.loss_db, 0.1, 0.001)
        assert len(row) == len(KEY_RATE_CSV_HEADER)
        assert row[-1] == result.rate


class TestThroughput:
    """Tests for the bits-per-second figure of merit."""

    def test_product(self):
        assert throughput_fom(0.01, 1e9) == pytest.approx(1e7)

    def test_wcs_outpaces_hsps_at_clock_rates(self, protocol, wcs_source, hsps_source, channel):
        wcs = throughput_fom(secure_key_rate(protocol, wcs_source, channel).rate, wcs_source.repetition_rate)
        hsps = throughput_fom(secure_key_rate(protocol, hsps_source, channel).rate, hsps_source.repetition_rate)
        assert wcs > hsps

    def test_invalid(self):
        with pytest.raises(ValidationError):
            throughput_fom(-1.0, 1e9)
        with pytest.raises(ValidationError):
            throughput_fom(0.1, 0.0)
