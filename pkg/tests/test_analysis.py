"""Tests for qndlink.analysis — noise decomposition and the Duan witness."""

import math

import numpy as np
import pytest

from qndlink.analysis import added_noise_report, channel_noise_metric, duan_criterion
from qndlink.channel import ChannelModel
from qndlink.protocols import ProtocolConfig, ideal_qnd_reference, run_protocol
from qndlink.state import V0, GaussianState, epr_pair, vacuum
from qndlink.symplectic import apply_local, phase_shift

NOISY = ChannelModel(transmitivity=0.8, noise_var=1.0)


def _report(kind: str, gain: float = 1.0, r: float = 0.0, **extra):
    config = ProtocolConfig(kind=kind, gain_alice=gain, gain_bob=gain, squeezing=r, **extra)
    return run_protocol(config).noise_report


# ---------------------------------------------------------------------------
# added_noise_report
# ---------------------------------------------------------------------------


class TestAddedNoiseReport:
    """Excess variances and their split by origin."""

    def test_ideal_against_ideal(self):
        """Identical states report zero everywhere."""
        ideal = ideal_qnd_reference(1.0, vacuum(1), vacuum(1))
        report = added_noise_report(ideal, ideal)
        assert report.added_var_pa == report.added_var_xb == report.metric == 0.0
        assert report.spectators_intact

    def test_fig1_asymmetric(self):
        """Fig. 1, r = 0, G = 1 corrupts P'_A only."""
        report = _report("fig1")
        assert report.added_var_pa == pytest.approx(0.5)
        assert report.added_var_xb == pytest.approx(0.0, abs=1e-12)

    def test_fig2_symmetric(self):
        """Fig. 2, r = 0, G = 1 adds 1.0 to both."""
        report = _report("fig2")
        assert report.added_var_pa == pytest.approx(1.0)
        assert report.added_var_xb == pytest.approx(1.0)

    def test_without_channel_all_resource(self):
        """Without a channel-free run the whole excess is resource noise."""
        report = _report("fig2", 1.0, 1.0)
        assert report.resource_pa == report.added_var_pa
        assert report.channel_pa == 0.0

    def test_parts_sum_to_totals(self):
        """resource + channel = total for both quadratures."""
        report = _report("fig1", 1.3, 1.0, channel=NOISY)
        assert report.resource_pa + report.channel_pa == pytest.approx(report.added_var_pa, abs=1e-12)
        assert report.resource_xb + report.channel_xb == pytest.approx(report.added_var_xb, abs=1e-12)
        assert report.resource_pa >= -1e-12
        assert report.channel_xb >= -1e-12

    def test_idealized_resources(self):
        """Idealized resources report zero resource noise and channel-only totals."""
        report = _report("fig2", 1.0, 0.0, channel=NOISY, idealize_resources=True)
        assert report.resource_pa == report.resource_xb == 0.0
        assert report.added_var_pa == report.channel_pa
        assert report.channel_pa == pytest.approx(0.36)

    def test_channel_part_independent_of_squeezing(self):
        """Additive noises make the channel part r-independent."""
        low = _report("fig2", 1.0, 0.0, channel=NOISY)
        high = _report("fig2", 1.0, 3.0, channel=NOISY)
        assert low.channel_pa == pytest.approx(high.channel_pa, abs=1e-10)

    def test_register_mismatch(self):
        """Only two-mode registers can be compared."""
        with pytest.raises(ValueError, match="two-mode"):
            added_noise_report(vacuum(3), vacuum(2))

    def test_spectator_violation_flagged(self):
        """Extra noise in X'_A is flagged."""
        ideal = vacuum(2)
        noisy = GaussianState(np.zeros(4), np.diag([V0 + 0.1, V0, V0, V0]))
        assert added_noise_report(noisy, ideal).spectators_intact is False
        assert added_noise_report(noisy, ideal, check_spectators=False).spectators_intact is True


# ---------------------------------------------------------------------------
# channel_noise_metric
# ---------------------------------------------------------------------------


class TestChannelNoiseMetric:
    """The fig1/fig2 comparison metric."""

    def test_fig2_below_unit_gain(self):
        """Fig. 2 at G = 0.5, T = 0.8, noise_var = 1: 2·0.25·0.36 = 0.18."""
        report = _report("fig2", 0.5, 5.0, channel=NOISY, idealize_resources=True)
        assert channel_noise_metric(report) == pytest.approx(0.18, abs=1e-9)

    def test_fig1_below_unit_gain(self):
        """Fig. 1 at G = 0.5: channel noise reaches X'_B through Bob's feedforward gain."""
        report = _report("fig1", 0.5, 5.0, channel=NOISY, idealize_resources=True)
        assert channel_noise_metric(report) == pytest.approx(0.18, abs=1e-9)

    def test_unit_gain_equal(self):
        """Both schemes give 0.72 at G = 1."""
        fig1 = channel_noise_metric(_report("fig1", 1.0, 5.0, channel=NOISY, idealize_resources=True))
        fig2 = channel_noise_metric(_report("fig2", 1.0, 5.0, channel=NOISY, idealize_resources=True))
        assert fig1 == pytest.approx(0.72, abs=1e-9)
        assert fig2 == pytest.approx(fig1, abs=1e-9)

    def test_metric_property(self):
        """The report property and the function agree."""
        report = _report("fig1", 2.0, 1.0, channel=NOISY)
        assert channel_noise_metric(report) == report.metric == report.channel_pa + report.channel_xb


# ---------------------------------------------------------------------------
# duan_criterion
# ---------------------------------------------------------------------------


class TestDuanCriterion:
    """Unit-weight Duan witness."""

    def test_vacuum_on_bound(self):
        """Vacuum sits exactly on the separable bound."""
        duan = duan_criterion(vacuum(2))
        assert duan.value == pytest.approx(2.0)
        assert duan.bound == 2.0
        assert not duan.entangled

    def test_epr_pair(self):
        """epr_pair(1) gives 4·V0·e^{-2} ≈ 0.2707."""
        duan = duan_criterion(epr_pair(1.0))
        assert duan.value == pytest.approx(2 * math.exp(-2))
        assert duan.signs == "x+p-"
        assert duan.entangled

    def test_phase_flipped_pair(self):
        """A pi-rotated second mode is caught by the other sign convention."""
        flipped = apply_local(epr_pair(1.0), phase_shift(math.pi), ("Two",))
        duan = duan_criterion(flipped)
        assert duan.signs == "x-p+"
        assert duan.value == pytest.approx(2 * math.exp(-2))

    def test_decreasing_in_squeezing(self):
        """More squeezing, smaller Duan value."""
        values = [duan_criterion(epr_pair(r)).value for r in (0.0, 0.5, 1.0, 2.0)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_wrong_mode_count(self):
        """Only two-mode states are accepted."""
        with pytest.raises(ValueError, match="two-mode"):
            duan_criterion(vacuum(3))
