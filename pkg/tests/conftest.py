"""Shared fixtures for the QSI Decoy Lab test suite."""

import pytest

from qsi_decoy_lab.models.channel import ChannelSpec
from qsi_decoy_lab.models.photon import SourceKind, SourceSpec, default_hsps, default_wcs
from qsi_decoy_lab.models.protocol import DecoyProtocolSpec


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo and brute-force acceptance runs")


@pytest.fixture
def wcs_source() -> SourceSpec:
    return default_wcs()


@pytest.fixture
def hsps_source() -> SourceSpec:
    """HSPS with the reference heralding parameters (c = 0.7)."""
    return default_hsps()


@pytest.fixture
def ideal_hsps() -> SourceSpec:
    """HSPS with perfect heralding correlation (c = 1)."""
    return SourceSpec(
        kind=SourceKind.HSPS,
        mean_intensity=0.1,
        herald_efficiency=0.5,
        herald_dark=1e-5,
        correlation_prob=1.0,
        repetition_rate=1e7,
    )


@pytest.fixture
def channel() -> ChannelSpec:
    return ChannelSpec()


@pytest.fixture
def protocol() -> DecoyProtocolSpec:
    return DecoyProtocolSpec()
