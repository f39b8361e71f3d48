"""Lossy channel and threshold receiver model."""

import logging
import math

import numpy as np

from ..models.channel import BACKGROUND_ERROR, ChannelSpec, GainQber
from ..models.photon import PhotonNumberDistribution
from ..utils.error_handling import NoSignalError, ValidationError, require

logger = logging.getLogger(__name__)


def transmittance(loss_db: float, eta_b: float = 1.0) -> float:
    """End-to-end photon survival probability.

    Args:
        loss_db: Channel loss in dB
        eta_b: Receiver detection efficiency

    Returns:
        eta_b * 10^(-loss_db / 10)
    """
    require(loss_db >= 0, "loss must be non-negative", loss_db=loss_db)
    require(0 < eta_b <= 1, "receiver efficiency must lie in (0, 1]", eta_b=eta_b)
    return eta_b * 10.0 ** (-loss_db / 10.0)


def yield_n(n: int, eta: float, y0: float) -> float:
    """Click probability for an n-photon pulse: 1 - (1 - y0)(1 - eta)^n."""
    require(n >= 0, "photon number must be non-negative", n=n)
    return 1.0 - (1.0 - y0) * (1.0 - eta) ** n


def error_n(n: int, eta: float, y0: float, e_det: float) -> float:
    """Error rate among clicks caused by an n-photon pulse.

    Raises:
        ValidationError: If the yield is zero and the error rate undefined
    """
    y_n = yield_n(n, eta, y0)
    if y_n <= 0.0:
        raise ValidationError("error rate undefined for zero yield", details={"n": n, "eta": eta, "y0": y0})
    e_n = (BACKGROUND_ERROR * y0 + e_det * (1.0 - (1.0 - eta) ** n)) / y_n
    return min(max(e_n, 0.0), 0.5)


def yields_and_errors(n_cut: int, eta: float, y0: float, e_det: float):
    """Vectors (Y_k, e_k) for k = 0..n_cut; e_k is 0 where Y_k is 0."""
    k = np.arange(n_cut + 1)
    survive = (1.0 - eta) ** k
    yields = 1.0 - (1.0 - y0) * survive
    numer = BACKGROUND_ERROR * y0 + e_det * (1.0 - survive)
    errors = np.divide(numer, yields, out=np.zeros_like(yields), where=yields > 0)
    return yields, np.clip(errors, 0.0, 0.5)


def gain_and_qber(dist: PhotonNumberDistribution, ch: ChannelSpec) -> GainQber:
    """Overall gain and QBER of a source distribution through a channel.

    Tail photons beyond n_cut are assigned the yield and error of n_cut.

    Args:
        dist: Photon-number distribution at the sender
        ch: Channel and receiver parameters

    Returns:
        GainQber with Q = sum P_k Y_k and E = sum P_k Y_k e_k / Q

    Raises:
        NoSignalError: If the receiver never clicks
    """
    eta = transmittance(ch.loss_db, ch.eta_b)
    yields, errors = yields_and_errors(dist.n_cut, eta, ch.y0, ch.e_det)
    p = dist.as_array()

    terms = (p * yields).tolist() + [dist.tail_mass * yields[-1]]
    error_terms = (p * yields * errors).tolist() + [dist.tail_mass * yields[-1] * errors[-1]]
    gain = math.fsum(terms)
    if gain <= 0.0:
        raise NoSignalError(
            "receiver never clicks", details={"loss_db": ch.loss_db, "y0": ch.y0}
        )

    qber = math.fsum(error_terms) / gain
    return GainQber(gain=min(gain, 1.0), qber=min(max(qber, 0.0), 0.5))
