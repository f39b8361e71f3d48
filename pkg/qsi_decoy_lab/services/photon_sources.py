"""Photon-number distributions for weak coherent and heralded sources."""

import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import bisect
from scipy.stats import poisson

from ..models.photon import (
    MIN_N_CUT,
    CorrelationModel,
    PhotonNumberDistribution,
    SourceKind,
    SourceSpec,
    SourceStatistics,
)
from ..utils.error_handling import BracketError, HeraldingError, require

logger = logging.getLogger(__name__)

DEFAULT_N_CUT = 20
DEFAULT_TRUNCATION_CAP = 1e-9
MIN_NORMALIZATION_CUTOFF = 60
MAX_NORMALIZATION_CUTOFF = 20000
# thermal terms below this are dropped from the normalization sum
THERMAL_NEGLIGIBLE = 1e-18


def _build(
    probs: np.ndarray, n_cut: int, truncation_cap: float
) -> PhotonNumberDistribution:
    probs = np.clip(probs, 0.0, 1.0)
    tail = max(0.0, 1.0 - math.fsum(probs.tolist()))
    return PhotonNumberDistribution(
        probs=tuple(float(p) for p in probs),
        n_cut=n_cut,
        tail_mass=tail,
        truncation_warning=tail > truncation_cap,
    )


def wcs_distribution(
    x: float, n_cut: int = DEFAULT_N_CUT, truncation_cap: float = DEFAULT_TRUNCATION_CAP
) -> PhotonNumberDistribution:
    """Poissonian photon-number distribution of an attenuated laser.

    Args:
        x: Mean photon number per pulse
        n_cut: Truncation order
        truncation_cap: Tail mass above which the distribution is flagged

    Returns:
        Distribution with probs[k] = e^-x x^k / k!

    Raises:
        ValidationError: If x is negative or n_cut too small
    """
    require(x >= 0, "mean photon number must be non-negative", x=x)
    require(n_cut >= MIN_N_CUT, f"n_cut must be at least {MIN_N_CUT}", n_cut=n_cut)

    if x == 0:
        probs = np.zeros(n_cut + 1)
        probs[0] = 1.0
    else:
        probs = poisson.pmf(np.arange(n_cut + 1), x)

    dist = _build(probs, n_cut, truncation_cap)
    if dist.truncation_warning:
        logger.debug("WCS x=%g truncated at n_cut=%d with tail %.3e", x, n_cut, dist.tail_mass)
    return dist


def _normalization_cutoff(x: float, n_cut: int) -> int:
    """Smallest cutoff beyond which thermal terms are negligible."""
    cutoff = max(n_cut, MIN_NORMALIZATION_CUTOFF)
    if x > 0:
        ratio = x / (1.0 + x)
        needed = math.ceil(math.log(THERMAL_NEGLIGIBLE) / math.log(ratio))
        cutoff = max(cutoff, min(needed, MAX_NORMALIZATION_CUTOFF))
    return cutoff


def _herald_weights(
    x: float,
    eta_a: float,
    d_a: float,
    c: float,
    model: CorrelationModel,
    cutoff: int,
) -> Tuple[np.ndarray, float]:
    """Unnormalized heralded weights w_k and the herald probability."""
    k = np.arange(cutoff + 1)
    thermal = (1.0 / (1.0 + x)) * (x / (1.0 + x)) ** k
    click = 1.0 - (1.0 - eta_a) ** k

    weights = thermal * (c * click + d_a)
    if model == CorrelationModel.HERALD_SCALING:
        p_post = math.fsum(weights.tolist())
    else:
        # heralds are c-free; signals lost with probability 1 - c leave vacuum
        p_post = math.fsum((thermal * (click + d_a)).tolist())
        weights[0] += (1.0 - c) * math.fsum((thermal * click).tolist())
    return weights, p_post


def herald_probability(
    x: float,
    eta_a: float,
    d_a: float,
    c: float = 1.0,
    model: CorrelationModel = CorrelationModel.HERALD_SCALING,
) -> float:
    """Probability that a pump window produces a herald (P_x^post)."""
    require(x >= 0, "mean pair number must be non-negative", x=x)
    _, p_post = _herald_weights(x, eta_a, d_a, c, model, _normalization_cutoff(x, MIN_N_CUT))
    return p_post


def hsps_distribution(
    x: float,
    eta_a: float,
    d_a: float,
    c: float,
    n_cut: int = DEFAULT_N_CUT,
    model: CorrelationModel = CorrelationModel.HERALD_SCALING,
    truncation_cap: float = DEFAULT_TRUNCATION_CAP,
) -> PhotonNumberDistribution:
    """Post-selected photon-number distribution of a heralded SPDC source.

    The pump produces thermal pair statistics x^k / (1+x)^(k+1). A window is
    kept when the idler detector fires, with probability 1 - (1 - eta_a)^k
    plus the dark-count probability d_a.

    Args:
        x: Mean pair number per heralding window
        eta_a: Herald detector efficiency
        d_a: Herald detector dark-count probability
        c: Correlation probability
        n_cut: Truncation order
        model: How c enters the heralded statistics
        truncation_cap: Tail mass above which the distribution is flagged

    Returns:
        Heralded distribution with the tail carried explicitly

    Raises:
        ValidationError: If a parameter is outside its domain
        HeraldingError: If no window can ever be heralded
    """
    require(x >= 0, "mean pair number must be non-negative", x=x)
    require(0 <= eta_a <= 1, "herald efficiency must lie in [0, 1]", eta_a=eta_a)
    require(0 <= d_a < 1, "herald dark probability must lie in [0, 1)", d_a=d_a)
    require(0 <= c <= 1, "correlation probability must lie in [0, 1]", c=c)
    require(n_cut >= MIN_N_CUT, f"n_cut must be at least {MIN_N_CUT}", n_cut=n_cut)

    cutoff = _normalization_cutoff(x, n_cut)
    weights, p_post = _herald_weights(x, eta_a, d_a, c, model, cutoff)
    if p_post <= 0.0:
        raise HeraldingError(
            "source can never herald a photon",
            details={"x": x, "eta_a": eta_a, "d_a": d_a, "c": c},
        )

    dist = _build(weights[: n_cut + 1] / p_post, n_cut, truncation_cap)
    if dist.truncation_warning:
        logger.debug("HSPS x=%g truncated at n_cut=%d with tail %.3e", x, n_cut, dist.tail_mass)
    return dist


def distribution_for(
    spec: SourceSpec, intensity: Optional[float] = None, n_cut: int = DEFAULT_N_CUT
) -> PhotonNumberDistribution:
    """Distribution of a configured source, optionally at another intensity."""
    x = spec.mean_intensity if intensity is None else intensity
    if spec.kind == SourceKind.WCS:
        return wcs_distribution(x, n_cut)
    return hsps_distribution(
        x,
        spec.herald_efficiency,
        spec.herald_dark,
        spec.correlation_prob,
        n_cut,
        model=spec.correlation_model,
    )


def single_photon_probability(spec: SourceSpec, n_cut: int = DEFAULT_N_CUT) -> float:
    """Probability that the source emits exactly one photon."""
    return distribution_for(spec, n_cut=n_cut).probs[1]


def source_statistics(dist: PhotonNumberDistribution) -> SourceStatistics:
    """Mean, variance, g2(0) and Fano factor of a distribution.

    A vacuum-only distribution reports g2(0) = 0 and F = 1.
    """
    p = dist.as_array()
    k = np.arange(dist.n_cut + 1, dtype=np.float64)

    mean = float(np.dot(k, p))
    second = float(np.dot(k * k, p))
    factorial_second = float(np.dot(k * (k - 1.0), p))
    variance = max(0.0, second - mean * mean)

    if mean > 0:
        g2_zero = factorial_second / (mean * mean)
        fano = variance / mean
    else:
        g2_zero = 0.0
        fano = 1.0

    return SourceStatistics(mean=mean, variance=variance, g2_zero=g2_zero, fano=fano)


def crossover_mean(
    spec: SourceSpec,
    n_cut: int = DEFAULT_N_CUT,
    bracket: Tuple[float, float] = (0.1, 1.0),
    tolerance: float = 1e-4,
) -> float:
    """Mean photon number where the source and a WCS emit single photons equally often.

    Args:
        spec: Source compared against a weak coherent source
        n_cut: Truncation order
        bracket: Search interval (x_lo, x_hi)
        tolerance: Absolute tolerance on x

    Returns:
        Root of P1_source(x) - P1_wcs(x)

    Raises:
        BracketError: If the difference does not change sign in the bracket
    """
    x_lo, x_hi = bracket
    require(0 <= x_lo < x_hi, "bracket must satisfy 0 <= x_lo < x_hi", bracket=list(bracket))

    def difference(x: float) -> float:
        return distribution_for(spec, x, n_cut).probs[1] - wcs_distribution(x, n_cut).probs[1]

    f_lo, f_hi = difference(x_lo), difference(x_hi)
    if f_lo == 0.0 and f_hi != 0.0:
        return x_lo
    if f_hi == 0.0 and f_lo != 0.0:
        return x_hi
    if f_lo * f_hi >= 0.0:
        raise BracketError(
            "single-photon curves do not cross inside the bracket",
            details={"bracket": list(bracket), "f_lo": f_lo, "f_hi": f_hi},
        )

    root = bisect(difference, x_lo, x_hi, xtol=tolerance)
    logger.debug("Crossover for %s at x=%.6f", spec.kind.value, root)
    return float(root)
