"""Decoy-state single-photon bounds and asymptotic key rate."""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.special import entr

from ..models.channel import BACKGROUND_ERROR, ChannelSpec, GainQber
from ..models.photon import PhotonNumberDistribution, SourceKind, SourceSpec
from ..models.protocol import DecoyBounds, DecoyProtocolSpec, EstimationMethod, KeyRateResult
from ..utils.error_handling import (
    DegenerateIntensitiesError,
    NoSignalError,
    ValidationError,
    require,
)
from .channel_detector import gain_and_qber
from .photon_sources import distribution_for, wcs_distribution

logger = logging.getLogger(__name__)

LP_FEASIBILITY_TOL = 1e-10
MAX_SINGLE_PHOTON_ERROR = 0.5

# linprog status codes
_LP_OK = 0
_LP_INFEASIBLE = 2


def binary_entropy(p: float) -> float:
    """Binary Shannon entropy in bits, with H2(0) = H2(1) = 0."""
    require(0.0 <= p <= 1.0, "probability must lie in [0, 1]", p=p)
    return float((entr(p) + entr(1.0 - p)) / math.log(2.0))


def _infeasible(diagnostic: str) -> DecoyBounds:
    return DecoyBounds(
        y1_lower=0.0,
        q1_lower=0.0,
        e1_upper=MAX_SINGLE_PHOTON_ERROR,
        feasible=False,
        diagnostic=diagnostic,
    )


def decoy_bounds_analytic_wcs(
    q_mu: GainQber, q_nu: GainQber, mu: float, nu: float, y0: float
) -> DecoyBounds:
    """Vacuum + weak decoy estimates for Poissonian sources.

    Args:
        q_mu: Gain and QBER at the signal intensity
        q_nu: Gain and QBER at the weak decoy intensity
        mu: Signal intensity
        nu: Weak decoy intensity
        y0: Background yield, as measured by the vacuum decoy

    Returns:
        Lower bounds on Y1 and Q1 and an upper bound on e1

    Raises:
        DegenerateIntensitiesError: If mu * nu - nu^2 <= 0
    """
    denom = mu * nu - nu * nu
    if denom <= 0.0 or nu <= 0.0:
        raise DegenerateIntensitiesError(
            "signal and weak decoy intensities cannot separate single photons",
            details={"mu": mu, "nu": nu},
        )

    y1 = (mu / denom) * (
        q_nu.gain * math.exp(nu)
        - q_mu.gain * math.exp(mu) * (nu * nu) / (mu * mu)
        - ((mu * mu - nu * nu) / (mu * mu)) * y0
    )
    y1 = min(y1, 1.0)
    if y1 <= 0.0:
        logger.debug("Analytic Y1 bound vanished at mu=%g nu=%g", mu, nu)
        return _infeasible("single-photon yield bound is zero")

    q1 = y1 * mu * math.exp(-mu)
    e1 = (q_nu.qber * q_nu.gain * math.exp(nu) - 0.5 * y0) / (y1 * nu)
    e1 = min(max(e1, 0.0), MAX_SINGLE_PHOTON_ERROR)
    return DecoyBounds(y1_lower=y1, q1_lower=min(q1, 1.0), e1_upper=e1)


def _fold(dist: PhotonNumberDistribution, n_cut: int) -> Tuple[np.ndarray, float]:
    """Probabilities up to n_cut with everything above moved into the tail."""
    p = dist.as_array()
    if dist.n_cut <= n_cut:
        padded = np.zeros(n_cut + 1)
        padded[: dist.n_cut + 1] = p
        return padded, dist.tail_mass
    return p[: n_cut + 1], dist.tail_mass + math.fsum(p[n_cut + 1 :].tolist())


def _solve_bound(
    sign: float,
    probs: List[np.ndarray],
    tails: List[float],
    targets: List[float],
    n_cut: int,
):
    """Extremize the single-photon variable subject to the measured sums.

    Each intensity i contributes target_i - tail_i <= sum_k P_ik v_k <= target_i,
    with rows scaled by 1 / target_i.
    """
    rows = []
    rhs = []
    for p, tail, target in zip(probs, tails, targets):
        scale = 1.0 / target if target > 0 else 1.0
        rows.append(p * scale)
        rhs.append(target * scale)
        rows.append(-p * scale)
        rhs.append(-(target - tail) * scale)

    objective = np.zeros(n_cut + 1)
    objective[1] = sign
    result = linprog(
        objective,
        A_ub=np.vstack(rows),
        b_ub=np.asarray(rhs),
        bounds=[(0.0, 1.0)] * (n_cut + 1),
        method="highs",
        options={"primal_feasibility_tolerance": LP_FEASIBILITY_TOL},
    )
    logger.debug("linprog status=%s message=%s", result.status, result.message)
    return result


def decoy_bounds_lp(
    dists: Sequence[PhotonNumberDistribution],
    gains: Sequence[GainQber],
    n_cut: Optional[int] = None,
) -> DecoyBounds:
    """Single-photon bounds by linear programming over arbitrary photon statistics.

    Photon numbers above n_cut are left unconstrained in [0, 1], which keeps
    every bound on the secure side.

    Args:
        dists: Photon-number distributions, signal first
        gains: Measured gain and QBER per distribution
        n_cut: Number of explicit yield variables minus one (default: smallest n_cut)

    Returns:
        DecoyBounds; q1_lower uses the signal's single-photon probability

    Raises:
        ValidationError: If inputs are mismatched
    """
    require(len(dists) >= 1, "at least one intensity is required")
    require(len(dists) == len(gains), "one gain per distribution is required")
    n_cut = n_cut if n_cut is not None else min(d.n_cut for d in dists)
    require(n_cut >= 1, "n_cut must resolve single photons", n_cut=n_cut)

    folded = [_fold(d, n_cut) for d in dists]
    probs = [p for p, _ in folded]
    tails = [t for _, t in folded]

    yields = _solve_bound(1.0, probs, tails, [g.gain for g in gains], n_cut)
    if yields.status == _LP_INFEASIBLE:
        return _infeasible("measured gains are inconsistent with any yields")
    if yields.status != _LP_OK:
        logger.warning("Yield LP did not converge: %s", yields.message)
        return DecoyBounds(
            y1_lower=0.0,
            q1_lower=0.0,
            e1_upper=MAX_SINGLE_PHOTON_ERROR,
            diagnostic=f"trivial bounds: {yields.message}",
        )

    y1 = min(max(float(yields.fun), 0.0), 1.0)
    if y1 <= 0.0:
        return _infeasible("single-photon yield bound is zero")

    errors = _solve_bound(-1.0, probs, tails, [g.error_gain for g in gains], n_cut)
    if errors.status == _LP_INFEASIBLE:
        return _infeasible("measured error rates are inconsistent with any yields")
    if errors.status != _LP_OK:
        e1 = MAX_SINGLE_PHOTON_ERROR
        diagnostic = f"trivial error bound: {errors.message}"
    else:
        e1 = min(max(-float(errors.fun), 0.0) / y1, MAX_SINGLE_PHOTON_ERROR)
        diagnostic = None

    q1 = min(y1 * float(probs[0][1]), 1.0)
    return DecoyBounds(y1_lower=y1, q1_lower=q1, e1_upper=e1, diagnostic=diagnostic)


def _decoy_gain(dist: PhotonNumberDistribution, ch: ChannelSpec) -> GainQber:
    """Gain at a decoy intensity; a silent decoy is a valid zero measurement."""
    try:
        return gain_and_qber(dist, ch)
    except NoSignalError:
        return GainQber(gain=0.0, qber=BACKGROUND_ERROR)


def resolve_method(spec: DecoyProtocolSpec, source: SourceSpec) -> EstimationMethod:
    """Pick the estimator for a protocol and source.

    Raises:
        ValidationError: If the analytic estimator is requested for non-Poissonian
            statistics or without a vacuum and weak decoy
    """
    method = spec.estimation_method
    analytic_ready = spec.has_vacuum and bool(spec.weak_decoys)
    if method == EstimationMethod.AUTO:
        if source.kind == SourceKind.WCS and analytic_ready:
            return EstimationMethod.ANALYTIC
        return EstimationMethod.LINEAR_PROGRAM
    if method == EstimationMethod.ANALYTIC:
        if source.kind != SourceKind.WCS:
            raise ValidationError(
                "analytic decoy bounds assume Poissonian statistics; use 'lp' for HSPS",
                details={"source": source.kind.value},
            )
        if not analytic_ready:
            raise ValidationError(
                "analytic decoy bounds need one weak decoy and a vacuum decoy",
                details={"decoy_intensities": spec.decoy_intensities},
            )
    return method


def secure_key_rate(
    spec: DecoyProtocolSpec, source: SourceSpec, ch: ChannelSpec
) -> KeyRateResult:
    """Asymptotic decoy-state key rate per pulse.

    R = q [Q1 (1 - H2(e1)) - Q_mu f_ec H2(E_mu)], clamped at zero.
    Vacuum decoys are modeled as empty pulses for every source kind.

    Args:
        spec: Signal and decoy intensities plus post-processing constants
        source: Photon source; its mean intensity is replaced by the signal intensity
        ch: Channel and receiver

    Returns:
        KeyRateResult with the bounds that produced the rate
    """
    method = resolve_method(spec, source)
    intensities = spec.intensities()
    dists = [
        wcs_distribution(0.0, spec.n_cut) if x == 0 else distribution_for(source, x, spec.n_cut)
        for x in intensities
    ]
    gains = [gain_and_qber(dists[0], ch)] + [_decoy_gain(d, ch) for d in dists[1:]]
    q_signal = gains[0]

    if method == EstimationMethod.ANALYTIC:
        nu = min(spec.weak_decoys)
        nu_index = intensities.index(nu)
        vacuum_index = intensities.index(0.0)
        bounds = decoy_bounds_analytic_wcs(
            q_signal, gains[nu_index], spec.signal_intensity, nu, gains[vacuum_index].gain
        )
    else:
        bounds = decoy_bounds_lp(dists, gains, spec.n_cut)

    rate = 0.0
    if bounds.feasible:
        rate = spec.q_factor * (
            bounds.q1_lower * (1.0 - binary_entropy(bounds.e1_upper))
            - q_signal.gain * spec.f_ec * binary_entropy(q_signal.qber)
        )
        rate = max(rate, 0.0)

    logger.debug(
        "R(%s, mu=%g, loss=%g dB, %s) = %.6e",
        source.kind.value,
        spec.signal_intensity,
        ch.loss_db,
        method.value,
        rate,
    )
    return KeyRateResult(
        q_signal=q_signal,
        y1_lower=bounds.y1_lower,
        q1_lower=bounds.q1_lower,
        e1_upper=bounds.e1_upper,
        rate=rate,
        feasible=bounds.feasible,
        method=method,
        diagnostic=bounds.diagnostic,
    )


def throughput_fom(rate_per_pulse: float, repetition_rate: float) -> float:
    """Secure bits per second at a given repetition rate."""
    require(rate_per_pulse >= 0, "rate must be non-negative", rate=rate_per_pulse)
    require(repetition_rate > 0, "repetition rate must be positive", repetition_rate=repetition_rate)
    return rate_per_pulse * repetition_rate
