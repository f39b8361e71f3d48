"""Rate-versus-loss sweeps and scalar optimization of the key rate."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from ..config import resolve_threads
from ..models.channel import ChannelSpec
from ..models.photon import SourceKind, SourceSpec
from ..models.protocol import DecoyProtocolSpec
from ..models.sweep import CurveRow, CurveTable, DecoyMode, LossLimit, OptimumResult, SweepGrid
from ..utils.error_handling import InfeasibleError, QSIError, require
from .decoy_security import resolve_method, secure_key_rate, throughput_fom

logger = logging.getLogger(__name__)

DEFAULT_RATE_FLOOR = 1e-10
DEFAULT_LOSS_CAP_DB = 60.0
DEFAULT_LOSS_TOLERANCE_DB = 0.01
GRID_SCAN_POINTS = 50


def protocol_at(template: DecoyProtocolSpec, mu: float, mode: DecoyMode) -> DecoyProtocolSpec:
    """Protocol at signal intensity mu, decoys fixed or scaled by mu / mu_template."""
    return template.with_signal(mu, scale_decoys=mode == DecoyMode.SCALED)


def weak_decoy(protocol: DecoyProtocolSpec) -> float:
    """Smallest nonzero decoy intensity, 0 when every decoy is vacuum."""
    weak = protocol.weak_decoys
    return min(weak) if weak else 0.0


def _evaluate_point(
    grid: SweepGrid, kind: SourceKind, mu: float, loss_db: float
) -> CurveRow:
    source = grid.source(kind)
    protocol = protocol_at(grid.decoy, mu, grid.decoy_mode)
    nu = weak_decoy(protocol)
    try:
        result = secure_key_rate(protocol, source, grid.channel.at_loss(loss_db))
    except QSIError as e:
        logger.debug("Point %s mu=%g loss=%g infeasible: %s", kind.value, mu, loss_db, e)
        return CurveRow(
            source=kind,
            mu=mu,
            nu=nu,
            loss_db=loss_db,
            rate=0.0,
            throughput_bps=0.0,
            feasible=False,
            diagnostic=e.message,
        )
    return CurveRow(
        source=kind,
        mu=mu,
        nu=nu,
        loss_db=loss_db,
        rate=result.rate,
        throughput_bps=throughput_fom(result.rate, source.repetition_rate),
        feasible=result.feasible,
        diagnostic=result.diagnostic,
    )


def rate_vs_loss(grid: SweepGrid, threads: Optional[int] = None) -> CurveTable:
    """Key rate for every (source, mu, loss) point of a grid.

    Points that cannot be evaluated appear as rate 0 rows flagged infeasible.
    Row order is source, then mu, then loss, as given in the grid.

    Args:
        grid: Sweep grid and its fixed context
        threads: Worker threads (default from QSI_THREADS)

    Returns:
        CurveTable with one row per grid point
    """
    for kind in grid.sources:
        resolve_method(protocol_at(grid.decoy, grid.mu_points[0], grid.decoy_mode), grid.source(kind))

    points = [
        (kind, mu, loss) for kind in grid.sources for mu in grid.mu_points for loss in grid.loss_points
    ]
    workers = resolve_threads(threads)
    logger.info("Sweeping %d points with %d thread(s)", len(points), workers)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda p: _evaluate_point(grid, *p), points))
    else:
        rows = [_evaluate_point(grid, *p) for p in points]
    return CurveTable(rows=rows)


def curve_spread(
    table: CurveTable, loss_db: float, source: Optional[SourceKind] = None
) -> float:
    """Relative spread (max - min) / mean of the rates across mu at one loss.

    Raises:
        InfeasibleError: If fewer than two positive rates exist at that loss
    """
    rates = [r.rate for r in table.at_loss(loss_db, source) if r.rate > 0]
    if len(rates) < 2:
        raise InfeasibleError(
            "curve spread needs at least two positive rates",
            details={"loss_db": loss_db, "rates": len(rates)},
        )
    values = np.asarray(rates)
    return float((values.max() - values.min()) / values.mean())


def optimize_mu(
    source: SourceSpec,
    ch: ChannelSpec,
    template: DecoyProtocolSpec,
    bracket: Tuple[float, float] = (0.01, 1.0),
    tolerance: float = 1e-4,
    decoy_mode: DecoyMode = DecoyMode.SCALED,
    rate_fn: Optional[Callable[[float], float]] = None,
) -> OptimumResult:
    """Signal intensity maximizing the key rate.

    A coarse grid scan locates the best sample, then golden-section search
    refines it between the neighbouring samples.

    Args:
        source: Photon source
        ch: Channel
        template: Decoy protocol whose signal intensity is varied
        bracket: Search interval for mu
        tolerance: Absolute tolerance on mu
        decoy_mode: Whether decoys follow mu
        rate_fn: Replacement objective R(mu), for testing

    Returns:
        OptimumResult; its rate is never below any grid sample

    Raises:
        InfeasibleError: If the rate is zero across the bracket
    """
    lo, hi = bracket
    require(tolerance > 0, "tolerance must be positive", tolerance=tolerance)
    require(0 < lo <= hi, "bracket must satisfy 0 < lo <= hi", bracket=list(bracket))
    if rate_fn is None and decoy_mode == DecoyMode.FIXED:
        top = max(template.decoy_intensities, default=0.0)
        require(lo > top, "bracket must lie above the decoy intensities", lo=lo, decoy=top)

    evaluations = 0

    def rate(mu: float) -> float:
        nonlocal evaluations
        evaluations += 1
        if rate_fn is not None:
            return float(rate_fn(mu))
        return secure_key_rate(protocol_at(template, mu, decoy_mode), source, ch).rate

    if hi - lo <= tolerance:
        mid = 0.5 * (lo + hi)
        r_mid = rate(mid)
        if r_mid <= 0:
            raise InfeasibleError("key rate is zero in the bracket", details={"bracket": [lo, hi]})
        return OptimumResult(mu_star=mid, rate_star=r_mid, evaluations=evaluations)

    samples = np.linspace(lo, hi, GRID_SCAN_POINTS)
    rates = np.array([rate(float(mu)) for mu in samples])
    best = int(np.argmax(rates))
    if rates[best] <= 0:
        raise InfeasibleError(
            "key rate is zero everywhere in the bracket",
            details={"bracket": [lo, hi], "source": source.kind.value},
        )

    mu_star, r_star = float(samples[best]), float(rates[best])
    if 0 < best < GRID_SCAN_POINTS - 1 and rates[best - 1] < r_star and rates[best + 1] < r_star:
        a, b, c = samples[best - 1], samples[best], samples[best + 1]
        refined = minimize_scalar(
            lambda mu: -rate(mu),
            bracket=(a, b, c),
            method="golden",
            tol=tolerance / (4.0 * b),
        )
        if -refined.fun >= r_star:
            mu_star, r_star = float(refined.x), float(-refined.fun)
    logger.debug("optimize_mu(%s): mu*=%.6f R*=%.6e", source.kind.value, mu_star, r_star)
    return OptimumResult(mu_star=mu_star, rate_star=r_star, evaluations=evaluations)


def max_tolerable_loss(
    source: SourceSpec,
    mu: float,
    ch: ChannelSpec,
    template: DecoyProtocolSpec,
    decoy_mode: DecoyMode = DecoyMode.SCALED,
    rate_floor: float = DEFAULT_RATE_FLOOR,
    cap_db: float = DEFAULT_LOSS_CAP_DB,
    tolerance_db: float = DEFAULT_LOSS_TOLERANCE_DB,
) -> LossLimit:
    """Channel loss at which the key rate falls to the floor.

    Raises:
        InfeasibleError: If the rate is already at or below the floor at 0 dB
    """
    require(rate_floor > 0, "rate floor must be positive", rate_floor=rate_floor)
    protocol = protocol_at(template, mu, decoy_mode)

    def excess(loss_db: float) -> float:
        return secure_key_rate(protocol, source, ch.at_loss(loss_db)).rate - rate_floor

    if excess(0.0) <= 0:
        raise InfeasibleError(
            "key rate does not exceed the floor even without loss",
            details={"mu": mu, "rate_floor": rate_floor, "source": source.kind.value},
        )
    if excess(cap_db) > 0:
        return LossLimit(loss_db=cap_db, exceeds_cap=True, cap_db=cap_db)

    loss = bisect(excess, 0.0, cap_db, xtol=tolerance_db)
    logger.debug("Max loss for %s mu=%g: %.3f dB", source.kind.value, mu, loss)
    return LossLimit(loss_db=float(loss), exceeds_cap=False, cap_db=cap_db)

