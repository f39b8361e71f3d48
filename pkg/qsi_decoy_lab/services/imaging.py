"""Absorption uncertainty and Monte Carlo raster-scan imaging."""

import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from ..models.channel import ChannelSpec
from ..models.imaging import (
    ALPHA_EST_MAX,
    ALPHA_EST_MIN,
    Eavesdropper,
    ImagingRunReport,
    ImagingScene,
    PixelResult,
    UncertaintySurface,
)
from ..models.photon import SourceKind, SourceSpec, probability_list
from ..utils.error_handling import ConfigurationError, FileSystemError, NoSignalError, require
from .channel_detector import gain_and_qber, transmittance
from .photon_sources import DEFAULT_N_CUT, distribution_for, herald_probability, source_statistics

logger = logging.getLogger(__name__)

DEFAULT_QBER_THRESHOLD = 0.11


def fano_factor(mean_n: float, g2_zero: float) -> float:
    """Fano factor from the mean photon number and g2(0): F = <n>(g2 - 1) + 1."""
    require(mean_n >= 0, "mean photon number must be non-negative", mean_n=mean_n)
    require(g2_zero >= 0, "g2(0) must be non-negative", g2_zero=g2_zero)
    return mean_n * (g2_zero - 1.0) + 1.0


def absorption_uncertainty(alpha: float, fano: float, mean_n: float) -> float:
    """Standard uncertainty of an absorption measurement.

    Args:
        alpha: Absorption factor of the object
        fano: Fano factor of the illumination
        mean_n: Mean number of probe photons

    Returns:
        sqrt((alpha (1 - alpha) + F (1 - alpha)^2) / mean_n)
    """
    require(0.0 <= alpha <= 1.0, "absorption must lie in [0, 1]", alpha=alpha)
    require(fano >= 0, "Fano factor must be non-negative", fano=fano)
    require(mean_n > 0, "mean photon number must be positive", mean_n=mean_n)
    transmitted = 1.0 - alpha
    return math.sqrt((alpha * transmitted + fano * transmitted * transmitted) / mean_n)


def uncertainty_surface(
    alpha: float,
    fano_range: Tuple[float, float],
    mean_range: Tuple[float, float],
    steps: int,
) -> UncertaintySurface:
    """Grid of absorption uncertainty over Fano factor and mean photon number."""
    require(steps >= 2, "steps must be at least 2", steps=steps)
    require(0.0 <= alpha <= 1.0, "absorption must lie in [0, 1]", alpha=alpha)
    for name, (lo, hi) in (("fano_range", fano_range), ("mean_range", mean_range)):
        require(0 < lo <= hi, f"{name} must be positive and ordered", lo=lo, hi=hi)

    fano = np.linspace(fano_range[0], fano_range[1], steps)
    mean = np.linspace(mean_range[0], mean_range[1], steps)
    f_grid, n_grid = np.meshgrid(fano, mean, indexing="ij")
    transmitted = 1.0 - alpha
    grid = np.sqrt((alpha * transmitted + f_grid * transmitted**2) / n_grid)

    return UncertaintySurface(
        alpha=alpha,
        fano_values=fano.tolist(),
        mean_values=mean.tolist(),
        delta_alpha=grid.tolist(),
    )


def load_scene(path: Union[str, Path]) -> ImagingScene:
    """Read an absorption grid from a comma or whitespace separated text file.

    Blank lines and lines starting with '#' are ignored.

    Raises:
        FileSystemError: If the file cannot be read
        ConfigurationError: If the grid is ragged or holds invalid values
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise FileSystemError(f"Cannot read scene file {path}: {e}", details={"path": str(path)})

    rows = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            rows.append([float(v) for v in re.split(r"[,\s]+", stripped) if v])
        except ValueError:
            raise ConfigurationError(
                f"{path}:{line_no}: non-numeric absorption value",
                details={"path": str(path), "line": line_no},
            )

    if not rows:
        raise ConfigurationError(f"{path}: scene file holds no pixels", details={"path": str(path)})
    try:
        return ImagingScene(width=len(rows[0]), height=len(rows), alpha=rows)
    except ValueError as e:
        raise ConfigurationError(f"{path}: {e}", details={"path": str(path)})


class _PixelContext:
    """Quantities shared by every pixel of a scan."""

    def __init__(
        self,
        source: SourceSpec,
        ch: ChannelSpec,
        pulses_per_pixel: int,
        eavesdropper: Eavesdropper,
        seed: int,
        n_cut: int,
    ):
        self.dist = distribution_for(source, n_cut=n_cut)
        self.stats = source_statistics(self.dist)
        probs = np.asarray(probability_list(self.dist))
        self.photon_probs = probs / probs.sum()
        self.n_cut = n_cut
        self.eta = transmittance(ch.loss_db, ch.eta_b)
        self.y0 = ch.y0
        self.e_det = ch.e_det
        try:
            self.reference_rate = gain_and_qber(self.dist, ch).gain
        except NoSignalError:
            logger.warning("Receiver never clicks at alpha = 0; every pixel will be missing")
            self.reference_rate = 0.0
        self.pulses = pulses_per_pixel
        self.eavesdropper = eavesdropper
        self.seed = seed
        if source.kind == SourceKind.HSPS:
            self.herald_prob: Optional[float] = herald_probability(
                source.mean_intensity,
                source.herald_efficiency,
                source.herald_dark,
                source.correlation_prob,
                source.correlation_model,
            )
        else:
            self.herald_prob = None


def _scan_pixel(ctx: _PixelContext, index: int, row: int, col: int, alpha: float):
    """Simulate one pixel; returns (PixelResult, sifted bits, sifted errors)."""
    rng = np.random.default_rng(np.random.SeedSequence(ctx.seed, spawn_key=(index,)))

    heralds = ctx.pulses if ctx.herald_prob is None else int(rng.binomial(ctx.pulses, ctx.herald_prob))
    photons = np.minimum(rng.choice(ctx.n_cut + 2, size=heralds, p=ctx.photon_probs), ctx.n_cut)

    alice_basis = rng.integers(0, 2, size=heralds)
    alice_bit = rng.integers(0, 2, size=heralds)
    bob_basis = rng.integers(0, 2, size=heralds)

    state_basis = alice_basis
    state_bit = alice_bit
    if ctx.eavesdropper == Eavesdropper.INTERCEPT_RESEND:
        eve_basis = rng.integers(0, 2, size=heralds)
        eve_guess = rng.integers(0, 2, size=heralds)
        intercepted = photons > 0
        eve_bit = np.where(eve_basis == alice_basis, alice_bit, eve_guess)
        state_basis = np.where(intercepted, eve_basis, alice_basis)
        state_bit = np.where(intercepted, eve_bit, alice_bit)

    survivors = rng.binomial(photons, ctx.eta * (1.0 - alpha))
    signal_click = survivors > 0
    dark_click = rng.random(heralds) < ctx.y0
    click = signal_click | dark_click

    flip = rng.random(heralds) < ctx.e_det
    random_bit = rng.integers(0, 2, size=heralds)
    measured = np.where(bob_basis == state_basis, state_bit ^ flip, random_bit)
    bob_bit = np.where(signal_click, measured, random_bit)

    sifted = click & (bob_basis == alice_basis)
    sifted_bits = int(sifted.sum())
    sifted_errors = int((sifted & (bob_bit != alice_bit)).sum())

    detections = int(click.sum())
    mean_photons = heralds * ctx.stats.mean * ctx.eta
    predicted = (
        absorption_uncertainty(alpha, ctx.stats.fano, mean_photons) if mean_photons > 0 else 0.0
    )

    alpha_est = None
    empirical = None
    span = ctx.reference_rate - ctx.y0
    if detections > 0 and span > 0:
        rate = detections / heralds
        alpha_est = float(np.clip(1.0 - (rate - ctx.y0) / span, ALPHA_EST_MIN, ALPHA_EST_MAX))
        empirical = math.sqrt(rate * (1.0 - rate) / heralds) / span

    pixel = PixelResult(
        index=index,
        row=row,
        col=col,
        alpha_true=alpha,
        pulses_sent=ctx.pulses,
        heralds=heralds,
        detections=detections,
        alpha_est=alpha_est,
        delta_alpha_predicted=predicted,
        delta_alpha_empirical=empirical,
    )
    return pixel, sifted_bits, sifted_errors


def simulate_raster_scan(
    scene: ImagingScene,
    source: SourceSpec,
    ch: ChannelSpec,
    pulses_per_pixel: int,
    eavesdropper: Eavesdropper = Eavesdropper.NONE,
    seed: int = 0,
    qber_threshold: float = DEFAULT_QBER_THRESHOLD,
    n_cut: int = DEFAULT_N_CUT,
    threads: int = 1,
) -> ImagingRunReport:
    """Monte Carlo raster scan of a scene with BB84-tagged pulses.

    Every pixel draws from its own random stream keyed by (seed, pixel index),
    so results do not depend on the thread count.

    Args:
        scene: Absorption ground truth
        source: Illuminating source; HSPS scans only detect heralded windows
        ch: Channel and receiver between source and detector
        pulses_per_pixel: Pulses (pump windows for HSPS) per pixel
        eavesdropper: Optional attack on the probe stream
        seed: Master seed
        qber_threshold: QBER above which the eavesdrop flag is raised
        n_cut: Photon-number truncation of the source distribution
        threads: Worker threads for pixel evaluation

    Returns:
        ImagingRunReport with per-pixel estimates and the sifted QBER
    """
    require(pulses_per_pixel >= 1, "pulses_per_pixel must be at least 1", pulses=pulses_per_pixel)
    require(seed >= 0, "seed must be a non-negative integer", seed=seed)

    ctx = _PixelContext(source, ch, pulses_per_pixel, eavesdropper, seed, n_cut)
    alphas = scene.flat()
    jobs = [(i, i // scene.width, i % scene.width, float(a)) for i, a in enumerate(alphas)]

    logger.info(
        "Raster scan: %d pixels x %d pulses, source=%s, attack=%s",
        len(jobs),
        pulses_per_pixel,
        source.kind.value,
        eavesdropper.value,
    )
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda job: _scan_pixel(ctx, *job), jobs))
    else:
        outcomes = [_scan_pixel(ctx, *job) for job in jobs]

    sifted_bits = sum(o[1] for o in outcomes)
    sifted_errors = sum(o[2] for o in outcomes)
    qber = min(sifted_errors / sifted_bits, 0.5) if sifted_bits else 0.0

    report = ImagingRunReport(
        pixels=[o[0] for o in outcomes],
        qber_measured=qber,
        sifted_bits=sifted_bits,
        sifted_errors=sifted_errors,
        qber_threshold=qber_threshold,
        eavesdropper=eavesdropper,
        seed=seed,
        source_kind=source.kind.value,
        fano=ctx.stats.fano,
        mean_photon_number=ctx.stats.mean,
        reference_click_rate=ctx.reference_rate,
    )
    if report.eavesdrop_flag:
        logger.warning("Sifted QBER %.4f exceeds threshold %.4f", qber, qber_threshold)
    return report
