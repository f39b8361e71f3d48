"""Run configuration and report bundle models for QSI Decoy Lab."""

import hashlib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .channel import ChannelSpec
from .imaging import Eavesdropper
from .photon import CorrelationModel, SourceKind, SourceSpec, default_hsps, default_wcs
from .protocol import DecoyProtocolSpec
from .sweep import DecoyMode, SweepGrid

MAX_SEED = 2**64 - 1

_STRICT = ConfigDict(extra="forbid")


def _ordered_range(value: Tuple[float, float], name: str) -> Tuple[float, float]:
    lo, hi = value
    if lo <= 0 or hi < lo:
        raise ValueError(f"{name} must satisfy 0 < lo <= hi, got [{lo}, {hi}]")
    return value


class SourcesConfig(BaseModel):
    """The two sources compared throughout a run."""

    model_config = _STRICT

    wcs: SourceSpec = Field(default_factory=default_wcs)
    hsps: SourceSpec = Field(default_factory=default_hsps)

    @model_validator(mode="after")
    def _kinds_match(self) -> "SourcesConfig":
        if self.wcs.kind != SourceKind.WCS:
            raise ValueError("sources.wcs must have kind 'wcs'")
        if self.hsps.kind != SourceKind.HSPS:
            raise ValueError("sources.hsps must have kind 'hsps'")
        return self

    def get(self, kind: SourceKind) -> SourceSpec:
        return self.wcs if kind == SourceKind.WCS else self.hsps


class FanoPair(BaseModel):
    """Mean photon number and g2(0) of one tabulated Fano factor."""

    model_config = _STRICT

    mean_n: float = Field(ge=0.0)
    g2_zero: float = Field(ge=0.0)


def _default_fano_pairs() -> List[FanoPair]:
    return [
        FanoPair(mean_n=mean_n, g2_zero=g2)
        for mean_n in (0.3, 0.05)
        for g2 in (0.005, 0.05, 0.5)
    ]


class Fig1Config(BaseModel):
    """Absorption uncertainty surface settings."""

    model_config = _STRICT

    alpha: float = Field(default=0.5, ge=0.0, le=1.0)
    fano_range: Tuple[float, float] = Field(default=(0.5, 1.0))
    mean_range: Tuple[float, float] = Field(default=(1.0, 10.0))
    steps: int = Field(default=11, ge=2, le=1001)
    fano_pairs: List[FanoPair] = Field(default_factory=_default_fano_pairs)

    @field_validator("fano_range")
    @classmethod
    def _fano_range(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        return _ordered_range(v, "fano_range")

    @field_validator("mean_range")
    @classmethod
    def _mean_range(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        return _ordered_range(v, "mean_range")


class Fig2Config(BaseModel):
    """Single-photon probability comparison settings."""

    model_config = _STRICT

    x_range: Tuple[float, float] = Field(default=(0.01, 1.0))
    points: int = Field(default=100, ge=2, le=100000)
    include_zero: bool = Field(default=True, description="Prepend the x = 0 row")
    n_cut: int = Field(default=20, ge=2, le=200)
    crossover_bracket: Tuple[float, float] = Field(default=(0.1, 1.0))
    correlation_model: CorrelationModel = Field(
        default=CorrelationModel.SIGNAL_RETENTION,
        description="Correlation model of the HSPS curve and crossover",
    )

    @field_validator("x_range", "crossover_bracket")
    @classmethod
    def _ranges(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        return _ordered_range(v, "range")


class PanelConfig(BaseModel):
    """One rate-versus-loss panel: its signal intensities and decoys."""

    model_config = _STRICT

    name: str = Field(pattern="^[A-Za-z0-9_-]+$")
    mu_points: List[float]
    decoy_intensities: List[float]


def _default_panels() -> List[PanelConfig]:
    return [
        PanelConfig(name="a", mu_points=[0.01, 0.05, 0.1], decoy_intensities=[0.001, 0.0]),
        PanelConfig(name="b", mu_points=[0.2, 0.25, 0.3], decoy_intensities=[0.1, 0.0]),
    ]


class Fig3Config(BaseModel):
    """Rate-versus-loss panels."""

    model_config = _STRICT

    loss_points: List[float] = Field(default_factory=lambda: [float(v) for v in range(0, 42, 2)])
    panels: List[PanelConfig] = Field(default_factory=_default_panels)
    sources: List[SourceKind] = Field(default_factory=lambda: [SourceKind.WCS, SourceKind.HSPS])
    decoy_mode: DecoyMode = Field(default=DecoyMode.FIXED)

    @field_validator("panels")
    @classmethod
    def _non_empty(cls, v: List[PanelConfig]) -> List[PanelConfig]:
        if not v:
            raise ValueError("at least one panel is required")
        return v


class SweepConfig(BaseModel):
    """Free-form sweep used by the optimize command's curve table."""

    model_config = _STRICT

    loss_points: List[float] = Field(default_factory=lambda: [0.0, 10.0, 20.0, 30.0])
    mu_points: List[float] = Field(default_factory=lambda: [0.1])
    decoy_mode: DecoyMode = Field(default=DecoyMode.SCALED)


class ImagingConfig(BaseModel):
    """Raster-scan simulation settings."""

    model_config = _STRICT

    scene_path: Optional[str] = Field(default=None, description="Absorption grid file")
    width: int = Field(default=8, ge=1, description="Uniform scene width when no file is given")
    height: int = Field(default=8, ge=1)
    alpha: float = Field(default=0.5, ge=0.0, le=1.0)
    source: SourceKind = Field(default=SourceKind.WCS)
    pulses_per_pixel: int = Field(default=10000, ge=1)
    eavesdropper: Eavesdropper = Field(default=Eavesdropper.NONE)
    qber_threshold: float = Field(default=0.11, gt=0.0, le=0.5)
    n_cut: int = Field(default=20, ge=2, le=200)


class OptimizeConfig(BaseModel):
    """Optimal intensity and loss-limit search settings."""

    model_config = _STRICT

    loss_db: float = Field(default=10.0, ge=0.0)
    bracket: Tuple[float, float] = Field(default=(0.01, 1.0))
    tolerance: float = Field(default=1e-4, gt=0.0)
    decoy_mode: DecoyMode = Field(default=DecoyMode.SCALED)
    rate_floor: float = Field(default=1e-10, gt=0.0)
    loss_cap_db: float = Field(default=60.0, gt=0.0)
    sources: List[SourceKind] = Field(default_factory=lambda: [SourceKind.WCS, SourceKind.HSPS])

    @field_validator("bracket")
    @classmethod
    def _bracket(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        return _ordered_range(v, "bracket")


class RunConfig(BaseModel):
    """Everything a CLI run needs; defaults reproduce the reference figures."""

    model_config = _STRICT

    sources: SourcesConfig = Field(default_factory=SourcesConfig)
    channel: ChannelSpec = Field(default_factory=ChannelSpec)
    decoy: DecoyProtocolSpec = Field(default_factory=DecoyProtocolSpec)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    fig1: Fig1Config = Field(default_factory=Fig1Config)
    fig2: Fig2Config = Field(default_factory=Fig2Config)
    fig3: Fig3Config = Field(default_factory=Fig3Config)
    imaging: ImagingConfig = Field(default_factory=ImagingConfig)
    optimize: OptimizeConfig = Field(default_factory=OptimizeConfig)
    seed: int = Field(default=12345, ge=0, le=MAX_SEED)
    output_dir: Optional[str] = Field(default=None)
    output_formats: List[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv"])

    @field_validator("output_formats")
    @classmethod
    def _formats(cls, v: List[str]) -> List[str]:
        if not v:
            raise ValueError("at least one output format is required")
        return sorted(set(v))

    @model_validator(mode="after")
    def _grids_valid(self) -> "RunConfig":
        for panel in self.fig3.panels:
            self.fig3_grid(panel)
        self.sweep_grid()
        return self

    def fig3_grid(self, panel: PanelConfig) -> SweepGrid:
        """Sweep grid of one rate-versus-loss panel."""
        decoy = DecoyProtocolSpec.model_validate(
            {
                **self.decoy.model_dump(),
                "signal_intensity": max(panel.mu_points, default=1.0),
                "decoy_intensities": panel.decoy_intensities,
            }
        )
        return SweepGrid(
            loss_points=self.fig3.loss_points,
            mu_points=panel.mu_points,
            sources=self.fig3.sources,
            decoy=decoy,
            decoy_mode=self.fig3.decoy_mode,
            wcs=self.sources.wcs,
            hsps=self.sources.hsps,
            channel=self.channel,
        )

    def sweep_grid(self) -> SweepGrid:
        """Sweep grid of the free-form sweep section."""
        return SweepGrid(
            loss_points=self.sweep.loss_points,
            mu_points=self.sweep.mu_points,
            sources=self.optimize.sources,
            decoy=self.decoy,
            decoy_mode=self.sweep.decoy_mode,
            wcs=self.sources.wcs,
            hsps=self.sources.hsps,
            channel=self.channel,
        )

    def resolve_paths(self, base_dir: Path) -> "RunConfig":
        """Copy with relative file references resolved against base_dir."""
        scene = self.imaging.scene_path
        if scene is None or Path(scene).is_absolute():
            return self
        data = self.model_dump(mode="json")
        data["imaging"]["scene_path"] = str(Path(base_dir) / scene)
        return RunConfig.model_validate(data)


class ManifestEntry(BaseModel):
    """One emitted file and its content hash."""

    path: str = Field(description="File name relative to the output directory")
    sha256: str
    bytes: int = Field(ge=0)


class ReportBundle(BaseModel):
    """Files emitted by a command plus the metadata that reproduces them."""

    command: str
    version: str
    timestamp: str
    seed: int
    config: Dict[str, Any] = Field(description="Fully resolved run configuration")
    files: List[ManifestEntry] = Field(default_factory=list)
    summary: Dict[str, Any] = Field(default_factory=dict)

    def verify(self, out_dir: Path) -> bool:
        """True when every listed file exists and its hash matches."""
        for entry in self.files:
            target = Path(out_dir) / entry.path
            if not target.is_file():
                return False
            if hashlib.sha256(target.read_bytes()).hexdigest() != entry.sha256:
                return False
        return True
