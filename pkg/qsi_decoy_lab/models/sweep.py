"""Sweep and optimization models for QSI Decoy Lab."""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .channel import ChannelSpec
from .photon import SourceKind, SourceSpec, default_hsps, default_wcs
from .protocol import DecoyProtocolSpec


class DecoyMode(str, Enum):
    """How decoy intensities follow the signal intensity in a sweep."""

    FIXED = "fixed"
    SCALED = "scaled"


class SweepGrid(BaseModel):
    """Loss and signal-intensity grid with the fixed context it is evaluated in."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    loss_points: List[float] = Field(description="Channel losses in dB, strictly increasing")
    mu_points: List[float] = Field(description="Signal intensities")
    sources: List[SourceKind] = Field(default_factory=lambda: [SourceKind.WCS, SourceKind.HSPS])
    decoy: DecoyProtocolSpec = Field(default_factory=DecoyProtocolSpec)
    decoy_mode: DecoyMode = Field(default=DecoyMode.SCALED)
    wcs: SourceSpec = Field(default_factory=default_wcs)
    hsps: SourceSpec = Field(default_factory=default_hsps)
    channel: ChannelSpec = Field(default_factory=ChannelSpec)

    @field_validator("loss_points")
    @classmethod
    def _increasing_losses(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("loss_points must not be empty")
        if any(loss < 0 for loss in v):
            raise ValueError("loss_points must be non-negative")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("loss_points must be strictly increasing")
        return v

    @field_validator("mu_points")
    @classmethod
    def _positive_intensities(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("mu_points must not be empty")
        if any(mu <= 0 for mu in v):
            raise ValueError("mu_points must be positive")
        return v

    @model_validator(mode="after")
    def _signal_above_decoys(self) -> "SweepGrid":
        if self.decoy_mode == DecoyMode.FIXED:
            top = max(self.decoy.decoy_intensities, default=0.0)
            low = [mu for mu in self.mu_points if mu <= top]
            if low:
                raise ValueError(f"mu_points {low} do not exceed the largest decoy {top}")
        return self

    def source(self, kind: SourceKind) -> SourceSpec:
        """Configured source of the given kind."""
        return self.wcs if kind == SourceKind.WCS else self.hsps


class CurveRow(BaseModel):
    """One evaluated (source, mu, loss) point."""

    model_config = ConfigDict(frozen=True)

    source: SourceKind
    mu: float
    nu: float
    loss_db: float
    rate: float = Field(ge=0.0)
    throughput_bps: float = Field(ge=0.0)
    feasible: bool
    diagnostic: Optional[str] = None


CURVE_CSV_HEADER = ["source", "mu", "nu", "loss_db", "rate", "throughput_bps", "feasible"]


class CurveTable(BaseModel):
    """Rate-versus-loss rows in grid order."""

    rows: List[CurveRow] = Field(default_factory=list)

    def select(
        self, source: Optional[SourceKind] = None, mu: Optional[float] = None
    ) -> List[CurveRow]:
        """Rows matching a source and/or signal intensity, in table order."""
        return [
            r
            for r in self.rows
            if (source is None or r.source == source) and (mu is None or r.mu == mu)
        ]

    def at_loss(self, loss_db: float, source: Optional[SourceKind] = None) -> List[CurveRow]:
        return [r for r in self.select(source) if r.loss_db == loss_db]

    def csv_rows(self) -> List[list]:
        return [
            [r.source.value, r.mu, r.nu, r.loss_db, r.rate, r.throughput_bps, r.feasible]
            for r in self.rows
        ]


class LossLimit(BaseModel):
    """Largest loss at which the key rate stays above the floor."""

    model_config = ConfigDict(frozen=True)

    loss_db: float = Field(ge=0.0)
    exceeds_cap: bool = Field(description="Rate is still above the floor at the search cap")
    cap_db: float

    def display(self) -> str:
        """Human readable limit, '>cap' when the search cap was reached."""
        if self.exceeds_cap:
            return f">{self.cap_db:g}"
        return f"{self.loss_db:.2f}"


class OptimumResult(BaseModel):
    """Best signal intensity found by the optimizer."""

    model_config = ConfigDict(frozen=True)

    mu_star: float
    rate_star: float = Field(ge=0.0)
    evaluations: int = Field(ge=1)
