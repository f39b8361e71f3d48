"""Decoy-state protocol and key rate models for QSI Decoy Lab."""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .channel import GainQber


class EstimationMethod(str, Enum):
    """Single-photon bound estimators."""

    ANALYTIC = "analytic"
    LINEAR_PROGRAM = "lp"
    AUTO = "auto"


class DecoyProtocolSpec(BaseModel):
    """Signal and decoy intensities plus post-processing constants."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    signal_intensity: float = Field(default=0.1, gt=0.0, description="mu")
    decoy_intensities: List[float] = Field(
        default_factory=lambda: [0.001, 0.0], description="nu values, vacuum as 0"
    )
    q_factor: float = Field(default=0.5, gt=0.0, le=1.0, description="Sifting factor q")
    f_ec: float = Field(default=1.16, ge=1.0, description="Error-correction inefficiency")
    estimation_method: EstimationMethod = Field(default=EstimationMethod.AUTO)
    n_cut: int = Field(default=15, ge=2, le=60, description="Photon-number truncation for the LP")

    @field_validator("decoy_intensities")
    @classmethod
    def _non_negative(cls, v: List[float]) -> List[float]:
        if any(nu < 0 for nu in v):
            raise ValueError("decoy intensities must be non-negative")
        return v

    @model_validator(mode="after")
    def _decoys_below_signal(self) -> "DecoyProtocolSpec":
        for nu in self.decoy_intensities:
            if nu >= self.signal_intensity:
                raise ValueError(
                    f"decoy intensity {nu} must be below the signal intensity {self.signal_intensity}"
                )
        return self

    @property
    def weak_decoys(self) -> List[float]:
        """Nonzero decoy intensities."""
        return [nu for nu in self.decoy_intensities if nu > 0]

    @property
    def has_vacuum(self) -> bool:
        """True when a vacuum decoy is part of the protocol."""
        return any(nu == 0 for nu in self.decoy_intensities)

    def intensities(self) -> List[float]:
        """Signal first, then decoys in configured order."""
        return [self.signal_intensity] + list(self.decoy_intensities)

    def with_signal(self, mu: float, scale_decoys: bool = False) -> "DecoyProtocolSpec":
        """Copy at another signal intensity, optionally scaling decoys by mu/mu_template."""
        data = self.model_dump()
        data["signal_intensity"] = mu
        if scale_decoys:
            ratio = mu / self.signal_intensity
            data["decoy_intensities"] = [nu * ratio for nu in self.decoy_intensities]
        return DecoyProtocolSpec.model_validate(data)


class DecoyBounds(BaseModel):
    """Single-photon yield, gain and error bounds from one estimator."""

    model_config = ConfigDict(frozen=True)

    y1_lower: float = Field(ge=0.0, le=1.0)
    q1_lower: float = Field(ge=0.0, le=1.0)
    e1_upper: float = Field(ge=0.0, le=0.5)
    feasible: bool = True
    diagnostic: Optional[str] = None


class KeyRateResult(BaseModel):
    """Asymptotic secure key rate and the quantities feeding it."""

    model_config = ConfigDict(frozen=True)

    q_signal: GainQber
    y1_lower: float = Field(ge=0.0, le=1.0)
    q1_lower: float = Field(ge=0.0, le=1.0)
    e1_upper: float = Field(ge=0.0, le=0.5)
    rate: float = Field(ge=0.0, description="Secure bits per pulse")
    feasible: bool
    method: EstimationMethod
    diagnostic: Optional[str] = None

    def csv_row(self, loss_db: float, mu: float, nu: float) -> List[float]:
        """Row in the loss_db, mu, nu, Q_mu, E_mu, Y1_L, e1_U, rate layout."""
        return [
            loss_db,
            mu,
            nu,
            self.q_signal.gain,
            self.q_signal.qber,
            self.y1_lower,
            self.e1_upper,
            self.rate,
        ]


KEY_RATE_CSV_HEADER = ["loss_db", "mu", "nu", "Q_mu", "E_mu", "Y1_L", "e1_U", "rate"]
