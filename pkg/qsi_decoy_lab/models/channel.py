"""Channel and receiver models for QSI Decoy Lab."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

BACKGROUND_ERROR = 0.5


class ChannelSpec(BaseModel):
    """Lossy channel plus threshold receiver."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    loss_db: float = Field(default=10.0, ge=0.0, description="Channel loss in dB")
    eta_b: float = Field(default=1.0, gt=0.0, le=1.0, description="Receiver efficiency")
    y0: float = Field(
        default=1e-6, ge=0.0, lt=1.0, description="Background click probability per gate (d_B)"
    )
    e_det: float = Field(default=0.01, ge=0.0, le=0.5, description="Misalignment error")
    e0: Literal[0.5] = Field(default=BACKGROUND_ERROR, description="Error of a background click")

    def at_loss(self, loss_db: float) -> "ChannelSpec":
        """Copy of this channel at another loss."""
        return ChannelSpec.model_validate({**self.model_dump(), "loss_db": loss_db})


class GainQber(BaseModel):
    """Overall gain and quantum bit error rate at one intensity."""

    model_config = ConfigDict(frozen=True)

    gain: float = Field(ge=0.0, le=1.0, description="Detection probability per pulse")
    qber: float = Field(ge=0.0, le=0.5, description="Conditional error probability")

    @model_validator(mode="after")
    def _check_error_mass(self) -> "GainQber":
        if self.qber * self.gain > self.gain:
            raise ValueError("error mass cannot exceed the gain")
        return self

    @property
    def error_gain(self) -> float:
        """E * Q, the probability of an erroneous click per pulse."""
        return self.gain * self.qber
