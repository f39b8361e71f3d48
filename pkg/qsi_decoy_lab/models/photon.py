"""Photon source models for QSI Decoy Lab."""

import math
from enum import Enum
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

NORMALIZATION_TOL = 1e-9
MIN_N_CUT = 2


class SourceKind(str, Enum):
    """Photon source variants."""

    WCS = "wcs"
    HSPS = "hsps"


class CorrelationModel(str, Enum):
    """How the heralding correlation probability enters the heralded statistics."""

    HERALD_SCALING = "herald_scaling"
    SIGNAL_RETENTION = "signal_retention"


class PhotonNumberDistribution(BaseModel):
    """Truncated photon-number distribution with an explicit tail mass."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    probs: Tuple[float, ...] = Field(description="P(k) for k = 0..n_cut")
    n_cut: int = Field(ge=MIN_N_CUT, description="Truncation order")
    tail_mass: float = Field(ge=0.0, le=1.0, description="P(k > n_cut)")
    truncation_warning: bool = Field(
        default=False,
        description="Tail mass exceeds the configured truncation cap",
    )

    @model_validator(mode="after")
    def _check_normalization(self) -> "PhotonNumberDistribution":
        if len(self.probs) != self.n_cut + 1:
            raise ValueError(
                f"probs must have n_cut + 1 = {self.n_cut + 1} entries, got {len(self.probs)}"
            )
        if any(not (0.0 <= p <= 1.0) or math.isnan(p) for p in self.probs):
            raise ValueError("every probability must lie in [0, 1]")
        total = math.fsum(self.probs) + self.tail_mass
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        return self

    def as_array(self) -> np.ndarray:
        """Return probs as a float64 array."""
        return np.asarray(self.probs, dtype=np.float64)

    def to_json_dict(self) -> dict:
        """Serialize to the documented {"probs", "n_cut", "tail_mass"} shape."""
        return {"probs": list(self.probs), "n_cut": self.n_cut, "tail_mass": self.tail_mass}


class SourceSpec(BaseModel):
    """Configuration of a weak coherent or heralded single-photon source."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: SourceKind = Field(default=SourceKind.WCS)
    mean_intensity: float = Field(
        default=0.1,
        ge=0.0,
        description="Mean photon number (WCS) or mean pair number per window (HSPS)",
    )
    herald_efficiency: float = Field(default=0.5, ge=0.0, le=1.0, description="eta_A")
    herald_dark: float = Field(default=1e-5, ge=0.0, lt=1.0, description="d_A")
    correlation_prob: float = Field(default=0.7, ge=0.0, le=1.0, description="c")
    correlation_model: CorrelationModel = Field(default=CorrelationModel.HERALD_SCALING)
    repetition_rate: float = Field(default=1e9, gt=0.0, description="Pulses per second")


class SourceStatistics(BaseModel):
    """Moments of a photon-number distribution."""

    model_config = ConfigDict(frozen=True)

    mean: float = Field(ge=0.0)
    variance: float = Field(ge=0.0)
    g2_zero: float = Field(ge=0.0)
    fano: float = Field(ge=0.0)

    @computed_field
    @property
    def sub_poissonian(self) -> bool:
        """True when the variance is below the mean."""
        return self.fano < 1.0


def default_wcs() -> SourceSpec:
    """WCS source at a GHz clock."""
    return SourceSpec(kind=SourceKind.WCS, mean_intensity=0.1, repetition_rate=1e9)


def default_hsps() -> SourceSpec:
    """HSPS source with the reference heralding parameters at a MHz clock."""
    return SourceSpec(
        kind=SourceKind.HSPS,
        mean_intensity=0.1,
        herald_efficiency=0.5,
        herald_dark=1e-5,
        correlation_prob=0.7,
        repetition_rate=1e7,
    )


def probability_list(dist: PhotonNumberDistribution) -> List[float]:
    """Probabilities including the tail as a final bucket."""
    return list(dist.probs) + [dist.tail_mass]
