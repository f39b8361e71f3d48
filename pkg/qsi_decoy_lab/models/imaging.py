"""Imaging scene and raster-scan report models for QSI Decoy Lab."""

from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

ALPHA_EST_MIN = -0.1
ALPHA_EST_MAX = 1.1


class Eavesdropper(str, Enum):
    """Attacks the raster scan can be run under."""

    NONE = "none"
    INTERCEPT_RESEND = "intercept_resend"


class ImagingScene(BaseModel):
    """Per-pixel absorption ground truth, stored row-major."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    width: int = Field(ge=1)
    height: int = Field(ge=1)
    alpha: List[List[float]] = Field(description="alpha[row][col] in [0, 1]")

    @model_validator(mode="after")
    def _check_grid(self) -> "ImagingScene":
        if len(self.alpha) != self.height:
            raise ValueError(f"expected {self.height} rows, got {len(self.alpha)}")
        for r, row in enumerate(self.alpha):
            if len(row) != self.width:
                raise ValueError(f"row {r} has {len(row)} values, expected {self.width}")
            for value in row:
                if not 0.0 <= value <= 1.0:
                    raise ValueError(f"absorption {value} in row {r} is outside [0, 1]")
        return self

    @classmethod
    def uniform(cls, width: int, height: int, alpha: float) -> "ImagingScene":
        """Scene with the same absorption everywhere."""
        return cls(width=width, height=height, alpha=[[alpha] * width for _ in range(height)])

    def flat(self) -> np.ndarray:
        """Absorption values in row-major pixel order."""
        return np.asarray(self.alpha, dtype=np.float64).reshape(-1)


class UncertaintySurface(BaseModel):
    """Absorption uncertainty over a Fano factor by mean photon number grid."""

    model_config = ConfigDict(frozen=True)

    alpha: float
    fano_values: List[float]
    mean_values: List[float]
    delta_alpha: List[List[float]] = Field(description="delta_alpha[i_fano][j_mean]")

    def rows(self) -> List[List[float]]:
        """Flattened (F, mean_n, delta_alpha) rows, row-major."""
        return [
            [f, n, self.delta_alpha[i][j]]
            for i, f in enumerate(self.fano_values)
            for j, n in enumerate(self.mean_values)
        ]


class PixelResult(BaseModel):
    """Counts and absorption estimate of one raster-scan pixel."""

    model_config = ConfigDict(frozen=True)

    index: int = Field(ge=0)
    row: int = Field(ge=0)
    col: int = Field(ge=0)
    alpha_true: float
    pulses_sent: int = Field(ge=0)
    heralds: int = Field(ge=0)
    detections: int = Field(ge=0)
    alpha_est: Optional[float] = Field(default=None, description="Missing when nothing clicked")
    delta_alpha_predicted: float = Field(ge=0.0)
    delta_alpha_empirical: Optional[float] = None

    @model_validator(mode="after")
    def _check_counts(self) -> "PixelResult":
        if self.heralds > self.pulses_sent or self.detections > self.heralds:
            raise ValueError("counts must satisfy detections <= heralds <= pulses_sent")
        if self.alpha_est is not None and not ALPHA_EST_MIN <= self.alpha_est <= ALPHA_EST_MAX:
            raise ValueError(f"alpha_est {self.alpha_est} outside reporting range")
        return self


PIXEL_CSV_HEADER = [
    "index",
    "row",
    "col",
    "alpha_true",
    "pulses_sent",
    "heralds",
    "detections",
    "alpha_est",
    "delta_alpha_predicted",
    "delta_alpha_empirical",
]


class ImagingRunReport(BaseModel):
    """Outcome of a raster scan, per pixel and global."""

    pixels: List[PixelResult]
    qber_measured: float = Field(ge=0.0, le=0.5)
    sifted_bits: int = Field(ge=0)
    sifted_errors: int = Field(ge=0)
    qber_threshold: float
    eavesdropper: Eavesdropper
    seed: int
    source_kind: str
    fano: float
    mean_photon_number: float
    reference_click_rate: float

    @computed_field
    @property
    def eavesdrop_flag(self) -> bool:
        """True when the sifted error rate exceeds the abort threshold."""
        return self.qber_measured > self.qber_threshold

    def alpha_estimates(self) -> np.ndarray:
        """Estimates in pixel order with NaN for missing pixels."""
        return np.array(
            [np.nan if p.alpha_est is None else p.alpha_est for p in self.pixels],
            dtype=np.float64,
        )

    def pixel_rows(self) -> List[List[Any]]:
        """Per-pixel rows in PIXEL_CSV_HEADER order."""
        return [[getattr(p, column) for column in PIXEL_CSV_HEADER] for p in self.pixels]

    def summary(self) -> Dict[str, Any]:
        """Global fields for the JSON summary."""
        missing = sum(1 for p in self.pixels if p.alpha_est is None)
        return {
            "qber_measured": self.qber_measured,
            "sifted_bits": self.sifted_bits,
            "sifted_errors": self.sifted_errors,
            "qber_threshold": self.qber_threshold,
            "eavesdrop_flag": self.eavesdrop_flag,
            "eavesdropper": self.eavesdropper.value,
            "seed": self.seed,
            "source_kind": self.source_kind,
            "fano": self.fano,
            "mean_photon_number": self.mean_photon_number,
            "reference_click_rate": self.reference_click_rate,
            "pixels": len(self.pixels),
            "missing_pixels": missing,
        }
