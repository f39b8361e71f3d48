"""QSI Decoy Lab - decoy-state key rates and quantum-secured imaging models."""

__version__ = "1.0.1"
__author__ = "QSI Decoy Lab Team"
__description__ = (
    "Photon source statistics, decoy-state key rates and absorption imaging "
    "uncertainty for weak coherent and heralded single-photon sources"
)
