"""Squeezed vacuum through an EIT medium: CW and pulsed propagation, calibration,
and maximum-likelihood homodyne tomography."""

__version__ = "0.1.0"
