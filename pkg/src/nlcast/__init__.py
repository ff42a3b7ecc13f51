"""Inflation forecasting with linear and non-linear factor compression,
TVP-SV regressions under shrinkage priors, and dynamic model averaging."""

__version__ = "0.1.0"
