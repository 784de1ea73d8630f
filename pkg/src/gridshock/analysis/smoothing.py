"""Savitzky-Golay smoothing for annual LOS trends."""

from __future__ import annotations

import numpy as np

from gridshock.errors import InvalidFilter


def _fit_matrix(window: int, poly_order: int) -> np.ndarray:
    """Least-squares projector from window samples to polynomial coefficients."""
    half = window // 2
    x = np.arange(-half, half + 1, dtype=float)
    vander = np.vander(x, poly_order + 1, increasing=True)
    return np.linalg.pinv(vander), x


def savitzky_golay(series, window: int, poly_order: int) -> np.ndarray:
    """Smooth ``series`` by a moving least-squares polynomial fit.

    Interior points take the fitted value at the window centre.  The first
    and last ``window // 2`` points are evaluated from the polynomial fitted
    to the nearest full window.
    """
    y = np.asarray(series, dtype=float)
    if window < 1 or window % 2 == 0:
        raise InvalidFilter("window must be a positive odd integer")
    if poly_order < 0 or poly_order >= window:
        raise InvalidFilter("poly_order must satisfy 0 <= poly_order < window")
    if y.ndim != 1 or window > len(y):
        raise InvalidFilter("window cannot exceed the series length")

    proj, x = _fit_matrix(window, poly_order)
    half = window // 2
    n = len(y)
    out = np.empty(n)
    # interior: centre value of each fit is the constant coefficient
    centre = proj[0]
    for i in range(half, n - half):
        out[i] = centre @ y[i - half : i + half + 1]
    powers = np.arange(poly_order + 1)
    head = proj @ y[:window]
    tail = proj @ y[n - window :]
    for i in range(half):
        out[i] = (x[i] ** powers) @ head
        out[n - half + i] = (x[half + 1 + i] ** powers) @ tail
    return out
