"""Fixed-step classical fourth-order Runge-Kutta."""

from __future__ import annotations

from typing import Callable

import numpy as np


def rk4(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    t0: float,
    t1: float,
    steps: int,
    callback: Callable[[int, float, np.ndarray], None] | None = None,
) -> np.ndarray:
    """Integrate ``dy/dt = rhs(t, y)`` from t0 to t1 in ``steps`` equal steps.

    ``callback(k, t, y)`` is called after every step with the step number
    (1-based), the time and the current state.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    h = (t1 - t0) / steps
    y = np.array(y0, dtype=complex, copy=True)
    for k in range(steps):
        t = t0 + k * h
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if callback is not None:
            callback(k + 1, t + h, y)
    return y
