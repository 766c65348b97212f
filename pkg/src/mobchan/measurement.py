"""Measurement chain: measurement error, L1 moving average, L3 IIR filter."""

from __future__ import annotations

import math

import numpy as np


def measurement_error_sample(rng: np.random.Generator, sigma_db: float, size=None):
    """Zero-mean Gaussian error in dB (log-normal in linear power)."""
    if sigma_db < 0:
        raise ValueError("sigma_db must be non-negative")
    if sigma_db == 0:
        return np.zeros(size) if size is not None else 0.0
    return rng.normal(0.0, sigma_db, size=size)


def l1_filter(samples_window_db) -> float:
    """Moving average of a window of dB samples, computed in linear power."""
    w = np.asarray(samples_window_db, dtype=float)
    if w.size == 0:
        raise ValueError("L1 window must be non-empty")
    return 10.0 * math.log10(np.mean(10.0 ** (w / 10.0)))


def alpha_from_time_constant(t_alpha_s: float, l1_period_s: float) -> float:
    """Forgetting factor such that a sample's weight halves after t_alpha."""
    if t_alpha_s <= 0 or l1_period_s <= 0:
        raise ValueError("time constant and L1 period must be positive")
    return 1.0 - 2.0 ** (-l1_period_s / t_alpha_s)


def l3_filter_update(prev_db: float | None, q_db: float, alpha: float) -> float:
    """One first-order IIR step in dB; the first sample seeds the state."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    if prev_db is None:
        return q_db
    return alpha * q_db + (1.0 - alpha) * prev_db
