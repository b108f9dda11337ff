"""Finite-difference checks of the analytic metric derivatives."""

from __future__ import annotations

import numpy as np

from . import tensor_core as tc

EPS_CBRT = np.finfo(float).eps ** (1.0 / 3.0)


def _richardson(f, x, h):
    """Central-difference partials of an array field, one Richardson level."""
    base = np.asarray(f(x))
    out = np.zeros(base.shape + (tc.DIM,))
    for c in range(tc.DIM):
        e = np.zeros(tc.DIM)
        e[c] = h[c]
        d1 = (f(x + e) - f(x - e)) / (2 * h[c])
        d2 = (f(x + 2 * e) - f(x - 2 * e)) / (4 * h[c])
        out[..., c] = (4 * d1 - d2) / 3
    return out


def fd_metric_derivatives(m: tc.MetricSpec, x, scale=None) -> tuple[np.ndarray, np.ndarray]:
    """``(d1, d2)`` of the metric by finite differences with ``h = cbrt(eps) * scale``."""
    x = np.asarray(x, dtype=float)
    scale = np.maximum(np.abs(x), 1.0) if scale is None else np.broadcast_to(scale, (tc.DIM,))
    h = EPS_CBRT * np.asarray(scale, dtype=float)
    d1 = _richardson(m.value, x, h)
    d2 = _richardson(m.d1, x, h)
    return d1, d2


def derivative_agreement(m: tc.MetricSpec, x, scale=None) -> dict[str, float]:
    """Relative disagreement between analytic and finite-difference derivatives."""
    fd1, fd2 = fd_metric_derivatives(m, x, scale)
    a1, a2 = m.d1(x), m.d2(x)

    def rel(a, b):
        return float(np.abs(a - b).max() / max(np.abs(a).max(), np.abs(b).max(), 1.0))

    return {"d1": rel(a1, fd1), "d2": rel(a2, fd2)}
