"""C-infinity ramp used by every cut-off and envelope in the package.

sigma(s) = e^{-1/s} / (e^{-1/s} + e^{-1/(1-s)}) rises from 0 at s<=0 to 1 at
s>=1 with all derivatives vanishing at both ends.  First and second
derivatives are coded analytically; nothing in the package differentiates a
ramp numerically.
"""

from __future__ import annotations

import numpy as np

__all__ = ["ramp", "ramp_d1", "ramp_d2", "window", "window_d1", "window_d2",
           "poly_ramp", "poly_window"]


def _pieces(s: np.ndarray):
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    sc = np.where(inside, s, 0.5)  # dummy value outside, masked later
    a = np.exp(-1.0 / sc)
    b = np.exp(-1.0 / (1.0 - sc))
    return s, inside, sc, a, b


def ramp(s):
    s, inside, sc, a, b = _pieces(s)
    out = np.where(s >= 1.0, 1.0, 0.0)
    out = np.where(inside, a / (a + b), out)
    return out if out.ndim else float(out)


def ramp_d1(s):
    s, inside, sc, a, b = _pieces(s)
    ap = a / sc**2
    bp = -b / (1.0 - sc) ** 2
    d = a + b
    out = np.where(inside, (ap * b - a * bp) / d**2, 0.0)
    return out if out.ndim else float(out)


def ramp_d2(s):
    s, inside, sc, a, b = _pieces(s)
    ap = a / sc**2
    bp = -b / (1.0 - sc) ** 2
    app = a / sc**4 - 2.0 * a / sc**3
    bpp = b / (1.0 - sc) ** 4 - 2.0 * b / (1.0 - sc) ** 3
    d = a + b
    n = ap * b - a * bp
    npr = app * b - a * bpp
    out = np.where(inside, npr / d**2 - 2.0 * n * (ap + bp) / d**3, 0.0)
    return out if out.ndim else float(out)


def window(y, lo_out, lo_in, hi_in, hi_out):
    """Smooth window: 0 outside (lo_out, hi_out), 1 on [lo_in, hi_in].

    Either transition may be degenerate (lo_out == lo_in disables it).
    """
    y = np.asarray(y, dtype=float)
    out = np.ones_like(y)
    if lo_in > lo_out:
        out = out * ramp((y - lo_out) / (lo_in - lo_out))
    if hi_out > hi_in:
        out = out * ramp((hi_out - y) / (hi_out - hi_in))
    return out


def window_d1(y, lo_out, lo_in, hi_in, hi_out):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    if lo_in > lo_out:
        w = lo_in - lo_out
        out = out + ramp_d1((y - lo_out) / w) / w
    if hi_out > hi_in:
        w = hi_out - hi_in
        out = out - ramp_d1((hi_out - y) / w) / w
    return out


def window_d2(y, lo_out, lo_in, hi_in, hi_out):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    if lo_in > lo_out:
        w = lo_in - lo_out
        out = out + ramp_d2((y - lo_out) / w) / w**2
    if hi_out > hi_in:
        w = hi_out - hi_in
        out = out + ramp_d2((hi_out - y) / w) / w**2
    return out


# Polynomial smoothstep of class C^7 (degree 15): every derivative used by
# the laboratory (up to order 6) is a fully resolvable polynomial, unlike
# the exponential ramp whose high derivatives oscillate on vanishing scales.
# Coefficients of S_7 in ascending powers s^8 .. s^15.
_S7 = (6435.0, -40040.0, 108108.0, -163800.0, 150150.0, -83160.0, 25740.0, -3432.0)


def _s7_half(sc):
    acc = np.zeros_like(sc)
    for c in reversed(_S7):
        acc = acc * sc + c
    return acc * sc**8


def poly_ramp(s):
    s = np.asarray(s, dtype=float)
    sc = np.clip(s, 0.0, 1.0)
    # symmetric evaluation S(1-s) = 1 - S(s) keeps the Horner sum in its
    # cancellation-free half
    low = sc <= 0.5
    out = np.where(low, _s7_half(np.where(low, sc, 0.0)),
                   1.0 - _s7_half(np.where(low, 0.0, 1.0 - sc)))
    out[s >= 1.0] = 1.0
    out[s <= 0.0] = 0.0
    return out if out.ndim else float(out)


def poly_window(y, lo_out, lo_in, hi_in, hi_out):
    """C^7 window: 0 outside (lo_out, hi_out), exactly 1 on [lo_in, hi_in]."""
    y = np.asarray(y, dtype=float)
    out = np.ones_like(y)
    if lo_in > lo_out:
        out = out * poly_ramp((y - lo_out) / (lo_in - lo_out))
    if hi_out > hi_in:
        out = out * poly_ramp((hi_out - y) / (hi_out - hi_in))
    return out
