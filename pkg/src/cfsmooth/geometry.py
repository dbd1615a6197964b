"""Closed-form distance primitives for capsules and axis-aligned cells.

Everything here is exact (up to floating point), vectorized, and free of
iteration: these functions back the geometric collision checks that act as
the final safety gate, so they must not be approximate.
"""

from __future__ import annotations

import numpy as np


def point_segment_distance(p, a, b):
    """Distance from point(s) ``p`` to the segment ``a``-``b``.

    ``p`` may carry leading batch dimensions: shape (..., dim).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    d = b - a
    dd = float(np.dot(d, d))
    if dd == 0.0:
        return np.linalg.norm(p - a, axis=-1)
    t = np.clip((p - a) @ d / dd, 0.0, 1.0)
    closest = a + t[..., None] * d
    return np.linalg.norm(p - closest, axis=-1)


def segment_box_distance_sq(a, b, lo, hi):
    """Exact squared distance between segments and axis-aligned boxes.

    a, b: (S, dim) segment endpoints; lo, hi: (C, dim) box corners.
    Returns an (S, C) array, zero wherever a segment intersects a box.

    Along the segment parameter t the squared point-to-box distance is
    piecewise quadratic; the pieces are delimited by the t values where the
    swept point crosses one of the box face planes. Each piece is minimized
    in closed form and the piecewise minimum is returned, so no tolerance or
    iteration enters the result.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    squeeze_s = a.ndim == 1
    squeeze_c = lo.ndim == 1
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    lo = np.atleast_2d(lo)
    hi = np.atleast_2d(hi)
    S, dim = a.shape
    C = lo.shape[0]

    d = b - a                                   # (S, dim)
    a_b = a[:, None, :]                         # (S, 1, dim)
    d_b = d[:, None, :]
    lo_b = lo[None, :, :]                       # (1, C, dim)
    hi_b = hi[None, :, :]

    # Face-plane crossing parameters; axes parallel to a face never cross it,
    # so park those breakpoints at +inf (they clip away below).
    d_safe = np.where(d_b == 0.0, 1.0, d_b)
    t_lo = np.where(d_b != 0.0, (lo_b - a_b) / d_safe, np.inf)
    t_hi = np.where(d_b != 0.0, (hi_b - a_b) / d_safe, np.inf)

    ends = np.broadcast_to(np.array([0.0, 1.0]), (S, C, 2))
    ts = np.concatenate([t_lo, t_hi, ends], axis=2)
    ts = np.clip(ts, 0.0, 1.0)
    ts.sort(axis=2)

    best = np.full((S, C), np.inf)
    for j in range(ts.shape[2] - 1):
        t0 = ts[:, :, j]
        t1 = ts[:, :, j + 1]
        tm = 0.5 * (t0 + t1)
        x = a_b + tm[:, :, None] * d_b
        below = x < lo_b
        above = x > hi_b
        # Per-axis clamp excess is linear on this piece: slope * t + intercept.
        slope = np.where(below, -d_b, np.where(above, d_b, 0.0))
        intercept = np.where(below, lo_b - a_b, np.where(above, a_b - hi_b, 0.0))
        qa = np.sum(slope * slope, axis=2)
        qb = 2.0 * np.sum(slope * intercept, axis=2)
        qc = np.sum(intercept * intercept, axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_star = np.where(qa > 0.0, -qb / (2.0 * qa), t0)
        t_star = np.clip(t_star, t0, t1)
        val = (qa * t_star + qb) * t_star + qc
        np.minimum(best, val, out=best)

    np.maximum(best, 0.0, out=best)
    if squeeze_s and squeeze_c:
        return float(best[0, 0])
    if squeeze_s:
        return best[0]
    if squeeze_c:
        return best[:, 0]
    return best
