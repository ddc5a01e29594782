"""Vectorized bracketed root refinement."""

from __future__ import annotations

import numpy as np


def refine_brackets(func, a, b, fa=None, fb=None, xtol=1e-12, maxiter=200):
    """Refine many sign-change brackets ``[a_i, b_i]`` at once.

    ``func(x, idx)`` evaluates element ``idx`` (an index array into the
    original brackets) at abscissae ``x``.  Illinois steps, falling back to
    bisection whenever the secant leaves the bracket.  Returns the roots and
    the function values there.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    live = np.arange(a.size)
    fa = func(a, live) if fa is None else np.array(fa, dtype=float)
    fb = func(b, live) if fb is None else np.array(fb, dtype=float)
    root = b.copy()
    froot = fb.copy()
    for _ in range(maxiter):
        if live.size == 0:
            break
        denom = fb - fa
        cand = b - fb * (b - a) / np.where(denom == 0, 1.0, denom)
        outside = (denom == 0) | ~((cand > np.minimum(a, b)) & (cand < np.maximum(a, b)))
        cand = np.where(outside, 0.5 * (a + b), cand)
        fc = func(cand, live)
        flip = fc * fb < 0
        a = np.where(flip, b, a)
        fa = np.where(flip, fb, 0.5 * fa)
        b, fb = cand, fc
        root[live] = b
        froot[live] = fb
        keep = ~((fc == 0) | (np.abs(b - a) <= xtol))
        live, a, b, fa, fb = live[keep], a[keep], b[keep], fa[keep], fb[keep]
    return root, froot
