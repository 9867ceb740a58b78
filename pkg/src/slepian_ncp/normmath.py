"""Numerically stable standard-normal kernels shared by every formula.

All downstream expressions are combinations of the normal density phi, the
CDF Phi, and products like phi(a) phi(b) exp(-a b) whose naive evaluation
cancels or underflows in the tails.  This module centralizes the stable
variants:

* ``Phi`` is built on the complementary error function, so the lower tail
  keeps full relative accuracy and no caller ever writes ``1 - Phi(x)``.
* Composite exponents are fused before a single ``exp`` call.
"""

from __future__ import annotations

import numpy as np
from scipy import special

SQRT_2PI = float(np.sqrt(2.0 * np.pi))
INV_SQRT_2PI = 1.0 / SQRT_2PI
INV_2PI = 1.0 / (2.0 * np.pi)


def phi(x):
    """Standard normal density (2*pi)^(-1/2) exp(-x^2/2).

    Accepts scalars or arrays.  Underflows to 0 for |x| beyond ~39, which is
    harmless for every caller (all tolerances are far above 1e-300).
    """
    x = np.asarray(x, dtype=float)
    out = INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return out if out.ndim else float(out)


def Phi(x):
    """Standard normal CDF via erfc, accurate in both tails.

    ``scipy.special.ndtr`` evaluates erfc(-x/sqrt(2))/2, so the lower tail is
    computed directly rather than as 1 minus the upper tail.  +/-inf are
    accepted as sentinels for open integration limits.
    """
    out = special.ndtr(np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


def log_Phi(x):
    """log of the standard normal CDF, stable deep into the lower tail."""
    out = special.log_ndtr(np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


def log_mills_terms(a, b):
    """The tail product phi(a) phi(b) exp(-a b) as a single fused exponent.

    Since phi(a) phi(b) e^{-ab} = (2*pi)^{-1} exp(-(a+b)^2/2), the three
    factors are combined into one exponent before exponentiation; the naive
    triple product loses accuracy (and underflows) once either factor is in
    the Mills-ratio regime.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = a + b
    out = INV_2PI * np.exp(-0.5 * s * s)
    return out if out.ndim else float(out)
