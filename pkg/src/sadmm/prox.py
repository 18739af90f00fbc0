"""Proximal maps for the sparsity terms, plus a brute-force scalar oracle.

``half_shrinkage`` returns, componentwise and in closed form, the global
minimizer of

    lam * |t|^(1/2) + 0.5 * (t - x_i)^2,      lam > 0,

via the cosine representation of the cubic stationarity condition: inputs
with ``|x_i|`` at or below ``(3 * 2^(1/3) / 4) * (2*lam)^(2/3)`` collapse
to zero, larger ones shrink through an arccos/cos pair.  ``soft_threshold``
is the l1 counterpart.

``scalar_prox_oracle`` is the independent reference used by the test
suite: a dense grid search refined by bisection on the stationarity
condition.  It deliberately shares no code with the closed forms; keep it
that way.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = ["half_shrinkage", "half_shrinkage_threshold", "scalar_prox_oracle", "soft_threshold"]


def half_shrinkage_threshold(lam: float) -> float:
    """Cutoff below which the square-root prox sends inputs to zero."""
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    nu = 2.0 * lam
    return 0.75 * math.pow(2.0, 1.0 / 3.0) * math.pow(nu, 2.0 / 3.0)


def half_shrinkage(x, lam: float) -> np.ndarray:
    """Componentwise minimizer of ``lam*|t|^(1/2) + 0.5*(t - x_i)^2``.

    Ties at the threshold resolve to 0 (both candidates have equal
    objective; zero maximizes sparsity).  The output preserves signs and
    never exceeds the input in magnitude.
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    x = np.asarray(x, dtype=float)
    nu = 2.0 * lam
    thresh = half_shrinkage_threshold(lam)
    out = np.zeros_like(x)
    big = np.abs(x) > thresh
    if np.any(big):
        xb = x[big]
        # cos(phi) <= 2^(-1/2) on the active set, so arccos stays in domain;
        # the minimum() only guards rounding at the threshold itself
        cos_phi = np.minimum((nu / 8.0) * (np.abs(xb) / 3.0) ** -1.5, 1.0)
        phi = np.arccos(cos_phi)
        out[big] = (2.0 / 3.0) * xb * (1.0 + np.cos((2.0 / 3.0) * (np.pi - phi)))
    return out


def soft_threshold(x, kappa: float) -> np.ndarray:
    """Componentwise minimizer of ``kappa*|t| + 0.5*(t - x_i)^2``."""
    if kappa < 0.0:
        raise ValueError("kappa must be nonnegative")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - kappa, 0.0)


@lru_cache(maxsize=8)
def _unit_grid(n: int):
    # float32 is plenty to locate the basin of the minimizer; the bisection
    # refinement and all candidate comparisons run in float64
    u = np.linspace(0.0, 1.0, n, dtype=np.float32)
    return u, np.sqrt(u), u * u


def _objective(t: float, s: float, lam: float, power: str) -> float:
    pen = math.sqrt(t) if power == "half" else t
    return lam * pen + 0.5 * (t - s) ** 2


def _stationarity(t: float, s: float, lam: float, power: str) -> float:
    # derivative of the scalar objective for t > 0
    if power == "half":
        return lam / (2.0 * math.sqrt(t)) + t - s
    return lam + t - s


def scalar_prox_oracle(x: float, lam: float, power: str = "half", n_grid: int = 1_000_000) -> float:
    """Brute-force global minimizer of ``lam*|t|^p + 0.5*(t - x)^2``.

    Grid search at the resolution of ``n_grid`` samples spanning
    ``[-|x|-1, |x|+1]``, then bisection on the stationarity condition
    around the best cell.  Since the minimizer shares the sign of ``x``
    and the negative half-axis is dominated for ``x >= 0`` (the objective
    there exceeds its mirror image), only the matching half-interval is
    evaluated, at the full-grid spacing.

    The returned point's objective is no larger than at any grid sample;
    exact ties against ``t = 0`` resolve to 0.
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if power not in ("half", "one"):
        raise ValueError("power must be 'half' or 'one'")
    xf = float(x)
    s = abs(xf)
    if s == 0.0:
        return 0.0
    sgn = -1.0 if xf < 0.0 else 1.0
    a = s + 1.0
    n_half = max(n_grid // 2, 16)
    u, sqrt_u, u_sq = _unit_grid(n_half)

    # coarse pass: objective times 2, constant term dropped, at t = a*u
    if power == "half":
        obj = np.float32(2.0 * lam * math.sqrt(a)) * sqrt_u
    else:
        obj = np.float32(2.0 * lam * a) * u
    obj += np.float32(a * a) * u_sq
    obj -= np.float32(2.0 * a * s) * u
    i = int(np.argmin(obj))

    # float64 pass over a window wide enough to cover the float32 rounding
    # plateau around the minimum, then an exact cell index
    h = a / (n_half - 1)
    k0 = max(i - 8192, 0)
    k1 = min(i + 8192, n_half - 1)
    t_win = h * np.arange(k0, k1 + 1)
    if power == "half":
        obj_win = lam * np.sqrt(t_win) + 0.5 * (t_win - s) ** 2
    else:
        obj_win = lam * t_win + 0.5 * (t_win - s) ** 2
    t0 = h * (k0 + int(np.argmin(obj_win)))

    best = t0
    lo = max(t0 - 2.0 * h, 1e-300)
    hi = t0 + 2.0 * h
    flo = _stationarity(lo, s, lam, power)
    fhi = _stationarity(hi, s, lam, power)
    if flo < 0.0 < fhi:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo <= 1e-16 * (1.0 + s):
                break
            if _stationarity(mid, s, lam, power) < 0.0:
                lo = mid
            else:
                hi = mid
        refined = 0.5 * (lo + hi)
        if _objective(refined, s, lam, power) <= _objective(best, s, lam, power):
            best = refined

    if _objective(0.0, s, lam, power) <= _objective(best, s, lam, power):
        return 0.0
    return sgn * best
