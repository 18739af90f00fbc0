"""Merit-function evaluation and empirical audits of the solver guarantees.

The solver's supporting theory makes three checkable claims for runs with
a fixed, sufficiently large penalty: a shifted merit function decreases by
a quantified amount each step, the decrease constants pin O(1/k) bounds on
the minimum squared step differences, and every limit point is stationary.
This module evaluates the merit functions, derives the constants, and
audits recorded traces against the claims.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import GMetric, ProblemInstance, g_metric_norm_sq

__all__ = [
    "AuditReport",
    "RateBoundReport",
    "TraceRecord",
    "ZetaConstants",
    "audit_descent",
    "audit_rate_bounds",
    "augmented_lagrangian",
    "default_lower_bound",
    "stationarity_gap",
    "tilde_lagrangian",
    "zeta_constants",
]


@dataclass(frozen=True)
class TraceRecord:
    """Per-iteration diagnostics; row ``k`` describes the step to iterate k+1."""

    k: int
    beta: float
    gamma: float
    r_norm: float
    s_norm: float
    ire: float
    L_beta: float
    L_tilde: float
    dx_G: float
    dy: float
    dlambda: float

    COLUMNS = ("k", "beta", "gamma", "r_norm", "s_norm", "ire",
               "L_beta", "L_tilde", "dx_G", "dy", "dlambda")


def augmented_lagrangian(w, prob: ProblemInstance, beta: float) -> float:
    """Evaluate ``f(x) + g(y) - <lam, Ax+By-b> + (beta/2)*||Ax+By-b||^2``."""
    x, y, lam = w
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lam = np.asarray(lam, dtype=float)
    r = prob.A @ x + prob.B @ y - prob.b
    return (
        prob.f_value(x)
        + prob.g_value(y)
        - float(lam @ r)
        + 0.5 * beta * float(r @ r)
    )


def tilde_lagrangian(w, dx_prev, gamma: float, G: GMetric,
                     prob: ProblemInstance, beta: float) -> float:
    """Shifted merit: augmented Lagrangian plus ``(gamma/2)*||dx_prev||_G^2``."""
    return augmented_lagrangian(w, prob, beta) + 0.5 * gamma * g_metric_norm_sq(G, dx_prev)


@dataclass(frozen=True)
class ZetaConstants:
    """Descent and rate constants for a fixed-penalty run.

    ``zeta0 = gamma/2`` and ``zeta1 = (1-2*gamma)/2`` weight the x-block
    terms; ``zeta2`` is positive exactly when the penalty clears the
    compliance bound ``L_g / (sqrt(1-tau-alpha)*sigma_B)`` (``a2_ok``).
    ``zeta3`` scales the dual-difference chain: combining
    ``||dlam||^2 <= (L_g^2/sigma_B)*||dy||^2`` with the zeta2 chain gives
    ``min_j ||dlam_j||^2 <= C0/(zeta3*(k+1))`` for
    ``zeta3 = sigma_B*zeta2/L_g^2``.
    """

    zeta0: float
    zeta1: float
    zeta2: float
    zeta3: float
    a2_ok: bool


def zeta_constants(gamma: float, tau: float, alpha: float, beta: float,
                   L_g: float, sigma_B: float) -> ZetaConstants:
    if not 0.0 <= gamma < 0.5:
        raise ValueError("gamma must lie in [0, 1/2)")
    if not 0.0 < tau + alpha < 1.0:
        raise ValueError("tau + alpha must lie in (0, 1)")
    if beta <= 0.0 or sigma_B <= 0.0:
        raise ValueError("beta and sigma_B must be positive")
    zeta0 = 0.5 * gamma
    zeta1 = 0.5 * (1.0 - 2.0 * gamma)
    zeta2 = ((1.0 - tau - alpha) * beta ** 2 * sigma_B ** 2 - L_g ** 2) / (
        (tau + alpha) * beta * sigma_B
    )
    a2_ok = zeta2 > 0.0
    if not a2_ok:
        zeta3 = math.nan
    elif L_g == 0.0:
        zeta3 = math.inf  # dual differences vanish identically
    else:
        zeta3 = sigma_B * zeta2 / L_g ** 2
    return ZetaConstants(zeta0=zeta0, zeta1=zeta1, zeta2=zeta2, zeta3=zeta3, a2_ok=a2_ok)


@dataclass
class AuditReport:
    """Outcome of a per-step descent audit."""

    checked: int
    violations: list[int] = field(default_factory=list)
    worst_margin: float = math.inf

    @property
    def passed(self) -> bool:
        return not self.violations


def audit_descent(trace, zetas: ZetaConstants, l_beta_init: float | None = None) -> AuditReport:
    """Check the per-step drop of the shifted merit along a fixed-beta trace.

    For each recorded step the inequality

        L~(w_k) - L~(w_{k+1}) >= zeta1_k*dx_G^2 + zeta2*dy^2 - tol

    is evaluated with the step's own gamma (zeta0_k = gamma_k/2,
    zeta1_k = (1-2*gamma_k)/2, so fixed-gamma runs reduce to the plain
    constants) and ``tol = 1e-9*(1+|L~|)``.  The first step needs the merit
    at the starting point; pass ``l_beta_init`` to include it, otherwise
    checking begins at the second row.
    """
    rows = list(trace)
    report = AuditReport(checked=0)
    for i, row in enumerate(rows):
        zeta0_k = 0.5 * row.gamma
        zeta1_k = 0.5 * (1.0 - 2.0 * row.gamma)
        if i == 0:
            if l_beta_init is None:
                continue
            lt_prev = l_beta_init  # dx at the start is identically zero
        else:
            prev = rows[i - 1]
            lt_prev = prev.L_beta + zeta0_k * prev.dx_G ** 2
        lt_cur = row.L_beta + zeta0_k * row.dx_G ** 2
        drop = lt_prev - lt_cur
        rhs = zeta1_k * row.dx_G ** 2 + zetas.zeta2 * row.dy ** 2
        tol = 1e-9 * (1.0 + max(abs(lt_prev), abs(lt_cur)))
        report.checked += 1
        margin = drop - rhs
        report.worst_margin = min(report.worst_margin, margin)
        if margin < -tol:
            report.violations.append(row.k)
    return report


@dataclass
class RateBoundReport:
    """Outcome of the O(1/k) pointwise-bound audit."""

    c0: float
    checked: int
    x_violations: list[int] = field(default_factory=list)
    y_violations: list[int] = field(default_factory=list)
    lam_violations: list[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not (self.x_violations or self.y_violations or self.lam_violations)


def default_lower_bound(prob: ProblemInstance) -> float | None:
    """Known objective lower bound ``inf f + g - ||grad g||^2/(2 L_g)``.

    For the quadratic fit with ``L_g >= 1`` the ``g`` part is bounded below
    by zero (attained at ``y = c``) and both sparsity terms are
    nonnegative, so the bound is 0.  Other instances have no generic
    closed form; the caller must supply one.
    """
    if prob.g_kind == "quadratic_ls" and prob.L_g >= 1.0:
        return 0.0
    return None


def audit_rate_bounds(trace, zetas: ZetaConstants, prob: ProblemInstance, w0,
                      underline_L: float | None = None) -> RateBoundReport:
    """Check the three min-over-prefix chains against ``C0/(constant*(k+1))``.

    ``C0`` is the augmented Lagrangian at the start minus the objective
    lower bound.  The x-chain weights each squared step with its own
    ``zeta1_j`` (identical to a fixed constant when gamma is fixed); the
    y- and dual chains use ``zeta2`` and ``zeta3`` from ``zetas``.
    """
    if underline_L is None:
        underline_L = default_lower_bound(prob)
        if underline_L is None:
            raise ValueError(
                "no known objective lower bound for this instance; pass underline_L"
            )
    rows = list(trace)
    if not rows:
        return RateBoundReport(c0=math.nan, checked=0)
    c0 = augmented_lagrangian(w0, prob, rows[0].beta) - underline_L
    report = RateBoundReport(c0=c0, checked=len(rows))
    slack = 1.0 + 1e-9
    min_x = math.inf
    min_y = math.inf
    min_lam = math.inf
    for i, row in enumerate(rows):
        zeta1_j = 0.5 * (1.0 - 2.0 * row.gamma)
        min_x = min(min_x, zeta1_j * row.dx_G ** 2)
        min_y = min(min_y, row.dy ** 2)
        min_lam = min(min_lam, row.dlambda ** 2)
        denom = i + 1.0
        if min_x > slack * c0 / denom:
            report.x_violations.append(row.k)
        if min_y > slack * c0 / (zetas.zeta2 * denom):
            report.y_violations.append(row.k)
        if math.isfinite(zetas.zeta3) and min_lam > slack * c0 / (zetas.zeta3 * denom):
            report.lam_violations.append(row.k)
    return report


def stationarity_gap(w, prob: ProblemInstance) -> tuple[float, float, float]:
    """Distances from a triple to the three stationarity conditions.

    Returns ``(gx, gy, gl)``: the distance of ``A^T lam`` to the
    subdifferential of ``f`` at ``x`` (componentwise closed form; at zero
    the square-root term contributes no gap since its limiting
    subdifferential there is the whole line, the l1 term contributes
    ``max(|v|-mu, 0)``), the dual mismatch ``||B^T lam - grad g(y)||``, and
    the constraint violation ``||Ax + By - b||``.
    """
    x, y, lam = (np.asarray(v, dtype=float) for v in w)
    v = prob.A.T @ lam
    if prob.f_kind == "none" or prob.mu == 0.0:
        gx = float(np.linalg.norm(v))
    elif prob.f_kind == "l_one":
        comp = np.where(
            x != 0.0,
            np.abs(v - prob.mu * np.sign(x)),
            np.maximum(np.abs(v) - prob.mu, 0.0),
        )
        gx = float(np.linalg.norm(comp))
    else:  # l_half
        nz = x != 0.0
        comp = np.zeros_like(x)
        comp[nz] = v[nz] - 0.5 * prob.mu * np.sign(x[nz]) / np.sqrt(np.abs(x[nz]))
        gx = float(np.linalg.norm(comp))
    gy = float(np.linalg.norm(prob.B.T @ lam - prob.g_grad(y)))
    gl = float(np.linalg.norm(prob.A @ x + prob.B @ y - prob.b))
    return gx, gy, gl
