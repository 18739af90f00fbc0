"""Accelerated symmetric ADMM with two dual updates per iteration.

For ``min f(x) + g(y)  s.t.  A x + B y = b`` each iteration runs, with
penalty ``beta``, dual stepsizes ``(tau, alpha)`` restricted to
``0 < tau + alpha < 1``, and momentum weight ``gamma_k``:

    x_md    = x_k + gamma_k * (x_k - x_{k-1})
    x_{k+1} = prox_{f, sigma}( x_md - (beta*A^T(A x_md + B y_k - b) - A^T lam_k) / sigma )
    lam_+   = lam_k - tau*beta*(A x_{k+1} + B y_k - b)
    x_ad    = alpha*A x_{k+1} + (1-alpha)*(b - B y_k)
    y_{k+1} = argmin_y  g(y) - <lam_+, B y> + (beta/2)*||x_ad + B y - b||^2
    lam_{k+1} = lam_+ - beta*(x_ad + B y_{k+1} - b)

The x-subproblem is the exact proximal map of ``f`` because the metric
``G = sigma*I - beta*A^T A`` (built with ``sigma = factor*beta*||A^T A||``)
cancels the quadratic penalty coupling.  The momentum weight follows the
classic ``theta`` recurrence (``gamma_0 = 0``, increasing, < 1/2), and the
penalty can be rebalanced between steps from the primal/dual residual
ratio, capped at ``factor * L_g / (sqrt(1-tau-alpha) * sigma_B)``.

Stopping uses the relative iterate error

    IRE = max(||dx||, ||dy||, ||dlam||) / max(||x||, ||y||, ||lam||, 1)

evaluated against the previous iterate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import GMetric, ProblemInstance
from .diagnostics import TraceRecord, augmented_lagrangian
from .prox import half_shrinkage, soft_threshold

__all__ = [
    "IterateState",
    "SolveSummary",
    "SolverConfig",
    "StepOutput",
    "adaptive_beta",
    "compliant_beta",
    "nesterov_gamma_step",
    "residuals",
    "sadmm_step",
    "solve",
    "stopping_ire",
    "x_update",
    "y_update",
]


@dataclass
class SolverConfig:
    """Algorithm parameters.

    Defaults reproduce the reference experiment setup: ``(tau, alpha) =
    (0.65, 0.32)``, ``beta0 = 0.04`` with residual balancing
    (``nu = 10``, halving/doubling) capped at the compliance bound, the
    adaptive momentum schedule, and ``sigma = 1.01 * beta * ||A^T A||``.
    """

    tau: float = 0.65
    alpha: float = 0.32
    beta0: float = 0.04
    gamma_mode: str = "nesterov"  # "nesterov" | "fixed"
    fixed_gamma: float = 0.0
    sigma_factor: float = 1.01
    adapt_beta: bool = True
    adapt_nu: float = 10.0
    adapt_eta_incr: float = 2.0
    adapt_eta_decr: float = 2.0
    beta_cap_enabled: bool = True
    epsilon: float = 1e-10
    max_iter: int = 2000

    def __post_init__(self):
        if not 0.0 < self.tau + self.alpha < 1.0:
            raise ValueError("tau + alpha must lie in (0, 1)")
        if self.beta0 <= 0.0:
            raise ValueError("beta0 must be positive")
        if self.gamma_mode not in ("nesterov", "fixed"):
            raise ValueError("gamma_mode must be 'nesterov' or 'fixed'")
        if self.gamma_mode == "fixed" and not 0.0 <= self.fixed_gamma < 0.5:
            raise ValueError("fixed gamma must lie in [0, 1/2)")
        if self.sigma_factor < 1.0:
            raise ValueError("sigma_factor below 1 breaks positive semidefiniteness of G")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if min(self.adapt_nu, self.adapt_eta_incr, self.adapt_eta_decr) <= 1.0:
            raise ValueError("adaptive-penalty parameters must exceed 1")


def compliant_beta(L_g: float, sigma_B: float, tau: float, alpha: float,
                   factor: float = 1.01) -> float:
    """Penalty value ``factor * L_g / (sqrt(1-tau-alpha) * sigma_B)``.

    With ``factor > 1`` this clears the bound under which the descent and
    rate constants are positive; it is also the cap used by the adaptive
    schedule.
    """
    if not 0.0 < tau + alpha < 1.0:
        raise ValueError("tau + alpha must lie in (0, 1)")
    return factor * L_g / (math.sqrt(1.0 - tau - alpha) * sigma_B)


@dataclass(frozen=True)
class IterateState:
    """Everything one step reads: current/previous iterates and schedule state."""

    x: np.ndarray
    x_prev: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    beta: float
    theta_prev: float = 1.0
    k: int = 0


@dataclass(frozen=True)
class StepOutput:
    """One full iteration plus the intermediates diagnostics need."""

    next: IterateState
    lambda_half: np.ndarray
    x_md: np.ndarray
    x_ad: np.ndarray
    gamma_used: float
    ax_next: np.ndarray
    by_next: np.ndarray
    by_prev: np.ndarray


@dataclass
class SolveSummary:
    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    iterations: int
    terminated_by: str  # "ire" | "max_iter"
    final_ire: float
    final_equ: float
    l2_error: float | None
    L_beta_init: float
    beta_final: float


def nesterov_gamma_step(theta_prev: float) -> tuple[float, float]:
    """Advance the momentum recurrence: returns ``(theta, gamma)``.

    ``theta = (1 + sqrt(1 + 4*theta_prev^2))/2`` and
    ``gamma = (theta_prev - 1)/(2*theta)``; starting from
    ``theta_prev = 1`` yields ``gamma_0 = 0`` and a strictly increasing
    sequence below 1/2.
    """
    if theta_prev < 1.0:
        raise ValueError("theta_prev must be at least 1")
    theta = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta_prev * theta_prev))
    gamma = (theta_prev - 1.0) / (2.0 * theta)
    return theta, gamma


def build_metric(prob: ProblemInstance, beta: float, sigma_factor: float = 1.01) -> GMetric:
    """Metric for the current penalty: ``sigma = sigma_factor*beta*||A^T A||``."""
    return GMetric(sigma=sigma_factor * beta * prob.norm_AtA, beta=beta, A=prob.A)


def x_update(state: IterateState, prob: ProblemInstance, G: GMetric,
             gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Momentum point and exact x-subproblem solution.

    Returns ``(x_new, x_md)`` where ``x_new`` is the proximal map of ``f``
    (weight ``mu/sigma``) at

        c_x = x_md - (beta*A^T(A x_md + B y - b) - A^T lam) / sigma.
    """
    x_md = state.x + gamma * (state.x - state.x_prev)
    r_md = prob.A @ x_md + prob.B @ state.y - prob.b
    c_x = x_md - prob.A.T @ (G.beta * r_md - state.lam) / G.sigma
    if prob.f_kind == "none" or prob.mu == 0.0:
        return c_x, x_md
    lam_w = prob.mu / G.sigma
    if prob.f_kind == "l_half":
        return half_shrinkage(c_x, lam_w), x_md
    return soft_threshold(c_x, lam_w), x_md


def _quadratic_y(x_ad, lam_half, prob, beta):
    if prob.B_is_neg_identity and prob.b_is_zero:
        return (prob.c + beta * x_ad - lam_half) / (1.0 + beta)
    n = prob.n
    lhs = np.eye(n) + beta * (prob.B.T @ prob.B)
    rhs = prob.c + prob.B.T @ lam_half - beta * (prob.B.T @ (x_ad - prob.b))
    try:
        return np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - SPD by construction
        raise RuntimeError("y-subproblem system is singular") from exc


def _logistic_y(x_ad, lam_half, prob, beta, y_init, rel_tol=1e-10, max_inner=20_000):
    y = np.zeros(prob.n) if y_init is None else y_init.astype(float, copy=True)

    def value(v):
        By = prob.B @ v
        res = x_ad + By - prob.b
        return prob.g_value(v) - float(lam_half @ By) + 0.5 * beta * float(res @ res)

    def gradient(v):
        res = x_ad + prob.B @ v - prob.b
        return prob.g_grad(v) + prob.B.T @ (beta * res - lam_half)

    step_safe = 1.0 / (prob.L_g + beta * prob.norm_BtB)
    fy = value(y)
    for _ in range(max_inner):
        g = gradient(y)
        gn = float(np.linalg.norm(g))
        if gn <= rel_tol * (1.0 + float(np.linalg.norm(y))):
            return y
        gsq = gn * gn
        t = 8.0 * step_safe
        accepted = False
        while t > step_safe:
            y_try = y - t * g
            f_try = value(y_try)
            if f_try <= fy - 0.5 * t * gsq:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # 1/(L_g + beta*||B^T B||) satisfies the descent lemma, so the
            # plain step needs no sufficient-decrease test (which rounding
            # noise would fail near convergence)
            y_try = y - step_safe * g
            f_try = value(y_try)
        y, fy = y_try, f_try
    raise RuntimeError("logistic y-subproblem did not reach the inner tolerance")


def y_update(x_ad: np.ndarray, lambda_half: np.ndarray, prob: ProblemInstance,
             beta: float, y_init: np.ndarray | None = None) -> np.ndarray:
    """Solve ``argmin_y g(y) - <lambda_half, B y> + (beta/2)*||x_ad + B y - b||^2``.

    Quadratic ``g`` is solved exactly: in closed form
    ``(c + beta*x_ad - lambda_half)/(1+beta)`` when ``B = -I`` and
    ``b = 0``, otherwise through the SPD system
    ``(I + beta*B^T B) y = c + B^T lambda_half - beta*B^T(x_ad - b)``.
    The logistic case runs backtracking gradient descent from ``y_init``
    until the inner gradient norm drops below ``1e-10*(1+||y||)``.
    """
    if prob.g_kind == "quadratic_ls":
        return _quadratic_y(x_ad, lambda_half, prob, beta)
    return _logistic_y(x_ad, lambda_half, prob, beta, y_init)


def sadmm_step(state: IterateState, prob: ProblemInstance, cfg: SolverConfig,
               G: GMetric, gamma: float, theta_next: float | None = None) -> StepOutput:
    """Execute one full iteration at the state's penalty.

    ``G`` must be built from ``state.beta``; the penalty is never changed
    inside a step, so the update identities hold exactly.  By
    construction the output satisfies, up to round-off,

        A x_{k+1} + B y_k - b = -(dlam/beta + B dy) / (tau + alpha).
    """
    if not math.isclose(G.beta, state.beta, rel_tol=1e-12):
        raise ValueError("G was built for a different penalty than the state carries")
    beta = state.beta
    x_new, x_md = x_update(state, prob, G, gamma)
    ax_new = prob.A @ x_new
    by_prev = prob.B @ state.y
    r_half = ax_new + by_prev - prob.b
    lam_half = state.lam - cfg.tau * beta * r_half
    x_ad = cfg.alpha * ax_new + (1.0 - cfg.alpha) * (prob.b - by_prev)
    y_new = y_update(x_ad, lam_half, prob, beta, y_init=state.y)
    by_new = prob.B @ y_new
    lam_new = lam_half - beta * (x_ad + by_new - prob.b)
    nxt = IterateState(
        x=x_new,
        x_prev=state.x,
        y=y_new,
        lam=lam_new,
        beta=beta,
        theta_prev=state.theta_prev if theta_next is None else theta_next,
        k=state.k + 1,
    )
    return StepOutput(
        next=nxt,
        lambda_half=lam_half,
        x_md=x_md,
        x_ad=x_ad,
        gamma_used=gamma,
        ax_next=ax_new,
        by_next=by_new,
        by_prev=by_prev,
    )


def residuals(prev: IterateState, out: StepOutput, prob: ProblemInstance,
              G: GMetric) -> tuple[float, float]:
    """Primal and dual residual norms of a completed step.

    ``r = ||A x_{k+1} + B y_{k+1} - b||`` and
    ``s = ||A^T dlam + beta*A^T(A x_{k+1} + B y_k - b) + G(x_{k+1} - x_md)||``
    with the ``G`` product applied implicitly.
    """
    r_vec = out.ax_next + out.by_next - prob.b
    dlam = out.next.lam - prev.lam
    r_half = out.ax_next + out.by_prev - prob.b
    s_vec = prob.A.T @ (dlam + G.beta * r_half) + G.apply(out.next.x - out.x_md)
    return float(np.linalg.norm(r_vec)), float(np.linalg.norm(s_vec))


def adaptive_beta(beta: float, r_norm: float, s_norm: float, cfg: SolverConfig,
                  prob: ProblemInstance) -> float:
    """Residual-balancing update of the penalty, applied between steps.

    Doubles when the primal residual dominates (``r > nu*s``), halves when
    the dual residual dominates (``s > nu*r``), and otherwise leaves the
    penalty alone; the candidate is then clipped at
    ``sigma_factor * L_g / (sqrt(1-tau-alpha)*sigma_B)`` when the cap is
    enabled.
    """
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    if r_norm > cfg.adapt_nu * s_norm:
        candidate = beta * cfg.adapt_eta_incr
    elif s_norm > cfg.adapt_nu * r_norm:
        candidate = beta / cfg.adapt_eta_decr
    else:
        candidate = beta
    if cfg.beta_cap_enabled:
        cap = compliant_beta(prob.L_g, prob.sigma_B, cfg.tau, cfg.alpha,
                             factor=cfg.sigma_factor)
        candidate = min(candidate, cap)
    return candidate


def stopping_ire(prev: IterateState, nxt: IterateState) -> float:
    """Relative iterate error between two consecutive states."""
    num = max(
        float(np.linalg.norm(nxt.x - prev.x)),
        float(np.linalg.norm(nxt.y - prev.y)),
        float(np.linalg.norm(nxt.lam - prev.lam)),
    )
    den = max(
        float(np.linalg.norm(prev.x)),
        float(np.linalg.norm(prev.y)),
        float(np.linalg.norm(prev.lam)),
        1.0,
    )
    return num / den


def solve(prob: ProblemInstance, cfg: SolverConfig,
          x0: np.ndarray | None = None, y0: np.ndarray | None = None,
          lam0: np.ndarray | None = None,
          x_orig: np.ndarray | None = None) -> tuple[SolveSummary, list[TraceRecord]]:
    """Run the iteration until ``IRE < epsilon`` or the iteration cap.

    Defaults start from ``x0 = 0``, ``y0 = 0`` and ``lam0`` all ones.  One
    trace record is written per iteration; the penalty is adapted (when
    enabled) strictly between iterations, rebuilding the metric.  Pass
    ``x_orig`` to have the relative recovery error recorded in the
    summary.  The run is deterministic: no randomness is consumed.
    """
    x0 = np.zeros(prob.m) if x0 is None else np.asarray(x0, dtype=float).copy()
    y0 = np.zeros(prob.n) if y0 is None else np.asarray(y0, dtype=float).copy()
    lam0 = np.ones(prob.l) if lam0 is None else np.asarray(lam0, dtype=float).copy()
    if x0.shape != (prob.m,) or y0.shape != (prob.n,) or lam0.shape != (prob.l,):
        raise ValueError("starting point dimensions do not match the instance")

    state = IterateState(x=x0, x_prev=x0.copy(), y=y0, lam=lam0,
                         beta=cfg.beta0, theta_prev=1.0, k=0)
    G = build_metric(prob, state.beta, cfg.sigma_factor)
    l_beta_init = augmented_lagrangian((x0, y0, lam0), prob, cfg.beta0)

    trace: list[TraceRecord] = []
    terminated = "max_iter"
    for k in range(cfg.max_iter):
        if cfg.gamma_mode == "nesterov":
            theta, gamma = nesterov_gamma_step(state.theta_prev)
        else:
            theta, gamma = state.theta_prev, cfg.fixed_gamma
        out = sadmm_step(state, prob, cfg, G, gamma, theta_next=theta)
        nxt = out.next
        r_norm, s_norm = residuals(state, out, prob, G)
        ire = stopping_ire(state, nxt)
        dx_g = math.sqrt(max(G.norm_sq(nxt.x - state.x), 0.0))
        dy = float(np.linalg.norm(nxt.y - state.y))
        dlam = float(np.linalg.norm(nxt.lam - state.lam))
        l_beta = augmented_lagrangian((nxt.x, nxt.y, nxt.lam), prob, state.beta)
        l_tilde = l_beta + 0.5 * gamma * dx_g ** 2
        trace.append(TraceRecord(k=k, beta=state.beta, gamma=gamma,
                                 r_norm=r_norm, s_norm=s_norm, ire=ire,
                                 L_beta=l_beta, L_tilde=l_tilde,
                                 dx_G=dx_g, dy=dy, dlambda=dlam))
        state = nxt
        if ire < cfg.epsilon:
            terminated = "ire"
            break
        if cfg.adapt_beta:
            new_beta = adaptive_beta(state.beta, r_norm, s_norm, cfg, prob)
            if new_beta != state.beta:
                state = replace(state, beta=new_beta)
                G = build_metric(prob, new_beta, cfg.sigma_factor)

    err = None
    if x_orig is not None:
        ref = float(np.linalg.norm(x_orig))
        if ref == 0.0:
            raise ValueError("x_orig must be nonzero to compute a relative error")
        err = float(np.linalg.norm(state.x - x_orig)) / ref
    summary = SolveSummary(
        x=state.x, y=state.y, lam=state.lam,
        iterations=len(trace), terminated_by=terminated,
        final_ire=trace[-1].ire, final_equ=trace[-1].r_norm,
        l2_error=err, L_beta_init=l_beta_init, beta_final=state.beta,
    )
    return summary, trace
