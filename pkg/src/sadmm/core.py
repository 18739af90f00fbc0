"""Dense linear-algebra helpers and the shared problem container.

Everything downstream works on plain float64 numpy arrays: matrices are
2-d, vectors 1-d.  The proximal metric ``G = sigma*I - beta*A^T A`` is
never materialized as a dense matrix; it is carried as ``(sigma, beta, A)``
and applied only through matvecs and quadratic forms, which keeps the
solver viable at signal dimensions in the thousands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GMetric",
    "ProblemInstance",
    "g_metric_norm_sq",
    "smallest_positive_eigenvalue",
    "spectral_norm",
]

F_KINDS = ("l_half", "l_one", "none")
G_KINDS = ("quadratic_ls", "logistic")


def _as_array(a, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-d, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate and return ``M`` as a finite float64 2-d array."""
    return _as_array(M, name, 2)


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Validate and return ``v`` as a finite float64 1-d array."""
    return _as_array(v, name, 1)


def spectral_norm(M, rel_tol: float = 1e-8, max_iter: int | None = None) -> float:
    """Largest singular value of ``M``.

    Power iteration on ``M^T M`` from a deterministic start vector; stops
    once the Rayleigh estimate is stable to ``rel_tol`` (relative) or after
    ``max_iter`` rounds (default ``10 * max(M.shape)``).
    """
    M = as_matrix(M, "M")
    m = M.shape[1]
    if max_iter is None:
        max_iter = 10 * max(M.shape)
    col_sq = np.einsum("ij,ij->j", M, M)
    if not col_sq.any():
        return 0.0
    v = np.full(m, 1.0 / math.sqrt(m))
    lam_prev = math.nan
    diff_prev = math.nan
    lam = 0.0
    for _ in range(max_iter):
        Mv = M @ v
        lam = float(Mv @ Mv)
        w = M.T @ Mv
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            # start vector fell in the null space; restart along the
            # heaviest column, which cannot be annihilated
            v = np.zeros(m)
            v[int(np.argmax(col_sq))] = 1.0
            lam_prev = math.nan
            diff_prev = math.nan
            continue
        v = w / nrm
        if not math.isnan(lam_prev):
            diff = abs(lam - lam_prev)
            if diff == 0.0:
                break
            # the Rayleigh estimates converge geometrically, so bound the
            # remaining tail by diff * ratio / (1 - ratio) once two
            # successive differences are available
            if not math.isnan(diff_prev) and diff_prev > 0.0:
                ratio = diff / diff_prev
                if ratio < 1.0 and diff * ratio / (1.0 - ratio) <= rel_tol * max(
                    lam, np.finfo(float).tiny
                ):
                    break
            diff_prev = diff
        lam_prev = lam
    return math.sqrt(lam)


def smallest_positive_eigenvalue(B) -> float:
    """Smallest eigenvalue of ``B B^T`` above a relative zero cutoff.

    Zero modes are discarded with the threshold ``1e-10 * ||B B^T||_2``;
    if nothing survives the matrix is degenerate and a ``ValueError`` is
    raised.
    """
    B = as_matrix(B, "B")
    if not B.any():
        raise ValueError("B must be a nonzero matrix")
    gram = B @ B.T
    evals = np.linalg.eigvalsh(gram)
    cutoff = 1e-10 * float(evals[-1])  # largest eigenvalue = ||BB^T||_2 (PSD)
    positive = evals[evals > cutoff]
    if positive.size == 0:
        raise ValueError("B B^T has no eigenvalue above the zero cutoff")
    return float(positive[0])


@dataclass(frozen=True)
class GMetric:
    """Implicit PSD metric ``sigma*I - beta*A^T A``.

    ``sigma >= beta * ||A^T A||_2`` makes the quadratic form nonnegative;
    callers normally build it via the rule ``sigma = factor*beta*||A^T A||``
    with ``factor >= 1``.
    """

    sigma: float
    beta: float
    A: np.ndarray

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Product ``(sigma*I - beta*A^T A) @ v`` without forming the matrix."""
        return self.sigma * v - self.beta * (self.A.T @ (self.A @ v))

    def norm_sq(self, v: np.ndarray) -> float:
        return g_metric_norm_sq(self, v)


def g_metric_norm_sq(G: GMetric, v) -> float:
    """Quadratic form ``sigma*||v||^2 - beta*||A v||^2``."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != G.A.shape[1]:
        raise ValueError(
            f"v has shape {v.shape}, expected ({G.A.shape[1]},) to match A"
        )
    Av = G.A @ v
    return float(G.sigma * (v @ v) - G.beta * (Av @ Av))


def _sigmoid(t: np.ndarray) -> np.ndarray:
    # tanh form is overflow-free for large |t|
    return 0.5 * (1.0 + np.tanh(0.5 * t))


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Data for ``min f(x) + g(y)  s.t.  A x + B y = b``.

    ``f`` is the sparsity term selected by ``f_kind`` with weight ``mu``:
    ``mu * sum(sqrt(|x_i|))`` for ``"l_half"``, ``mu * sum(|x_i|)`` for
    ``"l_one"``, or identically zero for ``"none"``.  ``g`` is either the
    quadratic fit ``0.5*||y - c||^2`` (``g_kind="quadratic_ls"``) or the
    mean logistic loss over ``(features, labels)`` rows.

    ``L_g`` must be a valid Lipschitz constant of ``grad g`` and
    ``sigma_B`` the smallest positive eigenvalue of ``B B^T``; generators
    fill both, hand-built instances are validated only for shape and
    finiteness.

    Construction caches ``norm_AtA`` (= ``||A^T A||_2``), ``norm_BtB``,
    and the structure flags ``B_is_neg_identity`` / ``b_is_zero`` the
    solver specializes on.
    """

    A: np.ndarray
    B: np.ndarray
    b: np.ndarray
    f_kind: str = "none"
    mu: float = 0.0
    g_kind: str = "quadratic_ls"
    c: np.ndarray | None = None
    features: np.ndarray | None = None
    labels: np.ndarray | None = None
    L_g: float = 1.0
    sigma_B: float = 1.0

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        b = as_vector(self.b, "b")
        if B.shape[0] != A.shape[0] or b.shape[0] != A.shape[0]:
            raise ValueError(
                f"inconsistent row dimensions: A {A.shape}, B {B.shape}, b {b.shape}"
            )
        if self.f_kind not in F_KINDS:
            raise ValueError(f"f_kind must be one of {F_KINDS}")
        if self.g_kind not in G_KINDS:
            raise ValueError(f"g_kind must be one of {G_KINDS}")
        if self.mu < 0.0:
            raise ValueError("mu must be nonnegative")
        if self.L_g < 0.0:
            raise ValueError("L_g must be nonnegative")
        if self.sigma_B <= 0.0:
            raise ValueError("sigma_B must be positive")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "b", b)

        if self.g_kind == "quadratic_ls":
            if self.c is None:
                raise ValueError("quadratic_ls needs the target vector c")
            c = as_vector(self.c, "c")
            if c.shape[0] != B.shape[1]:
                raise ValueError("c must match the column dimension of B")
            object.__setattr__(self, "c", c)
        else:
            if self.features is None or self.labels is None:
                raise ValueError("logistic needs features and labels")
            F = as_matrix(self.features, "features")
            lab = as_vector(self.labels, "labels")
            if F.shape[0] != lab.shape[0]:
                raise ValueError("one label per feature row required")
            if F.shape[1] != B.shape[1]:
                raise ValueError("feature dimension must match columns of B")
            if not np.all(np.abs(lab) == 1.0):
                raise ValueError("labels must be +-1")
            object.__setattr__(self, "features", F)
            object.__setattr__(self, "labels", lab)

        neg_identity = (
            B.shape[0] == B.shape[1]
            and np.array_equal(B, -np.eye(B.shape[0]))
        )
        object.__setattr__(self, "B_is_neg_identity", neg_identity)
        object.__setattr__(self, "b_is_zero", not b.any())
        object.__setattr__(self, "norm_AtA", spectral_norm(A) ** 2)
        if neg_identity:
            object.__setattr__(self, "norm_BtB", 1.0)
        else:
            object.__setattr__(self, "norm_BtB", spectral_norm(B) ** 2)

    # -- shapes ---------------------------------------------------------

    @property
    def m(self) -> int:
        return self.A.shape[1]

    @property
    def n(self) -> int:
        return self.B.shape[1]

    @property
    def l(self) -> int:
        return self.A.shape[0]

    # -- objective pieces -----------------------------------------------

    def f_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.f_kind == "none" or self.mu == 0.0:
            return 0.0
        if self.f_kind == "l_half":
            return float(self.mu * np.sum(np.sqrt(np.abs(x))))
        return float(self.mu * np.sum(np.abs(x)))

    def g_value(self, y) -> float:
        y = np.asarray(y, dtype=float)
        if self.g_kind == "quadratic_ls":
            d = y - self.c
            return 0.5 * float(d @ d)
        z = self.labels * (self.features @ y)
        return float(np.mean(np.logaddexp(0.0, -z)))

    def g_grad(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.g_kind == "quadratic_ls":
            return y - self.c
        z = self.labels * (self.features @ y)
        w = self.labels * _sigmoid(-z)
        return -(self.features.T @ w) / self.features.shape[0]
