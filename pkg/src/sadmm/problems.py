"""Experiment instance generators, recovery metrics, and text serialization.

Three families are covered: sparse spike recovery from compressed
measurements (column-normalized Gaussian sensing matrix, +-1 spikes,
additive noise), sparse logistic empirical risk minimization, and
single-snapshot direction-of-arrival estimation on a uniform linear
array, solved on the gridded real embedding of the complex model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import ProblemInstance, spectral_norm

__all__ = [
    "DoaSpec",
    "SparseRecoverySpec",
    "doa_grid",
    "doa_spectrum",
    "gen_doa",
    "gen_logistic_erm",
    "gen_sparse_recovery",
    "l2_error",
    "load_instance",
    "real_embedding",
    "save_instance",
    "steering_matrix",
]


@dataclass(frozen=True)
class SparseRecoverySpec:
    """Shape of one spike-recovery experiment.

    ``m``-dimensional signal with ``spikes`` entries of amplitude +-1,
    observed through an ``l x m`` column-normalized Gaussian matrix with
    ``noise_sigma`` Gaussian noise; the regularization weight is
    ``mu_factor * ||A^T c||_inf``.
    """

    l: int
    m: int
    spikes: int
    noise_sigma: float = 0.01
    mu_factor: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.l < 1 or self.m < 1:
            raise ValueError("dimensions must be positive")
        if not 0 < self.spikes <= self.m:
            raise ValueError("spike count must lie in [1, m]")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.mu_factor <= 0.0:
            raise ValueError("mu_factor must be positive")


def gen_sparse_recovery(spec: SparseRecoverySpec,
                        regularizer: str = "l_half") -> tuple[ProblemInstance, np.ndarray]:
    """Draw a spike-recovery instance; returns ``(instance, x_orig)``.

    The split form couples the signal block to a data block through
    ``A x - y = 0`` with ``g(y) = 0.5*||y - c||^2``, so ``L_g = 1`` and
    ``sigma_B = 1`` exactly.  Generation is deterministic per seed.
    """
    if regularizer not in ("l_half", "l_one"):
        raise ValueError("regularizer must be 'l_half' or 'l_one'")
    rng = np.random.default_rng(spec.seed)
    x_orig = np.zeros(spec.m)
    positions = rng.permutation(spec.m)[: spec.spikes]
    x_orig[positions] = np.where(rng.standard_normal(spec.spikes) >= 0.0, 1.0, -1.0)
    A = rng.standard_normal((spec.l, spec.m))
    A /= np.linalg.norm(A, axis=0)
    c = A @ x_orig + spec.noise_sigma * rng.standard_normal(spec.l)
    mu = spec.mu_factor * float(np.max(np.abs(A.T @ c)))
    inst = ProblemInstance(
        A=A, B=-np.eye(spec.l), b=np.zeros(spec.l),
        f_kind=regularizer, mu=mu,
        g_kind="quadratic_ls", c=c,
        L_g=1.0, sigma_B=1.0,
    )
    return inst, x_orig


def gen_logistic_erm(n_samples: int, dim: int, mu: float, seed: int = 0) -> ProblemInstance:
    """Sparse logistic ERM through the consensus split ``x - y = 0``.

    Gaussian features, +-1 labels, mean logistic loss; the gradient
    Lipschitz constant is the standard ``||F^T F||_2 / (4 N)`` bound.
    """
    if n_samples < 1 or dim < 1:
        raise ValueError("n_samples and dim must be positive")
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((n_samples, dim))
    labels = np.where(rng.standard_normal(n_samples) >= 0.0, 1.0, -1.0)
    L_g = spectral_norm(F) ** 2 / (4.0 * n_samples)
    return ProblemInstance(
        A=np.eye(dim), B=-np.eye(dim), b=np.zeros(dim),
        f_kind="l_half", mu=mu,
        g_kind="logistic", features=F, labels=labels,
        L_g=L_g, sigma_B=1.0,
    )


@dataclass(frozen=True)
class DoaSpec:
    """Single-snapshot DOA setup on a half-wavelength uniform linear array.

    The angle grid has ``grid_size`` nodes at ``-pi/2 + k*pi/grid_size``
    (so 180 nodes give one-degree resolution); ``true_doas`` are snapped to
    the nearest node, with a warning if any lies beyond half a grid cell.
    ``snr_db`` may be ``math.inf`` for the noiseless model.
    """

    sensors: int
    grid_size: int
    true_doas: tuple[float, ...]
    snr_db: float = 20.0
    seed: int = 0
    # coherent steering columns want a weaker weight than spike recovery
    mu_factor: float = 0.05

    def __post_init__(self):
        if self.sensors < 2 or self.grid_size < 2:
            raise ValueError("need at least 2 sensors and 2 grid points")
        if not self.true_doas:
            raise ValueError("at least one source angle required")
        if any(abs(t) > math.pi / 2 for t in self.true_doas):
            raise ValueError("source angles must lie in [-pi/2, pi/2]")
        if self.mu_factor <= 0.0:
            raise ValueError("mu_factor must be positive")


def steering_matrix(sensors: int, angles) -> np.ndarray:
    """Complex array response, one column per angle: exp(-j*pi*k*sin(theta))."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    k = np.arange(sensors)
    return np.exp(-1j * np.pi * np.outer(k, np.sin(angles)))


def doa_grid(grid_size: int) -> np.ndarray:
    """Uniform angle grid ``-pi/2 + k*pi/grid_size`` for ``k < grid_size``."""
    return -math.pi / 2 + (math.pi / grid_size) * np.arange(grid_size)


def real_embedding(Ac: np.ndarray) -> np.ndarray:
    """Real 2Mx2L block form [[Re, -Im], [Im, Re]] of a complex matrix."""
    return np.block([[Ac.real, -Ac.imag], [Ac.imag, Ac.real]])


def gen_doa(spec: DoaSpec) -> tuple[ProblemInstance, tuple[int, ...]]:
    """Build the real-embedded DOA instance; returns ``(instance, support)``.

    Unit-amplitude sources are placed at the snapped grid indices, complex
    Gaussian noise is rescaled so the sample SNR hits ``snr_db`` exactly,
    and the stacked [Re; Im] system is assembled as a sparse-recovery
    instance (sparsity acts componentwise on the stacked parts).
    """
    grid = doa_grid(spec.grid_size)
    half_cell = 0.5 * (grid[1] - grid[0])
    support = []
    for theta in spec.true_doas:
        idx = int(np.argmin(np.abs(grid - theta)))
        if abs(grid[idx] - theta) > half_cell:
            warnings.warn(
                f"source angle {theta:.4f} rad is more than half a cell off-grid",
                stacklevel=2,
            )
        support.append(idx)
    if len(set(support)) != len(support):
        raise ValueError("two source angles snap to the same grid node")

    Ac = steering_matrix(spec.sensors, grid)
    xc = np.zeros(spec.grid_size, dtype=complex)
    xc[support] = 1.0
    signal = Ac @ xc
    if math.isinf(spec.snr_db):
        yc = signal
    else:
        rng = np.random.default_rng(spec.seed)
        noise = (rng.standard_normal(spec.sensors)
                 + 1j * rng.standard_normal(spec.sensors)) / math.sqrt(2.0)
        target_power = float(np.vdot(signal, signal).real) / 10.0 ** (spec.snr_db / 10.0)
        noise *= math.sqrt(target_power / float(np.vdot(noise, noise).real))
        yc = signal + noise

    A = real_embedding(Ac)
    c = np.concatenate([yc.real, yc.imag])
    mu = spec.mu_factor * float(np.max(np.abs(A.T @ c)))
    twoM = 2 * spec.sensors
    inst = ProblemInstance(
        A=A, B=-np.eye(twoM), b=np.zeros(twoM),
        f_kind="l_half", mu=mu,
        g_kind="quadratic_ls", c=c,
        L_g=1.0, sigma_B=1.0,
    )
    return inst, tuple(support)


def doa_spectrum(x_stacked, grid_size: int) -> np.ndarray:
    """Per-angle magnitudes sqrt(Re^2 + Im^2) of a stacked solution."""
    x = np.asarray(x_stacked, dtype=float)
    if x.shape != (2 * grid_size,):
        raise ValueError("stacked solution must have length 2*grid_size")
    return np.hypot(x[:grid_size], x[grid_size:])


def l2_error(x, x_orig) -> float:
    """Relative recovery error ``||x - x_orig|| / ||x_orig||``."""
    x = np.asarray(x, dtype=float)
    x_orig = np.asarray(x_orig, dtype=float)
    if x.shape != x_orig.shape:
        raise ValueError("shape mismatch")
    ref = float(np.linalg.norm(x_orig))
    if ref == 0.0:
        raise ValueError("reference signal is zero")
    return float(np.linalg.norm(x - x_orig)) / ref


# -- plain-text instance container ---------------------------------------

_FORMAT_TAG = "sadmm-instance-v1"


def _write_array(fh, name: str, arr: np.ndarray) -> None:
    if arr.ndim == 1:
        fh.write(f"vector {name} {arr.shape[0]}\n")
        fh.write(" ".join(f"{v:.17g}" for v in arr) + "\n")
    else:
        fh.write(f"matrix {name} {arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def save_instance(path, prob: ProblemInstance, x_orig: np.ndarray | None = None) -> None:
    """Write an instance (and optional ground truth) as whitespace text."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"format {_FORMAT_TAG}\n")
        fh.write(f"f_kind {prob.f_kind}\n")
        fh.write(f"mu {prob.mu:.17g}\n")
        fh.write(f"g_kind {prob.g_kind}\n")
        fh.write(f"L_g {prob.L_g:.17g}\n")
        fh.write(f"sigma_B {prob.sigma_B:.17g}\n")
        _write_array(fh, "A", prob.A)
        _write_array(fh, "B", prob.B)
        _write_array(fh, "b", prob.b)
        if prob.g_kind == "quadratic_ls":
            _write_array(fh, "c", prob.c)
        else:
            _write_array(fh, "features", prob.features)
            _write_array(fh, "labels", prob.labels)
        if x_orig is not None:
            _write_array(fh, "x_orig", np.asarray(x_orig, dtype=float))


def load_instance(path) -> tuple[ProblemInstance, np.ndarray | None]:
    """Read an instance written by :func:`save_instance`."""
    scalars: dict[str, str] = {}
    arrays: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="ascii") as fh:
        lines = iter(fh.read().splitlines())
    for line in lines:
        if not line.strip():
            continue
        parts = line.split()
        if parts[0] == "vector":
            name, length = parts[1], int(parts[2])
            data = np.array(next(lines).split(), dtype=float)
            if data.shape[0] != length:
                raise ValueError(f"vector {name}: expected {length} entries")
            arrays[name] = data
        elif parts[0] == "matrix":
            name, rows, cols = parts[1], int(parts[2]), int(parts[3])
            data = np.empty((rows, cols))
            for i in range(rows):
                row = np.array(next(lines).split(), dtype=float)
                if row.shape[0] != cols:
                    raise ValueError(f"matrix {name}: row {i} has wrong length")
                data[i] = row
            arrays[name] = data
        else:
            scalars[parts[0]] = parts[1]
    if scalars.get("format") != _FORMAT_TAG:
        raise ValueError(f"not a {_FORMAT_TAG} file")
    inst = ProblemInstance(
        A=arrays["A"], B=arrays["B"], b=arrays["b"],
        f_kind=scalars["f_kind"], mu=float(scalars["mu"]),
        g_kind=scalars["g_kind"],
        c=arrays.get("c"),
        features=arrays.get("features"), labels=arrays.get("labels"),
        L_g=float(scalars["L_g"]), sigma_B=float(scalars["sigma_B"]),
    )
    return inst, arrays.get("x_orig")
