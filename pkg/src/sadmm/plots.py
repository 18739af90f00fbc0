"""Figure rendering for the CLI reports.

Every helper writes one PNG next to the delimited data it illustrates and
closes the figure; the Agg backend keeps everything headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "save_audit_figure",
    "save_compare_figure",
    "save_convergence_figure",
    "save_recovery_figure",
    "save_spectrum_figure",
    "save_sweep_figure",
]

_FIGSIZE = (7.0, 4.2)


def save_convergence_figure(trace, path) -> None:
    """Semilog decay of the feasibility error, dual residual and IRE."""
    ks = [row.k for row in trace]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.semilogy(ks, [max(row.r_norm, 1e-300) for row in trace], label="||r_k||")
    ax.semilogy(ks, [max(row.s_norm, 1e-300) for row in trace], label="||s_k||")
    ax.semilogy(ks, [max(row.ire, 1e-300) for row in trace], label="IRE")
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_recovery_figure(x, x_orig, path) -> None:
    """Recovered coefficients overlaid on the original spikes."""
    x = np.asarray(x, dtype=float)
    idx = np.arange(x.shape[0])
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    if x_orig is not None:
        ax.plot(idx, np.asarray(x_orig, dtype=float), "o", mfc="none",
                ms=5, label="original", color="tab:gray")
    ax.plot(idx, x, ".", ms=4, label="recovered", color="tab:red")
    ax.set_xlabel("index")
    ax.set_ylabel("amplitude")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_spectrum_figure(angles, magnitudes, true_indices, path) -> None:
    """Spatial spectrum in degrees with the true directions marked."""
    deg = np.degrees(np.asarray(angles, dtype=float))
    mags = np.asarray(magnitudes, dtype=float)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(deg, mags, "-", lw=1.2)
    for i in true_indices:
        ax.axvline(deg[i], color="tab:green", ls="--", alpha=0.6)
    ax.set_xlabel("angle (deg)")
    ax.set_ylabel("magnitude")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(rows, path) -> None:
    """Iteration counts over the (tau, alpha) grid; skipped pairs as crosses."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    done = [r for r in rows if r["status"] == "converged"]
    other = [r for r in rows if r["status"] != "converged"]
    if done:
        sc = ax.scatter([r["tau"] for r in done], [r["alpha"] for r in done],
                        c=[r["it"] for r in done], cmap="viridis", s=60)
        fig.colorbar(sc, ax=ax, label="iterations")
    if other:
        ax.scatter([r["tau"] for r in other], [r["alpha"] for r in other],
                   marker="x", color="tab:red", s=60,
                   label="not converged / skipped")
        ax.legend()
    ax.set_xlabel("tau")
    ax.set_ylabel("alpha")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_compare_figure(rows, path) -> None:
    """Recovery error of the two regularizers across problem sizes."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for reg, color in (("l_half", "tab:blue"), ("l_one", "tab:orange")):
        pts = [r for r in rows if r["regularizer"] == reg]
        if not pts:
            continue
        labels = [f"{r['l']}x{r['m']}" for r in pts]
        ax.plot(range(len(pts)), [r["l2_error"] for r in pts], "o-",
                color=color, label=reg)
        ax.set_xticks(range(len(pts)))
        ax.set_xticklabels(labels, rotation=30)
    ax.set_yscale("log")
    ax.set_ylabel("relative l2 error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_audit_figure(trace, path) -> None:
    """Shifted-merit trajectory and the per-step drop against its bound."""
    ks = [row.k for row in trace]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.2))
    ax1.plot(ks, [row.L_tilde for row in trace], lw=1.2)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("shifted merit")
    drops = []
    bounds = []
    for prev, cur in zip(trace, trace[1:]):
        z0 = 0.5 * cur.gamma
        drops.append((prev.L_beta + z0 * prev.dx_G ** 2)
                     - (cur.L_beta + z0 * cur.dx_G ** 2))
        bounds.append(0.5 * (1.0 - 2.0 * cur.gamma) * cur.dx_G ** 2)
    floor = 1e-300
    ax2.semilogy(ks[1:], [max(d, floor) for d in drops], label="merit drop")
    ax2.semilogy(ks[1:], [max(b, floor) for b in bounds], label="x-term bound")
    ax2.set_xlabel("iteration")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
