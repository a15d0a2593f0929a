"""Matplotlib figures written next to CSV outputs (non-interactive backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_MU_STYLE = {
    "mu_n_plus": ("C0", "--"),
    "mu_e_plus": ("C0", "-"),
    "mu_e_minus": ("C3", "-"),
    "mu_n_minus": ("C3", "--"),
}


def _nan(vals):
    return np.array([np.nan if v is None else v for v in vals], dtype=float)


def plot_extremal_curve(curve, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, (color, ls) in _MU_STYLE.items():
        ax.plot(curve.lambda_values, _nan(getattr(curve, name)), color=color, ls=ls, marker=".", label=name)
    for value, label in ((curve.lambda_star_e, "lambda_star_e"), (curve.lambda_star_n, "lambda_star_n")):
        if value is not None:
            ax.axvline(value, color="0.5", lw=0.8, ls=":")
            ax.annotate(label, (value, 0.98), xycoords=("data", "axes fraction"), rotation=90,
                        va="top", ha="right", fontsize=7)
    ax.set_xlabel("lambda")
    ax.set_ylabel("mu")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_field(u, path, title=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    if u.grid.dim == 1:
        x = u.grid.axes()[0]
        L = u.grid.lengths[0]
        ax.plot(np.r_[0.0, x, L], np.r_[0.0, u.values, 0.0])
        ax.set_xlabel("x")
        ax.set_ylabel("u")
    else:
        lx, ly = u.grid.lengths
        im = ax.imshow(u.as_array().T, origin="lower", extent=(0, lx, 0, ly), aspect="auto")
        fig.colorbar(im, ax=ax)
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_scan(rows, path):
    """Scatter of scan cells colored by the branch-2 energy sign."""
    colors = {"+": "C3", "-": "C0", "0": "k", "": "0.7"}
    fig, ax = plt.subplots(figsize=(6, 4))
    for sign, color in colors.items():
        pts = [(r["lambda"], r["mu"]) for r in rows if r["b2_phi_sign"] == sign]
        if pts:
            lam, mu = zip(*pts)
            ax.scatter(lam, mu, c=color, s=14, label=f"branch 2 energy {sign or 'n/a'}")
    lam_vals = sorted({r["lambda"] for r in rows})
    for key, style in (("mu_e_plus", "-"), ("mu_e_minus", "-"), ("mu_n_minus", "--")):
        by_lam = {r["lambda"]: r[key] for r in rows}
        ax.plot(lam_vals, _nan([by_lam[v] for v in lam_vals]), color="0.3", ls=style, lw=0.8)
    ax.set_xlabel("lambda")
    ax.set_ylabel("mu")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
