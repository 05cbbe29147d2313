"""Figure rendering for the CLI. Output is presentational only."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "scldpc"


def _save(fig, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"Date": None} if path.suffix == ".svg" else {}
    fig.savefig(path, metadata=meta, bbox_inches="tight")
    plt.close(fig)


def exit_curve(eps, h, path, title: str = "", marks: dict | None = None) -> None:
    """EXIT curve with eps on the horizontal axis and the unit box drawn."""
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    ax.plot([0, 1, 1, 0, 0], [0, 0, 1, 1, 0], color="0.6", lw=0.8)
    ax.plot(eps, h, color="tab:blue", lw=1.2)
    for label, x in (marks or {}).items():
        ax.axvline(x, color="0.3", ls=":", lw=0.8)
        ax.text(x, 1.02, label, ha="center", va="bottom", fontsize=8)
    ax.set_xlim(0, 1.05)
    ax.set_ylim(0, 1.08)
    ax.set_xlabel(r"$\epsilon$")
    ax.set_ylabel(r"$h^{\mathrm{EBP}}$")
    if title:
        ax.set_title(title, fontsize=9)
    _save(fig, path)


def wiggle(chi, eps, path, band=None, title: str = "") -> None:
    """eps along the steep branch against entropy, zoomed on the wiggles."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(eps, chi, marker=".", ms=2, lw=0.6)
    if band is not None:
        for c in band:
            ax.axhline(c, color="0.5", ls=":", lw=0.8)
    ax.ticklabel_format(axis="x", useOffset=True)
    ax.set_xlabel(r"$\epsilon$")
    ax.set_ylabel(r"$\chi$")
    if title:
        ax.set_title(title, fontsize=9)
    _save(fig, path)


def constellation(values, path, indices=None, title: str = "", xs: float | None = None) -> None:
    v = np.asarray(values)
    i = np.arange(len(v)) if indices is None else np.asarray(indices)
    fig, ax = plt.subplots(figsize=(5, 2.6))
    ax.bar(i, v, width=0.8, color="tab:blue")
    if xs is not None:
        ax.axhline(xs, color="tab:red", ls="--", lw=0.8)
    ax.set_xlabel("section")
    ax.set_ylabel(r"$x_i$")
    ax.set_ylim(0, max(0.5, float(v.max()) * 1.1))
    if title:
        ax.set_title(title, fontsize=9)
    _save(fig, path)


def landscape(x, h, path, points: dict | None = None, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.axhline(0, color="0.6", lw=0.8)
    ax.plot(x, h, color="tab:blue")
    for label, xv in (points or {}).items():
        ax.axvline(xv, color="0.4", ls=":", lw=0.7)
        ax.text(xv, ax.get_ylim()[1], label, ha="center", va="bottom", fontsize=7)
    ax.set_xlabel("x")
    ax.set_ylabel("h(x)")
    if title:
        ax.set_title(title, fontsize=9, pad=14)
    _save(fig, path)


def growth(omega, exponent, path, omega_hat: float | None = None, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.axhline(0, color="0.6", lw=0.8)
    ax.plot(omega, exponent, color="tab:blue")
    if omega_hat is not None:
        ax.axvline(omega_hat, color="tab:red", ls="--", lw=0.8)
    ax.set_xlabel(r"$\omega$")
    ax.set_ylabel("exponent")
    if title:
        ax.set_title(title, fontsize=9)
    _save(fig, path)
