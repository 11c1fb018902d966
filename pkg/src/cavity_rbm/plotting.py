"""Figures for the experiment reports; PNGs are written without timestamps."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .outputs import atomic_path  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.0,
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _save(fig, path):
    with atomic_path(path) as tmp:
        fig.savefig(tmp, format="png", metadata={"Software": None})
    plt.close(fig)


def _db(p):
    return 10 * np.log10(np.maximum(p, 1e-30))


def plot_psd_variance(units, variance, stderr, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.2), layout="constrained")
        ax.errorbar(units, variance, yerr=stderr, marker="o", capsize=2)
        ax.set_xlabel("flipped RIS units")
        ax.set_ylabel("variance of normalized PSD change")
        _save(fig, path)


def plot_two_codebooks(freq_hz, psd_a, psd_b, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 3.2), layout="constrained")
        ax.plot(freq_hz / 1e6, _db(psd_a), label="codebook A")
        ax.plot(freq_hz / 1e6, _db(psd_b), label="codebook B", alpha=0.8)
        ax.set_xlabel("baseband frequency (MHz)")
        ax.set_ylabel("normalized PSD (dB)")
        ax.legend()
        _save(fig, path)


def plot_three_scenarios(panels, path):
    """``panels``: list of (label, |Y|^2 array [frames x bins], distances, eta, switch frames)."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(panels), 2, figsize=(8, 2.4 * len(panels)),
                                 layout="constrained", squeeze=False)
        for row, (label, power, dist, eta, switches) in zip(axes, panels):
            img = _db(power / power.mean())
            row[0].imshow(img, aspect="auto", origin="lower", cmap="viridis",
                          vmin=np.percentile(img, 2), vmax=np.percentile(img, 99.5))
            row[0].set_title(label)
            row[0].set_xlabel("frequency bin")
            row[0].set_ylabel("frame")
            row[0].grid(False)
            n = np.arange(dist.size)
            row[1].plot(n, dist, marker=".", ms=3)
            row[1].axhline(eta, color="C3", ls="--", label="threshold")
            for k in switches:
                row[1].axvline(k, color="0.6", lw=0.6)
            row[1].set_xlabel("frame")
            row[1].set_ylabel("DTW distance")
            row[1].legend(loc="upper right")
        _save(fig, path)


def plot_ber_table(labels, bers, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.2), layout="constrained")
        ax.bar(labels, bers, color=["C0"] * (len(labels) - 1) + ["C3"])
        ax.set_ylim(0, max(0.55, max(bers) * 1.1))
        ax.set_ylabel("BER")
        for i, b in enumerate(bers):
            ax.text(i, b + 0.01, f"{b:.4f}", ha="center", fontsize=8)
        _save(fig, path)


def plot_trace(distances, eta, path, title=""):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7, 2.8), layout="constrained")
        ax.plot(np.arange(len(distances)), distances, lw=0.5)
        ax.axhline(eta, color="C3", ls="--", label="threshold")
        ax.set_xlabel("frame")
        ax.set_ylabel("DTW distance")
        ax.set_title(title)
        ax.legend(loc="upper right")
        _save(fig, path)
