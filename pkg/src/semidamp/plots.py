"""Figure rendering for the report path.

Every plotter reads a CSV emitted by the runner (never live objects), so
the figures are a pure function of the delimited output, and writes an
SVG next to it. The Agg backend keeps everything headless.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        rows = list(reader)
    return rows


def _savefig(fig, out_path) -> Path:
    out_path = Path(out_path)
    fig.savefig(out_path, bbox_inches="tight")
    plt.close(fig)
    return out_path


def plot_orbit(csv_path, out_path=None) -> Path:
    """Phase portrait plus energy/damping traces from an orbit dump."""
    rows = _read_csv(csv_path)
    t = np.array([float(r["t"]) for r in rows])
    x = np.array([float(r["x"]) for r in rows])
    xi = np.array([float(r["xi"]) for r in rows])
    p = np.array([float(r["p"]) for r in rows])
    qv = np.array([float(r["q"]) for r in rows])
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    axes[0].plot(x, xi, lw=0.8)
    axes[0].set_xlabel("x")
    axes[0].set_ylabel("xi")
    axes[0].set_title("phase portrait")
    axes[1].plot(t, p - p[len(p) // 2], lw=0.8)
    axes[1].set_xlabel("t")
    axes[1].set_title("energy drift")
    axes[2].plot(t, qv, lw=0.8)
    axes[2].set_xlabel("t")
    axes[2].set_title("damping factor q")
    out = out_path or Path(csv_path).with_suffix(".svg")
    return _savefig(fig, out)


def plot_sweep(csv_path, out_path=None) -> Path:
    """Log-log sup-norm against 1/(h nu_tilde) with the fitted power law."""
    rows = _read_csv(csv_path)
    by_h: dict = {}
    for r in rows:
        h = float(r["h"])
        axis = 1.0 / (h * float(r["nu_tilde"]))
        by_h.setdefault(axis, []).append(float(r["norm"]))
    xs = np.array(sorted(by_h))
    ys = np.array([max(by_h[a]) for a in xs])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(xs, ys, "o-", label="sup norm")
    if len(xs) >= 2:
        slope, icept = np.polyfit(np.log(xs), np.log(ys), 1)
        ax.loglog(xs, np.exp(icept) * xs**slope, "--",
                  label=f"slope {slope:.3f}")
    ax.set_xlabel(r"$1/(h\,\tilde\nu(h))$")
    ax.set_ylabel("weighted resolvent sup norm")
    ax.legend()
    out = out_path or Path(csv_path).with_suffix(".svg")
    return _savefig(fig, out)


def plot_egorov(csv_path, out_path=None) -> Path:
    rows = _read_csv(csv_path)
    h = np.array([float(r["h"]) for r in rows])
    err = np.array([float(r["error"]) for r in rows])
    merr = np.array([float(r["mixed_error"]) for r in rows])
    order = np.argsort(h)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(h[order], err[order], "o-", label="two-sided (q)")
    ax.loglog(h[order], merr[order], "s-", label="mixed (q1)")
    ax.loglog(h[order], err[order][-1] * h[order] / h[order][-1], "k--",
              lw=0.8, label="O(h)")
    ax.set_xlabel("h")
    ax.set_ylabel("comparison error")
    ax.legend()
    out = out_path or Path(csv_path).with_suffix(".svg")
    return _savefig(fig, out)


def plot_absorption(csv_path, out_path=None) -> Path:
    rows = _read_csv(csv_path)
    mu = np.array([float(r["mu"]) for r in rows])
    norm = np.array([float(r["norm"]) for r in rows])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.semilogx(mu, norm, "o-")
    ax.set_xlabel("Im z")
    ax.set_ylabel("weighted norm")
    ax.set_title("limiting absorption approach")
    out = out_path or Path(csv_path).with_suffix(".svg")
    return _savefig(fig, out)


def plot_besov_blocks(csv_path, out_path=None) -> Path:
    rows = _read_csv(csv_path)
    js = sorted({int(r["j"]) for r in rows})
    ks = sorted({int(r["k"]) for r in rows})
    grid = np.zeros((len(js), len(ks)))
    for r in rows:
        grid[js.index(int(r["j"])), ks.index(int(r["k"]))] = float(r["weighted"])
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(grid, origin="lower",
                   extent=(ks[0] - 0.5, ks[-1] + 0.5, js[0] - 0.5, js[-1] + 0.5))
    fig.colorbar(im, ax=ax, label="weighted block norm")
    ax.set_xlabel("k")
    ax.set_ylabel("j")
    out = out_path or Path(csv_path).with_suffix(".svg")
    return _savefig(fig, out)


def plot_dilation(csv_path, out_path=None) -> Path:
    rows = _read_csv(csv_path)
    spacing = np.array([float(r["spacing"]) for r in rows])
    err = np.array([float(r["error"]) for r in rows])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(spacing, err, "o-")
    ax.set_xlabel("channel spacing")
    ax.set_ylabel("identity error")
    out = out_path or Path(csv_path).with_suffix(".svg")
    return _savefig(fig, out)
