"""PNG figures rendered next to the CSV/JSON reports (Agg backend)."""
from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .reporting import atomic_write  # noqa: E402


def _save(fig, path):
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=120, bbox_inches="tight")
    plt.close(fig)
    return atomic_write(path, buf.getvalue(), mode="wb")


def residual_history(history, tol, path, title=""):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    h = np.maximum(np.asarray(history, float), np.finfo(float).tiny)
    ax.semilogy(np.arange(h.size), h, "o-", ms=3)
    ax.axhline(tol, color="0.5", ls="--", lw=1, label=f"tol = {tol:g}")
    ax.set_xlabel("iteration")
    ax.set_ylabel(r"$\|R(u)\|_\infty$")
    ax.set_title(title)
    ax.legend(frameon=False)
    return _save(fig, path)


def graph_field(mesh, values, path, title=""):
    fig, ax = plt.subplots(figsize=(5, 4))
    v = np.asarray(values, float)
    if mesh.kind == "torus":
        L = mesh.lengths
        im = ax.imshow(mesh.grid(v).T, origin="lower", extent=(0, L[0], 0, L[1]), cmap="viridis")
        ax.set_xlabel("$x_1$")
        ax.set_ylabel("$x_2$")
        fig.colorbar(im, ax=ax, label="u")
    elif mesh.kind == "circle":
        ax.plot(mesh.points[:, 0], v)
        ax.set_xlabel("x")
        ax.set_ylabel("u")
    else:
        p = mesh.points
        lon = np.arctan2(p[:, 1], p[:, 0])
        lat = np.arcsin(np.clip(p[:, 2] / np.linalg.norm(p, axis=1), -1, 1))
        sc = ax.scatter(lon, lat, c=v, s=8, cmap="viridis")
        ax.set_xlabel("longitude")
        ax.set_ylabel("latitude")
        fig.colorbar(sc, ax=ax, label="u")
    ax.set_title(title)
    return _save(fig, path)


def ladder(report, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for lad in report.ladders:
        h = np.asarray(lad.h)
        e = np.maximum(np.asarray(lad.max_error), np.finfo(float).tiny)
        lab = lad.name if lad.order is None else f"{lad.name} (order {lad.order:.2f})"
        ax.loglog(h, e, "o-", label=lab)
    ax.set_xlabel("h")
    ax.set_ylabel("max residual")
    ax.set_title(report.tag)
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def sweep(axis, rows, path):
    vals = np.array([r[0] for r in rows], float)
    res = np.maximum(np.array([r[3] for r in rows], float), np.finfo(float).tiny)
    osc = np.maximum(np.array([r[4] for r in rows], float), np.finfo(float).tiny)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(vals, res, "o-", label="final residual")
    ax.semilogy(vals, osc, "s--", label="osc u")
    ax.set_xlabel(axis)
    ax.legend(frameon=False)
    return _save(fig, path)
