"""Figure emission: loss curves, protocol tables, PCA scatter.

The PCA scatter stands in for the usual 2-D projection figure comparing
real and synthetic samples: real points are circles, synthetic points
triangles, colored by class.
"""

import csv
from pathlib import Path

import numpy as np

from .errors import DataError
from .metrics import EmbeddingSet
from .svg import Figure, Series, write_svg


def pca_project(vectors: np.ndarray, components: int = 2) -> np.ndarray:
    """Deterministic 2-D PCA projection (sign-fixed principal axes)."""
    vectors = np.asarray(vectors, dtype=np.float64)
    centered = vectors - vectors.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    axes = vt[:components]
    # fix each axis sign so its largest-magnitude coefficient is positive
    for i in range(axes.shape[0]):
        j = int(np.argmax(np.abs(axes[i])))
        if axes[i, j] < 0:
            axes[i] = -axes[i]
    return centered @ axes.T


def plot_loss(history_csv: str | Path, out_path: str | Path) -> None:
    rows = list(csv.DictReader(open(history_csv, encoding="utf-8")))
    if not rows:
        raise DataError(f"{history_csv}: no loss records")
    fig = Figure(title="training loss", xlabel="epoch", ylabel="loss")
    epochs = [float(r["epoch"]) for r in rows]
    for key in ("total", "rec", "cls"):
        if key in rows[0]:
            fig.add(Series(name=key, xs=epochs, ys=[float(r[key]) for r in rows]))
    write_svg(out_path, fig)


def plot_protocol(results_csv: str | Path, out_path: str | Path) -> None:
    rows = list(csv.DictReader(open(results_csv, encoding="utf-8")))
    if not rows:
        raise DataError(f"{results_csv}: no protocol rows")
    fig = Figure(title="downstream accuracy", xlabel="real-data fraction", ylabel="accuracy")
    policies = sorted({r["policy"] for r in rows})
    for policy in policies:
        sub = [r for r in rows if r["policy"] == policy]
        sub.sort(key=lambda r: float(r["fraction"]))
        fig.add(
            Series(
                name=policy,
                xs=[float(r["fraction"]) for r in sub],
                ys=[float(r["mean_acc"]) for r in sub],
            )
        )
    write_svg(out_path, fig)


def plot_pca_scatter(
    real: EmbeddingSet, fake: EmbeddingSet, out_path: str | Path
) -> np.ndarray:
    """Project real+synthetic embeddings to 2-D and plot; returns the
    projected coordinates (real rows first)."""
    if len(real) == 0 or len(fake) == 0:
        raise DataError("pca scatter needs non-empty real and synthetic sets")
    combined = np.concatenate([real.vectors, fake.vectors], axis=0)
    proj = pca_project(combined)
    fig = Figure(title="embedding projection", xlabel="pc 1", ylabel="pc 2")
    n_real = len(real)
    for label in np.unique(np.concatenate([real.labels, fake.labels])):
        r_idx = np.flatnonzero(real.labels == label)
        f_idx = np.flatnonzero(fake.labels == label) + n_real
        if r_idx.size:
            fig.add(
                Series(
                    name=f"real c{label}",
                    xs=proj[r_idx, 0].tolist(),
                    ys=proj[r_idx, 1].tolist(),
                    marker="circle",
                    line=False,
                )
            )
        if f_idx.size:
            fig.add(
                Series(
                    name=f"synthetic c{label}",
                    xs=proj[f_idx, 0].tolist(),
                    ys=proj[f_idx, 1].tolist(),
                    marker="triangle",
                    line=False,
                )
            )
    write_svg(out_path, fig)
    return proj
