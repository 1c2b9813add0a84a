"""Turn qkicks CSV artifacts into figures.

Every input CSV must sit next to its `.meta.json` sidecar; axis names,
ranges, grid shapes, value labels and marked points all come from there,
never from hard-coded figure knowledge.  Rendering never writes anything
except the output image.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("heatmap", "scatter", "series", "matrix-image")


class RenderError(Exception):
    """Bad inputs: missing metadata, malformed CSV, or a shape mismatch."""


@dataclass
class FigureSpec:
    kind: str
    csv_paths: list[str]
    output_path: str
    dpi: int = 150
    size: tuple[float, float] = (6.4, 4.8)

    def __post_init__(self) -> None:
        if self.kind not in FIGURE_KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}")
        if not self.csv_paths:
            raise RenderError("no input CSV given")
        if self.kind in ("heatmap", "matrix-image") and len(self.csv_paths) != 1:
            raise RenderError(f"{self.kind} takes exactly one CSV input")


@dataclass
class LoadedTable:
    path: str
    header: list[str]
    columns: np.ndarray  # (n_rows, n_cols) float
    meta: dict


def load_table(csv_path: str) -> LoadedTable:
    meta_path = os.path.splitext(csv_path)[0] + ".meta.json"
    if not os.path.exists(csv_path):
        raise RenderError(f"input CSV not found: {csv_path}")
    if not os.path.exists(meta_path):
        raise RenderError(f"metadata sidecar missing: {meta_path}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    with open(csv_path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines:
        raise RenderError(f"{csv_path}: empty file")
    header = lines[0].split(",")
    try:
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    except ValueError as exc:
        raise RenderError(f"{csv_path}: malformed numeric row: {exc}") from exc
    if rows.ndim != 2 or rows.shape[1] != len(header):
        raise RenderError(f"{csv_path}: rows do not match the {len(header)}-column header")
    return LoadedTable(path=csv_path, header=header, columns=rows, meta=meta)


def _grid_from_table(table: LoadedTable) -> tuple[np.ndarray, list[dict]]:
    shape = table.meta.get("grid_shape")
    if not shape or len(shape) != 2:
        raise RenderError(f"{table.path}: metadata lacks a 2-D grid_shape")
    n1, n2 = int(shape[0]), int(shape[1])
    expected = n1 * n2
    if table.columns.shape[0] != expected:
        raise RenderError(
            f"{table.path}: shape mismatch: metadata grid {n1}x{n2} wants "
            f"{expected} rows, CSV has {table.columns.shape[0]}"
        )
    values = table.columns[:, -1].reshape(n1, n2)
    return values, table.meta.get("axes") or []


def _axis_edges(axis: dict) -> np.ndarray:
    if axis.get("values"):
        centers = np.asarray(axis["values"], dtype=float)
        if len(centers) == 1:
            return np.array([centers[0] - 0.5, centers[0] + 0.5])
        mids = (centers[:-1] + centers[1:]) / 2
        first = centers[0] - (mids[0] - centers[0])
        last = centers[-1] + (centers[-1] - mids[-1])
        return np.concatenate([[first], mids, [last]])
    return np.linspace(axis["min"], axis["max"], int(axis["count"]) + 1)


def render(spec: FigureSpec) -> str:
    """Render the figure and return the written image path."""
    tables = [load_table(p) for p in spec.csv_paths]
    fig, ax = plt.subplots(figsize=spec.size, dpi=spec.dpi)
    try:
        if spec.kind == "heatmap":
            _render_heatmap(ax, fig, tables[0])
        elif spec.kind == "matrix-image":
            _render_matrix(ax, fig, tables[0])
        elif spec.kind == "series":
            _render_series(ax, tables)
        else:
            _render_scatter(ax, tables)
        fig.savefig(spec.output_path)
    finally:
        plt.close(fig)
    return spec.output_path


def _render_heatmap(ax, fig, table: LoadedTable) -> None:
    values, axes = _grid_from_table(table)
    if values.shape[0] < 2 or values.shape[1] < 2:
        raise RenderError(
            f"{table.path}: {values.shape[0]}x{values.shape[1]} grid is too small "
            "for a heatmap; render the per-kick series instead"
        )
    if len(axes) != 2:
        raise RenderError(f"{table.path}: metadata lacks two axis definitions")
    x_edges = _axis_edges(axes[0])
    y_edges = _axis_edges(axes[1])
    mesh = ax.pcolormesh(x_edges, y_edges, values.T, shading="flat", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=table.meta.get("value_column", "value"))
    ax.set_xlabel(axes[0]["name"])
    ax.set_ylabel(axes[1]["name"])
    ax.set_xlim(x_edges[0], x_edges[-1])
    ax.set_ylim(y_edges[0], y_edges[-1])
    for mark in table.meta.get("marks") or []:
        cx, cy = mark["coords"]
        ax.plot(cx, cy, marker="x", color="red", markersize=8)
        ax.annotate(mark["label"], (cx, cy), color="red", fontsize=9,
                    textcoords="offset points", xytext=(4, 4))
    ax.set_title(table.meta.get("command", ""))


def _render_matrix(ax, fig, table: LoadedTable) -> None:
    values, _ = _grid_from_table(table)
    image = ax.imshow(values, origin="upper", cmap="magma", interpolation="nearest")
    fig.colorbar(image, ax=ax, label=table.meta.get("value_column", "magnitude"))
    ax.set_xlabel("col")
    ax.set_ylabel("row")
    ax.set_title(table.meta.get("command", ""))


def _render_series(ax, tables: list[LoadedTable]) -> None:
    for table in tables:
        if table.columns.shape[1] < 2:
            raise RenderError(f"{table.path}: series needs a step column plus values")
        steps = table.columns[:, 0]
        base = os.path.splitext(os.path.basename(table.path))[0]
        for col in range(1, table.columns.shape[1]):
            label = table.header[col] if len(tables) == 1 else f"{base}:{table.header[col]}"
            ax.plot(steps, table.columns[:, col], label=label)
    ax.set_xlabel(tables[0].header[0])
    ax.set_ylabel(tables[0].meta.get("value_column", "value"))
    ax.legend(fontsize=8)
    ax.set_title(tables[0].meta.get("command", ""))


def _render_scatter(ax, tables: list[LoadedTable]) -> None:
    for table in tables:
        coords = table.meta.get("coords")
        if table.columns.shape[1] < 4 or not coords:
            raise RenderError(
                f"{table.path}: scatter needs trajectory CSV columns "
                "(trajectory, kick, coord1, coord2) and coords metadata"
            )
        ax.scatter(table.columns[:, 2], table.columns[:, 3], s=0.3, marker=".",
                   linewidths=0, alpha=0.7)
        ax.set_xlabel(coords[0])
        ax.set_ylabel(coords[1])
    ax.set_title(tables[0].meta.get("command", ""))
