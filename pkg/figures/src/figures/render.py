"""Render publication-style figures from bisectquest CSV files.

This package never recomputes any simulation or bound math: every curve
comes verbatim from a CSV written by the primary CLI (`simulate`,
`bounds`, or `bounds --error-model-out`). Rendering is a pure function of
the CSV bytes and the figure spec; the SVG backend is pinned to a fixed
hash salt and omits the creation date so identical inputs produce
identical files.

Figure kinds:
  mse_compare  empirical MSE curves overlaid with bound curves (log y)
  error_model  responder error probability versus distance
  hgr          human-gain-ratio curves from bound tables
  mse_surface  MSE over (iteration, scenario value) as a heat map
  unknown_mse  side-by-side target and error-probability MSE panels
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "bisectquest-figures"

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first

KINDS = ("error_model", "hgr", "mse_compare", "mse_surface", "unknown_mse")


class RenderError(Exception):
    pass


@dataclass(frozen=True)
class FigureSpec:
    """One figure: what kind, which CSVs, labels, scale, output path."""

    kind: str
    inputs: tuple[str, ...]
    out: str
    labels: tuple[str, ...] = ()
    log_y: bool = True
    title: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise RenderError("inputs must be a nonempty list of CSV paths")
        if not self.out:
            raise RenderError("an output image path is required")
        if self.labels and len(self.labels) != len(self.inputs):
            raise RenderError("labels, when given, must match inputs one to one")

    @classmethod
    def from_json_file(cls, path) -> "FigureSpec":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise RenderError(f"cannot read spec {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise RenderError(f"{path}: invalid JSON: {exc}") from exc
        known = {"kind", "inputs", "out", "labels", "log_y", "title"}
        extra = set(data) - known
        if extra:
            raise RenderError(f"unknown spec fields: {sorted(extra)}")
        return cls(
            kind=data.get("kind", ""),
            inputs=tuple(data.get("inputs", ())),
            out=data.get("out", ""),
            labels=tuple(data.get("labels", ())),
            log_y=bool(data.get("log_y", True)),
            title=data.get("title", ""),
        )

    def label(self, i: int) -> str:
        if self.labels:
            return self.labels[i]
        return Path(self.inputs[i]).stem


def read_csv_columns(path) -> dict[str, np.ndarray]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header:
                raise RenderError(f"{path}: empty CSV")
            rows = [row for row in reader if row]
    except OSError as exc:
        raise RenderError(f"cannot read {path}: {exc}") from exc
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise RenderError(f"{path}: non-numeric cell: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != len(header):
        raise RenderError(f"{path}: ragged rows")
    return {name: data[:, j] for j, name in enumerate(header)}


def require_columns(path, cols, *names) -> None:
    for name in names:
        if name not in cols:
            raise RenderError(f"{path}: missing required column {name!r}; has {sorted(cols)}")


def _finish(fig, spec: FigureSpec) -> None:
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    out = Path(spec.out)
    if out.suffix.lower() == ".svg":
        fig.savefig(out, metadata={"Date": None})
    else:
        fig.savefig(out)
    plt.close(fig)


def _render_mse_compare(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i, path in enumerate(spec.inputs):
        cols = read_csv_columns(path)
        if "mse_x" in cols:
            require_columns(path, cols, "n", "mse_x", "stderr_x")
            ax.plot(cols["n"], cols["mse_x"], label=spec.label(i))
            ax.fill_between(
                cols["n"],
                np.maximum(cols["mse_x"] - 2 * cols["stderr_x"], 1e-300),
                cols["mse_x"] + 2 * cols["stderr_x"],
                alpha=0.2,
            )
        else:
            require_columns(path, cols, "n", "lower", "upper")
            ax.plot(cols["n"], cols["lower"], "--", label=f"{spec.label(i)} lower")
            ax.plot(cols["n"], cols["upper"], ":", label=f"{spec.label(i)} upper")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("iteration n")
    ax.set_ylabel("MSE")
    ax.legend()
    return fig


def _render_error_model(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for i, path in enumerate(spec.inputs):
        cols = read_csv_columns(path)
        require_columns(path, cols, "distance")
        for name in cols:
            if name == "distance":
                continue
            label = name if len(spec.inputs) == 1 else f"{spec.label(i)} {name}"
            ax.plot(cols["distance"], cols[name], label=label)
    ax.set_xlabel("|target - estimate|")
    ax.set_ylabel("error probability")
    ax.set_ylim(0.0, 0.55)
    ax.legend()
    return fig


def _render_hgr(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for i, path in enumerate(spec.inputs):
        cols = read_csv_columns(path)
        require_columns(path, cols, "n", "hgr")
        ax.plot(cols["n"], cols["hgr"], label=spec.label(i))
    ax.set_xlabel("iteration n")
    ax.set_ylabel("human gain ratio")
    ax.legend()
    return fig


def _render_mse_surface(spec: FigureSpec):
    curves = []
    for i, path in enumerate(spec.inputs):
        cols = read_csv_columns(path)
        require_columns(path, cols, "n", "mse_x")
        try:
            value = float(spec.label(i))
        except ValueError as exc:
            raise RenderError(
                f"mse_surface labels must be numeric scenario values, got {spec.label(i)!r}"
            ) from exc
        curves.append((value, cols["n"], cols["mse_x"]))
    curves.sort(key=lambda t: t[0])
    n = curves[0][1]
    for _, other_n, _ in curves:
        if len(other_n) != len(n) or np.any(other_n != n):
            raise RenderError("mse_surface inputs must share the n column")
    values = np.array([v for v, _, _ in curves])
    grid = np.vstack([m for _, _, m in curves])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    z = np.log10(np.maximum(grid, 1e-300)) if spec.log_y else grid
    mesh = ax.pcolormesh(n, values, z, shading="nearest")
    fig.colorbar(mesh, ax=ax, label="log10 MSE" if spec.log_y else "MSE")
    ax.set_xlabel("iteration n")
    ax.set_ylabel("scenario value")
    return fig


def _render_unknown_mse(spec: FigureSpec):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    for i, path in enumerate(spec.inputs):
        cols = read_csv_columns(path)
        require_columns(path, cols, "n", "mse_x", "mse_eps")
        ax1.plot(cols["n"], cols["mse_x"], label=spec.label(i))
        ax2.plot(cols["n"], cols["mse_eps"], label=spec.label(i))
    for ax, name in ((ax1, "target MSE"), (ax2, "error-probability MSE")):
        if spec.log_y:
            ax.set_yscale("log")
        ax.set_xlabel("iteration n")
        ax.set_ylabel(name)
        ax.legend()
    return fig


_RENDERERS = {
    "mse_compare": _render_mse_compare,
    "error_model": _render_error_model,
    "hgr": _render_hgr,
    "mse_surface": _render_mse_surface,
    "unknown_mse": _render_unknown_mse,
}


def render(spec: FigureSpec) -> Path:
    """Validate inputs, draw the figure, and write the image file.

    All CSVs are read and checked before any drawing starts, so a failed
    render never leaves a partial output file.
    """
    for path in spec.inputs:
        if not Path(path).is_file():
            raise RenderError(f"input CSV not found: {path}")
    fig = _RENDERERS[spec.kind](spec)
    _finish(fig, spec)
    return Path(spec.out)
