"""Reproducible run artifacts: manifests, canonical JSON, CSV, SVG plots.

Every command writes a manifest (config hash, seed, library versions) next
to its numeric outputs. Floats are serialized with shortest round-trip
repr and JSON keys are sorted, so a rerun with the same config and seed
produces byte-identical files. SVG output pins matplotlib's hash salt and
strips the date metadata for the same reason.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = [
    "canonical_json",
    "write_json",
    "config_hash",
    "write_manifest",
    "write_table_csv",
    "plot_input_trajectories",
    "plot_voltage_envelope",
    "plot_error_histogram",
]

_SVG_SALT = "fbopt"


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(canonical_json(obj))


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


def write_manifest(out_dir, config: dict, seed: int, outputs: list[str]) -> None:
    import cvxpy
    import scipy

    import fbopt

    manifest = {
        "config_sha256": config_hash(config),
        "seed": seed,
        "outputs": sorted(outputs),
        "versions": {
            "python": platform.python_version(),
            "fbopt": fbopt.__version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "cvxpy": cvxpy.__version__,
        },
    }
    write_json(Path(out_dir) / "manifest.json", manifest)


def write_table_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, (str, int)) else repr(float(v))
                             for v in row])


def _new_figure(figsize=(5.0, 3.6)):
    plt.rcParams["svg.hashsalt"] = _SVG_SALT
    return plt.subplots(figsize=figsize)


def _save_svg(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_input_trajectories(traces, path, feedforward=None, endpoint=None) -> None:
    """First two input coordinates of each trace, start/end markers."""
    fig, ax = _new_figure()
    for tr in traces:
        ax.plot(tr.u[:, 0], tr.u[:, 1], linewidth=0.6, alpha=0.5)
        ax.plot(tr.u[0, 0], tr.u[0, 1], ".", color="gray", markersize=2)
    if endpoint is not None:
        ax.plot(endpoint[0], endpoint[1], "r*", markersize=10, label="fixed point")
    if feedforward is not None:
        ax.plot(feedforward[0], feedforward[1], "x", color="goldenrod",
                markersize=10, label="feedforward")
    ax.set_xlabel("u_1")
    ax.set_ylabel("u_2")
    if endpoint is not None or feedforward is not None:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save_svg(fig, path)


def plot_voltage_envelope(traces: dict, limits, path) -> None:
    """Min/max output magnitude over time per algorithm, with limit lines."""
    fig, ax = _new_figure()
    for name, tr in traces.items():
        if tr.y.size == 0:
            continue
        ax.plot(tr.y.max(axis=1), label=f"{name} max")
        ax.plot(tr.y.min(axis=1), linestyle="--", linewidth=0.8, label=f"{name} min")
    lo, hi = limits
    ax.axhline(hi, color="red", linewidth=0.8)
    ax.axhline(lo, color="red", linewidth=0.8)
    ax.set_xlabel("step")
    ax.set_ylabel("|v| (p.u.)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save_svg(fig, path)


def plot_error_histogram(errors, gamma, path, bins: int = 40) -> None:
    """Sampled Jacobian-error distribution with the chosen bound marked."""
    fig, ax = _new_figure()
    ax.hist(np.asarray(errors), bins=bins, color="steelblue")
    ax.axvline(gamma, color="red", linewidth=1.2, label=f"gamma = {gamma:.4g}")
    ax.set_xlabel("Jacobian error (spectral norm)")
    ax.set_ylabel("samples")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save_svg(fig, path)
