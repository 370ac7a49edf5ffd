"""Figures written next to the JSON/CSV output: sweep curves and density-matrix panels."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .qmath import matrix_from_dict  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}

_XLABEL = {"noise_fraction": "loaded noise fraction", "fiber_length": "fiber length (km)"}
_BASIS = ("HH", "HV", "VH", "VV")
# (linestyle, marker); distinct so coinciding curves stay visible
_SERIES_STYLE = {"F_S_before": (":", "s"), "F_predicted": ("--", "^")}


def _finite(col):
    return np.array([np.nan if v == "" or v is None else float(v) for v in col])


def plot_sweep(rows: list[dict], outdir, stem: str = "sweep") -> list[Path]:
    """Before/after curves for fidelity, key rate and CHSH, plus success probability."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    parameter = rows[0]["parameter"]
    x = _finite(r["value"] for r in rows)
    panels = [
        ("fidelity", "fidelity to Φ+", [("F_P_before", "polarization before"), ("F_S_before", "spatial before"),
                                        ("F_after", "after"), ("F_predicted", "closed form")]),
        ("key_rate", "effective key rate", [("R_before", "before"), ("R_after", "after")]),
        ("chsh", "CHSH S (Horodecki max)", [("S_before", "before"), ("S_after", "after")]),
        ("success", "success probability", [("success_probability", "P_P")]),
    ]
    paths = []
    with plt.rc_context(STYLE):
        for name, ylabel, series in panels:
            fig, ax = plt.subplots(figsize=(4.0, 2.8))
            for key, label in series:
                y = _finite(r[key] for r in rows)
                if np.all(np.isnan(y)):
                    continue
                ls, marker = _SERIES_STYLE.get(key, ("-", "o"))
                ax.plot(x, y, ls=ls, marker=marker, ms=3, mfc="none" if marker == "s" else None, label=label)
            if name == "chsh":
                ax.axhline(2.0, color="0.5", lw=0.8, ls=":")
            ax.set_xlabel(_XLABEL.get(parameter, parameter))
            ax.set_ylabel(ylabel)
            if len(series) > 1:
                ax.legend(frameon=False)
            fig.tight_layout()
            path = outdir / f"{stem}_{name}.png"
            fig.savefig(path)
            plt.close(fig)
            paths.append(path)
    return paths


def plot_density_matrices(report: dict, path) -> Path:
    """Real parts of the polarization and spatial states before and the purified pair after."""
    mats = [
        ("polarization before", matrix_from_dict(report["states"]["polarization_before"])),
        ("spatial before", matrix_from_dict(report["states"]["spatial_before"])),
        ("after purification", matrix_from_dict(report["purification"]["output_matrix"])),
    ]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 3, figsize=(8.0, 2.8))
        for ax, (title, m) in zip(axes, mats):
            im = ax.imshow(m.real, vmin=-0.5, vmax=0.5, cmap="RdBu_r")
            ax.set_title(title)
            ax.set_xticks(range(4), _BASIS)
            ax.set_yticks(range(4), _BASIS)
            for (i, j), v in np.ndenumerate(m.real):
                if abs(v) >= 0.005:
                    ax.text(j, i, f"{v:.2f}", ha="center", va="center", fontsize=6)
        fig.colorbar(im, ax=axes, shrink=0.8, label="Re ρ")
        fig.savefig(path)
        plt.close(fig)
    return path
