"""The five figure builders.

Rendering is a pure function of the recipe and its input files: fixed
style, no clocks, no randomness.  Wigner panels always use a symmetric
diverging scale clipped to +-2/pi (the extremal values any Wigner function
can reach), so negativity is unambiguous and panels are comparable across
times and figures.
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import SchemaError
from .io import read_table, read_wigner
from .recipes import FigureRecipe

#: symmetric color limit for every Wigner panel
WIGNER_LIMIT = 2.0 / math.pi

_RC = {
    "figure.dpi": 120,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "kerrlep-plots",
    "lines.linewidth": 1.4,
}

_BRANCH_COLORS = {"e2": "#444444", "e3": "#d62728", "e4": "#1f77b4"}


def render(recipe: FigureRecipe) -> str:
    """Build the figure and write it to the recipe's output path."""
    builder = FIGURE_KINDS[recipe.kind]
    with plt.rc_context(_RC):
        fig = builder(recipe)
        try:
            _save(fig, recipe.output)
        finally:
            plt.close(fig)
    return recipe.output


def _save(fig, output: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(output)), exist_ok=True)
    ext = os.path.splitext(output)[1].lower()
    if ext == ".svg":
        fig.savefig(output, format="svg", metadata={"Date": None})
    else:
        fig.savefig(output, format="png",
                    metadata={"Software": "kerrlep-plots"})


def _fig_spectrum(recipe: FigureRecipe):
    table = read_table(recipe.inputs["spectrum"])
    table.require("delta_rel", "re_e2_hz", "im_e2_hz", "re_e3_hz",
                  "im_e3_hz", "re_e4_hz", "im_e4_hz")
    rel = table.numeric("delta_rel")
    curve = recipe.inputs.get("lep_curve")
    ncols = 3 if curve else 2
    fig, axes = plt.subplots(1, ncols, figsize=(3.2 * ncols, 2.8),
                             constrained_layout=True)
    for part, ax in zip(("re", "im"), axes):
        for branch in ("e2", "e3", "e4"):
            ax.plot(rel, table.numeric(f"{part}_{branch}_hz") / 1e3,
                    color=_BRANCH_COLORS[branch], label=branch.upper())
        for edge in (-1.0, 1.0):
            ax.axvline(edge, color="#2ca02c", linestyle="--", linewidth=1.0)
        ax.set_xlabel(r"$\Delta / \Delta_{c}$")
        ax.set_ylabel(f"{'Re' if part == 're' else 'Im'} E / 2$\\pi$ (kHz)")
    axes[0].legend(loc="best", fontsize=8)
    if curve:
        lep = read_table(curve)
        lep.require("alpha", "delta_lep2_hz")
        ax = axes[2]
        ax.semilogy(lep.numeric("alpha"), lep.numeric("delta_lep2_hz") / 1e3,
                    color="#2ca02c")
        ax.set_xlabel(r"$\alpha$")
        ax.set_ylabel(r"$\Delta_{c} / 2\pi$ (kHz)")
    fig.suptitle(recipe.style.get("title", "Coherence spectrum across the transition"))
    return fig


def _fig_dynamics(recipe: FigureRecipe):
    table = read_table(recipe.inputs["dynamics"])
    table.require("delta_rel", "t_us", "x", "y", "source")
    rel = table.numeric("delta_rel")
    t = table.numeric("t_us")
    source = table.strings("source")
    fig, axes = plt.subplots(2, 1, figsize=(4.2, 4.6), sharex=True,
                             constrained_layout=True)
    rels = sorted(set(rel))
    cmap = plt.get_cmap(recipe.style.get("cmap", "viridis"))
    for comp, ax in zip(("x", "y"), axes):
        vals = table.numeric(comp)
        for i, r in enumerate(rels):
            color = cmap(i / max(len(rels) - 1, 1) * 0.9)
            for src, style in (("full", "-"), ("effective", "--")):
                mask = (rel == r) & (source == src)
                if not np.any(mask):
                    continue
                label = f"{r:g}" if comp == "x" and src == "full" else None
                ax.plot(t[mask], vals[mask], style, color=color, label=label)
        ax.set_ylabel(rf"$\langle {comp.upper()} \rangle$")
    axes[1].set_xlabel(r"t ($\mu$s)")
    axes[0].legend(title=r"$\Delta / \Delta_{c}$", fontsize=7, ncol=2)
    fig.suptitle(recipe.style.get(
        "title", "Bloch traces: full (solid) vs reduced (dashed)"))
    return fig


def _fig_phase_diff(recipe: FigureRecipe):
    table = read_table(recipe.inputs["phase_diff"])
    table.require("delta_rel", "phi_rho3", "phi_rho4")
    rel = table.numeric("delta_rel")
    fig, ax = plt.subplots(figsize=(3.6, 2.8), constrained_layout=True)
    ax.plot(rel, table.numeric("phi_rho3"), "-", color="#1f77b4",
            label=r"$\varphi(\rho_3)$")
    ax.plot(rel, table.numeric("phi_rho4"), "--", color="#ff7f0e",
            label=r"$\varphi(\rho_4)$")
    if "phi_arcsin_law" in table.columns:
        ax.plot(rel, table.numeric("phi_arcsin_law"), ":", color="#444444",
                linewidth=1.0, label="arcsin law")
    for edge in (-1.0, 1.0):
        ax.axvline(edge, color="#2ca02c", linestyle="--", linewidth=1.0)
    ax.set_yticks([0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi])
    ax.set_yticklabels(["0", r"$\pi/4$", r"$\pi/2$", r"$3\pi/4$", r"$\pi$"])
    ax.set_xlabel(r"$\Delta / \Delta_{c}$")
    ax.set_ylabel(r"$\varphi$")
    ax.legend(fontsize=8)
    fig.suptitle(recipe.style.get("title", "Coherence phase difference"))
    return fig


def _fig_snapshots(recipe: FigureRecipe):
    table = read_table(recipe.inputs["trajectory"])
    table.require("delta_rel", "t_us", "x", "y", "source")
    panels = [read_wigner(p) for p in recipe.inputs["wigners"]]
    if not panels:
        raise SchemaError("snapshots recipe needs at least one wigner input")
    for panel in panels:
        for key in ("delta_rel", "t_us"):
            if key not in panel.meta:
                raise SchemaError(f"{panel.path}: missing metadata {key!r}")
    rels = sorted({float(p.meta["delta_rel"]) for p in panels})
    per_rel = {r: sorted((p for p in panels if float(p.meta["delta_rel"]) == r),
                         key=lambda p: float(p.meta["t_us"])) for r in rels}
    ncols = max(len(v) for v in per_rel.values())
    nrows = len(rels)
    fig = plt.figure(figsize=(1.9 * (ncols + 1.6), 2.0 * nrows),
                     constrained_layout=True)
    grid = fig.add_gridspec(nrows, ncols + 1, width_ratios=[1.7] + [1.0] * ncols)
    rel_col = table.numeric("delta_rel")
    src = table.strings("source")
    mesh = None
    for i, r in enumerate(rels):
        ax = fig.add_subplot(grid[i, 0])
        mask = (rel_col == r) & (src == "full")
        ax.plot(table.numeric("x")[mask], table.numeric("y")[mask],
                color="#1f77b4", linewidth=1.0)
        ax.set_xlim(-1.05, 1.05)
        ax.set_ylim(-1.05, 1.05)
        ax.set_aspect("equal")
        ax.set_xlabel(r"$\langle X \rangle$")
        ax.set_ylabel(r"$\langle Y \rangle$")
        ax.set_title(rf"$\Delta = {r:g}\,\Delta_c$", fontsize=8)
        for j, panel in enumerate(per_rel[r]):
            axw = fig.add_subplot(grid[i, j + 1])
            mesh = axw.pcolormesh(panel.x, panel.p, panel.values,
                                  cmap="RdBu_r", vmin=-WIGNER_LIMIT,
                                  vmax=WIGNER_LIMIT, rasterized=True)
            axw.set_aspect("equal")
            axw.set_xticks([])
            axw.set_yticks([])
            axw.grid(False)
            axw.set_title(rf"{float(panel.meta['t_us']):.1f} $\mu$s", fontsize=7)
    if mesh is not None:
        fig.colorbar(mesh, ax=fig.axes, shrink=0.7, label=r"$W$")
    fig.suptitle(recipe.style.get(
        "title", "Trajectories and phase-space snapshots"))
    return fig


def _fig_fidelity_map(recipe: FigureRecipe):
    table = read_table(recipe.inputs["fidelity_map"])
    table.require("delta_rel", "t_us", "fidelity")
    rel = table.numeric("delta_rel")
    t = table.numeric("t_us")
    f = table.numeric("fidelity")
    rels = np.unique(rel)
    times = np.unique(t)
    grid = np.full((rels.size, times.size), np.nan)
    for rv, tv, fv in zip(rel, t, f):
        grid[np.searchsorted(rels, rv), np.searchsorted(times, tv)] = fv
    if np.any(np.isnan(grid)):
        raise SchemaError(f"{table.path}: detuning-time grid is not complete")
    fig, ax = plt.subplots(figsize=(4.0, 3.0), constrained_layout=True)
    mesh = ax.pcolormesh(times, rels, grid, cmap="viridis", rasterized=True)
    fig.colorbar(mesh, ax=ax, label=r"$F(\rho_{\mathrm{full}}, \rho_{\mathrm{reduced}})$")
    ax.set_xlabel(r"t ($\mu$s)")
    ax.set_ylabel(r"$\Delta / \Delta_{c}$")
    fig.suptitle(recipe.style.get("title", "Full-vs-reduced fidelity"))
    return fig


FIGURE_KINDS = {
    "spectrum": _fig_spectrum,
    "dynamics": _fig_dynamics,
    "phase_diff": _fig_phase_diff,
    "snapshots": _fig_snapshots,
    "fidelity_map": _fig_fidelity_map,
}
