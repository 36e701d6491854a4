"""Figure rendering for the report paths of the command line tool.

Rendering must be byte-reproducible, so the Agg backend is forced before
pyplot loads and the writer metadata that would embed a library version is
stripped on save.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .barring import PeriodRecord  # noqa: E402

DPI = 150


def save_figure(fig: plt.Figure, path: Path) -> None:
    fig.savefig(
        path,
        dpi=DPI,
        bbox_inches="tight",
        metadata={"Software": None},
    )
    plt.close(fig)


def curve_figure(
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    xlabel: str,
    ylabel: str,
    title: str,
) -> plt.Figure:
    """One axis, one line per (label, x, y) series."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, x, y in series:
        ax.plot(x, y, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if len(series) > 1:
        ax.legend()
    return fig


def sweep_figure(
    l_values: Sequence[int],
    channel_loads: Sequence[float],
    norm_throughputs: Sequence[float],
) -> plt.Figure:
    """Optimal operating point against the level count, two panels."""
    fig, (ax_load, ax_t) = plt.subplots(1, 2, figsize=(10, 4))
    ax_load.plot(l_values, channel_loads, marker="o")
    ax_load.set_xlabel("power levels")
    ax_load.set_ylabel("optimal packets per channel")
    ax_load.grid(True, alpha=0.3)
    ax_t.plot(l_values, norm_throughputs, marker="o")
    ax_t.set_xlabel("power levels")
    ax_t.set_ylabel("max normalized throughput")
    ax_t.grid(True, alpha=0.3)
    fig.suptitle("Optimal load and throughput versus level count")
    return fig


def gain_figure(l_values: Sequence[int], gains: Sequence[float]) -> plt.Figure:
    """Throughput gain over the single-level baseline, with the y = x bound."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(l_values, gains, marker="o", label="gain")
    ax.plot(
        l_values,
        list(l_values),
        linestyle="--",
        color="gray",
        label="level count",
    )
    ax.set_xlabel("power levels")
    ax.set_ylabel("peak throughput gain")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return fig


def barring_figure(records: Sequence[PeriodRecord]) -> plt.Figure:
    """Closed-loop run: populations and access probability over periods."""
    periods = [r.period for r in records]
    fig, (ax_u, ax_p) = plt.subplots(
        2, 1, figsize=(8, 6), sharex=True, height_ratios=[2, 1]
    )
    ax_u.step(
        periods,
        [r.users_total for r in records],
        where="post",
        label="contending",
    )
    ax_u.step(
        periods,
        [r.users_active for r in records],
        where="post",
        label="admitted",
    )
    ax_u.set_ylabel("stations")
    ax_u.grid(True, alpha=0.3)
    ax_u.legend()
    ax_p.step(
        periods, [r.p_access for r in records], where="post", color="tab:red"
    )
    ax_p.set_ylim(0.0, 1.05)
    ax_p.set_xlabel("observation period")
    ax_p.set_ylabel("access probability")
    ax_p.grid(True, alpha=0.3)
    fig.suptitle("Adaptive barring against a staged population")
    return fig
