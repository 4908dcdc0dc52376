"""Figure rendering for report commands.

Figures are always written to files; matplotlib is imported lazily with the
Agg backend so the library stays usable headless and without matplotlib
unless a plot is requested.
"""

from __future__ import annotations

from typing import Sequence


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_counterexample(rows: Sequence, path: str) -> None:
    """Distance trends versus copy count for the counterexample family."""
    plt = _pyplot()
    ms = [row.m for row in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(ms, [row.global_dist for row in rows], "o-", label="global one-norm")
    ax.plot(ms, [row.f_formula for row in rows], "x--", label="closed form")
    ax.plot(ms, [row.marginal_dist for row in rows], "s-", label="marginal distance")
    ax.plot(ms, [row.correlation for row in rows], "d-", label="correlation")
    if rows:
        limit = 2.0 * (1.0 - rows[0].delta / 2.0)
        ax.axhline(limit, color="gray", lw=0.8, ls=":", label=f"limit {limit:g}")
    ax.set_xlabel("copies m")
    ax.set_ylabel("distance")
    ax.set_title(f"good local, bad global (eps={rows[0].eps:g}, delta={rows[0].delta:g})")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_measure_sweep(rows: Sequence[dict], path: str) -> None:
    """Measure values before/after sampled covariant channels."""
    plt = _pyplot()
    names = sorted({row["measure"] for row in rows})
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name in names:
        sub = [row for row in rows if row["measure"] == name]
        ax.plot(
            [row["trial"] for row in sub],
            [row["value_out"] for row in sub],
            "o-",
            label=f"{name} after",
            ms=3,
        )
        if sub:
            ax.axhline(sub[0]["value_in"], lw=0.8, ls="--")
    ax.set_xlabel("trial")
    ax.set_ylabel("measure value")
    ax.set_title("monotonicity sweep (dashed: input value)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
