"""Delay-vs-rate figure from a sweep CSV."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .sweep import EmptySweep, SweepTable


def plot_delay_vs_lambda(sweep_csv, out_path, capacities=None, title=None):
    """Render mean delay against arrival rate, one curve per configuration.

    capacities: optional {config_label: rate} drawn as vertical dashed
    asymptote markers (delay diverges there, which is why the y axis is
    logarithmic: the interesting range spans several decades).
    Raises before any file is written on schema problems or an empty
    table.  Returns the figure.
    """
    table = SweepTable.from_csv(sweep_csv)
    if len(table) == 0:
        raise EmptySweep("sweep has no data rows")

    fig, ax = plt.subplots(figsize=(7, 4.5))
    colors = {}
    for config in table.configs():
        pts = [
            (lam, d)
            for lam in table.lambdas()
            if (d := table.mean_delay(config, lam)) is not None
        ]
        if not pts:
            continue
        xs, ys = zip(*pts)
        (line,) = ax.plot(xs, ys, marker="o", label=config)
        colors[config] = line.get_color()

    for config, cap in (capacities or {}).items():
        ax.axvline(
            float(cap),
            linestyle="--",
            linewidth=1,
            color=colors.get(config, "0.5"),
            alpha=0.7,
        )

    ax.set_yscale("log")
    ax.set_xlabel("arrival rate")
    ax.set_ylabel("mean delay (slots)")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return fig
