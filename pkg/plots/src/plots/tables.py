"""Markdown delay table from a sweep CSV."""

from .sweep import EmptySweep, SweepTable


def _fmt(v):
    if v is None:
        return "-"
    if v >= 1000:
        return f"{v:.3g}"
    return f"{v:.1f}"


def render_table(sweep_csv, out_path=None):
    """One row per rate, one column per configuration, cells = mean delay.

    Cell values are means across seeds of the CSV's own measurements,
    nothing is recomputed.  Raises before writing on schema problems or
    an empty table.  Returns the markdown text; writes it when out_path
    is given.
    """
    table = SweepTable.from_csv(sweep_csv)
    if len(table) == 0:
        raise EmptySweep("sweep has no data rows")

    configs = table.configs()
    lines = [
        "| lambda | " + " | ".join(configs) + " |",
        "|---" * (1 + len(configs)) + "|",
    ]
    for lam in table.lambdas():
        cells = [_fmt(table.mean_delay(c, lam)) for c in configs]
        lines.append(f"| {lam:g} | " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("Mean delay in slots across seeds, measured by this repository's simulator.")
    text = "\n".join(lines) + "\n"
    if out_path is not None:
        with open(out_path, "w") as fh:
            fh.write(text)
    return text
