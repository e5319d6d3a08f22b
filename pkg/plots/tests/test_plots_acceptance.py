"""End-to-end acceptance: figures and tables over real simulator sweeps.

Sweeps are produced by invoking the simulator CLI as a subprocess, so
this suite touches the primary package only through its published CSV
interface (and the simulator's own test suite does not import this
package in return).

The delay curve on the 4-node relay graph must saturate at each
configuration's capacity: the single best tree at 3/4, the first two
trees at 6/7, all trees and the unrestricted policy at 1.  The knee is
asserted at CSV level as an order-of-magnitude delay jump across the
capacity, +-0.02.
"""

import subprocess
import sys
from fractions import Fraction as F

import pytest

from plots import SweepTable, plot_delay_vs_lambda, render_table

EPS = F(1, 50)
SLOTS = 40_000

# config label, capacity, extra CLI args
FIG5_CONFIGS = [
    ("pistar", F(1), ["--policy", "pistar"]),
    ("pitree:1", F(3, 4), ["--policy", "pitree", "--trees", "auto:1"]),
    ("pitree:2", F(6, 7), ["--policy", "pitree", "--trees", "auto:2"]),
    ("pitree:3", F(1), ["--policy", "pitree", "--trees", "auto"]),
]


def sweep(out, scenario, extra, lambdas, slots, seeds):
    cmd = [
        sys.executable, "-m", "dagcast", "sweep", scenario,
        "--lambdas", ",".join(str(l) for l in lambdas),
        "--seed", "11", "--seeds", str(seeds),
        "--slots", str(slots), "--out", str(out), "--append",
        *extra,
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


@pytest.fixture(scope="module")
def fig5_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweeps") / "fig5.csv"
    for _, cap, extra in FIG5_CONFIGS:
        sweep(out, "builtin:fig5", extra, [cap - EPS, cap + EPS], SLOTS, seeds=2)
    return out


@pytest.fixture(scope="module")
def dag10_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweeps") / "dag10.csv"
    lambdas = ["0.5", "0.9", "1.9", "2.3", "2.7", "3.1"]
    sweep(out, "builtin:dag10", ["--policy", "pistar"], lambdas, 4000, seeds=1)
    sweep(out, "builtin:dag10", ["--policy", "pitree", "--trees", "auto:1"],
          lambdas, 4000, seeds=1)
    return out


def test_c14_saturation_knees_and_renders(fig5_sweep, tmp_path):
    table = SweepTable.from_csv(fig5_sweep)
    assert table.configs() == [c for c, _, _ in FIG5_CONFIGS]
    for config, cap, _ in FIG5_CONFIGS:
        below = table.mean_delay(config, float(cap - EPS))
        above = table.mean_delay(config, float(cap + EPS))
        assert below is not None and above is not None, config
        assert below < above / 10, (config, below, above)

    out = tmp_path / "fig5_delay.png"
    fig = plot_delay_vs_lambda(
        fig5_sweep,
        out,
        capacities={c: float(cap) for c, cap, _ in FIG5_CONFIGS},
    )
    assert out.exists() and out.stat().st_size > 0
    # 4 measured curves, two points each, plus one asymptote marker per config
    curves = fig.axes[0].lines[:4]
    assert [ln.get_label() for ln in curves] == [c for c, _, _ in FIG5_CONFIGS]
    assert all(len(ln.get_xdata()) == 2 for ln in curves)
    assert len(fig.axes[0].lines) == 8


def test_c14_dag10_table(dag10_sweep, tmp_path):
    out = tmp_path / "dag10.md"
    text = render_table(dag10_sweep, out)
    lines = text.splitlines()
    assert lines[0] == "| lambda | pistar | pitree:1 |"
    data = [l for l in lines[2:] if l.startswith("| ")]
    assert len(data) == 6
    assert [l.split("|")[1].strip() for l in data] == [
        "0.5", "0.9", "1.9", "2.3", "2.7", "3.1",
    ]
    # the tree baseline saturates far below the unrestricted policy
    table = SweepTable.from_csv(dag10_sweep)
    assert table.mean_delay("pitree:1", 3.1) > 10 * table.mean_delay("pistar", 3.1)
    assert out.read_text() == text
