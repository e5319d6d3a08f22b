"""Lossless view of a dagcast sweep CSV.

The schema is the interface contract with the simulator package: one
row per (policy, tree subset, rate, seed) with measured metrics.  This
module only parses and aggregates; it never recomputes a metric.
"""

import csv
import io
from dataclasses import dataclass

# frozen copy of the producer's column order
SWEEP_HEADER = (
    "policy",
    "trees",
    "lambda",
    "seed",
    "min_rate",
    "avg_delay",
    "delivered",
    "deadlock",
)


class PlotsError(Exception):
    pass


class SchemaError(PlotsError):
    pass


class EmptySweep(PlotsError):
    pass


@dataclass(frozen=True)
class SweepRow:
    policy: str
    trees: str  # tree count as written, "" for policies without trees
    lam: float
    seed: int
    min_rate: float
    avg_delay: float | None  # None when nothing was delivered
    delivered: int
    deadlock: bool
    raw: tuple  # the csv cells exactly as read

    @property
    def config(self) -> str:
        """Curve / column label: policy name plus tree count when present."""
        return f"{self.policy}:{self.trees}" if self.trees else self.policy


class SweepTable:
    def __init__(self, rows):
        self.rows = tuple(rows)

    @classmethod
    def from_csv(cls, source) -> "SweepTable":
        if hasattr(source, "read"):
            reader = csv.reader(source)
        else:
            with open(source, newline="") as fh:
                return cls.from_csv(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise SchemaError("no header row") from None
        if header != SWEEP_HEADER:
            missing = [c for c in SWEEP_HEADER if c not in header]
            extra = [c for c in header if c not in SWEEP_HEADER]
            raise SchemaError(
                f"header mismatch: missing {missing or 'none'}, unexpected {extra or 'none'}"
            )
        rows = []
        for cells in reader:
            if not cells:
                continue
            if len(cells) != len(SWEEP_HEADER):
                raise SchemaError(f"row has {len(cells)} cells, expected {len(SWEEP_HEADER)}")
            policy, trees, lam, seed, min_rate, avg_delay, delivered, deadlock = cells
            try:
                rows.append(
                    SweepRow(
                        policy=policy,
                        trees=trees,
                        lam=float(lam),
                        seed=int(seed),
                        min_rate=float(min_rate),
                        avg_delay=None if avg_delay == "" else float(avg_delay),
                        delivered=int(delivered),
                        deadlock=bool(int(deadlock)),
                        raw=tuple(cells),
                    )
                )
            except ValueError as exc:
                raise SchemaError(f"bad cell in row {cells!r}: {exc}") from None
        return cls(rows)

    def to_csv_text(self) -> str:
        """Exact reserialization of what was read (round-trip check)."""
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(SWEEP_HEADER)
        for r in self.rows:
            w.writerow(r.raw)
        return buf.getvalue()

    def __len__(self):
        return len(self.rows)

    def configs(self):
        """Distinct (policy, trees) labels in first-appearance order."""
        seen = []
        for r in self.rows:
            if r.config not in seen:
                seen.append(r.config)
        return seen

    def lambdas(self):
        return sorted({r.lam for r in self.rows})

    def mean_delay(self, config: str, lam: float):
        """Mean avg_delay across seeds for one cell; None if no row has one."""
        vals = [
            r.avg_delay
            for r in self.rows
            if r.config == config and r.lam == lam and r.avg_delay is not None
        ]
        if not vals:
            return None
        return sum(vals) / len(vals)
