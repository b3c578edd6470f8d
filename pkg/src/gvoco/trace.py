"""Per-round telemetry shared by learners, analysis and the harness."""

import csv
import math

import numpy as np

# Fixed leading CSV columns; scenario-specific groups follow.
BASE_COLUMNS = ("t", "loss", "cum_regret", "eta", "Lhat", "Ghat_running", "Vt_partial", "B")


class RoundTrace:
    """Ordered per-round records plus run-level metadata.

    Each record is a dict. Vector-valued entries (decisions, gradients) are
    kept as arrays and never written to CSV.
    """

    def __init__(self, meta=None):
        self.rows = []
        self.meta = dict(meta or {})

    def append(self, row):
        if self.rows and row["t"] <= self.rows[-1]["t"]:
            raise ValueError("rounds must be strictly increasing")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, i):
        return self.rows[i]

    def column(self, name):
        return np.array([row.get(name, np.nan) for row in self.rows], dtype=float)

    def stack(self, name):
        """Stack a vector-valued field into a ``(T, ...)`` array."""
        return np.array([row[name] for row in self.rows])

    def violations(self):
        """List of ``(t, invariant name)`` for every failed runtime check."""
        bad = []
        for row in self.rows:
            for name, ok in row.get("flags", {}).items():
                if not ok:
                    bad.append((row["t"], name))
        return bad

    def to_csv(self, path, extra_columns=()):
        """Write the fixed columns then ``extra_columns``; missing values are blank."""
        columns = list(BASE_COLUMNS) + [c for c in extra_columns if c not in BASE_COLUMNS]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in self.rows:
                writer.writerow([_fmt(row.get(c)) for c in columns])
        return columns


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return repr(float(value))
    return str(value)
