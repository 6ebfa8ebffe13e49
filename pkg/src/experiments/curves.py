"""
Learning Curves - Per-epoch metric records and their CSV form
"""
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

from src.utils.errors import NonFiniteError

# Column sets written by each trainer
RBM_COLUMNS = ("pll", "dr_value")
DNN_COLUMNS = ("effective_alpha", "dr_value", "cost", "test_error")
VAE_COLUMNS = ("elbo", "reconstruction", "kl", "dr_value")


@dataclass
class LearningCurve:
    """Rows of (epoch, metric name -> value) with a fixed column order"""
    columns: Sequence[str]
    epochs: List[int] = field(default_factory=list)
    rows: List[Dict[str, float]] = field(default_factory=list)

    def append(self, epoch: int, **metrics: float):
        """
        Add one epoch

        Raises:
            ValueError: epoch not strictly increasing or columns differ
            NonFiniteError: a metric is NaN or infinite
        """
        if self.epochs and epoch <= self.epochs[-1]:
            raise ValueError(f"epoch {epoch} does not follow epoch {self.epochs[-1]}")
        if set(metrics) != set(self.columns):
            raise ValueError(f"expected metrics {sorted(self.columns)}, got {sorted(metrics)}")
        row = {}
        for name in self.columns:
            value = float(metrics[name])
            if not math.isfinite(value):
                raise NonFiniteError(f"metric {name} is {value} at epoch {epoch}")
            row[name] = value
        self.epochs.append(int(epoch))
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> List[float]:
        return [row[name] for row in self.rows]

    def last(self) -> Dict[str, float]:
        return dict(self.rows[-1]) if self.rows else {}

    def to_csv(self, path: str | Path):
        """Write header plus one row per epoch; floats use repr so reruns match byte for byte"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["epoch", *self.columns])
            for epoch, row in zip(self.epochs, self.rows):
                writer.writerow([epoch, *(repr(row[name]) for name in self.columns)])

    @classmethod
    def from_csv(cls, path: str | Path) -> "LearningCurve":
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader)
            curve = cls(columns=tuple(header[1:]))
            for record in reader:
                curve.append(int(record[0]), **{
                    name: float(value) for name, value in zip(curve.columns, record[1:])
                })
        return curve
