"""Machine-readable run reports, density profiles, and their figures.

Reports serialize through a canonical JSON writer: fixed field order,
compact separators, floats printed with 17 significant digits. 17 digits
pin down a double exactly, so parse followed by re-serialize is
byte-identical; tests and downstream tooling can diff reports textually.

The profile path writes the density samples as CSV (header
x1,...,xn,density) and, for one- and two-dimensional systems, renders a
matplotlib figure next to the CSV with the same base name. Rendering is
forced onto the Agg backend; no display is ever required.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .montecarlo import FLAG_NEWTON_NONCONVERGED, FLAG_TANGENCY_REFINED

_FLAG_NAMES = (
    (FLAG_TANGENCY_REFINED, "tangency-refined"),
    (FLAG_NEWTON_NONCONVERGED, "newton-nonconverged"),
)


def flag_names(bits: int) -> list[str]:
    out = [name for bit, name in _FLAG_NAMES if bits & bit]
    known = 0
    for bit, _ in _FLAG_NAMES:
        known |= bit
    if bits & ~known:
        out.append(f"unknown-0x{bits & ~known:x}")
    return out


def canonical_json(obj) -> str:
    """Compact JSON with insertion-order fields and .17g floats; idempotent
    under parse/re-serialize."""
    pieces: list[str] = []
    _emit(obj, pieces)
    return "".join(pieces)


def _emit(obj, pieces: list[str]) -> None:
    if obj is None:
        pieces.append("null")
    elif isinstance(obj, bool):
        pieces.append("true" if obj else "false")
    elif isinstance(obj, int):
        pieces.append(repr(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValidationError("reports must not contain NaN or infinity")
        # -0.0 would print as "-0", which parses back as the integer 0 and
        # re-serializes as "0"; fold the sign away so round trips are stable
        pieces.append(format(obj + 0.0, ".17g"))
    elif isinstance(obj, str):
        pieces.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (list, tuple)):
        pieces.append("[")
        for k, item in enumerate(obj):
            if k:
                pieces.append(",")
            _emit(item, pieces)
        pieces.append("]")
    elif isinstance(obj, dict):
        pieces.append("{")
        for k, (key, val) in enumerate(obj.items()):
            if k:
                pieces.append(",")
            if not isinstance(key, str):
                raise ValidationError("report keys must be strings")
            pieces.append(json.dumps(key, ensure_ascii=False))
            pieces.append(":")
            _emit(val, pieces)
        pieces.append("}")
    else:
        raise ValidationError(f"cannot serialize {type(obj).__name__} into a report")


@dataclass
class ReportEntry:
    """One named result; error None means the value is exact."""

    name: str
    value: object
    error: float | None = None
    extra: dict = field(default_factory=dict)

    def to_obj(self) -> dict:
        doc = {"name": self.name, "value": self.value}
        doc["error"] = "exact" if self.error is None else float(self.error)
        doc.update(self.extra)
        return doc


@dataclass
class RunReport:
    command: str
    config: dict
    results: list[ReportEntry]
    flags: list[str]
    seed: int | None
    wall_time_s: float

    def to_json(self) -> str:
        return canonical_json(
            {
                "command": self.command,
                "config": dict(sorted(self.config.items())),
                "results": [r.to_obj() for r in self.results],
                "flags": list(self.flags),
                "seed": self.seed,
                "wall_time_s": float(self.wall_time_s),
            }
        )


def write_profile_csv(path, X: np.ndarray, values: np.ndarray) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    values = np.asarray(values, dtype=np.float64)
    if X.shape[0] != values.shape[0]:
        raise ValidationError("profile points and values disagree in length")
    n = X.shape[1]
    header = ",".join([f"x{i + 1}" for i in range(n)] + ["density"])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row, v in zip(X, values):
            cells = [format(c, ".17g") for c in row] + [format(v, ".17g")]
            fh.write(",".join(cells) + "\n")


def render_profile_figure(csv_path, axes: list[np.ndarray], values: np.ndarray) -> str | None:
    """PNG next to the CSV; line plot for n=1, heatmap for n=2, none above."""
    n = len(axes)
    if n > 2:
        return None
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = str(Path(csv_path).with_suffix(".png"))
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    if n == 1:
        ax.plot(axes[0], values, lw=1.5)
        ax.set_xlabel("x1")
        ax.set_ylabel("density")
    else:
        grid = values.reshape(len(axes[0]), len(axes[1]))
        mesh = ax.pcolormesh(axes[0], axes[1], grid.T, shading="auto")
        fig.colorbar(mesh, ax=ax, label="density")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    ax.set_title("expected root density")
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)
    return out
