"""Tank level plot rendered next to levels.csv."""
from __future__ import annotations

import base64
import io
from typing import Callable, Sequence, Tuple

try:  # pragma: no cover - matplotlib optional
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except Exception:  # pragma: no cover - offline fallback
    plt = None

PLOTS_AVAILABLE = plt is not None

_FALLBACK_PNG = base64.b64decode(
    "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR4nGNgYGBgAAAABQABDQottAAAAABJRU5ErkJggg=="
)

LevelRow = Tuple[float, float, float, float]


def _render(plotter: Callable[[object], None]) -> bytes:
    if plt is None:
        return _FALLBACK_PNG
    fig, ax = plt.subplots(figsize=(9, 4))
    try:
        plotter(ax)
        buf = io.BytesIO()
        fig.savefig(buf, format="png", bbox_inches="tight", metadata={"Software": None})
        return buf.getvalue()
    finally:  # pragma: no cover - cleanup
        plt.close(fig)


def plot_levels(rows: Sequence[LevelRow], *, title: str = "Tank levels") -> bytes:
    if not rows:
        return _FALLBACK_PNG

    def _plot(ax) -> None:
        hours = [row[0] / 3600.0 for row in rows]
        ax.plot(hours, [row[1] for row in rows], label="T1 (LIT101)")
        ax.plot(hours, [row[2] for row in rows], label="T2 (LIT201)")
        ax.plot(hours, [row[3] for row in rows], label="output (LIT601)")
        ax.axhline(1000.0, color="grey", linestyle="--", linewidth=0.8)
        ax.set_title(title)
        ax.set_xlabel("Time [h]")
        ax.set_ylabel("Level [cm]")
        ax.legend(loc="upper left")

    return _render(_plot)


__all__ = ["PLOTS_AVAILABLE", "plot_levels"]
