"""SVG line plots of an experiment (cumulative influence, learned-population error)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed hash salt and no timestamp keep the SVG bytes reproducible
plt.rcParams["svg.hashsalt"] = "evoim"


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_result(result, cfg, outdir) -> list[Path]:
    out = Path(outdir)
    written = []
    series: dict[str, list[tuple[int, int]]] = {}
    for m in result.rows:
        series.setdefault(m.algorithm, []).append((m.trial, m.influenced))
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, pts in series.items():
        pts.sort()
        total, ys = 0, []
        for _, v in pts:
            total += v
            ys.append(total)
        ax.plot([t for t, _ in pts], ys, marker="o", label=name)
    ax.set_xlabel("trial")
    ax.set_ylabel("cumulative influenced size")
    ax.legend()
    written.append(out / "influence.svg")
    _save(fig, written[-1])

    err = [(m.algorithm, m.trial, m.rel_error) for m in result.rows if m.rel_error is not None]
    if err:
        fig, ax = plt.subplots(figsize=(6, 4))
        for name in sorted({a for a, _, _ in err}):
            pts = sorted((t, e) for a, t, e in err if a == name)
            ax.semilogy([t for t, _ in pts], [e for _, e in pts], marker="o", label=name)
        ax.set_xlabel("trial")
        ax.set_ylabel("relative error of learned population")
        ax.legend()
        written.append(out / "rel_error.svg")
        _save(fig, written[-1])
    return written
