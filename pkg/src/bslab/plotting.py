"""PNG rendering of experiment rows (headless Agg backend)."""

from __future__ import annotations

import re
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from bslab.experiments import ExperimentResult, Row  # noqa: E402

MAX_LINES = 12


def _family(series: str) -> str:
    return series.split("|", 1)[0]


def _value(r: Row):
    if r.y is not None:
        return r.y, r.y_lo, r.y_hi
    return r.rate, r.ci_lo, r.ci_hi


def _slug(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.+-]+", "_", s).strip("_") or "series"


def _plot_family(name: str, rows: list[Row], path: Path, ylabel: str) -> None:
    lines: dict[str, list[Row]] = defaultdict(list)
    for r in rows:
        if _value(r)[0] is not None:
            lines[f"{r.series} {r.protocol}".strip()].append(r)
    if not lines:
        return
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    numeric = all(isinstance(r.x, (int, float)) for rs in lines.values() for r in rs)
    for i, (label, rs) in enumerate(list(lines.items())[:MAX_LINES]):
        ys = [_value(r) for r in rs]
        y = [v[0] for v in ys]
        err = [[v[0] - v[1] if v[1] is not None else 0 for v in ys],
               [v[2] - v[0] if v[2] is not None else 0 for v in ys]]
        if numeric:
            ax.errorbar([r.x for r in rs], y, yerr=err, marker="o", ms=3, capsize=2, label=label)
        else:
            width = 0.8 / min(len(lines), MAX_LINES)
            pos = [j + i * width for j in range(len(rs))]
            ax.bar(pos, y, width=width, yerr=err, label=label)
            ax.set_xticks([j for j in range(len(rs))], [str(r.x) for r in rs], rotation=45, fontsize=7)
    ax.set_title(name)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=6, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)


def render(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    """One PNG per series family; returns the files written."""
    out_dir = Path(out_dir)
    families: dict[str, list[Row]] = defaultdict(list)
    for r in result.rows:
        families[_family(r.series)].append(r)
    written = []
    for fam, rows in families.items():
        path = out_dir / f"{result.experiment}_{_slug(fam)}.png"
        ylabel = "value" if any(r.y is not None for r in rows) else "rate"
        _plot_family(f"{result.experiment}: {fam}", rows, path, ylabel)
        if path.exists():
            written.append(path)
    return written
