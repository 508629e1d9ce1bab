"""Render figures from the CSV output of the sudler command line.

A pure CSV-to-image mapping: nothing is recomputed here, so the numbers
in every plot come from exactly one source.  Input must be schema-1 CSV
as emitted by the primary package; files with a different schema line or
unexpected columns are refused before any output file is created.
Rendering is deterministic for fixed input (fixed style, no timestamps
embedded).

Three kinds of figure are supported:

- ``limit_curve``: limit-function values over a perturbation grid, with
  the eps = 0 intercept marked and a y = 1 reference line.
- ``scan_heatmap``: the constants of a length-two period scan on the
  (a1, a2) digit grid, with the cells whose constant lies below 1
  marked so the threshold boundary is visible.
- ``convergence``: a product trajectory, either plain P_N or sampled at
  convergent denominators.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

SCHEMA_LINE = "# schema=1"
KINDS = ("limit_curve", "scan_heatmap", "convergence")
HEADERS = {
    "limit_curve": (("eps", "value", "T", "tail_bound", "flags"),),
    "scan_heatmap": (("digits", "k_max", "q_ell", "C_kmax", "upper_bound",
                      "verdict"),),
    "convergence": (("m", "q_n", "P", "logP"), ("N", "P", "logP")),
}
BELOW_ONE_VERDICTS = {"certified_lt_1", "lt_1_numeric"}

STYLE = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "sudler-figures",
}


class FigureError(ValueError):
    """The input CSV cannot be rendered."""


@dataclass(frozen=True)
class FigureJob:
    """One rendering request: an input CSV, a kind, and an output path."""

    input_csv: Path
    kind: str
    title: str
    output: Path


def read_schema_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    """Parse a schema-1 CSV into (header, data rows).

    Comment lines after the first (such as verdict-count footers) are
    skipped.  Raises FigureError on a missing file, a wrong schema line,
    or an input without data rows.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FigureError(f"cannot read {path}: {exc}")
    lines = text.splitlines()
    if not lines or lines[0].strip() != SCHEMA_LINE:
        raise FigureError(
            f"schema mismatch in {path}: first line must be {SCHEMA_LINE!r}"
        )
    payload = [ln for ln in lines[1:] if ln and not ln.startswith("#")]
    if not payload:
        raise FigureError(f"no header row in {path}")
    reader = csv.reader(payload)
    header = next(reader)
    rows = list(reader)
    if not rows:
        raise FigureError(f"empty input: {path} has no data rows")
    return header, rows


def _check_header(kind: str, header: list[str]) -> tuple[str, ...]:
    for allowed in HEADERS[kind]:
        if tuple(header) == allowed:
            return allowed
    expected = " or ".join(",".join(h) for h in HEADERS[kind])
    raise FigureError(
        f"unexpected columns for {kind}: got {','.join(header)}, "
        f"expected {expected}"
    )


def _floats(rows: list[list[str]], index: int, what: str) -> list[float]:
    out = []
    for row in rows:
        try:
            out.append(float(row[index]))
        except (IndexError, ValueError):
            raise FigureError(f"bad {what} value in row {row!r}")
    return out


def _draw_limit_curve(ax, rows: list[list[str]], title: str) -> None:
    eps = _floats(rows, 0, "eps")
    values = _floats(rows, 1, "value")
    order = sorted(range(len(eps)), key=lambda i: eps[i])
    ax.plot([eps[i] for i in order], [values[i] for i in order],
            color="#1f77b4", lw=1.6, label="limit value")
    ax.axhline(1.0, color="#d62728", ls="--", lw=1.0, label="y = 1")
    for i in order:
        if eps[i] == 0.0:
            ax.plot([0.0], [values[i]], marker="o", ms=6, color="#000000",
                    zorder=5)
            ax.annotate(f"{values[i]:.6f}", (0.0, values[i]),
                        textcoords="offset points", xytext=(6, 6),
                        fontsize=9)
            break
    ax.set_xlabel("eps")
    ax.set_ylabel("limit value")
    ax.set_title(title)
    ax.legend(loc="best")


def _draw_scan_heatmap(ax, rows: list[list[str]], title: str):
    pairs = []
    for row in rows:
        parts = row[0].split("-")
        if len(parts) != 2:
            raise FigureError(
                f"scan heatmap needs length-two periods, got {row[0]!r}"
            )
        try:
            a1, a2 = int(parts[0]), int(parts[1])
        except ValueError:
            raise FigureError(f"bad digits cell {row[0]!r}")
        pairs.append((a1, a2))
    values = _floats(rows, 3, "C_kmax")
    verdicts = [row[5] for row in rows]
    a1s = sorted({p[0] for p in pairs})
    a2s = sorted({p[1] for p in pairs})
    grid = np.full((len(a1s), len(a2s)), np.nan)
    below = []
    for (a1, a2), value, verdict in zip(pairs, values, verdicts):
        i, j = a1s.index(a1), a2s.index(a2)
        grid[i, j] = value
        if verdict in BELOW_ONE_VERDICTS:
            below.append((j, i))
    image = ax.imshow(np.ma.masked_invalid(grid), origin="lower",
                      cmap="viridis", aspect="equal")
    if below:
        ax.scatter([b[0] for b in below], [b[1] for b in below],
                   marker="o", s=40, color="#ffffff", edgecolors="#000000",
                   zorder=3, label="C < 1")
        ax.legend(loc="upper left")
    ax.set_xticks(range(len(a2s)), [str(a) for a in a2s])
    ax.set_yticks(range(len(a1s)), [str(a) for a in a1s])
    ax.set_xlabel("a2")
    ax.set_ylabel("a1")
    ax.set_title(title)
    ax.grid(False)
    return image


def _draw_convergence(ax, header: tuple[str, ...], rows: list[list[str]],
                      title: str) -> None:
    if header[0] == "m":
        x = _floats(rows, 1, "q_n")
        y = _floats(rows, 2, "P")
        ax.set_xscale("log")
        ax.set_xlabel("q_n")
    else:
        x = _floats(rows, 0, "N")
        y = _floats(rows, 1, "P")
        ax.set_xlabel("N")
    ax.plot(x, y, color="#2ca02c", lw=1.2, marker=".", ms=4)
    ax.set_ylabel("P")
    ax.set_title(title)


def build_figure(job: FigureJob):
    """Validate the input and build the figure without saving it."""
    if job.kind not in KINDS:
        raise FigureError(f"unknown kind {job.kind!r}, expected one of "
                          + ", ".join(KINDS))
    header, rows = read_schema_csv(job.input_csv)
    allowed = _check_header(job.kind, header)
    title = job.title or f"{job.kind}: {Path(job.input_csv).stem}"
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        try:
            if job.kind == "limit_curve":
                _draw_limit_curve(ax, rows, title)
            elif job.kind == "scan_heatmap":
                image = _draw_scan_heatmap(ax, rows, title)
                fig.colorbar(image, ax=ax, label="C_kmax")
            else:
                _draw_convergence(ax, allowed, rows, title)
            fig.tight_layout()
        except FigureError:
            plt.close(fig)
            raise
    return fig


def render(job: FigureJob) -> Path:
    """Render one job to its output path and return that path."""
    fig = build_figure(job)
    try:
        suffix = Path(job.output).suffix.lower()
        if suffix not in (".png", ".svg"):
            raise FigureError(
                f"unsupported output format {suffix!r}, use .png or .svg"
            )
        with plt.rc_context(STYLE):
            fig.savefig(job.output, metadata={"Date": None}
                        if suffix == ".svg" else None)
    finally:
        plt.close(fig)
    return Path(job.output)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sudler-figures",
        description="Render a figure from sudler schema-1 CSV output.",
    )
    parser.add_argument("--input", required=True, help="Input CSV path.")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="Output image path "
                        "(.png or .svg).")
    parser.add_argument("--title", default="", help="Figure title.")
    args = parser.parse_args(argv)
    job = FigureJob(input_csv=Path(args.input), kind=args.kind,
                    title=args.title, output=Path(args.out))
    try:
        render(job)
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
