"""Static SVG figures and per-event value tables built from the pipeline CSVs."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import matplotlib
from matplotlib.figure import Figure

from gvdep.evaluation import AblationResult
from gvdep.labeling import TARGETS
from gvdep.valuation import TeamReport

SVG_HASH_SALT = "gvdep"


class EmptySeries(ValueError):
    pass


class UnknownMatch(KeyError):
    pass


@dataclass(frozen=True)
class Panel:
    title: str
    xlabel: str
    ylabel: str
    x: tuple = ()        # scatter x, histogram bin values, box-plot categories
    y: tuple = ()        # scatter y, histogram counts, box-plot samples (tuple per category)
    labels: tuple = ()   # scatter point annotations
    mean_lines: bool = False


@dataclass(frozen=True)
class PlotSpec:
    kind: str  # boxplot | scatter | histogram
    panels: tuple[Panel, ...]
    title: str = ""


def _check(spec: PlotSpec) -> None:
    if spec.kind not in ("boxplot", "scatter", "histogram"):
        raise ValueError(f"unknown plot kind {spec.kind!r}")
    if not spec.panels:
        raise EmptySeries("no panels")
    for p in spec.panels:
        if not p.y or (spec.kind == "boxplot" and any(len(s) == 0 for s in p.y)):
            raise EmptySeries(f"panel {p.title!r} has no data")
        if spec.kind != "boxplot" and len(p.x) != len(p.y):
            raise ValueError(f"panel {p.title!r}: x and y lengths differ")


def render(spec: PlotSpec, out_path) -> Path:
    """Write ``spec`` as SVG. Output bytes depend only on the spec."""
    _check(spec)
    ncols = 2 if len(spec.panels) > 1 else 1
    nrows = (len(spec.panels) + ncols - 1) // ncols
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig = Figure(figsize=(5.0 * ncols, 4.0 * nrows))
        axes = fig.subplots(nrows, ncols, squeeze=False).ravel()
        for ax, p in zip(axes, spec.panels):
            if spec.kind == "boxplot":
                ax.boxplot([list(s) for s in p.y], whis=1.5, showmeans=True, sym="x")
                ax.set_xticks(range(1, len(p.x) + 1), [str(c) for c in p.x])
            elif spec.kind == "scatter":
                ax.scatter(p.x, p.y, s=18, color="black")
                for xi, yi, lab in zip(p.x, p.y, p.labels):
                    ax.annotate(str(lab), (xi, yi), fontsize=7, xytext=(3, 3), textcoords="offset points")
                if p.mean_lines:
                    ax.axvline(sum(p.x) / len(p.x), color="grey", lw=0.8)
                    ax.axhline(sum(p.y) / len(p.y), color="grey", lw=0.8)
            else:
                ax.bar(p.x, p.y, width=0.8, color="grey")
            ax.set_title(p.title)
            ax.set_xlabel(p.xlabel)
            ax.set_ylabel(p.ylabel)
        for ax in axes[len(spec.panels):]:
            ax.set_visible(False)
        if spec.title:
            fig.suptitle(spec.title)
        fig.tight_layout()
        out_path = Path(out_path)
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    return out_path


# -- spec builders -----------------------------------------------------------

def ablation_plot(result: AblationResult, title: str = "") -> PlotSpec:
    """One box-plot panel per target: F1 across folds for each n_nearest."""
    panels = []
    for letter, target in zip("abcd", TARGETS):
        ns, mat = result.f1_matrix(target)
        if not ns:
            continue
        panels.append(Panel(f"({letter}) {target}", "n_nearest", "F1", tuple(ns),
                            tuple(tuple(float(v) for v in row) for row in mat)))
    return PlotSpec("boxplot", tuple(panels), title)


def team_scatter(reports: Sequence[TeamReport], value_field: str = "g_vdep_value",
                 title: str = "") -> PlotSpec:
    """Four team panels: gain vs attacked, value vs concedes, value vs attacked, gain vs concedes."""
    names = tuple(r.team_name for r in reports)
    col = lambda f: tuple(float(getattr(r, f)) for r in reports)
    gain, attacked, value, concedes = col("gain_value"), col("attacked_value"), col(value_field), col("concedes")
    return PlotSpec("scatter", (
        Panel("(a)", "gain_value", "attacked_value", gain, attacked, names, True),
        Panel("(b)", value_field, "concedes", value, concedes, names, True),
        Panel("(c)", value_field, "attacked_value", value, attacked, names, True),
        Panel("(d)", "gain_value", "concedes", gain, concedes, names, True),
    ), title)


def player_count_histogram(hist: dict[int, int], title: str = "") -> PlotSpec:
    xs = tuple(range(0, max(hist, default=-1) + 1))
    return PlotSpec("histogram", (Panel("", "players in frame", "events", xs,
                                        tuple(hist.get(x, 0) for x in xs)),), title)


# -- per-event table ---------------------------------------------------------

@dataclass(frozen=True)
class EventRow:
    state_index: int
    event_id: str
    team: int
    player: str
    action: str
    v_gvdep: float


def event_table(valuation_csv, match_id: int, state_range: tuple[int, int]) -> list[EventRow]:
    """Rows of ``match_id`` with ``start <= state_index < stop``."""
    start, stop = state_range
    seen = False
    rows = []
    with open(valuation_csv, newline="") as fh:
        for r in csv.DictReader(fh):
            if int(r["match_id"]) != match_id:
                continue
            seen = True
            i = int(r["state_index"])
            if start <= i < stop:
                rows.append(EventRow(i, r["event_id"], int(r["acting_team"]), r["player"],
                                     r["action_type"], float(r["v_gvdep"])))
    if not seen:
        raise UnknownMatch(match_id)
    return rows


def format_event_table(rows: Sequence[EventRow]) -> str:
    out = [f"{'state':>6}  {'team':>6}  {'player':<28} {'action':<16} {'v_gvdep':>9}"]
    for r in rows:
        out.append(f"{r.state_index:>6}  {r.team:>6}  {r.player[:28]:<28} {r.action:<16} {r.v_gvdep:>9.3f}")
    return "\n".join(out)
