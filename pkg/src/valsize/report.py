"""Report containers and their text, JSON and CSV renderings.

Text mirrors the layout of published sample-size tables and rounds to three
decimals; JSON keeps every value at full precision with sorted keys, so the
same inputs give byte-identical output.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .measures import MeasureEstimate, MeasureKind, PerformanceAnticipation
from .results import CRITERION_LABELS, RILEY_CRITERIA, SampleSizePlan, SampleSizeResult
from .survival import SurvivalSimulation


def _f3(x) -> str:
    return "-" if x is None else f"{x:.3f}"


def _thr(t) -> str:
    return "-" if t is None else f"{t:g}"


def _n_events(r: Optional[SampleSizeResult]) -> str:
    if r is None:
        return "-"
    return f"{r.n}" if r.events is None else f"{r.n} ({r.events})"


def _table(header: List[str], rows: List[List[str]]) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    fmt = lambda cells: "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines)


def _anticipation_from_dict(d) -> PerformanceAnticipation:
    return PerformanceAnticipation(**d)


@dataclass
class BinaryReport:
    """One plan per target column (e.g. ciw=0.08, ciw=0.1, ciw=0.12)."""

    columns: List[str]
    plans: List[SampleSizePlan]
    anticipations: List[PerformanceAnticipation]
    provenance: Dict = field(default_factory=dict)
    mode: str = "binary"

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "provenance": self.provenance,
            "anticipated": [a.to_dict() for a in self.anticipations],
            "plans": [{"column": c, **p.to_dict()} for c, p in zip(self.columns, self.plans)],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            columns=[p["column"] for p in d["plans"]],
            plans=[SampleSizePlan.from_dict(p) for p in d["plans"]],
            anticipations=[_anticipation_from_dict(a) for a in d["anticipated"]],
            provenance=dict(d["provenance"]),
        )

    def text(self) -> str:
        out = []
        thresholds = [a.threshold for a in self.anticipations]
        phi = self.anticipations[0].prevalence
        out.append(f"Anticipated performance (outcome prevalence {phi:.3f})")
        out.append(_table(
            ["Measure"] + [f"p={_thr(t)}" for t in thresholds],
            [[k.label] + [_f3(a.value(k)) for a in self.anticipations] for k in MeasureKind],
        ))

        def find(plan, criterion, threshold):
            for r in plan.results:
                if r.criterion == criterion and r.threshold == threshold:
                    return r
            return None

        rows = []
        for k in MeasureKind:
            for a in self.anticipations:
                cells = [find(p, k.value, a.threshold) for p in self.plans]
                if all(c is None for c in cells):
                    continue
                rows.append([k.label, _thr(a.threshold), _f3(a.value(k))] + [_n_events(c) for c in cells])
        if rows:
            out.append("")
            out.append("Minimum sample size, N (events)")
            out.append(_table(["Measure", "Threshold", "Value"] + self.columns, rows))

        riley = [r for r in self.plans[0].results if r.criterion in RILEY_CRITERIA]
        if riley:
            out.append("")
            out.append("Established criteria")
            out.append(_table(
                ["Criterion", "Threshold", "Value", "Target", "N (events)"],
                [[CRITERION_LABELS[r.criterion], _thr(r.threshold), _f3(r.value),
                  r.target.column() if r.target else "-", _n_events(r)] for r in riley],
            ))

        out.append("")
        out.append("Overall minimum")
        out.append(_table(
            ["Target", "N (events)", "Driven by"],
            [[c, f"{p.n} ({p.events})", ", ".join(p.binding)] for c, p in zip(self.columns, self.plans)],
        ))
        return "\n".join(out) + "\n"

    def csv_rows(self) -> List[dict]:
        rows = []
        for c, p in zip(self.columns, self.plans):
            for r in p.results:
                if r.criterion in RILEY_CRITERIA and c != self.columns[0]:
                    continue  # identical in every column
                t = r.target
                rows.append({
                    "criterion": r.criterion,
                    "threshold": "" if r.threshold is None else r.threshold,
                    "value": "" if r.value is None else r.value,
                    "target_mode": t.mode.value if t else "",
                    "target": t.magnitude if t else "",
                    "n": r.n,
                    "events": "" if r.events is None else r.events,
                    "exact_n": "" if r.exact is None else r.exact,
                    "achieved_se": r.achieved_se,
                    "achieved_ciw": r.achieved_ciw,
                    "method": r.method,
                })
        return rows


@dataclass
class InverseRow:
    threshold: float
    estimate: MeasureEstimate

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, **self.estimate.to_dict()}


@dataclass
class InverseReport:
    """Expected estimate and 95% interval of each measure at a fixed n."""

    n: int
    rows: List[InverseRow]
    anticipations: List[PerformanceAnticipation]
    provenance: Dict = field(default_factory=dict)
    mode: str = "binary_inverse"

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n": self.n,
            "provenance": self.provenance,
            "anticipated": [a.to_dict() for a in self.anticipations],
            "rows": [r.to_dict() for r in self.rows],
        }

    @classmethod
    def from_dict(cls, d):
        rows = []
        for r in d["rows"]:
            r = dict(r)
            t = r.pop("threshold")
            rows.append(InverseRow(t, MeasureEstimate.from_dict(r)))
        return cls(d["n"], rows, [_anticipation_from_dict(a) for a in d["anticipated"]],
                   dict(d["provenance"]))

    def text(self) -> str:
        thresholds = [a.threshold for a in self.anticipations]
        by = {(r.threshold, r.estimate.kind): r.estimate for r in self.rows}
        body = []
        for k in MeasureKind:
            cells = []
            for t in thresholds:
                e = by.get((t, k))
                cells.append("-" if e is None else
                             f"{e.value:.3f} ({e.ci_low:.3f}, {e.ci_high:.3f}) w={e.width:.3f}")
            body.append([k.label] + cells)
        head = f"Expected estimate (95% CI) and interval width at N={self.n}"
        return head + "\n" + _table(["Measure"] + [f"p={_thr(t)}" for t in thresholds], body) + "\n"

    def csv_rows(self) -> List[dict]:
        return [{"measure": r.estimate.kind.value, "threshold": r.threshold, "n": self.n,
                 "value": r.estimate.value, "se": r.estimate.se, "ci_low": r.estimate.ci_low,
                 "ci_high": r.estimate.ci_high, "width": r.estimate.width,
                 "ci_method": r.estimate.ci_method.value} for r in self.rows]


@dataclass
class SurvivalReport:
    simulation: SurvivalSimulation
    provenance: Dict = field(default_factory=dict)
    mode: str = "survival"

    def to_dict(self) -> dict:
        return {"mode": self.mode, "provenance": self.provenance, **self.simulation.to_dict()}

    def text(self) -> str:
        sizes = self.simulation.sizes
        body = []
        for k in MeasureKind:
            cells = []
            for s in sizes:
                m = s.measures[k.value]
                cells.append(f"{m.mean_estimate:.3f} ({m.mean_ci_low:.3f}, {m.mean_ci_high:.3f}) "
                             f"w={m.mean_width:.3f}")
            body.append([k.label] + cells)
        body.append(["Repetitions used"] + [f"{s.completed} of {s.completed + s.degenerate}" for s in sizes])
        sc = self.simulation.scenario
        head = (f"Mean estimate (mean 95% CI) and mean interval width; horizon {sc.horizon:g}, "
                f"threshold {sc.threshold:g}")
        return head + "\n" + _table(["Measure"] + [f"N={s.n}" for s in sizes], body) + "\n"

    def csv_rows(self) -> List[dict]:
        rows = []
        for s in self.simulation.sizes:
            for name, m in s.measures.items():
                rows.append({"n": s.n, "measure": name, "threshold": self.simulation.scenario.threshold,
                             **m.to_dict(), "completed": s.completed, "degenerate": s.degenerate})
        return rows


@dataclass
class MeasuresReport:
    """Estimates from observed validation data at one or more thresholds."""

    thresholds: List[float]
    confusion: List[dict]
    estimates: List[List[MeasureEstimate]]
    provenance: Dict = field(default_factory=dict)
    mode: str = "measures"

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "provenance": self.provenance,
            "thresholds": [
                {"threshold": t, "confusion": cm, "estimates": [e.to_dict() for e in ests]}
                for t, cm, ests in zip(self.thresholds, self.confusion, self.estimates)
            ],
        }

    def text(self) -> str:
        out = []
        for t, cm, ests in zip(self.thresholds, self.confusion, self.estimates):
            out.append(f"Threshold {t:g}: TP={cm['tp']:.3f} FP={cm['fp']:.3f} "
                       f"FN={cm['fn']:.3f} TN={cm['tn']:.3f}")
            out.append(_table(
                ["Measure", "Estimate", "95% CI", "Width"],
                [[e.kind.label, _f3(e.value), f"({e.ci_low:.3f}, {e.ci_high:.3f})", _f3(e.width)]
                 for e in ests],
            ))
            out.append("")
        return "\n".join(out)

    def csv_rows(self) -> List[dict]:
        rows = []
        for t, ests in zip(self.thresholds, self.estimates):
            for e in ests:
                rows.append({"measure": e.kind.value, "threshold": t, **e.to_dict()})
                rows[-1].pop("kind")
        return rows


def to_json(report) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def to_csv(rows: List[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def emit_report(report, fmt: str = "text") -> str:
    if fmt == "text":
        return report.text()
    if fmt == "json":
        return to_json(report)
    if fmt == "csv":
        return to_csv(report.csv_rows())
    raise ValueError(f"unknown format {fmt!r}")
