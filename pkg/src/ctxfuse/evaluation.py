"""Alpha sweeps over a dataset and table-style report rendering."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .context import ContextSpec
from .corpus import EntityLists, EvalRecord
from .estimator import JointDecoder
from .exceptions import DecodeError, EvaluationSetupError, InputError
from .metrics import CERReport, EditCounts, EntityScore, edit_alignment, entity_counts
from .models import ConditionalLM

CONTEXT_SETS = ("none", "gt", "common", "rare", "sensitive")
FORMATS = ("csv", "json", "markdown")
DEFAULT_GRID = (0.0, 0.3, 0.7, 1.0)
SUPPRESSION_GRID = (0.0, -0.1, -0.2, -0.5, -1.0)


@dataclass(frozen=True)
class SweepConfig:
    alpha_grid: tuple[float, ...] = DEFAULT_GRID
    mode: str = "greedy"
    beam_width: int = 4
    context_sets: tuple[str, ...] = ("rare",)
    score_sets: tuple[str, ...] = ("common", "rare")
    seed: int = 0

    def __post_init__(self):
        grid = tuple(float(a) for a in self.alpha_grid)
        if not grid:
            raise InputError("alpha_grid must be non-empty")
        if not all(math.isfinite(a) for a in grid):
            raise InputError("alpha_grid entries must be finite")
        if self.mode not in ("greedy", "beam"):
            raise InputError(f"unknown mode {self.mode!r}")
        if self.mode == "beam" and min(grid) < 0:
            raise InputError("beam mode requires every alpha >= 0")
        if self.beam_width < 1:
            raise InputError("beam_width must be positive")
        for name in self.context_sets:
            if name not in CONTEXT_SETS:
                raise InputError(f"unknown context set {name!r}; choose from {CONTEXT_SETS}")
        if not self.context_sets:
            raise InputError("at least one context set is required")
        object.__setattr__(self, "alpha_grid", grid)
        object.__setattr__(self, "context_sets", tuple(self.context_sets))
        object.__setattr__(self, "score_sets", tuple(self.score_sets))


@dataclass(frozen=True)
class Cell:
    """Metrics for one (context set, alpha) pair. ``entity`` values are ``(tp, n_hyp, n_ref)``."""

    context_set: str
    alpha: float
    counts: EditCounts | None
    ref_len: int
    entity: Mapping[str, tuple[int, int, int]] = field(default_factory=dict)
    error: str | None = None

    @property
    def rates(self) -> CERReport:
        return CERReport(self.counts, self.ref_len)

    def entity_score(self, name: str) -> EntityScore | None:
        counts = self.entity.get(name)
        if counts is None:
            return None
        try:
            return EntityScore.from_counts(*counts)
        except EvaluationSetupError:
            return None

    def to_dict(self) -> dict:
        c = self.counts
        return {
            "context_set": self.context_set,
            "alpha": self.alpha,
            "counts": None if c is None else [c.matches, c.substitutions, c.insertions, c.deletions],
            "ref_len": self.ref_len,
            "entity": {k: list(v) for k, v in self.entity.items()},
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Cell":
        return cls(
            context_set=d["context_set"],
            alpha=float(d["alpha"]),
            counts=None if d["counts"] is None else EditCounts(*d["counts"]),
            ref_len=int(d["ref_len"]),
            entity={k: tuple(v) for k, v in d["entity"].items()},
            error=d.get("error"),
        )


@dataclass(frozen=True)
class MetricsReport:
    cells: tuple[Cell, ...]
    score_sets: tuple[str, ...]
    metadata: Mapping[str, object] = field(default_factory=dict)

    def cell(self, context_set: str, alpha: float) -> Cell:
        for c in self.cells:
            if c.context_set == context_set and c.alpha == alpha:
                return c
        raise KeyError((context_set, alpha))

    @property
    def failed(self) -> list[Cell]:
        return [c for c in self.cells if c.error is not None]

    def to_dict(self) -> dict:
        return {
            "metadata": dict(self.metadata),
            "score_sets": list(self.score_sets),
            "cells": [c.to_dict() for c in self.cells],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MetricsReport":
        try:
            return cls(
                cells=tuple(Cell.from_dict(c) for c in d["cells"]),
                score_sets=tuple(d["score_sets"]),
                metadata=d.get("metadata", {}),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed results document: {exc!r}") from None


def _contexts(name: str, records: Sequence[EvalRecord], lists: EntityLists | None) -> list[ContextSpec]:
    if name == "none":
        return [ContextSpec()] * len(records)
    if name == "gt":
        return [ContextSpec(entities=r.context_entities) for r in records]
    if lists is None:
        raise InputError(f"context set {name!r} needs entity lists")
    shared = ContextSpec(entities=lists.get(name))
    return [shared] * len(records)


def _score_phrases(name: str, records: Sequence[EvalRecord], lists: EntityLists | None):
    if lists is not None and name in ("common", "rare", "sensitive"):
        return lists.get(name)
    # fall back to the tagged per-record phrases
    seen = {}
    for r in records:
        for phrase, tags in zip(r.context_entities, r.tags or ()):
            if name in tags:
                seen.setdefault(phrase, None)
    return tuple(seen)


def run_eval(
    records: Sequence[EvalRecord],
    model: ConditionalLM,
    sweep: SweepConfig,
    entity_lists: EntityLists | None = None,
    metadata: Mapping[str, object] | None = None,
) -> MetricsReport:
    """Decode every record for every (context set, alpha) and aggregate micro-averaged metrics.

    A decode failure marks its cell with the failing record id and the sweep
    moves on to the next cell.
    """
    if not records:
        raise InputError("cannot evaluate an empty dataset")
    vocab = model.vocab
    for r in records:
        r.validate(vocab)
    score_phrases = {name: _score_phrases(name, records, entity_lists) for name in sweep.score_sets}

    decoder = JointDecoder(model=model, mode=sweep.mode, beam_width=sweep.beam_width)
    cells = []
    for ctx_name in sweep.context_sets:
        contexts = _contexts(ctx_name, records, entity_lists)
        for alpha in sweep.alpha_grid:
            decoder.set_params(alpha=alpha).fit()
            pairs = []
            error = None
            for rec, ctx in zip(records, contexts):
                try:
                    pairs.append((rec.reference, decoder.decode_one(rec.observation, ctx)))
                except DecodeError as exc:
                    error = f"record {rec.id}: step {exc.step}: {exc.message}"
                    break
            if error is not None:
                cells.append(Cell(ctx_name, alpha, None, 0, {}, error))
                continue
            total = EditCounts()
            ref_len = 0
            for ref, hyp in pairs:
                total = total + edit_alignment(ref, hyp)
                ref_len += len(ref)
            entity = {
                name: entity_counts(pairs, phrases) for name, phrases in score_phrases.items() if phrases
            }
            cells.append(Cell(ctx_name, alpha, total, ref_len, entity))

    meta = {"seed": sweep.seed, "mode": sweep.mode}
    if sweep.mode == "beam":
        meta["beam_width"] = sweep.beam_width
    meta.update(metadata or {})
    return MetricsReport(tuple(cells), sweep.score_sets, meta)


# -- rendering -----------------------------------------------------------------

def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.2f}"


def report_columns(score_sets: Sequence[str]) -> list[str]:
    cols = ["context", "alpha", "cer", "sub", "ins", "del"]
    for name in score_sets:
        cols += [f"{name}_precision", f"{name}_recall", f"{name}_f1"]
    return cols


def report_rows(report: MetricsReport) -> list[list[float | str | None]]:
    """One row per cell, numbers rounded to two decimals (CER columns in percent)."""
    rows = []
    for c in report.cells:
        row: list = [c.context_set, round(c.alpha, 2)]
        if c.counts is None:
            row += [None] * (4 + 3 * len(report.score_sets))
        else:
            pct = c.rates.as_percent()
            row += [pct["cer"], pct["sub"], pct["ins"], pct["del"]]
            for name in report.score_sets:
                s = c.entity_score(name)
                row += [None] * 3 if s is None else [round(s.precision, 2), round(s.recall, 2), round(s.f1, 2)]
        rows.append(row)
    return rows


SET_LABELS = {"common": "NE-Common", "rare": "NE-Rare", "sensitive": "NE-Sensitive", "gt": "NE-GT"}


def render_report(report: MetricsReport, fmt: str = "csv") -> str:
    if fmt not in FORMATS:
        raise InputError(f"unknown format {fmt!r}; choose from {FORMATS}")
    if not report.cells:
        raise InputError("report has no cells")
    cols = report_columns(report.score_sets)
    rows = report_rows(report)

    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([row[0]] + [_fmt(v) for v in row[1:]])
        return buf.getvalue()

    if fmt == "json":
        doc = report.to_dict()
        doc["columns"] = cols
        doc["rows"] = rows
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    header = ["Context", "Context Coefficient", "CER (%)", "sub/insert/del"]
    header += [f"{SET_LABELS.get(n, n)} Precision/Recall/F1-Score" for n in report.score_sets]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for row in rows:
        cer_, sub, ins, dele = row[2:6]
        cells = [str(row[0]), _fmt(row[1]), _fmt(cer_), "/".join(_fmt(v) for v in (sub, ins, dele))]
        for k in range(len(report.score_sets)):
            p, r, f = row[6 + 3 * k: 9 + 3 * k]
            cells.append("n/a" if p is None else f"{p:.2f}/{r:.2f}/{f:.2f}")
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def parse_csv_report(text: str) -> list[dict[str, object]]:
    """Read a CSV report back into dicts with numeric fields as floats (blank -> None)."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append({k: (v if k == "context" else (float(v) if v != "" else None)) for k, v in row.items()})
    return out
