"""Strict entity-level scoring, error taxonomy, inter-annotator agreement.

A predicted span is correct only when a gold span with the same label and
the same half-open token range exists in the same sentence; matching is
one-to-one. Zero denominators yield 0, not an error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .corpus import Document, LabelSet, tags_to_spans
from .errors import AlignmentError, ValidationError


@dataclass(frozen=True)
class LabelMetrics:
    label: str
    precision: float
    recall: float
    f1: float
    support: int
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @classmethod
    def from_counts(cls, label: str, tp: int, fp: int, fn: int) -> "LabelMetrics":
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        return cls(label=label, precision=p, recall=r, f1=f1, support=tp + fn, tp=tp, fp=fp, fn=fn)


@dataclass(frozen=True)
class EvalReport:
    per_label: tuple[LabelMetrics, ...]
    micro: tuple[float, float, float]
    macro: tuple[float, float, float]
    weighted: tuple[float, float, float]
    total_support: int


@dataclass(frozen=True)
class ErrorBreakdown:
    correct: int = 0
    label_error: int = 0  # exact span, wrong label
    boundary_error: int = 0  # same label, overlapping but unequal span
    spurious: int = 0  # prediction with no gold overlap
    missed: int = 0  # gold with no matching prediction


@dataclass(frozen=True)
class AgreementReport:
    token_agreement_pct: float
    entity_f1_a_as_gold: float
    token_count: int


def _check_alignment(gold: list[Document], pred: list[Document]):
    if len(gold) != len(pred):
        raise AlignmentError(f"corpora have {len(gold)} vs {len(pred)} documents")
    for d, (g, p) in enumerate(zip(gold, pred)):
        if len(g.sentences) != len(p.sentences):
            raise AlignmentError(f"document {d} ({g.id}): {len(g.sentences)} vs {len(p.sentences)} sentences")
        for s, (gs, ps) in enumerate(zip(g.sentences, p.sentences)):
            if len(gs) != len(ps):
                raise AlignmentError(f"document {d}, sentence {s}: {len(gs)} vs {len(ps)} tokens")
            for t, (gt, pt) in enumerate(zip(gs.tokens, ps.tokens)):
                if gt.text != pt.text:
                    raise AlignmentError(
                        f"token mismatch at document {d}, sentence {s}, token {t}: {gt.text!r} vs {pt.text!r}"
                    )


def _span_sets(docs: list[Document]):
    """All spans keyed (doc, sentence, start, end, label); flat annotation
    makes each key unique, so one-to-one matching is set intersection."""
    out = set()
    for d, doc in enumerate(docs):
        for s, sent in enumerate(doc.sentences):
            for span in tags_to_spans(sent, sentence_index=s):
                out.add((d, s, span.start, span.end, span.label))
    return out


def aggregate(per_label: list[LabelMetrics]):
    """(micro, macro, weighted) (precision, recall, f1) triples.

    Micro comes from summed tp/fp/fn; macro is the unweighted mean of the
    stored per-label metrics; weighted is the support-weighted mean.
    """
    if not per_label:
        raise ValidationError("cannot aggregate an empty metric list")
    tp = sum(m.tp for m in per_label)
    fp = sum(m.fp for m in per_label)
    fn = sum(m.fn for m in per_label)
    micro_m = LabelMetrics.from_counts("micro", tp, fp, fn)
    micro = (micro_m.precision, micro_m.recall, micro_m.f1)

    n = len(per_label)
    macro = (
        sum(m.precision for m in per_label) / n,
        sum(m.recall for m in per_label) / n,
        sum(m.f1 for m in per_label) / n,
    )

    total = sum(m.support for m in per_label)
    if total:
        weighted = (
            sum(m.precision * m.support for m in per_label) / total,
            sum(m.recall * m.support for m in per_label) / total,
            sum(m.f1 * m.support for m in per_label) / total,
        )
    else:
        weighted = (0.0, 0.0, 0.0)
    return micro, macro, weighted


def evaluate(gold: list[Document], pred: list[Document], labels: LabelSet | None = None) -> EvalReport:
    labels = labels or LabelSet()
    _check_alignment(gold, pred)
    gold_spans = _span_sets(gold)
    pred_spans = _span_sets(pred)
    matched = gold_spans & pred_spans

    per_label = []
    for lab in labels.labels:
        tp = sum(1 for s in matched if s[4] == lab)
        fp = sum(1 for s in pred_spans - matched if s[4] == lab)
        fn = sum(1 for s in gold_spans - matched if s[4] == lab)
        per_label.append(LabelMetrics.from_counts(lab, tp, fp, fn))

    micro, macro, weighted = aggregate(per_label)
    return EvalReport(
        per_label=tuple(per_label),
        micro=micro,
        macro=macro,
        weighted=weighted,
        total_support=sum(m.support for m in per_label),
    )


def error_breakdown(gold: list[Document], pred: list[Document]) -> ErrorBreakdown:
    """Classify each predicted span exactly once, in priority order:
    exact match > label error > boundary error > spurious."""
    _check_alignment(gold, pred)
    gold_spans = _span_sets(gold)
    pred_spans = _span_sets(pred)

    correct = label_error = boundary_error = spurious = 0
    matched_gold = set()
    for span in sorted(pred_spans):
        d, s, start, end, lab = span
        if span in gold_spans:
            correct += 1
            matched_gold.add(span)
            continue
        same_span = next((g for g in gold_spans if g[:4] == (d, s, start, end)), None)
        if same_span is not None:
            label_error += 1
            matched_gold.add(same_span)
            continue
        overlap = next(
            (
                g
                for g in sorted(gold_spans)
                if g[0] == d and g[1] == s and g[4] == lab and g[2] < end and start < g[3]
            ),
            None,
        )
        if overlap is not None:
            boundary_error += 1
            matched_gold.add(overlap)
        else:
            spurious += 1

    missed = len(gold_spans - matched_gold)
    return ErrorBreakdown(correct, label_error, boundary_error, spurious, missed)


def iaa(annotation_a: list[Document], annotation_b: list[Document], labels: LabelSet | None = None) -> AgreementReport:
    """Token-level percentage agreement plus entity F1 with A as gold."""
    _check_alignment(annotation_a, annotation_b)
    total = 0
    matching = 0
    for da, db in zip(annotation_a, annotation_b):
        for sa, sb in zip(da.sentences, db.sentences):
            for ta, tb in zip(sa.tokens, sb.tokens):
                total += 1
                if ta.tag == tb.tag:
                    matching += 1
    pct = 100.0 * matching / total if total else 0.0
    report = evaluate(annotation_a, annotation_b, labels)
    return AgreementReport(token_agreement_pct=pct, entity_f1_a_as_gold=report.micro[2], token_count=total)


def format_report(report: EvalReport) -> str:
    """Human-readable table: Category, Precision, Recall, F1-Score, Support."""
    width = max(len("Category"), *(len(m.label) for m in report.per_label), len("weighted avg"))
    lines = [f"{'Category':<{width}}  Precision  Recall  F1-Score  Support"]
    for m in report.per_label:
        lines.append(f"{m.label:<{width}}  {m.precision:9.2f}  {m.recall:6.2f}  {m.f1:8.2f}  {m.support:7d}")
    for name, (p, r, f1) in (("micro avg", report.micro), ("macro avg", report.macro), ("weighted avg", report.weighted)):
        lines.append(f"{name:<{width}}  {p:9.2f}  {r:6.2f}  {f1:8.2f}  {report.total_support:7d}")
    return "\n".join(lines) + "\n"


def report_to_json(report: EvalReport) -> str:
    """Machine-readable counterpart of format_report."""
    doc = {
        "per_label": [
            {
                "label": m.label,
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
                "tp": m.tp,
                "fp": m.fp,
                "fn": m.fn,
            }
            for m in report.per_label
        ],
        "micro": dict(zip(("precision", "recall", "f1"), report.micro)),
        "macro": dict(zip(("precision", "recall", "f1"), report.macro)),
        "weighted": dict(zip(("precision", "recall", "f1"), report.weighted)),
        "total_support": report.total_support,
    }
    return json.dumps(doc, indent=2) + "\n"
