"""Command-line workflow: split, train, eval, predict, stats, iaa, kg.

Exit codes: 0 success, 1 runtime/data error, 2 usage error. All randomness
flows from --seed (default 13); repeated runs produce identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import fields as dc_fields
from pathlib import Path

from . import evaluation, kgraph, training
from .corpus import (
    DOCSTART,
    Document,
    LabelSet,
    corpus_stats,
    parse_conll,
    serialize_conll,
    split_corpus,
    tokenize_raw,
)
from .embeddings import load_embeddings
from .errors import ImdnerError, SchemaError
from .network import NetworkConfig
from .training import TrainConfig


def _read(path) -> bytes:
    return Path(path).read_bytes()


def _parse_corpus(path, labels=None):
    return parse_conll(_read(path), labels, name=Path(path).name)


def _corpus_labels(path) -> set[str]:
    """Entity labels actually used in a CoNLL file (no schema validation)."""
    labels = set()
    for line in _read(path).decode("utf-8").split("\n"):
        if not line.strip() or line == DOCSTART:
            continue
        parts = line.split("\t")
        if len(parts) == 2 and re.match(r"[BI]-", parts[1]):
            labels.add(parts[1][2:])
    return labels


def _split_config(overrides: dict):
    """Partition a flat config mapping into TrainConfig/NetworkConfig kwargs."""
    train_keys = {f.name for f in dc_fields(TrainConfig)}
    net_keys = {f.name for f in dc_fields(NetworkConfig)} - {"num_tags", "word_dim"}
    train_kw, net_kw = {}, {}
    for key, value in overrides.items():
        if key in train_keys:
            train_kw[key] = value
        elif key in net_keys:
            net_kw[key] = value
        else:
            raise ImdnerError(f"unknown config key {key!r}")
    return train_kw, net_kw


def cmd_train(args) -> int:
    overrides = json.loads(_read(args.config)) if args.config else {}
    train_kw, net_kw = _split_config(overrides)
    train_kw.setdefault("seed", args.seed)
    train_cfg = TrainConfig(**train_kw)

    labels = LabelSet()
    table = load_embeddings(_read(args.embeddings))
    net_cfg = NetworkConfig(
        num_tags=labels.num_tags,
        word_dim=table.dim,
        dropout_rate=train_kw.get("dropout_rate", train_cfg.dropout_rate),
        **net_kw,
    )
    print(
        f"training: epochs={train_cfg.epochs} batch_size={train_cfg.batch_size} "
        f"learning_rate={train_cfg.learning_rate} dropout={train_cfg.dropout_rate} "
        f"optimizer=adam seed={train_cfg.seed} word_dim={table.dim}"
    )

    train_docs = _parse_corpus(args.corpus, labels)
    dev_docs = _parse_corpus(args.dev, labels) if args.dev else []
    result = training.train(train_docs, dev_docs, table, net_cfg, train_cfg, labels)

    training.save_checkpoint(result.best_checkpoint, args.out)
    history_path = Path(str(args.out) + ".history.txt")
    history_path.write_text(training.format_history(result.history))
    print(f"checkpoint written to {args.out}")
    print(f"history written to {history_path}")
    return 0


def cmd_eval(args) -> int:
    ckpt = training.load_checkpoint(args.model)
    used = _corpus_labels(args.corpus)
    unknown = used - set(ckpt.label_set.labels)
    if unknown:
        raise SchemaError(
            f"corpus labels {sorted(used)} do not fit checkpoint labels {sorted(ckpt.label_set.labels)}"
        )
    gold = _parse_corpus(args.corpus, ckpt.label_set)
    pred = training.predict_documents(ckpt, gold)
    report = evaluation.evaluate(gold, pred, ckpt.label_set)
    sys.stdout.write(evaluation.format_report(report))
    if args.report:
        Path(args.report).write_text(evaluation.report_to_json(report))
    return 0


def cmd_predict(args) -> int:
    ckpt = training.load_checkpoint(args.model)
    data = _read(args.input)
    if args.raw:
        sentences = tokenize_raw(data.decode("utf-8"))
        docs = [Document("input", tuple(sentences))] if sentences else []
    else:
        docs = parse_conll(data, ckpt.label_set, name=Path(args.input).name) if data.strip() else []
    predicted = training.predict_documents(ckpt, docs)
    Path(args.out).write_text(serialize_conll(predicted))
    return 0


def cmd_split(args) -> int:
    docs = _parse_corpus(args.corpus)
    train, test = split_corpus(docs, args.test_fraction, args.seed)
    Path(args.train_out).write_text(serialize_conll(train))
    Path(args.test_out).write_text(serialize_conll(test))
    print(f"split {len(docs)} documents into {len(train)} train / {len(test)} test")
    return 0


def cmd_stats(args) -> int:
    stats = corpus_stats(_parse_corpus(args.corpus))
    out = [
        f"documents\t{stats.document_count}",
        f"sentences\t{stats.sentence_count}",
        f"tokens\t{stats.token_count}",
    ]
    for label in sorted(stats.entity_counts, key=lambda k: (-stats.entity_counts[k], k)):
        out.append(f"{label}\t{stats.entity_counts[label]}")
    text = "\n".join(out) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_iaa(args) -> int:
    a = _parse_corpus(args.a)
    b = _parse_corpus(args.b)
    report = evaluation.iaa(a, b)
    print(f"token_agreement_pct\t{report.token_agreement_pct:.1f}")
    print(f"entity_f1_a_as_gold\t{report.entity_f1_a_as_gold:.4f}")
    print(f"token_count\t{report.token_count}")
    return 0


def cmd_kg(args) -> int:
    docs = _parse_corpus(args.corpus)
    rules = kgraph.DEFAULT_RULES
    if args.window is not None:
        rules = tuple(
            kgraph.RelationRule(r.head_label, r.tail_label, r.relation_name, args.window) for r in rules
        )
    graph = kgraph.extract_graph(docs, rules)
    payload = kgraph.export_graph(graph, format=args.format)
    if args.out:
        Path(args.out).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imdner", description="Clinical NER workflow")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on a tagged corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dev")
    p.add_argument("--config", help="JSON file of training/network overrides")
    p.add_argument("--seed", type=int, default=13)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a tagged corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--report", help="write a machine-readable JSON report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="tag a corpus or raw text")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--raw", action="store_true", help="input is raw text, not CoNLL")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("split", help="document-level train/test split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--test-fraction", type=float, default=0.2, dest="test_fraction")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--train-out", required=True, dest="train_out")
    p.add_argument("--test-out", required=True, dest="test_out")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("stats", help="corpus size and entity distribution")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("iaa", help="inter-annotator agreement between two annotations")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_iaa)

    p = sub.add_parser("kg", help="extract and export an entity knowledge graph")
    p.add_argument("--corpus", required=True, help="tagged CoNLL corpus (gold or predicted)")
    p.add_argument("--format", choices=("structured", "dot"), default="structured")
    p.add_argument("--window", type=int, help="override the sentence window of the default rules")
    p.add_argument("--out")
    p.set_defaults(func=cmd_kg)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ImdnerError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
