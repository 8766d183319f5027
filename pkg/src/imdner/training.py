"""Supervised training: analytic gradients, Adam, checkpoints, prediction.

The whole trajectory (init, shuffles, dropout masks) flows from one seed, so
a repeated run produces a bitwise-identical checkpoint. Checkpoint tensors
are rounded through float32 at creation time, which makes the on-disk
float32 container lossless with respect to the in-memory checkpoint.
"""

from __future__ import annotations

import copy
import json
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np

from . import crf as crf_mod
from . import network as net_mod
from .corpus import Document, LabelSet, Sentence, Token, validate_bio
from .embeddings import CharVocab, EmbeddingTable, build_char_vocab
from .errors import IntegrityError, UnsupportedVersionError, ValidationError
from .evaluation import evaluate

CHECKPOINT_VERSION = 1
GRAD_CLIP_NORM = 5.0


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    epochs: int = 16
    learning_rate: float = 0.001
    dropout_rate: float = 0.5
    seed: int = 13
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1:
            raise ValidationError("batch_size and epochs must be positive")
        if not (0.0 < self.learning_rate < 1.0):
            raise ValidationError("learning_rate must be in (0, 1)")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValidationError("dropout_rate must be in [0, 1)")


class AdamState:
    """First/second moment accumulators mirroring every parameter tensor."""

    def __init__(self, params: dict[str, np.ndarray]):
        self.first_moment = {k: np.zeros_like(v) for k, v in params.items()}
        self.second_moment = {k: np.zeros_like(v) for k, v in params.items()}
        self.step_count = 0

    def update(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], cfg: TrainConfig):
        self.step_count += 1
        t = self.step_count
        b1, b2, eps, lr = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon, cfg.learning_rate
        for k, p in params.items():
            g = grads[k]
            m = self.first_moment[k]
            v = self.second_moment[k]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**t)
            v_hat = v / (1 - b2**t)
            p -= lr * m_hat / (np.sqrt(v_hat) + eps)


def all_param_items(net_params: net_mod.NetworkParams, crf_params: crf_mod.CrfParams):
    """Declared tensor order, shared by Adam, gradients and the checkpoint."""
    items = list(net_params.param_items())
    items += [
        ("crf.transitions", crf_params.transitions),
        ("crf.start", crf_params.start_scores),
        ("crf.end", crf_params.end_scores),
    ]
    return items


def loss_and_gradients(
    batch: list[Sentence],
    net_params: net_mod.NetworkParams,
    crf_params: crf_mod.CrfParams,
    table: EmbeddingTable,
    config: net_mod.NetworkConfig,
    vocab: CharVocab,
    labels: LabelSet,
    seed=None,
):
    """Mean per-sentence CRF negative log-likelihood and its gradients.

    Dropout is active only when a seed is given; per-sentence masks derive
    deterministically from (seed, position in batch).
    """
    if not batch:
        raise ValidationError("empty batch")
    grads = {name: np.zeros_like(arr) for name, arr in all_param_items(net_params, crf_params)}
    scale = 1.0 / len(batch)
    total = 0.0
    for j, sent in enumerate(batch):
        validate_bio(sent.tags, labels)
        dropout_seed = None if seed is None else [int(seed) & 0x7FFFFFFF, j]
        emis, cache = net_mod.emissions_forward(sent.texts, table, net_params, config, vocab, dropout_seed)
        gold = [labels.tag_index(t) for t in sent.tags]
        value, d_emis, d_trans, d_start, d_end = crf_mod.nll_gradients(emis, crf_params, gold)
        total += value
        grads["crf.transitions"] += scale * d_trans
        grads["crf.start"] += scale * d_start
        grads["crf.end"] += scale * d_end
        net_mod.emissions_backward(scale * d_emis, cache, net_params, config, grads)
    return total * scale, grads


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float = GRAD_CLIP_NORM):
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return total


@dataclass
class Checkpoint:
    network: net_mod.NetworkParams
    crf: crf_mod.CrfParams
    config: net_mod.NetworkConfig
    label_set: LabelSet
    char_vocab: CharVocab
    embeddings: EmbeddingTable
    format_version: int = CHECKPOINT_VERSION
    metadata: dict = field(default_factory=dict)


def _round_f32(arr: np.ndarray) -> np.ndarray:
    return arr.astype("<f4").astype(np.float64)


def make_checkpoint(net_params, crf_params, config, labels, vocab, table, metadata=None) -> Checkpoint:
    """Snapshot parameters, rounded through float32 so that on-disk storage
    reproduces predictions exactly."""
    net = copy.deepcopy(net_params)
    for _, arr in net.param_items():
        arr[...] = _round_f32(arr)
    crf = crf_mod.CrfParams(
        transitions=_round_f32(crf_params.transitions),
        start_scores=_round_f32(crf_params.start_scores),
        end_scores=_round_f32(crf_params.end_scores),
    )
    emb = EmbeddingTable(
        dim=table.dim,
        vectors={w: _round_f32(v) for w, v in table.vectors.items()},
        unk_vector=_round_f32(table.unk_vector),
    )
    return Checkpoint(net, crf, config, labels, vocab, emb, metadata=dict(metadata or {}))


def save_checkpoint(ckpt: Checkpoint, path):
    tensors = all_param_items(ckpt.network, ckpt.crf)
    words = sorted(ckpt.embeddings.vectors)
    emb_matrix = (
        np.stack([ckpt.embeddings.vectors[w] for w in words])
        if words
        else np.zeros((0, ckpt.embeddings.dim))
    )
    tensors += [("embeddings.matrix", emb_matrix), ("embeddings.unk", ckpt.embeddings.unk_vector)]

    header = {
        "format_version": ckpt.format_version,
        "config": asdict(ckpt.config),
        "labels": list(ckpt.label_set.labels),
        "char_vocab": "".join(ckpt.char_vocab.chars),
        "embedding_words": words,
        "embedding_dim": ckpt.embeddings.dim,
        "metadata": ckpt.metadata,
        "tensors": [[name, list(arr.shape)] for name, arr in tensors],
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header, ensure_ascii=False).encode("utf-8"))
        f.write(b"\n")
        for _, arr in tensors:
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        header_line = f.readline()
        blob = f.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise IntegrityError(f"unreadable checkpoint header: {e}") from e

    version = header.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise UnsupportedVersionError(version, CHECKPOINT_VERSION)

    expected = sum(int(np.prod(shape)) for _, shape in header["tensors"]) * 4
    if len(blob) != expected:
        raise IntegrityError(f"checkpoint payload has {len(blob)} bytes, expected {expected}")

    arrays = {}
    offset = 0
    for name, shape in header["tensors"]:
        n = int(np.prod(shape))
        arrays[name] = np.frombuffer(blob, dtype="<f4", count=n, offset=offset).astype(np.float64).reshape(shape)
        offset += n * 4

    config = net_mod.NetworkConfig(**header["config"])
    labels = LabelSet(tuple(header["labels"]))
    vocab = CharVocab(tuple(header["char_vocab"]))

    try:
        net = net_mod.NetworkParams(
            char_embeddings=arrays["char_embeddings"],
            conv_filters=arrays["conv_filters"],
            conv_bias=arrays["conv_bias"],
            lstm_fw=net_mod.LstmBlock(arrays["lstm_fw.wx"], arrays["lstm_fw.wh"], arrays["lstm_fw.b"]),
            lstm_bw=net_mod.LstmBlock(arrays["lstm_bw.wx"], arrays["lstm_bw.wh"], arrays["lstm_bw.b"]),
            proj_weights=arrays["proj_weights"],
            proj_bias=arrays["proj_bias"],
        )
        crf = crf_mod.CrfParams(arrays["crf.transitions"], arrays["crf.start"], arrays["crf.end"])
    except (KeyError, ValidationError) as e:
        raise IntegrityError(f"checkpoint tensor set inconsistent: {e}") from e
    if net.proj_weights.shape != (2 * config.lstm_hidden, config.num_tags):
        raise IntegrityError("projection shape does not match the stored configuration")

    words = header["embedding_words"]
    emb_matrix = arrays["embeddings.matrix"]
    if emb_matrix.shape[0] != len(words):
        raise IntegrityError("embedding matrix row count does not match word list")
    table = EmbeddingTable(
        dim=int(header["embedding_dim"]),
        vectors={w: emb_matrix[i] for i, w in enumerate(words)},
        unk_vector=arrays["embeddings.unk"],
    )
    return Checkpoint(net, crf, config, labels, vocab, table, format_version=version, metadata=header.get("metadata", {}))


def _split_long(sent: Sentence, limit: int = net_mod.MAX_SENTENCE_LEN) -> list[Sentence]:
    if len(sent) <= limit:
        return [sent]
    warnings.warn(f"splitting a {len(sent)}-token sentence at the {limit}-token boundary")
    out = []
    for i in range(0, len(sent), limit):
        toks = list(sent.tokens[i: i + limit])
        # A chunk may not begin mid-entity; promote a leading I- to B-.
        if toks[0].tag.startswith("I-"):
            toks[0] = Token(toks[0].text, "B-" + toks[0].tag[2:])
        out.append(Sentence(tuple(toks)))
    return out


def tag_sentence(texts: list[str], ckpt: Checkpoint, bio_mask: bool = True) -> list[str]:
    """Predict BIO tags for one token sequence (deterministic, dropout off)."""
    tag_names = ckpt.label_set.tags
    decode_crf = crf_mod.masked(ckpt.crf, ckpt.label_set) if bio_mask else ckpt.crf
    tags = []
    limit = net_mod.MAX_SENTENCE_LEN
    if len(texts) > limit:
        warnings.warn(f"splitting a {len(texts)}-token sentence at the {limit}-token boundary")
    for i in range(0, len(texts), limit):
        chunk = texts[i: i + limit]
        emis = net_mod.emissions(chunk, ckpt.embeddings, ckpt.network, ckpt.config, ckpt.char_vocab)
        best = crf_mod.viterbi(emis, decode_crf)
        tags.extend(tag_names[y] for y in best.tags)
    return tags


def predict_documents(ckpt: Checkpoint, docs: list[Document], bio_mask: bool = True) -> list[Document]:
    out = []
    for doc in docs:
        sentences = []
        for sent in doc.sentences:
            tags = tag_sentence(sent.texts, ckpt, bio_mask=bio_mask)
            sentences.append(Sentence(tuple(Token(t, g) for t, g in zip(sent.texts, tags))))
        out.append(Document(doc.id, tuple(sentences)))
    return out


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    dev_precision: float | None = None
    dev_recall: float | None = None
    dev_f1: float | None = None


@dataclass
class TrainResult:
    checkpoint: Checkpoint  # final epoch
    best_checkpoint: Checkpoint  # highest dev F1 (== final without a dev set)
    history: list[EpochRecord]


def init_crf_params(num_tags: int, rng: np.random.Generator) -> crf_mod.CrfParams:
    return crf_mod.CrfParams(
        transitions=rng.uniform(-0.1, 0.1, size=(num_tags, num_tags)),
        start_scores=rng.uniform(-0.1, 0.1, size=num_tags),
        end_scores=rng.uniform(-0.1, 0.1, size=num_tags),
    )


def train(
    train_docs: list[Document],
    dev_docs: list[Document],
    table: EmbeddingTable,
    net_config: net_mod.NetworkConfig,
    train_config: TrainConfig,
    labels: LabelSet | None = None,
) -> TrainResult:
    labels = labels or LabelSet()
    if not train_docs:
        raise ValidationError("empty training set")
    if net_config.num_tags != labels.num_tags:
        raise ValidationError(
            f"network num_tags {net_config.num_tags} does not match label set ({labels.num_tags})"
        )
    if net_config.dropout_rate != train_config.dropout_rate:
        net_config = net_mod.NetworkConfig(**{**asdict(net_config), "dropout_rate": train_config.dropout_rate})

    vocab = build_char_vocab(train_docs)
    ss = np.random.SeedSequence(train_config.seed)
    init_rng, shuffle_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    net_params = net_mod.init_network_params(net_config, len(vocab), init_rng)
    crf_params = init_crf_params(net_config.num_tags, init_rng)
    param_dict = dict(all_param_items(net_params, crf_params))
    adam = AdamState(param_dict)

    sentences = [s for doc in train_docs for sent in doc.sentences for s in _split_long(sent)]
    history: list[EpochRecord] = []
    best_f1 = -1.0
    best_ckpt = None
    loss = float("nan")

    for epoch in range(1, train_config.epochs + 1):
        order = shuffle_rng.permutation(len(sentences))
        losses, counts = [], []
        for b_start in range(0, len(sentences), train_config.batch_size):
            batch = [sentences[i] for i in order[b_start: b_start + train_config.batch_size]]
            seed = (train_config.seed * 1_000_003 + epoch * 1_009 + b_start) & 0x7FFFFFFF
            dropout_seed = seed if train_config.dropout_rate > 0 else None
            loss, grads = loss_and_gradients(
                batch, net_params, crf_params, table, net_config, vocab, labels, seed=dropout_seed
            )
            clip_gradients(grads)
            adam.update(param_dict, grads, train_config)
            losses.append(loss * len(batch))
            counts.append(len(batch))
        epoch_loss = float(sum(losses) / sum(counts))

        record = EpochRecord(epoch=epoch, loss=epoch_loss)
        if dev_docs:
            ckpt = make_checkpoint(
                net_params, crf_params, net_config, labels, vocab, table,
                metadata={"seed": train_config.seed, "epochs_completed": epoch, "final_loss": epoch_loss},
            )
            pred = predict_documents(ckpt, dev_docs)
            report = evaluate(dev_docs, pred, labels)
            p, r, f1 = report.micro
            record = EpochRecord(epoch=epoch, loss=epoch_loss, dev_precision=p, dev_recall=r, dev_f1=f1)
            if f1 > best_f1:
                best_f1, best_ckpt = f1, ckpt
        history.append(record)

    final = make_checkpoint(
        net_params, crf_params, net_config, labels, vocab, table,
        metadata={"seed": train_config.seed, "epochs_completed": train_config.epochs, "final_loss": history[-1].loss},
    )
    return TrainResult(checkpoint=final, best_checkpoint=best_ckpt or final, history=history)


def format_history(history: list[EpochRecord]) -> str:
    """One record per epoch: epoch, mean loss, dev precision/recall/F1."""
    lines = []
    for rec in history:
        if rec.dev_f1 is None:
            lines.append(f"epoch {rec.epoch}\tloss {rec.loss:.6f}")
        else:
            lines.append(
                f"epoch {rec.epoch}\tloss {rec.loss:.6f}\tdev_precision {rec.dev_precision:.4f}"
                f"\tdev_recall {rec.dev_recall:.4f}\tdev_f1 {rec.dev_f1:.4f}"
            )
    return "\n".join(lines) + "\n"
