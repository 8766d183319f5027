"""Emission network: Char-CNN features + word vectors -> BiLSTM -> projection.

Forward passes are deterministic (dropout only when a seed is supplied) and
cache every intermediate needed for the manual backward pass in training.
All math is float64; parameters live in plain numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embeddings import CharVocab, EmbeddingTable
from .errors import NumericError, ValidationError

MAX_SENTENCE_LEN = 512


@dataclass(frozen=True)
class NetworkConfig:
    num_tags: int
    word_dim: int = 200
    char_embed_dim: int = 25
    char_filter_width: int = 3
    char_filter_count: int = 30
    lstm_hidden: int = 200
    dropout_rate: float = 0.5

    def __post_init__(self):
        for name in ("num_tags", "word_dim", "char_embed_dim", "char_filter_width", "char_filter_count", "lstm_hidden"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValidationError("dropout_rate must be in [0, 1)")
        if self.char_filter_width % 2 != 1:
            raise ValidationError("char_filter_width must be odd")

    @property
    def lstm_input_dim(self) -> int:
        return self.word_dim + self.char_filter_count


@dataclass
class LstmBlock:
    """One direction's weights; gate order along axis 0 is [input, forget, cell, output]."""

    wx: np.ndarray  # (4H, In)
    wh: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)


@dataclass
class NetworkParams:
    char_embeddings: np.ndarray  # (|CharVocab|, char_embed_dim)
    conv_filters: np.ndarray  # (filter_count, filter_width, char_embed_dim)
    conv_bias: np.ndarray  # (filter_count,)
    lstm_fw: LstmBlock
    lstm_bw: LstmBlock
    proj_weights: np.ndarray  # (2H, num_tags)
    proj_bias: np.ndarray  # (num_tags,)

    def param_items(self) -> list[tuple[str, np.ndarray]]:
        return [
            ("char_embeddings", self.char_embeddings),
            ("conv_filters", self.conv_filters),
            ("conv_bias", self.conv_bias),
            ("lstm_fw.wx", self.lstm_fw.wx),
            ("lstm_fw.wh", self.lstm_fw.wh),
            ("lstm_fw.b", self.lstm_fw.b),
            ("lstm_bw.wx", self.lstm_bw.wx),
            ("lstm_bw.wh", self.lstm_bw.wh),
            ("lstm_bw.b", self.lstm_bw.b),
            ("proj_weights", self.proj_weights),
            ("proj_bias", self.proj_bias),
        ]


def init_network_params(config: NetworkConfig, vocab_size: int, rng: np.random.Generator) -> NetworkParams:
    """Seeded uniform(-0.1, 0.1) everywhere, forget-gate biases at 1.0."""
    h, d_in = config.lstm_hidden, config.lstm_input_dim

    def u(*shape):
        return rng.uniform(-0.1, 0.1, size=shape)

    def lstm_block():
        blk = LstmBlock(wx=u(4 * h, d_in), wh=u(4 * h, h), b=u(4 * h))
        blk.b[h: 2 * h] = 1.0
        return blk

    return NetworkParams(
        char_embeddings=u(vocab_size, config.char_embed_dim),
        conv_filters=u(config.char_filter_count, config.char_filter_width, config.char_embed_dim),
        conv_bias=u(config.char_filter_count),
        lstm_fw=lstm_block(),
        lstm_bw=lstm_block(),
        proj_weights=u(2 * h, config.num_tags),
        proj_bias=u(config.num_tags),
    )


def zero_like_params(params: NetworkParams) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in params.param_items()}


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _check_finite(arr, stage):
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values in {stage}")


def dropout_mask(shape, rate: float, seed) -> np.ndarray:
    """Inverted dropout mask: entries are 0 or 1/(1-rate), E[mask] == 1."""
    rng = np.random.default_rng(seed)
    keep = 1.0 - rate
    return (rng.random(shape) < keep).astype(float) / keep


def _pad_char_indices(text: str, vocab: CharVocab, width: int) -> list[int]:
    idx = vocab.encode(text)
    if len(idx) < width:
        pad = (width - 1) // 2
        idx = [vocab.pad_index] * pad + idx + [vocab.pad_index] * pad
    return idx


def char_features_forward(text: str, vocab: CharVocab, params: NetworkParams, config: NetworkConfig):
    """1-D convolution over char embeddings, tanh, max-over-time pooling."""
    w, f_count, d = config.char_filter_width, config.char_filter_count, config.char_embed_dim
    idx = _pad_char_indices(text, vocab, w)
    emb = params.char_embeddings[idx]  # (L, d)
    n_pos = len(idx) - w + 1
    windows = np.stack([emb[p: p + w].reshape(-1) for p in range(n_pos)])  # (P, w*d)
    filters_flat = params.conv_filters.reshape(f_count, -1)  # (F, w*d)
    scores = windows @ filters_flat.T + params.conv_bias  # (P, F)
    activ = np.tanh(scores)
    argmax = activ.argmax(axis=0)
    feat = activ[argmax, np.arange(f_count)]
    cache = {"idx": idx, "windows": windows, "activ": activ, "argmax": argmax}
    return feat, cache


def char_features(text: str, vocab: CharVocab, params: NetworkParams, config: NetworkConfig) -> np.ndarray:
    feat, _ = char_features_forward(text, vocab, params, config)
    return feat


def char_features_backward(d_feat, cache, params: NetworkParams, config: NetworkConfig, grads):
    w, f_count, d = config.char_filter_width, config.char_filter_count, config.char_embed_dim
    activ, argmax, windows, idx = cache["activ"], cache["argmax"], cache["windows"], cache["idx"]
    d_activ = np.zeros_like(activ)
    d_activ[argmax, np.arange(f_count)] = d_feat
    d_scores = d_activ * (1.0 - activ**2)  # (P, F)
    filters_flat = params.conv_filters.reshape(f_count, -1)
    grads["conv_filters"] += (d_scores.T @ windows).reshape(params.conv_filters.shape)
    grads["conv_bias"] += d_scores.sum(axis=0)
    d_windows = d_scores @ filters_flat  # (P, w*d)
    d_emb = np.zeros((len(idx), d))
    for p in range(d_windows.shape[0]):
        d_emb[p: p + w] += d_windows[p].reshape(w, d)
    np.add.at(grads["char_embeddings"], idx, d_emb)


def _lstm_forward(xs: np.ndarray, blk: LstmBlock, hidden: int):
    """Unidirectional pass over xs (T, In); returns hidden states and caches."""
    T = xs.shape[0]
    h = np.zeros(hidden)
    c = np.zeros(hidden)
    hs = np.zeros((T, hidden))
    caches = []
    for t in range(T):
        z = blk.wx @ xs[t] + blk.wh @ h + blk.b
        i = _sigmoid(z[:hidden])
        f = _sigmoid(z[hidden: 2 * hidden])
        g = np.tanh(z[2 * hidden: 3 * hidden])
        o = _sigmoid(z[3 * hidden:])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        caches.append({"x": xs[t], "h_prev": h, "c_prev": c, "i": i, "f": f, "g": g, "o": o, "tanh_c": tanh_c})
        h, c = h_new, c_new
        hs[t] = h
    return hs, caches


def _lstm_backward(d_hs: np.ndarray, caches, blk: LstmBlock, hidden: int, prefix: str, grads):
    """BPTT; d_hs (T, H) are gradients on the per-step hidden states.

    Returns gradients on the inputs xs (T, In).
    """
    T = d_hs.shape[0]
    d_xs = np.zeros((T, blk.wx.shape[1]))
    dh_next = np.zeros(hidden)
    dc_next = np.zeros(hidden)
    for t in range(T - 1, -1, -1):
        cc = caches[t]
        dh = d_hs[t] + dh_next
        do = dh * cc["tanh_c"] * cc["o"] * (1.0 - cc["o"])
        dc = dh * cc["o"] * (1.0 - cc["tanh_c"] ** 2) + dc_next
        di = dc * cc["g"] * cc["i"] * (1.0 - cc["i"])
        df = dc * cc["c_prev"] * cc["f"] * (1.0 - cc["f"])
        dg = dc * cc["i"] * (1.0 - cc["g"] ** 2)
        dz = np.concatenate([di, df, dg, do])
        grads[f"{prefix}.wx"] += np.outer(dz, cc["x"])
        grads[f"{prefix}.wh"] += np.outer(dz, cc["h_prev"])
        grads[f"{prefix}.b"] += dz
        d_xs[t] = blk.wx.T @ dz
        dh_next = blk.wh.T @ dz
        dc_next = dc * cc["f"]
    return d_xs


def emissions_forward(
    token_texts: list[str],
    table: EmbeddingTable,
    params: NetworkParams,
    config: NetworkConfig,
    vocab: CharVocab,
    dropout_seed=None,
):
    """Per-token emission scores (T, num_tags) plus the backward cache.

    Dropout (inverted, scaled by 1/(1-rate)) is applied to the LSTM input
    only when a dropout_seed is given.
    """
    T = len(token_texts)
    if T < 1:
        raise ValidationError("emissions require at least one token")
    if T > MAX_SENTENCE_LEN:
        raise ValidationError(f"sentence of {T} tokens exceeds the {MAX_SENTENCE_LEN}-token limit")
    if table.dim != config.word_dim:
        raise ValidationError(f"embedding dim {table.dim} does not match configured word_dim {config.word_dim}")

    word_vecs = np.stack([table.lookup(t) for t in token_texts])
    char_caches = []
    char_feats = np.zeros((T, config.char_filter_count))
    for t, text in enumerate(token_texts):
        char_feats[t], cc = char_features_forward(text, vocab, params, config)
        char_caches.append(cc)
    _check_finite(char_feats, "char features")

    xs = np.concatenate([word_vecs, char_feats], axis=1)
    mask = None
    if dropout_seed is not None and config.dropout_rate > 0.0:
        mask = dropout_mask(xs.shape, config.dropout_rate, dropout_seed)
        xs = xs * mask

    h = config.lstm_hidden
    hs_fw, cache_fw = _lstm_forward(xs, params.lstm_fw, h)
    hs_bw_rev, cache_bw = _lstm_forward(xs[::-1], params.lstm_bw, h)
    hs_bw = hs_bw_rev[::-1]
    _check_finite(hs_fw, "forward LSTM")
    _check_finite(hs_bw, "backward LSTM")

    hidden = np.concatenate([hs_fw, hs_bw], axis=1)  # (T, 2H)
    emis = hidden @ params.proj_weights + params.proj_bias
    _check_finite(emis, "projection")

    cache = {
        "char_caches": char_caches,
        "mask": mask,
        "cache_fw": cache_fw,
        "cache_bw": cache_bw,
        "hidden": hidden,
        "T": T,
    }
    return emis, cache


def emissions(sentence, table, params, config, vocab, dropout_seed=None) -> np.ndarray:
    """Emission matrix for a Sentence or a list of token strings."""
    texts = sentence if isinstance(sentence, list) else sentence.texts
    emis, _ = emissions_forward(texts, table, params, config, vocab, dropout_seed)
    return emis


def emissions_backward(d_emis: np.ndarray, cache, params: NetworkParams, config: NetworkConfig, grads):
    """Accumulate network gradients given d loss / d emissions."""
    hidden = cache["hidden"]
    grads["proj_weights"] += hidden.T @ d_emis
    grads["proj_bias"] += d_emis.sum(axis=0)
    d_hidden = d_emis @ params.proj_weights.T  # (T, 2H)

    h = config.lstm_hidden
    d_xs_fw = _lstm_backward(d_hidden[:, :h], cache["cache_fw"], params.lstm_fw, h, "lstm_fw", grads)
    d_xs_bw_rev = _lstm_backward(d_hidden[::-1, h:], cache["cache_bw"], params.lstm_bw, h, "lstm_bw", grads)
    d_xs = d_xs_fw + d_xs_bw_rev[::-1]

    if cache["mask"] is not None:
        d_xs = d_xs * cache["mask"]

    d_char = d_xs[:, config.word_dim:]  # word vectors are frozen
    for t, cc in enumerate(cache["char_caches"]):
        char_features_backward(d_char[t], cc, params, config, grads)
