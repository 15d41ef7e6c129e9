"""Convolution over the word/relation sequence of a shortest dependency
path, with max-over-time pooling.

The path is viewed as an alternating sequence bounded by learned start/end
sentinel relation vectors. One window is taken per path word, centered on
it and spanning k consecutive items of the alternating sequence (stride 2
between windows). Word slots falling outside the sequence are filled with
a learned pad vector; relation slots outside take the nearer sentinel's
vector. Window vectors are concatenated, pushed through the filter matrix
(plus bias and tanh by default), and the feature map is max-pooled
elementwise across windows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import PATH_END, PATH_START
from .numerics import ParameterStore, ShapeMismatch, matvec, tanh_backward
from .subtree import PAD_WORD, REL_EMB

CONV_W = "conv_w"
CONV_B = "conv_b"

WORD_SLOT = "word"
REL_SLOT = "rel"
START = "start"
END = "end"


class InvalidWindowSize(ValueError):
    pass


def check_window_size(k: int) -> None:
    if k < 3 or k % 2 == 0:
        raise InvalidWindowSize(f"window size must be odd and >= 3, got {k}")


def words_per_window(k: int) -> int:
    """Number of word slots in one window.

    Word slots sit at even offsets from the (word) center, so the count is
    the number of even integers in [-(k-1)/2, (k-1)/2]: 1 for k=3, 3 for
    k=5 and k=7, 5 for k=9, ...
    """
    check_window_size(k)
    return 2 * ((k - 1) // 4) + 1


def window_width(k: int, dim: int, dim_c: int) -> int:
    """Length of a concatenated window vector: dim per item plus dim_c per
    word slot."""
    return dim * k + dim_c * words_per_window(k)


def build_windows(n_words: int, k: int) -> list[list[tuple]]:
    """One window per path word. Slots are (kind, ref) pairs: word slots
    reference a 0-based path-word position (None = pad), relation slots a
    0-based inner-relation position or a sentinel marker."""
    check_window_size(k)
    if n_words < 1:
        raise ValueError("a path has at least one word")
    windows = []
    half = (k - 1) // 2
    for word_pos in range(n_words):
        center = 2 * word_pos + 1      # word w_j sits at sequence index 2j+1
        window = []
        for offset in range(-half, half + 1):
            idx = center + offset
            if idx % 2 == 1:           # odd sequence indices are words
                word = (idx - 1) // 2
                window.append((WORD_SLOT, word if 0 <= word < n_words else None))
            elif idx <= 0:
                window.append((REL_SLOT, START))
            elif idx >= 2 * n_words:
                window.append((REL_SLOT, END))
            else:
                window.append((REL_SLOT, idx // 2 - 1))
        windows.append(window)
    return windows


def max_over_time(feature_map: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise max across windows; ties go to the lowest window index."""
    pooled = feature_map.max(axis=0)
    argmax = feature_map.argmax(axis=0)
    return pooled, argmax


@dataclass
class ConvCache:
    windows: list[list[tuple]]
    slot_rows: list[list[int | None]]   # relation-embedding row per slot (None for words/pad)
    inputs: list[np.ndarray]            # concatenated window vectors
    feature_map: np.ndarray             # post-activation, one row per window
    pooled: np.ndarray
    argmax: np.ndarray
    use_tanh: bool


def conv_forward(windows, word_vecs, rel_labels, store: ParameterStore, vocab,
                 use_tanh: bool = True) -> ConvCache:
    """Run the filter over every window and max-pool the feature map.

    word_vecs are the encoded p_w vectors of the path words, in order;
    rel_labels the directed labels of the relations between them (one fewer
    than words).
    """
    conv_w = store.value(CONV_W)
    conv_b = store.value(CONV_B)
    rel_emb = store.value(REL_EMB)
    pad = store.value(PAD_WORD)
    start_row = vocab.relation_row(PATH_START)
    end_row = vocab.relation_row(PATH_END)
    label_rows = [vocab.relation_row(label) for label in rel_labels]

    inputs = []
    slot_rows: list[list[int | None]] = []
    feature_rows = []
    for window in windows:
        pieces = []
        rows: list[int | None] = []
        for kind, ref in window:
            if kind == WORD_SLOT:
                pieces.append(pad if ref is None else word_vecs[ref])
                rows.append(None)
            else:
                row = start_row if ref == START else end_row if ref == END else label_rows[ref]
                pieces.append(rel_emb[row])
                rows.append(row)
        x = np.concatenate(pieces)
        if x.size != conv_w.shape[1]:
            raise ShapeMismatch(
                f"window vector has length {x.size}, filter expects {conv_w.shape[1]}")
        pre = matvec(conv_w, x) + conv_b
        feature_rows.append(np.tanh(pre) if use_tanh else pre)
        inputs.append(x)
        slot_rows.append(rows)

    feature_map = np.stack(feature_rows)
    pooled, argmax = max_over_time(feature_map)
    return ConvCache(list(windows), slot_rows, inputs, feature_map, pooled,
                     argmax, use_tanh)


def conv_backward(cache: ConvCache, upstream: np.ndarray,
                  store: ParameterStore, vocab) -> list[np.ndarray]:
    """Route each pooled coordinate's gradient into its argmax window, then
    through the filter into relation embeddings, the pad vector, and the
    path-word vectors (returned, in path order)."""
    conv_w = store.value(CONV_W)
    n_windows = len(cache.inputs)

    d_features = np.zeros_like(cache.feature_map)
    for coord, win in enumerate(cache.argmax):
        d_features[win, coord] += upstream[coord]

    word_dim = store.value(PAD_WORD).size
    rel_dim = store.value(REL_EMB).shape[1]
    d_words: dict[int, np.ndarray] = {}
    for i in range(n_windows):
        d_out = d_features[i]
        if not d_out.any():
            continue
        d_pre = tanh_backward(cache.feature_map[i], d_out) if cache.use_tanh else d_out
        store.grad(CONV_W)[...] += np.outer(d_pre, cache.inputs[i])
        store.grad(CONV_B)[...] += d_pre
        d_x = conv_w.T @ d_pre
        offset = 0
        for (kind, ref), row in zip(cache.windows[i], cache.slot_rows[i]):
            if kind == WORD_SLOT:
                segment = d_x[offset:offset + word_dim]
                if ref is None:
                    store.grad(PAD_WORD)[...] += segment
                else:
                    d_words.setdefault(ref, np.zeros(word_dim))
                    d_words[ref] += segment
                offset += word_dim
            else:
                store.grad(REL_EMB)[row] += d_x[offset:offset + rel_dim]
                offset += rel_dim

    total_words = len(cache.windows)
    return [d_words.get(i, np.zeros(word_dim)) for i in range(total_words)]
