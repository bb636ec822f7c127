"""Sparse target-by-context co-occurrence matrices and PPMI weighting."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import sparse

from .corpus import TokenStream, Vocabulary
from .errors import ConfigMismatchError, DataError, FormatError
from .vector_space import VectorSpace, WordVector


@dataclass(frozen=True)
class WindowConfig:
    """Symmetric context window: `radius` tokens on each side of the target."""

    radius: int = 10
    cross_document: bool = False

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError("window radius must be >= 1")
        if self.cross_document:
            raise ValueError("windows never cross document boundaries")


class CooccurrenceMatrix:
    """Symmetric co-occurrence counts over a vocabulary.

    counts[t, c] is the number of times a token of type c appears within
    the window of an occurrence of t, summed over the corpus. The target
    occurrence itself is left out of its own window, but other occurrences
    of the same type inside the window do count, so the diagonal holds
    same-type co-occurrence. Stored sparse; zero cells are absent.
    """

    def __init__(self, vocab: Vocabulary, counts: sparse.csr_matrix, window: WindowConfig):
        counts = counts.tocsr()
        counts.eliminate_zeros()
        counts.sort_indices()
        if counts.shape != (len(vocab), len(vocab)):
            raise ValueError("count matrix shape does not match vocabulary size")
        self.vocab = vocab
        self.counts = counts.astype(np.int64)
        self.window = window
        self.total = int(self.counts.sum())

    def count(self, target: str, context: str) -> int:
        t = self.vocab.index_of(target)
        c = self.vocab.index_of(context)
        return int(self.counts[t, c])

    def validate(self) -> None:
        """Check the symmetry and positivity invariants (used by tests)."""
        if (self.counts != self.counts.T).nnz != 0:
            raise AssertionError("co-occurrence matrix is not symmetric")
        if self.counts.nnz and self.counts.data.min() <= 0:
            raise AssertionError("stored counts must be positive")
        if self.total % 2 != 0:
            raise AssertionError("total count must be even")

    def same_counts(self, other: "CooccurrenceMatrix") -> bool:
        return (
            self.vocab == other.vocab
            and self.window == other.window
            and self.counts.shape == other.counts.shape
            and (self.counts != other.counts).nnz == 0
        )

    def to_space(self) -> VectorSpace:
        """View the raw count rows as vectors over context dimensions."""
        return VectorSpace(self.vocab, self.counts.astype(np.float64), kind="counts")


def _pair_keys(streams: Iterable[TokenStream], vocab: Vocabulary, radius: int) -> np.ndarray:
    """Encoded (earlier, later) index pairs for every in-window position pair."""
    vsize = len(vocab)
    chunks: list[np.ndarray] = []
    for stream in streams:
        ids = np.asarray(vocab.index_sequence(stream.tokens), dtype=np.int64)
        n = ids.size
        for d in range(1, min(radius, n - 1) + 1):
            a, b = ids[:-d], ids[d:]
            m = (a >= 0) & (b >= 0)
            if m.any():
                chunks.append(a[m] * vsize + b[m])
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks)


def count_cooccurrences(
    streams: Iterable[TokenStream],
    vocab: Vocabulary,
    window: WindowConfig = WindowConfig(),
) -> CooccurrenceMatrix:
    """Count in-window co-occurrences over the streams.

    Out-of-vocabulary tokens still occupy window positions (they are not
    spliced out the way stoplisted tokens are); they simply contribute no
    counts. Windows never cross document boundaries.
    """
    vsize = len(vocab)
    keys = _pair_keys(streams, vocab, window.radius)
    if keys.size:
        uniq, cnt = np.unique(keys, return_counts=True)
        forward = sparse.coo_matrix(
            (cnt, (uniq // vsize, uniq % vsize)), shape=(vsize, vsize), dtype=np.int64
        ).tocsr()
        full = forward + forward.T
    else:
        full = sparse.csr_matrix((vsize, vsize), dtype=np.int64)
    return CooccurrenceMatrix(vocab, full, window)


def augment_counts(
    base: CooccurrenceMatrix,
    new_streams: Iterable[TokenStream],
    window: WindowConfig | None = None,
) -> CooccurrenceMatrix:
    """Add new documents to an existing matrix.

    New word types are appended to the vocabulary, so existing indices are
    stable. Because windows never cross documents, the result equals a
    fresh count over the union of all streams under the extended
    vocabulary.
    """
    if window is not None and window != base.window:
        raise ConfigMismatchError(
            f"window mismatch: base uses radius {base.window.radius}, "
            f"augmentation requested radius {window.radius}"
        )
    new_streams = list(new_streams)
    extra: Counter[str] = Counter()
    for stream in new_streams:
        extra.update(stream.tokens)
    vocab = base.vocab.extended(extra)
    vsize = len(vocab)
    old = base.counts.tocoo()
    resized = sparse.csr_matrix(
        (old.data, (old.row, old.col)), shape=(vsize, vsize), dtype=np.int64
    )
    added = count_cooccurrences(new_streams, vocab, base.window)
    return CooccurrenceMatrix(vocab, resized + added.counts, base.window)


def ppmi_transform(m: CooccurrenceMatrix) -> VectorSpace:
    """Reweight counts by positive pointwise mutual information.

    Cell (t, c) becomes max(0, ln(count[t,c] * total / (rowsum[t] * colsum[c]))).
    Non-positive cells are dropped, so the result stays sparse; a pair is
    kept only when it co-occurs more than its margins predict.
    """
    if m.total <= 0:
        raise DataError("cannot PPMI-transform an empty co-occurrence matrix")
    coo = m.counts.tocoo()
    rowsum = np.asarray(m.counts.sum(axis=1)).ravel().astype(np.float64)
    colsum = np.asarray(m.counts.sum(axis=0)).ravel().astype(np.float64)
    pmi = np.log(coo.data.astype(np.float64) * float(m.total)) - np.log(
        rowsum[coo.row] * colsum[coo.col]
    )
    keep = pmi > 0.0
    weighted = sparse.coo_matrix(
        (pmi[keep], (coo.row[keep], coo.col[keep])),
        shape=m.counts.shape,
    ).tocsr()
    return VectorSpace(m.vocab, weighted, kind="ppmi")


def row_vector(source: CooccurrenceMatrix | VectorSpace, word: str) -> WordVector:
    """The row for `word` as a dense vector in canonical index order."""
    if isinstance(source, CooccurrenceMatrix):
        idx = source.vocab.index_of(word)
        row = np.asarray(source.counts[idx].todense(), dtype=np.float64).ravel()
        return WordVector(word, row)
    return source.vector(word)


COOC_MAGIC = "COOC v1"


def save_cooc(m: CooccurrenceMatrix, path: str | Path) -> None:
    """Write the matrix in the COOC v1 text format.

    Header `COOC v1 <vocab_size> <radius>`, one `index<TAB>token<TAB>freq`
    line per vocabulary entry, then `t<TAB>c<TAB>count` triples with
    t <= c; the lower triangle is reconstructed on load.
    """
    lines = [f"{COOC_MAGIC} {len(m.vocab)} {m.window.radius}"]
    for token, index, freq in m.vocab.items():
        lines.append(f"{index}\t{token}\t{freq}")
    coo = m.counts.tocoo()
    upper = sorted(
        (int(r), int(c), int(v))
        for r, c, v in zip(coo.row, coo.col, coo.data)
        if r <= c
    )
    lines.extend(f"{r}\t{c}\t{v}" for r, c, v in upper)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_cooc(path: str | Path) -> CooccurrenceMatrix:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].startswith(COOC_MAGIC):
        raise FormatError(f"{path}: not a {COOC_MAGIC} file")
    header = lines[0].split()
    try:
        vsize, radius = int(header[2]), int(header[3])
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{path}: malformed header {lines[0]!r}") from exc
    if len(lines) < 1 + vsize:
        raise FormatError(f"{path}: truncated vocabulary block")
    tokens: list[str] = [""] * vsize
    freqs: list[int] = [0] * vsize
    for line in lines[1 : 1 + vsize]:
        idx_s, token, freq_s = line.split("\t")
        tokens[int(idx_s)] = token
        freqs[int(idx_s)] = int(freq_s)
    vocab = Vocabulary(tokens, freqs)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[int] = []
    for line in lines[1 + vsize :]:
        if not line:
            continue
        t_s, c_s, v_s = line.split("\t")
        t, c, v = int(t_s), int(c_s), int(v_s)
        if t > c:
            raise FormatError(f"{path}: triple {line!r} violates t <= c")
        rows.append(t)
        cols.append(c)
        vals.append(v)
        if t != c:
            rows.append(c)
            cols.append(t)
            vals.append(v)
    counts = sparse.coo_matrix((vals, (rows, cols)), shape=(vsize, vsize), dtype=np.int64)
    return CooccurrenceMatrix(vocab, counts.tocsr(), WindowConfig(radius=radius))
