"""Differential vs absolute instability between two vector-space models.

Differential comparison works on neighbor lists and never needs the two
spaces to share a basis or even a dimensionality. Absolute comparison
(displacement) only makes sense between equal-dimension spaces and, unless
they are aligned first, is basis-dependent.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import stats

from .corpus import TokenStream
from .errors import (
    DataError,
    DimensionMismatchError,
    NumericalError,
    UnknownWordError,
)
from .trainer import EmbeddingSpace, TrainingConfig, train_cbow, train_skipgram
from .vector_space import NeighborList, VectorSpace, nearest_neighbors

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


# ---------------------------------------------------------------------------
# small dense SVD


def jacobi_svd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD of a small dense matrix by one-sided Jacobi rotations.

    Columns of a working copy are pairwise rotated until mutually
    orthogonal (relative off-diagonal dot below 1e-12, at most 100
    sweeps); their norms are the singular values. Returns (u, s, vt) with
    m = u @ diag(s) @ vt, singular values descending.
    """
    a = np.asarray(m, dtype=np.float64).copy()
    if a.ndim != 2:
        raise ValueError("jacobi_svd expects a 2-d matrix")
    n, d = a.shape
    if n < d:
        raise ValueError("jacobi_svd expects n >= d (pass the transpose)")
    v = np.eye(d)
    for _ in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = float(a[:, p] @ a[:, q])
                app = float(a[:, p] @ a[:, p])
                aqq = float(a[:, q] @ a[:, q])
                if abs(apq) <= JACOBI_TOL * math.sqrt(app * aqq):
                    continue
                theta = 0.5 * math.atan2(2.0 * apq, aqq - app)
                c, s = math.cos(theta), math.sin(theta)
                col_p = c * a[:, p] - s * a[:, q]
                col_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = col_p, col_q
                vec_p = c * v[:, p] - s * v[:, q]
                vec_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = vec_p, vec_q
                rotated = True
        if not rotated:
            break
    sigma = np.linalg.norm(a, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    a = a[:, order]
    v = v[:, order]
    u = np.zeros_like(a)
    cutoff = sigma[0] * 1e-12 if sigma.size else 0.0
    nonzero = sigma > cutoff
    u[:, nonzero] = a[:, nonzero] / sigma[nonzero]
    for j in np.flatnonzero(~nonzero):
        u[:, j] = _orthonormal_fill(u, j, n)
    return u, sigma, v.T


def _orthonormal_fill(u: np.ndarray, col: int, n: int) -> np.ndarray:
    """Deterministically extend partial orthonormal columns with a new one."""
    for basis in range(n):
        cand = np.zeros(n)
        cand[basis] = 1.0
        for _ in range(2):  # reorthogonalize twice for full precision
            for j in range(u.shape[1]):
                if j != col:
                    cand -= (cand @ u[:, j]) * u[:, j]
        norm = np.linalg.norm(cand)
        if norm > 1e-6:
            return cand / norm
    raise NumericalError("could not complete an orthonormal basis")


# ---------------------------------------------------------------------------
# rotations and alignment


def random_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal matrix from the QR factorization of a Gaussian draw."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def random_signed_permutation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal matrix that permutes coordinate axes with random signs.

    Axis relabelings are the rigid motions under which every supported
    measure (cosine, Euclidean, and city-block) is exactly preserved;
    a generic rotation preserves only the first two.
    """
    perm = rng.permutation(dim)
    signs = rng.integers(0, 2, size=dim) * 2 - 1
    q = np.zeros((dim, dim))
    q[np.arange(dim), perm] = signs
    return q


ROTATION_STYLES = ("signed_permutation", "haar")


def random_rotation(
    space: VectorSpace,
    seed: int,
    style: str = "signed_permutation",
    identity: bool = False,
) -> VectorSpace:
    """Apply one seeded rigid rotation about the origin to every vector.

    `identity=True` is a test hook: the space comes back bitwise
    unchanged. Sparse (count-derived) spaces are refused because rotation
    densifies them.
    """
    if space.is_sparse:
        raise DataError("cannot rotate a sparse count space; use a dense embedding")
    if identity:
        rotated = np.array(space.vectors)
    else:
        rng = np.random.default_rng(seed)
        if style == "haar":
            q = random_orthogonal(space.dim, rng)
        elif style == "signed_permutation":
            q = random_signed_permutation(space.dim, rng)
        else:
            raise ValueError(f"unknown rotation style {style!r}")
        rotated = space.vectors @ q
    if isinstance(space, EmbeddingSpace):
        provenance = dict(space.provenance)
        provenance["rotation"] = {"seed": seed, "style": style, "identity": identity}
        return EmbeddingSpace(space.vocab, rotated, provenance=provenance)
    return VectorSpace(space.vocab, rotated, kind=space.kind)


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    rotation: np.ndarray
    residual: float
    shared_vocab: tuple[str, ...]
    underdetermined: bool = False

    def __post_init__(self):
        r = self.rotation
        if not np.allclose(r.T @ r, np.eye(r.shape[0]), atol=1e-8):
            raise NumericalError("alignment produced a non-orthogonal rotation")


def _shared_tokens(a: VectorSpace, b: VectorSpace) -> list[str]:
    return [t for t in a.vocab.tokens if t in b.vocab]


def _dense_rows(space: VectorSpace, tokens: Sequence[str]) -> np.ndarray:
    idx = [space.vocab.index_of(t) for t in tokens]
    if space.is_sparse:
        return np.asarray(space.vectors[idx].todense(), dtype=np.float64)
    return np.asarray(space.vectors[idx], dtype=np.float64)


def procrustes_align(x: VectorSpace, y: VectorSpace) -> AlignmentResult:
    """Least-squares rotation of x onto y over their shared vocabulary.

    Shared rows are mean-centered, and the rotation is u @ vt from the
    SVD of Xc.T @ Yc; no scaling or translation is applied to the model
    itself. The residual is the Frobenius norm of Xc @ R - Yc. Fewer
    shared words than dimensions leaves the rotation underdetermined,
    which is flagged rather than refused.
    """
    if x.dim != y.dim:
        raise DimensionMismatchError(
            f"cannot align a {x.dim}-d space with a {y.dim}-d space"
        )
    shared = _shared_tokens(x, y)
    if not shared:
        raise DataError("no shared vocabulary to align on")
    xm = _dense_rows(x, shared)
    ym = _dense_rows(y, shared)
    xc = xm - xm.mean(axis=0)
    yc = ym - ym.mean(axis=0)
    u, _, vt = jacobi_svd(xc.T @ yc)
    rotation = u @ vt
    residual = float(np.linalg.norm(xc @ rotation - yc))
    return AlignmentResult(
        rotation=rotation,
        residual=residual,
        shared_vocab=tuple(shared),
        underdetermined=len(shared) < x.dim,
    )


def apply_alignment(space: VectorSpace, result: AlignmentResult) -> VectorSpace:
    """Rotate every vector of `space` by the alignment rotation."""
    if space.is_sparse:
        raise DataError("cannot rotate a sparse count space; use a dense embedding")
    rotated = space.vectors @ result.rotation
    if isinstance(space, EmbeddingSpace):
        provenance = dict(space.provenance)
        provenance["aligned"] = {"residual": result.residual}
        return EmbeddingSpace(space.vocab, rotated, provenance=provenance)
    return VectorSpace(space.vocab, rotated, kind=space.kind)


# ---------------------------------------------------------------------------
# neighbor-list comparison


@dataclass(frozen=True)
class NeighborDiff:
    word: str
    overlap_at_k: float
    jaccard_at_k: float
    exact_order: bool
    rank_agreement: float | None
    k_used: int


def _top_tokens(nl: NeighborList, k: int) -> list[str]:
    return [t for t in nl.tokens() if t != nl.query][:k]


def _effective_k(a: NeighborList, b: NeighborList, k: int) -> int:
    if k < 1:
        raise ValueError("k must be >= 1")
    if a.query != b.query:
        raise DataError(
            f"neighbor lists answer different queries: {a.query!r} vs {b.query!r}"
        )
    available = min(
        len([t for t in a.tokens() if t != a.query]),
        len([t for t in b.tokens() if t != b.query]),
    )
    if available == 0:
        raise DataError(f"empty neighbor list for {a.query!r}")
    if available < k:
        warnings.warn(
            f"k={k} clamped to {available} (shortest list) for {a.query!r}",
            stacklevel=3,
        )
        return available
    return k


def overlap_at_k(a: NeighborList, b: NeighborList, k: int) -> float:
    """Fraction of shared words between the two top-k lists."""
    k_eff = _effective_k(a, b, k)
    sa, sb = set(_top_tokens(a, k_eff)), set(_top_tokens(b, k_eff))
    return len(sa & sb) / k_eff


def jaccard_at_k(a: NeighborList, b: NeighborList, k: int) -> float:
    k_eff = _effective_k(a, b, k)
    sa, sb = set(_top_tokens(a, k_eff)), set(_top_tokens(b, k_eff))
    return len(sa & sb) / len(sa | sb)


def _rank_agreement(tokens_a: list[str], tokens_b: list[str]) -> float | None:
    """Kendall tau-b between the two rankings, restricted to shared words.

    Undefined (None) when fewer than two words are shared; never coerced
    to 0.
    """
    set_b = set(tokens_b)
    common = [t for t in tokens_a if t in set_b]
    if len(common) < 2:
        return None
    pos_b = {t: i for i, t in enumerate(tokens_b)}
    ranks_a = list(range(len(common)))
    ranks_b = [pos_b[t] for t in common]
    tau = stats.kendalltau(ranks_a, ranks_b, variant="b").statistic
    return None if np.isnan(tau) else float(tau)


def diff_neighbor_lists(a: NeighborList, b: NeighborList, k: int) -> NeighborDiff:
    """All comparison metrics between two ranked lists for the same query."""
    k_eff = _effective_k(a, b, k)
    ta, tb = _top_tokens(a, k_eff), _top_tokens(b, k_eff)
    sa, sb = set(ta), set(tb)
    return NeighborDiff(
        word=a.query,
        overlap_at_k=len(sa & sb) / k_eff,
        jaccard_at_k=len(sa & sb) / len(sa | sb),
        exact_order=ta == tb,
        rank_agreement=_rank_agreement(ta, tb),
        k_used=k_eff,
    )


def neighbor_diff(
    space_a: VectorSpace,
    space_b: VectorSpace,
    word: str,
    k: int = 10,
    metric: str = "cosine",
) -> NeighborDiff:
    """Differential comparison of one word between two models.

    The spaces may have different dimensionalities; only the ranked
    neighbor lists are compared.
    """
    if word not in space_a.vocab:
        raise UnknownWordError(word, "the first model")
    if word not in space_b.vocab:
        raise UnknownWordError(word, "the second model")
    la = nearest_neighbors(space_a, word, k, metric)
    lb = nearest_neighbors(space_b, word, k, metric)
    return diff_neighbor_lists(la, lb, k)


@dataclass(frozen=True)
class Displacement:
    word: str
    euclidean: float
    cosine: float | None
    aligned: bool


def displacement(
    space_a: VectorSpace,
    space_b: VectorSpace,
    word: str,
    aligned: bool = False,
) -> Displacement:
    """Absolute movement of a word between two equal-dimension spaces.

    Reported as the Euclidean norm of the difference, alongside the cosine
    between the two versions (None when either vector is all-zero). With
    aligned=False the value is basis-dependent; rotate one space onto the
    other with procrustes_align first for a meaningful number.
    """
    if space_a.dim != space_b.dim:
        raise DimensionMismatchError(
            f"spaces have dimensions {space_a.dim} and {space_b.dim}; "
            "displacement needs a common basis - align with procrustes_align first"
        )
    va = space_a.dense_row(space_a.vocab.index_of(word))
    vb = space_b.dense_row(space_b.vocab.index_of(word))
    euclid = float(np.linalg.norm(va - vb))
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    cos = float(va @ vb / (na * nb)) if na > 0 and nb > 0 else None
    return Displacement(word=word, euclidean=euclid, cosine=cos, aligned=aligned)


# ---------------------------------------------------------------------------
# whole-model reports


@dataclass(frozen=True, eq=False)
class StabilityReport:
    diffs: dict[str, NeighborDiff]
    displacements: dict[str, Displacement] | None
    aggregates: dict
    frequency_correlation: float | None
    metadata: dict

    def to_json_dict(self) -> dict:
        per_word = {}
        for word, d in self.diffs.items():
            record = {
                "overlap_at_k": d.overlap_at_k,
                "jaccard_at_k": d.jaccard_at_k,
                "exact_order": d.exact_order,
                "rank_agreement": d.rank_agreement,
                "k_used": d.k_used,
            }
            if self.displacements is not None:
                record["displacement"] = self.displacements[word].euclidean
            per_word[word] = record
        return {
            "metadata": self.metadata,
            "aggregates": self.aggregates,
            "frequency_correlation": self.frequency_correlation,
            "words": per_word,
        }

    def to_csv(self) -> str:
        lines = ["word,frequency,overlap,jaccard,exact_order,rank_agreement,displacement"]
        freqs = self.metadata.get("frequencies", {})
        for word, d in self.diffs.items():
            rank = "" if d.rank_agreement is None else f"{d.rank_agreement:.10f}"
            disp = ""
            if self.displacements is not None:
                disp = f"{self.displacements[word].euclidean:.10f}"
            lines.append(
                f"{word},{freqs.get(word, '')},{d.overlap_at_k:.10f},"
                f"{d.jaccard_at_k:.10f},{str(d.exact_order).lower()},{rank},{disp}"
            )
        return "\n".join(lines) + "\n"


def _spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    if len(x) < 2:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rho = stats.spearmanr(x, y).statistic
    return None if np.isnan(rho) else float(rho)


def stability_report(
    model_a: VectorSpace,
    model_b: VectorSpace,
    k: int = 10,
    metric: str = "cosine",
    words: Sequence[str] | None = None,
) -> StabilityReport:
    """Word-by-word differential comparison of two models.

    Covers exactly the shared vocabulary (or the given subset of it).
    Displacements are included only when the dimensionalities match, and
    are computed in the raw bases (not aligned). The frequency
    correlation is the Spearman rank correlation between word frequency
    in the first model and overlap; it is None when either side is
    constant.
    """
    shared = _shared_tokens(model_a, model_b)
    if words is not None:
        requested = set(words)
        missing = requested - set(shared)
        if missing:
            raise UnknownWordError(sorted(missing)[0], "both models")
        shared = [t for t in shared if t in requested]
    if not shared:
        raise DataError("models share no vocabulary")
    comparable = model_a.dim == model_b.dim
    diffs: dict[str, NeighborDiff] = {}
    disps: dict[str, Displacement] | None = {} if comparable else None
    for word in shared:
        la = nearest_neighbors(model_a, word, k, metric)
        lb = nearest_neighbors(model_b, word, k, metric)
        diffs[word] = diff_neighbor_lists(la, lb, k)
        if comparable:
            disps[word] = displacement(model_a, model_b, word)
    overlaps = np.array([d.overlap_at_k for d in diffs.values()])
    jaccards = np.array([d.jaccard_at_k for d in diffs.values()])
    agreements = [d.rank_agreement for d in diffs.values() if d.rank_agreement is not None]
    quant = np.quantile(overlaps, [0.0, 0.25, 0.5, 0.75, 1.0])
    aggregates = {
        "words": len(shared),
        "mean_overlap": float(overlaps.mean()),
        "mean_jaccard": float(jaccards.mean()),
        "exact_order_fraction": float(
            np.mean([d.exact_order for d in diffs.values()])
        ),
        "overlap_quantiles": {
            "min": float(quant[0]),
            "q25": float(quant[1]),
            "median": float(quant[2]),
            "q75": float(quant[3]),
            "max": float(quant[4]),
        },
        "mean_rank_agreement": float(np.mean(agreements)) if agreements else None,
        "rank_agreement_undefined": len(diffs) - len(agreements),
    }
    if disps is not None:
        aggregates["mean_displacement"] = float(
            np.mean([d.euclidean for d in disps.values()])
        )
    freqs = {w: model_a.vocab.frequency(w) for w in shared}
    corr = _spearman([freqs[w] for w in shared], [diffs[w].overlap_at_k for w in shared])
    metadata = {
        "k": k,
        "metric": metric,
        "dims": [model_a.dim, model_b.dim],
        "comparable_dims": comparable,
        "aligned": False,
        "frequencies": freqs,
    }
    return StabilityReport(
        diffs=diffs,
        displacements=disps,
        aggregates=aggregates,
        frequency_correlation=corr,
        metadata=metadata,
    )


# ---------------------------------------------------------------------------
# cross-seed experiments


@dataclass(frozen=True, eq=False)
class CrossSeedReport:
    seeds: tuple[int, ...]
    k: int
    metric: str
    per_word_mean_overlap: dict[str, float]
    per_pair_mean_overlap: dict[str, float]
    mean_overlap: float

    def to_json_dict(self) -> dict:
        return {
            "seeds": list(self.seeds),
            "k": self.k,
            "metric": self.metric,
            "mean_overlap": self.mean_overlap,
            "per_pair_mean_overlap": self.per_pair_mean_overlap,
            "per_word_mean_overlap": self.per_word_mean_overlap,
        }


def _thread_cap() -> int:
    raw = os.environ.get("DRIFTBENCH_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def cross_seed_stability(
    streams: Sequence[TokenStream],
    config: TrainingConfig,
    seeds: Sequence[int],
    k: int = 10,
    metric: str = "cosine",
    architecture: str = "cbow",
) -> CrossSeedReport:
    """Train one embedding per seed and measure cross-seed neighbor overlap.

    Every listed seed pair (self-pairs excluded) contributes an
    overlap_at_k per word; per-word values are averaged over pairs and
    then over words. Each training run is deterministic in isolation, so
    running unique seeds concurrently (capped by DRIFTBENCH_THREADS)
    cannot change the result.
    """
    if len(seeds) < 2:
        raise ValueError("cross-seed stability needs at least 2 seeds")
    streams = list(streams)
    train = train_cbow if architecture == "cbow" else train_skipgram
    unique = sorted(set(seeds))

    def run(seed: int) -> tuple[int, EmbeddingSpace]:
        try:
            return seed, train(streams, replace(config, seed=seed))
        except Exception as exc:
            exc.args = (f"[seed {seed}] {exc}",)
            raise

    cap = min(_thread_cap(), len(unique))
    if cap > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cap) as pool:
            spaces = dict(pool.map(run, unique))
    else:
        spaces = dict(run(s) for s in unique)

    vocab_tokens = spaces[unique[0]].vocab.tokens
    tables = {
        s: {w: nearest_neighbors(spaces[s], w, k, metric) for w in vocab_tokens}
        for s in unique
    }
    per_word_sums = {w: 0.0 for w in vocab_tokens}
    per_pair: dict[str, float] = {}
    pairs = [
        (seeds[i], seeds[j])
        for i in range(len(seeds))
        for j in range(i + 1, len(seeds))
    ]
    for sa, sb in pairs:
        pair_sum = 0.0
        for w in vocab_tokens:
            value = overlap_at_k(tables[sa][w], tables[sb][w], k)
            per_word_sums[w] += value
            pair_sum += value
        per_pair[f"{sa}-{sb}"] = pair_sum / len(vocab_tokens)
    per_word = {w: total / len(pairs) for w, total in per_word_sums.items()}
    return CrossSeedReport(
        seeds=tuple(seeds),
        k=k,
        metric=metric,
        per_word_mean_overlap=per_word,
        per_pair_mean_overlap=per_pair,
        mean_overlap=float(np.mean(list(per_word.values()))),
    )
