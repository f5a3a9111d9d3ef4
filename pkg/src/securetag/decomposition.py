"""Multi-scale variation decomposition of RSS segments.

A segment is delay-embedded into a Hankel matrix, unmixed with FastICA and
every independent component is projected back to a time series by diagonal
averaging (single channel ICA). The components are then grouped by
agglomerative clustering under a dynamic time warping distance, and the
earliest cluster holding enough low-frequency energy becomes the
large-scale variation. Everything else is small-scale variation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np

from .channel import RssTrace
from .errors import DomainError, SilentSegment

DEFAULT_LOWEST_FREQ = 0.5  # Hz
DEFAULT_BAND = (0.0, 1.0)  # Hz, (lo, hi]
DEFAULT_ENERGY_RATIO = 0.5


@dataclass(frozen=True, eq=False)
class Segment:
    """A fixed-length slice of an RSS trace."""

    values: np.ndarray
    sample_rate: float
    link_id: str = "link"
    start: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class ComponentSet:
    """Independent components of one segment.

    ``components`` is ``(n, T)``; summing its rows and adding ``mean``
    reproduces the segment. ``mixing`` is ``(L, n)`` and ``unmixing`` is
    ``(n, L)``. When whitening drops near-null directions, their tiny
    remainder is kept as the last component so the sum stays exact.
    """

    components: np.ndarray
    mixing: np.ndarray
    unmixing: np.ndarray
    mean: float
    sample_rate: float

    def __len__(self):
        return len(self.components)

    def reconstruction(self) -> np.ndarray:
        return self.components.sum(axis=0)


@dataclass(frozen=True)
class ClusterTree:
    """Merge history of agglomerative clustering.

    Leaves are ``0..n_leaves-1``; the cluster created by merge ``i`` gets id
    ``n_leaves + i``, as in :func:`scipy.cluster.hierarchy.linkage`.
    """

    n_leaves: int
    merges: tuple = ()

    def members(self, cluster: int) -> tuple:
        if cluster < self.n_leaves:
            return (cluster,)
        a, b, _ = self.merges[cluster - self.n_leaves]
        return tuple(sorted(self.members(a) + self.members(b)))

    def candidates(self):
        """Clusters in order of creation: leaves first, then each merge."""
        for leaf in range(self.n_leaves):
            yield leaf
        for i in range(len(self.merges)):
            yield self.n_leaves + i


@dataclass(frozen=True, eq=False)
class VariationSplit:
    large_scale: np.ndarray
    small_scale: np.ndarray
    members: tuple = ()
    reached: bool = True


def segment_trace(trace: RssTrace, interval_seconds: float) -> list:
    """Cut ``trace`` into back-to-back segments, dropping the partial tail."""
    if not interval_seconds > 0:
        raise DomainError("interval_seconds must be > 0")
    if len(trace) < 2:
        return []
    rate = trace.sample_rate
    n = int(round(interval_seconds * rate))
    if n < 1:
        raise DomainError(f"interval {interval_seconds} s holds no samples at {rate} Hz")
    values = np.asarray(trace.values, dtype=float)
    return [Segment(values[i:i + n], rate, trace.link_id, i)
            for i in range(0, len(values) - n + 1, n)]


def embedding_dimension(f_s: float, f_l: float = DEFAULT_LOWEST_FREQ) -> int:
    """Embedding dimension ``ceil(1.5 * f_s / f_l)``."""
    if not (f_l > 0 and f_s > 2 * f_l):
        raise DomainError(f"need f_s > 2*f_l > 0, got f_s={f_s}, f_l={f_l}")
    return math.ceil(1.5 * f_s / f_l)


def embed(x, L: int) -> np.ndarray:
    """Hankel delay embedding: row ``i`` is ``x[i:i+K]`` with ``K = T-L+1``."""
    x = np.asarray(x.values if isinstance(x, Segment) else x, dtype=float)
    T = len(x)
    if not 1 <= L < T:
        raise DomainError(f"embedding dimension must satisfy 1 <= L < T, got L={L}, T={T}")
    K = T - L + 1
    return np.lib.stride_tricks.sliding_window_view(x, K)[:L].copy()


def diagonal_average(matrix) -> np.ndarray:
    """Average each anti-diagonal of an ``L x K`` matrix into a series.

    Deviations are averaged around the first element of each anti-diagonal,
    so constant anti-diagonals (a Hankel matrix) come back bit-exact.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise DomainError("diagonal_average expects a 2-D matrix")
    L, K = m.shape
    ref = np.concatenate([m[0], m[1:, -1]])
    diag = np.add.outer(np.arange(L), np.arange(K)).ravel()
    acc = np.bincount(diag, weights=(m - ref[diag].reshape(L, K)).ravel(), minlength=L + K - 1)
    counts = np.bincount(diag, minlength=L + K - 1)
    return ref + acc / counts


def _sym_decorrelate(w):
    s, u = np.linalg.eigh(w @ w.T)
    s = np.clip(s, np.finfo(float).tiny, None)
    return (u * (1.0 / np.sqrt(s))) @ u.T @ w


def fast_ica(matrix, seed: int = 0, *, max_iter: int = 200, tol: float = 1e-4,
             rank_tol: float = 1e-10):
    """FastICA on the rows of ``matrix`` (``L`` mixtures of ``K`` samples).

    Rows are whitened through the eigen-decomposition of their second-moment
    matrix (eigenvalues below ``rank_tol`` times the largest are discarded),
    then a symmetric fixed-point iteration with the log-cosh contrast runs
    until the largest change of any unmixing direction stays below ``tol``
    for two consecutive iterations.

    Returns
    -------
    unmixing : ndarray, shape (n, L)
        ``unmixing @ matrix`` gives the independent components (unit power).
    mixing : ndarray, shape (L, n)
        ``mixing @ unmixing @ matrix`` projects ``matrix`` onto the retained
        whitening subspace.
    """
    v = np.asarray(matrix, dtype=float)
    L, K = v.shape
    cov = v @ v.T / K
    evals, evecs = np.linalg.eigh(cov)
    if evals[-1] <= 0 or not np.any(v):
        raise SilentSegment("zero-variance input cannot be separated")
    keep = evals > rank_tol * evals[-1]
    evals, evecs = evals[keep][::-1], evecs[:, keep][:, ::-1]
    n = len(evals)
    whitening = (evecs / np.sqrt(evals)).T  # (n, L)
    z = whitening @ v  # (n, K), z @ z.T / K == I

    rng = np.random.default_rng(seed)
    w = _sym_decorrelate(rng.standard_normal((n, n)))
    calm = 0
    for _ in range(max_iter):
        y = np.tanh(w @ z)
        w_new = _sym_decorrelate(y @ z.T / K - np.diag((1.0 - y * y).mean(axis=1)) @ w)
        change = np.max(np.abs(np.abs(np.einsum("ij,ij->i", w_new, w)) - 1.0))
        w = w_new
        # a start near a saddle barely moves at first; demand two quiet steps
        calm = calm + 1 if change < tol else 0
        if calm == 2:
            break

    unmixing = w @ whitening
    mixing = (evecs * np.sqrt(evals)) @ w.T
    return unmixing, mixing


def scica(segment: Segment, f_l: float = DEFAULT_LOWEST_FREQ, seed: int = 0,
          *, variance_floor: float = 1e-10) -> ComponentSet:
    """Single channel ICA of one segment.

    The segment mean is removed before embedding and stored on the result.
    The embedding dimension is capped at half the segment length so that the
    Hankel matrix has at least as many columns as rows.
    """
    x = np.asarray(segment.values, dtype=float)
    mean = float(x.mean())
    centered = x - mean
    if not np.any(centered):
        raise SilentSegment("segment has zero variance")
    L = min(embedding_dimension(segment.sample_rate, f_l), len(x) // 2)
    v = embed(centered, L)
    unmixing, mixing = fast_ica(v, seed)
    u = unmixing @ v
    comps = np.array([diagonal_average(np.outer(mixing[:, i], u[i]))
                      for i in range(len(u))])

    variances = comps.var(axis=1)
    big = variances >= variance_floor * variances.sum()
    order = np.argsort(-variances[big], kind="stable")
    kept = comps[big][order]
    mixing, unmixing = mixing[:, big][:, order], unmixing[big][order]
    remainder = centered - kept.sum(axis=0)
    if np.max(np.abs(remainder)) > 1e-12 * max(1.0, np.max(np.abs(centered))):
        kept = np.vstack([kept, remainder])
        mixing = np.hstack([mixing, np.zeros((L, 1))])
        unmixing = np.vstack([unmixing, np.zeros((1, L))])
    return ComponentSet(kept, mixing, unmixing, mean, segment.sample_rate)


@numba.njit(cache=True)
def _dtw(a, b):
    n, m = len(a), len(b)
    prev = np.full(m + 1, np.inf)
    prev[0] = 0.0
    cur = np.empty(m + 1)
    for i in range(1, n + 1):
        cur[0] = np.inf
        for j in range(1, m + 1):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = abs(a[i - 1] - b[j - 1]) + best
        prev, cur = cur, prev
    return prev[m]


def dtw_distance(a, b) -> float:
    """Unconstrained DTW with absolute-difference local cost."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise DomainError("DTW needs two non-empty series")
    return float(_dtw(a, b))


def _znorm(x):
    std = x.std()
    return (x - x.mean()) / std if std > 1e-12 else x


def dtw_matrix(series: Sequence, normalize: bool = True) -> np.ndarray:
    """Symmetric matrix of pairwise DTW distances.

    With ``normalize``, a pair is compared on z-normalized values when both
    members have a standard deviation above 1e-12.
    """
    raw = [np.asarray(s, dtype=float) for s in series]
    normed = [_znorm(s) for s in raw]
    n = len(raw)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            both = normalize and raw[i].std() > 1e-12 and raw[j].std() > 1e-12
            a, b = (normed[i], normed[j]) if both else (raw[i], raw[j])
            out[i, j] = out[j, i] = dtw_distance(a, b)
    return out


def average_linkage(dist) -> ClusterTree:
    """Agglomerative clustering with average linkage on a distance matrix.

    Cluster distances are updated with the Lance-Williams rule. Ties are
    broken towards the pair containing the lowest leaf index.
    """
    d = np.array(dist, dtype=float)
    n = len(d)
    np.fill_diagonal(d, np.inf)
    slot_id = list(range(n))  # cluster id living in each matrix slot
    sizes = np.ones(n)
    first_leaf = np.arange(n)
    active = np.ones(n, dtype=bool)
    merges = []
    for step in range(n - 1):
        sub = np.where(active[:, None] & active[None, :], d, np.inf)
        best = sub.min()
        rows, cols = np.nonzero(np.triu(sub == best, 1))
        keys = [tuple(sorted((first_leaf[r], first_leaf[c]))) for r, c in zip(rows, cols)]
        k = min(range(len(keys)), key=keys.__getitem__)
        a, b = rows[k], cols[k]
        merges.append((slot_id[a], slot_id[b], float(best)))
        merged = (sizes[a] * d[a] + sizes[b] * d[b]) / (sizes[a] + sizes[b])
        d[a], d[:, a] = merged, merged
        d[a, a] = np.inf
        active[b] = False
        sizes[a] += sizes[b]
        first_leaf[a] = min(first_leaf[a], first_leaf[b])
        slot_id[a] = n + step
    return ClusterTree(n, tuple(merges))


def cluster_components(components) -> ClusterTree:
    """Average-linkage clustering of components under DTW distance."""
    series = components.components if isinstance(components, ComponentSet) else components
    if len(series) < 2:
        return ClusterTree(len(series), ())
    return average_linkage(dtw_matrix(series))


def low_freq_energy(series, f_s: float, band=DEFAULT_BAND) -> float:
    """Sum of FFT magnitudes over ``band[0] < f <= band[1]``, DC excluded."""
    x = np.asarray(series, dtype=float)
    if len(x) < 4:
        raise DomainError("low_freq_energy needs at least 4 samples")
    mags = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(len(x), d=1.0 / f_s)
    sel = (freqs > max(band[0], 0.0)) & (freqs <= band[1])
    return float(mags[sel].sum())


def select_variations(tree: ClusterTree, components: ComponentSet,
                      energy_ratio: float = DEFAULT_ENERGY_RATIO,
                      band=DEFAULT_BAND) -> VariationSplit:
    """Split components into large- and small-scale variations.

    Candidates are visited in creation order (single components, then every
    merge). The first whose summed series holds at least ``energy_ratio`` of
    the segment's low-frequency energy is the large-scale variation. If none
    qualifies (no low-frequency energy at all) the root is used and
    ``reached`` is False.
    """
    if not 0 < energy_ratio < 1:
        raise DomainError("energy_ratio must lie in (0, 1)")
    comps = components.components
    f_s = components.sample_rate
    total = low_freq_energy(comps.sum(axis=0), f_s, band)
    chosen, reached = None, False
    for cluster in tree.candidates():
        members = tree.members(cluster)
        energy = low_freq_energy(comps[list(members)].sum(axis=0), f_s, band)
        if energy > 0 and energy >= energy_ratio * total:
            chosen, reached = members, True
            break
    if chosen is None:
        chosen = tuple(range(len(comps)))
    mask = np.zeros(len(comps), dtype=bool)
    mask[list(chosen)] = True
    large = comps[mask].sum(axis=0)
    small = comps[~mask].sum(axis=0) if (~mask).any() else np.zeros(comps.shape[1])
    return VariationSplit(large, small, tuple(chosen), reached)


def decompose(segment: Segment, f_l: float = DEFAULT_LOWEST_FREQ, seed: int = 0,
              energy_ratio: float = DEFAULT_ENERGY_RATIO,
              band=DEFAULT_BAND) -> VariationSplit:
    """Full pipeline: scica, DTW clustering, variation selection."""
    comps = scica(segment, f_l, seed)
    return select_variations(cluster_components(comps), comps, energy_ratio, band)
