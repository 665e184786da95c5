"""Top-t rankings, their per-rank discrepancy codes, and additive
sufficient statistics.

Items are integers 0..n-1.  A ranking lists its t best items in order of
preference; the remaining n-t items are unranked and exchangeable.  The
code of a ranking against a center permutation gives, rank by rank, how
many still-unplaced items the center would have preferred; codes
determine the ranking given the center and vice versa.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from . import _kernels as kern


class Permutation:
    """A full ordering of n items; ``order[k]`` is the item at rank k."""

    __slots__ = ("order", "_rank")

    def __init__(self, order: Sequence[int] | np.ndarray):
        arr = np.ascontiguousarray(order, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("order must be a nonempty 1-d sequence")
        n = arr.size
        if ((arr < 0) | (arr >= n)).any():
            raise ValueError("order must contain item ids in [0, n)")
        seen = np.zeros(n, dtype=bool)
        seen[arr] = True
        if not seen.all():
            raise ValueError("order must be a permutation of 0..n-1")
        arr.setflags(write=False)
        self.order = arr
        self._rank = None

    @property
    def n(self) -> int:
        return int(self.order.size)

    @property
    def rank(self) -> np.ndarray:
        """rank[i] is the position of item i (inverse of ``order``)."""
        if self._rank is None:
            r = np.empty(self.order.size, dtype=np.int64)
            r[self.order] = np.arange(self.order.size, dtype=np.int64)
            r.setflags(write=False)
            self._rank = r
        return self._rank

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n, dtype=np.int64))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(rng.permutation(n).astype(np.int64))

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(self.order, other.order)

    def __hash__(self) -> int:
        return hash(self.order.tobytes())

    def __repr__(self) -> str:
        return f"Permutation({self.order.tolist()})"


class TopTRanking:
    """The t most-preferred of n items, best first, with 1 <= t <= n-1.

    A sequence listing all n items carries no more information than its
    first n-1 entries, so full permutations are stored truncated.
    """

    __slots__ = ("items", "n")

    def __init__(self, items: Sequence[int] | np.ndarray, n: int):
        arr = np.ascontiguousarray(items, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("a ranking must list at least one item")
        if arr.size > n:
            raise ValueError(f"ranking lists {arr.size} items but n={n}")
        if ((arr < 0) | (arr >= n)).any():
            raise ValueError(f"item ids must lie in [0, {n})")
        if np.unique(arr).size != arr.size:
            raise ValueError("ranking repeats an item")
        if arr.size == n:
            arr = arr[: n - 1]
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self.items = arr
        self.n = int(n)

    @property
    def t(self) -> int:
        return int(self.items.size)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TopTRanking)
            and self.n == other.n
            and np.array_equal(self.items, other.items)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.items.tobytes()))

    def __repr__(self) -> str:
        return f"TopTRanking({self.items.tolist()}, n={self.n})"


class CodeVector:
    """Per-rank discrepancy counts; entry j lies in {0, ..., n-1-j}."""

    __slots__ = ("s", "n")

    def __init__(self, s: Sequence[int] | np.ndarray, n: int):
        arr = np.ascontiguousarray(s, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0 or arr.size > n - 1:
            raise ValueError("code length must lie in [1, n-1]")
        hi = np.int64(n) - 1 - np.arange(arr.size, dtype=np.int64)
        if ((arr < 0) | (arr > hi)).any():
            raise ValueError("code entry out of range")
        arr.setflags(write=False)
        self.s = arr
        self.n = int(n)

    @property
    def t(self) -> int:
        return int(self.s.size)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CodeVector)
            and self.n == other.n
            and np.array_equal(self.s, other.s)
        )

    def __repr__(self) -> str:
        return f"CodeVector({self.s.tolist()}, n={self.n})"


def code(pi: TopTRanking, sigma: Permutation) -> CodeVector:
    """Discrepancy code of ``pi`` against the center ``sigma``.

    Entry j counts the items that the center prefers to pi's rank-j item
    among those pi has not placed at ranks <= j.
    """
    if pi.n != sigma.n:
        raise ValueError("ranking and center sizes differ")
    return CodeVector(kern.s_code(pi.items, sigma.rank), pi.n)


def build_from_code(cv: CodeVector, sigma: Permutation) -> TopTRanking:
    """Invert :func:`code`: entry j picks the (s_j+1)-th best unplaced item."""
    if cv.n != sigma.n:
        raise ValueError("code and center sizes differ")
    return TopTRanking(kern.build_from_code(cv.s, sigma.order), cv.n)


def l_sigma(matrix: np.ndarray, sigma: Permutation):
    """Sum of ``matrix[i, ip]`` over pairs the center ranks ip above i.

    Linear in the matrix argument; on the rank-j count matrix of a single
    ranking it returns that ranking's rank-j code entry.
    """
    A = np.asarray(matrix)
    if A.shape != (sigma.n, sigma.n):
        raise ValueError("matrix shape must be (n, n)")
    rank = sigma.rank
    mask = rank[:, None] > rank[None, :]
    return A[mask].sum().item()


class SuffStats:
    """Additive sufficient statistics of a multiset of top-t rankings.

    For each rank j < t_max a sparse row map holds, for every item that
    some member places at rank j, the count vector over column items the
    member had not yet placed.  N_j[j] counts members ranking more than j
    items; N is the member count.  add/remove/merge keep everything
    incremental, which is what the cluster moves in the samplers rely on.
    """

    __slots__ = ("n", "t_max", "N", "N_j", "_rows")

    def __init__(self, n: int, t_max: int):
        if not 1 <= t_max <= n - 1:
            raise ValueError("need 1 <= t_max <= n-1")
        self.n = int(n)
        self.t_max = int(t_max)
        self.N = 0
        self.N_j = np.zeros(t_max, dtype=np.int64)
        self._rows: list[dict[int, np.ndarray]] = [{} for _ in range(t_max)]

    @classmethod
    def from_rankings(
        cls, rankings: Iterable[TopTRanking], n: int, t_max: int | None = None
    ) -> "SuffStats":
        rankings = list(rankings)
        if t_max is None:
            if not rankings:
                raise ValueError("cannot infer t_max from an empty collection")
            t_max = max(pi.t for pi in rankings)
        stats = cls(n, t_max)
        for pi in rankings:
            stats.add(pi)
        return stats

    def add(self, pi: TopTRanking) -> None:
        self._check(pi)
        items = pi.items
        for j in range(pi.t):
            row = int(items[j])
            vec = self._rows[j].get(row)
            if vec is None:
                vec = np.zeros(self.n, dtype=np.int64)
                self._rows[j][row] = vec
            vec += 1
            vec[items[: j + 1]] -= 1
            self.N_j[j] += 1
        self.N += 1

    def remove(self, pi: TopTRanking) -> None:
        self._check(pi)
        if self.N == 0:
            raise ValueError("removing from empty statistics")
        items = pi.items
        for j in range(pi.t):
            row = int(items[j])
            vec = self._rows[j].get(row)
            if vec is None:
                raise ValueError("removing a ranking that was never added")
            vec -= 1
            vec[items[: j + 1]] += 1
            if (vec < 0).any():
                raise ValueError("removing a ranking that was never added")
            if not vec.any():
                del self._rows[j][row]
            self.N_j[j] -= 1
        self.N -= 1

    def merge(self, other: "SuffStats") -> None:
        if other.n != self.n or other.t_max != self.t_max:
            raise ValueError("statistics dimensions differ")
        for j in range(self.t_max):
            for row, vec in other._rows[j].items():
                mine = self._rows[j].get(row)
                if mine is None:
                    self._rows[j][row] = vec.copy()
                else:
                    mine += vec
        self.N_j += other.N_j
        self.N += other.N

    def s_vector(self, sigma: Permutation) -> np.ndarray:
        """Per-rank sums of member codes against ``sigma``."""
        if sigma.n != self.n:
            raise ValueError("center size differs")
        rank = sigma.rank
        out = np.zeros(self.t_max, dtype=np.int64)
        for j, rows in enumerate(self._rows):
            tot = 0
            for row, vec in rows.items():
                tot += int(vec @ (rank < rank[row]))
            out[j] = tot
        return out

    def weighted_r(self, theta: np.ndarray) -> np.ndarray:
        """Dense sum of the per-rank count matrices weighted by theta."""
        th = np.asarray(theta, dtype=np.float64)
        if th.shape != (self.t_max,):
            raise ValueError("theta length must equal t_max")
        R = np.zeros((self.n, self.n))
        for j, rows in enumerate(self._rows):
            w = th[j]
            if w == 0.0:
                continue
            for row, vec in rows.items():
                R[row] += w * vec
        return R

    def rank_matrix(self, j: int) -> np.ndarray:
        """Dense copy of the rank-j count matrix."""
        R = np.zeros((self.n, self.n), dtype=np.int64)
        for row, vec in self._rows[j].items():
            R[row] = vec
        return R

    def to_dense(self) -> np.ndarray:
        return np.stack([self.rank_matrix(j) for j in range(self.t_max)])

    def _check(self, pi: TopTRanking) -> None:
        if pi.n != self.n:
            raise ValueError("ranking size differs from statistics")
        if pi.t > self.t_max:
            raise ValueError("ranking longer than these statistics allow")

    def __repr__(self) -> str:
        return f"SuffStats(n={self.n}, t_max={self.t_max}, N={self.N})"


def r_matrices(pi: TopTRanking, t_max: int | None = None) -> SuffStats:
    """Sufficient statistics of a single ranking."""
    return SuffStats.from_rankings([pi], pi.n, t_max=t_max)
