"""Pure numpy kernels; semantics match the compiled core exactly.

All kernels are integer-valued, so the two backends give bit-identical
results and chains driven through either produce the same trajectories.
"""

import numpy as np


def s_code(items, sigma_rank):
    """Discrepancy code of the ranked prefix `items` against a center.

    sigma_rank[i] is the position the center assigns to item i.  Entry j
    of the result counts the items the center prefers to items[j] among
    those not already placed at ranks < j.
    """
    it = np.ascontiguousarray(items, dtype=np.int64)
    sr = np.ascontiguousarray(sigma_rank, dtype=np.int64)
    p = sr[it]
    earlier_better = p[:, None] > p[None, :]  # [j, k]: items[k] beats items[j] under the center
    return p - np.tril(earlier_better, -1).sum(axis=1, dtype=np.int64)


def s_codes(items, sigma_ranks):
    """s_code against several centers at once; sigma_ranks is (C, n)."""
    it = np.ascontiguousarray(items, dtype=np.int64)
    srs = np.ascontiguousarray(sigma_ranks, dtype=np.int64)
    p = srs[:, it]  # (C, t)
    earlier_better = p[:, :, None] > p[:, None, :]
    mask = np.tri(p.shape[1], k=-1, dtype=bool)
    return p - (earlier_better & mask).sum(axis=2, dtype=np.int64)


def build_from_code(s, sigma_order):
    """Invert s_code: rebuild the ranked items from a code and a center.

    Entry j of the code selects the (s[j]+1)-th best item, under the
    center's order, among the items not yet placed.
    """
    sv = np.ascontiguousarray(s, dtype=np.int64)
    remaining = [int(x) for x in np.asarray(sigma_order)]
    out = np.empty(sv.size, dtype=np.int64)
    for j, k in enumerate(sv.tolist()):
        if k < 0 or k >= len(remaining):
            raise ValueError("code entry out of range")
        out[j] = remaining.pop(k)
    return out
