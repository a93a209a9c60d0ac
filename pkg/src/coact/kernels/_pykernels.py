"""NumPy fallback implementations of the table-scan kernels.

Contract (shared with ``_ckernels``): the table ``t`` is a C-contiguous
``uint8`` array of shape ``(nA, nB, nC, nU)`` with values in {0, 1}.
Axis 0 is factor A, axis 1 is factor B; ``target``/``actor`` select one
of those two axes.  Every returned index tuple is the lexicographically
first match in row-major scan order, so the two backends are
interchangeable down to the exact witnesses they emit.
"""

from __future__ import annotations

import numpy as np


def is_irrelevant(t: np.ndarray, target: int, c: int, u: int) -> bool:
    """True iff the outcome never changes as the target factor varies at (c, u)."""
    ctx = t[:, :, c, u]
    if target == 0:
        return bool((ctx == ctx[:1, :]).all())
    return bool((ctx == ctx[:, :1]).all())


def first_interference_witness(t: np.ndarray, actor: int):
    """First context where the actor can silence a partner that visibly matters.

    Scans contexts (c, u) lexicographically.  A context qualifies when the
    partner factor is not irrelevant given the actor *and* some actor value
    forces the outcome to 0 for every partner value.  Returns
    ``(c, u, forcing, anchor, varying)`` with all entries as indices on the
    actor axis (forcing, anchor) / partner axis (varying), or ``None``:

    * ``forcing`` — smallest actor index whose slice is identically 0;
    * ``anchor``  — smallest actor index at which the partner matters;
    * ``varying`` — smallest partner index differing from partner index 0
      at the anchor.
    """
    n_c, n_u = t.shape[2], t.shape[3]
    for c in range(n_c):
        for u in range(n_u):
            ctx = t[:, :, c, u]
            if actor == 1:
                ctx = ctx.T
            # rows now index the actor, columns the partner
            nonconst = (ctx != ctx[:, :1]).any(axis=1)
            if not nonconst.any():
                continue
            zero = ~ctx.astype(bool).any(axis=1)
            if not zero.any():
                continue
            forcing = int(np.argmax(zero))
            anchor = int(np.argmax(nonconst))
            varying = int(np.argmax(ctx[anchor] != ctx[anchor, 0]))
            return (c, u, forcing, anchor, varying)
    return None


def monotone_flags(t: np.ndarray, target: int) -> tuple[bool, bool]:
    """(non-decreasing, non-increasing) along the target axis, jointly over all slices."""
    d = np.diff(t.astype(np.int8), axis=target)
    return (not bool((d < 0).any()), not bool((d > 0).any()))


def _first_true(mask: np.ndarray):
    flat = np.argmax(mask)
    return np.unravel_index(flat, mask.shape)


def first_consistency_violation(t: np.ndarray, target: int):
    """First pair of target levels whose pointwise order flips across slices.

    Pairs (i1, i2), i1 < i2, are scanned in lexicographic order; within a
    violating pair the reported positions are the first slice where
    level i1 beats level i2 and the first where it loses.  Returns
    ``(i1, i2, pos_gt, pos_lt)`` with 3-tuple positions over the remaining
    axes in their original order, or ``None`` when the order never flips.
    """
    work = t if target == 0 else np.moveaxis(t, 1, 0)
    # axes of `work`: (target, partner, c, u); positions reported over the
    # last three axes, which preserve their original relative order.
    n = work.shape[0]
    w = work.astype(np.int8)
    for i1 in range(n):
        for i2 in range(i1 + 1, n):
            diff = w[i1] - w[i2]
            gt = diff > 0
            lt = diff < 0
            if gt.any() and lt.any():
                pos_gt = tuple(int(x) for x in _first_true(gt))
                pos_lt = tuple(int(x) for x in _first_true(lt))
                return (i1, i2, pos_gt, pos_lt)
    return None


def first_insensitivity_violation(t: np.ndarray, target: int, block_start: int):
    """First slice where the outcome reappears above a zero inside the block.

    The block is the upper index range [block_start, n) of the target axis.
    A slice (over the non-target axes) violates insensitivity when some
    block level maps to 0 while a higher level maps back to 1.  Returns
    ``(zero_idx, one_idx, pos)`` — target indices plus the 3-tuple slice
    position, scanned lexicographically — or ``None``.
    """
    work = t if target == 0 else np.moveaxis(t, 1, 0)
    suffix = work[block_start:]
    if suffix.shape[0] == 0:
        return None
    zeros = suffix == 0
    has_zero = zeros.any(axis=0)
    n_suf = suffix.shape[0]
    first_zero = np.argmax(zeros, axis=0)
    later = np.arange(n_suf).reshape(n_suf, 1, 1, 1) > first_zero[np.newaxis]
    one_after = ((suffix == 1) & later).any(axis=0)
    violating = has_zero & one_after
    if not violating.any():
        return None
    pos = _first_true(violating)
    col = suffix[(slice(None),) + pos]
    zero_idx = int(np.argmax(col == 0))
    one_idx = zero_idx + 1 + int(np.argmax(col[zero_idx + 1 :] == 1))
    return (
        block_start + zero_idx,
        block_start + one_idx,
        tuple(int(x) for x in pos),
    )
