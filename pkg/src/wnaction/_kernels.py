"""Compiled inner loops for the chain dynamic program.

Heights are integer y-grid indices ``-J..J``; array index is ``J + height``.
A segment ``s`` of length ``seg`` (in x-units) covers the ``seg * m`` columns
starting at ``s * seg * m``.  The transition weight of a segment from height
``a`` to ``b`` is the column-midpoint noise sum minus ``(b - a)**2 dy**2 / (2 seg)``;
every DP value, brute-force total and swept entry is accumulated left to right
with this one function so equal paths give bit-equal totals.
"""

import math

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True)
def snap_half_toward_zero(t):
    if t >= 0.0:
        return int(math.ceil(t - 0.5))
    return -int(math.ceil(-t - 0.5))


@njit(cache=True)
def snap_tables(seg, m, dmax):
    """Column offsets of the snapped midpoint height for every step ``d``.

    For column ``r`` of a segment the midpoint height is ``a + d * (2r+1)/(2n)``
    (``n = seg * m``).  Its snapped index is ``a + off[dmax + d, r]``, plus one
    when ``tie[dmax + d, r]`` is set and the midpoint height is negative
    (exact half-integers round toward zero).
    """
    n = seg * m
    den = 2 * n
    off = np.empty((2 * dmax + 1, n), dtype=np.int64)
    tie = np.zeros((2 * dmax + 1, n), dtype=np.int64)
    for dd in range(2 * dmax + 1):
        d = dd - dmax
        for r in range(n):
            num = d * (2 * r + 1)
            fl = num // den
            rem = num - fl * den
            if 2 * rem == den:
                off[dd, r] = fl
                tie[dd, r] = 1
            elif 2 * rem < den:
                off[dd, r] = fl
            else:
                off[dd, r] = fl + 1
    return off, tie


@njit(cache=True)
def _weight(B, J, n, den, c0, off, tie, dmax, pen, a, b):
    d = b - a
    dd = dmax + d
    acc = 0.0
    ja = J + a
    base = a * den
    for r in range(n):
        # branch-free tie correction keeps the loop tight
        neg = 1 if base + d * (2 * r + 1) < 0 else 0
        acc += B[c0 + r, ja + off[dd, r] + (tie[dd, r] & neg)]
    ad = d if d >= 0 else -d
    return acc - pen[ad]


@njit(cache=True)
def penalties(dy, seg, dmax):
    pen = np.empty(dmax + 1)
    for d in range(dmax + 1):
        step = d * dy
        pen[d] = step * step / (2.0 * seg)
    return pen


@njit(cache=True)
def seg_weight(B, J, m, seg, dy, s, a, b):
    """Transition weight of segment ``s`` (reference implementation)."""
    ncol = seg * m
    den = 2.0 * ncol
    d = b - a
    c0 = s * ncol
    acc = 0.0
    for r in range(ncol):
        t = a + (d * (2 * r + 1)) / den
        acc += B[c0 + r, J + snap_half_toward_zero(t)]
    step = d * dy
    return acc - step * step / (2.0 * seg)


@njit(cache=True)
def range_max_tables(B, J, m, seg, nseg):
    """Summed dyadic range maxima of the columns of every segment.

    ``left[s, p, i]`` is the sum over the segment's columns of
    ``max B[col, max(0, i - 2**p) .. i]``; ``right`` is the mirror image.
    """
    K = 2 * J + 1
    n = seg * m
    npow = 1
    while (1 << (npow - 1)) < K:
        npow += 1
    left = np.zeros((nseg, npow, K))
    right = np.zeros((nseg, npow, K))
    cur = np.empty(K)
    nxt = np.empty(K)
    for s in range(nseg):
        for r in range(n):
            row = B[s * n + r]
            for i in range(K):
                cur[i] = row[i]
            for p in range(npow):
                width = 1 << p
                for i in range(K):
                    j = i - width
                    v = cur[i]
                    if p == 0:
                        if i >= 1 and row[i - 1] > v:
                            v = row[i - 1]
                    else:
                        h = i - (width >> 1)
                        if h < 0:
                            h = 0
                        if cur[h] > v:
                            v = cur[h]
                    nxt[i] = v
                for i in range(K):
                    cur[i] = nxt[i]
                    left[s, p, i] += cur[i]
            for i in range(K):
                cur[i] = row[i]
            for p in range(npow):
                width = 1 << p
                for i in range(K - 1, -1, -1):
                    v = cur[i]
                    if p == 0:
                        if i + 1 < K and row[i + 1] > v:
                            v = row[i + 1]
                    else:
                        h = i + (width >> 1)
                        if h > K - 1:
                            h = K - 1
                        if cur[h] > v:
                            v = cur[h]
                    nxt[i] = v
                for i in range(K):
                    cur[i] = nxt[i]
                    right[s, p, i] += cur[i]
    return left, right


@njit(cache=True)
def _build_sparse_max(prev, ST):
    K = prev.shape[0]
    for i in range(K):
        ST[0, i] = prev[i]
    p = 1
    while p < ST.shape[0]:
        h = 1 << (p - 1)
        for i in range(K):
            v = ST[p - 1, i]
            if i + h < K and ST[p - 1, i + h] > v:
                v = ST[p - 1, i + h]
            ST[p, i] = v
        p += 1


@njit(cache=True, inline="always")
def _range_max(ST, lo, hi):
    width = hi - lo + 1
    p = 0
    while (2 << p) <= width:
        p += 1
    a = ST[p, lo]
    b = ST[p, hi - (1 << p) + 1]
    return a if a > b else b


@njit(cache=True, inline="always")
def _is_checkpoint(d):
    # 4, 6, 8, 12, 16, 24, ...
    if d < 4:
        return False
    while d > 3 and (d & 1) == 0:
        d >>= 1
    return d <= 3


@njit(cache=True, inline="always")
def _side_exhausted(ST, rmax, s, bi, d, sign, K, pen, best):
    """True when no candidate at distance >= d on one side can beat ``best``.

    Distances ``[d 2^i, d 2^(i+1))`` form blocks; a block is bounded by the
    max of F over its heights, plus the summed column maxima over heights
    between ``b`` and its far end, minus the penalty at its near end.
    """
    npow = rmax.shape[1]
    tol = 1e-9 * (1.0 + abs(best))
    near = d
    while True:
        if sign < 0:
            hi = bi - near
            if hi < 0:
                return True
            lo = bi - 2 * near + 1
            if lo < 0:
                lo = 0
        else:
            lo = bi + near
            if lo >= K:
                return True
            hi = bi + 2 * near - 1
            if hi > K - 1:
                hi = K - 1
        q = 0
        while (1 << q) < 2 * near and q < npow - 1:
            q += 1
        fmax = _range_max(ST, lo, hi)
        if fmax > NEG_INF:
            dn = near if near < pen.shape[0] else pen.shape[0] - 1
            if fmax + rmax[s, q, bi] - pen[dn] >= best - tol:
                return False
        near = 2 * near


@njit(cache=True)
def prepare(B, J, m, seg, nseg, dy):
    """Per-field lookup tables shared by every pass over the same field."""
    K = 2 * J + 1
    off, tie = snap_tables(seg, m, K)
    pen = penalties(dy, seg, K)
    left, right = range_max_tables(B, J, m, seg, nseg)
    return off, tie, pen, left, right


@njit(cache=True)
def band_table(B, J, n, nseg, off, tie, dmax, pen, band):
    """Cached transition weights ``T[s, J + b, band + a - b]`` for ``|a - b| <= band``.

    Entries are produced by the same routine as direct evaluation, so a
    cached and a recomputed weight are bit-identical.
    """
    K = 2 * J + 1
    T = np.full((nseg, K, 2 * band + 1), NEG_INF)
    for s in range(nseg):
        c0 = s * n
        for bi in range(K):
            lo = bi - band if bi - band > 0 else 0
            hi = bi + band if bi + band < K - 1 else K - 1
            for ai in range(lo, hi + 1):
                T[s, bi, band + ai - bi] = _weight(B, J, n, 2 * n, c0, off, tie, dmax, pen, ai - J, bi - J)
    return T


@njit(cache=True)
def _sweep_band(K):
    return 64 if K > 65 else K - 1


@njit(cache=True)
def forward_dp(B, J, m, seg, nseg, dy, start):
    """Exact forward pass from a fixed left height.

    Returns the value table ``F[s, J + h]`` (best partial sum reaching height
    ``h`` at node ``s``) and back-pointers.  Candidates are scanned outward from
    ``a = b``; at every power-of-two distance the remaining candidates on a side
    are bounded (running max of ``F`` + range-max noise - slope penalty) and the
    side is abandoned once the bound falls below the incumbent.  Ties prefer
    the smaller predecessor height.
    """
    off, tie, pen, left, right = prepare(B, J, m, seg, nseg, dy)
    n = seg * m
    T = band_table(B, J, n, nseg, off, tie, 2 * J + 1, pen, 0)
    return _forward(B, J, n, 2 * n, nseg, start, off, tie, 2 * J + 1, pen, left, right, T, 0)


@njit(cache=True)
def _forward(B, J, n, den, nseg, start, off, tie, dmax, pen, left, right, T, band):
    K = 2 * J + 1
    F = np.full((nseg + 1, K), NEG_INF)
    P = np.full((nseg + 1, K), -1, dtype=np.int32)
    F[0, J + start] = 0.0
    npow = 1
    while (1 << (npow - 1)) < K:
        npow += 1
    ST = np.empty((npow, K))
    for s in range(nseg):
        prev = F[s]
        c0 = s * n
        _build_sparse_max(prev, ST)
        cur = F[s + 1]
        ptr = P[s + 1]
        Ts = T[s]
        last = -1
        for bi in range(K):
            b = bi - J
            row = Ts[bi]
            best = NEG_INF
            arg = -1
            # warm start from the neighbour's argmax shifted by one
            if last >= 0:
                ai = last + 1
                if ai < K and prev[ai] > NEG_INF:
                    if -band <= ai - bi <= band:
                        w = row[band + ai - bi]
                    else:
                        w = _weight(B, J, n, den, c0, off, tie, dmax, pen, ai - J, b)
                    best = prev[ai] + w
                    arg = ai
            if prev[bi] > NEG_INF:
                v = prev[bi] + row[band]
                if v > best or (v == best and bi < arg):
                    best = v
                    arg = bi
            d = 1
            while bi - d >= 0:
                if _is_checkpoint(d) and _side_exhausted(ST, left, s, bi, d, -1, K, pen, best):
                    break
                ai = bi - d
                if prev[ai] > NEG_INF:
                    if d <= band:
                        w = row[band - d]
                    else:
                        w = _weight(B, J, n, den, c0, off, tie, dmax, pen, ai - J, b)
                    v = prev[ai] + w
                    if v > best or (v == best and ai < arg):
                        best = v
                        arg = ai
                d += 1
            d = 1
            while bi + d < K:
                if _is_checkpoint(d) and _side_exhausted(ST, right, s, bi, d, 1, K, pen, best):
                    break
                ai = bi + d
                if prev[ai] > NEG_INF:
                    if d <= band:
                        w = row[band + d]
                    else:
                        w = _weight(B, J, n, den, c0, off, tie, dmax, pen, ai - J, b)
                    v = prev[ai] + w
                    if v > best or (v == best and ai < arg):
                        best = v
                        arg = ai
                d += 1
            last = arg
            cur[bi] = best
            ptr[bi] = arg
    return F, P


@njit(cache=True)
def backtrack(P, J, end):
    nseg = P.shape[0] - 1
    out = np.empty(nseg + 1, dtype=np.int64)
    bi = J + end
    out[nseg] = end
    for s in range(nseg, 0, -1):
        bi = P[s, bi]
        out[s - 1] = bi - J
    return out


@njit(cache=True)
def weight_tables(B, J, m, seg, nseg, dy):
    """Full transition tables ``W[s, J + a, J + b]`` (small instances only)."""
    K = 2 * J + 1
    n = seg * m
    off, tie = snap_tables(seg, m, K)
    pen = penalties(dy, seg, K)
    W = np.empty((nseg, K, K))
    for s in range(nseg):
        for ai in range(K):
            for bi in range(K):
                W[s, ai, bi] = _weight(B, J, n, 2 * n, s * n, off, tie, K, pen, ai - J, bi - J)
    return W


@njit(cache=True)
def brute_force(W, J, y0, y1):
    """Exhaustive maximization over interior heights.

    The odometer runs with the last interior node as the most significant
    digit, so the first maximizer met is the lexicographically smallest when
    heights are read from the right end; ``>`` keeps it under ties.
    """
    nseg = W.shape[0]
    K = 2 * J + 1
    nint = nseg - 1
    digits = np.zeros(max(nint, 1), dtype=np.int64)
    best = NEG_INF
    best_digits = np.zeros(max(nint, 1), dtype=np.int64)
    total_count = 1
    for _ in range(nint):
        total_count *= K
    for _ in range(total_count):
        acc = 0.0
        prev = J + y0
        for s in range(nint):
            acc = acc + W[s, prev, digits[s]]
            prev = digits[s]
        acc = acc + W[nseg - 1, prev, J + y1]
        if acc > best:
            best = acc
            for s in range(nint):
                best_digits[s] = digits[s]
        # increment odometer, least significant digit = first interior node
        for s in range(nint):
            digits[s] += 1
            if digits[s] < K:
                break
            digits[s] = 0
    out = np.empty(nseg + 1, dtype=np.int64)
    out[0] = y0
    out[nseg] = y1
    for s in range(nint):
        out[s + 1] = best_digits[s] - J
    return best, out


@njit(cache=True)
def sweep(B, J, m, seg, nseg, dy, starts, ends, keep_profiles):
    """Forward passes from every start height, read out at every end height.

    Returns ``values[i, k]`` (best total from ``starts[i]`` to ``ends[k]``) and,
    if requested, the back-tracked argmax heights ``profiles[i, k, :]``.
    """
    off, tie, pen, left, right = prepare(B, J, m, seg, nseg, dy)
    n = seg * m
    K = 2 * J + 1
    ns = starts.shape[0]
    ne = ends.shape[0]
    # caching pays off once several passes share the field
    band = _sweep_band(K) if ns >= 4 else 0
    T = band_table(B, J, n, nseg, off, tie, K, pen, band)
    values = np.empty((ns, ne))
    if keep_profiles:
        profiles = np.empty((ns, ne, nseg + 1), dtype=np.int32)
    else:
        profiles = np.empty((0, 0, nseg + 1), dtype=np.int32)
    for i in range(ns):
        F, P = _forward(B, J, n, 2 * n, nseg, starts[i], off, tie, K, pen, left, right, T, band)
        for k in range(ne):
            values[i, k] = F[nseg, J + ends[k]]
            if keep_profiles:
                prof = backtrack(P, J, ends[k])
                for x in range(nseg + 1):
                    profiles[i, k, x] = prof[x]
    return values, profiles


@njit(cache=True)
def path_total(B, J, m, seg, dy, heights):
    """Objective of one chain of node heights, summed in DP order."""
    nseg = heights.shape[0] - 1
    n = seg * m
    K = 2 * J + 1
    off, tie = snap_tables(seg, m, K)
    pen = penalties(dy, seg, K)
    acc = 0.0
    for s in range(nseg):
        acc = acc + _weight(B, J, n, 2 * n, s * n, off, tie, K, pen, heights[s], heights[s + 1])
    return acc


@njit(cache=True)
def linear_totals(B, J, m, L, dy, starts, ends):
    """Objective of the straight profiles ``a_{y0, y1}`` over all pairs."""
    n = L * m
    K = 2 * J + 1
    off, tie = snap_tables(L, m, K)
    pen = penalties(dy, L, K)
    out = np.empty((starts.shape[0], ends.shape[0]))
    for i in range(starts.shape[0]):
        for k in range(ends.shape[0]):
            out[i, k] = _weight(B, J, n, 2 * n, 0, off, tie, K, pen, starts[i], ends[k])
    return out


@njit(cache=True)
def scale_energies(values, seg):
    """``D(h_rho)`` for ``rho = seg, 2 seg, ..., L`` of a node-value chain.

    ``values`` are heights (y-units) at multiples of ``seg``; the count of
    segments must be a power of two.  The last entry is the energy of the
    linear part.
    """
    nseg = values.shape[0] - 1
    nlev = 1
    while (1 << (nlev - 1)) < nseg:
        nlev += 1
    out = np.zeros(nlev)
    for k in range(nlev - 1):
        step = 1 << k
        rho = seg * step
        acc = 0.0
        # h_rho at odd multiples of rho is the deviation from the 2 rho chord
        for c in range(step, nseg, 2 * step):
            dev = values[c] - 0.5 * (values[c - step] + values[c + step])
            # each tent contributes two pieces of slope +-dev/rho
            acc += dev * dev / rho
        out[k] = acc
    d = values[nseg] - values[0]
    out[nlev - 1] = d * d / (2.0 * seg * nseg)
    return out


@njit(cache=True)
def sweep_summary(B, J, m, nseg, dy, starts, ends, mid_node):
    """Unit-segment sweep reduced to what a replica row needs.

    Returns the value table, the argmax height at ``mid_node`` for every
    pair, the max over pairs of each per-scale energy, and whether any
    argmax reached the last two grid heights of the window.
    """
    off, tie, pen, left, right = prepare(B, J, m, 1, nseg, dy)
    n = m
    K = 2 * J + 1
    ns = starts.shape[0]
    ne = ends.shape[0]
    # caching pays off once several passes share the field
    band = _sweep_band(K) if ns >= 4 else 0
    T = band_table(B, J, n, nseg, off, tie, K, pen, band)
    values = np.empty((ns, ne))
    mids = np.empty((ns, ne), dtype=np.int64)
    nlev = 1
    while (1 << (nlev - 1)) < nseg:
        nlev += 1
    emax = np.zeros(nlev)
    saturated = False
    hv = np.empty(nseg + 1)
    for i in range(ns):
        F, P = _forward(B, J, n, 2 * n, nseg, starts[i], off, tie, K, pen, left, right, T, band)
        for k in range(ne):
            values[i, k] = F[nseg, J + ends[k]]
            prof = backtrack(P, J, ends[k])
            mids[i, k] = prof[mid_node]
            for x in range(nseg + 1):
                if abs(prof[x]) >= J - 1:
                    saturated = True
                hv[x] = prof[x] * dy
            e = scale_energies(hv, 1)
            for q in range(nlev):
                if e[q] > emax[q]:
                    emax[q] = e[q]
    return values, mids, emax, saturated
