"""Compiled tableau kernel with symbolic (affine F2) measurement signs.

Row-major Aaronson-Gottesman tableau on a purified pure state: rows
``0..n-1`` are destabilizers, ``n..2n-1`` stabilizers, each a packed uint64
bit-vector for x and z.  Only stabilizer signs are tracked.  A sign is an
affine form over the record: bit 0 is the constant, bit ``j + 1`` is the
outcome of measurement ``j``.  A random measurement introduces its own bit
as a fresh variable, so the form of a deterministic outcome expresses it as
an affine function of earlier random outcomes.  With ``V == 0`` sign words
the kernel only classifies measurements as random or deterministic.
"""
from __future__ import annotations

import numpy as np
from numba import njit

GATE2, MEASURE, ERASE, GATE1 = 0, 1, 2, 3


@njit(cache=True, inline="always")
def _popcount(v):
    v = v - ((v >> np.uint64(1)) & np.uint64(0x5555555555555555))
    v = (v & np.uint64(0x3333333333333333)) + ((v >> np.uint64(2)) & np.uint64(0x3333333333333333))
    v = (v + (v >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return int((v * np.uint64(0x0101010101010101)) >> np.uint64(56))


@njit(cache=True)
def _product_phase(x1, z1, x2, z2, W):
    # exponent of i picked up by P1 * P2 (Y-based convention), mod 4
    acc = 0
    for w in range(W):
        a = x1[w]; b = z1[w]; c = x2[w]; d = z2[w]
        y1 = a & b; y2 = c & d
        ox1 = a & ~b; oz1 = b & ~a
        ox2 = c & ~d; oz2 = d & ~c
        plus = (ox1 & y2) | (y1 & oz2) | (oz1 & ox2)
        minus = (ox1 & oz2) | (y1 & ox2) | (oz1 & y2)
        acc += _popcount(plus) - _popcount(minus)
    return acc & 3


@njit(cache=True)
def _get(row, q):
    return (row[q >> 6] >> np.uint64(q & 63)) & np.uint64(1)


@njit(cache=True)
def _put(row, q, bit):
    w = q >> 6
    s = np.uint64(q & 63)
    row[w] = (row[w] & ~(np.uint64(1) << s)) | (np.uint64(bit) << s)


@njit(cache=True)
def _apply2(X, Z, S, n, V, a, b, g, out_tab, sign_tab):
    for r in range(2 * n):
        pat = (_get(X[r], a) | (_get(Z[r], a) << np.uint64(1))
               | (_get(X[r], b) << np.uint64(2)) | (_get(Z[r], b) << np.uint64(3)))
        if pat == 0:
            continue
        new = np.uint64(out_tab[g, pat])
        _put(X[r], a, new & np.uint64(1))
        _put(Z[r], a, (new >> np.uint64(1)) & np.uint64(1))
        _put(X[r], b, (new >> np.uint64(2)) & np.uint64(1))
        _put(Z[r], b, (new >> np.uint64(3)) & np.uint64(1))
        if V > 0 and r >= n and sign_tab[g, pat]:
            S[r, 0] ^= np.uint64(1)


@njit(cache=True)
def _apply1(X, Z, S, n, V, a, g, out_tab, sign_tab):
    for r in range(2 * n):
        pat = _get(X[r], a) | (_get(Z[r], a) << np.uint64(1))
        if pat == 0:
            continue
        new = np.uint64(out_tab[g, pat])
        _put(X[r], a, new & np.uint64(1))
        _put(Z[r], a, (new >> np.uint64(1)) & np.uint64(1))
        if V > 0 and r >= n and sign_tab[g, pat]:
            S[r, 0] ^= np.uint64(1)


@njit(cache=True)
def _swap_cols(X, Z, n, a, b):
    for r in range(2 * n):
        xa = _get(X[r], a); xb = _get(X[r], b)
        za = _get(Z[r], a); zb = _get(Z[r], b)
        _put(X[r], a, xb); _put(X[r], b, xa)
        _put(Z[r], a, zb); _put(Z[r], b, za)


@njit(cache=True)
def _rowmul(X, Z, S, h, i, W, V, with_sign):
    # row h <- row h * row i
    if with_sign and V > 0:
        ph = _product_phase(X[h], Z[h], X[i], Z[i], W)
        for v in range(V):
            S[h, v] ^= S[i, v]
        if ph == 2:
            S[h, 0] ^= np.uint64(1)
    for w in range(W):
        X[h, w] ^= X[i, w]
        Z[h, w] ^= Z[i, w]


@njit(cache=True)
def run_tableau(X, Z, S, n, kind, q0, q1, gate, out2, sign2, out1, sign1, forms, is_random):
    """Run the event list in place; fill ``forms`` and ``is_random`` per measurement.

    ``X, Z`` have shape (2n + 1, W); the final row is scratch space.  ``S``
    has shape (2n + 1, V) and may have ``V == 0``.  For ERASE events ``q1``
    holds the ancilla qubit the erased qubit is swapped with.
    """
    W = X.shape[1]
    V = S.shape[1]
    scratch = 2 * n
    j = 0
    for e in range(kind.shape[0]):
        k = kind[e]
        if k == GATE2:
            _apply2(X, Z, S, n, V, q0[e], q1[e], gate[e], out2, sign2)
        elif k == GATE1:
            _apply1(X, Z, S, n, V, q0[e], gate[e], out1, sign1)
        elif k == ERASE:
            _swap_cols(X, Z, n, q0[e], q1[e])
        else:
            q = q0[e]
            p = -1
            for r in range(n, 2 * n):
                if _get(X[r], q):
                    p = r
                    break
            if p >= 0:
                for r in range(2 * n):
                    if r != p and _get(X[r], q):
                        _rowmul(X, Z, S, r, p, W, V, r >= n)
                for w in range(W):
                    X[p - n, w] = X[p, w]
                    Z[p - n, w] = Z[p, w]
                    X[p, w] = 0
                    Z[p, w] = 0
                _put(Z[p], q, 1)
                if V > 0:
                    for v in range(V):
                        S[p, v] = 0
                        forms[j, v] = 0
                    bit = j + 1
                    S[p, bit >> 6] |= np.uint64(1) << np.uint64(bit & 63)
                    forms[j, bit >> 6] |= np.uint64(1) << np.uint64(bit & 63)
                is_random[j] = 1
            else:
                for w in range(W):
                    X[scratch, w] = 0
                    Z[scratch, w] = 0
                for v in range(V):
                    S[scratch, v] = 0
                for r in range(n):
                    if _get(X[r], q):
                        _rowmul(X, Z, S, scratch, r + n, W, V, True)
                for v in range(V):
                    forms[j, v] = S[scratch, v]
                is_random[j] = 0
            j += 1
    return j


@njit(cache=True)
def count_random(X, Z, n, kind, q0, q1, gate, out2, sign2, out1, sign1, n_meas):
    S = np.zeros((X.shape[0], 0), dtype=np.uint64)
    forms = np.zeros((max(n_meas, 1), 0), dtype=np.uint64)
    is_random = np.zeros(max(n_meas, 1), dtype=np.uint8)
    run_tableau(X, Z, S, n, kind, q0, q1, gate, out2, sign2, out1, sign1, forms, is_random)
    return int(is_random[:n_meas].sum())


@njit(cache=True)
def count_random_columns(Xc, Zc, n, kind, q0, q1, gate, basis2, basis1):
    """Sign-free random-branch count on a column-major stabilizer block.

    ``Xc[q]`` / ``Zc[q]`` hold qubit ``q``'s x / z bits over the ``n``
    stabilizer rows.  ``basis2[g, j]`` is the output pattern of input
    pattern ``1 << j`` (the linear part of the gate's Pauli action).
    """
    R = Xc.shape[1]
    total = 0
    c = np.zeros((4, R), dtype=np.uint64)
    mask = np.zeros(R, dtype=np.uint64)
    for e in range(kind.shape[0]):
        k = kind[e]
        if k == GATE2 or k == GATE1:
            a = q0[e]
            b = q1[e]
            g = gate[e]
            nb = 4 if k == GATE2 else 2
            for w in range(R):
                c[0, w] = Xc[a, w]
                c[1, w] = Zc[a, w]
                if nb == 4:
                    c[2, w] = Xc[b, w]
                    c[3, w] = Zc[b, w]
            for i in range(nb):
                for w in range(R):
                    acc = np.uint64(0)
                    for jj in range(nb):
                        img = basis2[g, jj] if nb == 4 else basis1[g, jj]
                        if (img >> i) & 1:
                            acc ^= c[jj, w]
                    if i == 0:
                        Xc[a, w] = acc
                    elif i == 1:
                        Zc[a, w] = acc
                    elif i == 2:
                        Xc[b, w] = acc
                    else:
                        Zc[b, w] = acc
        elif k == ERASE:
            a = q0[e]
            b = q1[e]
            for w in range(R):
                t = Xc[a, w]; Xc[a, w] = Xc[b, w]; Xc[b, w] = t
                t = Zc[a, w]; Zc[a, w] = Zc[b, w]; Zc[b, w] = t
        else:
            q = q0[e]
            p = -1
            for w in range(R):
                v = Xc[q, w]
                if v:
                    low = 0
                    while not (v >> np.uint64(low)) & np.uint64(1):
                        low += 1
                    p = 64 * w + low
                    break
            if p < 0:
                continue
            total += 1
            pw = p >> 6
            pb = np.uint64(1) << np.uint64(p & 63)
            for w in range(R):
                mask[w] = Xc[q, w]
            mask[pw] &= ~pb
            for col in range(n):
                if Xc[col, pw] & pb:
                    for w in range(R):
                        Xc[col, w] ^= mask[w]
                    Xc[col, pw] &= ~pb
                if Zc[col, pw] & pb:
                    for w in range(R):
                        Zc[col, w] ^= mask[w]
                    Zc[col, pw] &= ~pb
            Zc[q, pw] |= pb
    return total
