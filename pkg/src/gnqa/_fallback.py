"""Pure numpy implementations of the compiled kernels.

The 2**n enumerations split the variables into a low block (a bits) and a
high block (b bits) so that every polynomial term factors into a low-block
monomial times a high-block monomial. The full value table is then

    D[hi, lo] = E_hi[hi] + E_lo[lo] + B[hi, :] @ C @ A[lo, :].T

where only the mixed terms go through the (BLAS) matrix product. The flat
index hi * 2**a + lo matches the little-endian bit convention.
"""

import numpy as np


def sym_coupling_matvec(n, qi, qj, qv, w):
    w = np.asarray(w, dtype=np.float64)
    out = np.bincount(qi, weights=qv * w[qj], minlength=n)
    out += np.bincount(qj, weights=qv * w[qi], minlength=n)
    return out


def _bit_table(nbits, spin):
    idx = np.arange(1 << nbits, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(nbits, dtype=np.int64)) & 1).astype(np.float64)
    return 1.0 - 2.0 * bits if spin else bits


def _monomial(table, idx):
    if not idx:
        return np.ones(table.shape[0])
    return np.prod(table[:, list(idx)], axis=1)


def poly_values(n, terms, spin):
    """Evaluate sum_t c_t prod_{i in S_t} g(bit_i) on every basis index.

    ``terms`` is an iterable of ``(indices, coefficient)``. With ``spin`` the
    factor is g(b) = 1 - 2b, otherwise g(b) = b.
    """
    if n == 0:
        return np.array([float(sum(c for _, c in terms))])
    a = max(1, n // 2)
    b = n - a
    g_lo = _bit_table(a, spin)
    g_hi = _bit_table(b, spin)
    e_lo = np.zeros(1 << a)
    e_hi = np.zeros(1 << b)
    const = 0.0
    lo_keys, hi_keys, mixed = {}, {}, []
    for idx, c in terms:
        lo = tuple(i for i in idx if i < a)
        hi = tuple(i - a for i in idx if i >= a)
        if not lo and not hi:
            const += c
        elif not hi:
            e_lo += c * _monomial(g_lo, lo)
        elif not lo:
            e_hi += c * _monomial(g_hi, hi)
        else:
            col = lo_keys.setdefault(lo, len(lo_keys))
            row = hi_keys.setdefault(hi, len(hi_keys))
            mixed.append((row, col, c))
    if mixed:
        A = np.column_stack([_monomial(g_lo, k) for k in lo_keys])
        B = np.column_stack([_monomial(g_hi, k) for k in hi_keys])
        C = np.zeros((len(hi_keys), len(lo_keys)))
        for row, col, c in mixed:
            C[row, col] += c
        D = B @ (C @ A.T)
    else:
        D = np.zeros((1 << b, 1 << a))
    D += e_hi[:, None]
    D += e_lo[None, :]
    if const:
        D += const
    return D.ravel()


def spin_diagonal(n, h, qi, qj, qv, block_bits=12):
    terms = [((k,), float(h[k])) for k in range(n) if h[k] != 0.0]
    terms += [((int(i), int(j)), float(v)) for i, j, v in zip(qi, qj, qv)]
    return poly_values(n, terms, spin=True)


def binary_values(n, lin, qi, qj, qv, block_bits=12):
    terms = [((k,), float(lin[k])) for k in range(n) if lin[k] != 0.0]
    terms += [((int(i), int(j)), float(v)) for i, j, v in zip(qi, qj, qv)]
    return poly_values(n, terms, spin=False)
