"""Arithmetic in GF(2^s) and discrete log/antilog tables.

The hash-based projection needs, per matrix cell, the last output bit of a
low-degree polynomial over GF(2^s).  Scalar reference arithmetic here works
for any s <= 63 on plain python ints.  For bulk evaluation the module builds
exp/log tables over a verified generator of the multiplicative group, which
turns c^e into a single table gather.  Tables are capped at s <= 26 (512 MB
would be needed at s = 28) and cached per field size.
"""

import numpy as np

from . import accel
from .accel import prange
from .errors import SizeGuardError

MAX_FIELD_BITS = 63
MAX_TABLE_BITS = 26

_IRREDUCIBLE_CACHE: dict[int, int] = {}
_TABLE_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}

# 16-bit parity lookup, shared by the numba kernels
_v = np.arange(65536, dtype=np.uint32)
_v ^= _v >> 8
_v ^= _v >> 4
_v ^= _v >> 2
_v ^= _v >> 1
PARITY16 = (_v & 1).astype(np.uint8)
del _v


def gf_mult(a: int, b: int, poly_full: int, s: int) -> int:
    """Product in GF(2^s), carry-less shift-and-add with reduction."""
    res = 0
    while b:
        if b & 1:
            res ^= a
        b >>= 1
        a <<= 1
        if (a >> s) & 1:
            a ^= poly_full
    return res


def gf_pow(a: int, e: int, poly_full: int, s: int) -> int:
    res, base = 1, a
    while e:
        if e & 1:
            res = gf_mult(res, base, poly_full, s)
        base = gf_mult(base, base, poly_full, s)
        e >>= 1
    return res


def parity(x: int) -> int:
    return bin(x).count("1") & 1


def _poly_gcd(u: int, v: int) -> int:
    # gcd of GF(2)[x] polynomials as bitmasks
    while v:
        while u and u.bit_length() >= v.bit_length():
            u ^= v << (u.bit_length() - v.bit_length())
        u, v = v, u
    return u


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _is_irreducible(f: int, s: int) -> bool:
    # Rabin's test: x^(2^s) = x mod f and gcd(f, x^(2^(s/q)) - x) = 1
    def x_pow_2e(e: int) -> int:
        r = 2
        for _ in range(e):
            r = gf_mult(r, r, f, s)
        return r

    if x_pow_2e(s) != 2:
        return False
    for q in _prime_factors(s):
        if _poly_gcd(f, x_pow_2e(s // q) ^ 2) != 1:
            return False
    return True


def irreducible_poly(s: int) -> int:
    """Smallest irreducible degree-s polynomial over GF(2), as a bitmask."""
    if not 1 <= s <= MAX_FIELD_BITS:
        raise SizeGuardError(f"field size 2^{s} outside supported range (1..{MAX_FIELD_BITS} bits)")
    if s == 1:
        return 0b11  # x + 1
    if s not in _IRREDUCIBLE_CACHE:
        for low in range(1, 1 << s, 2):
            f = (1 << s) | low
            if _is_irreducible(f, s):
                _IRREDUCIBLE_CACHE[s] = f
                break
    return _IRREDUCIBLE_CACHE[s]


def find_generator(s: int, poly_full: int) -> int:
    """Smallest field element generating the multiplicative group."""
    order = (1 << s) - 1
    factors = _prime_factors(order)
    g = 2
    while g < (1 << s):
        if all(gf_pow(g, order // q, poly_full, s) != 1 for q in factors):
            return g
        g += 1
    raise RuntimeError("no generator found (field construction broken)")


@accel.jit()
def _build_tables_njit(order, g, poly_full, s, exp, log):
    x = 1
    for i in range(order):
        exp[i] = x
        log[x] = i
        a = x
        res = 0
        b = g
        while b:
            if b & 1:
                res ^= a
            b >>= 1
            a <<= 1
            if (a >> s) & 1:
                a ^= poly_full
        x = res
    return x


def _vec_mult_const(arr: np.ndarray, c: int, poly_full: int, s: int) -> np.ndarray:
    # multiply a uint64 array of field elements by the constant c
    a = arr.copy()
    res = np.zeros_like(arr)
    pf = np.uint64(poly_full)
    one = np.uint64(1)
    sh = np.uint64(s - 1)
    while c:
        if c & 1:
            res ^= a
        c >>= 1
        top = (a >> sh) & one
        a = (a << one) ^ (top * pf)
    return res


def _build_tables_numpy(order: int, g: int, poly_full: int, s: int):
    exp = np.zeros(order, np.uint64)
    exp[0] = 1
    filled = 1
    while filled < order:
        step = min(filled, order - filled)
        c = gf_mult(int(exp[filled - 1]), g, poly_full, s)
        exp[filled : filled + step] = _vec_mult_const(exp[:step], c, poly_full, s)
        filled += step
    log = np.zeros(1 << s, np.uint32)
    log[exp] = np.arange(order, dtype=np.uint32)
    return exp.astype(np.uint32), log


def field_tables(s: int, backend: str | None = None):
    """(exp, log) tables for GF(2^s); exp[i] = g^i, log[g^i] = i.

    exp has 2^s - 1 entries, log has 2^s (log[0] is unused).
    """
    if s > MAX_TABLE_BITS:
        raise SizeGuardError(
            f"log/exp tables need 2^{s} entries, above the 2^{MAX_TABLE_BITS} table guard"
        )
    if s in _TABLE_CACHE:
        return _TABLE_CACHE[s]
    poly_full = irreducible_poly(s)
    g = find_generator(s, poly_full)
    order = (1 << s) - 1
    if accel.resolve_backend(backend) == "numba":
        exp = np.zeros(order, np.uint32)
        log = np.zeros(1 << s, np.uint32)
        back = _build_tables_njit(order, g, poly_full, s, exp, log)
        if back != 1:
            raise RuntimeError("generator walk did not close (field construction broken)")
    else:
        exp, log = _build_tables_numpy(order, g, poly_full, s)
    _TABLE_CACHE[s] = (exp, log)
    return exp, log


# ---------------------------------------------------------------------------
# bulk last-bit evaluation of p(c) over consecutive cells c = 0 .. T*d-1
#
# lastbit(p(c)) = const ^ XOR_i parity(mask_i & c^i).  Squaring is linear in
# GF(2^s), so every even exponent folds onto an odd one; only odd powers of c
# are needed and those come from the exp/log tables.
# ---------------------------------------------------------------------------


def coefficient_masks(coeffs: list[int], poly_full: int, s: int):
    """Fold a polynomial into (const_bit, odd exponents, parity masks).

    coeffs[i] is the coefficient of x^i.  Returns masks m_e, for odd e, with
    lastbit(p(c)) = const ^ XOR_e parity(m_e & c^e) for every c != 0.
    """
    sq_basis = [gf_mult(1 << j, 1 << j, poly_full, s) for j in range(s)]

    def linear_mask(c: int) -> int:
        # mask m with parity(m & u) = lastbit(c * u)
        m = 0
        for j in range(s):
            m |= (gf_mult(c, 1 << j, poly_full, s) & 1) << j
        return m

    def fold(mask: int) -> int:
        # parity(mask & u^2) = parity(fold(mask) & u)
        out = 0
        for j in range(s):
            out |= parity(mask & sq_basis[j]) << j
        return out

    const_bit = 0
    odd_masks: dict[int, int] = {}
    for i, c in enumerate(coeffs):
        if c == 0:
            continue
        if i == 0:
            const_bit ^= c & 1
            continue
        mask, e = linear_mask(c), i
        while e % 2 == 0:
            mask = fold(mask)
            e //= 2
        odd_masks[e] = odd_masks.get(e, 0) ^ mask
    exps = sorted(e for e, m in odd_masks.items() if m != 0)
    if 1 not in exps:
        exps = [1] + exps  # kernel expects exponent 1 in slot 0, mask may be 0
    masks = [odd_masks.get(e, 0) for e in exps]
    return const_bit, np.asarray(exps, np.int64), np.asarray(masks, np.int64)


def poly_lastbit_reference(coeffs: list[int], c: int, poly_full: int, s: int) -> int:
    """Horner evaluation of p(c), last bit only.  Slow scalar oracle."""
    acc = 0
    for cf in reversed(coeffs):
        acc = gf_mult(acc, c, poly_full, s) ^ cf
    return acc & 1


@accel.jit(parallel=True)
def _hash_bits_njit(n_cells, logt, expt, order, odd_e, odd_m, const_bit, ptab, bits):
    nodd = odd_e.shape[0]
    block = 65536
    nblocks = (n_cells + block - 1) // block
    for bi in prange(nblocks):
        lo = bi * block
        hi = min(lo + block, n_cells)
        for c in range(lo, hi):
            b = const_bit
            if c > 0:
                u = odd_m[0] & c
                b ^= np.int64(
                    ptab[u & 0xFFFF] ^ ptab[(u >> 16) & 0xFFFF] ^ ptab[(u >> 32) & 0xFFFF]
                )
                lc = np.int64(logt[c])
                for q in range(1, nodd):
                    e = (odd_e[q] * lc) % order
                    u = np.int64(expt[e]) & odd_m[q]
                    b ^= np.int64(
                        ptab[u & 0xFFFF] ^ ptab[(u >> 16) & 0xFFFF] ^ ptab[(u >> 32) & 0xFFFF]
                    )
            bits[c] = b


def _hash_bits_numpy(n_cells, logt, expt, order, odd_e, odd_m, const_bit):
    c = np.arange(n_cells, dtype=np.int64)
    b = np.full(n_cells, const_bit, np.uint8)
    u = (odd_m[0] & c).astype(np.uint64)
    b ^= (np.bitwise_count(u) & 1).astype(np.uint8)
    lc = logt[c].astype(np.int64)
    for q in range(1, len(odd_e)):
        e = (odd_e[q] * lc) % order
        u = np.uint64(odd_m[q]) & expt[e].astype(np.uint64)
        b ^= (np.bitwise_count(u) & 1).astype(np.uint8)
    if n_cells > 0:
        b[0] = const_bit  # powers of 0 vanish; only the constant term remains
    return b


def hash_bits(coeffs: list[int], s: int, n_cells: int, backend: str | None = None) -> np.ndarray:
    """Last output bit of p(c) for c = 0..n_cells-1, as a uint8 array."""
    poly_full = irreducible_poly(s)
    if n_cells > (1 << s):
        raise SizeGuardError("cell range exceeds field size")
    which = accel.resolve_backend(backend)
    exp, log = field_tables(s, backend=which)
    const_bit, odd_e, odd_m = coefficient_masks(coeffs, poly_full, s)
    order = (1 << s) - 1
    if which == "numba":
        bits = np.empty(n_cells, np.uint8)
        _hash_bits_njit(n_cells, log, exp, order, odd_e, odd_m, const_bit, PARITY16, bits)
        return bits
    return _hash_bits_numpy(n_cells, log, exp, order, odd_e, odd_m, const_bit)
