"""Prior-free bounded-communication signaling for subspace valuations.

The signal for a unit good omega is a seeded description of an implicit
T x d random +-1/sqrt(T) projection matrix (r-wise independent entries from
a low-degree polynomial hash over GF(2^s)) together with the projected and
fixed-point-discretized vector.  Receivers project their own basis vectors
with the same matrix and estimate 1 - dist(omega, subspace) from inner
products in the sketch space.  No prior over valuations is involved; the
guarantee is over the hash seed.
"""

import math
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import accel, gf2
from .accel import prange
from .bitio import BitReader, BitWriter
from .errors import MalformedSignal, SizeGuardError, ValidationError

T_CONSTANT = 131072.0  # k^2 log(3n/eps) / eps^4 multiplier from the JL bound
HEADER_BYTES = 11      # 8-byte seed + 2-byte degree + 1-byte field_bits
VALUE_RANGE = 2.0      # projected coordinates clamped to [-2, 2]


def check_unit_item(omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 1:
        raise ValidationError("omega must be a vector")
    if abs(float(np.linalg.norm(omega)) - 1.0) > 1e-9:
        raise ValidationError("omega must have l2 norm 1")
    return omega


@dataclass(frozen=True, eq=False)
class SubspaceValuation:
    """A buyer's ideal subspace, spanned by an orthonormal basis (l, d)."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.basis, dtype=float))
        object.__setattr__(self, "basis", b)
        gram = b @ b.T
        if not np.allclose(gram, np.eye(b.shape[0]), atol=1e-8):
            raise ValidationError("basis is not orthonormal to 1e-8")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def d(self) -> int:
        return self.basis.shape[1]


def orthonormalize(vectors) -> SubspaceValuation:
    """Gram-Schmidt with a 1e-9 residual-norm drop threshold."""
    vecs = np.atleast_2d(np.asarray(vectors, dtype=float))
    basis: list[np.ndarray] = []
    for v in vecs:
        w = v.copy()
        for b in basis:
            w -= (w @ b) * b
        norm = float(np.linalg.norm(w))
        if norm > 1e-9:
            basis.append(w / norm)
    if not basis:
        raise ValidationError("all vectors are (numerically) zero; empty basis")
    return SubspaceValuation(np.stack(basis))


def subspace_value(omega, val: SubspaceValuation) -> float:
    """v(omega) = 1 - dist(omega, span(basis)), clamped inside the root."""
    omega = check_unit_item(omega)
    if omega.shape[0] != val.d:
        raise ValidationError("dimension mismatch")
    proj = val.basis @ omega
    return 1.0 - math.sqrt(max(0.0, 1.0 - float(proj @ proj)))


@dataclass(frozen=True, eq=False)
class RWiseHash:
    """Implicit T x d sign matrix from a polynomial over GF(2^s).

    The polynomial has `degree + 1` coefficients derived from the seed; the
    entry at (row, col) is +1/sqrt(T) when the last output bit at point
    row*d + col is 0, else -1/sqrt(T).
    """

    seed: int
    degree: int
    field_bits: int
    T: int
    d: int
    _bits_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @cached_property
    def coefficients(self) -> tuple[int, ...]:
        rng = np.random.default_rng(np.uint64(self.seed))
        high = 1 << self.field_bits
        coeffs = rng.integers(0, high, size=self.degree + 1, dtype=np.uint64)
        return tuple(int(c) for c in coeffs)

    @property
    def poly(self) -> int:
        return gf2.irreducible_poly(self.field_bits)

    def bit(self, row: int, col: int) -> int:
        """Single-cell hash bit via the scalar reference path."""
        if not (0 <= row < self.T and 0 <= col < self.d):
            raise ValidationError("cell out of range")
        point = row * self.d + col
        return gf2.poly_lastbit_reference(list(self.coefficients), point,
                                          self.poly, self.field_bits)

    def entry(self, row: int, col: int) -> float:
        return (1.0 - 2.0 * self.bit(row, col)) / math.sqrt(self.T)

    def bits(self, backend: str | None = None) -> np.ndarray:
        """All T*d hash bits; cached packed after the first computation."""
        if "packed" in self._bits_cache:
            return np.unpackbits(self._bits_cache["packed"], count=self.T * self.d)
        out = gf2.hash_bits(list(self.coefficients), self.field_bits,
                            self.T * self.d, backend=backend)
        self._bits_cache["packed"] = np.packbits(out)
        return out


def make_rwise_hash(seed: int, r: int, T: int, d: int) -> RWiseHash:
    """Hash for r-wise independent entries: polynomial of degree r - 1.

    Field size: smallest s with 2^s >= T*d; above 63 bits is rejected.
    """
    if r < 1 or T < 1 or d < 1:
        raise ValidationError("need r >= 1 and T*d >= 1")
    s = max(1, int(T * d - 1).bit_length())
    if s > gf2.MAX_FIELD_BITS:
        raise SizeGuardError(
            f"T*d = {T * d} needs a field of 2^{s} > 2^{gf2.MAX_FIELD_BITS} elements"
        )
    return RWiseHash(seed=int(seed) & (2**64 - 1), degree=r - 1, field_bits=s, T=T, d=d)


@accel.jit(parallel=True)
def _matvec_bits_njit(bits, vecs, out):
    B, d = vecs.shape
    T = out.shape[1]
    for t in prange(T):
        base = t * d
        for v in range(B):
            acc = 0.0
            row = vecs[v]
            for col in range(d):
                if bits[base + col]:
                    acc -= row[col]
                else:
                    acc += row[col]
            out[v, t] = acc


def _matvec_bits_numpy(bits, vecs, out):
    T = out.shape[1]
    d = vecs.shape[1]
    signs = 1.0 - 2.0 * bits.reshape(T, d)
    out[:] = vecs @ signs.T


def project_vectors(h: RWiseHash, vecs: np.ndarray,
                    backend: str | None = None) -> np.ndarray:
    """Rows of vecs (B, d) through the implicit matrix: returns (B, T)."""
    vecs = np.ascontiguousarray(np.atleast_2d(vecs), dtype=float)
    if vecs.shape[1] != h.d:
        raise ValidationError("dimension mismatch")
    which = accel.resolve_backend(backend)
    bits = h.bits(backend=which)
    out = np.empty((vecs.shape[0], h.T))
    if which == "numba":
        _matvec_bits_njit(bits, vecs, out)
    else:
        _matvec_bits_numpy(bits, vecs, out)
    return out / math.sqrt(h.T)


def num_rows(k: int, eps: float, n: int, t_scale: float = 1.0) -> int:
    """T = ceil(t_scale * 131072 k^2 ln(3n/eps) / eps^4)."""
    _check_jl_params(k, eps, n, t_scale)
    return math.ceil(t_scale * T_CONSTANT * k * k * math.log(3 * n / eps) / eps**4)


def independence_degree(k: int, eps: float, n: int) -> int:
    """r = ceil(2 ln(3nk/eps))."""
    return max(1, math.ceil(2 * math.log(3 * n * k / eps)))


def fraction_bits(d: int, eps: float) -> int:
    """Fixed-point fractional bits: ceil(log2(3d/eps))."""
    return math.ceil(math.log2(3 * d / eps))


def _value_bits(d: int, eps: float) -> int:
    # sign + 2 integer bits (range [-2, 2]) + fractional bits
    return 3 + fraction_bits(d, eps)


def jl_bit_length(k: int, eps: float, n: int, d: int, t_scale: float = 1.0) -> int:
    """Declared total signal length in bits (header + payload)."""
    return 8 * HEADER_BYTES + num_rows(k, eps, n, t_scale) * _value_bits(d, eps)


def _check_jl_params(k: int, eps: float, n: int, t_scale: float) -> None:
    if not 0.0 < eps < 0.5:
        raise ValidationError(f"eps must be in (0, 1/2), got {eps}")
    if k < 1 or n < 1:
        raise ValidationError("k and n must be >= 1")
    if t_scale <= 0:
        raise ValidationError("t_scale must be positive")


@dataclass(frozen=True, eq=False)
class JLSignal:
    """Hash description plus the discretized projected vector."""

    hash: RWiseHash
    projected: np.ndarray  # (T,) values on the fixed-point grid
    eps: float
    k: int
    n: int
    t_scale: float

    @property
    def T(self) -> int:
        return self.hash.T

    @property
    def d(self) -> int:
        return self.hash.d

    @property
    def bit_length(self) -> int:
        return jl_bit_length(self.k, self.eps, self.n, self.d, self.t_scale)


def _discretize(values: np.ndarray, d: int, eps: float) -> np.ndarray:
    scale = float(1 << fraction_bits(d, eps))
    top = VALUE_RANGE * scale
    codes = np.clip(np.round(values * scale), -top, top)  # round half to even
    return codes / scale


def jl_signal(omega, k: int, eps: float, n: int, seed: int,
              t_scale: float = 1.0, backend: str | None = None) -> JLSignal:
    """Compute the signal for a realized good.

    t_scale shrinks the paper-sized row count T for desk-scale runs; the
    construction is unchanged and accuracy is then checked empirically.
    """
    omega = check_unit_item(omega)
    d = omega.shape[0]
    T = num_rows(k, eps, n, t_scale)
    r = independence_degree(k, eps, n)
    h = make_rwise_hash(seed, r, T, d)
    what = project_vectors(h, omega, backend=backend)[0]
    return JLSignal(hash=h, projected=_discretize(what, d, eps),
                    eps=eps, k=k, n=n, t_scale=t_scale)


def estimate_value_from_signal(signal: JLSignal, val: SubspaceValuation,
                               backend: str | None = None) -> float:
    """Receiver-side value estimate from the signal alone.

    Projects the basis with the signal's hash and evaluates the distance
    formula on sketched inner products; deterministic given the signal.
    """
    if val.d != signal.d:
        raise ValidationError("dimension mismatch")
    proj = project_vectors(signal.hash, val.basis, backend=backend)  # (l, T)
    dots = proj @ signal.projected
    return 1.0 - math.sqrt(max(0.0, 1.0 - float(dots @ dots)))


# ---------------------------------------------------------------------------
# wire format: 8-byte seed, 2-byte degree, 1-byte field_bits, then T
# fixed-point values (sign + 2 integer + F fractional bits) packed LSB-first
# ---------------------------------------------------------------------------


def encode_jl(signal: JLSignal) -> bytes:
    h = signal.hash
    header = struct.pack("<QHB", h.seed & (2**64 - 1), h.degree, h.field_bits)
    F = fraction_bits(signal.d, signal.eps)
    vb = _value_bits(signal.d, signal.eps)
    scale = 1 << F
    w = BitWriter()
    for v in signal.projected:
        code = int(round(v * scale))
        sign = 1 if code < 0 else 0
        w.write((sign << (vb - 1)) | abs(code), vb)
    return header + w.to_bytes()


def decode_jl(data: bytes, d: int, eps: float, k: int, n: int,
              t_scale: float = 1.0) -> JLSignal:
    """Rebuild a signal from bytes plus the public scheme parameters."""
    if len(data) < HEADER_BYTES:
        raise MalformedSignal("signal shorter than its header")
    seed, degree, field_bits = struct.unpack("<QHB", data[:HEADER_BYTES])
    T = num_rows(k, eps, n, t_scale)
    r = independence_degree(k, eps, n)
    h = make_rwise_hash(seed, r, T, d)
    if h.degree != degree or h.field_bits != field_bits:
        raise MalformedSignal(
            f"header (degree={degree}, s={field_bits}) inconsistent with "
            f"parameters (degree={h.degree}, s={h.field_bits})"
        )
    F = fraction_bits(d, eps)
    vb = _value_bits(d, eps)
    if 8 * (len(data) - HEADER_BYTES) < T * vb:
        raise MalformedSignal("signal payload truncated")
    rd = BitReader(data[HEADER_BYTES:])
    scale = float(1 << F)
    vals = np.empty(T)
    for i in range(T):
        word = rd.read(vb)
        sign = word >> (vb - 1)
        mag = word & ((1 << (vb - 1)) - 1)
        vals[i] = (-mag if sign else mag) / scale
    return JLSignal(hash=h, projected=vals, eps=eps, k=k, n=n, t_scale=t_scale)
