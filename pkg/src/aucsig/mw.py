"""Bounded-communication signaling for inner-product valuations.

A realized good on the l1 simplex is "learned" against a public list of
valuation vectors with the multiplicative-weights update rule, and the
signal is just the sequence of (vector index, sign) updates: anyone holding
the public vectors replays the updates to recover the hypothesis.  The
known-valuations variant scans all vectors until none is violated; the
Bayesian variant makes a single pass over i.i.d. prior samples and stops
after a long enough quiet run.  Both use update factor eps/4 and natural
logarithms in all bounds.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import accel
from .bitio import BitReader, BitWriter
from .errors import MalformedSignal, ValidationError

UPDATE_FACTOR = 0.25  # multiplier on eps in the update rule


def max_updates(d: int, eps: float) -> int:
    """Regret-bound cap on update count: ceil(16 ln d / eps^2)."""
    return math.ceil(16.0 * math.log(d) / eps**2)


def sample_complexity(n: int, d: int, eps: float, delta: float) -> int:
    """Samples needed for the Bayesian guarantee, natural logs, ceiling."""
    _check_params(eps, delta, d, n)
    u = 16.0 * math.log(d) / eps**2
    return math.ceil(2 * n * u * (math.log(u) + math.log(2 * n / delta)) / delta)


def halt_threshold(n: int, d: int, eps: float, delta: float) -> float:
    """Quiet-run length that triggers the Bayesian halt."""
    u = 16.0 * math.log(d) / eps**2
    return 2 * n * (math.log(u) + math.log(2 * n / delta)) / delta


def _check_params(eps: float, delta: float | None = None, d: int | None = None,
                  n: int | None = None) -> None:
    if not 0.0 < eps < 1.0:
        raise ValidationError(f"eps must be in (0, 1), got {eps}")
    if delta is not None and not 0.0 < delta < 1.0:
        raise ValidationError(f"delta must be in (0, 1), got {delta}")
    if d is not None and d < 2:
        raise ValidationError("dimension d must be >= 2")
    if n is not None and n < 1:
        raise ValidationError("n must be >= 1")


def check_geo_item(omega: np.ndarray) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 1:
        raise ValidationError("omega must be a vector")
    if (omega < -1e-12).any() or abs(float(omega.sum()) - 1.0) > 1e-9:
        raise ValidationError("omega must be nonnegative with l1 norm 1")
    return omega


def check_valuations(z: np.ndarray) -> np.ndarray:
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if np.abs(z).max(initial=0.0) > 1.0 + 1e-12:
        raise ValidationError("valuation vectors must have l-inf norm <= 1")
    return z


@dataclass(frozen=True)
class MWSignal:
    """Ordered update list plus the parameters needed to decode it."""

    updates: tuple[tuple[int, int], ...]  # (vector index, sign)
    eps: float
    m: int   # number of public vectors updates may reference
    d: int
    halted: bool = True                 # Bayesian: quiet-run threshold reached
    enough_samples: bool | None = None  # Bayesian: m >= sample_complexity

    @property
    def T(self) -> int:
        return len(self.updates)


def _apply_update(what: np.ndarray, z: np.ndarray, sign: int, eps: float) -> np.ndarray:
    out = what * (1.0 - sign * (UPDATE_FACTOR * eps) * z)
    return out / out.sum()


def reconstruct(signal: MWSignal, vectors) -> np.ndarray:
    """Replay a signal's updates from the uniform start.

    `vectors` is anything indexable by update index: the (m, d) array of
    public vectors, or a mapping holding just the referenced rows.
    """
    what = np.full(signal.d, 1.0 / signal.d)
    for idx, sign in signal.updates:
        try:
            z = np.asarray(vectors[idx], dtype=float)
        except (IndexError, KeyError):
            raise MalformedSignal(f"update references unknown vector {idx}") from None
        if z.shape != (signal.d,):
            raise MalformedSignal(f"vector {idx} has wrong dimension")
        what = _apply_update(what, z, sign, signal.eps)
    return what


def mw_signal_known(omega, valuations, eps: float) -> MWSignal:
    """Signal for known valuations: update until no vector is violated.

    Scans the vectors in index order and always updates on the lowest
    violating index, making the signal deterministic.  On return the
    reconstructed hypothesis satisfies |<z_i, omega> - <z_i, what>| < eps/2
    for every i.
    """
    _check_params(eps)
    omega = check_geo_item(omega)
    Z = check_valuations(valuations)
    d = omega.shape[0]
    cap = max_updates(d, eps)
    targets = Z @ omega
    what = np.full(d, 1.0 / d)
    updates: list[tuple[int, int]] = []
    while True:
        approx = Z @ what
        viol = np.abs(targets - approx) >= eps / 2
        if not viol.any():
            break
        i = int(np.argmax(viol))
        if len(updates) >= cap:
            raise AssertionError(
                f"update count exceeded the regret bound {cap}; inputs violate preconditions"
            )
        sign = 1 if approx[i] > targets[i] else -1
        what = _apply_update(what, Z[i], sign, eps)
        updates.append((i, sign))
    return MWSignal(tuple(updates), eps=eps, m=Z.shape[0], d=d)


@accel.jit()
def _scan_chunk_njit(chunk, omega, what, half_eps, factor, r, quiet, t, cap,
                     upd_idx, upd_sign, base):
    rows, d = chunk.shape
    for row in range(rows):
        a = 0.0
        b = 0.0
        for j in range(d):
            a += chunk[row, j] * omega[j]
            b += chunk[row, j] * what[j]
        if abs(a - b) >= half_eps:
            if t >= cap:
                return row + 1, quiet, t, 2
            sgn = 1 if b > a else -1
            ssum = 0.0
            for j in range(d):
                what[j] *= 1.0 - sgn * factor * chunk[row, j]
                ssum += what[j]
            for j in range(d):
                what[j] /= ssum
            upd_idx[t] = base + row
            upd_sign[t] = sgn
            t += 1
            quiet = 0
        else:
            quiet += 1
            if quiet >= r:
                return row + 1, quiet, t, 1
    return rows, quiet, t, 0


def _scan_chunk_numpy(chunk, omega, what, half_eps, factor, r, quiet, t, cap,
                      upd_idx, upd_sign, base):
    rows = chunk.shape[0]
    start = 0
    targets = chunk @ omega
    while start < rows:
        approx = chunk[start:] @ what
        gaps = np.abs(targets[start:] - approx) >= half_eps
        hits = np.flatnonzero(gaps)
        if hits.size == 0:
            run = rows - start
            if quiet + run >= r:
                stop = start + (r - quiet)
                return stop, r, t, 1
            return rows, quiet + run, t, 0
        hit = int(hits[0])
        run = hit  # quiet rows before the violation
        if quiet + run >= r:
            stop = start + (r - quiet)
            return stop, r, t, 1
        if t >= cap:
            return start + hit + 1, 0, t, 2
        row = start + hit
        sgn = 1 if approx[hit] > targets[row] else -1
        np.multiply(what, 1.0 - sgn * factor * chunk[row], out=what)
        what /= what.sum()
        upd_idx[t] = base + row
        upd_sign[t] = sgn
        t += 1
        quiet = 0
        start = row + 1
    return rows, quiet, t, 0


def _iter_chunks(samples):
    if isinstance(samples, np.ndarray):
        yield np.atleast_2d(samples)
        return
    for chunk in samples:
        yield np.atleast_2d(np.asarray(chunk, dtype=float))


def mw_signal_bayes(omega, samples, eps: float, delta: float, n: int,
                    m_total: int | None = None,
                    backend: str | None = None) -> MWSignal:
    """Single-pass signal over i.i.d. prior samples with a quiet-run halt.

    `samples` is an (m, d) array or an iterable of 2-D chunks, consumed
    lazily (the sample-complexity m at realistic parameters is too large to
    materialize).  The signal is emitted either at the halt threshold or at
    the end of the pass; `halted` records which.  A sample count below
    sample_complexity() only flags the result, the guarantee just lapses.
    """
    _check_params(eps, delta, n=n)
    omega = check_geo_item(omega)
    d = omega.shape[0]
    if d < 2:
        raise ValidationError("dimension d must be >= 2")
    cap = max_updates(d, eps)
    r = math.ceil(halt_threshold(n, d, eps, delta))
    what = np.full(d, 1.0 / d)
    upd_idx = np.zeros(cap, np.int64)
    upd_sign = np.zeros(cap, np.int64)
    quiet, t, status, base = 0, 0, 0, 0
    scan = _scan_chunk_njit if accel.resolve_backend(backend) == "numba" else _scan_chunk_numpy
    for chunk in _iter_chunks(samples):
        chunk = np.ascontiguousarray(chunk, dtype=float)
        if chunk.shape[1] != d:
            raise ValidationError("sample chunk has wrong dimension")
        check_valuations(chunk)
        consumed, quiet, t, status = scan(
            chunk, omega, what, eps / 2, UPDATE_FACTOR * eps, r, quiet, t, cap,
            upd_idx, upd_sign, base,
        )
        base += consumed
        if status == 2:
            raise AssertionError(
                f"update count exceeded the regret bound {cap}; inputs violate preconditions"
            )
        if status == 1:
            break
    updates = tuple((int(upd_idx[i]), int(upd_sign[i])) for i in range(t))
    if m_total is None and isinstance(samples, np.ndarray):
        m_total = samples.shape[0]
    enough = None if m_total is None else m_total >= sample_complexity(n, d, eps, delta)
    # with an open-ended stream the consumed prefix acts as the index space
    return MWSignal(updates, eps=eps, m=base if m_total is None else m_total, d=d,
                    halted=status == 1, enough_samples=enough)


# ---------------------------------------------------------------------------
# codec: ceil(log2 m) + 1 bits per update, with a length prefix
# ---------------------------------------------------------------------------


def _index_bits(m: int) -> int:
    return max(0, math.ceil(math.log2(m))) if m > 1 else 0


def _prefix_bits(d: int, eps: float) -> int:
    return max(1, math.ceil(math.log2(max_updates(d, eps) + 1)))


def mw_bit_budget(d: int, eps: float, m: int) -> int:
    """Worst-case payload bits b = ceil(16 ln d / eps^2) * (ceil(log2 m) + 1)."""
    return max_updates(d, eps) * (_index_bits(m) + 1)


def encode_mw(signal: MWSignal) -> bytes:
    """Pack a signal: T in the length prefix, then (index, sign) fields."""
    w = BitWriter()
    cap = max_updates(signal.d, signal.eps)
    if signal.T > cap:
        raise ValidationError("signal has more updates than the regret bound allows")
    w.write(signal.T, _prefix_bits(signal.d, signal.eps))
    ib = _index_bits(signal.m)
    for idx, sign in signal.updates:
        if not 0 <= idx < signal.m:
            raise ValidationError(f"update index {idx} out of range")
        w.write(idx, ib)
        w.write(1 if sign > 0 else 0, 1)
    return w.to_bytes()


def mw_bit_length(signal: MWSignal) -> int:
    return _prefix_bits(signal.d, signal.eps) + signal.T * (_index_bits(signal.m) + 1)


def decode_mw(data: bytes, m: int, d: int, eps: float) -> MWSignal:
    """Inverse of encode_mw given the public parameters."""
    rd = BitReader(data)
    T = rd.read(_prefix_bits(d, eps))
    if T > max_updates(d, eps):
        raise MalformedSignal("length prefix exceeds the update bound")
    ib = _index_bits(m)
    updates = []
    for _ in range(T):
        idx = rd.read(ib)
        sign = 1 if rd.read(1) else -1
        if idx >= m:
            raise MalformedSignal(f"decoded index {idx} out of range")
        updates.append((idx, sign))
    return MWSignal(tuple(updates), eps=eps, m=m, d=d)


# ---------------------------------------------------------------------------
# welfare guarantee report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GuaranteeRow:
    trial: int
    omega_id: int
    T: int
    bits: int
    welfare: float
    opt: float

    @property
    def gap(self) -> float:
        return self.opt - self.welfare


@dataclass(frozen=True)
class GuaranteeReport:
    rows: tuple[GuaranteeRow, ...]
    eps: float
    delta: float | None = None
    failure_rate: float | None = None  # Bayesian accuracy-event failures

    @property
    def max_gap(self) -> float:
        return max((r.gap for r in self.rows), default=0.0)

    @property
    def mean_welfare(self) -> float:
        return float(np.mean([r.welfare for r in self.rows])) if self.rows else 0.0

    @property
    def mean_opt(self) -> float:
        return float(np.mean([r.opt for r in self.rows])) if self.rows else 0.0


def mw_guarantee_check_known(omegas, valuations, eps: float) -> GuaranteeReport:
    """Pointwise welfare check for known valuations.

    For each realized omega, all bidders bid their value for the
    reconstructed hypothesis; the realized welfare max_i <v_i, what> must
    be within eps of max_i <v_i, omega>.
    """
    Z = check_valuations(valuations)
    rows = []
    for oid, omega in enumerate(np.atleast_2d(np.asarray(omegas, dtype=float))):
        sig = mw_signal_known(omega, Z, eps)
        what = reconstruct(sig, Z)
        rows.append(GuaranteeRow(
            trial=oid,
            omega_id=oid,
            T=sig.T,
            bits=mw_bit_length(sig),
            welfare=float((Z @ what).max()),
            opt=float((Z @ omega).max()),
        ))
    return GuaranteeReport(tuple(rows), eps=eps)


def mw_guarantee_check_bayes(omega, prior_sampler, eps: float, delta: float, n: int,
                             trials: int = 1000, seed: int = 0,
                             chunk_size: int = 8192,
                             backend: str | None = None) -> GuaranteeReport:
    """Bayesian check: signal from sampled vectors, then fresh-draw accuracy.

    prior_sampler(rng, size) must return (size, d) i.i.d. valuation draws.
    The report carries the empirical rate of |<v, omega> - <v, what>| >
    eps/2 over fresh draws, and per-trial welfare rows against n fresh
    bidders each.
    """
    omega = check_geo_item(omega)
    d = omega.shape[0]
    m = sample_complexity(n, d, eps, delta)
    rng = np.random.default_rng(seed)

    def stream():
        remaining = m
        while remaining > 0:
            take = min(chunk_size, remaining)
            yield prior_sampler(rng, take)
            remaining -= take

    sig = mw_signal_bayes(omega, stream(), eps, delta, n, m_total=m, backend=backend)
    # collect the referenced sample rows by replaying the generator
    rng = np.random.default_rng(seed)
    needed = sorted(set(idx for idx, _ in sig.updates))
    ref: dict[int, np.ndarray] = {}
    pos = 0
    if needed:
        for chunk in stream():
            hi = pos + chunk.shape[0]
            for idx in needed:
                if pos <= idx < hi:
                    ref[idx] = chunk[idx - pos]
            pos = hi
            if pos > needed[-1]:
                break
    what = reconstruct(sig, ref)
    eval_rng = np.random.default_rng(seed + 1)
    fresh = prior_sampler(eval_rng, trials)
    gaps = np.abs(fresh @ omega - fresh @ what)
    failure_rate = float((gaps > eps / 2).mean())
    rows = []
    bits = mw_bit_length(sig)
    for trial in range(trials // max(1, n)):
        vs = fresh[trial * n : (trial + 1) * n]
        if vs.shape[0] < n:
            break
        rows.append(GuaranteeRow(
            trial=trial,
            omega_id=0,
            T=sig.T,
            bits=bits,
            welfare=float((vs @ what).max()),
            opt=float((vs @ omega).max()),
        ))
    return GuaranteeReport(tuple(rows), eps=eps, delta=delta, failure_rate=failure_rate)
