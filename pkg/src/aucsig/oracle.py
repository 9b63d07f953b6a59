"""Exact brute-force optimization over deterministic signaling maps.

The oracle enumerates every edge-valid map using at most k distinct
signals, in lexicographic order over per-item admissible signal lists, and
keeps the best under the requested objective.  It is the ground truth for
every approximation test in the suite, so it is never sampled or pruned;
a hard size guard rejects instances beyond the configured budget.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import accel, core
from .core import Instance, Prior, Scheme
from .errors import SizeGuardError, ValidationError

DEFAULT_BUDGET = 10_000_000

_WELFARE, _REVENUE = 0, 1


@dataclass(frozen=True)
class OracleResult:
    objective: str
    value: float
    scheme: Scheme
    enumerated: int


def _allowed_lists(inst: Instance) -> list[np.ndarray]:
    return [np.flatnonzero(inst.allowed[j]).astype(np.int64) for j in range(inst.m)]


def _enumeration_size(inst: Instance) -> int:
    size = 1
    for j in range(inst.m):
        size *= int(inst.allowed[j].sum())
    return size


def _check_budget(inst: Instance, budget: int) -> int:
    size = _enumeration_size(inst)
    if size > budget:
        raise SizeGuardError(
            f"enumeration of {size} maps exceeds the budget of {budget}"
        )
    return size


def enumerate_valid_maps(inst: Instance, budget: int = DEFAULT_BUDGET):
    """Yield every valid deterministic map exactly once.

    Validity: (j, f(j)) in E for all items and at most k distinct signals.
    Maps come out in lexicographic order of the admissible-signal lists.
    """
    _check_budget(inst, budget)
    lists = _allowed_lists(inst)
    k = inst.k
    for combo in product(*lists):
        if len(set(combo)) <= k:
            yield np.array(combo, dtype=np.int64)


@accel.jit()
def _search_njit(allowed_flat, offsets, k, S, vhat, q, objective, out_map):
    m = offsets.shape[0] - 1
    t = vhat.shape[0]
    n = vhat.shape[1]
    idx = np.zeros(m, np.int64)
    f = np.empty(m, np.int64)
    for j in range(m):
        f[j] = allowed_flat[offsets[j]]
    acc = np.empty((S, n))
    used = np.empty(S, np.bool_)
    best = -1.0
    count = 0
    while True:
        # distinct-signal filter
        used[:] = False
        distinct = 0
        for j in range(m):
            s = f[j]
            if not used[s]:
                used[s] = True
                distinct += 1
        if distinct <= k:
            count += 1
            value = 0.0
            for l in range(t):
                for j in range(m):
                    s = f[j]
                    if used[s]:
                        for i in range(n):
                            acc[s, i] = 0.0
                        used[s] = False
                for j in range(m):
                    s = f[j]
                    for i in range(n):
                        acc[s, i] += vhat[l, i, j]
                    used[s] = True
                part = 0.0
                for s in range(S):
                    if used[s]:
                        top = 0.0
                        second = 0.0
                        for i in range(n):
                            v = acc[s, i]
                            if v > top:
                                second = top
                                top = v
                            elif v > second:
                                second = v
                        if objective == 0:
                            part += top
                        else:
                            part += second if n >= 2 else 0.0
                value += q[l] * part
            if value > best:
                best = value
                for j in range(m):
                    out_map[j] = f[j]
        # odometer increment, last item fastest
        pos = m - 1
        while pos >= 0:
            idx[pos] += 1
            lo = offsets[pos]
            if idx[pos] < offsets[pos + 1] - lo:
                f[pos] = allowed_flat[lo + idx[pos]]
                break
            idx[pos] = 0
            f[pos] = allowed_flat[lo]
            pos -= 1
        if pos < 0:
            return best, count


def _search_numpy(lists, k, S, vhat, q, objective, chunk=65536):
    m = len(lists)
    sizes = np.array([len(a) for a in lists], dtype=np.int64)
    total = int(np.prod(sizes))
    radix = np.ones(m, dtype=np.int64)
    for j in range(m - 2, -1, -1):
        radix[j] = radix[j + 1] * sizes[j + 1]
    best = -1.0
    best_map = None
    count = 0
    t, n = vhat.shape[0], vhat.shape[1]
    for lo in range(0, total, chunk):
        codes = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        digits = (codes[:, None] // radix) % sizes  # (B, m)
        fmat = np.empty_like(digits)
        for j in range(m):
            fmat[:, j] = lists[j][digits[:, j]]
        srt = np.sort(fmat, axis=1)
        distinct = 1 + (np.diff(srt, axis=1) > 0).sum(axis=1)
        keep = distinct <= k
        if not keep.any():
            continue
        fmat = fmat[keep]
        B = fmat.shape[0]
        count += B
        onehot = fmat[:, :, None] == np.arange(S)  # (B, m, S)
        bundles = np.einsum("bms,lim->blis", onehot, vhat)  # (B, t, n, S)
        if objective == _WELFARE:
            per = bundles.max(axis=2)
        else:
            if n >= 2:
                per = np.partition(bundles, -2, axis=2)[:, :, -2, :]
            else:
                per = np.zeros((B, t, S))
        vals = (per.sum(axis=2) * q).sum(axis=1)  # (B,)
        arg = int(np.argmax(vals))
        if vals[arg] > best:
            best = float(vals[arg])
            best_map = fmat[arg].copy()
    return best, best_map, count


def _optimize(inst: Instance, prior: Prior | None, objective: int, budget: int,
              exclude: int | None = None, backend: str | None = None):
    _check_budget(inst, budget)
    pr = core._as_prior(inst, prior)
    vhat = pr.values * inst.p  # (t, n, m)
    if exclude is not None:
        if not 0 <= exclude < inst.n:
            raise ValidationError(f"excluded player {exclude} out of range")
        keep = [i for i in range(inst.n) if i != exclude]
        vhat = vhat[:, keep, :]
        if vhat.shape[1] == 0:
            vhat = np.zeros((pr.t, 1, inst.m))  # welfare of nobody is 0
    lists = _allowed_lists(inst)
    which = accel.resolve_backend(backend)
    if which == "numba":
        flat = np.concatenate(lists)
        offsets = np.zeros(inst.m + 1, dtype=np.int64)
        np.cumsum([len(a) for a in lists], out=offsets[1:])
        out_map = np.empty(inst.m, dtype=np.int64)
        best, count = _search_njit(
            flat, offsets, inst.k, inst.num_signals,
            np.ascontiguousarray(vhat), pr.probs, objective, out_map,
        )
        best_map = out_map
    else:
        best, best_map, count = _search_numpy(
            lists, inst.k, inst.num_signals, vhat, pr.probs, objective
        )
    if best_map is None:
        raise ValidationError("no valid deterministic map exists")
    return float(best), Scheme.deterministic(best_map), int(count)


def opt_welfare(inst: Instance, prior: Prior | None = None, *,
                budget: int = DEFAULT_BUDGET, exclude: int | None = None,
                backend: str | None = None) -> OracleResult:
    """Welfare-maximal deterministic scheme by exhaustive search.

    With ``exclude`` set, maximizes welfare over the remaining players
    (the bound used to cap revenue).  Ties go to the first map in
    enumeration order.
    """
    value, scheme, count = _optimize(inst, prior, _WELFARE, budget, exclude, backend)
    return OracleResult("welfare", value, scheme, count)


def opt_revenue_det(inst: Instance, prior: Prior | None = None, *,
                    budget: int = DEFAULT_BUDGET,
                    backend: str | None = None) -> OracleResult:
    """Revenue-maximal deterministic scheme by exhaustive search."""
    value, scheme, count = _optimize(inst, prior, _REVENUE, budget, None, backend)
    return OracleResult("revenue", value, scheme, count)
